//! Seeded, figure-by-figure Monte Carlo jobs that emit CSV tables.
//!
//! Every trial draws from its own generator derived from the master seed, a
//! per-curve stream name and the trial index, and results are merged in
//! trial order, so output bytes do not depend on the worker count.

mod config;
mod engine;
mod figures;
mod table;

pub use config::{parse_list, parse_pairs, DrmChoice, FigureId, ScenarioConfig, CDF_TRIALS, OUTAGE_TRIALS};
pub use engine::{
    run_trials, with_workers, workers_from_env, ChannelModel, LinkSample, LinkScenario, MultiCellScenario,
    Placement, PortChannel, WORKERS_ENV,
};
pub use figures::{fig2, fig3, fig4, fig5, fig6, fig8, fig9, MAX_SPLIT_BRANCHES};
pub use table::{sci, CsvTable, RunOutput};

use crate::error::Result;

/// Validates `config` and runs its figure on the configured worker pool.
pub fn run(config: &ScenarioConfig) -> Result<RunOutput> {
    config.validate()?;
    engine::with_workers(config.workers, || figures::dispatch(config))?
}

/// One line of the figure catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureInfo {
    pub id: FigureId,
    pub description: &'static str,
    /// Default parameters as `key = value` lines.
    pub parameters: String,
    pub default_trials: usize,
    /// Rough single-core wall time at the default trial count.
    pub runtime_estimate: &'static str,
    pub outputs: &'static [&'static str],
}

pub fn list_figures() -> Vec<FigureInfo> {
    FigureId::ALL
        .into_iter()
        .map(|id| {
            let (description, runtime_estimate, outputs): (&str, &str, &[&str]) = match id {
                FigureId::Fig2 => (
                    "SNR CDF at the cell edge for the Meng, DFT and random DRMs (|r| = 0.9)",
                    "3.5 min",
                    &["fig2_cdf.csv", "fig2_summary.csv"],
                ),
                FigureId::Fig3 => (
                    "SNR CDF and outage rate with baseline vs optimized pilot power (IID)",
                    "5 s",
                    &["fig3_cdf.csv", "fig3_summary.csv"],
                ),
                FigureId::Fig4a => ("outage rate vs M for every code, IID fading", "20 s", &["fig4a.csv"]),
                FigureId::Fig4b => (
                    "outage rate vs M for every code, exponential correlation |r| = 0.9",
                    "7.5 min",
                    &["fig4b.csv"],
                ),
                FigureId::Fig5 => ("outage rate vs number of coded coherence intervals L", "2 min", &["fig5.csv"]),
                FigureId::Fig6 => (
                    "fewest coherence intervals needed for an N_b-bit message",
                    "2 min",
                    &["fig6.csv", "fig6_rates.csv"],
                ),
                FigureId::Fig8 => (
                    "total bits over tau_c channel uses split across L intervals",
                    "2.5 min",
                    &["fig8.csv"],
                ),
                FigureId::Fig9 => (
                    "19-cell outage rates for pilot reuse 1, 3, 4 and the hexagonal single cell",
                    "11 min",
                    &["fig9.csv"],
                ),
            };
            let defaults = ScenarioConfig::defaults(id);
            FigureInfo {
                id,
                description,
                parameters: defaults.to_text(),
                default_trials: defaults.trial_count(),
                runtime_estimate,
                outputs,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::CodeId;
    use crate::error::Error;

    fn small(figure: FigureId) -> ScenarioConfig {
        let mut c = ScenarioConfig::defaults(figure);
        c.trials = Some(1000);
        c
    }

    #[test]
    fn catalog_lists_all_figures() {
        let list = list_figures();
        assert_eq!(list.len(), 8);
        assert!(list.iter().all(|f| !f.runtime_estimate.is_empty() && !f.outputs.is_empty()));
        assert!("fig1".parse::<FigureId>().is_err());
    }

    #[test]
    fn zero_trials_is_an_error() {
        let mut c = small(FigureId::Fig4a);
        c.trials = Some(0);
        assert!(matches!(run(&c), Err(Error::Config(_))));
    }

    #[test]
    fn output_is_deterministic_across_workers() {
        let mut c = small(FigureId::Fig4b);
        c.antennas = vec![24];
        c.codes = vec![CodeId::C2, CodeId::C4];
        c.workers = Some(1);
        let a = run(&c).unwrap();
        c.workers = Some(3);
        let b = run(&c).unwrap();
        let text = a.tables[0].to_csv_string().unwrap();
        assert_eq!(text, b.tables[0].to_csv_string().unwrap());
        assert_eq!(a.tables[0].rows.len(), 2);
        c.seed += 1;
        assert_ne!(run(&c).unwrap().tables[0].to_csv_string().unwrap(), text);
    }

    #[test]
    fn dft_divisibility_is_rejected() {
        let mut c = small(FigureId::Fig4b);
        c.drm = DrmChoice::Dft;
        c.antennas = vec![24];
        c.codes = vec![CodeId::C8];
        assert!(run(&c).is_err());
        c.codes = vec![CodeId::C4];
        assert!(run(&c).is_ok());
    }

    #[test]
    fn every_figure_runs_small() {
        for f in FigureId::ALL {
            let mut c = small(f);
            c.antennas.truncate(1);
            match f {
                FigureId::Fig2 => {
                    c.codes.truncate(1);
                    c.drm_realizations = 2;
                }
                FigureId::Fig5 | FigureId::Fig6 => {
                    c.codes = vec![CodeId::C1, CodeId::C4];
                    c.intervals = (1..=3).collect();
                    c.message_bits = vec![0.0, 40.0, 1e6];
                }
                FigureId::Fig8 => {
                    c.codes = vec![CodeId::C2];
                    c.intervals = vec![1, 2];
                }
                FigureId::Fig9 => {
                    c.codes = vec![CodeId::C2];
                    c.trials = Some(1000);
                }
                _ => c.codes = vec![CodeId::C1, CodeId::C2],
            }
            let out = run(&c).unwrap_or_else(|e| panic!("{f}: {e}"));
            for t in &out.tables {
                assert!(!t.rows.is_empty(), "{f}: {} empty", t.name);
                let j = t.column("n_trials").expect("n_trials column");
                assert!(t.rows.iter().all(|r| r[j] == "1000"));
                assert!(t.header.iter().any(|h| h.starts_with("ci_halfwidth")), "{}", t.name);
            }
        }
    }
}
