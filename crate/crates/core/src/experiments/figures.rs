//! One runner per figure. Every runner returns finished CSV tables.

use crate::channel::UserGeometry;
use crate::codes::{make_code, CodeId, OstbcCode};
use crate::drm::{drm_dft, drm_dft_rounded, drm_meng, drm_rand, Drm, DrmKind};
use crate::error::{Error, Result};
use crate::multicell::build_grid;
use crate::optimizer::{beta_percentile, optimize_pilot_power_traced, EnergyBudget, PilotPowers};
use crate::outage::{
    min_intervals_for_message, order_statistic_halfwidth, outage_result, quantile_rank, split_budget,
    supported_rate, OutageResult,
};
use crate::rng::{stream_tag, trial_rng};

use super::config::{DrmChoice, FigureId, ScenarioConfig};
use super::engine::{run_trials, ChannelModel, LinkScenario, MultiCellScenario, Placement, PortChannel};
use super::table::{sci, CsvTable, RunOutput};

/// Split-coherence rows stop at this many diversity branches `L n_t`.
pub const MAX_SPLIT_BRANCHES: usize = 48;

/// Points of the emitted CDF curves, log-spaced in probability.
const CDF_POINTS: usize = 81;
const CDF_MIN_PROB: f64 = 1e-4;

fn geometry(cfg: &ScenarioConfig, hexagon: bool) -> UserGeometry {
    let base = if hexagon { UserGeometry::hexagon() } else { UserGeometry::disk() };
    UserGeometry { cell_edge_snr_db: cfg.cell_edge_snr_db, ..base }
}

/// Optimized or baseline powers for pilots of length `tau_p` inside an
/// interval of `coherence` uses.
fn powers_for(
    code: &OstbcCode,
    cfg: &ScenarioConfig,
    optimize: bool,
    tau_p: usize,
    coherence: f64,
    beta_eps: f64,
) -> Result<PilotPowers> {
    if optimize {
        let budget = EnergyBudget::new(coherence);
        Ok(optimize_pilot_power_traced(code, &budget, tau_p, cfg.epsilon, beta_eps)?.0)
    } else {
        Ok(PilotPowers::baseline(tau_p))
    }
}

fn build_drm(choice: DrmChoice, m: usize, n_t: usize, seed: u64, realization: u64) -> Result<Drm> {
    match choice {
        DrmChoice::Meng => drm_meng(m, n_t),
        DrmChoice::Dft => drm_dft(m, n_t),
        DrmChoice::Rand => {
            let mut rng = trial_rng(seed, stream_tag(&format!("drm/rand/{m}/{n_t}")), realization);
            drm_rand(m, n_t, &mut rng)
        }
    }
}

fn drm_kind_name(kind: DrmKind) -> &'static str {
    match kind {
        DrmKind::Meng { .. } => "meng",
        DrmKind::Random => "rand",
        DrmKind::Dft => "dft",
        DrmKind::DftRounded => "dft-rounded",
    }
}

fn rate_samples(snrs: &[f64], code_rate: f64) -> Result<Vec<f64>> {
    snrs.iter().map(|s| supported_rate(&[*s], code_rate)).collect()
}

fn outage(samples: &[f64], cfg: &ScenarioConfig, tau_p: usize) -> Result<OutageResult> {
    outage_result(samples, cfg.epsilon, cfg.coherence as f64, tau_p as f64)
}

fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Empirical CDF of `snr` in dB at fixed probabilities, with the bootstrap
/// half-width of each quantile.
fn cdf_points(snr: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut db: Vec<f64> = snr.iter().map(|&s| to_db(s)).collect();
    db.sort_by(f64::total_cmp);
    let n = db.len();
    (0..CDF_POINTS)
        .map(|k| {
            let p = CDF_MIN_PROB.powf(1.0 - k as f64 / (CDF_POINTS - 1) as f64);
            let rank = quantile_rank(n, p);
            (p, db[rank - 1], order_statistic_halfwidth(&db, rank))
        })
        .collect()
}

/// ε-quantile of `snr` in dB and its half-width.
fn snr_quantile_db(snr: &[f64], eps: f64) -> (f64, f64) {
    let mut db: Vec<f64> = snr.iter().map(|&s| to_db(s)).collect();
    db.sort_by(f64::total_cmp);
    let rank = quantile_rank(db.len(), eps);
    (db[rank - 1], order_statistic_halfwidth(&db, rank))
}

fn single_cell_snrs(s: &LinkScenario, cfg: &ScenarioConfig, stream: &str) -> Result<Vec<f64>> {
    run_trials(cfg.trial_count(), cfg.seed, stream_tag(stream), |r| s.trial(r).map(|x| x.snr_ostbc))
}

/// SNR CDFs of the three DRM choices at the cell edge.
pub fn fig2(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let geo = geometry(cfg, false);
    let beta_eps = beta_percentile(&geo, cfg.epsilon)?;
    let n = cfg.trial_count();
    let mut cdf = CsvTable::new(
        "fig2_cdf.csv",
        &["M", "code", "drm", "drm_kind", "realization", "cdf", "snr_db", "ci_halfwidth_db", "n_trials"],
    );
    let mut summary = CsvTable::new(
        "fig2_summary.csv",
        &["M", "code", "drm", "drm_kind", "realization", "role", "eps", "snr_eps_db", "ci_halfwidth_db", "n_trials"],
    );
    for (&m, &id) in cfg.antennas.iter().zip(&cfg.codes) {
        let code = make_code(id);
        let powers = powers_for(&code, cfg, cfg.optimize_pilots, code.n_t, cfg.coherence as f64, beta_eps)?;
        let mut drms = vec![("meng", 0, drm_meng(m, code.n_t)?)];
        let dft = match drm_dft(m, code.n_t) {
            Ok(d) => d,
            Err(_) => drm_dft_rounded(m, code.n_t)?,
        };
        drms.push(("dft", 0, dft));
        for r in 1..=cfg.drm_realizations {
            drms.push(("rand", r, build_drm(DrmChoice::Rand, m, code.n_t, cfg.seed, r as u64)?));
        }
        // All DRMs see the same users and fading draws.
        let stream = format!("fig2/{m}/{id}");
        let mut rows = Vec::new();
        for (name, real, drm) in drms {
            let ch = PortChannel::new(drm.matrix, ChannelModel::from_magnitude(cfg.correlation))?;
            let s = LinkScenario::new(code.clone(), ch, geo, Placement::CellEdge, powers)?;
            let snr = single_cell_snrs(&s, cfg, &stream)?;
            let kind = drm_kind_name(drm.kind);
            for (p, v, hw) in cdf_points(&snr) {
                cdf.push(vec![
                    m.to_string(),
                    id.to_string(),
                    name.into(),
                    kind.into(),
                    real.to_string(),
                    sci(p),
                    sci(v),
                    sci(hw),
                    n.to_string(),
                ]);
            }
            let (q, hw) = snr_quantile_db(&snr, cfg.epsilon);
            rows.push((name, kind, real, q, hw));
        }
        let rand_q: Vec<f64> = rows.iter().filter(|r| r.0 == "rand").map(|r| r.3).collect();
        let best = rand_q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let worst = rand_q.iter().copied().fold(f64::INFINITY, f64::min);
        for (name, kind, real, q, hw) in rows {
            let role = match name {
                "rand" if q == best => "best",
                "rand" if q == worst => "worst",
                _ => "",
            };
            summary.push(vec![
                m.to_string(),
                id.to_string(),
                name.into(),
                kind.into(),
                real.to_string(),
                role.into(),
                sci(cfg.epsilon),
                sci(q),
                sci(hw),
                n.to_string(),
            ]);
        }
    }
    Ok(RunOutput { tables: vec![cdf, summary] })
}

/// SNR CDFs and outage rates with baseline and optimized pilot powers.
pub fn fig3(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let geo = geometry(cfg, false);
    let beta_eps = beta_percentile(&geo, cfg.epsilon)?;
    let n = cfg.trial_count();
    let mut cdf = CsvTable::new(
        "fig3_cdf.csv",
        &["M", "code", "pilots", "rho_p", "rho_d", "cdf", "snr_db", "ci_halfwidth_db", "n_trials"],
    );
    let mut summary = CsvTable::new(
        "fig3_summary.csv",
        &["M", "code", "pilots", "rho_p", "rho_d", "R_eps", "ci_halfwidth", "n_trials"],
    );
    for &m in &cfg.antennas {
        for &id in &cfg.codes {
            let code = make_code(id);
            let drm = build_drm(cfg.drm, m, code.n_t, cfg.seed, 0)?;
            let stream = format!("fig3/{m}/{id}");
            for (label, opt) in [("baseline", false), ("optimized", true)] {
                let powers = powers_for(&code, cfg, opt, code.n_t, cfg.coherence as f64, beta_eps)?;
                let ch = PortChannel::new(drm.matrix.clone(), ChannelModel::from_magnitude(cfg.correlation))?;
                let s = LinkScenario::new(code.clone(), ch, geo, Placement::Uniform, powers)?;
                let snr = single_cell_snrs(&s, cfg, &stream)?;
                let head = [m.to_string(), id.to_string(), label.to_string(), sci(powers.rho_p), sci(powers.rho_d)];
                for (p, v, hw) in cdf_points(&snr) {
                    let mut row = head.to_vec();
                    row.extend([sci(p), sci(v), sci(hw), n.to_string()]);
                    cdf.push(row);
                }
                let res = outage(&rate_samples(&snr, code.code_rate())?, cfg, code.n_t)?;
                let mut row = head.to_vec();
                row.extend([sci(res.rate), sci(res.half_width), n.to_string()]);
                summary.push(row);
            }
        }
    }
    Ok(RunOutput { tables: vec![cdf, summary] })
}

/// Outage rates of every code against the array size.
pub fn fig4(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let geo = geometry(cfg, false);
    let beta_eps = beta_percentile(&geo, cfg.epsilon)?;
    let n = cfg.trial_count();
    let mut t = CsvTable::new(
        format!("{}.csv", cfg.figure),
        &[
            "M",
            "code",
            "n_t",
            "tau_p",
            "rho_p",
            "rho_d",
            "R_eps",
            "ci_halfwidth",
            "R_eps_general",
            "ci_halfwidth_general",
            "n_trials",
        ],
    );
    for &m in &cfg.antennas {
        for &id in &cfg.codes {
            let code = make_code(id);
            let powers = powers_for(&code, cfg, cfg.optimize_pilots, code.n_t, cfg.coherence as f64, beta_eps)?;
            let drm = build_drm(cfg.drm, m, code.n_t, cfg.seed, 0)?;
            let ch = PortChannel::new(drm.matrix, ChannelModel::from_magnitude(cfg.correlation))?;
            let s = LinkScenario::new(code.clone(), ch, geo, Placement::Uniform, powers)?;
            let samples = run_trials(n, cfg.seed, stream_tag(&format!("{}/{m}/{id}", cfg.figure)), |r| s.trial(r))?;
            let ost: Vec<f64> = samples.iter().map(|x| x.snr_ostbc).collect();
            let gen: Vec<f64> = samples.iter().map(|x| x.snr_general).collect();
            let a = outage(&rate_samples(&ost, code.code_rate())?, cfg, code.n_t)?;
            let b = outage(&rate_samples(&gen, 1.0)?, cfg, code.n_t)?;
            t.push(vec![
                m.to_string(),
                id.to_string(),
                code.n_t.to_string(),
                code.n_t.to_string(),
                sci(powers.rho_p),
                sci(powers.rho_d),
                sci(a.rate),
                sci(a.half_width),
                sci(b.rate),
                sci(b.half_width),
                n.to_string(),
            ]);
        }
    }
    Ok(RunOutput { tables: vec![t] })
}

/// Outage rate per code for every requested number of coded intervals.
/// Each user keeps its position; fading is redrawn per interval.
fn multi_interval_rates(cfg: &ScenarioConfig) -> Result<Vec<(CodeId, Vec<(usize, OutageResult)>)>> {
    let geo = geometry(cfg, false);
    let beta_eps = beta_percentile(&geo, cfg.epsilon)?;
    let m = cfg.antennas[0];
    let mut wanted = cfg.intervals.clone();
    wanted.sort_unstable();
    wanted.dedup();
    let l_max = *wanted.last().ok_or_else(|| Error::Config("no interval counts".into()))?;
    let mut out = Vec::new();
    for &id in &cfg.codes {
        let code = make_code(id);
        let powers = powers_for(&code, cfg, cfg.optimize_pilots, code.n_t, cfg.coherence as f64, beta_eps)?;
        let drm = build_drm(cfg.drm, m, code.n_t, cfg.seed, 0)?;
        let ch = PortChannel::new(drm.matrix, ChannelModel::from_magnitude(cfg.correlation))?;
        let s = LinkScenario::new(code.clone(), ch, geo, Placement::Uniform, powers)?;
        let rate = code.code_rate();
        let per_user = run_trials(cfg.trial_count(), cfg.seed, stream_tag(&format!("fig5/{m}/{id}")), |r| {
            let user = s.draw_user(r);
            let mut acc = 0.0;
            let mut at = Vec::with_capacity(wanted.len());
            let mut next = 0;
            for l in 1..=l_max {
                acc += supported_rate(&[s.interval(&user, r)?.snr_ostbc], rate)?;
                if wanted[next] == l {
                    at.push(acc / l as f64);
                    next += 1;
                }
            }
            Ok(at)
        })?;
        let mut results = Vec::with_capacity(wanted.len());
        for (j, &l) in wanted.iter().enumerate() {
            let col: Vec<f64> = per_user.iter().map(|v| v[j]).collect();
            results.push((l, outage(&col, cfg, code.n_t)?));
        }
        out.push((id, results));
    }
    Ok(out)
}

fn rates_table(name: &str, rates: &[(CodeId, Vec<(usize, OutageResult)>)]) -> CsvTable {
    let mut t = CsvTable::new(name, &["L", "code", "R_eps", "ci_halfwidth", "n_trials"]);
    for (id, rows) in rates {
        for (l, r) in rows {
            t.push(vec![l.to_string(), id.to_string(), sci(r.rate), sci(r.half_width), r.n_samples.to_string()]);
        }
    }
    t
}

/// Outage rate when coding over `L` independent coherence intervals.
pub fn fig5(cfg: &ScenarioConfig) -> Result<RunOutput> {
    Ok(RunOutput { tables: vec![rates_table("fig5.csv", &multi_interval_rates(cfg)?)] })
}

/// Fewest coherence intervals that carry a message of `N_b` bits.
pub fn fig6(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let mut sorted = cfg.intervals.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.iter().enumerate().any(|(i, &l)| l != i + 1) {
        return Err(Error::Config("fig6 needs intervals 1..=L_max without gaps".into()));
    }
    let rates = multi_interval_rates(cfg)?;
    let tau_c = cfg.coherence as f64;
    let mut t = CsvTable::new(
        "fig6.csv",
        &["N_b", "code", "L_min", "R_eps", "ci_halfwidth", "n_trials", "preferred"],
    );
    for &bits in &cfg.message_bits {
        let mins: Vec<Option<usize>> = rates
            .iter()
            .map(|(_, rows)| {
                let table: Vec<f64> = rows.iter().map(|(_, r)| r.rate).collect();
                min_intervals_for_message(bits, tau_c, &table).ok()
            })
            .collect();
        let tables: Vec<(CodeId, Vec<f64>)> =
            rates.iter().map(|(id, rows)| (*id, rows.iter().map(|(_, r)| r.rate).collect())).collect();
        let preferred = crate::outage::preferred_code(bits, tau_c, &tables).map(|p| p.0);
        for ((id, rows), l_min) in rates.iter().zip(mins) {
            let (l, rate, hw, n) = match l_min {
                Some(l) => {
                    let r = &rows[l - 1].1;
                    (l.to_string(), sci(r.rate), sci(r.half_width), r.n_samples)
                }
                None => (String::new(), String::new(), String::new(), rows[0].1.n_samples),
            };
            t.push(vec![
                sci(bits),
                id.to_string(),
                l,
                rate,
                hw,
                n.to_string(),
                u8::from(preferred == Some(*id)).to_string(),
            ]);
        }
    }
    Ok(RunOutput { tables: vec![t, rates_table("fig6_rates.csv", &rates)] })
}

/// Total bits through `τ_c` channel uses spread over `L` coherence intervals.
pub fn fig8(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let geo = geometry(cfg, false);
    let beta_eps = beta_percentile(&geo, cfg.epsilon)?;
    let m = cfg.antennas[0];
    let n = cfg.trial_count();
    let mut t = CsvTable::new(
        "fig8.csv",
        &["L", "code", "n_t", "branches", "rho_p", "rho_d", "bits", "ci_halfwidth", "C_eps", "n_trials"],
    );
    for &id in &cfg.codes {
        let code = make_code(id);
        let drm = build_drm(cfg.drm, m, code.n_t, cfg.seed, 0)?;
        for &l in &cfg.intervals {
            if l * code.n_t > MAX_SPLIT_BRANCHES || split_budget(cfg.coherence, l, code.n_t).is_err() {
                continue;
            }
            let sub = cfg.coherence as f64 / l as f64;
            let powers = powers_for(&code, cfg, cfg.optimize_pilots, code.n_t, sub, beta_eps)?;
            let ch = PortChannel::new(drm.matrix.clone(), ChannelModel::from_magnitude(cfg.correlation))?;
            let s = LinkScenario::new(code.clone(), ch, geo, Placement::Uniform, powers)?;
            let rate = code.code_rate();
            let samples = run_trials(n, cfg.seed, stream_tag(&format!("fig8/{m}/{id}/{l}")), |r| {
                let user = s.draw_user(r);
                let snrs = (0..l).map(|_| s.interval(&user, r).map(|x| x.snr_ostbc)).collect::<Result<Vec<_>>>()?;
                supported_rate(&snrs, rate)
            })?;
            // Capacity before overhead; the overhead enters via the data-use count.
            let res = outage_result(&samples, cfg.epsilon, 1.0, 0.0)?;
            let data = split_budget(cfg.coherence, l, code.n_t)?.data_uses as f64;
            t.push(vec![
                l.to_string(),
                id.to_string(),
                code.n_t.to_string(),
                (l * code.n_t).to_string(),
                sci(powers.rho_p),
                sci(powers.rho_d),
                sci(data * res.capacity),
                sci(data * res.half_width),
                sci(res.capacity),
                n.to_string(),
            ]);
        }
    }
    Ok(RunOutput { tables: vec![t] })
}

/// Outage rates in the 19-cell layout for each pilot reuse factor, with the
/// hexagonal single cell as reference.
pub fn fig9(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let geo = geometry(cfg, true);
    let beta_eps = beta_percentile(&geo, cfg.epsilon)?;
    let m = cfg.antennas[0];
    let n = cfg.trial_count();
    let mut t = CsvTable::new(
        "fig9.csv",
        &["code", "n_t", "setup", "reuse", "tau_p", "rho_p", "rho_d", "R_eps", "ci_halfwidth", "n_trials"],
    );
    let model = ChannelModel::from_magnitude(cfg.correlation);
    for &id in &cfg.codes {
        let code = make_code(id);
        let drm = build_drm(cfg.drm, m, code.n_t, cfg.seed, 0)?;
        let ch = PortChannel::new(drm.matrix, model)?;
        let rate = code.code_rate();
        let mut push = |setup: &str, reuse: String, powers: PilotPowers, snr: Vec<f64>| -> Result<()> {
            let res = outage(&rate_samples(&snr, rate)?, cfg, powers.tau_p)?;
            t.push(vec![
                id.to_string(),
                code.n_t.to_string(),
                setup.to_string(),
                reuse,
                powers.tau_p.to_string(),
                sci(powers.rho_p),
                sci(powers.rho_d),
                sci(res.rate),
                sci(res.half_width),
                n.to_string(),
            ]);
            Ok(())
        };
        let powers = powers_for(&code, cfg, cfg.optimize_pilots, code.n_t, cfg.coherence as f64, beta_eps)?;
        let s = LinkScenario::new(code.clone(), ch.clone(), geo, Placement::Uniform, powers)?;
        let snr = single_cell_snrs(&s, cfg, &format!("fig9/{m}/{id}/single"))?;
        push("single", String::new(), powers, snr)?;
        for &p in &cfg.reuse {
            let grid = build_grid(p)?;
            let tau_p = grid.pilot_length(code.n_t);
            if tau_p >= cfg.coherence {
                return Err(Error::Config(format!("reuse {p} leaves no data uses for {id}")));
            }
            let powers = powers_for(&code, cfg, cfg.optimize_pilots, tau_p, cfg.coherence as f64, beta_eps)?;
            let s = MultiCellScenario::new(code.clone(), ch.clone(), grid, geo, powers)?;
            let snr = run_trials(n, cfg.seed, stream_tag(&format!("fig9/{m}/{id}/reuse{p}")), |r| s.trial(r))?;
            push("multicell", p.to_string(), powers, snr)?;
        }
    }
    Ok(RunOutput { tables: vec![t] })
}

pub(crate) fn dispatch(cfg: &ScenarioConfig) -> Result<RunOutput> {
    match cfg.figure {
        FigureId::Fig2 => fig2(cfg),
        FigureId::Fig3 => fig3(cfg),
        FigureId::Fig4a | FigureId::Fig4b => fig4(cfg),
        FigureId::Fig5 => fig5(cfg),
        FigureId::Fig6 => fig6(cfg),
        FigureId::Fig8 => fig8(cfg),
        FigureId::Fig9 => fig9(cfg),
    }
}
