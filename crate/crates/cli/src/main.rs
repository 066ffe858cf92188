//! `sim`: run figure experiments, list them, or check the code catalog.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use si_broadcast::codes::{make_all_codes, validate_code};
use si_broadcast::experiments::{list_figures, run, workers_from_env, FigureId, ScenarioConfig};
use si_broadcast::Error;

/// Code violations above this fail `validate-codes`.
const CODE_TOLERANCE: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "sim", version, about = "OSTBC system-information broadcast simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one figure's Monte Carlo job and write its CSV tables.
    Run {
        /// Figure id, e.g. fig4a. Optional when the config file names one.
        #[arg(long)]
        figure: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Output directory, created if missing.
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Flat `key = value` config file.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// List the available figures with defaults and runtime estimates.
    List {
        /// Also print each figure's default parameters.
        #[arg(long)]
        verbose: bool,
    },
    /// Check every catalog code against the OSTBC identities.
    ValidateCodes,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) | Error::DimensionMismatch { .. } => 2,
        Error::Numerical(_) => 3,
        Error::Io(_) => 1,
    }
}

fn load_config(
    figure: Option<String>,
    seed: Option<u64>,
    trials: Option<usize>,
    config: Option<PathBuf>,
) -> Result<ScenarioConfig, Error> {
    let figure = figure.map(|f| f.parse::<FigureId>()).transpose()?;
    let mut cfg = match config {
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            ScenarioConfig::parse(&text, figure)?
        }
        None => ScenarioConfig::defaults(figure.ok_or_else(|| Error::Config("--figure is required".into()))?),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if trials.is_some() {
        cfg.trials = trials;
    }
    if let Some(w) = workers_from_env()? {
        cfg.workers = Some(w);
    }
    Ok(cfg)
}

fn cmd_run(
    figure: Option<String>,
    seed: Option<u64>,
    trials: Option<usize>,
    out: PathBuf,
    config: Option<PathBuf>,
) -> Result<(), Error> {
    let cfg = load_config(figure, seed, trials, config)?;
    let result = run(&cfg)?;
    let mut paths = result.write_to(&out)?;
    let cfg_path = out.join(format!("{}_config.txt", cfg.figure));
    std::fs::write(&cfg_path, cfg.to_text())?;
    paths.push(cfg_path);
    for p in paths {
        println!("{}", p.display());
    }
    Ok(())
}

fn cmd_list(verbose: bool) {
    println!("{:<7} {:>8} {:>9}  {:<32} description", "figure", "trials", "runtime", "outputs");
    for f in list_figures() {
        println!(
            "{:<7} {:>8} {:>9}  {:<32} {}",
            f.id.name(),
            f.default_trials,
            f.runtime_estimate,
            f.outputs.join(" "),
            f.description
        );
        if verbose {
            for line in f.parameters.lines() {
                println!("        {line}");
            }
        }
    }
}

fn cmd_validate_codes() -> Result<(), Error> {
    let mut failed = Vec::new();
    for code in make_all_codes() {
        let worst = validate_code(&code).max_violation();
        let ok = worst < CODE_TOLERANCE;
        println!(
            "{:<4} n_t={:<2} tau_d={:<3} n_s={:<3} max_violation={worst:.3e} {}",
            code.id.to_string(),
            code.n_t,
            code.tau_d,
            code.n_s,
            if ok { "ok" } else { "FAIL" }
        );
        if !ok {
            failed.push(code.id.to_string());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Numerical(format!("identity violations in {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { figure, seed, trials, out, config } => cmd_run(figure, seed, trials, out, config),
        Command::List { verbose } => {
            cmd_list(verbose);
            Ok(())
        }
        Command::ValidateCodes => cmd_validate_codes(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
