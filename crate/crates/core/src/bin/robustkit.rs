//! Command-line entry point: experiment orchestration and plots.
//!
//! Exit codes: 0 on success, 2 on config errors, 3 on numerical failures.

use clap::{Args, Parser, Subcommand};
use robustkit::error::Error;
use robustkit::harness::{
    emit_plots, run_experiment, write_output, ExperimentConfig, ExperimentKind, LowerboundConfig,
    TomographyConfig,
};
use robustkit::quantumsim::AdversaryStrategy;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "robustkit",
    about = "Robust learning of binary product distributions and agnostic tomography of product mixed states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonRun {
    /// Experiment config file (key = value sections).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Robust learner vs naive mean on corrupted synthetic product data.
    #[command(name = "robust_classical")]
    RobustClassical {
        #[command(flatten)]
        common: CommonRun,
    },
    /// Two-round adaptive tomography of contaminated product mixed states.
    Tomography {
        #[command(flatten)]
        common: CommonRun,
        /// Qubit count for generated states.
        #[arg(long)]
        n: Option<usize>,
        /// Contamination rate.
        #[arg(long)]
        eps: Option<f64>,
        /// Copies per Pauli basis in round one.
        #[arg(long)]
        n1: Option<usize>,
        /// Copies in the adaptive round-two basis.
        #[arg(long)]
        n2: Option<usize>,
        /// Classical outcome corruption: none, mean_shift or rare_inflate.
        #[arg(long)]
        adversary: Option<String>,
        /// Run the exact-moment pipeline instead of sampling.
        #[arg(long)]
        stub_exact: bool,
        /// State description file (overrides generated states).
        #[arg(long)]
        state: Option<PathBuf>,
        /// Trials.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Moment-matched hard pair and measurement indistinguishability sweep.
    Lowerbound {
        #[command(flatten)]
        common: CommonRun,
        /// Dominant-atom scale; biases live at m/n.
        #[arg(long)]
        m: Option<f64>,
        /// Matched-moment orders, comma separated.
        #[arg(long)]
        k: Option<String>,
        /// Qubit counts, comma separated.
        #[arg(long)]
        n_grid: Option<String>,
        /// Mixing weight of the moment-matching noise.
        #[arg(long)]
        eps_mix: Option<f64>,
        /// Monte-Carlo outcomes per TV estimate.
        #[arg(long)]
        mc_samples: Option<usize>,
    },
    /// Clean-sample concentration audit for the preprocessing reductions.
    #[command(name = "regularity_audit")]
    RegularityAudit {
        #[command(flatten)]
        common: CommonRun,
    },
    /// Render SVG plots from an experiment CSV.
    Plot {
        /// Input CSV (results or lowerbound schema).
        #[arg(long)]
        csv: PathBuf,
        /// Output directory for SVG files.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn load_config(common: &CommonRun, kind: ExperimentKind) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            let cfg = ExperimentConfig::parse(&text)?;
            if cfg.kind() != kind {
                return Err(Error::Config(
                    "config kind does not match the subcommand".into(),
                ));
            }
            cfg
        }
        None => match kind {
            ExperimentKind::RobustClassical => {
                ExperimentConfig::RobustClassical(Default::default())
            }
            ExperimentKind::Tomography => ExperimentConfig::Tomography(Default::default()),
            ExperimentKind::Lowerbound => ExperimentConfig::Lowerbound(Default::default()),
            ExperimentKind::RegularityAudit => {
                ExperimentConfig::RegularityAudit(Default::default())
            }
        },
    };
    if let Some(seed) = common.seed {
        cfg.set_seed(seed);
    }
    Ok(cfg)
}

fn parse_list(raw: &str, what: &str) -> Result<Vec<usize>, Error> {
    raw.split([',', ' '])
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Config(format!("bad {what} entry `{t}`")))
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn apply_tomography_flags(
    c: &mut TomographyConfig,
    n: Option<usize>,
    eps: Option<f64>,
    n1: Option<usize>,
    n2: Option<usize>,
    adversary: Option<String>,
    stub_exact: bool,
    state: Option<PathBuf>,
    trials: Option<usize>,
) -> Result<(), Error> {
    if let Some(v) = n {
        c.n = v;
    }
    if let Some(v) = eps {
        c.eps = v;
    }
    if let Some(v) = n1 {
        c.n1 = v;
    }
    if let Some(v) = n2 {
        c.n2 = v;
    }
    if let Some(v) = adversary {
        c.adversary = v
            .parse::<AdversaryStrategy>()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    if stub_exact {
        c.stub_exact = true;
    }
    if state.is_some() {
        c.state_file = state;
    }
    if let Some(v) = trials {
        c.trials = v;
    }
    Ok(())
}

fn apply_lowerbound_flags(
    c: &mut LowerboundConfig,
    m: Option<f64>,
    k: Option<String>,
    n_grid: Option<String>,
    eps_mix: Option<f64>,
    mc_samples: Option<usize>,
) -> Result<(), Error> {
    if let Some(v) = m {
        c.m = v;
    }
    if let Some(raw) = k {
        c.k_grid = parse_list(&raw, "k")?;
    }
    if let Some(raw) = n_grid {
        c.n_grid = parse_list(&raw, "n-grid")?;
    }
    if let Some(v) = eps_mix {
        c.eps_mix = v;
    }
    if let Some(v) = mc_samples {
        c.mc_samples = v;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::RobustClassical { common } => {
            let cfg = load_config(&common, ExperimentKind::RobustClassical)?;
            for p in write_output(&run_experiment(&cfg)?, &common.out)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Tomography {
            common,
            n,
            eps,
            n1,
            n2,
            adversary,
            stub_exact,
            state,
            trials,
        } => {
            let mut cfg = load_config(&common, ExperimentKind::Tomography)?;
            if let ExperimentConfig::Tomography(ref mut c) = cfg {
                apply_tomography_flags(c, n, eps, n1, n2, adversary, stub_exact, state, trials)?;
            }
            for p in write_output(&run_experiment(&cfg)?, &common.out)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Lowerbound {
            common,
            m,
            k,
            n_grid,
            eps_mix,
            mc_samples,
        } => {
            let mut cfg = load_config(&common, ExperimentKind::Lowerbound)?;
            if let ExperimentConfig::Lowerbound(ref mut c) = cfg {
                apply_lowerbound_flags(c, m, k, n_grid, eps_mix, mc_samples)?;
            }
            for p in write_output(&run_experiment(&cfg)?, &common.out)? {
                println!("wrote {}", p.display());
            }
        }
        Command::RegularityAudit { common } => {
            let cfg = load_config(&common, ExperimentKind::RegularityAudit)?;
            for p in write_output(&run_experiment(&cfg)?, &common.out)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Plot { csv, out } => {
            for p in emit_plots(&csv, &out)? {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Format(_) | Error::UnknownStrategy(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
