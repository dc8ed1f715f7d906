use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lossaudit_cli::{
    load_config, run_audit, run_basis_check, run_boost, run_experiment, run_train_lp,
    summarize_report, AuditConfig, BasisCheckConfig, BoostCommandConfig, ExperimentConfig,
};

/// Loss-prediction audits and multicalibration boosting for binary
/// predictors.
#[derive(Parser)]
#[command(name = "lossaudit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON config for the command.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a loss predictor and report its held-out advantage, the
    /// induced multicalibration witness, and calibration metrics.
    Audit(RunArgs),
    /// Train and serialize a loss predictor.
    TrainLp(RunArgs),
    /// Sweep base models and loss-predictor algorithms across
    /// miscalibration levels; emit tables, plots, and correlation stats.
    Experiment(RunArgs),
    /// Run product-class multicalibration boosting for all Lipschitz
    /// proper losses and emit the certificate and trace.
    Boost(RunArgs),
    /// Fit sampled Lipschitz losses with the threshold basis and verify
    /// the sup-error and coefficient-norm bounds.
    BasisCheck(RunArgs),
    /// Summarize a previous run's report.json.
    Report {
        /// Output directory of the previous run.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Audit(args) => with_config(args, |cfg: AuditConfig| {
            run_audit(&cfg, &args.out).map(|r| {
                println!(
                    "audit: advantage {:.6} (witness bound holds: {})",
                    r.advantage.advantage, r.witness_bound_holds
                );
            })
        }),
        Command::TrainLp(args) => with_config(args, |cfg: AuditConfig| {
            run_train_lp(&cfg, &args.out).map(|r| {
                println!(
                    "train-lp: wrote loss_predictor.json (held-out advantage {:.6})",
                    r.advantage.advantage
                );
            })
        }),
        Command::Experiment(args) => with_config(args, |cfg: ExperimentConfig| {
            run_experiment(&cfg, &args.out).map(|r| {
                println!(
                    "experiment: {} cells, Spearman rho {:.4}, concordance {:.3}",
                    r.cells.len(),
                    r.spearman_rho,
                    r.sign_concordance
                );
            })
        }),
        Command::Boost(args) => with_config(args, |cfg: BoostCommandConfig| {
            run_boost(&cfg, &args.out).map(|r| {
                println!(
                    "boost: {} rounds, panel advantage {:.6} <= bound {:.4}: {}",
                    r.certificate.rounds,
                    r.post_boost_panel_advantage,
                    r.certificate.bound,
                    r.bound_holds
                );
            })
        }),
        Command::BasisCheck(args) => with_config(args, |cfg: BasisCheckConfig| {
            run_basis_check(&cfg, &args.out).map(|r| {
                println!(
                    "basis-check: d = {}, max sup error {:.6} <= {}, max norm {:.6} <= {}",
                    r.d, r.max_sup_error, r.epsilon, r.max_coefficient_norm, r.lambda
                );
            })
        }),
        Command::Report { out } => summarize_report(out).map(|s| println!("{s}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn with_config<C, F>(args: &RunArgs, run: F) -> lossaudit::Result<()>
where
    C: serde::de::DeserializeOwned + SeedOverride,
    F: FnOnce(C) -> lossaudit::Result<()>,
{
    let mut cfg: C = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.set_seed(seed);
    }
    run(cfg)
}

/// Lets `--seed` override the seed in any command config.
trait SeedOverride {
    fn set_seed(&mut self, seed: u64);
}

impl SeedOverride for AuditConfig {
    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
}

impl SeedOverride for ExperimentConfig {
    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
}

impl SeedOverride for BoostCommandConfig {
    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
}

impl SeedOverride for BasisCheckConfig {
    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
}
