//! Command-line driver for the covariate-shift experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wscps::harness::{run_experiment, ExperimentConfig, ExperimentSummary, Mode};
use wscps::Result;

#[derive(Parser)]
#[command(name = "wscps", version, about = "Weighted split conformal predictive systems under covariate shift")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gaussian synthetic experiment with an exponentially tilted test law.
    Synthetic(Common),
    /// Airfoil self-noise experiment with tilt-resampled test sets.
    Airfoil {
        /// Path to the whitespace-separated airfoil self-noise table.
        #[arg(long)]
        data_path: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// PIT-only runs: one PIT value per trial and a KS uniformity test per method.
    Pit {
        /// Use the airfoil data at this path instead of the synthetic generator.
        #[arg(long)]
        data_path: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// File of key=value settings applied before command-line flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Nominal coverage of the central prediction intervals.
    #[arg(long)]
    coverage: Option<f64>,
    /// Comma-separated subset of scps-iid, scps-shift, wscps-oracle, wscps-estimated, scps-reduced.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    tau: Option<f64>,
    /// Comma-separated tilt vector.
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    /// `linear` or `knn:K`.
    #[arg(long)]
    model: Option<String>,
    /// `signed` or `normalized:K`.
    #[arg(long)]
    measure: Option<String>,
    /// Directory for records.csv, aggregates.json and PIT outputs.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl Common {
    fn apply(&self, config: &mut ExperimentConfig) -> Result<()> {
        if let Some(path) = &self.config {
            config.apply_file(path)?;
        }
        let flags = [
            ("trials", self.trials.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("coverage", self.coverage.map(|v| v.to_string())),
            ("methods", self.methods.clone()),
            ("tau", self.tau.map(|v| v.to_string())),
            ("beta", self.beta.clone()),
            ("model", self.model.clone()),
            ("measure", self.measure.clone()),
        ];
        for (key, value) in flags {
            if let Some(value) = value {
                config.set(key, &value)?;
            }
        }
        if let Some(dir) = &self.out_dir {
            config.out_dir = Some(dir.clone());
        }
        Ok(())
    }
}

fn build_config(command: &Command) -> Result<ExperimentConfig> {
    let mut config = match command {
        Command::Synthetic(common) => {
            let mut c = ExperimentConfig::synthetic();
            common.apply(&mut c)?;
            c
        }
        Command::Airfoil { data_path, common } => {
            let mut c = ExperimentConfig::airfoil(data_path);
            common.apply(&mut c)?;
            c
        }
        Command::Pit { data_path, common } => {
            let mut c = match data_path {
                Some(p) => ExperimentConfig::airfoil(p),
                None => ExperimentConfig::synthetic(),
            };
            common.apply(&mut c)?;
            c.mode = Mode::PitOnly;
            c
        }
    };
    config.validate()?;
    if config.out_dir.is_none() {
        config.out_dir = Some(PathBuf::from("results"));
    }
    Ok(config)
}

fn print_summary(summary: &ExperimentSummary) {
    if !summary.aggregates.is_empty() {
        println!(
            "{:<16} {:>7} {:>9} {:>9} {:>9} {:>10} {:>10} {:>10}",
            "method", "trials", "mean_cov", "med_cov", "sd_cov", "mean_width", "mean_crps", "mean_n_eff"
        );
        for a in &summary.aggregates {
            println!(
                "{:<16} {:>7} {:>9.4} {:>9.4} {:>9.4} {:>10.4} {:>10.4} {:>10.1}",
                a.method.name(),
                a.trials,
                a.mean_coverage,
                a.median_coverage,
                a.sd_coverage,
                a.mean_width,
                a.mean_crps,
                a.mean_effective_n
            );
        }
    }
    for (method, ks) in &summary.ks {
        println!(
            "PIT {:<16} KS D = {:.4} (critical {:.4} at alpha {}) -> {}",
            method.name(),
            ks.statistic,
            ks.critical_value,
            ks.alpha,
            if ks.pass { "uniform" } else { "rejected" }
        );
    }
    if let Some((methods, ranks)) = &summary.ranks {
        let listed: Vec<String> = methods
            .iter()
            .zip(&ranks.mean_ranks)
            .map(|(m, r)| format!("{m}={r:.3}"))
            .collect();
        println!(
            "CRPS mean ranks: {} (Friedman chi2 = {:.2}, p = {:.3e}, Nemenyi CD = {:.3})",
            listed.join(", "),
            ranks.friedman_statistic,
            ranks.p_value,
            ranks.critical_difference
        );
    }
    if summary.separated_ratio_fits > 0 {
        println!(
            "warning: the ratio classifier separated the samples in {} trial(s)",
            summary.separated_ratio_fits
        );
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = build_config(&cli.command)?;
    let summary = run_experiment(&config)?;
    print_summary(&summary);
    if let Some(dir) = &config.out_dir {
        summary.write(dir)?;
        println!("results written to {}", dir.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
