use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pqe_core::experiments::{self, Experiment, ExperimentConfig, OutputFormat, RunRecord};

#[derive(Parser, Debug)]
#[command(
    name = "pqe",
    version,
    about = "Run PQE / VQE experiments and write their records"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// H2 dissociation curve, one record per bond length.
    H2Curve,
    /// TFIM mitigation grid: symmetry treatment x extrapolation.
    TfimMatrix,
    /// TFIM truncated-ansatz and tapering study.
    TfimTruncation,
    /// Spin-spin correlation matrices of exact and truncated TFIM states.
    TfimCorrelations,
    /// PQE against VQE over TFIM sizes.
    Scaling,
    /// Readout calibration of the configured noise model.
    Calibrate,
}

impl Command {
    fn experiment(self) -> Experiment {
        match self {
            Command::H2Curve => Experiment::H2Curve,
            Command::TfimMatrix => Experiment::TfimMatrix,
            Command::TfimTruncation => Experiment::TfimTruncation,
            Command::TfimCorrelations => Experiment::TfimCorrelations,
            Command::Scaling => Experiment::Scaling,
            Command::Calibrate => Experiment::Calibrate,
        }
    }
}

#[derive(Args, Debug)]
struct Common {
    /// TOML file merged over the experiment's built-in defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "results")]
    out: PathBuf,
    #[arg(long, global = true, value_name = "json|csv")]
    format: Option<OutputFormat>,
    #[arg(long, global = true, value_name = "N")]
    repeats: Option<usize>,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

fn load_config(e: Experiment, c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ExperimentConfig::from_toml_over_preset(e, &text)
                .with_context(|| format!("in {}", p.display()))?
        }
        None => ExperimentConfig::preset(e),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(r) = c.repeats {
        cfg.repeats = r;
    }
    if let Some(f) = c.format {
        cfg.output.format = f;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"))
}

fn print_summary(records: &[RunRecord]) {
    for r in records {
        let s = &r.summary;
        let mut line = format!("{:<36} runs {:>3}", r.label, s.repeats);
        if s.repeats > 0 {
            line += &format!(
                "  E {} ± {}  iters {:.1}",
                fmt_opt(s.mean_energy, 6),
                fmt_opt(s.std_energy, 6),
                s.mean_iterations
            );
        }
        if s.mean_recovered_pct.is_some() {
            line += &format!(
                "  recovered {}% ± {}",
                fmt_opt(s.mean_recovered_pct, 2),
                fmt_opt(s.std_recovered_pct, 2)
            );
        } else if s.mean_error.is_some() {
            line += &format!("  error {}", fmt_opt(s.mean_error, 6));
        }
        if s.excited_fraction > 0.0 {
            line += &format!("  excited {:.0}%", 100.0 * s.excited_fraction);
        }
        if let Some(cnots) = r.metrics.get("cnot_count") {
            line += &format!("  cnots {cnots}");
        }
        if let Some(f) = r.metrics.get("mean_assignment_fidelity") {
            line += &format!("  assignment fidelity {f:.4}");
        }
        println!("{line}");
        for c in &r.correlations {
            let adjacent: Vec<String> = (0..c.x.len().saturating_sub(1))
                .map(|i| format!("{:.3}", c.x[i][i + 1]))
                .collect();
            println!(
                "  {:<22} E {:.6}  <X_i X_i+1> {}",
                c.state,
                c.energy,
                adjacent.join(" ")
            );
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let e = cli.command.experiment();
    let cfg = load_config(e, &cli.common)?;
    if cli.common.print_config {
        print!("{}", cfg.to_toml()?);
        return Ok(());
    }
    let records = experiments::run(e, &cfg)?;
    if records.is_empty() {
        bail!("experiment produced no records");
    }
    print_summary(&records);
    let path = experiments::emit(&records, &cli.common.out, cfg.output.format)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
