use clap::{Args, Parser, Subcommand};
use nullwave_cli::commands::{self, EXIT_USAGE};
use nullwave_cli::config::{ConfigError, ExperimentConfig, Overrides};
use nullwave_cli::verify;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "nullwave",
    version,
    about = "Null-form classification and 2D quasilinear wave experiments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct TensorArgs {
    /// Preset tensor from the catalog (FA0..FB2, FC1, FC2, FD1..FD3, GC0..GC2, GD0..GD2, CLM, ZERO)
    #[arg(long)]
    preset: Option<String>,
    /// Tensor entries from a text file
    #[arg(long)]
    tensor: Option<PathBuf>,
    /// Experiment config file
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Full null / strong-null / CLM verdicts with parameters and decomposition
    Classify {
        #[command(flatten)]
        sel: TensorArgs,
    },
    /// Null and strong-null verdicts only
    Check {
        #[command(flatten)]
        sel: TensorArgs,
    },
    /// Integrate the configured problem, write the CSV, print a summary
    Run {
        #[command(flatten)]
        sel: TensorArgs,
        /// CSV output path (overrides the config's [output] csv)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for grid sweeps
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Execute the acceptance criteria; one line per criterion
    Verify {
        /// Worker threads for grid sweeps
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Classify { sel } => tensor_command(&sel, commands::classify_report),
        Cmd::Check { sel } => tensor_command(&sel, commands::check_report),
        Cmd::Run { sel, out, workers } => run_command(&sel, out, workers),
        Cmd::Verify { workers } => verify_command(workers.unwrap_or(1)),
    };
    ExitCode::from(code.clamp(0, 255) as u8)
}

fn load_config(sel: &TensorArgs, out: Option<PathBuf>, workers: Option<usize>) -> Result<ExperimentConfig, ConfigError> {
    let ov = Overrides {
        preset: sel.preset.clone(),
        tensor_file: sel.tensor.clone(),
        out,
        workers,
    };
    ExperimentConfig::load(sel.config.as_deref(), &ov)
}

fn usage_error(e: ConfigError) -> i32 {
    eprintln!("error: {e}");
    EXIT_USAGE
}

fn tensor_command(
    sel: &TensorArgs,
    report: fn(&nullwave::algebra::CoefficientTensor) -> (String, i32),
) -> i32 {
    let cfg = match load_config(sel, None, None) {
        Ok(c) => c,
        Err(e) => return usage_error(e),
    };
    match cfg.resolve_tensor() {
        Ok(g) => {
            let (text, code) = report(&g);
            print!("{text}");
            code
        }
        Err(e) => usage_error(e),
    }
}

fn run_command(sel: &TensorArgs, out: Option<PathBuf>, workers: Option<usize>) -> i32 {
    let cfg = match load_config(sel, out, workers) {
        Ok(c) => c,
        Err(e) => return usage_error(e),
    };
    let outcome = match commands::run_experiment(&cfg) {
        Ok(o) => o,
        Err(e) => return usage_error(e),
    };
    let path = cfg
        .csv
        .clone()
        .unwrap_or_else(|| PathBuf::from("nullwave_run.csv"));
    if let Err(e) = std::fs::write(&path, &outcome.csv) {
        eprintln!("error: writing {}: {e}", path.display());
        return EXIT_USAGE;
    }
    println!("csv: {}", path.display());
    print!("{}", outcome.summary);
    outcome.exit
}

fn verify_command(workers: usize) -> i32 {
    let report = verify::run_all(workers);
    print!("{}", report.text());
    if report.all_pass() {
        0
    } else {
        1
    }
}
