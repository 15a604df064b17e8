use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ytx::diagnostics::Thresholds;
use ytx::eval::ModelKind;
use ytx::{Error, ErrorClass, TransformKind};

mod commands;

#[derive(Parser, Debug)]
#[command(
    name = "ytx",
    version,
    about = "Fit, diagnose and benchmark invertible target transformations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the target for properties that suggest a transformation.
    Diagnose(DiagnoseArgs),
    /// Fit one transformation and write the transformed CSV plus its parameters.
    Transform(TransformArgs),
    /// Cross-validate models on raw and transformed targets.
    Benchmark(BenchmarkArgs),
    /// Render saved benchmark JSON files as markdown tables.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Headed CSV file.
    #[arg(long)]
    input: PathBuf,
    /// Column roles as inline JSON or a path to a JSON file. Defaults to the
    /// last column as target and no other roles.
    #[arg(long)]
    roles: Option<String>,
}

#[derive(Args, Debug)]
struct DeflationArgs {
    /// Two-column CSV (time key, price index) for the deflate transform.
    #[arg(long)]
    price_index: Option<PathBuf>,
    /// Base period for deflation; defaults to the latest time key.
    #[arg(long)]
    base_time: Option<String>,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Override a diagnostic threshold, e.g. skew=0.3.
    #[arg(long = "threshold", value_name = "KEY=VALUE")]
    thresholds: Vec<String>,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TransformArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_parser = parse_kind)]
    transform: TransformKind,
    #[command(flatten)]
    deflation: DeflationArgs,
    /// Transformed CSV.
    #[arg(long)]
    out_csv: PathBuf,
    /// Fitted parameters.
    #[arg(long)]
    out_json: PathBuf,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Transform kind, or "auto" for the diagnostic recommendations.
    #[arg(long = "transform", value_name = "KIND")]
    transforms: Vec<String>,
    #[arg(long = "model", value_parser = parse_model)]
    models: Vec<ModelKind>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long = "threshold", value_name = "KEY=VALUE")]
    thresholds: Vec<String>,
    /// Dataset name used as the table row label; defaults to the file stem.
    #[arg(long)]
    name: Option<String>,
    #[command(flatten)]
    deflation: DeflationArgs,
    #[arg(long)]
    out_json: Option<PathBuf>,
    #[arg(long)]
    out_md: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Benchmark JSON files; each becomes one table row.
    #[arg(long = "input", required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out_md: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<TransformKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn thresholds(assignments: &[String]) -> ytx::Result<Thresholds> {
    let mut th = Thresholds::default();
    for a in assignments {
        th.apply(a)?;
    }
    Ok(th)
}

fn exit_code(err: &Error) -> u8 {
    match err.class() {
        ErrorClass::Config => 2,
        ErrorClass::Data => 3,
        ErrorClass::Domain => 4,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Diagnose(a) => commands::diagnose(a),
        Command::Transform(a) => commands::transform(a),
        Command::Benchmark(a) => commands::benchmark(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
