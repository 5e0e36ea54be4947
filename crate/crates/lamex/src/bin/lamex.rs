use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lamex::harness::{self, RunConfig, Suite};

/// Numerical verification harness for the fractional parabolic Lame operator.
#[derive(Parser)]
#[command(name = "lamex", version, about)]
struct Cli {
    /// JSON run configuration; built-in defaults when omitted
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Where report.json and profiles/ land (overrides the config)
    #[arg(long, global = true, value_name = "PATH")]
    output_dir: Option<PathBuf>,

    /// Base RNG seed (overrides the config)
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Multiply every check tolerance by this factor
    #[arg(long, global = true, value_name = "F", default_value_t = 1.0)]
    tolerance_scale: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one suite (symbol, macdonald, extension, reduction, or all)
    Verify { suite: String },
    /// Run every suite and export the extension profiles
    RunAll,
    /// Write the sampled extension profiles as CSV, nothing else
    ExportProfiles,
}

fn load_config(cli: &Cli) -> lamex::Result<RunConfig> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path)?,
        None => harness::DEFAULT_CONFIG.to_string(),
    };
    let mut cfg = harness::parse_config(&text)?;
    if let Some(dir) = &cli.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.rng_seed = seed;
    }
    Ok(cfg)
}

fn verify(cfg: &RunConfig, suite: Suite, scale: f64) -> lamex::Result<bool> {
    let reports = harness::run_suite(cfg, suite, scale);
    for r in &reports {
        println!("{}", r.summary_line());
    }
    let path = harness::write_report(&cfg.output_dir, &reports)?;
    println!("report: {}", path.display());
    Ok(!harness::any_failed(&reports))
}

fn run(cli: &Cli) -> lamex::Result<bool> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Verify { suite } => {
            let suite: Suite = suite.parse()?;
            verify(&cfg, suite, cli.tolerance_scale)
        }
        Command::RunAll => {
            let ok = verify(&cfg, Suite::All, cli.tolerance_scale)?;
            for path in harness::export_profiles(&cfg)? {
                println!("profile: {}", path.display());
            }
            Ok(ok)
        }
        Command::ExportProfiles => {
            for path in harness::export_profiles(&cfg)? {
                println!("profile: {}", path.display());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
