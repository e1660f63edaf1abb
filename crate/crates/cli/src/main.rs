use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use synthrot::commands::{run_design, run_simulate, run_sweep, run_verify_cmd};
use synthrot::config::RunConfig;
use synthrot::CliError;

/// Circulator design, sweeps and transient simulation for a SQUID-bridge ring.
#[derive(Debug, Parser)]
#[command(name = "synthrot", version)]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides output.directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Seed for the tuning simplex; overrides the config value.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "SYNTHROT_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print derived design quantities as JSON.
    Design,
    /// Frequency sweep of the IO, exact and gyrator models.
    Sweep,
    /// Transient simulation with spectrum and sideband analysis.
    Simulate,
    /// Run the acceptance suite.
    Verify {
        #[arg(long, hide = true, default_value_t = 1.0)]
        kappa_scale: f64,
    },
}

fn print_json<T: Serialize>(v: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(v).map_err(|e| CliError::Numerical(e.to_string()))?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        // A closed pipe (`| head`) is not an error.
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Validation("--config is required for this command".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: &RunConfig) -> PathBuf {
    cli.out_dir
        .clone()
        .or_else(|| cfg.output.as_ref().map(|o| o.directory.clone()))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Validation("--jobs: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("--jobs: {e}")))?;
    }
    match &cli.command {
        Command::Design => {
            let cfg = load(cli)?;
            let report = run_design(&cfg)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if cli.out_dir.is_some() || cfg.output.is_some() {
                let dir = out_dir(cli, &cfg);
                synthrot::output::ensure_dir(&dir)?;
                synthrot::output::write_json(&dir.join("design.json"), &report)?;
            }
            print_json(&report)?;
        }
        Command::Sweep => {
            let cfg = load(cli)?;
            let summary = run_sweep(&cfg, &out_dir(cli, &cfg))?;
            print_json(&summary)?;
        }
        Command::Simulate => {
            let cfg = load(cli)?;
            let seed = cfg.seed.unwrap_or(0);
            let summary = run_simulate(&cfg, &out_dir(cli, &cfg), seed)?;
            print_json(&summary)?;
        }
        Command::Verify { kappa_scale } => {
            let report = run_verify_cmd(*kappa_scale, cli.out_dir.as_deref())?;
            print_json(&report)?;
            return Ok(report.passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
