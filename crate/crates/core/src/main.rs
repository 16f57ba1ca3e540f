use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use sparsekey::cli::{render, run, SweepConfig};
use sparsekey::Execution;

/// Parameter sweeps for secret-key generation over sparse wideband channels.
#[derive(Debug, Parser)]
#[command(name = "sparsekey", version)]
struct Args {
    /// Flat key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// ergodic-snr, ergodic-bandwidth, outage-exponent, outage-mc, leakage,
    /// mi-oracle or degraded-check.
    #[arg(long)]
    command: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Run on one thread. Output is identical either way.
    #[arg(long)]
    sequential: bool,
}

fn load(args: &Args) -> Result<SweepConfig, String> {
    let mut cfg = SweepConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        cfg.apply_text(&text).map_err(|e| e.to_string())?;
    }
    let overrides = [
        ("command", args.command.clone()),
        ("seed", args.seed.map(|s| s.to_string())),
        ("samples", args.samples.map(|s| s.to_string())),
        ("out", args.out.as_ref().map(|p| p.display().to_string())),
        ("format", args.format.clone()),
    ];
    for (k, v) in overrides {
        if let Some(v) = v {
            cfg.set(k, &v).map_err(|e| e.to_string())?;
        }
    }
    cfg.finish().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let cfg = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("invalid configuration: {e}");
            return ExitCode::from(1);
        }
    };
    let exec = if args.sequential { Execution::Sequential } else { Execution::Parallel };
    let table = match run(&cfg, exec) {
        Ok(t) => t,
        Err(f) => {
            eprintln!("{f}");
            return ExitCode::from(f.exit_code() as u8);
        }
    };
    for w in &table.warnings {
        eprintln!("warning: {w}");
    }
    let text = render(&cfg, &table);
    match &cfg.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("cannot write {path}: {e}");
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::SUCCESS
}
