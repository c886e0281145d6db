//! Configuration-driven command-line front end.
//!
//! Exit codes: 0 success, 2 config error, 3 math-domain error, 4 internal.
//! Math-domain failures print a machine-readable JSON record on stderr.

mod commands;
mod config;
mod plots;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use cylspec::error::Error;

#[derive(Parser)]
#[command(name = "cylspec", version, about = "Bloch-fibered resolvent continuation and spectral densities on the cylinder")]
struct Cli {
    /// JSON configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory (created if missing)
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// worker threads for the data-parallel scans (0 = machine parallelism)
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// multiplier applied to selfcheck thresholds
    #[arg(long, global = true, default_value_t = 1.0)]
    tolerance_scale: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// certified denominator lower bounds for a window/contour pair
    VerifyBounds,
    /// continuation agreement, left-inverse residuals and dilation decay
    FreeResolvent,
    /// factorization-identity residuals across a refinement step
    Factorization,
    /// Fredholm determinant over a lambda grid
    DeterminantScan,
    /// zero search of h inside a rectangle by the argument principle
    Resonances,
    /// limiting-absorption boundary values and the point-mass probe
    Lap,
    /// spectral-density curve from the continued resolvent
    Density,
    /// h over a (k, lambda) product grid with invertibility witnesses
    BandScan,
    /// direct-integral spectral measure over the quasimomentum cube
    Measure,
    /// cross-module invariant suite
    Selfcheck,
    /// emit gnuplot scripts for CSV outputs of a prior run
    EmitPlots,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::BraggResonance { .. }
        | Error::InvalidContour(_)
        | Error::WeightTooSmall { .. }
        | Error::DecayTooSlow { .. }
        | Error::NearSingular { .. }
        | Error::BoundaryZero { .. }
        | Error::BoundViolation { .. }
        | Error::DenominatorUnderflow { .. }
        | Error::NotUpperHalfPlane(_)
        | Error::MissingData(_) => 3,
        Error::Validation(_) | Error::Serde(_) => 2,
        _ => 4,
    }
}

fn run(cli: &Cli) -> Result<bool, Error> {
    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
            .map_err(|e| Error::Validation(format!("worker pool: {e}")))?;
    }
    fs::create_dir_all(&cli.out)?;

    if matches!(cli.command, Command::EmitPlots) {
        let written = plots::emit_plots(&cli.out)?;
        println!("plot scripts: {}", written.join(", "));
        return Ok(true);
    }
    if matches!(cli.command, Command::Selfcheck) {
        // selfcheck uses built-in models; config optional
        let ok = commands::cmd_selfcheck(&cli.out, cli.tolerance_scale)?;
        let cfg_echo = serde_json::json!({
            "command": "selfcheck",
            "library": "cylspec",
            "version": env!("CARGO_PKG_VERSION"),
            "tolerance_scale": cli.tolerance_scale,
        });
        fs::write(cli.out.join("manifest.json"), serde_json::to_string_pretty(&cfg_echo)?)?;
        return Ok(ok);
    }

    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Validation("--config <file> is required for this command".into()))?;
    let text = fs::read_to_string(config_path)?;
    let cfg = RunConfig::parse(&text)?;
    let m = cfg.materialize()?;
    let (name, result): (&str, Result<(), Error>) = match cli.command {
        Command::VerifyBounds => ("verify-bounds", commands::cmd_verify_bounds(&m, &cli.out)),
        Command::FreeResolvent => ("free-resolvent", commands::cmd_free_resolvent(&m, &cli.out)),
        Command::Factorization => ("factorization", commands::cmd_factorization(&m, &cli.out)),
        Command::DeterminantScan => {
            ("determinant-scan", commands::cmd_determinant_scan(&m, &cli.out))
        }
        Command::Resonances => ("resonances", commands::cmd_resonances(&m, &cli.out)),
        Command::Lap => ("lap", commands::cmd_lap(&m, &cli.out)),
        Command::Density => ("density", commands::cmd_density(&m, &cli.out)),
        Command::BandScan => ("band-scan", commands::cmd_band_scan(&m, &cli.out)),
        Command::Measure => ("measure", commands::cmd_measure(&m, &cli.out)),
        Command::Selfcheck | Command::EmitPlots => unreachable!(),
    };
    result?;
    commands::write_manifest(&cli.out, name, &m.config)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let record = serde_json::json!({
                "error": e.kind(),
                "message": e.to_string(),
            });
            eprintln!("{record}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
