use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aerosol_gso::config::{parse_render_file, RunConfig};
use aerosol_gso::io_render::{read_geojson, write_svg};
use aerosol_gso::pipeline::{manifest_bounds, run_pipeline, with_jobs, write_synthetic, RESULTS_GEOJSON};
use aerosol_gso::Error;

/// Locate recurring aerosol hot-spots in daily gridded AOT fields.
#[derive(Parser)]
#[command(name = "aerosol-gso", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the swarm seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write per-iteration swarm snapshots to <output>/trace/.
    #[arg(long, global = true)]
    trace: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline.
    Run { config: PathBuf },
    /// Check a config and list every problem found.
    Validate { config: PathBuf },
    /// Write the configured synthetic days as dense grids.
    Synth { config: PathBuf },
    /// Re-render maps from an existing results directory.
    Render { results_dir: PathBuf, spec: PathBuf },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Invalid(_) | Error::Separation { .. } => 2,
        Error::Io { .. } => 4,
        _ => 3,
    }
}

fn load_config(path: &Path, cli: &Cli) -> Result<RunConfig, (Error, u8)> {
    let mut cfg = RunConfig::load(path).map_err(|e| {
        let code = if matches!(e, Error::Io { .. }) { 4 } else { 2 };
        (e, code)
    })?;
    if let Some(seed) = cli.seed {
        cfg.gso.seed = seed;
    }
    cfg.trace |= cli.trace;
    Ok(cfg)
}

fn report(e: &Error) {
    match e {
        Error::Invalid(violations) => {
            for v in violations {
                eprintln!("error: {v}");
            }
        }
        other => eprintln!("error: {other}"),
    }
}

fn execute(cli: &Cli) -> Result<(), (Error, u8)> {
    let tag = |e: Error| {
        let code = exit_code(&e);
        (e, code)
    };
    match &cli.command {
        Command::Run { config } => {
            let cfg = load_config(config, cli)?;
            with_jobs(cli.jobs, || run_pipeline(&cfg, cli.quiet)).map_err(tag)?;
        }
        Command::Validate { config } => {
            let cfg = load_config(config, cli)?;
            let violations = cfg.violations();
            if !violations.is_empty() {
                return Err((Error::Invalid(violations), 2));
            }
            println!("OK");
        }
        Command::Synth { config } => {
            let cfg = load_config(config, cli)?;
            let written = with_jobs(cli.jobs, || write_synthetic(&cfg)).map_err(tag)?;
            if !cli.quiet {
                for p in written {
                    eprintln!("wrote {}", p.display());
                }
            }
        }
        Command::Render { results_dir, spec } => {
            let text = fs::read_to_string(spec).map_err(|e| (Error::io(spec, e), 4))?;
            let file = parse_render_file(&text, &spec.display().to_string()).map_err(|e| (e, 2))?;
            let violations: Vec<_> = file
                .render
                .iter()
                .enumerate()
                .flat_map(|(k, r)| r.violations(&format!("render[{k}].")))
                .collect();
            if !violations.is_empty() {
                return Err((Error::Invalid(violations), 2));
            }
            let results = read_geojson(&results_dir.join(RESULTS_GEOJSON)).map_err(tag)?;
            let bounds = manifest_bounds(results_dir).map_err(tag)?;
            for r in &file.render {
                write_svg(&results_dir.join(&r.file), r, &results, bounds.as_ref()).map_err(tag)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((e, code)) => {
            report(&e);
            ExitCode::from(code)
        }
    }
}
