use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use wgflow::io::{snapshot_path, write_diagnostics, write_snapshot};
use wgflow::jko::LoopEvent;
use wgflow::study::study_csv;
use wgflow::{load_preset, parse_config, run, study_grid_independence, Error, RunConfig, PRESET_NAMES};

const EXIT_CONFIG: u8 = 2;
const EXIT_NONCONVERGED: u8 = 3;

const DEFAULT_OUT: &str = "wgf_out";

#[derive(Parser)]
#[command(name = "wgf", version, about = "Primal-dual JKO solver for gradient flows with nonlinear mobility")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write snapshots plus diagnostics.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (takes precedence over output.dir and WGF_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override a config key, e.g. --set solver.tau=0.5
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Cap on kernel threads. Kernels are sequential, so any value is
        /// deterministic.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Exit with status 3 if any step stopped at iter_max.
        #[arg(long)]
        strict: bool,
        /// Start every step's PDFB iteration from zero duals.
        #[arg(long)]
        cold_start: bool,
    },
    /// List the built-in presets.
    Presets,
    /// Parameter studies.
    #[command(subcommand)]
    Study(Study),
}

#[derive(Subcommand)]
enum Study {
    /// Iteration counts of a preset over several grid spacings, as CSV.
    GridIndependence {
        #[arg(long)]
        preset: String,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        h_list: Vec<f64>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure with the exit status it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<Error>() {
            Some(Error::Config(_) | Error::UnknownPreset(_) | Error::InvalidParameter(_)) => EXIT_CONFIG,
            _ => 1,
        };
        Self { code, error }
    }
}

fn config_error(msg: String) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        error: anyhow::anyhow!(msg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            overrides,
            threads,
            strict,
            cold_start,
        } => run_cmd(&config, out, &overrides, threads, strict, cold_start),
        Command::Presets => {
            let mut stdout = std::io::stdout().lock();
            // a closed pipe (`wgf presets | head`) is not an error
            let _ = PRESET_NAMES.iter().try_for_each(|name| writeln!(stdout, "{name}"));
            Ok(())
        }
        Command::Study(Study::GridIndependence { preset, h_list, out }) => study_cmd(&preset, &h_list, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(path: &Path, overrides: &[String], cold_start: bool) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg = parse_config(&text).map_err(|e| Failure::from(anyhow::Error::new(e)))?;
    let mut errors = Vec::new();
    let mut keys = Vec::new();
    for kv in overrides {
        match kv.split_once('=') {
            Some((k, v)) => {
                keys.push(k.trim());
                if let Err(e) = cfg.set(k.trim(), v.trim()) {
                    errors.push(e);
                }
            }
            None => errors.push(format!("--set expects KEY=VALUE, got `{kv}`")),
        }
    }
    // same default as in the file: sigma follows tau unless given explicitly
    let sigma_in_file = text
        .lines()
        .any(|l| l.split('#').next().unwrap_or("").trim_start().starts_with("solver.sigma"));
    if keys.contains(&"solver.tau") && !keys.contains(&"solver.sigma") && !sigma_in_file {
        cfg.preset.solver.sigma = 1.0 / cfg.preset.solver.tau;
    }
    if cold_start {
        cfg.preset.solver.cold_start = true;
    }
    match cfg.validate() {
        Ok(()) if errors.is_empty() => Ok(cfg),
        Ok(()) => Err(Failure::from(anyhow::Error::new(Error::Config(errors)))),
        Err(Error::Config(more)) => {
            errors.extend(more);
            Err(Failure::from(anyhow::Error::new(Error::Config(errors))))
        }
        Err(e) => Err(Failure::from(anyhow::Error::new(e))),
    }
}

fn output_dir(cli_out: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    cli_out
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os("WGF_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn run_cmd(
    config: &Path,
    out: Option<PathBuf>,
    overrides: &[String],
    threads: usize,
    strict: bool,
    cold_start: bool,
) -> Result<(), Failure> {
    if threads == 0 {
        return Err(config_error("--threads must be at least 1".into()));
    }
    let cfg = load_config(config, overrides, cold_start)?;
    let dir = output_dir(out, &cfg);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    std::fs::write(dir.join("config.txt"), cfg.dump()).with_context(|| format!("writing {}", dir.display()))?;

    let p = &cfg.preset;
    let problem = p.problem().map_err(anyhow::Error::new)?;
    let rho0 = p.initial_density().map_err(anyhow::Error::new)?;
    log::info!("{}: {} steps on {} cells", p.name, p.time.num_steps(), problem.grid.num_cells());
    let grid = problem.grid;
    let format = cfg.format;
    let mut sink = |ev: LoopEvent<'_>| match ev {
        LoopEvent::Snapshot { step, rho, .. } => write_snapshot(&snapshot_path(&dir, step, format), rho, &grid, format),
        LoopEvent::Step(d) => {
            log::info!("step {} t={:.6} iters={} mass={:.16e}", d.step, d.time, d.pdfb_iters, d.mass);
            Ok(())
        }
    };
    let output = run(&rho0, &problem, &p.solver, &p.time, &mut sink).map_err(anyhow::Error::new)?;
    write_diagnostics(&dir.join("diagnostics.csv"), &output.diagnostics).map_err(anyhow::Error::new)?;

    let stalled: Vec<usize> = output.diagnostics.iter().filter(|d| !d.converged).map(|d| d.step).collect();
    if !stalled.is_empty() {
        let msg = format!("{} step(s) stopped at iter_max, first at step {}", stalled.len(), stalled[0]);
        if strict {
            return Err(Failure {
                code: EXIT_NONCONVERGED,
                error: anyhow::anyhow!(msg),
            });
        }
        log::warn!("{msg}");
    }
    Ok(())
}

fn study_cmd(preset: &str, h_list: &[f64], out: Option<&Path>) -> Result<(), Failure> {
    let p = load_preset(preset).map_err(anyhow::Error::new)?;
    if let Some(h) = h_list.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
        return Err(config_error(format!("--h-list entries must be positive, got {h}")));
    }
    let rows = study_grid_independence(&p, h_list).map_err(anyhow::Error::new)?;
    let csv = study_csv(&rows);
    match out {
        Some(path) => std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{csv}"),
    }
    Ok(())
}
