//! Command-line front end: validate, run, record, check and graph
//! subcommands over configuration files.
//!
//! Exit codes are stable for CI scripting: 0 ok, 1 I/O, 2 configuration
//! error, 3 write error, 4 runtime error, 5 acceptance mismatch, 64 usage.
//! All diagnostics go to stderr; stdout stays empty.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use gemini_core::attr::{AttrKind, AttrValue};
use gemini_core::config::{self, ConfigError};
use gemini_core::scene::{write_point_cloud_ply, PointCloud};
use gemini_core::statelog::{self, compare_logs, DiffReport, StateLog, StateLogObserver};
use gemini_core::{NamedComponent, Registry, World};

const EXIT_OK: u8 = 0;
const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_WRITE: u8 = 3;
const EXIT_RUNTIME: u8 = 4;
const EXIT_MISMATCH: u8 = 5;
const EXIT_USAGE: u8 = 64;

/// Environment variable that overrides every `seed` attribute in the
/// built world.
const SEED_ENV: &str = "GEMINI_SEED";

#[derive(Parser)]
#[command(name = "gemini", version, about = "Configuration-driven ECS simulation runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, resolve imports and build a configuration without running it.
    Validate { config: PathBuf },
    /// Build and run a configuration, recording the state log.
    Run {
        config: PathBuf,
        /// Number of iterations to execute (>= 1).
        #[arg(long)]
        iterations: u64,
        /// Where to write the state log CSV.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Export every PointCloud component as ASCII PLY after the final
        /// iteration.
        #[arg(long)]
        export_dir: Option<PathBuf>,
    },
    /// Run a configuration and write (or overwrite) its golden log.
    Record {
        config: PathBuf,
        #[arg(long)]
        iterations: u64,
        /// Golden log path.
        #[arg(long)]
        golden: PathBuf,
    },
    /// Re-run a configuration for as many iterations as its golden log
    /// covers and compare the states.
    Check {
        config: PathBuf,
        #[arg(long)]
        golden: PathBuf,
        /// Optional machine-readable diff CSV.
        #[arg(long)]
        diff_out: Option<PathBuf>,
    },
    /// Write the data-pipeline graph as DOT text.
    Graph {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    // help/version go to stdout by clap convention
                    print!("{err}");
                    ExitCode::from(EXIT_OK)
                }
                _ => {
                    eprint!("{err}");
                    ExitCode::from(EXIT_USAGE)
                }
            };
        }
    };
    ExitCode::from(dispatch(cli))
}

fn dispatch(cli: Cli) -> u8 {
    let registry = Registry::builtin();
    match cli.command {
        Command::Validate { config } => match build_from(&config, &registry) {
            Ok(_) => EXIT_OK,
            Err(code) => code,
        },
        Command::Run { config, iterations, log, export_dir } => {
            cmd_run(&config, iterations, log.as_deref(), export_dir.as_deref(), &registry)
        }
        Command::Record { config, iterations, golden } => {
            cmd_record(&config, iterations, &golden, &registry)
        }
        Command::Check { config, golden, diff_out } => {
            cmd_check(&config, &golden, diff_out.as_deref(), &registry)
        }
        Command::Graph { config, out } => cmd_graph(&config, &out, &registry),
    }
}

fn config_exit_code(err: &ConfigError) -> u8 {
    match err {
        ConfigError::Io { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

/// Loads, flattens and builds a configuration, applying the seed
/// override. Failures are reported to stderr and mapped to exit codes.
fn build_from(config: &Path, registry: &Registry) -> Result<World, u8> {
    let doc = config::load_document(config).map_err(|e| {
        eprintln!("gemini: {e}");
        config_exit_code(&e)
    })?;
    let mut world = config::build_world(&doc, registry).map_err(|e| {
        eprintln!("gemini: {e}");
        config_exit_code(&e)
    })?;
    apply_seed_override(&mut world)?;
    Ok(world)
}

/// GEMINI_SEED replaces every integer `seed` attribute in the world, so a
/// scripted sweep can re-seed stochastic processors without editing
/// configs.
fn apply_seed_override(world: &mut World) -> Result<(), u8> {
    let Ok(raw) = std::env::var(SEED_ENV) else {
        return Ok(());
    };
    let seed: i64 = match raw.parse::<i64>() {
        Ok(s) if s >= 0 => s,
        _ => {
            eprintln!("gemini: {SEED_ENV} must be a non-negative integer, got {raw:?}");
            return Err(EXIT_USAGE);
        }
    };
    let mut overridden = 0usize;
    let entities: Vec<_> = world.entities().to_vec();
    let types: Vec<String> = world.component_types().map(String::from).collect();
    for &entity in &entities {
        for type_name in &types {
            if !world.has_component(entity, type_name) {
                continue;
            }
            let has_seed = {
                let c = world.component_dyn(entity, type_name).expect("idle world");
                c.attribute("seed").map(|v| v.kind() == AttrKind::Int).unwrap_or(false)
            };
            if has_seed {
                let mut c = world.component_dyn_mut(entity, type_name).expect("idle world");
                c.set_attribute("seed", AttrValue::Int(seed)).map_err(|m| {
                    eprintln!("gemini: cannot override seed on {type_name}: {m}");
                    EXIT_CONFIG
                })?;
                overridden += 1;
            }
        }
    }
    if overridden > 0 {
        eprintln!("gemini: {SEED_ENV}={seed} overrides {overridden} seed attribute(s)");
    }
    Ok(())
}

fn run_world(world: &mut World, iterations: u64) -> Result<StateLog, u8> {
    let mut observer = StateLogObserver::new();
    if let Err(e) = world.run(iterations, &mut [&mut observer]) {
        eprintln!("gemini: iteration {}: {e}", world.iteration());
        return Err(EXIT_RUNTIME);
    }
    Ok(observer.log)
}

fn write_log_to(log: &StateLog, path: &Path) -> Result<(), u8> {
    statelog::write_log_file(log, path).map_err(|e| {
        eprintln!("gemini: cannot write {}: {e}", path.display());
        EXIT_WRITE
    })
}

fn cmd_run(
    config: &Path,
    iterations: u64,
    log_path: Option<&Path>,
    export_dir: Option<&Path>,
    registry: &Registry,
) -> u8 {
    if iterations == 0 {
        eprintln!("gemini: --iterations must be >= 1");
        return EXIT_USAGE;
    }
    let mut world = match build_from(config, registry) {
        Ok(w) => w,
        Err(code) => return code,
    };
    let log = match run_world(&mut world, iterations) {
        Ok(log) => log,
        Err(code) => return code,
    };
    if let Some(path) = log_path {
        if let Err(code) = write_log_to(&log, path) {
            return code;
        }
    }
    if let Some(dir) = export_dir {
        if let Err(code) = export_point_clouds(&world, dir) {
            return code;
        }
    }
    EXIT_OK
}

fn export_point_clouds(world: &World, dir: &Path) -> Result<(), u8> {
    let write_err = |path: &Path, msg: String| {
        eprintln!("gemini: cannot write {}: {msg}", path.display());
        EXIT_WRITE
    };
    std::fs::create_dir_all(dir).map_err(|e| write_err(dir, e.to_string()))?;
    for &entity in world.entities() {
        if !world.has_component(entity, PointCloud::NAME) {
            continue;
        }
        let cloud = world.component_ref::<PointCloud>(entity).expect("idle world");
        let stem = world
            .entity_name(entity)
            .map(|n| n.replace(['/', ' '], "_"))
            .unwrap_or_else(|| format!("entity{entity}"));
        let path = dir.join(format!("{stem}.ply"));
        let mut file = std::fs::File::create(&path).map_err(|e| write_err(&path, e.to_string()))?;
        write_point_cloud_ply(&cloud, &mut file).map_err(|e| write_err(&path, e.to_string()))?;
    }
    Ok(())
}

fn cmd_record(config: &Path, iterations: u64, golden: &Path, registry: &Registry) -> u8 {
    if iterations == 0 {
        eprintln!("gemini: --iterations must be >= 1");
        return EXIT_USAGE;
    }
    let mut world = match build_from(config, registry) {
        Ok(w) => w,
        Err(code) => return code,
    };
    let log = match run_world(&mut world, iterations) {
        Ok(log) => log,
        Err(code) => return code,
    };
    if golden.exists() {
        eprintln!("gemini: replacing existing golden {}", golden.display());
    }
    if let Err(code) = write_log_to(&log, golden) {
        return code;
    }
    eprintln!(
        "gemini: recorded {} rows over {} iteration(s) to {}",
        log.rows().len(),
        iterations,
        golden.display()
    );
    EXIT_OK
}

fn cmd_check(config: &Path, golden: &Path, diff_out: Option<&Path>, registry: &Registry) -> u8 {
    // Build first: configuration errors outrank golden-log problems.
    let mut world = match build_from(config, registry) {
        Ok(w) => w,
        Err(code) => return code,
    };
    let golden_log = match statelog::read_log_file(golden) {
        Ok(log) => log,
        Err(e) => {
            eprintln!("gemini: cannot read golden {}: {e}", golden.display());
            return EXIT_IO;
        }
    };
    let candidate = match run_world(&mut world, golden_log.max_iteration()) {
        Ok(log) => log,
        Err(code) => return code,
    };
    let report = compare_logs(&golden_log, &candidate);
    if let Some(path) = diff_out {
        if let Err(code) = write_diff_csv(&report, path) {
            return code;
        }
    }
    if report.passes() {
        eprintln!("gemini: check passed ({} golden rows)", golden_log.rows().len());
        EXIT_OK
    } else {
        let lines = report.lines();
        eprintln!(
            "gemini: check FAILED: {} missing, {} extra, {} changed",
            report.missing.len(),
            report.extra.len(),
            report.changed.len()
        );
        for line in lines.iter().take(20) {
            eprintln!("  {line}");
        }
        if lines.len() > 20 {
            eprintln!("  ... {} more", lines.len() - 20);
        }
        EXIT_MISMATCH
    }
}

fn write_diff_csv(report: &DiffReport, path: &Path) -> Result<(), u8> {
    let mut text = String::from("status,entity,iteration,component,attribute,golden,candidate\n");
    for row in &report.missing {
        text.push_str(&format!(
            "missing,{},{},{},{},{},\n",
            row.entity,
            row.iteration,
            row.component,
            row.attribute,
            hex_digest(&row.digest)
        ));
    }
    for row in &report.extra {
        text.push_str(&format!(
            "extra,{},{},{},{},,{}\n",
            row.entity,
            row.iteration,
            row.component,
            row.attribute,
            hex_digest(&row.digest)
        ));
    }
    for (row, golden, candidate) in &report.changed {
        text.push_str(&format!(
            "changed,{},{},{},{},{},{}\n",
            row.entity,
            row.iteration,
            row.component,
            row.attribute,
            hex_digest(golden),
            hex_digest(candidate)
        ));
    }
    std::fs::write(path, text).map_err(|e| {
        eprintln!("gemini: cannot write {}: {e}", path.display());
        EXIT_WRITE
    })
}

fn hex_digest(digest: &[u8; 32]) -> String {
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn cmd_graph(config: &Path, out: &Path, registry: &Registry) -> u8 {
    let doc = match config::load_document(config) {
        Ok(doc) => doc,
        Err(e) => {
            eprintln!("gemini: {e}");
            return config_exit_code(&e);
        }
    };
    let graph = match config::emit_pipeline_graph(&doc, registry) {
        Ok(graph) => graph,
        Err(e) => {
            eprintln!("gemini: {e}");
            return config_exit_code(&e);
        }
    };
    if let Err(e) = std::fs::write(out, graph.to_dot()) {
        eprintln!("gemini: cannot write {}: {e}", out.display());
        return EXIT_WRITE;
    }
    EXIT_OK
}
