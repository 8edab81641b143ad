//! Configured runs on disk: `simulate` writes a series, checkpoints and a
//! manifest into a run directory, `report` turns a run directory into a
//! JSON verdict, and `sweep` runs a directory of configs side by side.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 a guarded
//! numerical failure (or a failed verdict).

mod config;
mod report;
mod series;

use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{gaussian_data, read_field, write_field, ComplexField, Grid, GridError, SingularWeight};
use crate::observables::{sample, ObservableError, SampleSpec};
use crate::scattering::ScatterError;
use crate::solver::{SolverError, SolverState};

pub use config::{load_config, parse_config, ConfigError, RunConfig};
pub use report::{run_report, ReportKind, Verdict};
pub use series::{header, lq_column, read_series, write_series};

/// Environment variable that relocates relative `output_dir`s.
pub const OUTPUT_ROOT_ENV: &str = "INLS_OUTPUT_ROOT";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {error}")]
    Io { path: PathBuf, error: std::io::Error },
    #[error("{path}: schema error: {message}")]
    Schema { path: PathBuf, message: String },
    #[error(transparent)]
    Setup(#[from] GridError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error(transparent)]
    Scatter(#[from] ScatterError),
}

impl RunError {
    pub(crate) fn io(path: &Path, error: std::io::Error) -> Self {
        RunError::Io { path: path.to_path_buf(), error }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Solver(_) => EXIT_NUMERICAL,
            _ => EXIT_INPUT,
        }
    }
}

/// Variant name of a solver error, as recorded in manifests.
pub fn solver_error_kind(e: &SolverError) -> &'static str {
    match e {
        SolverError::BoundaryContamination { .. } => "BoundaryContamination",
        SolverError::SpectralTail { .. } => "SpectralTail",
        SolverError::Overflow { .. } => "Overflow",
        SolverError::InvalidStep(_) => "InvalidStep",
        SolverError::Horizon { .. } => "Horizon",
        SolverError::GridMismatch => "GridMismatch",
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    NumericalError,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub exit_code: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointFile {
    pub t: f64,
    pub file: String,
}

/// Provenance of one `simulate` call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub config_hash: String,
    pub version: String,
    pub parallel: bool,
    pub started: String,
    pub finished: String,
    pub steps: i64,
    pub samples: usize,
    pub checkpoints: Vec<CheckpointFile>,
    pub outcome: Outcome,
}

impl RunManifest {
    pub fn exit_code(&self) -> i32 {
        self.outcome.exit_code
    }
}

pub const CONFIG_FILE: &str = "config.json";
pub const SERIES_FILE: &str = "series.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Where a run of `config` named `name` writes its files. A relative
/// `output_dir` is taken relative to `output_root` when one is given.
pub fn resolve_run_dir(config: &RunConfig, name: &str, output_root: Option<&Path>) -> PathBuf {
    let base = match output_root {
        Some(root) if config.output_dir.is_relative() => root.join(&config.output_dir),
        _ => config.output_dir.clone(),
    };
    base.join(name)
}

/// The value of [`OUTPUT_ROOT_ENV`], if set and nonempty.
pub fn output_root_from_env() -> Option<PathBuf> {
    std::env::var_os(OUTPUT_ROOT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value).expect("plain data serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| RunError::io(path, e))
}

pub fn read_manifest(run_dir: &Path) -> Result<RunManifest, RunError> {
    let path = run_dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| RunError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| RunError::Schema { path, message: e.to_string() })
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn checkpoint_name(step: u64) -> String {
    format!("checkpoint_{step:09}.bin")
}

/// Evolves `config` and writes `config.json`, `series.csv`, checkpoint
/// fields and `manifest.json` into `run_dir`.
///
/// Guarded numerical failures are not errors here: the samples taken so
/// far are still written and the manifest records the failure with exit
/// code 2. `Err` means nothing useful could be run.
pub fn simulate(config: &RunConfig, run_dir: &Path) -> Result<RunManifest, RunError> {
    config.validate()?;
    let started = now();
    std::fs::create_dir_all(run_dir).map_err(|e| RunError::io(run_dir, e))?;
    write_json(&run_dir.join(CONFIG_FILE), config)?;

    let grid = Grid::new(config.d as usize, config.extent, config.n)?;
    let weight = SingularWeight::sample(&grid, &config.b)?;
    let u0 = gaussian_data(&grid, &config.gaussian())?;
    let mut state = SolverState::new(u0, config.params(), weight, config.dt, 0.0, config.solver_options())?;

    let spec = SampleSpec { q_list: config.q_list.clone() };
    let wanted: Vec<u64> = config.checkpoints.iter().map(|&t| config.checkpoint_step(t)).collect();
    let mut samples = Vec::new();
    let mut snapshots: Vec<(u64, f64, ComplexField)> = Vec::new();
    let result = state.evolve_with(config.t_final, config.sample_every, |s| {
        samples.push(sample(s, &spec));
        let step = s.steps() as u64;
        if wanted.contains(&step) {
            snapshots.push((step, s.t(), s.field().clone()));
        }
        Ok(())
    });

    write_series(&run_dir.join(SERIES_FILE), &config.q_list, &samples)?;
    let mut checkpoints = Vec::with_capacity(snapshots.len());
    for (step, t, field) in &snapshots {
        let file = checkpoint_name(*step);
        let path = run_dir.join(&file);
        let file_handle = std::fs::File::create(&path).map_err(|e| RunError::io(&path, e))?;
        let mut out = std::io::BufWriter::new(file_handle);
        write_field(&mut out, field).map_err(|e| match e {
            GridError::Io(io) => RunError::io(&path, io),
            other => RunError::Setup(other),
        })?;
        std::io::Write::flush(&mut out).map_err(|e| RunError::io(&path, e))?;
        checkpoints.push(CheckpointFile { t: *t, file });
    }
    let outcome = match &result {
        Ok(()) => Outcome { status: Status::Ok, error_kind: None, error: None, exit_code: EXIT_OK },
        Err(e) => Outcome {
            status: Status::NumericalError,
            error_kind: Some(solver_error_kind(e).to_string()),
            error: Some(e.to_string()),
            exit_code: EXIT_NUMERICAL,
        },
    };
    let manifest = RunManifest {
        config: config.clone(),
        config_hash: config.content_hash(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        parallel: crate::par::is_parallel(),
        started,
        finished: now(),
        steps: state.steps(),
        samples: samples.len(),
        checkpoints,
        outcome,
    };
    write_json(&run_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Loads the checkpoint fields listed in a run's manifest.
pub fn load_checkpoints(run_dir: &Path) -> Result<Vec<(f64, ComplexField)>, RunError> {
    let manifest = read_manifest(run_dir)?;
    manifest
        .checkpoints
        .iter()
        .map(|c| {
            let path = run_dir.join(&c.file);
            let file = std::fs::File::open(&path).map_err(|e| RunError::io(&path, e))?;
            let field = read_field(std::io::BufReader::new(file)).map_err(|e| match e {
                GridError::Io(io) => RunError::io(&path, io),
                other => RunError::Schema { path: path.clone(), message: other.to_string() },
            })?;
            Ok((c.t, field))
        })
        .collect()
}

/// Result of one config in a sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepEntry {
    pub config: PathBuf,
    pub run_dir: Option<PathBuf>,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Simulates one config file into its run directory.
pub fn simulate_file(path: &Path, output_root: Option<&Path>) -> SweepEntry {
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    let config = match load_config(path) {
        Ok(c) => c,
        Err(e) => {
            return SweepEntry {
                config: path.to_path_buf(),
                run_dir: None,
                exit_code: EXIT_INPUT,
                error: Some(e.to_string()),
            }
        }
    };
    let run_dir = resolve_run_dir(&config, &name, output_root);
    let (exit_code, error) = match simulate(&config, &run_dir) {
        Ok(m) => (m.exit_code(), m.outcome.error),
        Err(e) => (e.exit_code(), Some(e.to_string())),
    };
    SweepEntry { config: path.to_path_buf(), run_dir: Some(run_dir), exit_code, error }
}

/// `*.json` files of `dir`, sorted by name.
pub fn sweep_configs(dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let entries = std::fs::read_dir(dir).map_err(|e| RunError::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| RunError::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|x| x == "json") {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

/// Runs every config in `dir`, `jobs` at a time, each into its own run
/// directory. Entries come back in config-name order.
pub fn sweep(dir: &Path, jobs: usize, output_root: Option<&Path>) -> Result<Vec<SweepEntry>, RunError> {
    let configs = sweep_configs(dir)?;
    Ok(run_all(&configs, jobs.max(1), output_root))
}

#[cfg(feature = "parallel")]
fn run_all(configs: &[PathBuf], jobs: usize, output_root: Option<&Path>) -> Vec<SweepEntry> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().expect("thread pool");
    pool.install(|| configs.par_iter().map(|p| simulate_file(p, output_root)).collect())
}

#[cfg(not(feature = "parallel"))]
fn run_all(configs: &[PathBuf], _jobs: usize, output_root: Option<&Path>) -> Vec<SweepEntry> {
    configs.iter().map(|p| simulate_file(p, output_root)).collect()
}
