//! Batch front-end: simulation config, the simulate driver and its output files.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::diagnostics::{self, isoperimetric_ratio, DiagnosticsWriter};
use crate::initcurves::{save_curve_csv, CurveDescriptor, CurveError};
use crate::scheme::{self, MeshGuard, RunError, RunParams, SchemeError, SimulationState};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: line {line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub initial: CurveDescriptor,
    pub n: usize,
    pub tau: f64,
    pub steps: usize,
    pub snapshot_every: usize,
    pub output_dir: PathBuf,
    /// Abort when the shortest edge drops below this fraction of the initial mean edge.
    pub min_edge_factor: f64,
    pub chord_arc_min: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            initial: CurveDescriptor::DEFAULT_BOLA,
            n: 200,
            tau: 1e-2,
            steps: 1500,
            snapshot_every: 100,
            output_dir: PathBuf::from("langmuir-out"),
            min_edge_factor: 0.05,
            chord_arc_min: 0.05,
        }
    }
}

/// Settings that may come from a config file or from flags; `None` leaves the
/// current value alone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub initial: Option<CurveDescriptor>,
    pub n: Option<usize>,
    pub tau: Option<f64>,
    pub steps: Option<usize>,
    pub snapshot_every: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub min_edge_factor: Option<f64>,
    pub chord_arc_min: Option<f64>,
}

impl SimConfig {
    pub fn apply(&mut self, o: ConfigOverrides) {
        if let Some(v) = o.initial {
            self.initial = v;
        }
        if let Some(v) = o.n {
            self.n = v;
        }
        if let Some(v) = o.tau {
            self.tau = v;
        }
        if let Some(v) = o.steps {
            self.steps = v;
        }
        if let Some(v) = o.snapshot_every {
            self.snapshot_every = v;
        }
        if let Some(v) = o.output_dir {
            self.output_dir = v;
        }
        if let Some(v) = o.min_edge_factor {
            self.min_edge_factor = v;
        }
        if let Some(v) = o.chord_arc_min {
            self.chord_arc_min = v;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(ConfigError::Invalid(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        if self.n < 3 {
            return Err(ConfigError::Invalid(format!("n must be at least 3, got {}", self.n)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(ConfigError::Invalid(format!("tau must be positive, got {}", self.tau)));
        }
        if self.snapshot_every == 0 {
            return Err(ConfigError::Invalid("snapshot_every must be at least 1".into()));
        }
        unit("min_edge_factor", self.min_edge_factor)?;
        unit("chord_arc_min", self.chord_arc_min)
    }
}

/// Parse a `key = value` config file. Blank lines and `#` comments are ignored.
pub fn parse_config_file(path: impl AsRef<Path>) -> Result<ConfigOverrides, ConfigError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    parse_config_str(&text).map_err(|(line, message)| ConfigError::Parse { path: path.into(), line, message })
}

fn parse_config_str(text: &str) -> Result<ConfigOverrides, (usize, String)> {
    fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
        value.parse().map_err(|_| format!("bad value `{value}` for `{key}`"))
    }
    let mut o = ConfigOverrides::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: String| (i + 1, m);
        let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim().replace('-', "_"), value.trim());
        match key.as_str() {
            "initial" => o.initial = Some(value.parse().map_err(|e: CurveError| err(e.to_string()))?),
            "n" => o.n = Some(num(&key, value).map_err(err)?),
            "tau" => o.tau = Some(num(&key, value).map_err(err)?),
            "steps" => o.steps = Some(num(&key, value).map_err(err)?),
            "snapshot_every" => o.snapshot_every = Some(num(&key, value).map_err(err)?),
            "out" | "output_dir" => o.output_dir = Some(PathBuf::from(value)),
            "min_edge_factor" => o.min_edge_factor = Some(num(&key, value).map_err(err)?),
            "chord_arc_min" => o.chord_arc_min = Some(num(&key, value).map_err(err)?),
            _ => return Err(err(format!("unknown key `{key}`"))),
        }
    }
    Ok(o)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltReason {
    Completed,
    MeshDegenerate,
    SolveFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub initial: String,
    pub n: usize,
    pub tau: f64,
    pub steps_requested: usize,
    pub steps_completed: usize,
    pub final_time: f64,
    pub initial_length: f64,
    pub initial_area: f64,
    pub final_length: f64,
    pub final_area: f64,
    pub final_isoperimetric_ratio: f64,
    pub halt_reason: HaltReason,
    /// Error text when the run stopped early.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub halt_detail: Option<String>,
}

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Output { path: PathBuf, source: io::Error },
}

pub fn snapshot_name(step: usize) -> String {
    format!("curve_{step:06}.csv")
}

fn write_snapshot(dir: &Path, state: &SimulationState) -> Result<(), SimulateError> {
    let path = dir.join(snapshot_name(state.step));
    save_curve_csv(&path, &state.curve, Some(&state.curvature)).map_err(|e| match e {
        CurveError::Io { path, source } => SimulateError::Output { path, source },
        other => SimulateError::Output { path, source: io::Error::other(other.to_string()) },
    })
}

/// Run a simulation and write snapshots, `diagnostics.csv` and `run.json`
/// into `config.output_dir`. A mesh or solver failure is not an error here;
/// it is reported through [`RunSummary::halt_reason`].
pub fn run_simulation(config: &SimConfig) -> Result<RunSummary, SimulateError> {
    config.validate()?;
    let initial = config.initial.build(config.n).map_err(ConfigError::from)?;
    let dir = config.output_dir.as_path();
    fs::create_dir_all(dir).map_err(|source| SimulateError::Output { path: dir.into(), source })?;

    let diag_path = dir.join("diagnostics.csv");
    let out_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| SimulateError::Output { path, source }
    };
    let mut writer = DiagnosticsWriter::create(&diag_path).map_err(out_err(&diag_path))?;

    let n = initial.len();
    let initial_length = initial.total_length();
    let initial_area = initial.enclosed_area();
    let params = RunParams {
        tau: config.tau,
        steps: config.steps,
        guard: MeshGuard { min_edge: config.min_edge_factor * initial.mean_edge(), chord_arc_min: config.chord_arc_min },
    };

    let result = scheme::run(initial, &params, |state, report| {
        writer.write(&diagnostics::record(state, report)).map_err(out_err(&diag_path))?;
        if state.step % config.snapshot_every == 0 || state.step == config.steps {
            write_snapshot(dir, state)?;
        }
        Ok(())
    });

    let (last, halt_reason, halt_detail) = match result {
        Ok(state) => (state, HaltReason::Completed, None),
        Err(RunError::Sink(e)) => return Err(e),
        Err(RunError::Step { source, last, .. }) => {
            let reason = match source {
                SchemeError::SolveFailed(_) => HaltReason::SolveFailed,
                _ => HaltReason::MeshDegenerate,
            };
            if last.step % config.snapshot_every != 0 {
                write_snapshot(dir, &last)?;
            }
            (*last, reason, Some(source.to_string()))
        }
    };

    let summary = RunSummary {
        initial: config.initial.to_string(),
        n,
        tau: config.tau,
        steps_requested: config.steps,
        steps_completed: last.step,
        final_time: last.time,
        initial_length,
        initial_area,
        final_length: last.curve.total_length(),
        final_area: last.curve.enclosed_area(),
        final_isoperimetric_ratio: isoperimetric_ratio(&last.curve),
        halt_reason,
        halt_detail,
    };
    let json_path = dir.join("run.json");
    let json = serde_json::to_string_pretty(&summary).map_err(|e| SimulateError::Output {
        path: json_path.clone(),
        source: io::Error::other(e),
    })?;
    fs::write(&json_path, json + "\n").map_err(out_err(&json_path))?;
    Ok(summary)
}
