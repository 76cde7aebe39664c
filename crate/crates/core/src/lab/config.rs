//! Strict JSON configuration for single runs and experiments.

use std::f64::consts::{PI, TAU};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{ScalarField, TorusGrid};
use crate::transport::Model;

fn default_cfl() -> f64 {
    0.5
}
fn default_sample_interval() -> f64 {
    0.05
}
fn default_dt_max() -> f64 {
    0.01
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub model: Model,
    #[serde(default)]
    pub eps: f64,
    pub t_final: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_sample_interval")]
    pub sample_interval: f64,
    /// Upper bound on the time step; the CFL limit may reduce it further.
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    #[serde(default)]
    pub initial_data: InitialData,
    #[serde(default)]
    pub stop_on_exit: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 128,
            model: Model::SGeps,
            eps: 0.02,
            t_final: 1.0,
            cfl: default_cfl(),
            sample_interval: default_sample_interval(),
            dt_max: default_dt_max(),
            initial_data: InitialData::default(),
            stop_on_exit: false,
            seed: 0,
            output_dir: default_output_dir(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: String| {
            Err(Error::Parse {
                key: key.into(),
                message,
            })
        };
        if self.n < 32 || !self.n.is_power_of_two() {
            return bad("n", format!("{} is not a power of two >= 32", self.n));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return bad(
                "eps",
                format!("{} must be finite and nonnegative", self.eps),
            );
        }
        if self.model == Model::Euler && self.eps != 0.0 {
            return bad("eps", "Euler runs take eps = 0".into());
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad("t_final", format!("{} must be positive", self.t_final));
        }
        if !(self.cfl > 0.0 && self.cfl <= 2.0) {
            return bad("cfl", format!("{} outside (0, 2]", self.cfl));
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return bad(
                "sample_interval",
                format!("{} must be positive", self.sample_interval),
            );
        }
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return bad("dt_max", format!("{} must be positive", self.dt_max));
        }
        self.initial_data.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `cos(2 pi x) cos(2 pi y) + 0.5 cos(4 pi y)`
    Default,
    /// `2 [cos(2 pi x) cos(2 pi y) + 0.7 cos(4 pi x + 2 pi y)]`
    Steep,
    /// `-4 pi^2 cos(2 pi y)`, whose stream function is `cos(2 pi y)`
    Shear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub p: i64,
    pub q: i64,
    pub amp: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Initial density: a preset name, a scaled preset, or an explicit list of
/// cosine modes `amp cos(2 pi (p x + q y) + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialData {
    Preset(Preset),
    Scaled { preset: Preset, scale: f64 },
    Modes { modes: Vec<Mode> },
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::Preset(Preset::Default)
    }
}

impl InitialData {
    fn validate(&self) -> Result<()> {
        let bad = |message: String| {
            Err(Error::Parse {
                key: "initial_data".into(),
                message,
            })
        };
        match self {
            InitialData::Scaled { scale, .. } if !scale.is_finite() => {
                bad(format!("scale {scale} not finite"))
            }
            InitialData::Modes { modes } => {
                if modes.is_empty() {
                    return bad("empty mode list".into());
                }
                for m in modes {
                    if m.p == 0 && m.q == 0 {
                        return bad("the (0, 0) mode would give a nonzero mean".into());
                    }
                    if !(m.amp.is_finite() && m.phase.is_finite()) {
                        return bad(format!("non-finite mode {m:?}"));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn sample(&self, grid: &TorusGrid) -> ScalarField {
        match self {
            InitialData::Preset(p) => preset_field(*p, grid),
            InitialData::Scaled { preset, scale } => preset_field(*preset, grid).scale(*scale),
            InitialData::Modes { modes } => {
                let f = ScalarField::from_fn(grid, |x, y| {
                    modes
                        .iter()
                        .map(|m| m.amp * (TAU * (m.p as f64 * x + m.q as f64 * y) + m.phase).cos())
                        .sum()
                });
                f.mean_free()
            }
        }
    }
}

fn preset_field(p: Preset, grid: &TorusGrid) -> ScalarField {
    match p {
        Preset::Default => ScalarField::from_fn(grid, |x, y| {
            (TAU * x).cos() * (TAU * y).cos() + 0.5 * (2.0 * TAU * y).cos()
        }),
        Preset::Steep => ScalarField::from_fn(grid, |x, y| {
            2.0 * ((TAU * x).cos() * (TAU * y).cos() + 0.7 * (TAU * (2.0 * x + y)).cos())
        }),
        Preset::Shear => ScalarField::from_fn(grid, |_, y| -4.0 * PI * PI * (TAU * y).cos()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Stability,
    Wasserstein,
    Corrector,
    Lifespan,
    Inequalities,
}

fn default_count() -> usize {
    20
}
fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub eps_list: Vec<f64>,
    #[serde(default)]
    pub base: RunConfig,
    /// Half-open index range into `eps_list` used by the slope fit.
    #[serde(default)]
    pub slope_window: Option<[usize; 2]>,
    /// Samples per checker and seed (inequalities only).
    #[serde(default = "default_count")]
    pub count: usize,
    /// Seeds swept by the inequality suite.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: String| {
            Err(Error::Parse {
                key: key.into(),
                message,
            })
        };
        if self.kind == ExperimentKind::Inequalities {
            if self.count == 0 {
                return bad("count", "must be at least 1".into());
            }
            if self.seeds.is_empty() {
                return bad("seeds", "at least one seed required".into());
            }
            return Ok(());
        }
        self.base.validate().map_err(|e| match e {
            Error::Parse { key, message } => Error::Parse {
                key: format!("base.{key}"),
                message,
            },
            other => other,
        })?;
        let min_len = if self.kind == ExperimentKind::Lifespan {
            2
        } else {
            3
        };
        if self.eps_list.len() < min_len {
            return bad("eps_list", format!("needs at least {min_len} entries"));
        }
        if self.eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return bad("eps_list", "entries must be positive".into());
        }
        if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return bad("eps_list", "must be strictly decreasing".into());
        }
        if let Some([a, b]) = self.slope_window {
            if !(a < b && b <= self.eps_list.len() && b - a >= 2) {
                return bad(
                    "slope_window",
                    format!("[{a}, {b}) is not a valid window of length >= 2"),
                );
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParsedConfig {
    Run(RunConfig),
    Experiment(ExperimentSpec),
}

fn parse_value<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| Error::Parse {
        key: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// Parses a run config or, when a top-level `"kind"` is present, an experiment.
pub fn parse_config(text: &str) -> Result<ParsedConfig> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        key: ".".into(),
        message: e.to_string(),
    })?;
    let is_experiment = value.as_object().is_some_and(|o| o.contains_key("kind"));
    if is_experiment {
        let spec: ExperimentSpec = parse_value(value)?;
        spec.validate()?;
        Ok(ParsedConfig::Experiment(spec))
    } else {
        let cfg: RunConfig = parse_value(value)?;
        cfg.validate()?;
        Ok(ParsedConfig::Run(cfg))
    }
}

impl ParsedConfig {
    /// Canonical JSON form; parsing it again yields the same value.
    pub fn to_canonical_json(&self) -> String {
        match self {
            ParsedConfig::Run(c) => serde_json::to_string(c),
            ParsedConfig::Experiment(s) => serde_json::to_string(s),
        }
        .expect("config serialises")
    }
}
