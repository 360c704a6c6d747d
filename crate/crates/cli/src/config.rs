//! Experiment configuration: a TOML file with top-level keys and sections.
//!
//! ```toml
//! experiment = "check_norm_identity"
//! n = 2
//! p = 2.0
//! output = "out/norm"
//!
//! [params]
//! t_list = [0.5, 1.0, 2.0]
//! ```
//!
//! Unknown keys anywhere are rejected, as are keys an experiment does not
//! use and missing keys it requires.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use toml::{Table, Value};

/// Invalid configuration, naming the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: &str, message: impl Into<String>) -> Self {
        Self { key: key.to_string(), message: message.into() }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid config key `{}`: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: Vec<f64>,
    pub x_max: Vec<f64>,
    pub x_count: Vec<usize>,
    pub u_min: f64,
    pub u_max: f64,
    pub u_count: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusSpec {
    pub min: f64,
    pub max: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeSpec {
    pub y0: f64,
    pub horizon: f64,
    pub steps: usize,
    pub paths: usize,
}

/// Input field for `apply-operator`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum InputSpec {
    /// `y^power · 1_{x_box × [y_min, y_max]}`.
    Indicator { x_box: Vec<[f64; 2]>, y_min: f64, y_max: f64, #[serde(default)] power: i32 },
    Gaussian { center_x: Vec<f64>, center_u: f64, sigma_x: f64, sigma_u: f64, #[serde(default = "default_cutoff")] cutoff: f64 },
    Snapshot { path: String },
}

fn default_cutoff() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    /// One of `m_trans`, `m_leb`, `m_dil`, `m_geo`, `shift`, `block`, `dyadic`.
    pub name: String,
    pub omega: Option<Vec<f64>>,
    pub t: Option<f64>,
    pub k: Option<u32>,
    pub k_min: Option<i32>,
    pub k_max: Option<i32>,
    pub input: InputSpec,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: String,
    n: Option<usize>,
    p: Option<f64>,
    seed: Option<u64>,
    output: Option<String>,
    grid: Option<GridSpec>,
    radii: Option<RadiusSpec>,
    measure: Option<Table>,
    sde: Option<SdeSpec>,
    operator: Option<OperatorSpec>,
    params: Option<Table>,
}

/// Keys and sections an experiment reads.
struct Shape {
    id: &'static str,
    n: bool,
    p: bool,
    seed: bool,
    measure: bool,
    sde: bool,
    apply: bool,
    /// Accepts a `spacing` parameter that `--refine` divides.
    spacing: bool,
}

const fn shape(id: &'static str, n: bool, p: bool, seed: bool, spacing: bool) -> Shape {
    Shape { id, n, p, seed, measure: false, sde: false, apply: false, spacing }
}

const SHAPES: &[Shape] = &[
    shape("check_growth_lemma", true, true, false, false),
    shape("scan_leb_divergence", true, true, false, true),
    shape("scan_dil_endpoint", true, false, false, true),
    shape("scan_weak_type_failure", true, false, false, true),
    shape("check_norm_identity", true, true, false, true),
    shape("check_trans_weak_type", true, false, true, true),
    shape("check_interpolation_lemma", true, false, true, true),
    Shape { measure: true, ..shape("check_random_walk_dichotomy", true, false, false, true) },
    shape("check_dilation_isometry", true, false, true, false),
    shape("check_slice_equivalence", false, false, true, false),
    shape("check_geodesic_blocks", true, false, false, true),
    shape("check_kernel_blowup", true, false, false, false),
    Shape { sde: true, ..shape("check_brownian_drift", true, false, true, false) },
    Shape { apply: true, ..shape("apply-operator", true, false, false, false) },
];

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub experiment: String,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<String>,
    /// Merged parameter table handed to the experiment's parameter struct.
    pub params: Table,
    pub grid: Option<GridSpec>,
    pub radii: Option<RadiusSpec>,
    pub operator: Option<OperatorSpec>,
}

fn toml_error(e: toml::de::Error) -> ConfigError {
    let msg = e.message().to_string();
    // serde names the key in "unknown field `k`" / "missing field `k`".
    let key = msg.split('`').nth(1).unwrap_or("<file>").to_string();
    ConfigError { key, message: msg }
}

fn require<T>(value: &Option<T>, used: bool, key: &str, experiment: &str) -> Result<(), ConfigError> {
    match (value.is_some(), used) {
        (false, true) => Err(ConfigError::new(key, format!("required by experiment {experiment}"))),
        (true, false) => Err(ConfigError::new(key, format!("not used by experiment {experiment}"))),
        _ => Ok(()),
    }
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("--config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(toml_error)?;
        let shape = SHAPES
            .iter()
            .find(|s| s.id == raw.experiment)
            .ok_or_else(|| ConfigError::new("experiment", format!("unknown experiment `{}`", raw.experiment)))?;
        let id = shape.id;
        require(&raw.n, shape.n, "n", id)?;
        require(&raw.p, shape.p, "p", id)?;
        require(&raw.seed, shape.seed, "seed", id)?;
        require(&raw.measure, shape.measure, "measure", id)?;
        require(&raw.sde, shape.sde, "sde", id)?;
        require(&raw.grid, shape.apply, "grid", id)?;
        require(&raw.operator, shape.apply, "operator", id)?;
        if raw.radii.is_some() && !shape.apply {
            return Err(ConfigError::new("radii", format!("not used by experiment {id}")));
        }
        if shape.apply && raw.params.is_some() {
            return Err(ConfigError::new("params", "apply-operator takes no [params]"));
        }

        let mut params = raw.params.clone().unwrap_or_default();
        let mut set = |key: &str, value: Value| -> Result<(), ConfigError> {
            if params.insert(key.to_string(), value).is_some() {
                return Err(ConfigError::new(&format!("params.{key}"), "given both at top level and in [params]"));
            }
            Ok(())
        };
        if !shape.apply {
            if let Some(n) = raw.n {
                set("n", Value::Integer(n as i64))?;
            }
        }
        if let Some(p) = raw.p {
            set("p", Value::Float(p))?;
        }
        if let Some(seed) = raw.seed {
            set("seed", Value::Integer(seed as i64))?;
        }
        if let Some(measure) = &raw.measure {
            for (k, v) in measure {
                set(k, v.clone())?;
            }
        }
        if let Some(sde) = &raw.sde {
            set("y0", Value::Float(sde.y0))?;
            set("horizon", Value::Float(sde.horizon))?;
            set("steps", Value::Integer(sde.steps as i64))?;
            set("paths", Value::Integer(sde.paths as i64))?;
        }
        let cfg = Config {
            experiment: raw.experiment,
            n: raw.n,
            seed: raw.seed,
            output: raw.output,
            params,
            grid: raw.grid,
            radii: raw.radii,
            operator: raw.operator,
        };
        // Surface unknown or mistyped parameters before any computation.
        if shape.apply {
            crate::run::validate_apply(&cfg)?;
        } else {
            crate::run::validate_params(&cfg)?;
        }
        Ok(cfg)
    }

    pub fn uses_seed(&self) -> bool {
        SHAPES.iter().any(|s| s.id == self.experiment && s.seed)
    }

    pub fn uses_spacing(&self) -> bool {
        SHAPES.iter().any(|s| s.id == self.experiment && s.spacing)
    }

    /// Replaces the seed (experiments without a seed ignore it).
    pub fn override_seed(&mut self, seed: u64) {
        if self.uses_seed() {
            self.seed = Some(seed);
            self.params.insert("seed".into(), Value::Integer(seed as i64));
        }
    }

    /// Divides the grid spacing by `factor`: the `spacing` parameter for
    /// experiments, the node counts for `apply-operator`.
    pub fn refine(&mut self, factor: usize) -> Result<(), ConfigError> {
        if factor == 0 {
            return Err(ConfigError::new("--refine", "must be >= 1"));
        }
        if factor == 1 {
            return Ok(());
        }
        if let Some(g) = &mut self.grid {
            g.x_count.iter_mut().for_each(|c| *c = (*c - 1) * factor + 1);
            g.u_count = (g.u_count - 1) * factor + 1;
        } else if self.uses_spacing() {
            let id = &self.experiment;
            let base = match self.params.get("spacing") {
                Some(v) => v.as_float().ok_or_else(|| ConfigError::new("params.spacing", "must be a float"))?,
                None => crate::run::default_spacing(id).unwrap_or(0.05),
            };
            self.params.insert("spacing".into(), Value::Float(base / factor as f64));
        }
        Ok(())
    }

    pub(crate) fn params_as<T: DeserializeOwned>(&self) -> Result<T, ConfigError> {
        Value::Table(self.params.clone()).try_into().map_err(|e: toml::de::Error| {
            let msg = e.message().to_string();
            let key = msg.split('`').nth(1).map_or("params".to_string(), |k| format!("params.{k}"));
            ConfigError { key, message: msg }
        })
    }
}

/// Ids accepted by the `experiment` key.
pub fn experiment_ids() -> impl Iterator<Item = &'static str> {
    SHAPES.iter().map(|s| s.id)
}
