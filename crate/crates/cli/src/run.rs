//! Dispatch from a validated [`Config`] to an experiment, and artifact output.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use affine_maximal::field::{gaussian_bump, indicator_box, lp_norm, read_snapshot, weak_l1_norm_exact, write_snapshot};
use affine_maximal::operators::{dyadic_block, dyadic_maximal, m_dil, m_geo, m_leb, m_trans, shift_st};
use affine_maximal::verify::{self, ExperimentReport, ReportBuilder};
use affine_maximal::{Axis, Direction, Error, LogGrid, RadiusSet, SampledField};

use crate::config::{Config, ConfigError, InputSpec, OperatorSpec};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Compute(Error),
    Io(std::io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Compute(Error::Precondition(m)) => write!(f, "invalid config key `measure`: precondition violated: {m}"),
            RunError::Compute(e) => write!(f, "error: {e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Compute(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

/// Result of a run: the report and, for `apply-operator`, the output field.
pub struct Outcome {
    pub report: ExperimentReport,
    pub field: Option<SampledField>,
}

macro_rules! dispatch {
    ($cfg:expr, $action:ident) => {
        match $cfg.experiment.as_str() {
            "check_growth_lemma" => $action!($cfg, verify::GrowthParams, verify::check_growth_lemma),
            "scan_leb_divergence" => $action!($cfg, verify::LebParams, verify::scan_leb_divergence),
            "scan_dil_endpoint" => $action!($cfg, verify::DilEndpointParams, verify::scan_dil_endpoint),
            "scan_weak_type_failure" => $action!($cfg, verify::WeakTypeParams, verify::scan_weak_type_failure),
            "check_norm_identity" => $action!($cfg, verify::NormIdentityParams, verify::check_norm_identity),
            "check_trans_weak_type" => $action!($cfg, verify::TransWeakParams, verify::check_trans_weak_type),
            "check_interpolation_lemma" => $action!($cfg, verify::InterpolationParams, verify::check_interpolation_lemma),
            "check_random_walk_dichotomy" => $action!($cfg, verify::DichotomyParams, verify::check_random_walk_dichotomy),
            "check_dilation_isometry" => $action!($cfg, verify::IsometryParams, verify::check_dilation_isometry),
            "check_slice_equivalence" => $action!($cfg, verify::SliceParams, verify::check_slice_equivalence),
            "check_geodesic_blocks" => $action!($cfg, verify::BlockParams, verify::check_geodesic_blocks),
            "check_kernel_blowup" => $action!($cfg, verify::KernelParams, verify::check_kernel_blowup),
            "check_brownian_drift" => $action!($cfg, verify::BrownianParams, verify::check_brownian_drift),
            other => Err(ConfigError::new("experiment", format!("unknown experiment `{other}`")).into()),
        }
    };
}

macro_rules! validate_one {
    ($cfg:expr, $params:ty, $f:path) => {
        $cfg.params_as::<$params>().map(|_| ())
    };
}

macro_rules! run_one {
    ($cfg:expr, $params:ty, $f:path) => {{
        let params = $cfg.params_as::<$params>()?;
        Ok::<_, RunError>($f(&params)?)
    }};
}

pub(crate) fn validate_params(cfg: &Config) -> Result<(), ConfigError> {
    dispatch!(cfg, validate_one)
}

/// Checks the `apply-operator` sections without building any field.
pub(crate) fn validate_apply(cfg: &Config) -> Result<(), ConfigError> {
    let op = cfg.operator.as_ref().ok_or_else(|| ConfigError::new("operator", "required by apply-operator"))?;
    let grid = build_grid(cfg).map_err(|e| match e {
        RunError::Config(c) => c,
        other => ConfigError::new("grid", other.to_string()),
    })?;
    let n = grid.dim();
    let missing = |key: &str| ConfigError::new(key, format!("required by operator {}", op.name));
    match op.name.as_str() {
        "m_trans" | "m_leb" | "m_dil" | "m_geo" => {}
        "shift" if op.t.is_none() => return Err(missing("operator.t")),
        "block" if op.k.is_none() => return Err(missing("operator.k")),
        "dyadic" if op.k_min.is_none() => return Err(missing("operator.k_min")),
        "dyadic" if op.k_max.is_none() => return Err(missing("operator.k_max")),
        "shift" | "block" | "dyadic" => {}
        other => return Err(ConfigError::new("operator.name", format!("unknown operator `{other}`"))),
    }
    if let Some(w) = &op.omega {
        if w.len() != n {
            return Err(ConfigError::new("operator.omega", format!("needs {n} entries")));
        }
    }
    if let Some(r) = &cfg.radii {
        RadiusSet::geometric(r.min, r.max, r.ratio).map_err(|e| ConfigError::new("radii", e.to_string()))?;
    }
    match &op.input {
        InputSpec::Indicator { x_box, .. } if x_box.len() != n => Err(ConfigError::new("operator.input.x_box", format!("needs {n} intervals"))),
        InputSpec::Gaussian { center_x, .. } if center_x.len() != n => Err(ConfigError::new("operator.input.center_x", format!("needs {n} entries"))),
        _ => Ok(()),
    }
}

/// Default grid spacing of experiments that accept one.
pub(crate) fn default_spacing(id: &str) -> Option<f64> {
    Some(match id {
        "scan_leb_divergence" => verify::LebParams::default().spacing,
        "scan_dil_endpoint" => verify::DilEndpointParams::default().spacing,
        "scan_weak_type_failure" => verify::WeakTypeParams::default().spacing,
        "check_norm_identity" => verify::NormIdentityParams::default().spacing,
        "check_trans_weak_type" => verify::TransWeakParams::default().spacing,
        "check_interpolation_lemma" => verify::InterpolationParams::default().spacing,
        "check_random_walk_dichotomy" => verify::DichotomyParams::default().spacing,
        "check_geodesic_blocks" => verify::BlockParams::default().spacing,
        _ => return None,
    })
}

/// Runs the configured experiment.
pub fn run(cfg: &Config) -> Result<Outcome, RunError> {
    if cfg.experiment == "apply-operator" {
        return apply_operator(cfg);
    }
    let report = dispatch!(cfg, run_one)?;
    Ok(Outcome { report, field: None })
}

fn build_grid(cfg: &Config) -> Result<LogGrid, RunError> {
    let g = cfg.grid.as_ref().ok_or_else(|| ConfigError::new("grid", "required by apply-operator"))?;
    let n = cfg.n.unwrap_or(0);
    if g.x_min.len() != n || g.x_max.len() != n || g.x_count.len() != n {
        return Err(ConfigError::new("grid.x_min", format!("x_min, x_max and x_count need {n} entries")).into());
    }
    let xs = (0..n)
        .map(|i| Axis::new(g.x_min[i], g.x_max[i], g.x_count[i]))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ConfigError::new("grid", e.to_string()))?;
    let u = Axis::new(g.u_min, g.u_max, g.u_count).map_err(|e| ConfigError::new("grid.u_min", e.to_string()))?;
    LogGrid::new(xs, u).map_err(|e| ConfigError::new("grid", e.to_string()).into())
}

fn build_input(grid: &LogGrid, spec: &InputSpec) -> Result<SampledField, RunError> {
    let key = "operator.input";
    match spec {
        InputSpec::Indicator { x_box, y_min, y_max, power } => {
            let boxes: Vec<(f64, f64)> = x_box.iter().map(|b| (b[0], b[1])).collect();
            let power = *power;
            let amp = move |y: f64| y.powi(power);
            indicator_box(grid, &boxes, (*y_min, *y_max), if power == 0 { None } else { Some(&amp) })
                .map_err(|e| ConfigError::new(key, e.to_string()).into())
        }
        InputSpec::Gaussian { center_x, center_u, sigma_x, sigma_u, cutoff } => {
            gaussian_bump(grid, center_x, *center_u, *sigma_x, *sigma_u, *cutoff).map_err(|e| ConfigError::new(key, e.to_string()).into())
        }
        InputSpec::Snapshot { path } => {
            let file = fs::File::open(path).map_err(|e| ConfigError::new("operator.input.path", format!("{path}: {e}")))?;
            let f = read_snapshot(BufReader::new(file)).map_err(|e| ConfigError::new("operator.input.path", e.to_string()))?;
            if f.grid() != grid {
                return Err(ConfigError::new("operator.input.path", "snapshot grid differs from [grid]").into());
            }
            Ok(f)
        }
    }
}

fn direction(op: &OperatorSpec, n: usize) -> Result<Direction, RunError> {
    let omega = op.omega.clone().unwrap_or_else(|| Direction::axis(n).as_slice().to_vec());
    if omega.len() != n {
        return Err(ConfigError::new("operator.omega", format!("needs {n} entries")).into());
    }
    Direction::new(omega).map_err(|e| ConfigError::new("operator.omega", e.to_string()).into())
}

fn need<T>(op: &OperatorSpec, value: Option<T>, key: &str) -> Result<T, RunError> {
    value.ok_or_else(|| ConfigError::new(key, format!("required by operator {}", op.name)).into())
}

fn apply_operator(cfg: &Config) -> Result<Outcome, RunError> {
    let op = cfg.operator.as_ref().ok_or_else(|| ConfigError::new("operator", "required by apply-operator"))?;
    let grid = build_grid(cfg)?;
    let n = grid.dim();
    let radii = match &cfg.radii {
        Some(r) => RadiusSet::geometric(r.min, r.max, r.ratio).map_err(|e| ConfigError::new("radii", e.to_string()))?,
        None => RadiusSet::default_for(&grid),
    };
    let input = build_input(&grid, &op.input)?;
    let output = match op.name.as_str() {
        "m_trans" => m_trans(&input, &radii)?,
        "m_leb" => m_leb(&input, &radii)?,
        "m_dil" => m_dil(&input, &radii)?,
        "m_geo" => m_geo(&input, &direction(op, n)?, &radii)?,
        "shift" => shift_st(&input, &direction(op, n)?, need(op, op.t, "operator.t")?)?,
        "block" => dyadic_block(&input, &direction(op, n)?, need(op, op.k, "operator.k")?)?,
        "dyadic" => dyadic_maximal(&input, &direction(op, n)?, need(op, op.k_min, "operator.k_min")?, need(op, op.k_max, "operator.k_max")?)?,
        other => return Err(ConfigError::new("operator.name", format!("unknown operator `{other}`")).into()),
    };
    let mut b = ReportBuilder::new("apply-operator");
    b.param("n", n).param("operator", &op.name).param("nodes", grid.len()).param("radii", radii.as_slice());
    for (name, f) in [("input", &input), ("output", &output)] {
        b.note(&format!("{name}_l1"), lp_norm(f, 1.0)?);
        b.note(&format!("{name}_l2"), lp_norm(f, 2.0)?);
        b.note(&format!("{name}_sup"), f.max_abs());
        b.note(&format!("{name}_weak_l1"), weak_l1_norm_exact(f));
    }
    b.counter("operator", output.outside_reads());
    Ok(Outcome { report: b.finish(), field: Some(output) })
}

/// Paths of the artifacts written for a prefix.
pub struct Artifacts {
    pub json: PathBuf,
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub field: Option<PathBuf>,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes `<prefix>.json`, `<prefix>.csv`, `<prefix>.txt` and, when present,
/// the output field as `<prefix>.field`.
pub fn write_artifacts(outcome: &Outcome, prefix: &Path) -> Result<Artifacts, RunError> {
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let art = Artifacts {
        json: with_suffix(prefix, ".json"),
        csv: with_suffix(prefix, ".csv"),
        summary: with_suffix(prefix, ".txt"),
        field: outcome.field.as_ref().map(|_| with_suffix(prefix, ".field")),
    };
    fs::write(&art.json, outcome.report.to_json())?;
    let mut csv = Vec::new();
    outcome.report.write_csv(&mut csv)?;
    fs::write(&art.csv, csv)?;
    fs::write(&art.summary, outcome.report.summary())?;
    if let (Some(f), Some(path)) = (&outcome.field, &art.field) {
        let mut buf = Vec::new();
        write_snapshot(f, &mut buf)?;
        fs::write(path, buf)?;
    }
    Ok(art)
}
