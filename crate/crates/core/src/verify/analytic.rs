//! Experiments on closed-form quantities: the divergence integrand, the
//! dominating kernel and the logarithmic interpolation inequality.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::report::{ExperimentReport, ReportBuilder, Rule};
use super::{experiment_rng, stream};
use crate::error::{Error, Result};
use crate::field::{lp_norm, weak_l1_norm_exact, Axis, LogGrid, SampledField};
use crate::numeric::simpson;
use crate::operators::{phi_l1_norm, v_n, DilationKernelSpec};

/// `e^(n u) / (1 + u)^p`.
pub fn growth_integrand(n: usize, p: f64, u: f64) -> f64 {
    (n as f64 * u).exp() / (1.0 + u).powf(p)
}

/// `∫_0^U e^(n u) / (1 + u)^p du` by composite Simpson.
pub fn growth_integral(n: usize, p: f64, upper: f64) -> f64 {
    if upper <= 0.0 {
        return 0.0;
    }
    let intervals = ((upper * 400.0).ceil() as usize).max(64);
    simpson(|u| growth_integrand(n, p, u), 0.0, upper, intervals)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrowthParams {
    pub n: usize,
    pub p: f64,
    pub u_max: f64,
    /// Threshold the integrand must exceed beyond the computed `u0`.
    pub threshold: f64,
}

impl Default for GrowthParams {
    fn default() -> Self {
        Self { n: 1, p: 2.0, u_max: 20.0, threshold: 1e6 }
    }
}

/// Growth of `e^(n u)/(1+u)^p`: value at 0, doubling ratios of its integral
/// and a computed point beyond which it exceeds a threshold.
pub fn check_growth_lemma(params: &GrowthParams) -> Result<ExperimentReport> {
    let GrowthParams { n, p, u_max, threshold } = *params;
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidExponent(p));
    }
    if !(u_max > 0.0 && u_max <= 600.0 / n as f64) {
        return Err(Error::InvalidArgument(format!("u_max must lie in (0, {}], got {u_max}", 600.0 / n as f64)));
    }
    if !(threshold > 1.0) {
        return Err(Error::InvalidArgument(format!("threshold must exceed 1, got {threshold}")));
    }
    let nf = n as f64;
    let mut b = ReportBuilder::new("check_growth_lemma");
    b.param("n", n).param("p", p).param("u_max", u_max).param("threshold", threshold);

    b.check("integrand", 0.0, growth_integrand(n, p, 0.0), 1.0, "e^0 / 1^p", Rule::Relative(1e-12))?;
    let ten = 10f64.min(u_max);
    b.check(
        "integrand",
        ten,
        growth_integrand(n, p, ten),
        (nf * ten).exp() / (1.0 + ten).powf(p),
        "closed form e^(n u) / (1 + u)^p",
        Rule::Relative(1e-12),
    )?;

    for &upper in &[u_max / 4.0, u_max / 2.0] {
        let ratio = growth_integral(n, p, 2.0 * upper) / growth_integral(n, p, upper);
        b.check(
            "integral_doubling_ratio",
            upper,
            ratio,
            (nf * upper / 2.0).exp(),
            "lower bound e^(n U / 2) for I(2U) / I(U)",
            Rule::AtLeast(0.0),
        )?;
    }

    // The integrand increases past u = p/n - 1; bisect for the crossing.
    let start = (p / nf - 1.0).max(0.0);
    let mut hi = start.max(1.0);
    while growth_integrand(n, p, hi) <= threshold {
        hi *= 2.0;
    }
    let mut lo = start;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if growth_integrand(n, p, mid) > threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let u0 = hi;
    b.note("u0", u0);
    let beyond = (0..=1000)
        .map(|i| growth_integrand(n, p, u0 + 10.0 * i as f64 / 1000.0))
        .fold(f64::INFINITY, f64::min);
    b.check("min_integrand_beyond_u0", u0, beyond, threshold, "integrand exceeds threshold past u0", Rule::AtLeast(0.0))?;
    Ok(b.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelParams {
    pub n: usize,
    pub p_list: Vec<f64>,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self { n: 1, p_list: vec![2.0, 1.1, 1.01] }
    }
}

/// `L^1` norm of the dominating kernel against quadrature, its domination of
/// the truncated kernels, and its growth as `p -> 1`.
pub fn check_kernel_blowup(params: &KernelParams) -> Result<ExperimentReport> {
    let n = params.n;
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    if params.p_list.is_empty() {
        return Err(Error::InvalidArgument("p_list must not be empty".into()));
    }
    let mut b = ReportBuilder::new("check_kernel_blowup");
    b.param("n", n).param("p_list", &params.p_list);
    let mut prev: Option<f64> = None;
    for &p in &params.p_list {
        let norm = phi_l1_norm(n, p)?;
        let spec = DilationKernelSpec::new(n, p, 1.0)?;
        let alpha = spec.alpha();
        let length = 60.0 / alpha;
        let quad = simpson(|t| spec.dominating(t), 0.0, length, ((length / 0.005) as usize).max(1000));
        b.check("phi_l1_norm", p, norm, quad, "quadrature of e^(-alpha t) / V_n(1) on [0, 60/alpha]", Rule::Relative(1e-9))?;
        let v1 = v_n(1.0, n)?;
        b.check("phi_l1_norm_identity", p, norm * v1 * alpha, 1.0, "||Phi||_1 = 1 / (V_n(1) alpha)", Rule::Relative(1e-12))?;

        let mut worst: f64 = 0.0;
        for &r in &[1.0, 2.0, 5.0, 20.0] {
            let spec = DilationKernelSpec::new(n, p, r)?;
            for i in 0..=4000 {
                let t = r * i as f64 / 4000.0;
                worst = worst.max(spec.kernel(t) / spec.dominating(t));
            }
        }
        b.check("max_kernel_over_phi", p, worst, 1.0, "K_r <= Phi for r >= 1", Rule::AtMost(1e-12))?;
        if let Some(q) = prev {
            b.check("phi_norm_growth", p, norm / q, 1.0, "||Phi||_1 increases as p decreases to 1", Rule::Exceeds)?;
        }
        b.note(&format!("phi_l1_norm[p={p}]"), norm);
        prev = Some(norm);
    }
    Ok(b.finish())
}

/// `φ(t) = t (1 + ln(B / t))` on `(0, B]`, `φ(0) = 0`.
pub fn interpolation_phi(t: f64, bound: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        t * (1.0 + (bound / t).ln())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterpolationParams {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub spacing: f64,
}

impl Default for InterpolationParams {
    fn default() -> Self {
        Self { n: 1, trials: 20, seed: 0, spacing: 0.05 }
    }
}

/// Random nonnegative step field: a few anti-aliased boxes with random
/// amplitudes, in `[-1, 1]^n × [-1, 1]` (log coordinates).
pub(crate) fn random_step_field<R: Rng>(grid: &LogGrid, rng: &mut R, boxes: usize) -> Result<SampledField> {
    let n = grid.dim();
    let mut total = SampledField::zeros(grid);
    for _ in 0..boxes {
        let xb: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let a: f64 = rng.random_range(-1.0..0.8);
                (a, a + rng.random_range(0.1..1.0f64).min(1.0 - a))
            })
            .collect();
        let ua: f64 = rng.random_range(-1.0..0.8);
        let ub = ua + rng.random_range(0.1..1.0f64).min(1.0 - ua);
        let amp: f64 = rng.random_range(0.1..5.0);
        let bx = crate::field::indicator_box(grid, &xb, (ua.exp(), ub.exp()), None)?;
        total = total.add(&bx.scale(amp))?;
    }
    Ok(total)
}

pub(crate) fn unit_grid(n: usize, spacing: f64) -> Result<LogGrid> {
    let xs = (0..n).map(|_| Axis::cell_aligned(-1.0, 1.0, spacing, 0)).collect::<Result<Vec<_>>>()?;
    LogGrid::new(xs, Axis::cell_aligned(-1.0, 1.0, spacing, 0)?)
}

/// Logarithmic interpolation `||h||_1 <= φ(||h||_{1,∞})` with `B = m(S) ||h||_∞`
/// on random step fields, and the elementary properties of `φ`.
pub fn check_interpolation_lemma(params: &InterpolationParams) -> Result<ExperimentReport> {
    let InterpolationParams { n, trials, seed, spacing } = *params;
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let grid = unit_grid(n, spacing)?;
    let mut b = ReportBuilder::new("check_interpolation_lemma");
    b.param("n", n).param("trials", trials).param("seed", seed).param("spacing", spacing);

    let mut rng = experiment_rng(seed, stream::INTERPOLATION);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_lambda: f64 = 0.0;
    for _ in 0..trials {
        let boxes = rng.random_range(1..5);
        let h = random_step_field(&grid, &mut rng, boxes)?;
        let weak = weak_l1_norm_exact(&h);
        let support = h.support_measure();
        let sup = h.max_abs();
        let l1 = lp_norm(&h, 1.0)?;
        worst_lambda = worst_lambda.max(weak / support / sup);
        worst_ratio = worst_ratio.max(l1 / interpolation_phi(weak, support * sup));
    }
    b.check("max_lambda0_over_sup", 0.0, worst_lambda, 1.0, "lambda0 = ||h||_{1,inf} / m(S) <= ||h||_inf", Rule::AtMost(1e-12))?;
    b.check("max_l1_over_phi", 0.0, worst_ratio, 1.0, "||h||_1 <= phi(||h||_{1,inf})", Rule::AtMost(0.01))?;

    let ind = h_indicator(&grid)?;
    let weak = weak_l1_norm_exact(&ind);
    let support = ind.support_measure();
    b.check("indicator_l1", support, lp_norm(&ind, 1.0)?, interpolation_phi(weak, support), "equality for indicators", Rule::Relative(1e-12))?;

    let bound = 3.7;
    let steps: Vec<f64> = (0..=1000).map(|i| interpolation_phi(bound * i as f64 / 1000.0, bound)).collect();
    let min_increment = steps.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    b.check("phi_min_increment", bound, min_increment, 0.0, "phi is nondecreasing on [0, B]", Rule::Exceeds)?;
    b.check("phi_at_bound", bound, interpolation_phi(bound, bound), bound, "phi(B) = B", Rule::Relative(1e-15))?;
    let e = std::f64::consts::E;
    b.check("phi_at_bound_over_e", bound, interpolation_phi(bound / e, bound), 2.0 * bound / e, "phi(B/e) = 2B/e", Rule::Relative(1e-14))?;
    Ok(b.finish())
}

fn h_indicator(grid: &LogGrid) -> Result<SampledField> {
    SampledField::from_fn(grid, |x, u| if x[0] < 0.3 && u > -0.2 { 1.0 } else { 0.0 })
}
