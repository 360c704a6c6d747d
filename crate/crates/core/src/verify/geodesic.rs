//! Shift norm identity and dyadic block decay along a geodesic direction.

use serde::{Deserialize, Serialize};

use super::report::{ExperimentReport, ReportBuilder, Rule};
use crate::error::{Error, Result};
use crate::field::{gaussian_bump, lp_norm, Axis, LogGrid, SampledField};
use crate::group::Direction;
use crate::numeric::{ln_cosh, sech, simpson};
use crate::operators::{dyadic_block, shift_st};

const SIGMA: f64 = 0.3;
const CUTOFF: f64 = 4.0;

fn axis_with_spacing(lo: f64, hi: f64, h: f64) -> Result<Axis> {
    let count = ((hi - lo) / h).ceil() as usize + 1;
    Axis::new(lo, hi, count)
}

/// Gaussian bump at `(0, u0)` on a grid that contains every point `g` with
/// `g γ_{e_1}(t)` in the bump's support for `0 <= t <= t_max`.
fn bump_for_orbits(n: usize, t_max: f64, lift: f64, spacing: f64) -> Result<SampledField> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    if !(spacing > 0.0 && spacing <= 0.1) {
        return Err(Error::InvalidArgument(format!("spacing must lie in (0, 0.1], got {spacing}")));
    }
    let reach = SIGMA * CUTOFF;
    let rise = ln_cosh(t_max);
    let u0 = -(rise + lift);
    // g = h γ(t)^-1: u_g = u_h + ln cosh t and x_g = x_h - e^(u_g) tanh t ω.
    let shift = (u0 + reach + rise).exp() * t_max.tanh();
    let margin = 2.0 * spacing;
    let mut xs = vec![axis_with_spacing(-reach - shift - margin, reach + margin, spacing)?];
    for _ in 1..n {
        xs.push(axis_with_spacing(-reach - margin, reach + margin, spacing)?);
    }
    let ua = axis_with_spacing(u0 - reach - margin, u0 + reach + rise + margin, spacing)?;
    let grid = LogGrid::new(xs, ua)?;
    gaussian_bump(&grid, &vec![0.0; n], u0, SIGMA, SIGMA, CUTOFF)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormIdentityParams {
    pub n: usize,
    pub p: f64,
    pub t_list: Vec<f64>,
    pub spacing: f64,
}

impl Default for NormIdentityParams {
    fn default() -> Self {
        Self { n: 1, p: 1.0, t_list: vec![0.5, 1.0, 2.0], spacing: 0.05 }
    }
}

/// `||S_t f||_p / ||f||_p` for a Gaussian bump against `sech(t)^(n/p)`.
pub fn check_norm_identity(params: &NormIdentityParams) -> Result<ExperimentReport> {
    let NormIdentityParams { n, p, ref t_list, spacing } = *params;
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidExponent(p));
    }
    if t_list.is_empty() || t_list.iter().any(|&t| !(t >= 0.0 && t <= 20.0)) {
        return Err(Error::InvalidArgument("t_list must hold values in [0, 20]".into()));
    }
    let t_max = t_list.iter().cloned().fold(0.0, f64::max);
    let f = bump_for_orbits(n, t_max, 2.0, spacing)?;
    let omega = Direction::axis(n);
    let base = lp_norm(&f, p)?;
    let mut b = ReportBuilder::new("check_norm_identity");
    b.param("n", n).param("p", p).param("t_list", t_list).param("spacing", spacing).param("nodes", f.grid().len());
    for &t in t_list {
        let s = shift_st(&f, &omega, t)?;
        b.counter(&format!("shift[t={t}]"), s.outside_reads());
        let ratio = lp_norm(&s, p)? / base;
        b.check("norm_ratio", t, ratio, sech(t).powf(n as f64 / p), "sech(t)^(n/p)", Rule::Relative(0.02))?;
    }
    Ok(b.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlockParams {
    pub n: usize,
    pub k_max: u32,
    pub spacing: f64,
}

impl Default for BlockParams {
    fn default() -> Self {
        Self { n: 1, k_max: 4, spacing: 0.05 }
    }
}

/// `2^-k ∫_{2^(k-1)}^{2^k} sech(t)^n dt` (`∫_0^1` for `k = 0`).
pub fn block_l1_factor(n: usize, k: u32) -> f64 {
    let (a, b, w) = if k == 0 { (0.0, 1.0, 1.0) } else { (2f64.powi(k as i32 - 1), 2f64.powi(k as i32), 2f64.powi(-(k as i32))) };
    w * simpson(|t| sech(t).powi(n as i32), a, b, 2000)
}

/// `||B_k f||_1 / ||f||_1` for a bump, against the exact factor and the
/// exponential bound `2^n 2^-k (e^(-n 2^(k-1)) - e^(-n 2^k)) / n`.
pub fn check_geodesic_blocks(params: &BlockParams) -> Result<ExperimentReport> {
    let BlockParams { n, k_max, spacing } = *params;
    if k_max == 0 || k_max > 6 {
        return Err(Error::InvalidArgument(format!("k_max must lie in 1..=6, got {k_max}")));
    }
    let top = 2f64.powi(k_max as i32);
    let f = bump_for_orbits(n, top, 2.0, spacing)?;
    let omega = Direction::axis(n);
    let base = lp_norm(&f, 1.0)?;
    let nf = n as f64;
    let mut b = ReportBuilder::new("check_geodesic_blocks");
    b.param("n", n).param("k_max", k_max).param("spacing", spacing).param("nodes", f.grid().len());
    let mut first = 0.0;
    let mut last = 0.0;
    for k in 0..=k_max {
        let block = dyadic_block(&f, &omega, k)?;
        b.counter(&format!("block[k={k}]"), block.outside_reads());
        let ratio = lp_norm(&block, 1.0)? / base;
        b.check("block_ratio_exact", k as f64, ratio, block_l1_factor(n, k), "2^-k times integral of sech(t)^n over the block", Rule::Relative(0.03))?;
        if k >= 1 {
            let a = 2f64.powi(k as i32 - 1);
            let bound = 2f64.powi(n as i32) * 2f64.powi(-(k as i32)) * ((-nf * a).exp() - (-nf * 2.0 * a).exp()) / nf;
            b.check("block_ratio_bound", k as f64, ratio, bound, "sech^n <= 2^n e^(-n t) integrated over the block", Rule::AtMost(0.05))?;
        } else {
            first = ratio;
        }
        last = ratio;
    }
    b.check("last_over_first_block", k_max as f64, last / first, 1e-3, "block norms summable: last term below 1e-3 of the first", Rule::AtMost(0.0))?;
    Ok(b.finish())
}
