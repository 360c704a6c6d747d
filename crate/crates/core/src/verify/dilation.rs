//! Divergence scans for the vertical maximal operators.

use serde::{Deserialize, Serialize};

use super::analytic::growth_integral;
use super::report::{ExperimentReport, ReportBuilder, Rule};
use crate::error::{Error, Result};
use crate::field::{
    indicator_box, level_set_measure_in, lp_norm, lp_norm_in, lp_power_in, weak_l1_norm, Axis, LogGrid, RadiusSet,
    SampledField, UWindow, DEFAULT_LAMBDA_SAMPLES,
};
use crate::numeric::{linear_fit, simpson};
use crate::operators::{m_dil, m_leb};

const COARSEST_SPACING: f64 = 0.05;

/// Grid over `[0,1]^n × [u_lo, u_hi]` whose dual cells resolve `x ∈ [0,1]`
/// exactly, with one padding cell in `u`.
fn column_grid(n: usize, u_lo: f64, u_hi: f64, du: f64) -> Result<LogGrid> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    if !(du > 0.0 && du <= COARSEST_SPACING) {
        return Err(Error::InvalidArgument(format!("u spacing {du} too coarse; need <= {COARSEST_SPACING}")));
    }
    let xs = (0..n).map(|_| Axis::cell_aligned(0.0, 1.0, 0.5, 0)).collect::<Result<Vec<_>>>()?;
    LogGrid::new(xs, Axis::cell_aligned(u_lo, u_hi, du, 1)?)
}

/// Radii `h, 2h, ...` up to at least `reach` on the grid's `u` mesh.
fn mesh_radii(grid: &LogGrid, reach: f64) -> Result<RadiusSet> {
    let h = grid.u_axis().spacing();
    let steps = (reach / h).ceil() + 1.0;
    RadiusSet::linear(h, steps * h, h)
}

/// Minimum of `ratio(value, u)` over nodes with `x ∈ (0,1)^n` and `u ∈ (lo, hi)`.
fn min_over_region<F: Fn(f64, f64) -> f64>(f: &SampledField, lo: f64, hi: f64, ratio: F) -> f64 {
    let grid = f.grid();
    let cu = grid.u_axis().count;
    let mut x = vec![0.0; grid.dim()];
    let mut best = f64::INFINITY;
    for col in 0..grid.columns() {
        grid.column_coords(col, &mut x);
        if !x.iter().all(|&v| v > 0.0 && v < 1.0) {
            continue;
        }
        for iu in 0..cu {
            let u = grid.node_u(iu);
            if u > lo && u < hi {
                best = best.min(ratio(f.at(col, iu), u));
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LebParams {
    pub n: usize,
    pub p: f64,
    pub depths: Vec<f64>,
    pub spacing: f64,
}

impl Default for LebParams {
    fn default() -> Self {
        Self { n: 1, p: 2.0, depths: vec![2.0, 4.0, 8.0], spacing: 0.01 }
    }
}

/// `||M_Leb 1_K||_p^p` restricted to `u ∈ (-U, 0)` for `K = [0,1]^n × [1, e]`,
/// against the integral `∫_0^U e^(n u) / (1 + u)^p du`.
pub fn scan_leb_divergence(params: &LebParams) -> Result<ExperimentReport> {
    let LebParams { n, p, ref depths, spacing } = *params;
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidExponent(p));
    }
    if depths.is_empty() || depths.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
        return Err(Error::InvalidArgument("depths must be positive".into()));
    }
    let nf = n as f64;
    let mut b = ReportBuilder::new("scan_leb_divergence");
    b.param("n", n).param("p", p).param("depths", depths).param("spacing", spacing);
    let mut sorted = depths.clone();
    sorted.sort_by(f64::total_cmp);

    let mut powers = Vec::new();
    for &depth in &sorted {
        let grid = column_grid(n, -depth, 1.0, spacing)?;
        let f = indicator_box(&grid, &vec![(0.0, 1.0); n], (1.0, std::f64::consts::E), None)?;
        let radii = mesh_radii(&grid, depth + 1.0)?;
        let m = m_leb(&f, &radii)?;
        b.counter("m_leb", m.outside_reads());

        let input = lp_power_in(&f, p, UWindow::ALL)?;
        b.check("input_norm_p_power", depth, input, -(-nf).exp_m1() / nf, "||1_K||_p^p = (1 - e^-n) / n", Rule::Relative(0.02))?;
        let power = lp_power_in(&m, p, UWindow::new(-depth, 0.0))?;
        let integral = growth_integral(n, p, depth);
        b.check(
            "restricted_output_p_power",
            depth,
            power,
            0.5 * integral,
            "lower bound 0.5 * integral of e^(n u) / (1 + u)^p over (0, U)",
            Rule::AtLeast(0.0),
        )?;
        let pointwise = min_over_region(&m, -depth, 0.0, |v, u| v * (1.0 - u));
        b.check("min_output_times_one_minus_u", depth, pointwise, 1.0, "M_Leb 1_K >= 1 / (1 - ln y) below K", Rule::AtLeast(0.05))?;
        b.note(&format!("growth_integral[U={depth}]"), integral);
        powers.push((depth, power, integral));
    }
    for w in powers.windows(2) {
        let (d1, p1, i1) = w[0];
        let (d2, p2, i2) = w[1];
        b.check(
            "restricted_output_ratio",
            d2 / d1,
            p2 / p1,
            i2 / i1,
            "ratio of the lower-bound integrals on the two windows",
            Rule::AtLeast(0.15),
        )?;
    }
    Ok(b.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DilEndpointParams {
    pub n: usize,
    pub eps_list: Vec<f64>,
    pub spacing: f64,
    /// Largest radius; defaults to `ln(1/ε_min) + 1` plus two cells.
    pub radius_max: Option<f64>,
}

impl Default for DilEndpointParams {
    fn default() -> Self {
        Self { n: 1, eps_list: vec![(-2f64).exp(), (-4f64).exp(), (-6f64).exp()], spacing: 0.01, radius_max: None }
    }
}

/// Exact `∫_{ln ε}^0 M_dil f du` for `f = y^n 1_K`: `M_dil f = n e^(n u) / (1 - e^(-n (1-u)))` below `K`.
pub fn dil_endpoint_exact(n: usize, eps: f64) -> f64 {
    let nf = n as f64;
    let lo = eps.ln();
    simpson(|u| nf / -(-nf * (1.0 - u)).exp_m1(), lo, 0.0, 4000)
}

/// `||M_dil f||_1` restricted to `y ∈ (ε, 1)` for `f = y^n 1_K`; the fitted
/// slope against `ln(1/ε)` should be `n`.
pub fn scan_dil_endpoint(params: &DilEndpointParams) -> Result<ExperimentReport> {
    let DilEndpointParams { n, ref eps_list, spacing, radius_max } = *params;
    if eps_list.len() < 2 {
        return Err(Error::InvalidArgument("eps_list needs at least two values".into()));
    }
    if eps_list.iter().any(|&e| !(e > 0.0 && e < 1.0)) || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("eps_list must be strictly decreasing in (0, 1)".into()));
    }
    let eps_min = *eps_list.last().unwrap();
    let needed = (1.0 / eps_min).ln() + 1.0;
    let reach = radius_max.unwrap_or(needed + 2.0 * spacing);
    if reach < needed {
        return Err(Error::InvalidRadii);
    }
    let nf = n as f64;
    let mut b = ReportBuilder::new("scan_dil_endpoint");
    b.param("n", n).param("eps_list", eps_list).param("spacing", spacing).param("radius_max", reach);

    let cells = ((-eps_min.ln()) / spacing).ceil();
    let grid = column_grid(n, -cells * spacing, 1.0, spacing)?;
    let amplitude = move |y: f64| y.powi(n as i32);
    let f = indicator_box(&grid, &vec![(0.0, 1.0); n], (1.0, std::f64::consts::E), Some(&amplitude))?;
    let m = m_dil(&f, &mesh_radii(&grid, reach)?)?;
    b.counter("m_dil", m.outside_reads());

    b.check("input_norm", 0.0, lp_norm(&f, 1.0)?, 1.0, "integral of y^n over K against e^(-n u) du dx", Rule::Relative(0.02))?;
    let pointwise = min_over_region(&m, eps_min.ln(), 0.0, |v, u| v / (nf * (nf * u).exp()));
    b.check("min_output_over_n_y_n", eps_min, pointwise, 1.0, "pointwise lower bound M_dil f >= n y^n below K", Rule::AtLeast(0.05))?;

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &eps in eps_list {
        let restricted = lp_norm_in(&m, 1.0, UWindow::new(eps.ln(), 0.0))?;
        let l = (1.0 / eps).ln();
        b.check("restricted_output_norm", eps, restricted, nf * l, "integrated lower bound n ln(1/eps)", Rule::AtLeast(0.05))?;
        b.check(
            "restricted_output_exact",
            eps,
            restricted,
            dil_endpoint_exact(n, eps),
            "quadrature of n e^(n u) / (1 - e^(-n (1 - u))) against Haar measure",
            Rule::Relative(0.02),
        )?;
        xs.push(l);
        ys.push(restricted);
    }
    let (slope, intercept) = linear_fit(&xs, &ys);
    b.note("fit_intercept", intercept);
    b.check("slope", 0.0, slope, nf, "slope n of n ln(1/eps)", Rule::Relative(0.15))?;
    Ok(b.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeakTypeParams {
    pub n: usize,
    pub k_list: Vec<u32>,
    pub u_min: f64,
    pub spacing: f64,
    pub lambda_samples: usize,
}

impl Default for WeakTypeParams {
    fn default() -> Self {
        Self { n: 1, k_list: vec![0, 1, 2, 3], u_min: -2.0, spacing: 0.01, lambda_samples: DEFAULT_LAMBDA_SAMPLES }
    }
}

/// Weak-type test sequence `f_k = y^n 1_{[0,1]^n × [e^k, e^(k+1)]}` under `M_dil`.
pub fn scan_weak_type_failure(params: &WeakTypeParams) -> Result<ExperimentReport> {
    let WeakTypeParams { n, ref k_list, u_min, spacing, lambda_samples } = *params;
    if k_list.is_empty() {
        return Err(Error::InvalidArgument("k_list must not be empty".into()));
    }
    if !(u_min <= -2.0) {
        return Err(Error::InvalidArgument(format!("u_min must be <= -2, got {u_min}")));
    }
    let nf = n as f64;
    let k_max = *k_list.iter().max().unwrap() as f64;
    if nf * (k_max + 1.0) > 600.0 {
        return Err(Error::InvalidArgument(format!("k = {k_max} too large for the grid")));
    }
    let mut b = ReportBuilder::new("scan_weak_type_failure");
    b.param("n", n).param("k_list", k_list).param("u_min", u_min).param("spacing", spacing).param("lambda_samples", lambda_samples);

    let cells = (-u_min / spacing).ceil();
    let u_lo = -cells * spacing;
    let grid = column_grid(n, u_lo, k_max + 1.0, spacing)?;
    let radii = mesh_radii(&grid, k_max + 1.0 - u_lo)?;
    let unit = vec![(0.0, 1.0); n];
    let amplitude = move |y: f64| y.powi(n as i32);

    let mut ratios = Vec::new();
    for &k in k_list {
        let kf = k as f64;
        let f = indicator_box(&grid, &unit, (kf.exp(), (kf + 1.0).exp()), Some(&amplitude))?;
        let m = m_dil(&f, &radii)?;
        b.counter(&format!("m_dil[k={k}]"), m.outside_reads());
        let input = lp_norm(&f, 1.0)?;
        b.note(&format!("input_norm[k={k}]"), input);
        b.check(
            "input_norm",
            kf,
            input,
            (-nf * kf).exp() * -(-nf).exp_m1() / nf,
            "claimed decay e^(-n k) (1 - e^-n) / n of ||f_k||_1",
            Rule::Relative(0.05),
        )?;

        let lambda = nf * (nf * kf).exp() / 2.0;
        let product = lambda * level_set_measure_in(&m, lambda, UWindow::ALL);
        // Lower-bound level set {n e^(n u) > λ} ∩ {u < k} is u ∈ (a, k), clipped to the window.
        let a = (lambda / nf).ln() / nf;
        let window_lb = lambda * ((-nf * a.max(u_lo)).exp() - (-nf * kf).exp()) / nf;
        b.check("level_set_product", kf, product, window_lb, "lambda (e^(-n a) - e^(-n k)) / n on the window", Rule::AtLeast(0.1))?;

        let below = level_set_measure_in(&m, lambda, UWindow::new(f64::NEG_INFINITY, kf));
        let bound = 1.0 / lambda - (-nf * kf).exp() / nf;
        b.check("level_set_below_k", kf, below, bound, "mu(E_lambda) >= 1/lambda - e^(-n k)/n", Rule::AtLeast(0.05))?;

        let lower_field = SampledField::from_fn(&grid, move |_, u| if u < kf { nf * (nf * u).exp() } else { 0.0 })?;
        let lower_measure = level_set_measure_in(&column_mask(&lower_field)?, lambda, UWindow::ALL);
        b.check("lower_bound_field_level_set", kf, lower_measure, bound, "measure of {n e^(n u) > lambda, u < k} = 1/lambda - e^(-n k)/n", Rule::Relative(0.02))?;

        let weak = weak_l1_norm(&m, lambda_samples)?;
        b.note(&format!("weak_norm[k={k}]"), weak);
        ratios.push((kf, weak / input));
    }
    for w in ratios.windows(2) {
        let (k1, r1) = w[0];
        let (k2, r2) = w[1];
        let factor = (r2 / r1).powf(1.0 / (k2 - k1));
        b.note(&format!("weak_ratio[k={k1}]"), r1);
        b.check("weak_ratio_growth_per_unit_k", k2, factor, nf.exp(), "claimed growth e^n per unit k", Rule::AtLeast(0.2))?;
    }
    if let Some(&(k, r)) = ratios.last() {
        b.note(&format!("weak_ratio[k={k}]"), r);
    }
    Ok(b.finish())
}

/// Keeps only columns with every coordinate inside `[0,1]`: the grid's x
/// cells are `[0, 1/2]` and `[1/2, 1]` plus one half-outside node per side.
fn column_mask(f: &SampledField) -> Result<SampledField> {
    let grid = f.grid();
    let cu = grid.u_axis().count;
    let mut x = vec![0.0; grid.dim()];
    let mut values = f.values().to_vec();
    for col in 0..grid.columns() {
        grid.column_coords(col, &mut x);
        if !x.iter().all(|&v| v > 0.0 && v < 1.0) {
            values[col * cu..(col + 1) * cu].iter_mut().for_each(|v| *v = 0.0);
        }
    }
    SampledField::new(grid.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leb_scan_passes() {
        let r = scan_leb_divergence(&LebParams { depths: vec![1.0, 2.0], spacing: 0.02, ..Default::default() }).unwrap();
        assert!(r.pass, "{}", r.summary());
    }

    #[test]
    fn leb_rejects_coarse_grid() {
        assert!(scan_leb_divergence(&LebParams { spacing: 0.1, ..Default::default() }).is_err());
    }

    #[test]
    fn dil_endpoint_exact_matches_log_growth() {
        // n ln(1/ε) plus a bounded correction.
        let a = dil_endpoint_exact(1, (-4f64).exp());
        let b = dil_endpoint_exact(1, (-6f64).exp());
        assert!(((b - a) / 2.0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn dil_endpoint_rejects_short_radii() {
        let p = DilEndpointParams { radius_max: Some(2.0), ..Default::default() };
        assert!(matches!(scan_dil_endpoint(&p), Err(Error::InvalidRadii)));
        let p = DilEndpointParams { eps_list: vec![0.1, 0.2], ..Default::default() };
        assert!(scan_dil_endpoint(&p).is_err());
    }

    #[test]
    fn dil_endpoint_scan_passes() {
        let r = scan_dil_endpoint(&DilEndpointParams { spacing: 0.02, ..Default::default() }).unwrap();
        assert!(r.pass, "{}", r.summary());
    }
}
