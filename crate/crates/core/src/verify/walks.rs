//! Random-walk dichotomy and Brownian drift experiments.

use serde::{Deserialize, Serialize};

use super::analytic::interpolation_phi;
use super::report::{ExperimentReport, ReportBuilder, Rule};
use crate::error::{Error, Result};
use crate::field::{indicator_box, lp_norm, weak_l1_norm_exact, Axis, LogGrid, SampledField};
use crate::group::GroupElement;
use crate::numeric::linear_fit;
use crate::stochastic::{
    a_n_averages, convolve_r_mu, discrete_maximal, greens_partial_sums, rho_p, simulate_brownian, BrownianConfig,
    DiscreteMeasure, Scheme,
};

const MAX_MASS_LOSS: f64 = 0.05;

/// One atom `(x, y)` with probability `weight`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub x: Vec<f64>,
    pub y: f64,
    pub weight: f64,
}

pub fn measure_from_atoms(atoms: &[AtomSpec]) -> Result<DiscreteMeasure> {
    let atoms = atoms
        .iter()
        .map(|a| Ok((GroupElement::new(a.x.clone(), a.y)?, a.weight)))
        .collect::<Result<Vec<_>>>()?;
    DiscreteMeasure::new(atoms)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DichotomyParams {
    pub n: usize,
    pub contractive: Vec<AtomSpec>,
    pub expansive: Vec<AtomSpec>,
    pub n_max: usize,
    /// Green-sum terms for the contractive branch.
    pub green_terms: usize,
    pub spacing: f64,
}

impl Default for DichotomyParams {
    fn default() -> Self {
        let atom = |y| vec![AtomSpec { x: vec![0.0], y, weight: 1.0 }];
        Self { n: 1, contractive: atom(0.5), expansive: atom(2.0), n_max: 6, green_terms: 20, spacing: 0.05 }
    }
}

/// Grid holding the supports of `R_μ^k 1_K`, `k <= steps`, for `K = [0,1]^n × [1, e]`.
/// `u` nodes sit at half-integer multiples of a step that divides the largest
/// vertical displacement, so pure dilations move nodes onto nodes.
fn walk_grid(mu: &DiscreteMeasure, steps: usize, spacing: f64) -> Result<LogGrid> {
    let n = mu.dim();
    let (h_lo, h_hi) = mu.log_scale_range();
    let biggest = h_lo.abs().max(h_hi.abs());
    let du = if biggest > 0.0 { biggest / (biggest / spacing).ceil() } else { spacing };
    let (mut u_lo, mut u_hi) = (0.0f64, 1.0f64);
    let mut spread = 0.0f64;
    let tx = mu.max_translation();
    for _ in 0..steps {
        u_lo = u_lo.min(u_lo - h_hi);
        u_hi = u_hi.max(u_hi - h_lo);
        spread += u_hi.exp() * tx;
    }
    let j_lo = (u_lo / du).floor() as i64 - 2;
    let j_hi = (u_hi / du).ceil() as i64 + 1;
    let u_axis = Axis::new((j_lo as f64 + 0.5) * du, (j_hi as f64 + 0.5) * du, (j_hi - j_lo + 1) as usize)?;
    let hx = 0.1f64.min(spacing * 2.0);
    let pad = (spread / hx).ceil() as usize + 1;
    let xs = (0..n).map(|_| Axis::cell_aligned(0.0, 1.0, hx, pad)).collect::<Result<Vec<_>>>()?;
    LogGrid::new(xs, u_axis)
}

/// `||R_μ^k f||_1` for `k = 1..=steps`; errors when more than 5% of the
/// predicted mass `ρ^k ||f||_1` has left the grid.
fn powers_with_mass_check(f: &SampledField, mu: &DiscreteMeasure, rho: f64, steps: usize) -> Result<f64> {
    let base = lp_norm(f, 1.0)?;
    let mut cur = f.clone();
    let mut worst: f64 = 0.0;
    for k in 1..=steps {
        cur = convolve_r_mu(&cur, mu)?;
        let loss = 1.0 - lp_norm(&cur, 1.0)? / (rho.powi(k as i32) * base);
        worst = worst.max(loss);
        if loss > MAX_MASS_LOSS {
            return Err(Error::Truncation(format!("power {k} lost {:.1}% of its mass to the grid boundary", 100.0 * loss)));
        }
    }
    Ok(worst)
}

/// Dichotomy for right random walks: a contractive measure (`ρ_1 < 1`) has an
/// `L^1`-bounded maximal operator with summable Green series, an expansive
/// one (`ρ_1 > 1`) has averages whose norms and weak ratios grow.
pub fn check_random_walk_dichotomy(params: &DichotomyParams) -> Result<ExperimentReport> {
    let DichotomyParams { n, ref contractive, ref expansive, n_max, green_terms, spacing } = *params;
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    if n_max < 2 || green_terms == 0 {
        return Err(Error::InvalidArgument("n_max must be >= 2 and green_terms >= 1".into()));
    }
    if !(spacing > 0.0 && spacing <= 0.1) {
        return Err(Error::InvalidArgument(format!("spacing must lie in (0, 0.1], got {spacing}")));
    }
    let mu_c = measure_from_atoms(contractive)?;
    let mu_e = measure_from_atoms(expansive)?;
    for mu in [&mu_c, &mu_e] {
        if mu.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: mu.dim() });
        }
    }
    let rho_c = rho_p(&mu_c, 1.0, n)?;
    let rho_e = rho_p(&mu_e, 1.0, n)?;
    if !(rho_c < 1.0 && rho_e > 1.0) {
        return Err(Error::Precondition(format!(
            "need rho_1(contractive) < 1 < rho_1(expansive), got {rho_c} and {rho_e}"
        )));
    }
    let mut b = ReportBuilder::new("check_random_walk_dichotomy");
    b.param("n", n).param("contractive", contractive).param("expansive", expansive);
    b.param("n_max", n_max).param("green_terms", green_terms).param("spacing", spacing);
    b.note("rho_contractive", rho_c).note("rho_expansive", rho_e);
    let unit = vec![(0.0, 1.0); n];
    let k_interval = (1.0, std::f64::consts::E);

    // Contractive branch.
    let grid = walk_grid(&mu_c, green_terms.max(n_max), spacing)?;
    let f = indicator_box(&grid, &unit, k_interval, None)?;
    let base = lp_norm(&f, 1.0)?;
    let loss = powers_with_mass_check(&f, &mu_c, rho_c, green_terms.max(n_max))?;
    b.note("contractive_max_mass_loss", loss);
    let bound = rho_c / (1.0 - rho_c);
    let maximal = discrete_maximal(&f, &mu_c, n_max)?;
    b.counter("contractive", maximal.outside_reads());
    b.check("contractive_maximal_ratio", n_max as f64, lp_norm(&maximal, 1.0)? / base, bound, "rho / (1 - rho)", Rule::AtMost(0.05))?;
    let sums = greens_partial_sums(&f, &mu_c, green_terms)?;
    let last = sums.last().unwrap();
    b.check("green_sum_ratio", green_terms as f64, lp_norm(last, 1.0)? / base, bound, "rho / (1 - rho)", Rule::AtMost(0.05))?;
    let tail = if sums.len() >= 2 {
        let prev = &sums[sums.len() - 2];
        lp_norm(&last.zip_with(prev, |a, b| a - b)?, 1.0)? / base
    } else {
        lp_norm(last, 1.0)? / base
    };
    b.check("green_sum_increment", green_terms as f64, tail, rho_c.powi(green_terms as i32), "increment rho^K of the Green series", Rule::AtMost(0.05))?;

    // Expansive branch.
    let grid = walk_grid(&mu_e, n_max, spacing)?;
    let f = indicator_box(&grid, &unit, k_interval, None)?;
    let base = lp_norm(&f, 1.0)?;
    let loss = powers_with_mass_check(&f, &mu_e, rho_e, n_max)?;
    b.note("expansive_max_mass_loss", loss);
    let averages = a_n_averages(&f, &mu_e, n_max)?;
    let mut weak_prev = None;
    let mut worst_interp: f64 = 0.0;
    let mut support_logs = Vec::new();
    for (i, a) in averages.iter().enumerate() {
        let count = i + 1;
        b.counter("expansive", a.outside_reads());
        let predicted = (1..=count).map(|k| rho_e.powi(k as i32)).sum::<f64>() / count as f64;
        let l1 = lp_norm(a, 1.0)?;
        b.check("expansive_average_ratio", count as f64, l1 / base, predicted, "(1/N) sum of rho^k for k = 1..N", Rule::Relative(0.1))?;
        let weak = weak_l1_norm_exact(a);
        if let Some(prev) = weak_prev {
            if count >= 3 {
                b.check("expansive_weak_ratio", count as f64, weak / base, prev, "weak ratio increases with N", Rule::Exceeds)?;
            }
        }
        weak_prev = Some(weak / base);
        b.note(&format!("expansive_weak_ratio[N={count}]"), weak / base);
        let support = a.support_measure();
        support_logs.push((count as f64, support.ln()));
        worst_interp = worst_interp.max(l1 / interpolation_phi(weak, support * a.max_abs()));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = support_logs.into_iter().unzip();
    let (c3, ln_c2) = linear_fit(&xs, &ys);
    b.note("support_growth_c2", ln_c2.exp()).note("support_growth_c3", c3);
    b.check("max_l1_over_phi", n_max as f64, worst_interp, 1.0, "||h||_1 <= phi(||h||_{1,inf}) for h = A_N f", Rule::AtMost(0.01))?;
    Ok(b.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BrownianParams {
    pub n: usize,
    pub y0: f64,
    pub horizon: f64,
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
}

impl Default for BrownianParams {
    fn default() -> Self {
        Self { n: 1, y0: 1.0, horizon: 4.0, steps: 1000, paths: 10_000, seed: 0 }
    }
}

/// Terminal `ln Y_T` statistics of hyperbolic Brownian motion under both
/// integrators: mean `ln y0 - n T / 2`, variance `T`.
pub fn check_brownian_drift(params: &BrownianParams) -> Result<ExperimentReport> {
    let BrownianParams { n, y0, horizon, steps, paths, seed } = *params;
    let mut b = ReportBuilder::new("check_brownian_drift");
    b.param("n", n).param("y0", y0).param("horizon", horizon).param("steps", steps).param("paths", paths).param("seed", seed);
    let expected_mean = y0.ln() - n as f64 * horizon / 2.0;
    let mut stats = Vec::new();
    for scheme in [Scheme::ExactLog, Scheme::EulerMaruyama] {
        let name = match scheme {
            Scheme::ExactLog => "exact_log",
            Scheme::EulerMaruyama => "euler_maruyama",
        };
        let config = BrownianConfig::new(n, y0, horizon, steps, paths, seed).with_scheme(scheme);
        let ensemble = simulate_brownian(&config)?;
        let s = ensemble.log_terminal_stats()?;
        b.counter(&format!("failed_paths[{name}]"), ensemble.failed_paths() as u64);
        b.note(&format!("stderr[{name}]"), s.stderr);
        b.check(&format!("mean_log_y[{name}]"), horizon, s.mean, expected_mean, "ln y0 - n T / 2, tolerance 3 standard errors", Rule::Absolute(3.0 * s.stderr))?;
        b.check(&format!("variance_log_y[{name}]"), horizon, s.variance, horizon, "Var ln Y_T = T", Rule::Relative(0.1))?;
        stats.push(s);
    }
    let combined = (stats[0].stderr.powi(2) + stats[1].stderr.powi(2)).sqrt();
    b.check("scheme_mean_difference", horizon, stats[0].mean - stats[1].mean, 0.0, "integrators agree, tolerance 3 combined standard errors", Rule::Absolute(3.0 * combined))?;
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dichotomy_default_passes() {
        let r = check_random_walk_dichotomy(&DichotomyParams::default()).unwrap();
        assert!(r.pass, "{}", r.summary());
    }

    #[test]
    fn unit_rho_is_a_precondition_error() {
        let p = DichotomyParams {
            contractive: vec![AtomSpec { x: vec![0.0], y: 1.0, weight: 1.0 }],
            ..Default::default()
        };
        assert!(matches!(check_random_walk_dichotomy(&p), Err(Error::Precondition(_))));
    }

    #[test]
    fn brownian_small_ensemble() {
        let r = check_brownian_drift(&BrownianParams { paths: 2000, steps: 200, ..Default::default() }).unwrap();
        assert!(r.pass, "{}", r.summary());
    }
}
