//! Random walks driven by finite-atom measures, and hyperbolic Brownian
//! motion.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SampledField;
use crate::group::GroupElement;

/// Tolerance on the total weight of a [`DiscreteMeasure`].
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

/// A probability measure with finitely many atoms `(h_i, p_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<(GroupElement, f64)>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<(GroupElement, f64)>) -> Result<Self> {
        let Some(first) = atoms.first() else {
            return Err(Error::InvalidMeasure("no atoms".into()));
        };
        let n = first.0.dim();
        if let Some((h, _)) = atoms.iter().find(|(h, _)| h.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: h.dim() });
        }
        if atoms.iter().any(|(_, p)| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidMeasure("weights must be positive and finite".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { atoms })
    }

    pub fn point_mass(h: GroupElement) -> Self {
        Self { atoms: vec![(h, 1.0)] }
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].0.dim()
    }

    pub fn atoms(&self) -> &[(GroupElement, f64)] {
        &self.atoms
    }

    /// Drift functional `ρ_p(μ) = Σ p_i y(h_i)^(n/p)`.
    pub fn rho(&self, p: f64) -> Result<f64> {
        rho_p(self, p, self.dim())
    }

    /// Smallest and largest `ln y(h_i)`.
    pub fn log_scale_range(&self) -> (f64, f64) {
        self.atoms.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (h, _)| (lo.min(h.u()), hi.max(h.u())))
    }

    /// Largest `|x(h_i)|_∞`.
    pub fn max_translation(&self) -> f64 {
        self.atoms.iter().flat_map(|(h, _)| h.x().iter()).fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `ρ_p(μ) = Σ p_i y(h_i)^(n/p)`, the `L^p` operator-norm scale of one step.
pub fn rho_p(mu: &DiscreteMeasure, p: f64, n: usize) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    if n != mu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), got: n });
    }
    let e = n as f64 / p;
    Ok(mu.atoms.iter().map(|(h, w)| w * h.y().powf(e)).sum())
}

/// Right convolution `R_μ f(g) = Σ p_i f(g h_i)`.
pub fn convolve_r_mu(f: &SampledField, mu: &DiscreteMeasure) -> Result<SampledField> {
    let grid = f.grid();
    let n = grid.dim();
    if mu.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: mu.dim() });
    }
    let cu = grid.u_axis().count;
    let pairs: Vec<(f64, u64)> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let mut x = vec![0.0; n];
            grid.column_coords(idx / cu, &mut x);
            let u = grid.node_u(idx % cu);
            let y = u.exp();
            let mut xs = vec![0.0; n];
            let mut acc = 0.0;
            let mut outside = 0u64;
            for (h, w) in &mu.atoms {
                for ((o, xi), hx) in xs.iter_mut().zip(&x).zip(h.x()) {
                    *o = xi + y * hx;
                }
                let v = f.interpolate_log(&xs, u + h.u());
                outside += v.outside as u64;
                acc += w * v.value;
            }
            (acc, outside)
        })
        .collect();
    let outside = pairs.iter().map(|p| p.1).sum::<u64>() + f.outside_reads();
    SampledField::new(grid.clone(), pairs.into_iter().map(|p| p.0).collect()).map(|s| s.with_outside_reads(outside))
}

/// Iterates `R_μ` and hands each power `R_μ^k f`, `k = 1..=count`, to `visit`.
fn for_each_power<F>(f: &SampledField, mu: &DiscreteMeasure, count: usize, mut visit: F) -> Result<()>
where
    F: FnMut(usize, &SampledField),
{
    let mut cur = f.clone();
    for k in 1..=count {
        cur = convolve_r_mu(&cur, mu)?;
        visit(k, &cur);
    }
    Ok(())
}

fn check_count(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::InvalidArgument(format!("{name} must be >= 1")));
    }
    Ok(())
}

/// `A_N f = (1/N) Σ_{k=1}^N |R_μ^k f|`.
pub fn a_n_average(f: &SampledField, mu: &DiscreteMeasure, count: usize) -> Result<SampledField> {
    check_count("N", count)?;
    let mut sum = vec![0.0; f.grid().len()];
    let mut outside = 0;
    for_each_power(f, mu, count, |_, p| {
        sum.iter_mut().zip(p.values()).for_each(|(s, v)| *s += v.abs());
        outside = p.outside_reads();
    })?;
    let inv = 1.0 / count as f64;
    SampledField::new(f.grid().clone(), sum.into_iter().map(|s| s * inv).collect()).map(|s| s.with_outside_reads(outside))
}

/// All averages `A_1 f, ..., A_{N_max} f` in one pass.
pub fn a_n_averages(f: &SampledField, mu: &DiscreteMeasure, n_max: usize) -> Result<Vec<SampledField>> {
    check_count("N_max", n_max)?;
    let mut sum = vec![0.0; f.grid().len()];
    let mut out = Vec::with_capacity(n_max);
    let mut err = None;
    for_each_power(f, mu, n_max, |k, p| {
        sum.iter_mut().zip(p.values()).for_each(|(s, v)| *s += v.abs());
        let inv = 1.0 / k as f64;
        match SampledField::new(f.grid().clone(), sum.iter().map(|s| s * inv).collect()) {
            Ok(a) => out.push(a.with_outside_reads(p.outside_reads())),
            Err(e) => err = Some(e),
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Discrete maximal operator `sup_{1 <= N <= N_max} A_N f`.
pub fn discrete_maximal(f: &SampledField, mu: &DiscreteMeasure, n_max: usize) -> Result<SampledField> {
    check_count("N_max", n_max)?;
    let len = f.grid().len();
    let mut sum = vec![0.0; len];
    let mut best = vec![0.0f64; len];
    let mut outside = 0;
    for_each_power(f, mu, n_max, |k, p| {
        let inv = 1.0 / k as f64;
        for ((s, b), v) in sum.iter_mut().zip(best.iter_mut()).zip(p.values()) {
            *s += v.abs();
            *b = b.max(*s * inv);
        }
        outside = p.outside_reads();
    })?;
    SampledField::new(f.grid().clone(), best).map(|s| s.with_outside_reads(outside))
}

/// Partial Green sum `Σ_{k=1}^K R_μ^k |f|`.
pub fn greens_partial_sum(f: &SampledField, mu: &DiscreteMeasure, terms: usize) -> Result<SampledField> {
    Ok(greens_partial_sums(f, mu, terms)?.pop().unwrap())
}

/// Every partial Green sum up to `K` terms.
pub fn greens_partial_sums(f: &SampledField, mu: &DiscreteMeasure, terms: usize) -> Result<Vec<SampledField>> {
    check_count("K", terms)?;
    let base = f.abs();
    let mut sum = vec![0.0; base.grid().len()];
    let mut out = Vec::with_capacity(terms);
    for_each_power(&base, mu, terms, |_, p| {
        sum.iter_mut().zip(p.values()).for_each(|(s, v)| *s += v);
        out.push(SampledField::new(base.grid().clone(), sum.clone()).unwrap().with_outside_reads(p.outside_reads()));
    })?;
    Ok(out)
}

/// Time stepping for [`simulate_brownian`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Exact Gaussian law for `ln Y`, Euler-Maruyama for `X`.
    ExactLog,
    /// Euler-Maruyama on both components.
    EulerMaruyama,
}

impl Scheme {
    fn stream_tag(self) -> u64 {
        match self {
            Scheme::ExactLog => 0,
            Scheme::EulerMaruyama => 1,
        }
    }
}

/// Driving noise. `Zero` replaces every Gaussian increment by 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Noise {
    Gaussian,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrownianConfig {
    pub n: usize,
    pub y0: f64,
    pub horizon: f64,
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub noise: Noise,
    /// Record every `record_stride`-th mesh point; the terminal state is
    /// always recorded. 0 records only the initial and terminal states.
    pub record_stride: usize,
}

impl BrownianConfig {
    pub fn new(n: usize, y0: f64, horizon: f64, steps: usize, paths: usize, seed: u64) -> Self {
        Self {
            n,
            y0,
            horizon,
            steps,
            paths,
            seed,
            scheme: Scheme::ExactLog,
            noise: Noise::Gaussian,
            record_stride: 0,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_noise(mut self, noise: Noise) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_record_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::ZeroDimension);
        }
        if !(self.y0 > 0.0 && self.y0.is_finite()) {
            return Err(Error::NonPositiveScale(self.y0));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {}", self.horizon)));
        }
        check_count("steps", self.steps)?;
        check_count("paths", self.paths)
    }

    fn recorded_steps(&self) -> Vec<usize> {
        let mut out: Vec<usize> = if self.record_stride == 0 {
            vec![0]
        } else {
            (0..self.steps).step_by(self.record_stride).collect()
        };
        out.push(self.steps);
        out
    }
}

/// One simulated trajectory, sampled at the ensemble's recorded times.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub states: Vec<GroupElement>,
    /// Set when the Euler-Maruyama step drove `Y` to a non-positive value;
    /// `states` then ends at the last valid state.
    pub failed: bool,
}

impl Path {
    pub fn terminal(&self) -> &GroupElement {
        self.states.last().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub n: usize,
    pub config: BrownianConfig,
    pub times: Vec<f64>,
    pub paths: Vec<Path>,
}

/// Simulates `Z_t = (X_t, Y_t)` from `(0, y0)` under
/// `dX = Y dW_x`, `dY = Y dW_y - (n-1)/2 Y dt`.
///
/// Each path draws from its own ChaCha stream selected by the path index and
/// the scheme, so ensembles do not depend on thread scheduling.
pub fn simulate_brownian(config: &BrownianConfig) -> Result<PathEnsemble> {
    config.validate()?;
    let n = config.n;
    let dt = config.horizon / config.steps as f64;
    let sq = dt.sqrt();
    let nf = n as f64;
    let record = config.recorded_steps();
    let times = record.iter().map(|&k| k as f64 * dt).collect();

    let paths: Vec<Path> = (0..config.paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream((config.scheme.stream_tag() << 40) | i as u64);
            let mut draw = || -> f64 {
                match config.noise {
                    Noise::Gaussian => rng.sample(StandardNormal),
                    Noise::Zero => 0.0,
                }
            };
            let mut x = vec![0.0; n];
            let mut u = config.y0.ln();
            let mut y = config.y0;
            let mut states = Vec::with_capacity(record.len());
            let mut next_record = 0;
            let mut failed = false;
            for k in 0..=config.steps {
                if record[next_record] == k {
                    states.push(GroupElement::from_log(x.clone(), u).expect("finite state"));
                    next_record += 1;
                }
                if k == config.steps {
                    break;
                }
                for xi in x.iter_mut() {
                    *xi += y * sq * draw();
                }
                let dw = sq * draw();
                match config.scheme {
                    Scheme::ExactLog => {
                        u += dw - 0.5 * nf * dt;
                        y = u.exp();
                    }
                    Scheme::EulerMaruyama => {
                        let next = y + y * dw - 0.5 * (nf - 1.0) * y * dt;
                        if !(next > 0.0) {
                            failed = true;
                            break;
                        }
                        y = next;
                        u = y.ln();
                    }
                }
            }
            if failed {
                log::warn!("path {i} left the half-space; excluded from statistics");
            }
            Path { states, failed }
        })
        .collect();

    Ok(PathEnsemble { n, config: config.clone(), times, paths })
}

/// Mean and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub mean: f64,
    pub stderr: f64,
    pub variance: f64,
    pub count: usize,
}

fn sample_stats(xs: &[f64]) -> Result<SampleStats> {
    if xs.is_empty() {
        return Err(Error::InvalidArgument("empty ensemble".into()));
    }
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let variance = if xs.len() > 1 {
        xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    Ok(SampleStats { mean, stderr: (variance / m).sqrt(), variance, count: xs.len() })
}

impl PathEnsemble {
    fn completed(&self) -> impl Iterator<Item = &Path> {
        self.paths.iter().filter(|p| !p.failed)
    }

    pub fn failed_paths(&self) -> usize {
        self.paths.iter().filter(|p| p.failed).count()
    }

    /// Statistics of `ln Y_T` over paths that reached the horizon.
    pub fn log_terminal_stats(&self) -> Result<SampleStats> {
        let xs: Vec<f64> = self.completed().map(|p| p.terminal().u()).collect();
        sample_stats(&xs)
    }

    /// Writes one CSV row per path: index, failed flag, terminal `x`, `y`, `ln y`.
    pub fn write_terminal_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = String::from("path,failed");
        for j in 0..self.n {
            header.push_str(&format!(",x{j}"));
        }
        header.push_str(",y,log_y\n");
        w.write_all(header.as_bytes())?;
        for (i, p) in self.paths.iter().enumerate() {
            let t = p.terminal();
            let mut row = format!("{i},{}", p.failed as u8);
            for v in t.x() {
                row.push_str(&format!(",{v:.16e}"));
            }
            row.push_str(&format!(",{:.16e},{:.16e}\n", t.y(), t.u()));
            w.write_all(row.as_bytes())?;
        }
        Ok(())
    }
}

/// Drift of `ln Y` per unit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub paths: usize,
    pub failed_paths: usize,
}

/// Sample mean and standard error of `(ln Y_T - ln Y_0) / T`.
pub fn estimate_vertical_drift(ensemble: &PathEnsemble) -> Result<DriftEstimate> {
    let horizon = *ensemble.times.last().unwrap();
    let xs: Vec<f64> = ensemble
        .completed()
        .map(|p| (p.terminal().u() - p.states[0].u()) / horizon)
        .collect();
    let s = sample_stats(&xs)?;
    Ok(DriftEstimate { mean: s.mean, stderr: s.stderr, paths: s.count, failed_paths: ensemble.failed_paths() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{indicator_box, lp_norm, Axis, LogGrid};
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn vertical(y: f64) -> GroupElement {
        GroupElement::new(vec![0.0], y).unwrap()
    }

    #[test]
    fn measure_validation() {
        assert!(DiscreteMeasure::new(vec![]).is_err());
        assert!(DiscreteMeasure::new(vec![(vertical(1.0), 0.5)]).is_err());
        assert!(DiscreteMeasure::new(vec![(vertical(1.0), 1.5), (vertical(2.0), -0.5)]).is_err());
        let mixed = vec![(vertical(1.0), 0.5), (GroupElement::new(vec![0.0, 0.0], 1.0).unwrap(), 0.5)];
        assert!(matches!(DiscreteMeasure::new(mixed), Err(Error::DimensionMismatch { .. })));
        assert!(DiscreteMeasure::new(vec![(vertical(1.0), 0.3), (vertical(2.0), 0.7)]).is_ok());
    }

    #[test]
    fn rho_values() {
        let id = DiscreteMeasure::point_mass(vertical(1.0));
        assert_eq!(rho_p(&id, 1.0, 1).unwrap(), 1.0);
        let half = DiscreteMeasure::point_mass(vertical(0.5));
        assert_eq!(rho_p(&half, 1.0, 1).unwrap(), 0.5);
        let two = DiscreteMeasure::new(vec![(vertical(2.0), 0.5), (vertical(0.5), 0.5)]).unwrap();
        assert_eq!(rho_p(&two, 1.0, 1).unwrap(), 1.25);
        assert!(rho_p(&two, 0.5, 1).is_err());
    }

    /// Grid whose u spacing divides ln 2, so halving/doubling atoms land on nodes.
    fn dyadic_grid(u_lo: f64, u_hi: f64, per_octave: usize) -> LogGrid {
        let h = LN_2 / per_octave as f64;
        let lo = (u_lo / h).floor() * h;
        let hi = (u_hi / h).ceil() * h;
        let count = ((hi - lo) / h).round() as usize + 1;
        let xa = Axis::cell_aligned(0.0, 1.0, 0.25, 1).unwrap();
        LogGrid::new(vec![xa], Axis::new(lo, hi, count).unwrap()).unwrap()
    }

    #[test]
    fn identity_measure_is_node_exact() {
        let g = dyadic_grid(-1.0, 2.0, 8);
        let f = SampledField::from_fn(&g, |x, u| x[0] - u * u).unwrap();
        let id = DiscreteMeasure::point_mass(vertical(1.0));
        let r = convolve_r_mu(&f, &id).unwrap();
        assert_eq!(r.values(), f.values());
        let a = a_n_average(&f, &id, 3).unwrap();
        for (x, y) in a.values().iter().zip(f.values()) {
            assert!((x - y.abs()).abs() < 1e-14);
        }
        let k = greens_partial_sum(&f, &id, 4).unwrap();
        for (x, y) in k.values().iter().zip(f.values()) {
            assert!((x - 4.0 * y.abs()).abs() < 1e-13);
        }
    }

    #[test]
    fn l1_scaling_with_two_vertical_atoms() {
        let g = dyadic_grid(-3.0, 3.0, 16);
        let f = indicator_box(&g, &[(0.0, 1.0)], (1.0, 1f64.exp()), None).unwrap();
        let mu = DiscreteMeasure::new(vec![(vertical(2.0), 0.25), (vertical(0.5), 0.75)]).unwrap();
        let rho = mu.rho(1.0).unwrap();
        let r = convolve_r_mu(&f, &mu).unwrap();
        let ratio = lp_norm(&r, 1.0).unwrap() / lp_norm(&f, 1.0).unwrap();
        assert!((ratio - rho).abs() < 0.03 * rho, "{ratio} vs {rho}");
    }

    #[test]
    fn mass_conservation_in_interior() {
        let g = dyadic_grid(-3.0, 3.0, 8);
        let one = SampledField::constant(&g, 1.0);
        let mu = DiscreteMeasure::new(vec![(vertical(2.0), 0.5), (vertical(0.5), 0.5)]).unwrap();
        let r = convolve_r_mu(&one, &mu).unwrap();
        let cu = g.u_axis().count;
        for col in 0..g.columns() {
            for iu in 8..cu - 8 {
                assert!((r.at(col, iu) - 1.0).abs() < 1e-14);
            }
        }
        assert!(r.outside_reads() > 0);
    }

    #[test]
    fn expansive_average_growth() {
        let g = dyadic_grid(-5.0, 1.5, 16);
        let f = indicator_box(&g, &[(0.0, 1.0)], (1.0, 1f64.exp()), None).unwrap();
        let mu = DiscreteMeasure::point_mass(vertical(2.0));
        let base = lp_norm(&f, 1.0).unwrap();
        for (i, a) in a_n_averages(&f, &mu, 6).unwrap().iter().enumerate() {
            let nn = i + 1;
            let expected = (1..=nn).map(|k| 2f64.powi(k as i32)).sum::<f64>() / nn as f64;
            let got = lp_norm(a, 1.0).unwrap() / base;
            assert!((got - expected).abs() < 0.05 * expected, "N={nn}: {got} vs {expected}");
        }
    }

    #[test]
    fn maximal_dominations() {
        let g = dyadic_grid(-2.0, 3.0, 8);
        let f = SampledField::from_fn(&g, |x, u| (3.0 * x[0] + 2.0 * u).sin()).unwrap();
        let mu = DiscreteMeasure::new(vec![
            (GroupElement::new(vec![0.25], 0.5).unwrap(), 0.5),
            (GroupElement::new(vec![-0.25], 1.0).unwrap(), 0.5),
        ])
        .unwrap();
        let first = discrete_maximal(&f, &mu, 1).unwrap();
        let r_abs = convolve_r_mu(&f, &mu).unwrap().abs();
        assert_eq!(first.values(), r_abs.values());

        let m = discrete_maximal(&f, &mu, 5).unwrap();
        let green = greens_partial_sum(&f, &mu, 5).unwrap();
        for a in a_n_averages(&f, &mu, 5).unwrap() {
            for (x, y) in a.values().iter().zip(m.values()) {
                assert!(x <= y);
            }
        }
        for (x, y) in m.values().iter().zip(green.values()) {
            assert!(*x <= y + 1e-12);
        }
        assert_eq!(greens_partial_sum(&f, &mu, 1).unwrap().values(), convolve_r_mu(&f.abs(), &mu).unwrap().values());
    }

    #[test]
    fn contractive_green_sums_bounded() {
        let g = dyadic_grid(-1.0, 6.0, 16);
        let f = indicator_box(&g, &[(0.0, 1.0)], (1.0, 1f64.exp()), None).unwrap();
        let mu = DiscreteMeasure::point_mass(vertical(0.5));
        let rho = mu.rho(1.0).unwrap();
        let base = lp_norm(&f, 1.0).unwrap();
        let sums = greens_partial_sums(&f, &mu, 6).unwrap();
        let norms: Vec<f64> = sums.iter().map(|s| lp_norm(s, 1.0).unwrap()).collect();
        for w in norms.windows(2) {
            assert!(w[1] - w[0] <= w[0]);
        }
        assert!(*norms.last().unwrap() <= rho / (1.0 - rho) * base * 1.05);
    }

    #[test]
    fn zero_noise_drift_is_deterministic() {
        for n in 1..=3 {
            let cfg = BrownianConfig::new(n, 1.0, 2.0, 50, 3, 7).with_noise(Noise::Zero);
            let e = simulate_brownian(&cfg).unwrap();
            let nf = n as f64;
            for p in &e.paths {
                assert!((p.terminal().u() + nf).abs() < 1e-12);
            }
            let d = estimate_vertical_drift(&e).unwrap();
            assert!((d.mean + nf / 2.0).abs() < 1e-12);
            assert_eq!(d.stderr, 0.0);
        }
    }

    #[test]
    fn brownian_drift_and_variance() {
        let cfg = BrownianConfig::new(1, 1.0, 4.0, 400, 10_000, 2024);
        let e = simulate_brownian(&cfg).unwrap();
        let d = estimate_vertical_drift(&e).unwrap();
        assert!((d.mean + 0.5).abs() < 3.0 * d.stderr, "{d:?}");
        let s = e.log_terminal_stats().unwrap();
        assert!((s.variance - 4.0).abs() < 0.4);
        let em = simulate_brownian(&cfg.clone().with_scheme(Scheme::EulerMaruyama)).unwrap();
        let d2 = estimate_vertical_drift(&em).unwrap();
        let combined = (d.stderr.powi(2) + d2.stderr.powi(2)).sqrt();
        assert!((d.mean - d2.mean).abs() < 3.0 * combined);
        assert_eq!(em.failed_paths(), 0);
    }

    #[test]
    fn ensembles_are_reproducible_and_recorded() {
        let cfg = BrownianConfig::new(2, 0.5, 1.0, 20, 16, 3).with_record_stride(5);
        let a = simulate_brownian(&cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| simulate_brownian(&cfg).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.times.len(), 5);
        assert!(a.paths.iter().all(|p| p.states.len() == 5));
        let mut buf = Vec::new();
        a.write_terminal_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("path,failed,x0,x1,y,log_y\n"));
        assert_eq!(text.lines().count(), 17);
        assert!(simulate_brownian(&BrownianConfig::new(1, 0.0, 1.0, 1, 1, 0)).is_err());
        assert!(simulate_brownian(&BrownianConfig::new(1, 1.0, 1.0, 0, 1, 0)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn convolution_contracts_by_rho(
            vals in prop::collection::vec(0.0..1.0f64, 6 * 47),
            p in 1.0..3.0f64,
            y0 in 0.3..0.9f64,
            w in 0.2..0.8f64,
        ) {
            let xa = Axis::new(-1.0, 1.0, 6).unwrap();
            let ua = Axis::new(-1.0, 2.0, 47).unwrap();
            let g = LogGrid::new(vec![xa], ua).unwrap();
            let f = SampledField::new(g, vals).unwrap();
            let mu = DiscreteMeasure::new(vec![
                (GroupElement::new(vec![0.1], y0).unwrap(), w),
                (GroupElement::new(vec![-0.2], 1.3).unwrap(), 1.0 - w),
            ]).unwrap();
            let lhs = lp_norm(&convolve_r_mu(&f, &mu).unwrap(), p).unwrap();
            let rhs = mu.rho(p).unwrap() * lp_norm(&f, p).unwrap();
            prop_assert!(lhs <= rhs * 1.03);
        }
    }
}
