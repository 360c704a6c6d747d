//! Structural checks: the flattening isometry, slice-wise evaluation of the
//! translation maximal operator, and its weak-type behaviour.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::analytic::random_step_field;
use super::report::{ExperimentReport, ReportBuilder, Rule};
use super::{experiment_rng, stream};
use crate::error::{Error, Result};
use crate::field::{flat_lp_norm, lp_norm, weak_l1_norm_exact, Axis, LogGrid, RadiusSet, SampledField};
use crate::operators::{flatten_for_lp, m_trans};

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    Ok(())
}

fn random_grid<R: Rng>(rng: &mut R, n: usize) -> Result<LogGrid> {
    let xs = (0..n)
        .map(|_| {
            let lo: f64 = rng.random_range(-2.0..0.0);
            Axis::new(lo, lo + rng.random_range(0.5..3.0), rng.random_range(3..12))
        })
        .collect::<Result<Vec<_>>>()?;
    let lo: f64 = rng.random_range(-4.0..1.0);
    LogGrid::new(xs, Axis::new(lo, lo + rng.random_range(0.5..4.0), rng.random_range(3..30))?)
}

fn random_values<R: Rng>(rng: &mut R, grid: &LogGrid) -> Result<SampledField> {
    let values = (0..grid.len()).map(|_| rng.random_range(-3.0..3.0)).collect();
    SampledField::new(grid.clone(), values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IsometryParams {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
}

impl Default for IsometryParams {
    fn default() -> Self {
        Self { n: 1, trials: 20, seed: 0 }
    }
}

/// Haar `L^p` norm of `F` against the flat norm of `e^(-n u / p) F` on random
/// grids, fields and exponents.
pub fn check_dilation_isometry(params: &IsometryParams) -> Result<ExperimentReport> {
    let IsometryParams { n, trials, seed } = *params;
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    check_trials(trials)?;
    let mut b = ReportBuilder::new("check_dilation_isometry");
    b.param("n", n).param("trials", trials).param("seed", seed);
    let mut rng = experiment_rng(seed, stream::ISOMETRY);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let grid = random_grid(&mut rng, n)?;
        let f = random_values(&mut rng, &grid)?;
        let p = rng.random_range(1.0..4.0);
        let haar = lp_norm(&f, p)?;
        let flat = flat_lp_norm(&flatten_for_lp(&f, p)?, p)?;
        worst = worst.max((haar - flat).abs() / haar);
    }
    b.check("max_relative_difference", 0.0, worst, 0.0, "Haar norm of F equals flat norm of e^(-n u/p) F", Rule::Absolute(1e-12))?;
    Ok(b.finish())
}

/// Per-slice Hardy-Littlewood maximal function computed directly: for each
/// node and radius, scan every column of the slice and count the lattice
/// points of the unbounded grid inside the ball.
pub fn brute_force_slice_maximal(f: &SampledField, radii: &RadiusSet) -> Vec<f64> {
    let g = f.grid();
    let n = g.dim();
    let cu = g.u_axis().count;
    let hs: Vec<f64> = g.x_axes().iter().map(|a| a.spacing()).collect();
    let mut out = Vec::with_capacity(g.len());
    let mut ix = vec![0; n];
    let mut jx = vec![0; n];
    for idx in 0..g.len() {
        let (col, iu) = (idx / cu, idx % cu);
        g.column_indices(col, &mut ix);
        let mut best = f.values()[idx].abs();
        for &r in radii.as_slice() {
            let limit = r * r * (1.0 + 1e-9);
            let mut sum = 0.0;
            for other in 0..g.columns() {
                g.column_indices(other, &mut jx);
                let d2: f64 = (0..n).map(|k| ((jx[k] as isize - ix[k] as isize) as f64 * hs[k]).powi(2)).sum();
                if d2 <= limit {
                    sum += f.values()[other * cu + iu].abs();
                }
            }
            let b: Vec<i64> = hs.iter().map(|h| (r / h * (1.0 + 1e-9)).floor() as i64).collect();
            let total: i64 = b.iter().map(|v| 2 * v + 1).product();
            let mut count = 0usize;
            for code in 0..total {
                let mut c = code;
                let mut d2 = 0.0;
                for k in (0..n).rev() {
                    let w = 2 * b[k] + 1;
                    d2 += ((c % w - b[k]) as f64 * hs[k]).powi(2);
                    c /= w;
                }
                if d2 <= limit {
                    count += 1;
                }
            }
            best = best.max(sum / count as f64);
        }
        out.push(best);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SliceParams {
    pub trials: usize,
    pub seed: u64,
}

impl Default for SliceParams {
    fn default() -> Self {
        Self { trials: 10, seed: 0 }
    }
}

/// `m_trans` against [`brute_force_slice_maximal`], node for node, on random
/// fields in dimensions 1 and 2.
pub fn check_slice_equivalence(params: &SliceParams) -> Result<ExperimentReport> {
    let SliceParams { trials, seed } = *params;
    check_trials(trials)?;
    let mut b = ReportBuilder::new("check_slice_equivalence");
    b.param("trials", trials).param("seed", seed);
    let mut rng = experiment_rng(seed, stream::SLICE);
    let mut mismatches = 0usize;
    let mut nodes = 0usize;
    for trial in 0..trials {
        let n = 1 + trial % 2;
        let grid = random_grid(&mut rng, n)?;
        let f = random_values(&mut rng, &grid)?;
        let h = grid.x_axes().iter().map(|a| a.spacing()).fold(f64::INFINITY, f64::min);
        let radii = RadiusSet::geometric(h, grid.x_diameter().max(h * 1.5), 1.5)?;
        let fast = m_trans(&f, &radii)?;
        let slow = brute_force_slice_maximal(&f, &radii);
        mismatches += fast.values().iter().zip(&slow).filter(|(a, b)| a.to_bits() != b.to_bits()).count();
        nodes += grid.len();
    }
    b.note("nodes_compared", nodes as f64);
    b.check("mismatched_nodes", 0.0, mismatches as f64, 0.0, "slice-wise maximal function equals the direct per-slice evaluation", Rule::Absolute(0.0))?;
    Ok(b.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransWeakParams {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub spacing: f64,
}

impl Default for TransWeakParams {
    fn default() -> Self {
        Self { n: 1, trials: 50, seed: 0, spacing: 0.05 }
    }
}

fn trans_grid(n: usize, h: f64) -> Result<LogGrid> {
    let xs = (0..n).map(|_| Axis::cell_aligned(-1.0, 1.0, h, 0)).collect::<Result<Vec<_>>>()?;
    LogGrid::new(xs, Axis::cell_aligned(-1.0, 1.0, 0.5, 0)?)
}

/// `||M_trans f||_{1,∞} / ||f||_1` on random step fields: amplitude
/// homogeneity, a uniform bound `3^n`, and stability under refinement.
pub fn check_trans_weak_type(params: &TransWeakParams) -> Result<ExperimentReport> {
    let TransWeakParams { n, trials, seed, spacing } = *params;
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    check_trials(trials)?;
    let coarse = trans_grid(n, spacing)?;
    let fine = trans_grid(n, spacing / 2.0)?;
    let radii_coarse = RadiusSet::default_for(&coarse);
    let radii_fine = RadiusSet::default_for(&fine);
    let mut b = ReportBuilder::new("check_trans_weak_type");
    b.param("n", n).param("trials", trials).param("seed", seed).param("spacing", spacing);

    let ratio = |f: &SampledField, radii: &RadiusSet| -> Result<(f64, u64)> {
        let m = m_trans(f, radii)?;
        Ok((weak_l1_norm_exact(&m) / lp_norm(f, 1.0)?, m.outside_reads()))
    };
    let mut rng = experiment_rng(seed, stream::TRANS);
    let mut worst_homogeneity: f64 = 0.0;
    let mut max_coarse: f64 = 0.0;
    let mut max_fine: f64 = 0.0;
    for _ in 0..trials {
        let boxes = rng.random_range(1..5);
        let state = rng.random::<u64>();
        let f = random_step_field(&coarse, &mut experiment_rng(state, stream::TRANS), boxes)?;
        let g = random_step_field(&fine, &mut experiment_rng(state, stream::TRANS), boxes)?;
        let (r1, outside) = ratio(&f, &radii_coarse)?;
        b.counter("m_trans", outside);
        for scale in [2.0, 4.0, 10.0] {
            let (rs, _) = ratio(&f.scale(scale), &radii_coarse)?;
            worst_homogeneity = worst_homogeneity.max((rs - r1).abs() / r1);
        }
        let (r2, outside) = ratio(&g, &radii_fine)?;
        b.counter("m_trans_refined", outside);
        max_coarse = max_coarse.max(r1);
        max_fine = max_fine.max(r2);
    }
    b.note("max_ratio", max_coarse).note("max_ratio_refined", max_fine);
    b.check("max_homogeneity_deviation", 0.0, worst_homogeneity, 0.0, "both sides are 1-homogeneous in the amplitude", Rule::Absolute(1e-10))?;
    b.check("max_ratio", spacing, max_coarse, 3f64.powi(n as i32), "covering-lemma constant 3^n", Rule::AtMost(0.0))?;
    b.check("max_ratio_refined", spacing / 2.0, max_fine, max_coarse, "refinement stability of the maximum ratio", Rule::Relative(0.1))?;
    Ok(b.finish())
}
