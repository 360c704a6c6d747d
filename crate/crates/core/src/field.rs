//! Discretized function space on `G_n`.
//!
//! A [`LogGrid`] is a uniform rectangular grid in `(x, u = ln y)`. A
//! [`SampledField`] stores one nodal sample per grid node, with `u` the
//! fastest-varying index. Integrals use dual-cell quadrature: each node owns
//! the cell `[c - h/2, c + h/2]` clipped to the grid box, which reduces to
//! the trapezoid rule on the full window. The Haar weight in these
//! coordinates is `e^(-n u) dx du`.
//!
//! Evaluation off the grid box returns zero: every field is extended by zero.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{haar_log_density, GroupElement};
use crate::numeric::det_sum;

/// Upper bound on grid nodes accepted by [`LogGrid::new`].
pub const MAX_NODES: usize = 100_000_000;

/// Default number of `λ` samples for [`weak_l1_norm`].
pub const DEFAULT_LAMBDA_SAMPLES: usize = 256;

const SNAP: f64 = 1e-9;

/// A uniform axis with `count` nodes from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || max <= min || count < 2 {
            return Err(Error::InvalidAxis(format!("[{min}, {max}] with {count} nodes")));
        }
        Ok(Self { min, max, count })
    }

    /// Axis with spacing close to `h` whose dual cells have edges at `lo`
    /// and `hi`, so boxes `[lo, hi]` are resolved exactly. One node sits
    /// half a cell outside each end, plus `pad` further cells.
    pub fn cell_aligned(lo: f64, hi: f64, h: f64, pad: usize) -> Result<Self> {
        if !(hi > lo) || !(h > 0.0) {
            return Err(Error::InvalidAxis(format!("cell_aligned [{lo}, {hi}] step {h}")));
        }
        let cells = ((hi - lo) / h).round().max(1.0) as usize;
        let h = (hi - lo) / cells as f64;
        let min = lo - (pad as f64 + 0.5) * h;
        let max = hi + (pad as f64 + 0.5) * h;
        Self::new(min, max, cells + 2 * pad + 2)
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.max
        } else {
            self.min + i as f64 * self.spacing()
        }
    }

    /// Length of node `i`'s dual cell intersected with `[lo, hi]`.
    pub fn dual_overlap(&self, i: usize, lo: f64, hi: f64) -> f64 {
        let h = self.spacing();
        let c = self.node(i);
        let a = (c - 0.5 * h).max(self.min).max(lo);
        let b = (c + 0.5 * h).min(self.max).min(hi);
        (b - a).max(0.0)
    }

    pub fn dual_length(&self, i: usize) -> f64 {
        self.dual_overlap(i, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Fraction of node `i`'s dual cell covered by `[lo, hi]`.
    /// Fractions within `1e-9` of 0 or 1 are snapped.
    pub fn coverage(&self, i: usize, lo: f64, hi: f64) -> f64 {
        let c = self.dual_overlap(i, lo, hi) / self.dual_length(i);
        if c < SNAP {
            0.0
        } else if c > 1.0 - SNAP {
            1.0
        } else {
            c
        }
    }

    /// Cell index and fractional offset of `v`, or `None` outside the axis.
    fn locate(&self, v: f64) -> Option<(usize, f64)> {
        let mut s = (v - self.min) / self.spacing();
        let last = (self.count - 1) as f64;
        if !(s >= -SNAP && s <= last + SNAP) {
            return None;
        }
        let r = s.round();
        if (s - r).abs() < SNAP {
            s = r;
        }
        let s = s.clamp(0.0, last);
        let i0 = (s.floor() as usize).min(self.count - 2);
        Some((i0, s - i0 as f64))
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.node(i))
    }
}

/// Rectangular grid in `(x, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogGrid {
    n: usize,
    x_axes: Vec<Axis>,
    u_axis: Axis,
    columns: usize,
    /// Product of x dual lengths, per column.
    col_weight: Vec<f64>,
    /// `e^(-n u)` per u index.
    haar_u: Vec<f64>,
}

impl LogGrid {
    pub fn new(x_axes: Vec<Axis>, u_axis: Axis) -> Result<Self> {
        let n = x_axes.len();
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        for a in x_axes.iter().chain(std::iter::once(&u_axis)) {
            Axis::new(a.min, a.max, a.count)?;
        }
        let columns = x_axes
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.count))
            .ok_or(Error::GridTooLarge { cells: usize::MAX, limit: MAX_NODES })?;
        let total = columns
            .checked_mul(u_axis.count)
            .ok_or(Error::GridTooLarge { cells: usize::MAX, limit: MAX_NODES })?;
        if total > MAX_NODES {
            return Err(Error::GridTooLarge { cells: total, limit: MAX_NODES });
        }
        let mut col_weight = vec![1.0; columns];
        let mut idx = vec![0usize; n];
        for w in col_weight.iter_mut() {
            *w = idx.iter().zip(&x_axes).map(|(&i, a)| a.dual_length(i)).product();
            advance(&mut idx, &x_axes);
        }
        let haar_u = u_axis.nodes().map(|u| haar_log_density(u, n)).collect();
        Ok(Self { n, x_axes, u_axis, columns, col_weight, haar_u })
    }

    /// Same window with every axis refined by `factor` (spacing divided).
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let f = factor.max(1);
        let re = |a: &Axis| Axis::new(a.min, a.max, (a.count - 1) * f + 1);
        let xs = self.x_axes.iter().map(re).collect::<Result<Vec<_>>>()?;
        Self::new(xs, re(&self.u_axis)?)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn x_axes(&self) -> &[Axis] {
        &self.x_axes
    }

    pub fn u_axis(&self) -> &Axis {
        &self.u_axis
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn len(&self) -> usize {
        self.columns * self.u_axis.count
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, col: usize, iu: usize) -> usize {
        col * self.u_axis.count + iu
    }

    /// x multi-index of a column.
    pub fn column_indices(&self, mut col: usize, out: &mut [usize]) {
        for k in (0..self.n).rev() {
            let c = self.x_axes[k].count;
            out[k] = col % c;
            col /= c;
        }
    }

    pub fn column_of(&self, ix: &[usize]) -> usize {
        ix.iter().zip(&self.x_axes).fold(0, |acc, (&i, a)| acc * a.count + i)
    }

    /// x coordinates of a column.
    pub fn column_coords(&self, col: usize, out: &mut [f64]) {
        let mut ix = vec![0; self.n];
        self.column_indices(col, &mut ix);
        for ((o, &i), a) in out.iter_mut().zip(&ix).zip(&self.x_axes) {
            *o = a.node(i);
        }
    }

    pub fn node_u(&self, iu: usize) -> f64 {
        self.u_axis.node(iu)
    }

    /// Haar quadrature weight of a node over the whole grid box.
    pub fn haar_weight(&self, idx: usize) -> f64 {
        let (col, iu) = (idx / self.u_axis.count, idx % self.u_axis.count);
        self.col_weight[col] * self.u_axis.dual_length(iu) * self.haar_u[iu]
    }

    /// Flat (`dx du`) quadrature weight of a node.
    pub fn flat_weight(&self, idx: usize) -> f64 {
        let (col, iu) = (idx / self.u_axis.count, idx % self.u_axis.count);
        self.col_weight[col] * self.u_axis.dual_length(iu)
    }

    /// Per-u-index Haar weights restricted to `window` (column factor excluded).
    fn u_weights(&self, window: UWindow) -> Vec<f64> {
        (0..self.u_axis.count)
            .map(|iu| self.u_axis.dual_overlap(iu, window.lo, window.hi) * self.haar_u[iu])
            .collect()
    }

    /// Grid diameter in x (Euclidean) and in u.
    pub fn x_diameter(&self) -> f64 {
        self.x_axes.iter().map(|a| (a.max - a.min).powi(2)).sum::<f64>().sqrt()
    }

    pub fn min_spacing(&self) -> f64 {
        self.x_axes
            .iter()
            .chain(std::iter::once(&self.u_axis))
            .map(Axis::spacing)
            .fold(f64::INFINITY, f64::min)
    }

    /// Multilinear interpolation of nodal `values` at `(x, u)`.
    /// Returns `None` outside the grid box.
    pub fn interpolate_values(&self, values: &[f64], x: &[f64], u: f64) -> Option<f64> {
        let n = self.n;
        let mut loc = [(0usize, 0.0f64); 8];
        let mut heap;
        let cells: &mut [(usize, f64)] = if n < 8 {
            &mut loc[..n + 1]
        } else {
            heap = vec![(0usize, 0.0f64); n + 1];
            &mut heap[..]
        };
        for k in 0..n {
            cells[k] = self.x_axes[k].locate(x[k])?;
        }
        cells[n] = self.u_axis.locate(u)?;

        let cu = self.u_axis.count;
        let mut acc = 0.0;
        'corner: for mask in 0..(1usize << (n + 1)) {
            let mut w = 1.0;
            let mut col = 0usize;
            for k in 0..n {
                let (i0, f) = cells[k];
                let hi = mask >> k & 1 == 1;
                let wk = if hi { f } else { 1.0 - f };
                if wk == 0.0 {
                    continue 'corner;
                }
                w *= wk;
                col = col * self.x_axes[k].count + i0 + hi as usize;
            }
            let (i0, f) = cells[n];
            let hi = mask >> n & 1 == 1;
            let wu = if hi { f } else { 1.0 - f };
            if wu == 0.0 {
                continue;
            }
            acc += w * wu * values[col * cu + i0 + hi as usize];
        }
        Some(acc)
    }
}

fn advance(idx: &mut [usize], axes: &[Axis]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < axes[k].count {
            return;
        }
        idx[k] = 0;
    }
}

/// Restriction of an integral to `u ∈ [lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UWindow {
    pub lo: f64,
    pub hi: f64,
}

impl UWindow {
    pub const ALL: UWindow = UWindow { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }
}

/// Finite set of radii standing in for `sup_{r > 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusSet {
    radii: Vec<f64>,
}

impl RadiusSet {
    pub fn new(radii: Vec<f64>) -> Result<Self> {
        let ok = !radii.is_empty()
            && radii.iter().all(|r| r.is_finite() && *r > 0.0)
            && radii.windows(2).all(|w| w[1] > w[0]);
        if !ok {
            return Err(Error::InvalidRadii);
        }
        Ok(Self { radii })
    }

    /// `r_j = min · ratio^j` up to `max`.
    pub fn geometric(min: f64, max: f64, ratio: f64) -> Result<Self> {
        if !(min > 0.0 && max >= min && ratio > 1.0) {
            return Err(Error::InvalidRadii);
        }
        let mut radii = Vec::new();
        let mut j = 0i32;
        loop {
            let r = min * ratio.powi(j);
            if r > max * (1.0 + 1e-12) {
                break;
            }
            radii.push(r);
            j += 1;
        }
        Self::new(radii)
    }

    /// `r_j = min + j · step` up to `max`.
    pub fn linear(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(min > 0.0 && max >= min && step > 0.0) {
            return Err(Error::InvalidRadii);
        }
        let count = ((max - min) / step + 1e-9).floor() as usize + 1;
        Self::new((0..count).map(|j| min + j as f64 * step).collect())
    }

    /// Quarter-octave radii from the finest grid spacing to the diameter.
    pub fn default_for(grid: &LogGrid) -> Self {
        let lo = grid.min_spacing();
        let hi = grid.x_diameter().max(grid.u_axis().max - grid.u_axis().min).max(lo);
        Self::geometric(lo, hi, 2f64.powf(0.25)).expect("valid default radii")
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.radii
    }

    pub fn max(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    pub fn min(&self) -> f64 {
        self.radii[0]
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }
}

/// Nodal samples of a function on a [`LogGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    grid: LogGrid,
    values: Vec<f64>,
    outside_reads: u64,
}

/// Result of evaluating a field at an arbitrary group element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interpolated {
    pub value: f64,
    pub outside: bool,
}

impl SampledField {
    pub fn new(grid: LogGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ValueCount { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue);
        }
        Ok(Self { grid, values, outside_reads: 0 })
    }

    pub(crate) fn from_parts(grid: LogGrid, values: Vec<f64>, outside_reads: u64) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values, outside_reads }
    }

    pub fn zeros(grid: &LogGrid) -> Self {
        Self { values: vec![0.0; grid.len()], grid: grid.clone(), outside_reads: 0 }
    }

    pub fn constant(grid: &LogGrid, c: f64) -> Self {
        Self { values: vec![c; grid.len()], grid: grid.clone(), outside_reads: 0 }
    }

    /// Samples `f(x, u)` at every node.
    pub fn from_fn<F>(grid: &LogGrid, f: F) -> Result<Self>
    where
        F: Fn(&[f64], f64) -> f64 + Sync,
    {
        let cu = grid.u_axis().count;
        let mut values = vec![0.0; grid.len()];
        values.par_chunks_mut(cu).enumerate().for_each(|(col, chunk)| {
            let mut x = vec![0.0; grid.dim()];
            grid.column_coords(col, &mut x);
            for (iu, v) in chunk.iter_mut().enumerate() {
                *v = f(&x, grid.node_u(iu));
            }
        });
        Self::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &LogGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Number of reads outside the grid box accumulated by the operators
    /// that produced this field.
    pub fn outside_reads(&self) -> u64 {
        self.outside_reads
    }

    pub fn with_outside_reads(mut self, count: u64) -> Self {
        self.outside_reads = count;
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn map<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.par_iter().map(|&v| f(v)).collect(),
            outside_reads: self.outside_reads,
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with<F: Fn(f64, f64) -> f64 + Sync>(&self, other: &Self, f: F) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::InvalidArgument("fields live on different grids".into()));
        }
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.par_iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
            outside_reads: self.outside_reads + other.outside_reads,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    /// Value at a column and u index.
    pub fn at(&self, col: usize, iu: usize) -> f64 {
        self.values[self.grid.index(col, iu)]
    }

    /// Multilinear interpolation at `g`; zero with `outside = true` off the box.
    pub fn interpolate(&self, g: &GroupElement) -> Result<Interpolated> {
        if g.dim() != self.grid.dim() {
            return Err(Error::DimensionMismatch { expected: self.grid.dim(), got: g.dim() });
        }
        Ok(self.interpolate_log(g.x(), g.u()))
    }

    pub fn interpolate_log(&self, x: &[f64], u: f64) -> Interpolated {
        match self.grid.interpolate_values(&self.values, x, u) {
            Some(value) => Interpolated { value, outside: false },
            None => Interpolated { value: 0.0, outside: true },
        }
    }

    /// Nodes where the field is nonzero.
    pub fn support_measure(&self) -> f64 {
        self.support_measure_in(UWindow::ALL)
    }

    pub fn support_measure_in(&self, window: UWindow) -> f64 {
        level_set_measure_in(self, 0.0, window)
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p >= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

/// Haar-weighted `L^p` norm; `p = f64::INFINITY` gives `max |f|`.
pub fn lp_norm(f: &SampledField, p: f64) -> Result<f64> {
    lp_norm_in(f, p, UWindow::ALL)
}

/// [`lp_norm`] restricted to `u ∈ window`.
pub fn lp_norm_in(f: &SampledField, p: f64, window: UWindow) -> Result<f64> {
    let s = lp_power_in(f, p, window)?;
    Ok(if p.is_infinite() { s } else { s.powf(1.0 / p) })
}

/// `‖f‖_p^p` restricted to `window` (for `p = ∞`, the max over the window).
pub fn lp_power_in(f: &SampledField, p: f64, window: UWindow) -> Result<f64> {
    check_exponent(p)?;
    let grid = &f.grid;
    let cu = grid.u_axis.count;
    let uw = grid.u_weights(window);
    if p.is_infinite() {
        let m = f
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| uw[i % cu] > 0.0)
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        return Ok(m);
    }
    let pow = |v: f64| if p == 1.0 { v.abs() } else { v.abs().powf(p) };
    Ok(det_sum(f.values.len(), |i| {
        let w = grid.col_weight[i / cu] * uw[i % cu];
        if w == 0.0 {
            0.0
        } else {
            pow(f.values[i]) * w
        }
    }))
}

/// Unweighted `L^p(dx du)` norm under the same quadrature as [`lp_norm`].
pub fn flat_lp_norm(f: &SampledField, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    let grid = &f.grid;
    let s = det_sum(f.values.len(), |i| f.values[i].abs().powf(p) * grid.flat_weight(i));
    Ok(s.powf(1.0 / p))
}

/// Haar measure of `{f > λ}`.
pub fn level_set_measure(f: &SampledField, lambda: f64) -> f64 {
    level_set_measure_in(f, lambda, UWindow::ALL)
}

pub fn level_set_measure_in(f: &SampledField, lambda: f64, window: UWindow) -> f64 {
    let grid = &f.grid;
    let cu = grid.u_axis.count;
    let uw = grid.u_weights(window);
    det_sum(f.values.len(), |i| {
        if f.values[i] > lambda {
            grid.col_weight[i / cu] * uw[i % cu]
        } else {
            0.0
        }
    })
}

/// `(|value|, weight)` pairs sorted by decreasing value, with the cumulative
/// measure of `{|f| >= value}` attached to the last entry of each tie group.
fn sorted_levels(f: &SampledField, window: UWindow) -> Vec<(f64, f64)> {
    let grid = &f.grid;
    let cu = grid.u_axis.count;
    let uw = grid.u_weights(window);
    let mut pairs: Vec<(f64, f64)> = f
        .values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| {
            let w = grid.col_weight[i / cu] * uw[i % cu];
            (v.abs() > 0.0 && w > 0.0).then_some((v.abs(), w))
        })
        .collect();
    pairs.par_sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    // Replace weights with cumulative measure of {|f| >= value}.
    let mut acc = 0.0;
    for p in pairs.iter_mut() {
        acc += p.1;
        p.1 = acc;
    }
    let len = pairs.len();
    let mut out = Vec::with_capacity(len);
    for i in 0..len {
        if i + 1 == len || pairs[i + 1].0 != pairs[i].0 {
            out.push(pairs[i]);
        }
    }
    out
}

/// Weak-`L^1` norm `sup_λ λ μ(|f| > λ)` estimated on a geometric sweep of
/// `lambda_samples` levels between the smallest positive and largest `|f|`.
///
/// Each level is evaluated as `λ μ(|f| >= λ)`, the left limit of
/// `λ' μ(|f| > λ')`, so the estimate never exceeds the true supremum.
pub fn weak_l1_norm(f: &SampledField, lambda_samples: usize) -> Result<f64> {
    weak_l1_norm_in(f, lambda_samples, UWindow::ALL)
}

pub fn weak_l1_norm_in(f: &SampledField, lambda_samples: usize, window: UWindow) -> Result<f64> {
    if lambda_samples < 2 {
        return Err(Error::InvalidArgument("lambda_samples must be >= 2".into()));
    }
    let levels = sorted_levels(f, window);
    if levels.is_empty() {
        return Ok(0.0);
    }
    let vmax = levels[0].0;
    let vmin = levels[levels.len() - 1].0;
    let ratio = vmax / vmin;
    let mut best = 0.0f64;
    for j in 0..lambda_samples {
        let lambda = if j + 1 == lambda_samples {
            vmax
        } else {
            vmin * ratio.powf(j as f64 / (lambda_samples - 1) as f64)
        };
        // Entries are sorted by decreasing value: count those >= lambda.
        let k = levels.partition_point(|&(v, _)| v >= lambda);
        if k > 0 {
            best = best.max(lambda * levels[k - 1].1);
        }
    }
    Ok(best)
}

/// Exact weak-`L^1` norm of the nodal field: the supremum is approached as
/// `λ` increases to one of the sampled values.
pub fn weak_l1_norm_exact(f: &SampledField) -> f64 {
    weak_l1_norm_exact_in(f, UWindow::ALL)
}

pub fn weak_l1_norm_exact_in(f: &SampledField, window: UWindow) -> f64 {
    sorted_levels(f, window).iter().fold(0.0, |m, &(v, mu)| m.max(v * mu))
}

/// Nodal samples of `amplitude(y) · 1_{box}(x, y)`, anti-aliased: a node
/// whose dual cell is only partly inside the box gets the covered fraction.
/// Boxes whose edges fall on dual-cell edges are sampled as exact 0/1 masks.
pub fn indicator_box(
    grid: &LogGrid,
    x_box: &[(f64, f64)],
    y_interval: (f64, f64),
    amplitude: Option<&(dyn Fn(f64) -> f64 + Sync)>,
) -> Result<SampledField> {
    if x_box.len() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: x_box.len() });
    }
    let (ylo, yhi) = y_interval;
    if !(ylo > 0.0) || !(yhi > ylo) {
        return Err(Error::InvalidArgument(format!("bad y interval ({ylo}, {yhi})")));
    }
    let (ulo, uhi) = (ylo.ln(), yhi.ln());
    let xcov: Vec<Vec<f64>> = grid
        .x_axes()
        .iter()
        .zip(x_box)
        .map(|(a, &(lo, hi))| (0..a.count).map(|i| a.coverage(i, lo, hi)).collect())
        .collect();
    let ucov: Vec<f64> = (0..grid.u_axis().count).map(|i| grid.u_axis().coverage(i, ulo, uhi)).collect();
    let n = grid.dim();
    let cu = grid.u_axis().count;
    let mut values = vec![0.0; grid.len()];
    values.par_chunks_mut(cu).enumerate().for_each(|(col, chunk)| {
        let mut ix = vec![0; n];
        grid.column_indices(col, &mut ix);
        let cx: f64 = ix.iter().zip(&xcov).map(|(&i, c)| c[i]).product();
        if cx == 0.0 {
            return;
        }
        for (iu, v) in chunk.iter_mut().enumerate() {
            if ucov[iu] > 0.0 {
                let a = amplitude.map_or(1.0, |f| f(grid.node_u(iu).exp()));
                *v = a * cx * ucov[iu];
            }
        }
    });
    let field = SampledField::new(grid.clone(), values)?;
    if field.values.iter().all(|&v| v == 0.0) {
        log::warn!("indicator box does not intersect the grid; returning the zero field");
    }
    Ok(field)
}

/// Gaussian bump `exp(-|x - c|²/2σx² - (u - cu)²/2σu²)` in log coordinates,
/// set to zero beyond `cutoff` standard deviations (elliptic distance).
pub fn gaussian_bump(
    grid: &LogGrid,
    center_x: &[f64],
    center_u: f64,
    sigma_x: f64,
    sigma_u: f64,
    cutoff: f64,
) -> Result<SampledField> {
    if center_x.len() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: center_x.len() });
    }
    let cx = center_x.to_vec();
    SampledField::from_fn(grid, move |x, u| {
        let r2 = x.iter().zip(&cx).map(|(a, c)| ((a - c) / sigma_x).powi(2)).sum::<f64>()
            + ((u - center_u) / sigma_u).powi(2);
        if r2 > cutoff * cutoff {
            0.0
        } else {
            (-0.5 * r2).exp()
        }
    })
}

const SNAPSHOT_MAGIC: &str = "affine-field 1";

/// Writes a field snapshot in the documented text format.
pub fn write_snapshot<W: Write>(f: &SampledField, mut w: W) -> Result<()> {
    let mut s = String::new();
    writeln!(s, "{SNAPSHOT_MAGIC}").unwrap();
    writeln!(s, "n {}", f.grid.dim()).unwrap();
    for (k, a) in f.grid.x_axes().iter().enumerate() {
        writeln!(s, "axis x{k} {:e} {:e} {}", a.min, a.max, a.count).unwrap();
    }
    let a = f.grid.u_axis();
    writeln!(s, "axis u {:e} {:e} {}", a.min, a.max, a.count).unwrap();
    writeln!(s, "values {}", f.values.len()).unwrap();
    w.write_all(s.as_bytes())?;
    let mut buf = String::with_capacity(24 * 1024);
    for chunk in f.values.chunks(1024) {
        buf.clear();
        for v in chunk {
            writeln!(buf, "{v:e}").unwrap();
        }
        w.write_all(buf.as_bytes())?;
    }
    Ok(())
}

/// Reads a snapshot written by [`write_snapshot`].
pub fn read_snapshot<R: BufRead>(r: R) -> Result<SampledField> {
    let bad = |m: &str| Error::Snapshot(m.to_string());
    let mut lines = r.lines();
    let mut next = move || -> Result<String> {
        lines.next().ok_or_else(|| bad("unexpected end of input"))?.map_err(Error::from)
    };
    if next()?.trim() != SNAPSHOT_MAGIC {
        return Err(bad("missing header"));
    }
    let n: usize = next()?
        .strip_prefix("n ")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| bad("expected `n <dim>`"))?;
    let mut axes = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let line = next()?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        let name = if k < n { format!("x{k}") } else { "u".to_string() };
        if parts.len() != 5 || parts[0] != "axis" || parts[1] != name {
            return Err(bad(&format!("expected axis line for {name}")));
        }
        let min: f64 = parts[2].parse().map_err(|_| bad("axis min"))?;
        let max: f64 = parts[3].parse().map_err(|_| bad("axis max"))?;
        let count: usize = parts[4].parse().map_err(|_| bad("axis count"))?;
        axes.push(Axis::new(min, max, count)?);
    }
    let u_axis = axes.pop().unwrap();
    let grid = LogGrid::new(axes, u_axis)?;
    let count: usize = next()?
        .strip_prefix("values ")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| bad("expected `values <count>`"))?;
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        values.push(next()?.trim().parse::<f64>().map_err(|_| bad("value"))?);
    }
    SampledField::new(grid, values)
}
