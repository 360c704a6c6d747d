//! Maximal operators on sampled fields.
//!
//! Every operator takes `|f|` and returns the pointwise supremum of its
//! averages over a [`RadiusSet`]. The `r -> 0` limit, `|f|` itself, is always
//! part of the supremum.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{LogGrid, RadiusSet, SampledField};
use crate::group::{act_geodesic_log, Direction};

/// Cap on the geodesic quadrature step.
pub const GEODESIC_MAX_STEP: f64 = 0.05;

const SNAP: f64 = 1e-9;

/// `V_n(r) = (1 - e^(-n r)) / n`, the Haar-compatible length of `[0, r]`.
pub fn v_n(r: f64, n: usize) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    let nf = n as f64;
    Ok(-(-nf * r).exp_m1() / nf)
}

/// `L^1` norm of the dominating kernel `Φ(t) = e^(-α t) / V_n(1)` with
/// `α = n (1 - 1/p)`: `p / ((1 - e^(-n)) (p - 1))`. Diverges as `p -> 1`.
pub fn phi_l1_norm(n: usize, p: f64) -> Result<f64> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidExponent(p));
    }
    let nf = n as f64;
    Ok(p / (-(-nf).exp_m1() * (p - 1.0)))
}

/// Dilation kernel `K_r(t) = e^(-α t) 1_[0,r](t) / V_n(r)` seen by the
/// flattened field `H = e^(-n u / p) F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DilationKernelSpec {
    n: usize,
    p: f64,
    r: f64,
}

impl DilationKernelSpec {
    pub fn new(n: usize, p: f64, r: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        if !(p >= 1.0) {
            return Err(Error::InvalidExponent(p));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
        }
        Ok(Self { n, p, r })
    }

    /// Damping rate `n (1 - 1/p)`.
    pub fn alpha(&self) -> f64 {
        self.n as f64 * (1.0 - 1.0 / self.p)
    }

    pub fn kernel(&self, t: f64) -> f64 {
        if !(0.0..=self.r).contains(&t) {
            return 0.0;
        }
        (-self.alpha() * t).exp() / v_n(self.r, self.n).unwrap()
    }

    /// `Φ(t) = e^(-α t) / V_n(1)` on `t >= 0`.
    pub fn dominating(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        (-self.alpha() * t).exp() / v_n(1.0, self.n).unwrap()
    }

    /// `(t, K_r(t))` at the quadrature nodes `t = j step` in `[0, r]`.
    pub fn discrete_kernel(&self, step: f64) -> Vec<(f64, f64)> {
        let count = (self.r / step + SNAP).floor() as usize;
        (0..=count)
            .map(|j| {
                let t = j as f64 * step;
                (t, self.kernel(t))
            })
            .collect()
    }
}

/// `H(x, u) = e^(-n u / p) F(x, u)`. The Haar `L^p` norm of `F` equals the
/// flat `L^p(dx du)` norm of `H`.
pub fn flatten_for_lp(f: &SampledField, p: f64) -> Result<SampledField> {
    if !(p >= 1.0) || p.is_infinite() {
        return Err(Error::InvalidExponent(p));
    }
    let grid = f.grid();
    let nf = grid.dim() as f64;
    let cu = grid.u_axis().count;
    let scale: Vec<f64> = (0..cu).map(|iu| (-nf * grid.node_u(iu) / p).exp()).collect();
    let values = f.values().iter().enumerate().map(|(i, v)| v * scale[i % cu]).collect();
    SampledField::new(grid.clone(), values).map(|h| h.with_outside_reads(f.outside_reads()))
}

fn collect(grid: &LogGrid, pairs: Vec<(f64, u64)>, prior: u64) -> SampledField {
    let outside = pairs.iter().map(|p| p.1).sum::<u64>() + prior;
    let values = pairs.into_iter().map(|p| p.0).collect();
    SampledField::from_parts(grid.clone(), values, outside)
}

/// Lattice offsets inside the Euclidean ball of radius `r`, in
/// lexicographic order.
fn ball_stencil(spacings: &[f64], r: f64) -> Vec<Vec<isize>> {
    let bounds: Vec<isize> = spacings.iter().map(|h| (r / h * (1.0 + SNAP)).floor() as isize).collect();
    let limit = r * r * (1.0 + SNAP);
    let n = spacings.len();
    let mut out = Vec::new();
    let mut d: Vec<isize> = bounds.iter().map(|b| -b).collect();
    loop {
        let dist2: f64 = d.iter().zip(spacings).map(|(&di, h)| (di as f64 * h).powi(2)).sum();
        if dist2 <= limit {
            out.push(d.clone());
        }
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if d[k] < bounds[k] {
                d[k] += 1;
                break;
            }
            d[k] = -bounds[k];
        }
    }
}

/// Translation maximal operator, computed slice by slice as the
/// Hardy-Littlewood maximal function of `x -> |f(x, u)|` over Euclidean
/// balls of the given radii. Lattice points of the ball that fall off the
/// grid count in the normalizer and contribute zero.
pub fn m_trans(f: &SampledField, radii: &RadiusSet) -> Result<SampledField> {
    let grid = f.grid();
    let n = grid.dim();
    let spacings: Vec<f64> = grid.x_axes().iter().map(|a| a.spacing()).collect();
    let counts: Vec<usize> = grid.x_axes().iter().map(|a| a.count).collect();
    let stencils: Vec<Vec<Vec<isize>>> = radii.as_slice().iter().map(|&r| ball_stencil(&spacings, r)).collect();
    let cu = grid.u_axis().count;
    let values = f.values();

    let pairs: Vec<(f64, u64)> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (col, iu) = (idx / cu, idx % cu);
            let mut ix = vec![0usize; n];
            grid.column_indices(col, &mut ix);
            let mut best = values[idx].abs();
            let mut outside = 0u64;
            for stencil in &stencils {
                let mut sum = 0.0;
                'offset: for d in stencil {
                    let mut c = 0usize;
                    for k in 0..n {
                        let j = ix[k] as isize + d[k];
                        if j < 0 || j >= counts[k] as isize {
                            outside += 1;
                            continue 'offset;
                        }
                        c = c * counts[k] + j as usize;
                    }
                    sum += values[c * cu + iu].abs();
                }
                best = best.max(sum / stencil.len() as f64);
            }
            (best, outside)
        })
        .collect();
    Ok(collect(grid, pairs, f.outside_reads()))
}

/// Radius `r` on a uniform mesh of step `h`: whole steps and remainder.
fn split_radius(r: f64, h: f64) -> (usize, f64) {
    let s = r / h;
    let j = s.round();
    if (s - j).abs() < SNAP {
        (j as usize, 0.0)
    } else {
        let j = s.floor();
        (j as usize, r - j * h)
    }
}

/// Shared kernel of [`m_leb`] and [`m_dil`]: `sup_r (1/N(r)) ∫_0^r |F(x, u+t)| e^(-w t) dt`
/// with `N(r)` the same quadrature applied to `e^(-w t)`.
fn vertical_maximal(f: &SampledField, radii: &RadiusSet, rate: f64) -> SampledField {
    let grid = f.grid();
    let h = grid.u_axis().spacing();
    let cu = grid.u_axis().count;
    let splits: Vec<(usize, f64)> = radii.as_slice().iter().map(|&r| split_radius(r, h)).collect();
    let steps = splits.iter().map(|s| s.0).max().unwrap() + 1;
    let weight: Vec<f64> = (0..=steps).map(|j| (-rate * j as f64 * h).exp()).collect();
    let normalizers: Vec<f64> = radii
        .as_slice()
        .iter()
        .zip(&splits)
        .map(|(&r, &(j, rem))| {
            let whole: f64 = (0..j).map(|i| 0.5 * h * (weight[i] + weight[i + 1])).sum();
            whole + 0.5 * rem * (weight[j] + (-rate * r).exp())
        })
        .collect();
    let values = f.values();

    let pairs: Vec<(f64, u64)> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let iu = idx % cu;
            let sample = |j: usize, outside: &mut u64| -> f64 {
                if iu + j < cu {
                    values[idx + j].abs()
                } else {
                    *outside += 1;
                    0.0
                }
            };
            let mut outside = 0u64;
            let mut best = values[idx].abs();
            let mut cum = 0.0;
            let mut walked = 0usize;
            let mut f_prev = sample(0, &mut outside);
            let mut g_prev = f_prev * weight[0];
            for ((&r, &(j, rem)), &norm) in radii.as_slice().iter().zip(&splits).zip(&normalizers) {
                while walked < j {
                    f_prev = sample(walked + 1, &mut outside);
                    let g_next = f_prev * weight[walked + 1];
                    cum += 0.5 * h * (g_prev + g_next);
                    g_prev = g_next;
                    walked += 1;
                }
                let mut total = cum;
                if rem > 0.0 {
                    let b = if iu + j + 1 < cu { values[idx + j + 1].abs() } else { 0.0 };
                    let at_r = (f_prev + (b - f_prev) * rem / h) * (-rate * r).exp();
                    total += 0.5 * rem * (g_prev + at_r);
                }
                best = best.max(total / norm);
            }
            (best, outside)
        })
        .collect();
    collect(grid, pairs, f.outside_reads())
}

/// Unweighted vertical maximal operator `sup_r (1/r) ∫_0^r |f(x, y e^t)| dt`.
pub fn m_leb(f: &SampledField, radii: &RadiusSet) -> Result<SampledField> {
    Ok(vertical_maximal(f, radii, 0.0))
}

/// Modular-weighted dilation maximal operator
/// `sup_r (1/V_n(r)) ∫_0^r |f(x, y e^t)| e^(-n t) dt`, with `V_n(r)` replaced
/// by its own quadrature so constants are reproduced exactly.
pub fn m_dil(f: &SampledField, radii: &RadiusSet) -> Result<SampledField> {
    Ok(vertical_maximal(f, radii, f.grid().dim() as f64))
}

/// `S_t f(g) = f(g γ_ω(t))`, evaluated by interpolation.
pub fn shift_st(f: &SampledField, omega: &Direction, t: f64) -> Result<SampledField> {
    let grid = f.grid();
    if omega.dim() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: omega.dim() });
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("shift time must be >= 0, got {t}")));
    }
    let n = grid.dim();
    let cu = grid.u_axis().count;
    let w = omega.as_slice();
    let pairs: Vec<(f64, u64)> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let mut x = vec![0.0; n];
            let mut xt = vec![0.0; n];
            grid.column_coords(idx / cu, &mut x);
            let ut = act_geodesic_log(&x, grid.node_u(idx % cu), w, t, &mut xt);
            let v = f.interpolate_log(&xt, ut);
            (v.value, v.outside as u64)
        })
        .collect();
    Ok(collect(grid, pairs, f.outside_reads()))
}

/// Step of the geodesic time mesh for a grid.
pub fn geodesic_step(grid: &LogGrid) -> f64 {
    grid.min_spacing().min(GEODESIC_MAX_STEP)
}

/// Integrals `∫_0^e S_t f(g) dt` for ascending `ends`, using the trapezoid
/// rule on the mesh `j·dt` and the linear interpolant of the samples beyond
/// the last whole step.
fn geodesic_integrals(
    f: &SampledField,
    x: &[f64],
    u: f64,
    omega: &[f64],
    dt: f64,
    ends: &[f64],
    out: &mut [f64],
) -> u64 {
    let mut outside = 0u64;
    let mut xt = vec![0.0; x.len()];
    let mut eval = |j: usize| -> f64 {
        let ut = act_geodesic_log(x, u, omega, j as f64 * dt, &mut xt);
        let v = f.interpolate_log(&xt, ut);
        outside += v.outside as u64;
        v.value
    };
    let mut cum = 0.0;
    let mut walked = 0usize;
    let mut g_prev = eval(0);
    let mut g_next: Option<f64> = None;
    for (o, &e) in out.iter_mut().zip(ends) {
        let (j, rem) = split_radius(e, dt);
        while walked < j {
            let g = g_next.take().unwrap_or_else(|| eval(walked + 1));
            cum += 0.5 * dt * (g_prev + g);
            g_prev = g;
            walked += 1;
        }
        *o = cum;
        if rem > 0.0 {
            let g = *g_next.get_or_insert_with(|| eval(walked + 1));
            let at_e = g_prev + (g - g_prev) * rem / dt;
            *o += 0.5 * rem * (g_prev + at_e);
        }
    }
    outside
}

fn check_direction(f: &SampledField, omega: &Direction) -> Result<()> {
    if omega.dim() != f.grid().dim() {
        return Err(Error::DimensionMismatch { expected: f.grid().dim(), got: omega.dim() });
    }
    Ok(())
}

/// Applies `combine(integrals)` at every node, where `integrals` holds the
/// geodesic integrals up to each of `ends`.
fn per_node_geodesic<F>(f: &SampledField, omega: &Direction, ends: &[f64], combine: F) -> SampledField
where
    F: Fn(usize, &[f64]) -> f64 + Sync,
{
    let grid = f.grid();
    let n = grid.dim();
    let cu = grid.u_axis().count;
    let dt = geodesic_step(grid);
    let w = omega.as_slice();
    let pairs: Vec<(f64, u64)> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let mut x = vec![0.0; n];
            grid.column_coords(idx / cu, &mut x);
            let mut ints = vec![0.0; ends.len()];
            let outside = geodesic_integrals(f, &x, grid.node_u(idx % cu), w, dt, ends, &mut ints);
            (combine(idx, &ints), outside)
        })
        .collect();
    collect(grid, pairs, f.outside_reads())
}

/// Maximal operator along the fixed geodesic direction `ω`:
/// `sup_r (1/r) ∫_0^r |f(g γ_ω(t))| dt`.
pub fn m_geo(f: &SampledField, omega: &Direction, radii: &RadiusSet) -> Result<SampledField> {
    check_direction(f, omega)?;
    let values = f.values();
    let rs = radii.as_slice();
    Ok(per_node_geodesic(&f.abs(), omega, rs, |idx, ints| {
        ints.iter().zip(rs).fold(values[idx].abs(), |m, (i, r)| m.max(i / r))
    }))
}

/// Block average `B_0 f = ∫_0^1 S_t f dt`, `B_k f = 2^-k ∫_{2^(k-1)}^{2^k} S_t f dt`.
pub fn dyadic_block(f: &SampledField, omega: &Direction, k: u32) -> Result<SampledField> {
    check_direction(f, omega)?;
    if k >= 60 {
        return Err(Error::InvalidArgument(format!("block index {k} too large")));
    }
    let top = 2f64.powi(k as i32);
    if k == 0 {
        return Ok(per_node_geodesic(f, omega, &[1.0], |_, ints| ints[0]));
    }
    Ok(per_node_geodesic(f, omega, &[top / 2.0, top], |_, ints| (ints[1] - ints[0]) / top))
}

/// Dyadic maximal operator `sup_k 2^-k ∫_0^{2^k} |S_t f| dt` over
/// `k_min..=k_max`. Negative `k` covers radii below one.
pub fn dyadic_maximal(f: &SampledField, omega: &Direction, k_min: i32, k_max: i32) -> Result<SampledField> {
    check_direction(f, omega)?;
    if k_min > k_max || k_max >= 60 || k_min < -60 {
        return Err(Error::InvalidArgument(format!("bad dyadic range {k_min}..={k_max}")));
    }
    let ends: Vec<f64> = (k_min..=k_max).map(|k| 2f64.powi(k)).collect();
    let ends_ref = &ends;
    Ok(per_node_geodesic(&f.abs(), omega, &ends, move |_, ints| {
        ints.iter().zip(ends_ref).fold(0.0, |m, (i, e)| m.max(i / e))
    }))
}
