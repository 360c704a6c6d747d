//! Small numerical helpers shared by the grid code and the experiments.

use rayon::prelude::*;

const CHUNK: usize = 8192;

/// Sums `term(i)` for `i in 0..len` with a fixed chunking, so the result does
/// not depend on the number of worker threads.
pub fn det_sum<F>(len: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let chunks = len.div_ceil(CHUNK);
    let partials: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * CHUNK).min(len);
            (c * CHUNK..end).map(&term).sum::<f64>()
        })
        .collect();
    partials.iter().sum()
}

/// Composite Simpson rule on `[a, b]` with `intervals` (rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let m = intervals.max(2).next_multiple_of(2);
    let h = (b - a) / m as f64;
    let mut acc = f(a) + f(b);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Least-squares slope and intercept of `ys` against `xs`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `sech t`, written to avoid overflow of `cosh` for large `|t|`.
pub fn sech(t: f64) -> f64 {
    let a = t.abs();
    let e = (-a).exp();
    2.0 * e / (1.0 + e * e)
}

/// `ln cosh t`, stable for large `|t|`.
pub fn ln_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}
