//! Closed-form algebra of the affine group `G_n = R^n ⋊ R_+`.
//!
//! Elements are pairs `(x, y)` with `x ∈ R^n` and `y > 0`, multiplied by
//! `(x, y)(x', y') = (x + y x', y y')`. The left Haar measure is
//! `dx dy / y^(n+1)`, which in log coordinates `u = ln y` becomes
//! `e^(-n u) dx du`. Nothing here discretizes anything.

use crate::error::{Error, Result};

/// The group `G_n` for a runtime dimension `n >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AffineGroup {
    n: usize,
}

/// A point `(x, y)` of `G_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    x: Vec<f64>,
    y: f64,
}

/// A unit vector `ω ∈ S^(n-1)` selecting a geodesic direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    omega: Vec<f64>,
}

impl GroupElement {
    pub fn new(x: Vec<f64>, y: f64) -> Result<Self> {
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::NonPositiveScale(y));
        }
        if x.is_empty() {
            return Err(Error::ZeroDimension);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("translation part must be finite".into()));
        }
        Ok(Self { x, y })
    }

    /// Builds an element from log coordinates `(x, u = ln y)`.
    pub fn from_log(x: Vec<f64>, u: f64) -> Result<Self> {
        Self::new(x, u.exp())
    }

    pub fn identity(n: usize) -> Self {
        Self { x: vec![0.0; n.max(1)], y: 1.0 }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn u(&self) -> f64 {
        self.y.ln()
    }
}

impl Direction {
    /// Normalizes `omega` to unit Euclidean length.
    pub fn new(omega: Vec<f64>) -> Result<Self> {
        let norm = omega.iter().map(|v| v * v).sum::<f64>().sqrt();
        if omega.is_empty() || !norm.is_finite() || norm == 0.0 {
            return Err(Error::DegenerateDirection);
        }
        Ok(Self { omega: omega.into_iter().map(|v| v / norm).collect() })
    }

    /// The first coordinate axis `e_1` in dimension `n`.
    pub fn axis(n: usize) -> Self {
        let mut omega = vec![0.0; n.max(1)];
        omega[0] = 1.0;
        Self { omega }
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.omega
    }
}

fn check_same(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn check_scale(y: f64) -> Result<()> {
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::NonPositiveScale(y));
    }
    Ok(())
}

/// Group law `(a.x + a.y b.x, a.y b.y)`.
pub fn multiply(a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
    check_same(a.dim(), b.dim())?;
    let x = a.x.iter().zip(&b.x).map(|(ax, bx)| ax + a.y * bx).collect();
    Ok(GroupElement { x, y: a.y * b.y })
}

/// `(x, y)^(-1) = (-x / y, 1 / y)`.
pub fn inverse(a: &GroupElement) -> GroupElement {
    GroupElement { x: a.x.iter().map(|v| -v / a.y).collect(), y: 1.0 / a.y }
}

/// Density of the left Haar measure against `dx dy`: `y^(-(n+1))`.
pub fn haar_density(y: f64, n: usize) -> Result<f64> {
    check_scale(y)?;
    Ok(y.powi(-(n as i32 + 1)))
}

/// Density of the left Haar measure against `dx du`: `e^(-n u)`.
pub fn haar_log_density(u: f64, n: usize) -> f64 {
    (-(n as f64) * u).exp()
}

/// Modular function `Δ(x, y) = y^(-n)`.
pub fn modular(y: f64, n: usize) -> Result<f64> {
    check_scale(y)?;
    Ok(y.powi(-(n as i32)))
}

/// Jacobian determinant of the left translation `L_g`, i.e. `g.y^(n+1)`.
pub fn left_translation_jacobian(g: &GroupElement) -> f64 {
    g.y.powi(g.dim() as i32 + 1)
}

/// `γ_ω(t) = (ω tanh t, sech t)`.
pub fn geodesic_point(omega: &Direction, t: f64) -> GroupElement {
    let th = t.tanh();
    GroupElement { x: omega.omega.iter().map(|w| w * th).collect(), y: 1.0 / t.cosh() }
}

/// `g γ_ω(t) = (g.x + g.y ω tanh t, g.y sech t)`.
pub fn act_geodesic(g: &GroupElement, omega: &Direction, t: f64) -> Result<GroupElement> {
    check_same(g.dim(), omega.dim())?;
    let th = t.tanh();
    let x = g.x.iter().zip(&omega.omega).map(|(x, w)| x + g.y * w * th).collect();
    Ok(GroupElement { x, y: g.y / t.cosh() })
}

/// Log-coordinate form of [`act_geodesic`]: writes the image of `(x, u)` into
/// `out_x` and returns the image `u`. Exact at `t = 0`.
pub fn act_geodesic_log(x: &[f64], u: f64, omega: &[f64], t: f64, out_x: &mut [f64]) -> f64 {
    let shift = u.exp() * t.tanh();
    for ((o, xi), w) in out_x.iter_mut().zip(x).zip(omega) {
        *o = xi + shift * w;
    }
    u - t.cosh().ln()
}

impl AffineGroup {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(Self { n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::identity(self.n)
    }

    /// Builds an element, checking its dimension against this group.
    pub fn element(&self, x: Vec<f64>, y: f64) -> Result<GroupElement> {
        check_same(self.n, x.len())?;
        GroupElement::new(x, y)
    }

    pub fn direction(&self, omega: Vec<f64>) -> Result<Direction> {
        check_same(self.n, omega.len())?;
        Direction::new(omega)
    }

    pub fn multiply(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        check_same(self.n, a.dim())?;
        multiply(a, b)
    }

    pub fn inverse(&self, a: &GroupElement) -> Result<GroupElement> {
        check_same(self.n, a.dim())?;
        Ok(inverse(a))
    }

    pub fn haar_density(&self, y: f64) -> Result<f64> {
        haar_density(y, self.n)
    }

    pub fn haar_log_density(&self, u: f64) -> f64 {
        haar_log_density(u, self.n)
    }

    pub fn modular(&self, y: f64) -> Result<f64> {
        modular(y, self.n)
    }

    pub fn geodesic_point(&self, omega: &Direction, t: f64) -> Result<GroupElement> {
        check_same(self.n, omega.dim())?;
        Ok(geodesic_point(omega, t))
    }

    pub fn act_geodesic(&self, g: &GroupElement, omega: &Direction, t: f64) -> Result<GroupElement> {
        check_same(self.n, g.dim())?;
        act_geodesic(g, omega, t)
    }
}

/// An axis-aligned box `Π [a_i, b_i] × [y_lo, y_hi]` in group coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarBox {
    pub x: Vec<(f64, f64)>,
    pub y: (f64, f64),
}

impl HaarBox {
    pub fn contains(&self, x: &[f64], y: f64) -> bool {
        y >= self.y.0
            && y <= self.y.1
            && self.x.iter().zip(x).all(|(&(a, b), &v)| v >= a && v <= b)
    }

    /// Exact Haar measure `Π (b_i - a_i) · (y_lo^-n - y_hi^-n) / n`.
    pub fn haar_measure(&self) -> f64 {
        let n = self.x.len() as f64;
        let base: f64 = self.x.iter().map(|(a, b)| b - a).product();
        base * (self.y.0.powf(-n) - self.y.1.powf(-n)) / n
    }
}

/// Haar measure of the right translate `E h` by midpoint quadrature over a
/// bounding box in `(x, u)`, testing membership through `g h^(-1) ∈ E`.
///
/// Independent of the modular-function formula, so it can be used to check
/// `m(E h) = Δ(h) m(E)`.
pub fn right_translate_measure(e: &HaarBox, h: &GroupElement, cells_per_axis: usize) -> Result<f64> {
    let n = e.x.len();
    check_same(n, h.dim())?;
    check_scale(e.y.0)?;
    if cells_per_axis == 0 || n > 3 {
        return Err(Error::InvalidArgument("need 1..=3 dims and at least one cell".into()));
    }
    let h_inv = inverse(h);
    // Bounding box of E h: y range scales by h.y; x range is x + y h.x.
    let (ylo, yhi) = (e.y.0 * h.y, e.y.1 * h.y);
    let mut xb = Vec::with_capacity(n);
    for (i, &(a, b)) in e.x.iter().enumerate() {
        let s0 = e.y.0 * h.x[i];
        let s1 = e.y.1 * h.x[i];
        xb.push((a + s0.min(s1), b + s0.max(s1)));
    }
    let (ulo, uhi) = (ylo.ln(), yhi.ln());
    let du = (uhi - ulo) / cells_per_axis as f64;
    let dx: Vec<f64> = xb.iter().map(|(a, b)| (b - a) / cells_per_axis as f64).collect();
    let cell_vol: f64 = du * dx.iter().product::<f64>();

    let total = cells_per_axis.pow(n as u32);
    let mut x = vec![0.0; n];
    let mut sum = 0.0;
    for iu in 0..cells_per_axis {
        let u = ulo + (iu as f64 + 0.5) * du;
        let y = u.exp();
        let w = haar_log_density(u, n) * cell_vol;
        for flat in 0..total {
            let mut rem = flat;
            for i in (0..n).rev() {
                let k = rem % cells_per_axis;
                rem /= cells_per_axis;
                x[i] = xb[i].0 + (k as f64 + 0.5) * dx[i];
            }
            // g h^-1 = (x + y h_inv.x, y h_inv.y)
            let back: Vec<f64> = x.iter().zip(&h_inv.x).map(|(xi, hx)| xi + y * hx).collect();
            if e.contains(&back, y * h_inv.y) {
                sum += w;
            }
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn el(x: &[f64], y: f64) -> GroupElement {
        GroupElement::new(x.to_vec(), y).unwrap()
    }

    #[test]
    fn identity_is_neutral() {
        let g = el(&[3.0], 4.0);
        assert_eq!(multiply(&GroupElement::identity(1), &g).unwrap(), g);
        assert_eq!(multiply(&g, &GroupElement::identity(1)).unwrap(), g);
    }

    #[test]
    fn group_law_by_substitution() {
        let p = multiply(&el(&[1.0], 2.0), &el(&[3.0], 4.0)).unwrap();
        assert_eq!(p.x(), &[7.0]);
        assert_eq!(p.y(), 8.0);
    }

    #[test]
    fn inverse_values() {
        assert_eq!(inverse(&GroupElement::identity(2)), GroupElement::identity(2));
        let inv = inverse(&el(&[3.0], 4.0));
        assert_eq!(inv.x(), &[-0.75]);
        assert_eq!(inv.y(), 0.25);
    }

    #[test]
    fn rejects_bad_scale_and_dims() {
        assert!(matches!(GroupElement::new(vec![0.0], 0.0), Err(Error::NonPositiveScale(_))));
        assert!(GroupElement::new(vec![0.0], -1.0).is_err());
        assert!(GroupElement::new(vec![0.0], f64::NAN).is_err());
        assert!(matches!(
            multiply(&el(&[0.0], 1.0), &el(&[0.0, 0.0], 1.0)),
            Err(Error::DimensionMismatch { .. })
        ));
        let g2 = AffineGroup::new(2).unwrap();
        assert!(g2.element(vec![1.0], 1.0).is_err());
        assert!(AffineGroup::new(0).is_err());
        assert!(haar_density(0.0, 1).is_err());
        assert!(modular(-2.0, 1).is_err());
    }

    #[test]
    fn densities() {
        for n in 1..5 {
            assert_eq!(haar_density(1.0, n).unwrap(), 1.0);
            assert_eq!(haar_log_density(0.0, n), 1.0);
            assert_eq!(modular(1.0, n).unwrap(), 1.0);
        }
        assert_eq!(haar_density(2.0, 1).unwrap(), 0.25);
        assert!((haar_density(std::f64::consts::E, 3).unwrap() - 0.018_315_638_888_734_18).abs() < 1e-15);
        assert!((haar_log_density(1.0, 2) - 0.135_335_283_236_612_7).abs() < 1e-15);
        assert_eq!(modular(2.0, 3).unwrap(), 0.125);
    }

    #[test]
    fn haar_log_density_chain_rule() {
        for &y in &[0.01f64, 0.3, 1.0, 2.5, 17.0] {
            for n in 1..4 {
                let lhs = haar_log_density(y.ln(), n) / y;
                let rhs = haar_density(y, n).unwrap();
                assert!((lhs - rhs).abs() <= 1e-13 * rhs);
            }
        }
    }

    #[test]
    fn right_translation_scales_by_modular() {
        let e = HaarBox { x: vec![(0.0, 1.0)], y: (1.0, 2.0) };
        let h = el(&[0.0], 2.0);
        let me = right_translate_measure(&e, &GroupElement::identity(1), 400).unwrap();
        let meh = right_translate_measure(&e, &h, 400).unwrap();
        assert!((me - e.haar_measure()).abs() < 1e-3 * me);
        assert!((meh / me - 0.5).abs() < 5e-3, "ratio {}", meh / me);
        assert!((meh / me - modular(2.0, 1).unwrap()).abs() < 5e-3);
    }

    #[test]
    fn right_translation_with_horizontal_part() {
        // Δ depends only on y(h); the x part of h must not change the measure.
        let e = HaarBox { x: vec![(0.0, 1.0)], y: (1.0, 2.0) };
        let h = el(&[0.7], 3.0);
        let me = e.haar_measure();
        let meh = right_translate_measure(&e, &h, 600).unwrap();
        assert!((meh / me - 1.0 / 3.0).abs() < 1e-2, "ratio {}", meh / me);
    }

    #[test]
    fn geodesic_limits_and_values() {
        let w = Direction::axis(1);
        let g0 = geodesic_point(&w, 0.0);
        assert_eq!(g0, GroupElement::identity(1));
        let g1 = geodesic_point(&w, 1.0);
        assert!((g1.x()[0] - 0.761_594_155_955_764_9).abs() < 1e-15);
        assert!((g1.y() - 0.648_054_273_663_885_4).abs() < 1e-15);
        let far = geodesic_point(&w, 40.0);
        assert!(far.y() < 1e-16);
        assert!((far.x()[0] - 1.0).abs() < 1e-15);

        let g = el(&[0.0], 2.0);
        let a = act_geodesic(&g, &w, 1.0).unwrap();
        assert!((a.x()[0] - 1.523_188_311_911_529_8).abs() < 1e-14);
        assert!((a.y() - 1.296_108_547_327_770_8).abs() < 1e-14);
        assert_eq!(act_geodesic(&g, &w, 0.0).unwrap(), g);
    }

    #[test]
    fn direction_is_normalized() {
        let d = Direction::new(vec![3.0, 4.0]).unwrap();
        let norm: f64 = d.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() <= 1e-12);
        assert!(Direction::new(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn geodesic_has_unit_hyperbolic_speed() {
        let w = Direction::new(vec![1.0, -2.0]).unwrap();
        let h = 1e-5;
        for i in 0..40 {
            let t = -3.0 + 0.17 * i as f64;
            let a = geodesic_point(&w, t + h);
            let b = geodesic_point(&w, t - h);
            let mid = geodesic_point(&w, t);
            let dx2: f64 = a.x().iter().zip(b.x()).map(|(p, q)| ((p - q) / (2.0 * h)).powi(2)).sum();
            let dy = (a.y() - b.y()) / (2.0 * h);
            let speed2 = (dx2 + dy * dy) / (mid.y() * mid.y());
            assert!((speed2 - 1.0).abs() < 1e-9, "t={t} speed^2={speed2}");
        }
    }

    fn arb_element(n: usize) -> impl Strategy<Value = GroupElement> {
        (prop::collection::vec(-10.0..10.0f64, n), -3.0..3.0f64)
            .prop_map(|(x, u)| GroupElement::new(x, u.exp()).unwrap())
    }

    proptest! {
        #[test]
        fn associativity(a in arb_element(2), b in arb_element(2), c in arb_element(2)) {
            let l = multiply(&multiply(&a, &b).unwrap(), &c).unwrap();
            let r = multiply(&a, &multiply(&b, &c).unwrap()).unwrap();
            let scale = 1.0 + l.x().iter().map(|v| v.abs()).fold(0.0, f64::max);
            for (p, q) in l.x().iter().zip(r.x()) {
                prop_assert!((p - q).abs() <= 1e-12 * scale);
            }
            prop_assert!((l.y() - r.y()).abs() <= 1e-12 * l.y());
        }

        #[test]
        fn inverse_axioms(a in arb_element(3)) {
            let e = multiply(&a, &inverse(&a)).unwrap();
            let e2 = multiply(&inverse(&a), &a).unwrap();
            for v in e.x().iter().chain(e2.x()) {
                prop_assert!(v.abs() <= 1e-14 * (1.0 + a.x().iter().map(|v| v.abs()).sum::<f64>() / a.y()));
            }
            prop_assert!((e.y() - 1.0).abs() <= 1e-14);
            let back = inverse(&inverse(&a));
            for (p, q) in back.x().iter().zip(a.x()) {
                prop_assert!((p - q).abs() <= 1e-14 * (1.0 + q.abs()));
            }
            prop_assert!((back.y() - a.y()).abs() <= 1e-14 * a.y());
        }

        #[test]
        fn left_invariance_of_haar_density(g in arb_element(2), u in -4.0..4.0f64) {
            let y = u.exp();
            let lhs = haar_density(g.y() * y, 2).unwrap() * left_translation_jacobian(&g);
            let rhs = haar_density(y, 2).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }

        #[test]
        fn geodesic_action_matches_multiplication(
            g in arb_element(2),
            w in prop::collection::vec(-1.0..1.0f64, 2),
            t in -5.0..5.0f64,
        ) {
            prop_assume!(w.iter().map(|v| v.abs()).sum::<f64>() > 1e-3);
            let d = Direction::new(w).unwrap();
            let a = act_geodesic(&g, &d, t).unwrap();
            let b = multiply(&g, &geodesic_point(&d, t)).unwrap();
            for (p, q) in a.x().iter().zip(b.x()) {
                prop_assert!((p - q).abs() <= 1e-14 * (1.0 + p.abs()));
            }
            prop_assert!((a.y() - b.y()).abs() <= 1e-14 * a.y());

            let mut xo = vec![0.0; 2];
            let u = act_geodesic_log(g.x(), g.u(), d.as_slice(), t, &mut xo);
            prop_assert!((u.exp() - a.y()).abs() <= 1e-12 * a.y());
            for (p, q) in xo.iter().zip(a.x()) {
                prop_assert!((p - q).abs() <= 1e-12 * (1.0 + p.abs()));
            }
        }
    }
}
