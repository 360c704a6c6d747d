use affine_maximal::field::{gaussian_bump, indicator_box, lp_norm, weak_l1_norm_exact};
use affine_maximal::numeric::sech;
use affine_maximal::operators::{m_dil, m_leb, shift_st};
use affine_maximal::stochastic::{convolve_r_mu, rho_p, DiscreteMeasure};
use affine_maximal::{Axis, Direction, GroupElement, LogGrid, RadiusSet, SampledField};
use proptest::prelude::*;

fn grid_1d(x: (f64, f64, usize), u: (f64, f64, usize)) -> LogGrid {
    LogGrid::new(vec![Axis::new(x.0, x.1, x.2).unwrap()], Axis::new(u.0, u.1, u.2).unwrap()).unwrap()
}

fn step_field() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0..4.0f64], 9 * 21)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn vertical_maximal_dominates_and_weak_norm_below_l1(values in step_field()) {
        let g = grid_1d((0.0, 1.0, 9), (-1.0, 1.0, 21));
        let f = SampledField::new(g.clone(), values).unwrap();
        let radii = RadiusSet::default_for(&g);
        for m in [m_leb(&f, &radii).unwrap(), m_dil(&f, &radii).unwrap()] {
            for (a, b) in m.values().iter().zip(f.values()) {
                prop_assert!(*a >= b.abs());
            }
        }
        prop_assert!(weak_l1_norm_exact(&f) <= lp_norm(&f, 1.0).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn vertical_point_mass_scales_l1_by_rho(j in -3i32..=3) {
        // Shifts by whole u cells keep the sampled field exact.
        let g = grid_1d((0.0, 1.0, 5), (-4.0, 4.0, 81));
        let f = indicator_box(&g, &[(0.0, 1.0)], ((-0.55f64).exp(), 0.55f64.exp()), None).unwrap();
        let y = (0.1 * j as f64).exp();
        let mu = DiscreteMeasure::point_mass(GroupElement::new(vec![0.0], y).unwrap());
        let moved = convolve_r_mu(&f, &mu).unwrap();
        let ratio = lp_norm(&moved, 1.0).unwrap() / lp_norm(&f, 1.0).unwrap();
        prop_assert!((ratio - rho_p(&mu, 1.0, 1).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn shift_norm_identity_for_random_times(t in 0.0..1.5f64, p in 1.0..3.0f64) {
        let g = grid_1d((-2.0, 1.4, 69), (-4.6, -0.6, 81));
        let f = gaussian_bump(&g, &[0.0], -3.3, 0.3, 0.3, 4.0).unwrap();
        let s = shift_st(&f, &Direction::axis(1), t).unwrap();
        let ratio = lp_norm(&s, p).unwrap() / lp_norm(&f, p).unwrap();
        prop_assert!((ratio / sech(t).powf(1.0 / p) - 1.0).abs() < 0.02);
    }
}

#[test]
fn dilation_maximal_of_constant_is_constant_where_window_fits() {
    let g = grid_1d((0.0, 1.0, 3), (-2.0, 2.0, 81));
    let f = SampledField::constant(&g, 2.5);
    let radii = RadiusSet::geometric(0.05, 1.0, 2f64.powf(0.25)).unwrap();
    let m = m_dil(&f, &radii).unwrap();
    for iu in 0..g.u_axis().count {
        if g.node_u(iu) + radii.max() <= 2.0 {
            assert!((m.at(1, iu) - 2.5).abs() < 1e-12);
        }
    }
}
