//! Invariants as property tests.

use proptest::prelude::*;
use stablelab_core::kernel_engine::{extend_grid, ExtendOptions, ExtensionField};
use stablelab_core::littlewood_paley::{carre_du_champ_with, lp_norm, maximal_function};
use stablelab_core::simulator::{bridge_crossing_prob, AnisotropicBox};
use stablelab_core::{GridFunction, SpaceTimePoint, StableParams};

fn params() -> impl Strategy<Value = StableParams> {
    (1usize..=2, 0.2f64..1.9).prop_map(|(d, a)| StableParams::new(d, a).unwrap())
}

fn line(vals: Vec<f64>, h: f64) -> GridFunction {
    let n = vals.len();
    GridFunction::new(vec![-(n as f64) * h / 2.0], h, vec![n], vals).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bridge_probability_is_a_probability(a in 0.0f64..5.0, b in 0.0f64..5.0, dt in 1e-4f64..10.0) {
        let p = bridge_crossing_prob(a, b, dt);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p - bridge_crossing_prob(b, a, dt)).abs() < 1e-15);
        prop_assert!(bridge_crossing_prob(a, b, 2.0 * dt) >= p);
    }

    #[test]
    fn box_scaling_keeps_membership(p in params(), r in 0.1f64..4.0, c in 0.2f64..5.0, u in -0.99f64..0.99, v in -0.99f64..0.99) {
        let d = p.d();
        let center = SpaceTimePoint::new(vec![0.3; d], 100.0).unwrap();
        let bx = AnisotropicBox::plain(center.clone(), r).unwrap();
        let hx = bx.horizontal_half_width(p);
        let x: Vec<f64> = (0..d).map(|_| 0.3 + u * hx).collect();
        let t = 100.0 + v * bx.vertical_half_width();
        prop_assert!(bx.contains(p, &x, t));
        // the parabolic dilation x -> c^{1/alpha} x, t -> c^{1/2} t about the centre maps D_r onto D_{c^{1/2} r}
        let big = bx.scaled(c.sqrt()).unwrap();
        let xs: Vec<f64> = x.iter().map(|xi| 0.3 + (xi - 0.3) * c.powf(1.0 / p.alpha())).collect();
        let ts = 100.0 + (t - 100.0) * c.sqrt();
        prop_assert!(big.contains(p, &xs, ts));
        let vol = bx.volume(p) * c.powf(d as f64 / p.alpha() + 0.5);
        prop_assert!((big.volume(p) - vol).abs() < 1e-9 * vol);
    }

    #[test]
    fn extension_preserves_mass_and_order(vals in prop::collection::vec(0.0f64..1.0, 16..48), a in 0.3f64..1.9, t in 0.01f64..2.0) {
        let p = StableParams::new(1, a).unwrap();
        let f = line(vals, 0.25);
        let g = extend_grid(&f, p, t);
        prop_assume!(g.is_ok());
        let g = g.unwrap();
        let field = ExtensionField::new(&f, p, t, &ExtendOptions::default()).unwrap();
        let slack = 10.0 * field.diagnostics().wrap_bound + 1e-12;
        prop_assert!(g.min_value() >= -slack);
        prop_assert!(g.max_abs() <= f.max_abs() + slack);
    }

    #[test]
    fn gamma_is_nonnegative_and_truncation_shrinks_it(vals in prop::collection::vec(-1.0f64..1.0, 8..40), a in 0.3f64..1.9, rho in 0.05f64..3.0) {
        let p = StableParams::new(1, a).unwrap();
        let mut v = vals;
        let n = v.len();
        v[0] = 0.0;
        v[n - 1] = 0.0;
        let f = line(v, 0.1);
        let full = carre_du_champ_with(&f, p, None, f64::INFINITY).unwrap();
        let cut = carre_du_champ_with(&f, p, Some(rho), f64::INFINITY).unwrap();
        for (x, y) in full.values().iter().zip(cut.values()) {
            prop_assert!(*y >= 0.0);
            prop_assert!(*y <= x * (1.0 + 1e-10) + 1e-12);
        }
    }

    #[test]
    fn maximal_function_dominates(vals in prop::collection::vec(-3.0f64..3.0, 1..64)) {
        let f = line(vals, 0.2);
        let m = maximal_function(&f).unwrap();
        for (a, b) in m.values().iter().zip(f.values()) {
            prop_assert!(*a >= b.abs() - 1e-12);
        }
    }

    #[test]
    fn lp_norm_is_homogeneous(vals in prop::collection::vec(-2.0f64..2.0, 1..32), c in -4.0f64..4.0, q in 1.0f64..4.0) {
        let f = line(vals, 0.3);
        let g = f.with_values(f.values().iter().map(|v| c * v).collect()).unwrap();
        let (a, b) = (lp_norm(&g, q).unwrap(), c.abs() * lp_norm(&f, q).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300) + 1e-300);
    }
}
