use gslab_core::dynsys::{classify, compute_r_matrix, cumulative_s, gs_coefficient};
use gslab_core::oscillation::ball_mean_at;
use gslab_core::profiles::{dini_test, square_dini_test};
use gslab_core::quadrature::uniform_grid;
use gslab_core::RadialProfile;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn closed_profile() -> impl Strategy<Value = RadialProfile> {
    prop_oneof![
        (0.2f64..3.0).prop_map(|g| RadialProfile::ex1_pos(g).unwrap()),
        (0.2f64..3.0).prop_map(|g| RadialProfile::ex1_neg(g).unwrap()),
        (0.2f64..3.0).prop_map(|b| RadialProfile::ex2(b).unwrap()),
        (3.0f64..60.0, 2usize..=3).prop_map(|(a, n)| RadialProfile::ex3(a, n).unwrap()),
        (-0.5f64..2.0).prop_map(|c| RadialProfile::constant(c).unwrap()),
    ]
}

/// Tabulated `c t^{-p}` plus a bounded wiggle, on a 0.01 grid over [1, 30].
fn table_profile() -> impl Strategy<Value = RadialProfile> {
    (-0.5f64..0.5, 0.2f64..3.0, -0.1f64..0.1).prop_map(|(c, p, w)| {
        let t = uniform_grid(1.0, 30.0, 2901);
        let g = t.iter().map(|t| c * t.powf(-p) + w * t.sin() / t).collect();
        RadialProfile::table(t, g).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn derivative_matches_finite_differences(p in closed_profile(), s in 0.05f64..0.95) {
        let t = p.t_min() + 0.01 + s * (p.t_max() - p.t_min() - 0.02);
        let h = 1e-5;
        let fd = (p.eval_g(t + h).unwrap() - p.eval_g(t - h).unwrap()) / (2.0 * h);
        let exact = p.eval_dg_dt(t).unwrap();
        prop_assert!((fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()), "{} vs {}", fd, exact);
    }

    #[test]
    fn dini_implies_square_dini(p in prop_oneof![closed_profile(), table_profile()]) {
        if dini_test(&p).holds() {
            prop_assert!(square_dini_test(&p).holds());
        }
        if square_dini_test(&p).fails() {
            prop_assert!(!dini_test(&p).holds());
        }
    }

    #[test]
    fn ball_mean_is_linear(
        g1 in proptest::collection::vec(-0.3f64..0.3, 30),
        g2 in proptest::collection::vec(-0.3f64..0.3, 30),
        a in -1.0f64..1.0,
        b in -1.0f64..1.0,
        n in 2usize..=3,
        s in 0.0f64..1.0,
    ) {
        let t: Vec<f64> = (0..30).map(|i| 1.0 + i as f64).collect();
        let mix: Vec<f64> = g1.iter().zip(&g2).map(|(x, y)| a * x + b * y).collect();
        let p1 = RadialProfile::table(t.clone(), g1).unwrap();
        let p2 = RadialProfile::table(t.clone(), g2).unwrap();
        let pm = RadialProfile::table(t, mix).unwrap();
        let at = 1.0 + s * 15.0;
        let lhs = ball_mean_at(&pm, n, at).unwrap();
        let rhs = a * ball_mean_at(&p1, n, at).unwrap() + b * ball_mean_at(&p2, n, at).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn r_matrix_reduces_to_scalar(g in -0.9f64..5.0, n in 2usize..=3, r in 1e-3f64..1.0) {
        let m = compute_r_matrix(|_, th| gs_coefficient(g, th), n, r).unwrap();
        let expected = DMatrix::<f64>::identity(n, n) * (-(n as f64 - 1.0) / n as f64 * g);
        prop_assert!((m - expected).abs().max() < 1e-10);
    }

    #[test]
    fn stability_is_monotone_in_g(
        c in -0.5f64..0.5,
        p in 0.2f64..3.0,
        bump in proptest::collection::vec(0.0f64..0.3, 30),
        n in 2usize..=3,
    ) {
        let t: Vec<f64> = (0..30).map(|i| 1.0 + i as f64).collect();
        let g1: Vec<f64> = t.iter().map(|t| c * t.powf(-p)).collect();
        let g2: Vec<f64> = g1.iter().zip(&bump).map(|(g, b)| g + b).collect();
        let p1 = RadialProfile::table(t.clone(), g1).unwrap();
        let p2 = RadialProfile::table(t, g2).unwrap();
        let grid = uniform_grid(1.0, 30.0, 2901);
        let s1 = cumulative_s(&p1, n, &grid).unwrap();
        let s2 = cumulative_s(&p2, n, &grid).unwrap();
        for (a, b) in s1.s_grid.iter().zip(&s2.s_grid) {
            prop_assert!(a <= &(b + 1e-12));
        }
    }

    #[test]
    fn non_lipschitz_ignores_the_outer_radius(gamma in 0.2f64..3.0, shift in 0.0f64..5.0, n in 2usize..=3) {
        let p = RadialProfile::ex1_pos(gamma).unwrap();
        let q = p.with_domain(p.t_min() + shift, p.t_max()).unwrap();
        let a = classify(&p, n).unwrap();
        let b = classify(&q, n).unwrap();
        prop_assert_eq!(a.non_lipschitz_exists.status, b.non_lipschitz_exists.status);
        prop_assert_eq!(a.lipschitz_at_0.status, b.lipschitz_at_0.status);
    }

    #[test]
    fn classification_is_consistent(p in closed_profile(), n in 2usize..=3) {
        if p.check_dimension(n).is_ok() {
            let v = classify(&p, n).unwrap();
            prop_assert!(v.check_consistency().is_ok());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn table_classification_is_consistent(p in table_profile(), n in 2usize..=3) {
        let v = classify(&p, n).unwrap();
        prop_assert!(v.check_consistency().is_ok());
    }
}
