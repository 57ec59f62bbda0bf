use bladeopt::evaluation::efficiency;
use bladeopt::geometry::{AirfoilSection, BaselineTable};
use bladeopt::parameterization::ParameterSpace;
use bladeopt::response_optimization::{grid_minimize, horner, Constraint, Relation, ResponseSurface};
use bladeopt::spline::{averaged_knots, BSplineCurve, SplineFit};
use proptest::prelude::*;

fn curve_strategy() -> impl Strategy<Value = BSplineCurve> {
    (1usize..=4, 0usize..8).prop_flat_map(|(p, extra)| {
        let n = p + 1 + extra;
        (prop::collection::vec(0.0f64..1.0, n - p - 1), prop::collection::vec(-10.0f64..10.0, n)).prop_map(
            move |(mut interior, values)| {
                interior.sort_by(f64::total_cmp);
                let mut knots = vec![0.0; p + 1];
                knots.extend(interior);
                knots.extend(vec![1.0; p + 1]);
                BSplineCurve::from_values(p, knots, values).unwrap()
            },
        )
    })
}

fn space() -> ParameterSpace {
    let dist = BaselineTable::bundled().fit(&SplineFit::new(3, 10, true), 0.25, 5).unwrap();
    ParameterSpace::new(dist).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn basis_is_a_partition_of_unity(c in curve_strategy(), t in 0.0f64..=1.0) {
        let sum: f64 = c.basis_values(t).unwrap().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clamped_ends_hit_the_end_control_points(c in curve_strategy()) {
        prop_assert_eq!(c.eval1(0.0).unwrap(), c.control_point(0)[0]);
        prop_assert_eq!(c.eval1(1.0).unwrap(), c.control_point(c.n_ctrl() - 1)[0]);
    }

    #[test]
    fn knot_insertion_never_increases_the_fit_residual(
        coef in prop::collection::vec(-1.0f64..1.0, 6),
        n in 5usize..12,
        at in 0.01f64..0.99,
    ) {
        let t: Vec<f64> = (0..40).map(|k| k as f64 / 39.0).collect();
        let y: Vec<f64> = t.iter().map(|x| horner(&coef, *x) + (7.0 * x).sin()).collect();
        let coarse = averaged_knots(&t, 3, n).unwrap();
        let mut fine = coarse.clone();
        let pos = fine.iter().position(|&k| k > at).unwrap();
        fine.insert(pos, at);
        let sse = |knots: Vec<f64>| {
            let c = SplineFit::new(3, knots.len() - 4, false).fit_with_knots(&t, &y, knots).unwrap();
            t.iter().zip(&y).map(|(x, v)| (c.eval1(*x).unwrap() - v).powi(2)).sum::<f64>()
        };
        let (a, b) = (sse(coarse), sse(fine));
        prop_assert!(b <= a * (1.0 + 1e-9) + 1e-24);
    }

    #[test]
    fn efficiency_identity(j in 0.01f64..2.0, kt in -0.5f64..1.0, kq in 1e-3f64..0.3) {
        let eta = efficiency(j, kt, kq).unwrap();
        prop_assert!((eta * 2.0 * std::f64::consts::PI * kq - j * kt).abs() <= 1e-12 * (j * kt).abs().max(1.0));
    }

    #[test]
    fn camber_scaling_is_exact(target in 0.0f64..0.08) {
        let s = AirfoilSection::naca4("2412", 41).unwrap();
        let scaled = s.scale_max_camber(target).unwrap();
        prop_assert!((scaled.max_camber() - target).abs() <= 1e-12);
        prop_assert_eq!(scaled.half_thickness(), s.half_thickness());
    }

    #[test]
    fn horner_matches_power_sum(coef in prop::collection::vec(-5.0f64..5.0, 1..8), x in -1.0f64..1.0) {
        let naive: f64 = coef.iter().enumerate().map(|(k, c)| c * x.powi(k as i32)).sum();
        prop_assert!((horner(&coef, x) - naive).abs() <= 1e-12 * coef.iter().map(|c| c.abs()).sum::<f64>().max(1.0));
    }

    #[test]
    fn constraints_never_improve_the_optimum(a in -1.0f64..1.0, cap in -0.9f64..0.9) {
        let obj = ResponseSurface::from_coefficients(vec![1.0 + a * a, -2.0 * a, 1.0], (-1.0, 1.0)).unwrap();
        let line = ResponseSurface::from_coefficients(vec![0.0, 1.0], (-1.0, 1.0)).unwrap();
        let free = grid_minimize(&obj, &[], 401, None).unwrap();
        let c = Constraint { name: "cap".into(), surface: line, relation: Relation::Le(cap) };
        let capped = grid_minimize(&obj, &[c], 401, None).unwrap();
        prop_assert!(capped.value >= free.value);
        prop_assert!(capped.mu_active <= cap);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn parameters_act_affinely(mu in prop::collection::vec(-1.0f64..1.0, 20), alpha in -1.0f64..1.0) {
        let s = space();
        let base = s.baseline().pitch.coords().to_vec();
        let full = s.apply(&mu).unwrap();
        let scaled_mu: Vec<f64> = mu.iter().map(|v| alpha * v).collect();
        let part = s.apply(&scaled_mu).unwrap();
        for ((b, f), p) in base.iter().zip(full.pitch.coords()).zip(part.pitch.coords()) {
            prop_assert!((p - (b + alpha * (f - b))).abs() <= 1e-12 * b.abs().max(1.0));
        }
        let neg: Vec<f64> = mu.iter().map(|v| -v).collect();
        let mirrored = s.apply(&neg).unwrap();
        for ((b, f), m) in base.iter().zip(full.pitch.coords()).zip(mirrored.pitch.coords()) {
            prop_assert!(((f - b) + (m - b)).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn samples_are_reproducible_and_smooth(seed in 0u64..1000) {
        let s = space().with_bound_scales(1.0 / 64.0, 1.0 / 32.0).unwrap();
        let a = s.sample_designs(20, seed).unwrap();
        let b = s.sample_designs(20, seed).unwrap();
        prop_assert_eq!(&a.designs, &b.designs);
        for d in &a.designs {
            prop_assert!(s.smoothness_filter(d.as_slice()).unwrap());
        }
    }
}
