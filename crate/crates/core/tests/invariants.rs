use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use adaptctl::adapt_ct::{minmax_objective, minmax_solve, saturate, ParametricNonlinearity};
use adaptctl::analysis::{lyapunov_solve, pe_level, pe_level_discrete};
use adaptctl::estimate::{rls_step, sa_step, RlsEstimatorState, SaEstimatorState, SaNormalizer};
use adaptctl::linalg::{is_hurwitz, max_eigenvalue, min_eigenvalue};
use adaptctl::model::{bezout_solve, Convexity, ParameterSet, Polynomial};
use adaptctl::sim::{format_c_exp, lyapunov_violations, rk4_integrate};
use std::sync::Arc;

fn vec_of(dim: usize, range: std::ops::RangeInclusive<f64>) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(range, dim).prop_map(DVector::from_vec)
}

/// Random matrix shifted left until its spectral abscissa is `-margin`.
fn hurwitz(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (prop::collection::vec(-2.0..2.0f64, n * n), 0.05..3.0f64).prop_map(move |(v, margin)| {
        let m = DMatrix::from_vec(n, n, v);
        let abscissa = m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        m - DMatrix::identity(n, n) * (abscissa + margin)
    })
}

fn exp_family() -> ParametricNonlinearity {
    ParametricNonlinearity::new(
        Arc::new(|x: &DVector<f64>, th: &DVector<f64>| (th[0] * x[0]).exp()),
        Arc::new(|x: &DVector<f64>, th: &DVector<f64>| DVector::from_element(1, x[0] * (th[0] * x[0]).exp())),
        Convexity::Convex,
        ParameterSet::Box { lo: vec![-0.5], hi: vec![1.5] },
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lyapunov_solution_is_spd_with_small_residual(a in (1usize..=6).prop_flat_map(hurwitz)) {
        prop_assume!(is_hurwitz(&a));
        let n = a.nrows();
        let q = DMatrix::identity(n, n);
        let c = lyapunov_solve(&a, &q).unwrap();
        prop_assert!(c.residual <= 1e-10 * (1.0 + c.p.norm()), "residual {}", c.residual);
        prop_assert!((&c.p - c.p.transpose()).norm() <= 1e-12 * c.p.norm());
        prop_assert!(min_eigenvalue(&c.p) > 0.0);
    }

    #[test]
    fn noise_free_sa_step_never_increases_error(
        theta in vec_of(4, -5.0..=5.0),
        truth in vec_of(4, -5.0..=5.0),
        phi in vec_of(4, -10.0..=10.0),
        gamma in 0.01..1.99f64,
        steps in 1usize..6,
    ) {
        let mut s = SaEstimatorState::new(theta, gamma).unwrap().with_normalizer(SaNormalizer::Projection);
        for _ in 0..steps {
            let before = (&s.theta - &truth).norm();
            s = sa_step(&s, &phi, phi.dot(&truth)).unwrap();
            prop_assert!((&s.theta - &truth).norm() <= before + 1e-12);
        }
    }

    #[test]
    fn rls_covariance_stays_positive_and_shrinks(
        phis in prop::collection::vec(vec_of(3, -2.0..=2.0), 1..20),
        gain in 1.0..1e4f64,
    ) {
        let mut s = RlsEstimatorState::new(DVector::zeros(3), DMatrix::identity(3, 3) * gain).unwrap();
        let truth = DVector::from_vec(vec![0.5, -1.0, 2.0]);
        for phi in &phis {
            prop_assume!(phi.norm() > 1e-3);
            let lmax = max_eigenvalue(&s.gamma);
            s = rls_step(&s, phi, phi.dot(&truth)).unwrap();
            prop_assert!(max_eigenvalue(&s.gamma) <= lmax * (1.0 + 1e-12));
            prop_assert!(min_eigenvalue(&s.gamma) > 0.0);
        }
    }

    #[test]
    fn saturation_respects_every_channel_limit(
        v in vec_of(3, -50.0..=50.0),
        limits in prop::collection::vec(0.1..10.0f64, 3),
    ) {
        let s = saturate(&v, &limits).unwrap();
        for (si, m) in s.iter().zip(&limits) {
            prop_assert!(si.abs() <= m * (1.0 + 1e-12));
        }
        // Direction is kept; only the magnitude shrinks.
        prop_assert!(s.norm() <= v.norm() * (1.0 + 1e-12));
        prop_assert!((s.dot(&v) - s.norm() * v.norm()).abs() <= 1e-9 * (1.0 + v.norm_squared()));
    }

    #[test]
    fn minmax_value_bounds_the_objective_over_the_box(
        x in -2.0..2.0f64,
        th_hat in -0.5..1.5f64,
        e_c in prop_oneof![Just(1.0), Just(-1.0)],
    ) {
        let nl = exp_family();
        let xv = DVector::from_element(1, x);
        let hat = DVector::from_element(1, th_hat);
        let sol = minmax_solve(&nl, &xv, &hat, e_c, 1.0).unwrap();
        prop_assert!(sol.value >= 0.0);
        for i in 0..=50 {
            let th = DVector::from_element(1, -0.5 + 2.0 * i as f64 / 50.0);
            let j = minmax_objective(&nl, &xv, &hat, e_c, 1.0, &th, &sol.omega);
            prop_assert!(j <= sol.value + 1e-9 * (1.0 + sol.value.abs()), "J({}) = {j} > {}", th[0], sol.value);
        }
    }

    #[test]
    fn bezout_identity_holds(
        a_tail in prop::collection::vec(-1.0..1.0f64, 1..4),
        c_tail in prop::collection::vec(-1.0..1.0f64, 0..3),
        d in 1usize..4,
    ) {
        let a = Polynomial::new([vec![1.0], a_tail].concat());
        let c = Polynomial::new([vec![1.0], c_tail].concat());
        prop_assume!(c.degree() < a.degree() + d);
        let (f, g) = bezout_solve(&a, &c, d).unwrap();
        prop_assert!(f.degree() < d);
        prop_assert_eq!(f.coeff(0), 1.0);
        let back = &(&a * &f) + &g.shift(d);
        for k in 0..=back.degree().max(c.degree()) {
            prop_assert!((back.coeff(k) - c.coeff(k)).abs() < 1e-9, "coefficient {k}");
        }
    }

    #[test]
    fn pe_level_scales_quadratically(scale in 0.1..10.0f64) {
        let h = 1e-2;
        let rec = |c: f64| -> Vec<DVector<f64>> {
            (0..=1000).map(|k| {
                let t = k as f64 * h;
                DVector::from_vec(vec![c * t.sin(), c * (2.0 * t).cos()])
            }).collect()
        };
        let base = pe_level(&rec(1.0), h, 4.0).unwrap().alpha;
        let scaled = pe_level(&rec(scale), h, 4.0).unwrap().alpha;
        prop_assert!((scaled - scale * scale * base).abs() <= 1e-9 * scaled.max(1.0));
    }

    #[test]
    fn monotone_sequences_have_no_lyapunov_violations(
        mut v in prop::collection::vec(0.0..100.0f64, 1..200),
    ) {
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        prop_assert_eq!(lyapunov_violations(&v, 0.0), 0);
    }

    #[test]
    fn c_exp_format_round_trips(v in prop::num::f64::NORMAL) {
        let s = format_c_exp(v);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - v).abs() <= 1e-12 * v.abs());
        let exp = s.split_once('e').unwrap().1;
        prop_assert!(exp.len() >= 3 && (exp.starts_with('+') || exp.starts_with('-')));
    }
}

#[test]
fn rk4_is_exact_for_cubic_time_dependence() {
    let rhs = |t: f64, _: &DVector<f64>| Ok(DVector::from_element(1, 3.0 * t * t - 2.0 * t + 1.0));
    let x = rk4_integrate(rhs, &DVector::zeros(1), 0.0, 0.25, 8).unwrap();
    assert!((x[0] - (8.0 - 4.0 + 2.0)).abs() < 1e-12);
}

#[test]
fn rk4_global_error_is_fourth_order() {
    let err = |h: f64| {
        let x = rk4_integrate(|_, x: &DVector<f64>| Ok(-x), &DVector::from_element(1, 1.0), 0.0, h, (1.0 / h).round() as usize)
            .unwrap();
        (x[0] - (-1.0f64).exp()).abs()
    };
    let ratio = err(0.1) / err(0.05);
    assert!((14.0..=18.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn alternating_basis_regressor_has_discrete_level_half_window() {
    let s: Vec<DVector<f64>> = (0..60)
        .map(|k| if k % 2 == 0 { DVector::from_vec(vec![1.0, 0.0]) } else { DVector::from_vec(vec![0.0, 1.0]) })
        .collect();
    assert_eq!(pe_level_discrete(&s, 8).unwrap().alpha, 4.0);
}
