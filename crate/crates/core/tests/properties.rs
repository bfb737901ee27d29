//! Oracle checks of the numerical building blocks against dense linear
//! algebra and direct integration.

use gpei::acquisition::{confidence_beta, ucb_score};
use gpei::special::{normal_cdf, normal_pdf};
use gpei::testbed::{estimate_optimum, FnObjective};
use gpei::{ei_score, tau, GpModel, KernelSpec};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()
}

#[test]
fn gram_matrices_are_positive_semidefinite() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let kernels = [
        KernelSpec::squared_exponential(0.3).unwrap(),
        KernelSpec::matern(0.5, 0.2).unwrap(),
        KernelSpec::matern(1.5, 0.2).unwrap(),
        KernelSpec::matern(2.5, 0.5).unwrap(),
        KernelSpec::matern(1.2, 0.3).unwrap(),
    ];
    for k in kernels {
        let xs = points(&mut rng, 40, 3);
        let g = k.gram_matrix(&xs).unwrap();
        let m = DMatrix::from_fn(40, 40, |i, j| g[i][j]);
        let min = SymmetricEigen::new(m).eigenvalues.min();
        assert!(min >= -1e-10, "{k:?}: smallest eigenvalue {min}");
    }
}

#[test]
fn mean_interpolates_with_tiny_regularizer() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let k = KernelSpec::matern(2.5, 0.3).unwrap();
    let mut m = GpModel::new(k, 1e-8, 2).unwrap();
    let xs = points(&mut rng, 15, 2);
    let ys: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
    for (x, &y) in xs.iter().zip(&ys) {
        m.update(x, y).unwrap();
    }
    for (x, &y) in xs.iter().zip(&ys) {
        let p = m.posterior(x).unwrap();
        assert!((p.mean - y).abs() < 1e-5, "{} vs {y}", p.mean);
        assert!(p.stddev < 1e-3);
    }
}

#[test]
fn posterior_ignores_insertion_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let k = KernelSpec::squared_exponential(0.25).unwrap();
    let xs = points(&mut rng, 30, 3);
    let ys: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut a = GpModel::new(k, 0.01, 3).unwrap();
    let mut b = GpModel::new(k, 0.01, 3).unwrap();
    for i in 0..30 {
        a.update(&xs[i], ys[i]).unwrap();
        b.update(&xs[29 - i], ys[29 - i]).unwrap();
    }
    assert!((a.accumulated_info_gain() - b.accumulated_info_gain()).abs() < 1e-9);
    for q in points(&mut rng, 50, 3) {
        let (pa, pb) = (a.posterior(&q).unwrap(), b.posterior(&q).unwrap());
        assert!((pa.mean - pb.mean).abs() < 1e-9);
        assert!((pa.stddev - pb.stddev).abs() < 1e-9);
    }
}

#[test]
fn refit_matches_incremental_updates() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let k = KernelSpec::matern(1.5, 0.2).unwrap();
    let xs = points(&mut rng, 25, 2);
    let ys: Vec<f64> = (0..25).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut inc = GpModel::new(k, 0.05, 2).unwrap();
    for (x, &y) in xs.iter().zip(&ys) {
        inc.update(x, y).unwrap();
    }
    let fit = GpModel::fit(k, 0.05, 2, &xs, &ys).unwrap();
    for q in points(&mut rng, 20, 2) {
        let (a, b) = (inc.posterior(&q).unwrap(), fit.posterior(&q).unwrap());
        assert!((a.mean - b.mean).abs() < 1e-10);
        assert!((a.stddev - b.stddev).abs() < 1e-10);
    }
}

/// EI by Simpson integration of `max(0, m + v z - y) phi(z)`.
fn ei_by_quadrature(mean: f64, incumbent: f64, v: f64) -> f64 {
    let z0 = (incumbent - mean) / v;
    let hi = z0.max(0.0) + 40.0;
    let n = 20_000;
    let h = (hi - z0) / n as f64;
    let f = |z: f64| (mean + v * z - incumbent).max(0.0) * normal_pdf(z);
    let mut s = f(z0) + f(hi);
    for i in 1..n {
        s += f(z0 + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn ei_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let mean = rng.random_range(-3.0..3.0);
        let inc = rng.random_range(-3.0..3.0);
        let v = rng.random_range(0.01..3.0);
        let e = ei_score(mean, inc, v).unwrap();
        let q = ei_by_quadrature(mean, inc, v);
        assert!((e - q).abs() <= 1e-9 * q.max(1e-3), "{mean} {inc} {v}: {e} vs {q}");
    }
}

#[test]
fn tau_matches_definition_in_the_center() {
    for i in -60..=60 {
        let z = i as f64 / 10.0;
        let direct = z * normal_cdf(z) + normal_pdf(z);
        assert!((tau(z) - direct).abs() < 1e-14 * direct.max(1.0), "z={z}");
    }
}

#[test]
fn ucb_is_linear_in_beta() {
    let b1 = confidence_beta(1.0, 1.0, 2.0, 0.05);
    let b2 = confidence_beta(1.0, 1.0, 4.0, 0.05);
    assert!(b2 > b1 && b1 > 0.0);
    assert_eq!(ucb_score(0.5, 0.2, 3.0), 0.5 + 0.6);
}

#[test]
fn larger_budget_never_reports_less() {
    let f = FnObjective::new(3, |x: &[f64]| {
        let r: f64 = x.iter().map(|v| (v - 0.3).powi(2)).sum();
        (-r * 20.0).exp() + 0.5 * (-((x[0] - 0.8).powi(2) + (x[1] - 0.8).powi(2)) * 50.0).exp()
    });
    let small = estimate_optimum(&f, 10_000, &mut ChaCha8Rng::seed_from_u64(9)).unwrap().0;
    let large = estimate_optimum(&f, 1_000_000, &mut ChaCha8Rng::seed_from_u64(9)).unwrap().0;
    assert!(large >= small - 1e-12);
    assert!((large - 1.0).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ei_is_nonnegative_and_dominates_improvement(
        mean in -50.0f64..50.0, inc in -50.0f64..50.0, v in 1e-6f64..20.0
    ) {
        let e = ei_score(mean, inc, v).unwrap();
        prop_assert!(e >= 0.0);
        prop_assert!(e >= mean - inc);
    }

    #[test]
    fn ei_grows_with_scale(mean in -5.0f64..5.0, inc in -5.0f64..5.0, v in 0.01f64..5.0, dv in 0.0f64..2.0) {
        prop_assert!(ei_score(mean, inc, v + dv).unwrap() >= ei_score(mean, inc, v).unwrap());
    }
}
