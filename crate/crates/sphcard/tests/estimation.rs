//! Estimators: worked examples, rotational equivariance, the score and
//! the Fisher information.

mod common;

use common::{draw, params, rotate_params, rotation};
use proptest::prelude::*;
use sphcard::cardioid::density;
use sphcard::estimation::*;
use sphcard::geometry::mat_vec;
use sphcard::{CardioidParams, Error, SphereSample, UnitVector};

/// Largest density discrepancy between `p` at `x` and `q` at `O x` over the
/// sample points.
fn equivariance_gap(s: &SphereSample, p: &CardioidParams, q: &CardioidParams, o: &[f64]) -> f64 {
    s.rows()
        .take(50)
        .map(|x| (density(p, x).unwrap() - density(q, &mat_vec(o, x)).unwrap()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn mm2_scatter_example_truncates() {
    // Scatter diag(0.5, 0.25, 0.25): the top eigenvalue gives rho = 1.25.
    let a = 0.5f64.sqrt();
    let rows = vec![
        vec![1.0, 0.0, 0.0],
        vec![-1.0, 0.0, 0.0],
        vec![0.0, a, a],
        vec![0.0, a, -a],
    ];
    let s = SphereSample::from_rows(2, &rows).unwrap();
    let fit = fit_mm2(&s, SignChoice::Plus).unwrap();
    assert!((fit.rho_raw - 1.25).abs() < 1e-12);
    assert_eq!(fit.params.rho(), 1.0);
    assert!(fit.truncated);
    assert!((fit.params.mu().as_slice()[0].abs() - 1.0).abs() < 1e-12);
}

#[test]
fn mm2_isotropic_scatter_is_degenerate() {
    let rows: Vec<Vec<f64>> = (0..3)
        .flat_map(|i| {
            let e = UnitVector::basis(3, i).unwrap().into_vec();
            [e.clone(), e.iter().map(|v| -v).collect()]
        })
        .collect();
    let s = SphereSample::from_rows(2, &rows).unwrap();
    assert!(matches!(fit_mm2(&s, SignChoice::Plus), Err(Error::Degenerate(_))));
}

#[test]
fn estimators_are_rotation_equivariant() {
    let cases = [(1, 1, 0.6), (2, 1, 0.5), (2, 2, 0.7), (2, 2, -0.6), (1, 2, 0.5), (3, 3, 0.6), (2, 4, 0.8)];
    for (seed, &(d, k, rho)) in cases.iter().enumerate() {
        let p = params(d, k, rho);
        let s = draw(&p, 400, seed as u64);
        let o = rotation(d + 1, seed as u64);
        let r = s.transformed(&o);
        let mut fits = vec![(fit_ml(&s, k, None, SignChoice::Auto).unwrap(), fit_ml(&r, k, None, SignChoice::Auto).unwrap())];
        match k {
            1 => fits.push((fit_mm1(&s).unwrap(), fit_mm1(&r).unwrap())),
            2 => fits.push((fit_mm2(&s, SignChoice::Auto).unwrap(), fit_mm2(&r, SignChoice::Auto).unwrap())),
            _ => {}
        }
        let mu_rot = UnitVector::normalize(mat_vec(&o, p.mu().as_slice())).unwrap();
        fits.push((fit_gm(&s, p.mu(), k).unwrap(), fit_gm(&r, &mu_rot, k).unwrap()));
        for (a, b) in fits {
            assert!((a.params.rho() - b.params.rho()).abs() < 1e-9, "{:?} rho", a.estimator);
            let gap = equivariance_gap(&s, &a.params, &b.params, &o);
            assert!(gap < 1e-9, "{:?} at (d={d}, k={k}): gap {gap}", a.estimator);
        }
        let rp = rotate_params(&p, &o);
        assert!((loglik(&s, &p).unwrap() - loglik(&r, &rp).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn ml_score_matches_finite_differences() {
    for &(d, k, rho) in &[(1, 2, 0.5), (2, 1, 0.4), (2, 2, -0.5), (3, 3, 0.6), (4, 2, 0.3)] {
        let p = params(d, k, rho);
        let s = draw(&p, 300, 11);
        let branch = rho.signum();
        let xi: Vec<f64> = p.mu().as_slice().iter().map(|m| m * rho.abs() * 0.9).collect();
        let g = score_xi(&s, k, &xi, branch).unwrap();
        let h = 1e-6;
        for i in 0..xi.len() {
            let mut a = xi.clone();
            let mut b = xi.clone();
            a[i] += h;
            b[i] -= h;
            let fd = (loglik_xi(&s, k, &a, branch).unwrap() - loglik_xi(&s, k, &b, branch).unwrap()) / (2.0 * h);
            let scale = g.iter().map(|v| v.abs()).fold(1.0, f64::max);
            assert!((fd - g[i]).abs() <= 1e-6 * scale, "d={d} k={k} coord {i}: {fd} vs {}", g[i]);
        }
    }
}

#[test]
fn ml_increases_likelihood_over_moment_estimates() {
    for &(d, k, rho) in &[(2, 1, 0.5), (2, 2, 0.5), (1, 2, 0.6)] {
        let p = params(d, k, rho);
        let s = draw(&p, 500, 3);
        let ml = fit_ml(&s, k, None, SignChoice::Auto).unwrap();
        let mm = fit(&s, moment_estimator_for(k), k, SignChoice::Auto, None).unwrap();
        assert!(ml.loglik.unwrap() >= loglik(&s, &mm.params).unwrap() - 1e-9);
        assert_eq!(ml.converged, Some(true));
    }
}

#[test]
fn ml_converges_when_rounding_stalls_the_gradient() {
    // This sample reaches the optimum with a gradient norm of about 4e-10,
    // above the nominal tolerance, after which steps no longer change the
    // log-likelihood.
    let mu = UnitVector::basis(3, 2).unwrap();
    let p = CardioidParams::new(2, 2, mu, 0.5).unwrap();
    let mut rng = sphcard::rng::stream(99, &[1553]);
    let s = sphcard::sampling::sample(&p, 1000, sphcard::sampling::SamplerKind::Auto, &mut rng).unwrap().sample;
    let fit = fit_ml(&s, 2, None, SignChoice::Plus).unwrap();
    assert_eq!(fit.converged, Some(true));
    assert!(fit.iterations.unwrap() < 20);
    assert!((fit.params.rho() - 0.6534).abs() < 1e-3, "{}", fit.params.rho());
}

#[test]
fn fisher_closed_forms_match_quadrature() {
    for &rho in &[0.05, 0.3, 0.5, 0.8, 0.95] {
        for &(d, k) in &[(1, 1), (1, 2), (1, 5), (2, 1)] {
            let closed = fisher_info(d, k, rho).unwrap();
            let quad = fisher_info_quadrature(d, k, rho, 256).unwrap();
            assert!((closed.a - quad.a).abs() <= 1e-8 * closed.a, "A d={d} k={k} rho={rho}");
            assert!((closed.b - quad.b).abs() <= 1e-8 * closed.b, "B d={d} k={k} rho={rho}");
        }
    }
}

#[test]
fn fisher_quadrature_is_converged() {
    for &(d, k, rho) in &[(3, 2, 0.9), (5, 3, 0.7), (2, 6, 0.95), (10, 1, 0.5)] {
        let a = fisher_info_quadrature(d, k, rho, 256).unwrap();
        let b = fisher_info_quadrature(d, k, rho, 1024).unwrap();
        assert!((a.a - b.a).abs() <= 1e-10 * b.a && (a.b - b.b).abs() <= 1e-10 * b.b);
    }
}

#[test]
fn fisher_information_matches_score_variance() {
    // E[score score'] along mu equals A; tangent directions give B rho^2.
    let p = params(3, 2, 0.6);
    let s = draw(&p, 200_000, 5);
    let fi = fisher_info(3, 2, 0.6).unwrap();
    let mu = p.mu().as_slice();
    let basis = p.basis();
    let c1 = basis.at_one();
    let (mut a, mut a2) = (0.0, 0.0);
    for x in s.rows() {
        let t: f64 = x.iter().zip(mu).map(|(u, v)| u * v).sum();
        let v = basis.eval(t) / (c1 + 0.6 * basis.eval(t));
        a += v * v;
        a2 += v.powi(4);
    }
    let n = s.n() as f64;
    let mean = a / n;
    let se = ((a2 / n - mean * mean) / n).sqrt();
    assert!((mean - fi.a).abs() < 4.0 * se, "{mean} vs {}", fi.a);
}

#[test]
fn efficiency_structure() {
    for d in 1..=10 {
        for k in [1, 2] {
            for i in 1..20 {
                let rho = 0.05 * i as f64;
                for which in [AreKind::MmMu, AreKind::MmRho, AreKind::GmRho] {
                    let v = are(d, k, rho, which).unwrap();
                    assert!(v <= 1.0 + 1e-12 && v > 0.0, "d={d} k={k} rho={rho} {which:?}: {v}");
                }
            }
            for which in [AreKind::MmMu, AreKind::MmRho] {
                assert!((are(d, k, 1e-4, which).unwrap() - 1.0).abs() < 1e-3);
            }
        }
    }
    for i in 1..20 {
        let rho = 0.05 * i as f64;
        for which in [AreKind::MmMu, AreKind::MmRho, AreKind::GmRho] {
            let a = are(1, 1, rho, which).unwrap();
            let b = are(1, 2, rho, which).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fits_are_valid_and_flag_truncation(d in 1usize..4, k in 1usize..3, rho in -0.9f64..0.9, seed in 0u64..1000) {
        let rho = if k == 1 { rho.abs() } else { rho };
        let p = params(d, k, rho);
        let s = draw(&p, 60, seed);
        let f = fit(&s, moment_estimator_for(k), k, SignChoice::Auto, None);
        if let Ok(f) = f {
            prop_assert!(f.params.rho().abs() <= 1.0);
            if !f.truncated {
                prop_assert_eq!(f.rho_raw.abs(), f.params.rho().abs());
            }
            prop_assert!(f.params.is_canonical());
        }
        let g = fit_gm(&s, p.mu(), k).unwrap();
        prop_assert!(g.params.rho().abs() <= 1.0);
    }

    #[test]
    fn gm_variance_matches_moment_variance(d in 1usize..12, rho in 0.0f64..1.0) {
        prop_assert!((sigma2_gm(d, 1, rho).unwrap() - sigma2_mm1(d, rho).1).abs() < 1e-10);
        prop_assert!((sigma2_gm(d, 2, rho).unwrap() - sigma2_mm2(d, rho).1).abs() < 1e-10);
    }
}
