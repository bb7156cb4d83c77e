//! Goodness-of-fit statistics: agreement between independent formulas,
//! brute-force quadrature oracles, invariance and bootstrap determinism.

mod common;

use std::f64::consts::PI;

use common::{draw, params, rotate_params, rotation};
use proptest::prelude::*;
use sphcard::cardioid::ProjectedCdf;
use sphcard::estimation::{EstimatorKind, SignChoice};
use sphcard::geometry::{mat_vec, uniform_sample};
use sphcard::gof::*;
use sphcard::rng::stream;
use sphcard::specfun::{quadrature_nodes, QuadratureRule};
use sphcard::{CardioidParams, SphereSample, UnitVector};

/// `n * int (F_n(x) - F(x))^2 dF(x)` along one direction by Gauss-Legendre
/// quadrature in `x` between consecutive jumps of the ecdf.
fn cvm_by_quadrature(sample: &SphereSample, f: &ProjectedCdf) -> f64 {
    let g = f.gamma().as_slice();
    let mut proj: Vec<f64> = sample.rows().map(|x| g.iter().zip(x).map(|(a, b)| a * b).sum()).collect();
    proj.sort_by(f64::total_cmp);
    let n = proj.len();
    let mut knots = vec![-1.0];
    knots.extend(proj.iter().map(|p| p.clamp(-1.0, 1.0)));
    knots.push(1.0);
    let nodes = quadrature_nodes(QuadratureRule::GaussLegendre, 64).unwrap();
    let mut total = 0.0;
    for (seg, w) in knots.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        // Substitute x = cos(theta) so the density singularities at +-1 on
        // the circle become smooth.
        let (ta, tb) = (a.acos(), b.acos());
        let level = seg as f64 / n as f64;
        for &(z, wz) in nodes.iter() {
            let theta = 0.5 * (ta + tb) + 0.5 * (ta - tb) * z;
            let x = theta.cos();
            let jac = 0.5 * (ta - tb) * theta.sin();
            total += wz * jac * (level - f.cdf(x)).powi(2) * f.pdf(x);
        }
    }
    n as f64 * total
}

#[test]
fn closed_mc_and_vform_agree() {
    let cases = [(1, 1, 0.6), (1, 3, 0.4), (2, 1, 0.5), (2, 2, 0.7), (2, 2, -0.4)];
    for (i, &(d, k, rho)) in cases.iter().enumerate() {
        let p = params(d, k, rho);
        let s = draw(&p, 80, i as u64);
        let closed = stat_cvm_unif_closed(&s, &p).unwrap();
        let mc = stat_mc(&s, &p, Weight::Cvm, Lambda::Unif, 20_000, &mut stream(1, &[i as u64])).unwrap();
        let vf = stat_vform_oracle(&s, &p, Weight::Cvm, Lambda::Unif, 4_000, &mut stream(2, &[i as u64])).unwrap();
        assert!((closed - mc.value).abs() < 3.5 * mc.se, "case {i}: {closed} vs {mc:?}");
        assert!((closed - vf.value).abs() < 3.5 * vf.se, "case {i}: {closed} vs {vf:?}");
    }
}

#[test]
fn ad_mc_and_vform_agree() {
    let p = params(2, 3, 0.5);
    let s = draw(&p, 60, 9);
    let mc = stat_mc(&s, &p, Weight::Ad, Lambda::Unif, 20_000, &mut stream(3, &[])).unwrap();
    let vf = stat_vform_oracle(&s, &p, Weight::Ad, Lambda::Unif, 4_000, &mut stream(4, &[])).unwrap();
    let se = (mc.se * mc.se + vf.se * vf.se).sqrt();
    assert!((mc.value - vf.value).abs() < 3.5 * se, "{mc:?} vs {vf:?}");
}

#[test]
fn single_observation_matches_direction_quadrature() {
    // With n = 1 the uniform-direction statistic is an integral over the
    // circle of directions.
    for &(k, rho) in &[(1, 0.7), (2, -0.5), (3, 0.9)] {
        let p = CardioidParams::new(1, k, UnitVector::from_angle(0.4), rho).unwrap();
        let s = SphereSample::from_rows(1, &[UnitVector::from_angle(2.1).into_vec()]).unwrap();
        let m = 20_000;
        let mut total = 0.0;
        for j in 0..m {
            let g = UnitVector::from_angle(2.0 * PI * (j as f64 + 0.5) / m as f64);
            let f = ProjectedCdf::new(&p, &g).unwrap();
            total += stat_one_direction(&s, &f, Weight::Cvm).unwrap();
        }
        let closed = stat_cvm_unif_closed(&s, &p).unwrap();
        assert!((closed - total / m as f64).abs() < 1e-6, "k={k}: {closed} vs {}", total / m as f64);
    }
}

#[test]
fn empirical_directions_match_quadrature_for_tiny_samples() {
    let p = CardioidParams::uniform(1, 1).unwrap();
    let configs: Vec<Vec<f64>> = vec![vec![0.3], vec![0.0, PI], vec![0.2, 1.9, 4.0], vec![1.0, 1.5, 5.5]];
    for angles in configs {
        let rows: Vec<Vec<f64>> = angles.iter().map(|&a| UnitVector::from_angle(a).into_vec()).collect();
        let s = SphereSample::from_rows(1, &rows).unwrap();
        let exact = stat_pn_exact(&s, &p, Weight::Cvm).unwrap();
        let mut oracle = 0.0;
        for x in s.rows() {
            let g = UnitVector::new(x.to_vec()).unwrap();
            oracle += cvm_by_quadrature(&s, &ProjectedCdf::new(&p, &g).unwrap());
        }
        oracle /= s.n() as f64;
        assert!((exact - oracle).abs() < 1e-8, "{angles:?}: {exact} vs {oracle}");
    }
}

#[test]
fn per_direction_closed_form_matches_quadrature() {
    let p = params(2, 2, 0.6);
    let s = draw(&p, 25, 4);
    let g = UnitVector::normalize(vec![0.2, -0.5, 0.8]).unwrap();
    let f = ProjectedCdf::new(&p, &g).unwrap();
    let closed = stat_one_direction(&s, &f, Weight::Cvm).unwrap();
    assert!((closed - cvm_by_quadrature(&s, &f)).abs() < 1e-10);
}

#[test]
fn statistics_are_rotation_invariant() {
    for (seed, &(d, k, rho)) in [(1, 2, 0.5), (2, 1, 0.6), (2, 2, 0.4), (3, 3, 0.5)].iter().enumerate() {
        let p = params(d, k, rho);
        let s = draw(&p, 70, seed as u64);
        let o = rotation(d + 1, seed as u64);
        let (r, rp) = (s.transformed(&o), rotate_params(&p, &o));
        for w in [Weight::Cvm, Weight::Ad] {
            let a = stat_pn_exact(&s, &p, w).unwrap();
            let b = stat_pn_exact(&r, &rp, w).unwrap();
            assert!((a - b).abs() < 1e-9 * a.max(1.0));
            let dirs = draw_directions(&p, Lambda::Unif, 30, &mut stream(5, &[])).unwrap();
            let rdirs: Vec<UnitVector> = dirs
                .iter()
                .map(|g| UnitVector::normalize(mat_vec(&o, g.as_slice())).unwrap())
                .collect();
            let a = stat_directions(&s, &p, w, &dirs).unwrap().value;
            let b = stat_directions(&r, &rp, w, &rdirs).unwrap().value;
            assert!((a - b).abs() < 1e-9 * a.max(1.0));
        }
        if cvm_unif_closed_supported(d, k) {
            let a = stat_cvm_unif_closed(&s, &p).unwrap();
            let b = stat_cvm_unif_closed(&r, &rp).unwrap();
            assert!((a - b).abs() < 1e-9 * a.max(1.0));
        }
    }
}

#[test]
fn uniform_null_gives_the_same_law_for_both_direction_choices() {
    let p = CardioidParams::uniform(2, 2).unwrap();
    let s = uniform_sample(2, 50, &mut stream(6, &[])).unwrap();
    let a = stat_mc(&s, &p, Weight::Cvm, Lambda::Unif, 200, &mut stream(7, &[])).unwrap();
    let b = stat_mc(&s, &p, Weight::Cvm, Lambda::CardioidNull, 200, &mut stream(7, &[])).unwrap();
    assert!((a.value - b.value).abs() < 4.0 * (a.se * a.se + b.se * b.se).sqrt());
    assert!(stat_mc(&SphereSample::empty(2), &p, Weight::Cvm, Lambda::Unif, 5, &mut stream(7, &[])).is_err());
}

#[test]
fn empirical_ad_drops_the_self_projection() {
    let p = params(2, 1, 0.3);
    let s = draw(&p, 30, 12);
    let v = stat_pn_exact(&s, &p, Weight::Ad).unwrap();
    assert!(v.is_finite() && v > 0.0);
    let one = SphereSample::from_rows(2, &[p.mu().as_slice().to_vec()]).unwrap();
    assert!(stat_pn_exact(&one, &p, Weight::Ad).is_err());
}

#[test]
fn tied_projections_match_jittered_values() {
    let u = vec![0.3, 0.7, 0.3, 0.5, 0.7];
    let jittered: Vec<f64> = u.iter().enumerate().map(|(i, v)| v + 1e-15 * i as f64).collect();
    for w in [Weight::Cvm, Weight::Ad] {
        let a = stat_from_uniforms(&u, w).unwrap();
        let b = stat_from_uniforms(&jittered, w).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}

fn small_config(seed: u64) -> GofConfig {
    GofConfig { b: 39, seed, estimator: EstimatorKind::Mm1, ..GofConfig::default() }
}

#[test]
fn bootstrap_is_reproducible_across_thread_counts() {
    let p = params(2, 1, 0.5);
    let s = draw(&p, 60, 21);
    let cfg = GofConfig { lambda: Lambda::Unif, weight: Weight::Ad, k_dirs: 20, ..small_config(5) };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| bootstrap_test(&s, 1, &cfg).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a, b);
    assert_eq!(a.boot_stats.len(), 39);
    let exceed = a.boot_stats.iter().filter(|&&v| v > a.statistic).count();
    assert_eq!(a.pvalue, (1 + exceed) as f64 / 40.0);
}

#[test]
fn simple_uniform_null_skips_estimation() {
    let s = uniform_sample(1, 50, &mut stream(8, &[])).unwrap();
    let null = CardioidParams::uniform(1, 2).unwrap();
    let cfg = GofConfig { simple_null: Some(null.clone()), ci_alpha: Some(0.1), ..small_config(2) };
    let res = bootstrap_test(&s, 2, &cfg).unwrap();
    assert!(res.fitted.is_none() && res.ci.is_none());
    assert_eq!(res.null_params, null);
    assert!((res.statistic - stat_cvm_unif_closed(&s, &null).unwrap()).abs() < 1e-15);
}

#[test]
fn percentile_regions_come_from_order_statistics() {
    let p = params(2, 2, 0.5);
    let s = draw(&p, 80, 13);
    let cfg = GofConfig {
        estimator: EstimatorKind::Mm2,
        sign: SignChoice::Plus,
        lambda: Lambda::EmpiricalPn,
        ci_alpha: Some(0.1),
        ..small_config(3)
    };
    let res = bootstrap_test(&s, 2, &cfg).unwrap();
    let ci = res.ci.unwrap();
    assert!(ci.ci_rho.0 <= res.null_params.rho() + 0.3 && ci.ci_rho.0 <= ci.ci_rho.1);
    assert!(ci.cap_mu > 0.0 && ci.cap_mu <= 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn statistics_are_finite_and_nonnegative(d in 1usize..4, k in 1usize..4, rho in -0.95f64..0.95, seed in 0u64..500) {
        let rho = if k % 2 == 1 { rho.abs() } else { rho };
        let p = params(d, k, rho);
        let s = draw(&p, 20, seed);
        for w in [Weight::Cvm, Weight::Ad] {
            let v = stat_pn_exact(&s, &p, w).unwrap();
            prop_assert!(v.is_finite() && v >= 0.0);
            let m = stat_mc(&s, &p, w, Lambda::CardioidNull, 5, &mut stream(seed, &[])).unwrap();
            prop_assert!(m.value.is_finite() && m.value >= 0.0);
        }
        if cvm_unif_closed_supported(d, k) {
            prop_assert!(stat_cvm_unif_closed(&s, &p).unwrap() >= 0.0);
        }
    }

    #[test]
    fn pvalue_formula(stat in 0.0f64..2.0, boot in proptest::collection::vec(0.0f64..2.0, 19..60)) {
        let p = bootstrap_pvalue(stat, &boot);
        let exceed = boot.iter().filter(|&&b| b > stat).count();
        prop_assert_eq!(p, (1 + exceed) as f64 / (boot.len() + 1) as f64);
        prop_assert!(p > 0.0 && p <= 1.0);
    }
}
