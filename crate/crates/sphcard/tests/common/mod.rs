//! Helpers shared by the integration tests.

#![allow(dead_code)]

use sphcard::geometry::{mat_vec, random_orthogonal};
use sphcard::rng::stream;
use sphcard::sampling::{sample, SamplerKind};
use sphcard::{CardioidParams, SphereSample, UnitVector};

/// A location on `S^d` away from the coordinate axes.
pub fn generic_mu(d: usize) -> UnitVector {
    let v: Vec<f64> = (0..=d).map(|i| 0.4 + 0.3 * i as f64).collect();
    UnitVector::normalize(v).unwrap()
}

pub fn params(d: usize, k: usize, rho: f64) -> CardioidParams {
    CardioidParams::new(d, k, generic_mu(d), rho).unwrap()
}

pub fn draw(p: &CardioidParams, n: usize, seed: u64) -> SphereSample {
    sample(p, n, SamplerKind::Auto, &mut stream(seed, &[])).unwrap().sample
}

pub fn rotation(dim: usize, seed: u64) -> Vec<f64> {
    random_orthogonal(dim, &mut stream(seed, &[0xabc]))
}

pub fn rotate_params(p: &CardioidParams, o: &[f64]) -> CardioidParams {
    let mu = UnitVector::normalize(mat_vec(o, p.mu().as_slice())).unwrap();
    CardioidParams::new(p.d(), p.k(), mu, p.rho()).unwrap()
}
