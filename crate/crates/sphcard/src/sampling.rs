//! Exact simulation from `C_k(mu, rho)`.
//!
//! Three samplers are available: rejection from the uniform distribution,
//! a rejection-free sign-flip construction for odd `k`, and inverse
//! transform sampling of `mu' X` for `d = 2`, `k = 2`, `rho > 0`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cardioid::CardioidParams;
use crate::error::{domain, Error, Result};
use crate::geometry::{fill_uniform, tangent_basis, SphereSample};

/// Sampler selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Rejection,
    RejectionFreeOdd,
    InverseD2K2,
    /// Inverse transform when applicable, else rejection-free for odd `k`,
    /// else rejection.
    Auto,
}

/// A simulated sample with the sampler that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutput {
    pub sample: SphereSample,
    pub sampler: SamplerKind,
    /// Uniform proposals drawn; equals `n` for the rejection-free samplers.
    pub proposals: u64,
}

impl SamplerKind {
    /// Resolve `Auto` for the given parameters.
    pub fn resolve(self, p: &CardioidParams) -> SamplerKind {
        match self {
            SamplerKind::Auto if p.d() == 2 && p.k() == 2 && p.rho() > 0.0 => SamplerKind::InverseD2K2,
            SamplerKind::Auto if p.k() % 2 == 1 => SamplerKind::RejectionFreeOdd,
            SamplerKind::Auto => SamplerKind::Rejection,
            other => other,
        }
    }
}

/// Draw `n` points with the requested sampler.
pub fn sample<R: Rng + ?Sized>(
    p: &CardioidParams,
    n: usize,
    kind: SamplerKind,
    rng: &mut R,
) -> Result<SampleOutput> {
    match kind.resolve(p) {
        SamplerKind::Rejection => sample_rejection(p, n, rng),
        SamplerKind::RejectionFreeOdd => sample_rejection_free(p, n, rng),
        SamplerKind::InverseD2K2 => sample_inverse_d2k2(p, n, rng),
        SamplerKind::Auto => unreachable!("resolved above"),
    }
}

/// Rejection sampling from the uniform proposal with bound `1 + |rho|`.
pub fn sample_rejection<R: Rng + ?Sized>(p: &CardioidParams, n: usize, rng: &mut R) -> Result<SampleOutput> {
    let dim = p.d() + 1;
    let basis = p.basis();
    let mu = p.mu().as_slice();
    let bound = 1.0 + p.rho().abs();
    let mut out = SphereSample::empty(p.d());
    let mut u = vec![0.0; dim];
    let mut proposals = 0u64;
    while out.n() < n {
        fill_uniform(rng, &mut u);
        proposals += 1;
        let accept = (1.0 + p.rho() * basis.tilde(crate::geometry::dot(&u, mu))) / bound;
        if rng.random::<f64>() <= accept {
            out.push_unchecked(&u);
        }
    }
    Ok(SampleOutput { sample: out, sampler: SamplerKind::Rejection, proposals })
}

/// Rejection-free sampler for odd `k`.
///
/// `R` is the absolute first coordinate of a uniform point, the sign of
/// `T = +-R` is drawn with `P(+ | R) = (1 + rho C~_k(R)) / 2`, and `X` is
/// assembled from `T` and an independent uniform tangent direction.
pub fn sample_rejection_free<R: Rng + ?Sized>(p: &CardioidParams, n: usize, rng: &mut R) -> Result<SampleOutput> {
    if p.k() % 2 == 0 {
        return domain("the rejection-free sampler needs an odd order k");
    }
    let d = p.d();
    let basis = p.basis();
    let tb = tangent_basis(p.mu());
    let mut out = SphereSample::empty(d);
    let mut u = vec![0.0; d + 1];
    let mut xi = vec![0.0; d];
    let mut x = vec![0.0; d + 1];
    for _ in 0..n {
        fill_uniform(rng, &mut u);
        let r = u[0].abs();
        let plus = rng.random::<f64>() <= 0.5 * (1.0 + p.rho() * basis.tilde(r));
        let t = if plus { r } else { -r };
        fill_uniform(rng, &mut xi);
        tb.compose_into(t, &xi, &mut x);
        out.push_unchecked(&x);
    }
    Ok(SampleOutput { sample: out, sampler: SamplerKind::RejectionFreeOdd, proposals: n as u64 })
}

/// Quantile of `mu' X` for `d = 2`, `k = 2`, `0 < rho <= 1`: the real root
/// in `[-1, 1]` of `(rho T^3 + (2 - rho) T + 2) / 4 = u`.
pub fn inverse_d2k2_quantile(rho: f64, u: f64) -> Result<f64> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::Unsupported(format!("inverse transform needs 0 < rho <= 1 (got {rho})")));
    }
    if !(0.0..=1.0).contains(&u) {
        return domain(format!("probability {u} outside [0, 1]"));
    }
    let q = 2.0 * (1.0 - 2.0 * u) / rho;
    let p = (2.0 - rho) / rho;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    // p > 0 makes disc > 0; take the cube root of larger magnitude and
    // recover the other from their product -p/3 to avoid cancellation.
    let w = if q >= 0.0 { -q / 2.0 - disc.sqrt() } else { -q / 2.0 + disc.sqrt() };
    let a = w.cbrt();
    let mut t = a - p / (3.0 * a);
    let resid = (rho * t * t * t + (2.0 - rho) * t + 2.0) / 4.0 - u;
    t -= resid / ((3.0 * rho * t * t + 2.0 - rho) / 4.0);
    Ok(t.clamp(-1.0, 1.0))
}

/// Inverse transform sampler for `d = 2`, `k = 2`, `rho > 0`.
pub fn sample_inverse_d2k2<R: Rng + ?Sized>(p: &CardioidParams, n: usize, rng: &mut R) -> Result<SampleOutput> {
    if p.d() != 2 || p.k() != 2 {
        return domain("the inverse transform sampler needs d = 2 and k = 2");
    }
    if !(p.rho() > 0.0) {
        return Err(Error::Unsupported("inverse transform sampling needs rho > 0".into()));
    }
    let tb = tangent_basis(p.mu());
    let mut out = SphereSample::empty(2);
    let mut xi = [0.0; 2];
    let mut x = [0.0; 3];
    for _ in 0..n {
        let t = inverse_d2k2_quantile(p.rho(), rng.random::<f64>())?;
        fill_uniform(rng, &mut xi);
        tb.compose_into(t, &xi, &mut x);
        out.push_unchecked(&x);
    }
    Ok(SampleOutput { sample: out, sampler: SamplerKind::InverseD2K2, proposals: n as u64 })
}
