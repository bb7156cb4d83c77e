//! Estimation of `(mu, rho)`: moment estimators for `k = 1, 2`, the
//! Gegenbauer-moment estimator of `rho` for known `mu`, and maximum
//! likelihood, together with their asymptotic variances.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::cardioid::CardioidParams;
use crate::error::{domain, Error, Result};
use crate::geometry::{dot, norm, sym_eigen, SphereSample, UnitVector};
use crate::specfun::{
    area_ratio, basis_constants, quadrature_nodes, surface_area, PolyBasis, QuadratureRule,
};

/// Estimator family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Mean-direction moment estimator, `k = 1`.
    Mm1,
    /// Scatter-eigenpair moment estimator, `k = 2`.
    Mm2,
    /// Gegenbauer-moment estimator of `rho` for known `mu`.
    Gm,
    /// Maximum likelihood.
    Ml,
}

/// Sign of `rho` assumed by estimators that must fix it in advance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignChoice {
    Plus,
    Minus,
    /// Try both signs and keep the better fit.
    Auto,
}

/// Result of a fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub estimator: EstimatorKind,
    pub params: CardioidParams,
    /// Estimate of `rho` before truncation to the admissible interval.
    pub rho_raw: f64,
    /// Asymptotic variance scale of `mu_hat`.
    pub sigma2_mu: f64,
    /// Asymptotic variance of `rho_hat`.
    pub sigma2_rho: f64,
    /// `rho_hat` was clamped into the admissible interval.
    pub truncated: bool,
    /// `|rho_hat| > 0.99`, where the asymptotic variances are unreliable.
    pub near_boundary: bool,
    /// Optimizer iterations (maximum likelihood only).
    pub iterations: Option<usize>,
    /// Log-likelihood at the estimate (maximum likelihood only).
    pub loglik: Option<f64>,
    /// Optimizer convergence (maximum likelihood only).
    pub converged: Option<bool>,
}

fn finish(
    estimator: EstimatorKind,
    params: CardioidParams,
    rho_raw: f64,
    truncated: bool,
    sigma2_mu: f64,
    sigma2_rho: f64,
) -> FitResult {
    FitResult {
        estimator,
        near_boundary: params.rho().abs() > 0.99,
        params,
        rho_raw,
        sigma2_mu,
        sigma2_rho,
        truncated,
        iterations: None,
        loglik: None,
        converged: None,
    }
}

/// `sigma^2_{MM,1}(mu)` and `sigma^2_{MM,1}(rho)`.
pub fn sigma2_mm1(d: usize, rho: f64) -> (f64, f64) {
    let d1 = d as f64 + 1.0;
    (d1 / (rho * rho), d1 - rho * rho)
}

/// `sigma^2_{MM,2}(mu)` and `sigma^2_{MM,2}(rho)`.
pub fn sigma2_mm2(d: usize, rho: f64) -> (f64, f64) {
    let d = d as f64;
    let mu = d * (d + 3.0) * (d * (d + 5.0) + 2.0 * (d - 1.0) * rho)
        / (4.0 * rho * rho * (d + 1.0) * (d + 5.0));
    let r = d * (d + 3.0) / 2.0 + 2.0 * (d - 1.0) * (d + 3.0) / (d + 5.0) * rho - rho * rho;
    (mu, r)
}

/// Coefficient `eta_{k,d}` of the Gegenbauer-moment variance; zero for odd
/// `k` or `d = 1`.
pub fn eta_gm(k: usize, d: usize) -> f64 {
    if d == 1 || k % 2 == 1 {
        return 0.0;
    }
    let (kf, df) = (k as f64, d as f64);
    let lead = (2.0 * kf + df - 1.0).powi(2) / ((3.0 * kf + df - 1.0) * (df - 1.0));
    let ln_rest = ln_gamma(kf + 1.0) - 3.0 * ln_gamma(kf / 2.0 + 1.0)
        + 3.0 * ln_gamma((df + kf - 1.0) / 2.0)
        + ln_gamma(df + 1.5 * kf - 1.0)
        - ln_gamma(df + kf - 1.0)
        - 2.0 * ln_gamma((df - 1.0) / 2.0)
        - ln_gamma((df + 3.0 * kf - 1.0) / 2.0);
    lead * ln_rest.exp()
}

/// `sigma^2_{GM,k}(rho) = d_{k,d} + rho eta_{k,d} 1{k even} - rho^2`.
pub fn sigma2_gm(d: usize, k: usize, rho: f64) -> Result<f64> {
    Ok(basis_constants(k, d)?.dim_harm + rho * eta_gm(k, d) - rho * rho)
}

/// Mean-direction moment estimator for `k = 1`.
pub fn fit_mm1(sample: &SphereSample) -> Result<FitResult> {
    if sample.n() < 2 {
        return domain("the moment estimator needs at least two observations");
    }
    let d = sample.d();
    let mean = sample.mean();
    let len = norm(&mean);
    if len < 1e-12 {
        return Err(Error::Degenerate("sample mean is zero; the location is not identified".into()));
    }
    let mu = UnitVector::normalize(mean)?;
    let raw = (d as f64 + 1.0) * len;
    let rho = raw.min(1.0);
    let (s_mu, s_rho) = sigma2_mm1(d, rho);
    let params = CardioidParams::new(d, 1, mu, rho)?.canonicalize();
    Ok(finish(EstimatorKind::Mm1, params, raw, raw > 1.0, s_mu, s_rho))
}

const EIGEN_GAP_TOL: f64 = 1e-10;

fn mm2_branch(sample: &SphereSample, positive: bool) -> Result<FitResult> {
    let d = sample.d();
    let dim = d + 1;
    let eig = sym_eigen(&sample.scatter(), dim)?;
    let idx = if positive { 0 } else { dim - 1 };
    let neighbor = if positive { 1 } else { dim - 2 };
    if (eig.values[idx] - eig.values[neighbor]).abs() <= EIGEN_GAP_TOL {
        return Err(Error::Degenerate(
            "the scatter eigenvalue defining the location is not simple".into(),
        ));
    }
    let df = d as f64;
    let raw = (df + 3.0) / 2.0 * ((df + 1.0) * eig.values[idx] - 1.0);
    let rho = if positive { raw.clamp(0.0, 1.0) } else { raw.clamp(-1.0, 0.0) };
    let mu = UnitVector::normalize(eig.vectors[idx].clone())?;
    let (s_mu, s_rho) = sigma2_mm2(d, rho);
    let params = CardioidParams::new(d, 2, mu, rho)?.canonicalize();
    Ok(finish(EstimatorKind::Mm2, params, raw, rho != raw, s_mu, s_rho))
}

/// Scatter-eigenpair moment estimator for `k = 2`.
///
/// `Plus` uses the largest eigenpair and `Minus` the smallest. `Auto` fits
/// both and keeps the one with the larger `|rho_raw|`.
pub fn fit_mm2(sample: &SphereSample, sign: SignChoice) -> Result<FitResult> {
    if sample.n() < sample.d() + 1 {
        return domain("the scatter estimator needs at least d + 1 observations");
    }
    match sign {
        SignChoice::Plus => mm2_branch(sample, true),
        SignChoice::Minus => mm2_branch(sample, false),
        SignChoice::Auto => {
            let plus = mm2_branch(sample, true);
            let minus = mm2_branch(sample, false);
            match (plus, minus) {
                (Ok(p), Ok(m)) => Ok(if m.rho_raw.abs() > p.rho_raw.abs() && m.rho_raw < 0.0 { m } else { p }),
                (Ok(p), Err(_)) => Ok(p),
                (Err(_), Ok(m)) => Ok(m),
                (Err(e), Err(_)) => Err(e),
            }
        }
    }
}

/// Gegenbauer-moment estimator `rho_hat = (tau / n) sum C_k(mu' X_i)` for
/// known `mu`, truncated to `[-1, 1]`.
pub fn fit_gm(sample: &SphereSample, mu: &UnitVector, k: usize) -> Result<FitResult> {
    if sample.is_empty() {
        return domain("the Gegenbauer-moment estimator needs at least one observation");
    }
    let d = sample.d();
    if mu.d() != d {
        return domain("known location lives on a different sphere");
    }
    let basis = PolyBasis::new(d, k)?;
    let tau = basis_constants(k, d)?.tau;
    let raw = tau * sample.rows().map(|x| basis.eval(mu.dot(x))).sum::<f64>() / sample.n() as f64;
    let rho = raw.clamp(-1.0, 1.0);
    let s_rho = sigma2_gm(d, k, rho)?;
    let params = CardioidParams::new(d, k, mu.clone(), rho)?;
    Ok(finish(EstimatorKind::Gm, params, raw, rho != raw, f64::NAN, s_rho))
}

/// Blocks of the Fisher information of `(mu, rho)` at `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherInfo {
    pub d: usize,
    pub k: usize,
    pub rho: f64,
    /// `rho` block.
    pub a: f64,
    /// Tangent block before the `rho^2` factor.
    pub b: f64,
}

impl FisherInfo {
    /// `sigma^2_ML(rho) = 1 / A`.
    pub fn sigma2_rho(&self) -> f64 {
        1.0 / self.a
    }

    /// `sigma^2_ML(mu) = 1 / (B rho^2)`.
    pub fn sigma2_mu(&self) -> f64 {
        1.0 / (self.b * self.rho * self.rho)
    }
}

/// Default node count for the Fisher information integrals.
pub const FISHER_NODES: usize = 256;

fn check_fisher_rho(k: usize, rho: f64) -> Result<()> {
    let ok = rho.abs() < 1.0 && rho != 0.0 && (rho > 0.0 || k % 2 == 0);
    if !ok {
        return domain(format!("Fisher information needs 0 < rho < 1 (or -1 < rho < 0 for even k), got {rho}"));
    }
    Ok(())
}

/// Fisher information blocks, using closed forms for `d = 1` and for
/// `d = 2, k = 1`, and quadrature otherwise.
pub fn fisher_info(d: usize, k: usize, rho: f64) -> Result<FisherInfo> {
    PolyBasis::new(d, k)?;
    check_fisher_rho(k, rho)?;
    let (a, b) = if d == 1 {
        let s = (1.0 - rho * rho).sqrt();
        let kk = (k * k) as f64;
        (1.0 / ((1.0 + s) * s), kk / (1.0 + s))
    } else if d == 2 && k == 1 {
        fisher_d2k1(rho)
    } else {
        return fisher_info_quadrature(d, k, rho, FISHER_NODES);
    };
    Ok(FisherInfo { d, k, rho, a, b })
}

fn fisher_d2k1(rho: f64) -> (f64, f64) {
    if rho.abs() < 0.2 {
        // Power series of (atanh r - r) / r^3 and (r - (1 - r^2) atanh r) / (2 r^3).
        let r2 = rho * rho;
        let (mut a, mut b, mut p) = (0.0, 0.0, 1.0);
        for j in 1..40 {
            let jf = j as f64;
            a += p / (2.0 * jf + 1.0);
            b += p / (4.0 * jf * jf - 1.0);
            p *= r2;
        }
        (a, b)
    } else {
        let at = rho.atanh();
        ((at - rho) / rho.powi(3), (rho - (1.0 - rho * rho) * at) / (2.0 * rho.powi(3)))
    }
}

/// Fisher information blocks by quadrature with `nodes` points.
///
/// With `t = cos(phi)` both integrands become smooth in `phi`; the circle
/// case uses the Gauss-Chebyshev rule in `t` directly.
pub fn fisher_info_quadrature(d: usize, k: usize, rho: f64, nodes: usize) -> Result<FisherInfo> {
    let basis = PolyBasis::new(d, k)?;
    check_fisher_rho(k, rho)?;
    let c1 = basis.at_one();
    let df = d as f64;
    let lead = area_ratio(d) / c1;
    let (mut ia, mut ib) = (0.0, 0.0);
    if d == 1 {
        for &(t, w) in quadrature_nodes(QuadratureRule::GaussChebyshev, nodes)?.iter() {
            let c = basis.eval(t);
            let dc = basis.deriv(t);
            let den = c1 + rho * c;
            ia += w * c * c / den;
            ib += w * dc * dc * (1.0 - t * t) / den;
        }
    } else {
        let half = std::f64::consts::FRAC_PI_2;
        for &(z, w) in quadrature_nodes(QuadratureRule::GaussLegendre, nodes)?.iter() {
            let phi = half * (z + 1.0);
            let (s, t) = phi.sin_cos();
            let c = basis.eval(t);
            let dc = basis.deriv(t);
            let den = c1 + rho * c;
            let jac = half * w * s.powf(df - 1.0);
            ia += jac * c * c / den;
            ib += jac * dc * dc * s * s / den;
        }
    }
    Ok(FisherInfo { d, k, rho, a: lead * ia, b: lead * ib / df })
}

/// Which asymptotic relative efficiency to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreKind {
    MmMu,
    MmRho,
    GmRho,
}

/// Ratio of the maximum likelihood asymptotic variance to that of a moment
/// estimator.
pub fn are(d: usize, k: usize, rho: f64, which: AreKind) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return domain(format!("efficiencies are defined for 0 < rho < 1, got {rho}"));
    }
    if which != AreKind::GmRho && k != 1 && k != 2 {
        return domain("moment estimators of (mu, rho) exist only for k = 1, 2");
    }
    let fi = fisher_info(d, k, rho)?;
    let mm = |r: f64| if k == 1 { sigma2_mm1(d, r) } else { sigma2_mm2(d, r) };
    Ok(match which {
        AreKind::MmMu => fi.sigma2_mu() / mm(rho).0,
        AreKind::MmRho => fi.sigma2_rho() / mm(rho).1,
        AreKind::GmRho => fi.sigma2_rho() / sigma2_gm(d, k, rho)?,
    })
}

/// Log-likelihood of `C_k(mu, rho)` for the sample.
pub fn loglik(sample: &SphereSample, p: &CardioidParams) -> Result<f64> {
    if sample.d() != p.d() {
        return domain("sample and parameters live on different spheres");
    }
    let basis = p.basis();
    let mu = p.mu().as_slice();
    let ln_area = surface_area(p.d()).ln();
    Ok(sample
        .rows()
        .map(|x| {
            let v = 1.0 + p.rho() * basis.tilde(dot(x, mu));
            if v > 0.0 {
                v.ln() - ln_area
            } else {
                f64::NEG_INFINITY
            }
        })
        .sum())
}

/// Log-likelihood in the `xi` parametrization, with density
/// `1 + s |xi| C~_k(x' xi / |xi|)` for branch sign `s`.
pub fn loglik_xi(sample: &SphereSample, k: usize, xi: &[f64], branch: f64) -> Result<f64> {
    let basis = PolyBasis::new(sample.d(), k)?;
    Ok(loglik_xi_raw(sample, basis, xi, branch))
}

fn loglik_xi_raw(sample: &SphereSample, basis: PolyBasis, xi: &[f64], branch: f64) -> f64 {
    let rho = norm(xi);
    let ln_area = surface_area(sample.d()).ln();
    let n = sample.n() as f64;
    if rho == 0.0 {
        return -n * ln_area;
    }
    let mu: Vec<f64> = xi.iter().map(|v| v / rho).collect();
    sample
        .rows()
        .map(|x| {
            let v = 1.0 + branch * rho * basis.tilde(dot(x, &mu));
            if v > 0.0 {
                v.ln()
            } else {
                f64::NEG_INFINITY
            }
        })
        .sum::<f64>()
        - n * ln_area
}

/// Gradient of [`loglik_xi`] with respect to `xi` (requires `xi != 0`).
pub fn score_xi(sample: &SphereSample, k: usize, xi: &[f64], branch: f64) -> Result<Vec<f64>> {
    let basis = PolyBasis::new(sample.d(), k)?;
    if norm(xi) == 0.0 {
        return domain("the score is not defined at xi = 0");
    }
    Ok(score_raw(sample, basis, xi, branch))
}

fn score_raw(sample: &SphereSample, basis: PolyBasis, xi: &[f64], branch: f64) -> Vec<f64> {
    let rho = norm(xi);
    let mu: Vec<f64> = xi.iter().map(|v| v / rho).collect();
    let c1 = basis.at_one();
    let dim = xi.len();
    let mut g = vec![0.0; dim];
    for x in sample.rows() {
        let t = dot(x, &mu).clamp(-1.0, 1.0);
        let c = basis.eval(t);
        let dc = basis.deriv(t);
        let w = branch / (c1 + branch * rho * c);
        let a = w * (c - dc * t);
        let b = w * dc;
        for i in 0..dim {
            g[i] += a * mu[i] + b * x[i];
        }
    }
    g
}

/// Radius of the ball the optimizer is confined to.
pub const ML_MAX_RHO: f64 = 1.0 - 1e-6;
const ML_MAX_ITER: usize = 200;
const ML_GRAD_TOL: f64 = 1e-10;

struct Optimum {
    xi: Vec<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
    at_boundary: bool,
}

fn project(xi: &mut [f64]) -> bool {
    let r = norm(xi);
    if r > ML_MAX_RHO {
        xi.iter_mut().for_each(|v| *v *= ML_MAX_RHO / r);
        true
    } else {
        false
    }
}

/// Cholesky solve of `a x = b` for symmetric positive definite `a`.
fn cholesky_solve(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for p in 0..j {
                s -= l[i * n + p] * l[j * n + p];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|p| l[i * n + p] * y[p]).sum();
        y[i] = (b[i] - s) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|p| l[p * n + i] * x[p]).sum();
        x[i] = (y[i] - s) / l[i * n + i];
    }
    Some(x)
}

/// Gradient with the outward radial part removed when on the boundary.
fn free_gradient(xi: &[f64], g: &[f64]) -> Vec<f64> {
    let r = norm(xi);
    if r < ML_MAX_RHO * (1.0 - 1e-12) {
        return g.to_vec();
    }
    let radial = dot(g, xi) / r;
    if radial <= 0.0 {
        return g.to_vec();
    }
    g.iter().zip(xi).map(|(gi, x)| gi - radial * x / r).collect()
}

/// Damped Newton ascent on the mean log-likelihood, with a finite-difference
/// Hessian of the analytic score and projection onto the ball.
fn maximize(sample: &SphereSample, basis: PolyBasis, start: &[f64], branch: f64) -> Optimum {
    let n = sample.n() as f64;
    let dim = start.len();
    let f = |xi: &[f64]| loglik_xi_raw(sample, basis, xi, branch) / n;
    let grad = |xi: &[f64]| -> Vec<f64> {
        score_raw(sample, basis, xi, branch).into_iter().map(|v| v / n).collect()
    };
    let mut xi = start.to_vec();
    project(&mut xi);
    let mut value = f(&xi);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < ML_MAX_ITER {
        let g = grad(&xi);
        if norm(&free_gradient(&xi, &g)) <= ML_GRAD_TOL {
            converged = true;
            break;
        }
        iterations += 1;
        let r = norm(&xi);
        let h = 1e-6f64.min(0.5 * (1.0 - r));
        let mut hess = vec![0.0; dim * dim];
        for j in 0..dim {
            let mut xp = xi.clone();
            let mut xm = xi.clone();
            xp[j] += h;
            xm[j] -= h;
            let (gp, gm) = (grad(&xp), grad(&xm));
            for i in 0..dim {
                hess[i * dim + j] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        let mut neg = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                neg[i * dim + j] = -0.5 * (hess[i * dim + j] + hess[j * dim + i]);
            }
        }
        let scale = (0..dim).map(|i| neg[i * dim + i].abs()).fold(1e-8, f64::max);
        // On the boundary with an outward gradient the radius is held at its
        // bound and the Newton step is taken in the tangent space.
        let active = r >= ML_MAX_RHO * (1.0 - 1e-12) && dot(&g, &xi) > 0.0;
        let rhs = if active {
            let u: Vec<f64> = xi.iter().map(|v| v / r).collect();
            let mut pn = vec![0.0; dim * dim];
            for i in 0..dim {
                for j in 0..dim {
                    let pij = if i == j { 1.0 } else { 0.0 } - u[i] * u[j];
                    pn[i * dim + j] = pij;
                }
            }
            let mut reduced = vec![0.0; dim * dim];
            for i in 0..dim {
                for j in 0..dim {
                    let mut acc = 0.0;
                    for a in 0..dim {
                        for b in 0..dim {
                            acc += pn[i * dim + a] * neg[a * dim + b] * pn[b * dim + j];
                        }
                    }
                    reduced[i * dim + j] = acc + scale * u[i] * u[j];
                }
            }
            neg = reduced;
            free_gradient(&xi, &g)
        } else {
            g.clone()
        };
        let mut lambda = 0.0;
        let step = loop {
            let mut m = neg.clone();
            for i in 0..dim {
                m[i * dim + i] += lambda;
            }
            if let Some(p) = cholesky_solve(&m, &rhs) {
                break p;
            }
            lambda = if lambda == 0.0 { 1e-6 * scale } else { lambda * 10.0 };
        };
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let mut cand: Vec<f64> = xi.iter().zip(&step).map(|(x, p)| x + alpha * p).collect();
            if active {
                let c = ML_MAX_RHO / norm(&cand);
                cand.iter_mut().for_each(|v| *v *= c);
            }
            project(&mut cand);
            let v = f(&cand);
            let moved: Vec<f64> = cand.iter().zip(&xi).map(|(a, b)| a - b).collect();
            if v.is_finite() && v > value + 1e-4 * dot(&g, &moved).max(0.0) {
                accepted = true;
                xi = cand;
                value = v;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // Once the predicted gain is below the rounding level of the
            // log-likelihood, Newton steps are judged by the gradient norm.
            let gain = 0.5 * dot(&g, &step);
            let grad_norm = norm(&free_gradient(&xi, &g));
            if gain.abs() <= 1e-13 * value.abs().max(1.0) {
                let mut cand: Vec<f64> = xi.iter().zip(&step).map(|(x, p)| x + p).collect();
                if active {
                    let c = ML_MAX_RHO / norm(&cand);
                    cand.iter_mut().for_each(|v| *v *= c);
                }
                project(&mut cand);
                let v = f(&cand);
                if v.is_finite() && norm(&free_gradient(&cand, &grad(&cand))) < 0.5 * grad_norm {
                    xi = cand;
                    value = v;
                    continue;
                }
            }
            // No ascent along the Newton direction: the iterate is optimal
            // up to rounding when the gradient is already tiny.
            converged = grad_norm <= 1e3 * ML_GRAD_TOL;
            break;
        }
    }
    let at_boundary = norm(&xi) >= ML_MAX_RHO * (1.0 - 1e-12);
    Optimum { xi, value: value * n, iterations, converged, at_boundary }
}

fn gm_rho(sample: &SphereSample, basis: PolyBasis, tau: f64, dir: &[f64]) -> f64 {
    tau * sample.rows().map(|x| basis.eval(dot(x, dir))).sum::<f64>() / sample.n() as f64
}

/// Starting points `xi` for one branch.
fn ml_starts(sample: &SphereSample, basis: PolyBasis, branch: f64) -> Result<Vec<Vec<f64>>> {
    let k = basis.k();
    let d = sample.d();
    let tau = basis_constants(k, d)?.tau;
    let clamp = |r: f64| r.clamp(0.05, 0.95);
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    if k == 1 {
        if let Ok(fit) = fit_mm1(sample) {
            return Ok(vec![fit.params.xi().iter().map(|v| v / fit.params.rho() * clamp(fit.params.rho())).collect()]);
        }
    }
    if k == 2 {
        if let Ok(fit) = fit_mm2(sample, if branch > 0.0 { SignChoice::Plus } else { SignChoice::Minus }) {
            let r = clamp(fit.rho_raw * branch);
            return Ok(vec![fit.params.mu().as_slice().iter().map(|v| v * r).collect()]);
        }
    }
    let mean = sample.mean();
    if norm(&mean) > 1e-12 {
        dirs.push(mean.iter().map(|v| v / norm(&mean)).collect());
    }
    if let Ok(eig) = sym_eigen(&sample.scatter(), d + 1) {
        dirs.extend(eig.vectors);
    }
    let n = sample.n();
    let picks = n.min(20);
    dirs.extend((0..picks).map(|j| sample.row(j * n / picks).to_vec()));
    let mut starts = Vec::new();
    for dir in dirs {
        for sgn in [1.0, -1.0] {
            if sgn < 0.0 && k % 2 == 0 {
                continue;
            }
            let u: Vec<f64> = dir.iter().map(|v| sgn * v).collect();
            let r = gm_rho(sample, basis, tau, &u) * branch;
            starts.push(u.iter().map(|v| v * clamp(r)).collect());
        }
    }
    Ok(starts)
}

const ML_REFINED_STARTS: usize = 3;

fn ml_branch(sample: &SphereSample, basis: PolyBasis, branch: f64) -> Result<Optimum> {
    let mut starts = ml_starts(sample, basis, branch)?;
    if starts.len() > ML_REFINED_STARTS {
        let mut scored: Vec<(f64, Vec<f64>)> =
            starts.into_iter().map(|s| (loglik_xi_raw(sample, basis, &s, branch), s)).collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        starts = scored.into_iter().take(ML_REFINED_STARTS).map(|(_, s)| s).collect();
    }
    starts
        .iter()
        .map(|s| maximize(sample, basis, s, branch))
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| Error::Numeric("no starting point for the likelihood search".into()))
}

/// Maximum likelihood fit of `C_k(mu, rho)`.
///
/// The log-likelihood is maximized over `xi = rho mu` in the ball
/// `|xi| <= 1 - 1e-6`. For even `k` the sign of `rho` selects the branch
/// `1 +- |xi| C~_k(...)`; `Auto` fits both and keeps the larger likelihood.
/// An explicit `init` replaces the default starting points.
pub fn fit_ml(
    sample: &SphereSample,
    k: usize,
    init: Option<&CardioidParams>,
    sign: SignChoice,
) -> Result<FitResult> {
    let d = sample.d();
    if sample.n() < d + 2 {
        return domain("maximum likelihood needs at least d + 2 observations");
    }
    let basis = PolyBasis::new(d, k)?;
    if k % 2 == 1 && sign == SignChoice::Minus {
        return domain("odd orders have rho >= 0 after canonicalization; use the plus sign");
    }
    let branches: Vec<f64> = match (k % 2, sign) {
        (1, _) | (_, SignChoice::Plus) => vec![1.0],
        (_, SignChoice::Minus) => vec![-1.0],
        _ => vec![1.0, -1.0],
    };
    let mut best: Option<(Optimum, f64)> = None;
    for &branch in &branches {
        let opt = match init {
            Some(p) => {
                if p.d() != d || p.k() != k {
                    return domain("initial parameters do not match the sample and order");
                }
                let r = (p.rho() * branch).clamp(0.05, 0.95);
                let start: Vec<f64> = p.mu().as_slice().iter().map(|v| v * r).collect();
                maximize(sample, basis, &start, branch)
            }
            None => ml_branch(sample, basis, branch)?,
        };
        if best.as_ref().is_none_or(|(b, _)| opt.value > b.value) {
            best = Some((opt, branch));
        }
    }
    let (opt, branch) = best.expect("at least one branch");
    let r = norm(&opt.xi);
    if r == 0.0 || !opt.value.is_finite() {
        return Err(Error::Degenerate("likelihood maximized at the uniform distribution".into()));
    }
    let mu = UnitVector::normalize(opt.xi.clone())?;
    let rho = branch * r;
    let params = CardioidParams::new(d, k, mu, rho)?.canonicalize();
    if !opt.converged {
        return Err(Error::Numeric(format!(
            "likelihood search did not converge after {} iterations; best iterate mu = {:?}, rho = {}",
            opt.iterations,
            params.mu().as_slice(),
            params.rho()
        )));
    }
    let fi = fisher_info(d, k, params.rho())?;
    let mut out = finish(
        EstimatorKind::Ml,
        params,
        rho,
        opt.at_boundary,
        fi.sigma2_mu(),
        fi.sigma2_rho(),
    );
    out.iterations = Some(opt.iterations);
    out.loglik = Some(opt.value);
    out.converged = Some(opt.converged);
    Ok(out)
}

/// Dispatch to the estimator `kind` for order `k`.
pub fn fit(
    sample: &SphereSample,
    kind: EstimatorKind,
    k: usize,
    sign: SignChoice,
    known_mu: Option<&UnitVector>,
) -> Result<FitResult> {
    match kind {
        EstimatorKind::Mm1 if k == 1 => fit_mm1(sample),
        EstimatorKind::Mm2 if k == 2 => fit_mm2(sample, sign),
        EstimatorKind::Mm1 | EstimatorKind::Mm2 => {
            domain(format!("estimator {kind:?} does not apply to order k = {k}"))
        }
        EstimatorKind::Gm => match known_mu {
            Some(mu) => fit_gm(sample, mu, k),
            None => domain("the Gegenbauer-moment estimator needs a known location"),
        },
        EstimatorKind::Ml => fit_ml(sample, k, None, sign),
    }
}

/// The moment estimator matching `k`: `Mm1` for `k = 1`, `Mm2` for `k = 2`,
/// and maximum likelihood otherwise.
pub fn moment_estimator_for(k: usize) -> EstimatorKind {
    match k {
        1 => EstimatorKind::Mm1,
        2 => EstimatorKind::Mm2,
        _ => EstimatorKind::Ml,
    }
}
