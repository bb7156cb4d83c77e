//! The spherical cardioid distribution `C_k(mu, rho)` on `S^d`.
//!
//! Density, canonical parametrization, projections onto a direction,
//! vectorized moments, convolution and characteristic functions.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{domain, Error, Result};
use crate::geometry::{
    dot, symmetrizer_apply, uniform_moment, SymBudget, SymTensorVec, UnitVector,
};
use crate::specfun::{
    area_ratio, basis_constants, bessel_first_kind, clamp_unit, gegenbauer_raw, ln_beta,
    reg_inc_beta, surface_area, PolyBasis, MAX_ORDER,
};

/// Parameters `(d, k, mu, rho)` of `C_k(mu, rho)` on `S^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct CardioidParams {
    d: usize,
    k: usize,
    mu: UnitVector,
    rho: f64,
}

#[derive(Deserialize)]
struct RawParams {
    d: usize,
    k: usize,
    mu: UnitVector,
    rho: f64,
}

impl TryFrom<RawParams> for CardioidParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        Self::new(r.d, r.k, r.mu, r.rho)
    }
}

impl CardioidParams {
    /// Validate `d >= 1`, `1 <= k <= MAX_ORDER`, `mu` on `S^d` and
    /// `|rho| <= 1`.
    pub fn new(d: usize, k: usize, mu: UnitVector, rho: f64) -> Result<Self> {
        if d == 0 {
            return domain("sphere dimension d must be at least 1");
        }
        if k == 0 || k > MAX_ORDER {
            return domain(format!("order k = {k} must lie in 1..={MAX_ORDER}"));
        }
        if mu.d() != d {
            return domain(format!("location has {} coordinates, expected {}", mu.d() + 1, d + 1));
        }
        if !(rho.abs() <= 1.0) {
            return domain(format!("concentration {rho} outside [-1, 1]"));
        }
        Ok(Self { d, k, mu, rho })
    }

    /// Uniform distribution on `S^d` written as `C_k(e_{d+1}, 0)`.
    pub fn uniform(d: usize, k: usize) -> Result<Self> {
        Self::new(d, k, UnitVector::basis(d + 1, d)?, 0.0)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mu(&self) -> &UnitVector {
        &self.mu
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn basis(&self) -> PolyBasis {
        PolyBasis::new(self.d, self.k).expect("validated on construction")
    }

    /// `xi = rho * mu`.
    pub fn xi(&self) -> Vec<f64> {
        self.mu.as_slice().iter().map(|m| self.rho * m).collect()
    }

    /// Density as a function of `t = x' mu`.
    pub fn density_at(&self, t: f64) -> f64 {
        (1.0 + self.rho * self.basis().tilde(t)) / surface_area(self.d)
    }

    /// Whether the parameters already are the canonical representative.
    pub fn is_canonical(&self) -> bool {
        let c = self.canonicalize();
        c.rho == self.rho && c.mu == self.mu
    }

    /// Canonical representative with the same density.
    ///
    /// Odd `k` forces `rho >= 0` through `(mu, rho) -> (-mu, -rho)`. Even `k`
    /// on `d >= 2` makes the first nonzero coordinate of `mu` positive. On
    /// the circle the angle of `mu` is reduced to `[0, 2 pi / k)`, after a
    /// rotation by `pi / k` absorbs a negative `rho`.
    pub fn canonicalize(&self) -> Self {
        let mut out = self.clone();
        if self.d == 1 {
            let m = self.mu.as_slice();
            let mut theta = m[1].atan2(m[0]);
            let mut rho = self.rho;
            if rho < 0.0 {
                theta += PI / self.k as f64;
                rho = -rho;
            }
            let period = 2.0 * PI / self.k as f64;
            let mut reduced = theta.rem_euclid(period);
            if reduced >= period {
                reduced = 0.0;
            }
            // Locations that already sit at the reduced angle up to rounding
            // keep their vector, which makes the map idempotent.
            let target = UnitVector::from_angle(reduced);
            let moved = (target.as_slice()[0] - m[0]).hypot(target.as_slice()[1] - m[1]);
            if moved > 1e-14 {
                out.mu = target;
            }
            out.rho = rho;
            return out;
        }
        if self.k % 2 == 1 {
            if self.rho < 0.0 {
                out.mu = self.mu.neg();
                out.rho = -self.rho;
            }
        } else if let Some(first) = self.mu.as_slice().iter().find(|c| c.abs() > 1e-12) {
            if *first < 0.0 {
                out.mu = self.mu.neg();
            }
        }
        out
    }
}

/// Density of `C_k(mu, rho)` at `x` with respect to the surface measure.
pub fn density(p: &CardioidParams, x: &[f64]) -> Result<f64> {
    if x.len() != p.d + 1 {
        return domain(format!("point has {} coordinates, expected {}", x.len(), p.d + 1));
    }
    Ok(p.density_at(p.mu.dot(x)).max(0.0))
}

/// Log-density; `-inf` where the density vanishes.
pub fn log_density(p: &CardioidParams, x: &[f64]) -> Result<f64> {
    let f = density(p, x)?;
    Ok(if f > 0.0 { f.ln() } else { f64::NEG_INFINITY })
}

/// Parameters of the convolution `X | Xi ~ C_{k1}(Xi, rho1)`,
/// `Xi ~ C_{k2}(mu2, rho2)`.
///
/// The result is `C_{k1}(mu2, delta_{k1,k2} rho1 rho2 / d_{k1,d})`.
pub fn convolve(p1: &CardioidParams, p2: &CardioidParams) -> Result<CardioidParams> {
    if p1.d != p2.d {
        return domain("convolution needs both distributions on the same sphere");
    }
    let rho = if p1.k == p2.k {
        p1.rho * p2.rho / basis_constants(p1.k, p1.d)?.dim_harm
    } else {
        0.0
    };
    CardioidParams::new(p1.d, p1.k, p2.mu.clone(), rho)
}

/// `C_1(mu, kappa)`, the small-concentration surrogate of `vMF(mu, kappa)`.
///
/// The flag is set when `kappa` lies outside `[0, 1]`, where the surrogate
/// is a poor approximation.
pub fn vmf_to_cardioid(mu: UnitVector, kappa: f64) -> Result<(CardioidParams, bool)> {
    let d = mu.d();
    let degraded = !(0.0..=1.0).contains(&kappa);
    Ok((CardioidParams::new(d, 1, mu, kappa)?, degraded))
}

/// `C_2(mu, d kappa / (d + 1 + kappa))`, the small-concentration surrogate of
/// the Watson distribution `W(mu, kappa)`.
pub fn watson_to_cardioid(mu: UnitVector, kappa: f64) -> Result<CardioidParams> {
    let d = mu.d() as f64;
    let denom = d + 1.0 + kappa;
    if denom == 0.0 {
        return domain("Watson concentration -(d+1) has no cardioid counterpart");
    }
    CardioidParams::new(mu.d(), 2, mu, d * kappa / denom)
}

/// Density `f_d` of `gamma' U` for `U ~ Unif(S^d)`.
pub fn proj_unif_pdf(d: usize, x: f64) -> Result<f64> {
    if d == 0 {
        return domain("sphere dimension d must be at least 1");
    }
    let x = clamp_unit(x)?;
    Ok(unif_pdf(d, x))
}

fn unif_pdf(d: usize, x: f64) -> f64 {
    let base = 1.0 - x * x;
    if d == 2 {
        return 0.5;
    }
    area_ratio(d) * base.powf(d as f64 / 2.0 - 1.0)
}

/// Cdf `F_d` of `gamma' U` for `U ~ Unif(S^d)`, built by the two-step
/// recursion from `F_1` and `F_2`.
pub fn proj_unif_cdf(d: usize, x: f64) -> Result<f64> {
    if d == 0 {
        return domain("sphere dimension d must be at least 1");
    }
    Ok(unif_cdf(d, clamp_unit(x)?))
}

pub(crate) fn unif_cdf(d: usize, x: f64) -> f64 {
    let mut f = if d % 2 == 1 { 1.0 - x.acos() / PI } else { 0.5 * (x + 1.0) };
    let base = 1.0 - x * x;
    let mut e = if d % 2 == 1 { 3 } else { 4 };
    while e <= d {
        let ef = e as f64;
        f += x * base.powf(ef / 2.0 - 1.0) / ((ef - 2.0) * ln_beta(0.5, (ef - 2.0) / 2.0).exp());
        e += 2;
    }
    f.clamp(0.0, 1.0)
}

/// `F_d` through the regularized incomplete beta function.
pub fn proj_unif_cdf_beta(d: usize, x: f64) -> Result<f64> {
    if d == 0 {
        return domain("sphere dimension d must be at least 1");
    }
    let x = clamp_unit(x)?;
    let ib = reg_inc_beta(x * x, 0.5, d as f64 / 2.0)?;
    Ok(0.5 * (1.0 + x.signum() * ib))
}

/// `eta_k(s) = (omega_{d-1} / omega_d) C_k(s) / C_k(1)^2`.
pub fn eta_k(basis: PolyBasis, s: f64) -> f64 {
    let c1 = basis.at_one();
    area_ratio(basis.d()) * basis.eval(s) / (c1 * c1)
}

/// The antiderivative factor `G_k` of the projected cdf.
pub fn g_k(basis: PolyBasis, x: f64) -> f64 {
    let x = x.clamp(-1.0, 1.0);
    let (d, k) = (basis.d(), basis.k());
    let kf = k as f64;
    if d == 1 {
        (kf * x.acos()).sin() / kf
    } else {
        let df = d as f64;
        (df - 1.0) / (kf * (kf + df - 1.0))
            * gegenbauer_raw(k - 1, (df + 1.0) / 2.0, x)
            * (1.0 - x * x).powf(df / 2.0)
    }
}

/// Distribution of `gamma' X` for `X ~ C_k(mu, rho)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedCdf {
    params: CardioidParams,
    gamma: UnitVector,
    basis: PolyBasis,
    /// `rho * eta_k(gamma' mu)`.
    weight: f64,
    /// `rho * C~_k(gamma' mu)`.
    pdf_weight: f64,
}

impl ProjectedCdf {
    pub fn new(params: &CardioidParams, gamma: &UnitVector) -> Result<Self> {
        if gamma.d() != params.d {
            return domain("projection direction lives on a different sphere");
        }
        Ok(Self::from_cosine(params, gamma.clone(), params.mu.dot(gamma.as_slice())))
    }

    /// Build from a precomputed `gamma' mu`, the only way `gamma` enters.
    pub(crate) fn from_cosine(params: &CardioidParams, gamma: UnitVector, s: f64) -> Self {
        let basis = params.basis();
        let s = s.clamp(-1.0, 1.0);
        Self {
            weight: params.rho * eta_k(basis, s),
            pdf_weight: params.rho * basis.tilde(s),
            params: params.clone(),
            gamma,
            basis,
        }
    }

    pub fn params(&self) -> &CardioidParams {
        &self.params
    }

    pub fn gamma(&self) -> &UnitVector {
        &self.gamma
    }

    /// `F_gamma(x)` for `x` in `[-1, 1]` (clamped).
    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(-1.0, 1.0);
        (unif_cdf(self.params.d, x) - self.weight * g_k(self.basis, x)).clamp(0.0, 1.0)
    }

    /// `f_gamma(x)`.
    pub fn pdf(&self, x: f64) -> f64 {
        let x = x.clamp(-1.0, 1.0);
        unif_pdf(self.params.d, x) * (1.0 + self.pdf_weight * self.basis.tilde(x))
    }
}

/// Density of `gamma' X` at `x`.
pub fn proj_pdf(p: &CardioidParams, gamma: &UnitVector, x: f64) -> Result<f64> {
    let x = clamp_unit(x)?;
    Ok(ProjectedCdf::new(p, gamma)?.pdf(x))
}

/// Cdf of `gamma' X` at `x`.
pub fn proj_cdf(p: &CardioidParams, gamma: &UnitVector, x: f64) -> Result<f64> {
    let x = clamp_unit(x)?;
    Ok(ProjectedCdf::new(p, gamma)?.cdf(x))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn double_factorial_odd(n: isize) -> f64 {
    // (2j - 1)!! with (-1)!! = 1.
    let mut acc = 1.0;
    let mut i = n;
    while i > 1 {
        acc *= i as f64;
        i -= 2;
    }
    acc
}

fn binomial(n: usize, r: usize) -> f64 {
    factorial(n) / (factorial(r) * factorial(n - r))
}

/// Coefficient `a_{k,j}` of the `m = k` moment.
fn moment_a(k: usize, j: usize, d: usize) -> f64 {
    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
    let head = factorial(k) / (2f64.powi(j as i32) * factorial(k - 2 * j) * factorial(j));
    let denom: f64 = (1..=j).map(|r| 2.0 * (k - r) as f64 + d as f64 - 1.0).product();
    sign * head / denom
}

/// `int_{-1}^1 t^{m-2j} (1 - t^2)^{d/2-1+j} C_k(t) dt` for `m + k` even,
/// from the monomial expansion of `C_k`.
pub(crate) fn moment_f(j: usize, m: usize, k: usize, d: usize) -> f64 {
    let df = d as f64;
    let (kf, mf, jf) = (k as f64, m as f64, j as f64);
    let lead = if d == 1 { kf / 2.0 } else { 1.0 / gamma((df - 1.0) / 2.0) };
    let mut sum = 0.0;
    for s in 0..=k / 2 {
        let sf = s as f64;
        let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
        let ln_term = (kf - 2.0 * sf) * 2f64.ln() + ln_gamma((df - 1.0) / 2.0 + kf - sf)
            - ln_gamma(sf + 1.0)
            - ln_gamma(kf - 2.0 * sf + 1.0)
            + ln_gamma((mf + kf + 1.0) / 2.0 - jf - sf)
            - ln_gamma((df + kf + mf + 1.0) / 2.0 - sf);
        sum += sign * ln_term.exp();
    }
    lead * gamma(df / 2.0 + jf) * sum
}

fn moment_e(j: usize, k: usize, m: usize, d: usize) -> f64 {
    if (m + k) % 2 == 1 {
        return 0.0;
    }
    let denom: f64 = (0..j).map(|r| (d + 2 * r) as f64).product();
    binomial(m, 2 * j) * double_factorial_odd(2 * j as isize - 1) / denom * moment_f(j, m, k, d)
}

fn check_moment_order(p: &CardioidParams, m: usize, budget: SymBudget) -> Result<()> {
    if m == 0 {
        return domain("moment order must be at least 1");
    }
    budget.check(m, p.d + 1)
}

/// `E[X^{⊗k}]` from the `m = k` coefficient formula.
pub fn moment_equal_order(p: &CardioidParams, budget: SymBudget) -> Result<SymTensorVec> {
    let k = p.k;
    check_moment_order(p, k, budget)?;
    let dim = p.d + 1;
    let mu = p.mu.as_slice();
    let mut acc = SymTensorVec::zeros(k, dim);
    for j in 0..=k / 2 {
        let term = SymTensorVec::identity_power(dim, j).kron(&SymTensorVec::power(mu, k - 2 * j));
        acc.add_assign(&term, moment_a(k, j, p.d));
    }
    let sym = symmetrizer_apply(&acc, budget)?;
    let mut out = uniform_moment(p.d, k, budget)?;
    out.add_assign(&sym, p.rho / basis_constants(k, p.d)?.dim_harm);
    Ok(out)
}

/// `E[X^{⊗m}]` from the general-order formula, valid for every `m >= 1`.
pub fn moment_general(p: &CardioidParams, m: usize, budget: SymBudget) -> Result<SymTensorVec> {
    check_moment_order(p, m, budget)?;
    let dim = p.d + 1;
    let mu = p.mu.as_slice();
    let mut out = uniform_moment(p.d, m, budget)?;
    if (m + p.k) % 2 == 1 || p.rho == 0.0 {
        return Ok(out);
    }
    let mut proj = SymTensorVec::identity_power(dim, 1);
    proj.add_assign(&SymTensorVec::power(mu, 2), -1.0);
    let mut acc = SymTensorVec::zeros(m, dim);
    let mut proj_pow = SymTensorVec::power(mu, 0);
    for j in 0..=m / 2 {
        let term = SymTensorVec::power(mu, m - 2 * j).kron(&proj_pow);
        acc.add_assign(&term, moment_e(j, p.k, m, p.d));
        proj_pow = proj_pow.kron(&proj);
    }
    let sym = symmetrizer_apply(&acc, budget)?;
    let scale = p.rho / p.basis().at_one() * area_ratio(p.d);
    out.add_assign(&sym, scale);
    Ok(out)
}

/// `E[X^{⊗m}]`, dispatching to the uniform moment when the cardioid term
/// vanishes, to the `m = k` formula, or to the general formula.
pub fn moment_vectorized(p: &CardioidParams, m: usize, budget: SymBudget) -> Result<SymTensorVec> {
    check_moment_order(p, m, budget)?;
    if m < p.k || (m > p.k && (m - p.k) % 2 == 1) {
        uniform_moment(p.d, m, budget)
    } else if m == p.k {
        moment_equal_order(p, budget)
    } else {
        moment_general(p, m, budget)
    }
}

/// Covariance matrix of `X^{⊗m}`, row-major with side `(d+1)^m`.
pub fn moment_covariance(p: &CardioidParams, m: usize, budget: SymBudget) -> Result<Vec<f64>> {
    check_moment_order(p, 2 * m, budget)?;
    let second = moment_vectorized(p, 2 * m, budget)?;
    let first = moment_vectorized(p, m, budget)?;
    let outer = first.kron(&first);
    let side = (p.d + 1).pow(m as u32);
    let mut cov = vec![0.0; side * side];
    for r in 0..side {
        for c in 0..side {
            let idx = c * side + r;
            cov[r * side + c] = second.data[idx] - outer.data[idx];
        }
    }
    Ok(cov)
}

/// Characteristic function or moment generating function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    /// `E[exp(i t'X)]`.
    Cf,
    /// `E[exp(t'X)]`.
    Mgf,
}

fn bessel_constant(ell: usize, d: usize) -> f64 {
    if d == 1 {
        if ell == 0 {
            1.0
        } else {
            2.0
        }
    } else {
        let lam = (d as f64 - 1.0) / 2.0;
        gamma(lam) * (ell as f64 + lam)
    }
}

/// Closed-form `E[exp(i t'X)]` or `E[exp(t'X)]`; the mgf is returned as a
/// complex number with zero imaginary part.
pub fn char_fn(p: &CardioidParams, t: &[f64], kind: TransformKind) -> Result<Complex64> {
    if t.len() != p.d + 1 || t.iter().any(|x| !x.is_finite()) {
        return domain(format!("t must be a finite vector of length {}", p.d + 1));
    }
    let r = t.iter().map(|x| x * x).sum::<f64>().sqrt();
    if r == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let d = p.d;
    let k = p.k;
    let lam = (d as f64 - 1.0) / 2.0;
    let modified = kind == TransformKind::Mgf;
    let pref = (2.0 / r).powf(lam);
    let b0 = bessel_first_kind(lam, r, modified)?;
    let bk = bessel_first_kind(k as f64 + lam, r, modified)?;
    let s = (dot(p.mu.as_slice(), t) / r).clamp(-1.0, 1.0);
    let coef_k = p.rho / basis_constants(k, d)?.dim_harm * bessel_constant(k, d) * bk * p.basis().eval(s);
    let phase = match kind {
        TransformKind::Mgf => Complex64::new(1.0, 0.0),
        TransformKind::Cf => Complex64::i().powu(k as u32),
    };
    Ok(pref * (Complex64::new(bessel_constant(0, d) * b0, 0.0) + phase * coef_k))
}
