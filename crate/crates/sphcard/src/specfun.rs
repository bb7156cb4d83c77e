//! Orthogonal polynomials, normalizing constants and classical special
//! functions.
//!
//! Degree-`k` zonal polynomials on `S^d` are Gegenbauer polynomials
//! `C_k^{(d-1)/2}` for `d >= 2` and Chebyshev polynomials `T_k` for `d = 1`.
//! [`PolyBasis`] bundles the pair `(d, k)` and evaluates the polynomial, its
//! normalized version `C~_k = C_k / C_k(1)` and its derivative.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{domain, Error, Result};

/// Inputs to polynomial evaluations may exceed `[-1, 1]` by this much before
/// being rejected; they are clamped otherwise.
pub const CLAMP_TOL: f64 = 1e-12;

/// Largest polynomial degree accepted by [`PolyBasis::new`].
pub const MAX_ORDER: usize = 64;

/// Clamp `x` to `[-1, 1]`, rejecting values further than [`CLAMP_TOL`] away.
pub fn clamp_unit(x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > 1.0 + CLAMP_TOL {
        return domain(format!("argument {x} outside [-1, 1]"));
    }
    Ok(x.clamp(-1.0, 1.0))
}

/// Surface area `omega_d = 2 pi^{(d+1)/2} / Gamma((d+1)/2)` of `S^d`.
///
/// `omega_0 = 2` counts the two points of `S^0`.
pub fn surface_area(d: usize) -> f64 {
    let a = (d as f64 + 1.0) / 2.0;
    2.0 * PI.powf(a) / gamma(a)
}

/// Ratio `omega_{d-1} / omega_d`, the normalizing constant of the projected
/// uniform density.
pub fn area_ratio(d: usize) -> f64 {
    debug_assert!(d >= 1);
    let d = d as f64;
    (ln_gamma((d + 1.0) / 2.0) - ln_gamma(d / 2.0)).exp() / PI.sqrt()
}

/// Degree `k` polynomial basis on `S^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyBasis {
    d: usize,
    k: usize,
    at_one: f64,
}

impl PolyBasis {
    /// Validate `d >= 1` and `k <= MAX_ORDER`.
    pub fn new(d: usize, k: usize) -> Result<Self> {
        if d == 0 {
            return domain("sphere dimension d must be at least 1");
        }
        if k > MAX_ORDER {
            return domain(format!("degree {k} exceeds the supported maximum {MAX_ORDER}"));
        }
        Ok(Self { d, k, at_one: value_at_one(d, k) })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `C_k(1)`, equal to one for Chebyshev polynomials.
    pub fn at_one(&self) -> f64 {
        self.at_one
    }

    /// `C_k(x)` for `x` already known to lie in `[-1, 1]`; values outside are
    /// clamped.
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(-1.0, 1.0);
        if self.d == 1 {
            (self.k as f64 * x.acos()).cos()
        } else {
            gegenbauer_raw(self.k, (self.d as f64 - 1.0) / 2.0, x)
        }
    }

    /// Normalized polynomial `C_k(x) / C_k(1)`.
    pub fn tilde(&self, x: f64) -> f64 {
        self.eval(x) / self.at_one
    }

    /// Derivative of `C_k` at `x`.
    ///
    /// Uses `(d-1) C_{k-1}^{(d+1)/2}` for `d >= 2` and `k U_{k-1}` for
    /// `d = 1`; the recurrence for `U` reproduces the endpoint limit
    /// `k^2 sign(x)^{k+1}`.
    pub fn deriv(&self, x: f64) -> f64 {
        let x = x.clamp(-1.0, 1.0);
        if self.k == 0 {
            return 0.0;
        }
        if self.d == 1 {
            self.k as f64 * gegenbauer_raw(self.k - 1, 1.0, x)
        } else {
            (self.d as f64 - 1.0) * gegenbauer_raw(self.k - 1, (self.d as f64 + 1.0) / 2.0, x)
        }
    }
}

fn value_at_one(d: usize, k: usize) -> f64 {
    if d == 1 {
        return 1.0;
    }
    // Gamma(d - 1 + k) / (Gamma(d - 1) k!) as a running product.
    (1..=k).fold(1.0, |acc, j| acc * (d as f64 - 2.0 + j as f64) / j as f64)
}

/// Gegenbauer polynomial `C_k^lambda(x)` by forward recurrence, `lambda > 0`.
///
/// For `lambda = 0` the Chebyshev convention `T_k` is returned.
pub fn gegenbauer_raw(k: usize, lambda: f64, x: f64) -> f64 {
    if lambda == 0.0 {
        return (k as f64 * x.clamp(-1.0, 1.0).acos()).cos();
    }
    if k == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 2.0 * lambda * x;
    for n in 1..k {
        let nf = n as f64;
        let next = (2.0 * (nf + lambda) * x * cur - (nf + 2.0 * lambda - 1.0) * prev) / (nf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `C_k^{(d-1)/2}(x)` (or `T_k(x)` when `d = 1`) with input validation.
pub fn gegenbauer(basis: PolyBasis, x: f64) -> Result<f64> {
    Ok(basis.eval(clamp_unit(x)?))
}

/// Normalized polynomial `C~_k(x) = C_k(x) / C_k(1)`.
pub fn gegenbauer_tilde(basis: PolyBasis, x: f64) -> Result<f64> {
    Ok(basis.tilde(clamp_unit(x)?))
}

/// Derivative of `C_k^{(d-1)/2}` (or `T_k`) at `x`.
pub fn gegenbauer_deriv(basis: PolyBasis, x: f64) -> Result<f64> {
    Ok(basis.deriv(clamp_unit(x)?))
}

/// Normalizing constants attached to the degree-`k` basis on `S^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisConstants {
    /// `tau_{k,d}`.
    pub tau: f64,
    /// `d_{k,d}`, the dimension of the degree-`k` spherical harmonics.
    pub dim_harm: f64,
    /// `c_{k,d}`, the squared `L^2` norm of `C_k` under the weight
    /// `(1 - t^2)^{d/2 - 1}`.
    pub c_norm: f64,
    /// `C_k(1)`.
    pub c_at_one: f64,
}

/// Compute `tau_{k,d}`, `d_{k,d}`, `c_{k,d}` and `C_k(1)`.
pub fn basis_constants(k: usize, d: usize) -> Result<BasisConstants> {
    let basis = PolyBasis::new(d, k)?;
    let tau = if d == 1 {
        if k == 0 {
            1.0
        } else {
            2.0
        }
    } else {
        1.0 + 2.0 * k as f64 / (d as f64 - 1.0)
    };
    let c_at_one = basis.at_one();
    let dim_harm = tau * c_at_one;
    let c_norm = dim_harm / (tau * tau * area_ratio(d));
    Ok(BasisConstants { tau, dim_harm, c_norm, c_at_one })
}

/// `ln B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

const BETA_CF_MAX_ITER: usize = 300;
const BETA_CF_TOL: f64 = 1e-14;

/// Regularized incomplete beta function `I_x(a, b)`.
///
/// Evaluated by the modified Lentz continued fraction on whichever of
/// `I_x(a, b)` or `1 - I_{1-x}(b, a)` converges faster.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !(0.0..=1.0).contains(&x) {
        return domain(format!("reg_inc_beta needs 0 <= x <= 1, a, b > 0 (got x={x}, a={a}, b={b})"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok((ln_front.exp() * beta_cf(x, a, b)? / a).clamp(0.0, 1.0))
    } else {
        Ok((1.0 - ln_front.exp() * beta_cf(1.0 - x, b, a)? / b).clamp(0.0, 1.0))
    }
}

fn beta_cf(x: f64, a: f64, b: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=BETA_CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < BETA_CF_TOL {
            return Ok(h);
        }
    }
    Err(Error::Numeric(format!(
        "incomplete beta continued fraction did not converge (x={x}, a={a}, b={b})"
    )))
}

/// Bessel function of the first kind `J_nu(x)`, or the modified function
/// `I_nu(x)` when `modified` is set, for integer or half-integer `nu >= 0`.
///
/// `I_nu` is summed from its power series, whose terms are all positive.
/// `J_nu` uses the power series while it is free of cancellation, then the
/// spherical Bessel ladder for half-integer orders and the trapezoidal rule
/// on Bessel's integral for integer orders.
pub fn bessel_first_kind(nu: f64, x: f64, modified: bool) -> Result<f64> {
    if !(nu >= 0.0) || (2.0 * nu).fract() != 0.0 {
        return domain(format!("Bessel order {nu} must be a nonnegative multiple of 1/2"));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return domain(format!("Bessel argument {x} must be finite and nonnegative"));
    }
    if modified {
        return Ok(bessel_series(nu, x, 1.0));
    }
    if x <= 10.0 || nu >= x {
        return Ok(bessel_series(nu, x, -1.0));
    }
    if nu.fract() == 0.0 {
        Ok(bessel_j_integer_trapezoid(nu as usize, x))
    } else {
        Ok(bessel_j_half_ladder(nu.floor() as usize, x))
    }
}

fn bessel_series(nu: f64, x: f64, sign: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    let h = x / 2.0;
    let q = sign * h * h;
    let mut term = (nu * h.ln() - ln_gamma(nu + 1.0)).exp();
    let mut sum = term;
    for m in 1..1000 {
        let mf = m as f64;
        term *= q / (mf * (mf + nu));
        sum += term;
        if mf > h && term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn bessel_j_half_ladder(ell: usize, x: f64) -> f64 {
    let (s, c) = x.sin_cos();
    let mut j0 = s / x;
    if ell > 0 {
        let mut j1 = s / (x * x) - c / x;
        for n in 1..ell {
            let j2 = (2.0 * n as f64 + 1.0) / x * j1 - j0;
            j0 = j1;
            j1 = j2;
        }
        j0 = j1;
    }
    (2.0 * x / PI).sqrt() * j0
}

fn bessel_j_integer_trapezoid(n: usize, x: f64) -> f64 {
    let nodes = 2 * (x + n as f64).ceil() as usize + 64;
    let step = 2.0 * PI / nodes as f64;
    let sum: f64 = (0..nodes)
        .map(|j| {
            let t = j as f64 * step;
            (n as f64 * t - x * t.sin()).cos()
        })
        .sum();
    sum / nodes as f64
}

/// Gauss quadrature families on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuadratureRule {
    /// Unit weight; weights sum to 2.
    GaussLegendre,
    /// Weight `(1 - x^2)^{-1/2}`; weights sum to `pi`.
    GaussChebyshev,
}

type NodeTable = Arc<Vec<(f64, f64)>>;

fn node_cache() -> &'static RwLock<HashMap<(QuadratureRule, usize), NodeTable>> {
    static CACHE: OnceLock<RwLock<HashMap<(QuadratureRule, usize), NodeTable>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Nodes and weights of the `n`-point Gauss rule, sorted by node.
///
/// Tables are cached after first use.
pub fn quadrature_nodes(rule: QuadratureRule, n: usize) -> Result<NodeTable> {
    if n == 0 {
        return domain("quadrature needs at least one node");
    }
    if let Some(table) = node_cache().read().expect("quadrature cache poisoned").get(&(rule, n)) {
        return Ok(Arc::clone(table));
    }
    let table = Arc::new(match rule {
        QuadratureRule::GaussLegendre => gauss_legendre(n)?,
        QuadratureRule::GaussChebyshev => gauss_chebyshev(n),
    });
    node_cache()
        .write()
        .expect("quadrature cache poisoned")
        .entry((rule, n))
        .or_insert_with(|| Arc::clone(&table));
    Ok(table)
}

fn gauss_legendre(n: usize) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut converged = false;
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z_old = z;
            z = z_old - p1 / pp;
            if (z - z_old).abs() <= 1e-15 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numeric(format!("Gauss-Legendre node {i} of {n} did not converge")));
        }
        out.push((z, 2.0 / ((1.0 - z * z) * pp * pp)));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

fn gauss_chebyshev(n: usize) -> Vec<(f64, f64)> {
    let w = PI / n as f64;
    let mut out: Vec<(f64, f64)> =
        (1..=n).map(|i| (((2 * i - 1) as f64 * PI / (2 * n) as f64).cos(), w)).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Integrate `f` over `[a, b]` with the `n`-point Gauss-Legendre rule.
pub fn integrate_gl<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> Result<f64> {
    let nodes = quadrature_nodes(QuadratureRule::GaussLegendre, n)?;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    Ok(half * nodes.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>())
}
