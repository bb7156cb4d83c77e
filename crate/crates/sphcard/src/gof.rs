//! Projected-ecdf goodness-of-fit statistics and the parametric bootstrap.
//!
//! The statistic `P_n^{W,lambda}` integrates, over projection directions
//! `gamma ~ lambda`, a weighted quadratic distance between the ecdf of
//! `gamma' X_i` and the fitted projected cdf `F_gamma`. The weight `W` is
//! Cramer-von Mises or Anderson-Darling and `lambda` is uniform, the
//! empirical distribution of the sample, or the fitted cardioid.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cardioid::{CardioidParams, ProjectedCdf};
use crate::error::{domain, Error, Result};
use crate::estimation::{fit, EstimatorKind, FitResult, SignChoice};
use crate::geometry::{dot, uniform_sphere, SphereSample, UnitVector};
use crate::rng::stream;
use crate::sampling::{sample as draw, SamplerKind};
use crate::specfun::gegenbauer_raw;

/// Weight function of the projected distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weight {
    Cvm,
    Ad,
}

/// Law of the projection directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lambda {
    Unif,
    EmpiricalPn,
    CardioidNull,
}

/// Lower and upper guards applied to `U` inside Anderson-Darling logarithms.
const AD_LOWER: f64 = 1e-300;
const AD_UPPER: f64 = 1.0 - 1e-16;

/// Statistic from probability-integral transforms `u`, sorted in place.
///
/// With `omit_last` the largest Anderson-Darling addend is dropped, which
/// is how the self-projection `U = 1` is handled under `lambda = P_n`.
fn stat_sorted(u: &mut [f64], weight: Weight, omit_last: bool) -> f64 {
    u.sort_by(f64::total_cmp);
    let n = u.len();
    let nf = n as f64;
    match weight {
        Weight::Cvm => {
            u.iter()
                .enumerate()
                .map(|(i, &v)| (v - (2 * i + 1) as f64 / (2.0 * nf)).powi(2))
                .sum::<f64>()
                + 1.0 / (12.0 * nf)
        }
        Weight::Ad => {
            let upto = if omit_last { n - 1 } else { n };
            let s: f64 = u[..upto]
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let lo = v.clamp(AD_LOWER, AD_UPPER).ln();
                    let hi = (1.0 - v).clamp(AD_LOWER, AD_UPPER).ln();
                    (2 * i + 1) as f64 * lo + (2 * (n - i) - 1) as f64 * hi
                })
                .sum();
            -nf - s / nf
        }
    }
}

/// Cramer-von Mises or Anderson-Darling statistic of the uniforms `u`.
///
/// Anderson-Darling signals a numeric error when some `u` is exactly 0 or 1.
pub fn stat_from_uniforms(u: &[f64], weight: Weight) -> Result<f64> {
    if u.is_empty() {
        return domain("statistic of an empty sample");
    }
    if weight == Weight::Ad && u.iter().any(|&v| v <= 0.0 || v >= 1.0) {
        return Err(Error::Numeric("Anderson-Darling statistic with a transform equal to 0 or 1".into()));
    }
    let mut u = u.to_vec();
    Ok(stat_sorted(&mut u, weight, false))
}

fn transforms(sample: &SphereSample, f: &ProjectedCdf) -> Vec<f64> {
    let g = f.gamma().as_slice();
    sample.rows().map(|x| f.cdf(dot(g, x))).collect()
}

/// Statistic along a single direction, `U_i = F_gamma(gamma' X_i)`.
pub fn stat_one_direction(sample: &SphereSample, f: &ProjectedCdf, weight: Weight) -> Result<f64> {
    if sample.d() != f.params().d() {
        return domain("sample and projected cdf live on different spheres");
    }
    stat_from_uniforms(&transforms(sample, f), weight)
}

fn check_pair(sample: &SphereSample, fitted: &CardioidParams) -> Result<()> {
    if sample.is_empty() {
        return domain("goodness-of-fit statistic of an empty sample");
    }
    if sample.d() != fitted.d() {
        return domain("sample and fitted parameters live on different spheres");
    }
    Ok(())
}

/// Monte Carlo statistic with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McStat {
    pub value: f64,
    pub se: f64,
}

fn mean_se(values: &[f64]) -> McStat {
    let k = values.len() as f64;
    let value = values.iter().sum::<f64>() / k;
    let se = if values.len() > 1 {
        (values.iter().map(|v| (v - value).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
    } else {
        f64::NAN
    };
    McStat { value, se }
}

/// Average of the per-direction statistic over the given directions.
///
/// Anderson-Darling logarithms are guarded rather than rejected here.
pub fn stat_directions(
    sample: &SphereSample,
    fitted: &CardioidParams,
    weight: Weight,
    directions: &[UnitVector],
) -> Result<McStat> {
    check_pair(sample, fitted)?;
    if directions.is_empty() {
        return domain("at least one projection direction is needed");
    }
    let values = directions
        .iter()
        .map(|g| {
            let f = ProjectedCdf::new(fitted, g)?;
            Ok(stat_sorted(&mut transforms(sample, &f), weight, false))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean_se(&values))
}

/// Draw `count` directions from `lambda` (uniform or the fitted cardioid).
pub fn draw_directions<R: Rng + ?Sized>(
    fitted: &CardioidParams,
    lambda: Lambda,
    count: usize,
    rng: &mut R,
) -> Result<Vec<UnitVector>> {
    match lambda {
        Lambda::Unif => (0..count).map(|_| uniform_sphere(fitted.d(), rng)).collect(),
        Lambda::CardioidNull => {
            let s = draw(fitted, count, SamplerKind::Auto, rng)?.sample;
            s.rows().map(|x| UnitVector::normalize(x.to_vec())).collect()
        }
        Lambda::EmpiricalPn => domain("empirical directions are not drawn at random"),
    }
}

/// Monte Carlo approximation of `P_n^{W,lambda}` with `k_dirs` random
/// directions.
pub fn stat_mc<R: Rng + ?Sized>(
    sample: &SphereSample,
    fitted: &CardioidParams,
    weight: Weight,
    lambda: Lambda,
    k_dirs: usize,
    rng: &mut R,
) -> Result<McStat> {
    check_pair(sample, fitted)?;
    if k_dirs == 0 {
        return domain("the Monte Carlo statistic needs K >= 1 directions");
    }
    let dirs = draw_directions(fitted, lambda, k_dirs, rng)?;
    stat_directions(sample, fitted, weight, &dirs)
}

/// Exact `P_n^{W,P_n}`: the average over `gamma = X_i` of the per-direction
/// statistic, dropping the self-projection addend under Anderson-Darling.
pub fn stat_pn_exact(sample: &SphereSample, fitted: &CardioidParams, weight: Weight) -> Result<f64> {
    check_pair(sample, fitted)?;
    let n = sample.n();
    if weight == Weight::Ad && n < 2 {
        return domain("the Anderson-Darling P_n statistic needs n >= 2");
    }
    let mu = fitted.mu().as_slice();
    let mut u = vec![0.0; n];
    let mut total = 0.0;
    for g in sample.rows() {
        // The projected cdf depends on gamma only through gamma' mu; the
        // stored direction is unused here.
        let f = ProjectedCdf::from_cosine(fitted, fitted.mu().clone(), dot(g, mu));
        for (ui, x) in u.iter_mut().zip(sample.rows()) {
            *ui = f.cdf(dot(g, x));
        }
        total += stat_sorted(&mut u, weight, weight == Weight::Ad);
    }
    Ok(total / n as f64)
}

/// Whether the closed form of `P_n^{CvM,Unif}` is available.
pub fn cvm_unif_closed_supported(d: usize, k: usize) -> bool {
    d == 1 || (d == 2 && (k == 1 || k == 2))
}

/// Pairs closer than this to antipodal (d = 1) or coincident (d = 2, k = 2)
/// use the limiting value of the kernel's `rho` term.
const KERNEL_EDGE: f64 = 1e-12;

fn psi_cvm(d: usize, t: f64) -> f64 {
    let theta = t.clamp(-1.0, 1.0).acos();
    if d == 1 {
        let r = theta / (2.0 * PI);
        0.5 + r * (r - 1.0)
    } else {
        0.5 - 0.25 * (theta / 2.0).sin()
    }
}

/// Closed form of `P_n^{CvM,Unif}` for `d = 1` (any `k`) and `d = 2` with
/// `k` in `{1, 2}`, in `O(n^2)`.
pub fn stat_cvm_unif_closed(sample: &SphereSample, fitted: &CardioidParams) -> Result<f64> {
    check_pair(sample, fitted)?;
    let (d, k, rho) = (fitted.d(), fitted.k(), fitted.rho());
    if !cvm_unif_closed_supported(d, k) {
        return Err(Error::Unsupported(format!(
            "no closed form of the uniform-direction CvM statistic for d = {d}, k = {k}"
        )));
    }
    let mu = fitted.mu().as_slice();
    let m: Vec<f64> = sample.rows().map(|x| dot(x, mu).clamp(-1.0, 1.0)).collect();
    let kf = k as f64;
    let phi = |mi: f64| -> f64 {
        match (d, k) {
            (1, _) => {
                rho / (2.0 * PI * PI * kf * kf)
                    * (gegenbauer_raw(k, 0.0, mi) - rho / 4.0 * (2.0 - gegenbauer_raw(2 * k, 0.0, mi)))
            }
            (2, 1) => rho / 30.0 * mi - rho * rho / 4.0 * (2.0 / 35.0 - 4.0 * mi * mi / 105.0),
            _ => {
                let m2 = mi * mi;
                rho / 420.0 * (3.0 * m2 - 1.0)
                    - rho * rho / 4.0 * (1.0 / 330.0 + 3.0 * m2 / 385.0 - m2 * m2 / 110.0)
            }
        }
    };
    let psi_rho = |t: f64, mi: f64, mj: f64| -> f64 {
        match (d, k) {
            (1, _) => {
                if t <= -1.0 + KERNEL_EDGE {
                    return 0.0;
                }
                let theta = t.acos();
                let c = ((mi + mj) / (2.0 * (1.0 + t)).sqrt()).clamp(-1.0, 1.0);
                (PI - theta) / (2.0 * PI * PI * kf) * gegenbauer_raw(k, 0.0, c) * (kf * theta / 2.0).sin()
            }
            (2, 1) => ((1.0 - t) / 2.0).sqrt() * (mi + mj) / 32.0,
            _ => {
                if t >= 1.0 - KERNEL_EDGE {
                    return 0.0;
                }
                let brace = (1.0 + t) / 2.0 + 3.0 * (3.0 * t - 1.0) / (4.0 * (1.0 - t)) * (mi * mi + mj * mj)
                    + 3.0 * (t - 3.0) / (2.0 * (1.0 - t)) * mi * mj;
                // This kernel enters with the sign opposite to the d = 2,
                // k = 1 case; Monte Carlo and the V-statistic oracle agree
                // only with this sign.
                -((1.0 - t) / 2.0).sqrt() * brace / 128.0
            }
        }
    };
    let n = sample.n();
    let rows: Vec<&[f64]> = sample.rows().collect();
    let mut pair_sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let t = dot(rows[i], rows[j]).clamp(-1.0, 1.0);
            pair_sum += psi_cvm(d, t) - rho * psi_rho(t, m[i], m[j]);
        }
    }
    let phi_sum: f64 = m.iter().map(|&mi| phi(mi)).sum();
    let nf = n as f64;
    Ok((3.0 - 2.0 * nf) / 6.0 - phi_sum + 2.0 / nf * pair_sum)
}

/// V-statistic form of `P_n^{W,lambda}` with each expectation over `gamma`
/// replaced by an average over `k_expect` draws. A testing oracle: it is
/// `O(k_expect n^2)`.
pub fn stat_vform_oracle<R: Rng + ?Sized>(
    sample: &SphereSample,
    fitted: &CardioidParams,
    weight: Weight,
    lambda: Lambda,
    k_expect: usize,
    rng: &mut R,
) -> Result<McStat> {
    check_pair(sample, fitted)?;
    if k_expect == 0 {
        return domain("the V-statistic oracle needs at least one direction");
    }
    let n = sample.n();
    let nf = n as f64;
    let dirs = draw_directions(fitted, lambda, k_expect, rng)?;
    let mut values = Vec::with_capacity(k_expect);
    for g in &dirs {
        let f = ProjectedCdf::new(fitted, g)?;
        // F_gamma is nondecreasing, so F(max(a, b)) = max(F(a), F(b)).
        let fv = transforms(sample, &f);
        let v = match weight {
            Weight::Cvm => {
                // W(u) = u, W_1(u) = u^2 / 2, W_2(u) = u^3 / 3.
                let single: f64 = fv.iter().map(|u| u * u).sum();
                let mut double = 0.0;
                for a in &fv {
                    for b in &fv {
                        double += a.max(*b);
                    }
                }
                nf / 3.0 + single - double / nf
            }
            Weight::Ad => {
                let single: f64 = fv.iter().map(|u| (1.0 - u).clamp(AD_LOWER, AD_UPPER).ln()).sum();
                let mut double = 0.0;
                for a in &fv {
                    for b in &fv {
                        let u = a.max(*b);
                        double += u.clamp(AD_LOWER, AD_UPPER).ln() - (1.0 - u).clamp(AD_LOWER, AD_UPPER).ln();
                    }
                }
                -nf - 2.0 * single - double / nf
            }
        };
        values.push(v);
    }
    Ok(mean_se(&values))
}

/// Configuration of the statistic and of the bootstrap test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofConfig {
    pub weight: Weight,
    pub lambda: Lambda,
    /// Monte Carlo directions, used when no closed or exact form applies.
    pub k_dirs: usize,
    /// Bootstrap replicates.
    pub b: usize,
    pub seed: u64,
    pub estimator: EstimatorKind,
    pub sign: SignChoice,
    /// Fixed null parameters; estimation steps are skipped when set.
    pub simple_null: Option<CardioidParams>,
    /// Reuse one set of Monte Carlo directions for the observed statistic
    /// and every replicate.
    pub shared_directions: bool,
    /// Use the closed form of `P_n^{CvM,Unif}` when available.
    pub use_closed_form: bool,
    /// Level of the percentile confidence regions, if wanted.
    pub ci_alpha: Option<f64>,
}

impl Default for GofConfig {
    fn default() -> Self {
        Self {
            weight: Weight::Cvm,
            lambda: Lambda::Unif,
            k_dirs: 50,
            b: 100,
            seed: 0,
            estimator: EstimatorKind::Mm1,
            sign: SignChoice::Auto,
            simple_null: None,
            shared_directions: false,
            use_closed_form: true,
            ci_alpha: None,
        }
    }
}

impl GofConfig {
    fn validate(&self) -> Result<()> {
        if self.k_dirs == 0 {
            return domain("K must be at least 1");
        }
        if self.b < 19 {
            return domain(format!("B must be at least 19, got {}", self.b));
        }
        if let Some(a) = self.ci_alpha {
            if !(a > 0.0 && a < 1.0) {
                return domain(format!("confidence level parameter alpha = {a} outside (0, 1)"));
            }
        }
        Ok(())
    }
}

/// Stream keys under the configured seed.
const KEY_OBSERVED: u64 = 0;
const KEY_REPLICATE: u64 = 1;
const KEY_SHARED_DIRECTIONS: u64 = 2;

/// The statistic selected by `cfg` for a sample and fitted parameters.
pub fn statistic<R: Rng + ?Sized>(
    sample: &SphereSample,
    fitted: &CardioidParams,
    cfg: &GofConfig,
    rng: &mut R,
) -> Result<f64> {
    match cfg.lambda {
        Lambda::EmpiricalPn => stat_pn_exact(sample, fitted, cfg.weight),
        Lambda::Unif
            if cfg.use_closed_form && cfg.weight == Weight::Cvm && cvm_unif_closed_supported(fitted.d(), fitted.k()) =>
        {
            stat_cvm_unif_closed(sample, fitted)
        }
        lambda => {
            if cfg.shared_directions {
                let mut shared = stream(cfg.seed, &[KEY_SHARED_DIRECTIONS]);
                Ok(stat_mc(sample, fitted, cfg.weight, lambda, cfg.k_dirs, &mut shared)?.value)
            } else {
                Ok(stat_mc(sample, fitted, cfg.weight, lambda, cfg.k_dirs, rng)?.value)
            }
        }
    }
}

/// Percentile bootstrap confidence regions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapCi {
    pub alpha: f64,
    /// Interval for `rho`.
    pub ci_rho: (f64, f64),
    /// The region for `mu` is `{mu : mu' mu_hat >= cap_mu}` for odd `k`
    /// and `{mu : |mu' mu_hat| >= cap_mu}` for even `k`.
    pub cap_mu: f64,
}

/// Percentile intervals from bootstrap refits around the estimate `mu_hat`.
pub fn bootstrap_ci(boot_fits: &[CardioidParams], mu_hat: &UnitVector, alpha: f64) -> Result<BootstrapCi> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha = {alpha} outside (0, 1)"));
    }
    let b = boot_fits.len();
    if b == 0 || (b as f64) < (1.0 / alpha).ceil() {
        return domain(format!("{b} bootstrap fits are too few for alpha = {alpha}"));
    }
    let bp1 = (b + 1) as f64;
    let order = |v: &[f64], i: usize| v[i.clamp(1, b) - 1];
    let mut rhos: Vec<f64> = boot_fits.iter().map(|p| p.rho()).collect();
    rhos.sort_by(f64::total_cmp);
    let lo = order(&rhos, (bp1 * alpha / 2.0).ceil() as usize);
    let hi = order(&rhos, (bp1 * (1.0 - alpha / 2.0)).floor() as usize);
    let even = boot_fits[0].k() % 2 == 0;
    let mut t: Vec<f64> = boot_fits
        .iter()
        .map(|p| {
            let c = mu_hat.dot(p.mu().as_slice());
            if even {
                c.abs()
            } else {
                c
            }
        })
        .collect();
    t.sort_by(f64::total_cmp);
    let cap = order(&t, (alpha * bp1).ceil() as usize);
    Ok(BootstrapCi { alpha, ci_rho: (lo, hi), cap_mu: cap })
}

/// Outcome of the bootstrap test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GofResult {
    pub statistic: f64,
    pub pvalue: f64,
    /// Replicates that produced a statistic.
    #[serde(rename = "B_effective")]
    pub b_effective: usize,
    /// Replicates excluded after a failed retry.
    pub failed: usize,
    pub boot_stats: Vec<f64>,
    /// Parameters of the null distribution the bootstrap draws from.
    pub null_params: CardioidParams,
    /// The fit on the data; absent under a simple null.
    pub fitted: Option<FitResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci: Option<BootstrapCi>,
}

/// `(1 + #{boot > stat}) / (B + 1)`.
pub fn bootstrap_pvalue(stat: f64, boot: &[f64]) -> f64 {
    let exceed = boot.iter().filter(|&&b| b > stat).count();
    (1 + exceed) as f64 / (boot.len() + 1) as f64
}

fn estimate(sample: &SphereSample, k: usize, cfg: &GofConfig) -> Result<Option<FitResult>> {
    if cfg.simple_null.is_some() {
        return Ok(None);
    }
    fit(sample, cfg.estimator, k, cfg.sign, None).map(Some)
}

/// Parametric bootstrap test of `H_0: X ~ C_k(mu, rho)`.
///
/// Replicate `b` draws from the stream `(seed, 1, b, attempt)`, so the
/// result does not depend on how replicates are scheduled. A replicate
/// whose refit fails is retried once with a fresh stream and excluded if
/// it fails again; more than 5% excluded replicates is an error.
pub fn bootstrap_test(sample: &SphereSample, k: usize, cfg: &GofConfig) -> Result<GofResult> {
    cfg.validate()?;
    if sample.is_empty() {
        return domain("goodness-of-fit test of an empty sample");
    }
    if cfg.estimator == EstimatorKind::Gm && cfg.simple_null.is_none() {
        return domain("the bootstrap needs an estimator of both mu and rho");
    }
    let fitted = estimate(sample, k, cfg)?;
    let null = match (&cfg.simple_null, &fitted) {
        (Some(p), _) => {
            if p.d() != sample.d() || p.k() != k {
                return domain("simple null does not match the sample dimension and order");
            }
            p.clone()
        }
        (None, Some(f)) => f.params.clone(),
        (None, None) => unreachable!("estimate returns a fit without a simple null"),
    };
    let observed = statistic(sample, &null, cfg, &mut stream(cfg.seed, &[KEY_OBSERVED]))?;
    let n = sample.n();
    let replicate = |b: usize, attempt: u64| -> Result<(f64, CardioidParams)> {
        let mut rng = stream(cfg.seed, &[KEY_REPLICATE, b as u64, attempt]);
        let sim = draw(&null, n, SamplerKind::Auto, &mut rng)?.sample;
        let refit = match estimate(&sim, k, cfg)? {
            Some(f) => f.params,
            None => null.clone(),
        };
        let s = statistic(&sim, &refit, cfg, &mut rng)?;
        if !s.is_finite() {
            return Err(Error::Numeric("non-finite bootstrap statistic".into()));
        }
        Ok((s, refit))
    };
    let outcomes: Vec<Option<(f64, CardioidParams)>> = (0..cfg.b)
        .into_par_iter()
        .map(|b| replicate(b, 0).or_else(|_| replicate(b, 1)).ok())
        .collect();
    let failed = outcomes.iter().filter(|o| o.is_none()).count();
    if failed * 20 > cfg.b {
        return Err(Error::Numeric(format!("{failed} of {} bootstrap replicates failed", cfg.b)));
    }
    if failed > 0 {
        log::warn!("{failed} bootstrap replicates failed and were excluded");
    }
    let (boot_stats, boot_fits): (Vec<f64>, Vec<CardioidParams>) = outcomes.into_iter().flatten().unzip();
    let ci = match cfg.ci_alpha {
        Some(alpha) if cfg.simple_null.is_none() => Some(bootstrap_ci(&boot_fits, null.mu(), alpha)?),
        _ => None,
    };
    Ok(GofResult {
        statistic: observed,
        pvalue: bootstrap_pvalue(observed, &boot_stats),
        b_effective: boot_stats.len(),
        failed,
        boot_stats,
        null_params: null,
        fitted,
        ci,
    })
}

/// Ecdf of `gamma' X_i` and the fitted projected cdf on a grid of `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionCurve {
    pub x: Vec<f64>,
    pub ecdf: Vec<f64>,
    pub cdf: Vec<f64>,
}

/// Projected ecdf against the fitted projected cdf at `points` equispaced
/// abscissae in `[-1, 1]`.
pub fn projection_curve(
    sample: &SphereSample,
    fitted: &CardioidParams,
    gamma: &UnitVector,
    points: usize,
) -> Result<ProjectionCurve> {
    check_pair(sample, fitted)?;
    if points < 2 {
        return domain("a projection curve needs at least two grid points");
    }
    let f = ProjectedCdf::new(fitted, gamma)?;
    let mut proj: Vec<f64> = sample.rows().map(|x| gamma.dot(x)).collect();
    proj.sort_by(f64::total_cmp);
    let nf = proj.len() as f64;
    let x: Vec<f64> = (0..points).map(|i| -1.0 + 2.0 * i as f64 / (points - 1) as f64).collect();
    let ecdf = x.iter().map(|&v| proj.partition_point(|&p| p <= v) as f64 / nf).collect();
    let cdf = x.iter().map(|&v| f.cdf(v)).collect();
    Ok(ProjectionCurve { x, ecdf, cdf })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_direction_examples() {
        let n = 7;
        let u: Vec<f64> = (0..n).map(|i| (2 * i + 1) as f64 / (2.0 * n as f64)).collect();
        assert!((stat_from_uniforms(&u, Weight::Cvm).unwrap() - 1.0 / 84.0).abs() < 1e-15);
        assert!((stat_from_uniforms(&[0.5], Weight::Cvm).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        let ad = stat_from_uniforms(&[0.5], Weight::Ad).unwrap();
        assert!((ad - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-15);
        assert!(stat_from_uniforms(&[0.2, 1.0], Weight::Ad).is_err());
    }

    #[test]
    fn pvalue_example() {
        let boot: Vec<f64> = (0..99).map(|i| if i < 4 { 2.0 } else { 0.5 }).collect();
        assert!((bootstrap_pvalue(1.0, &boot) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn closed_form_support() {
        assert!(cvm_unif_closed_supported(1, 7));
        assert!(cvm_unif_closed_supported(2, 2));
        assert!(!cvm_unif_closed_supported(2, 3));
        assert!(!cvm_unif_closed_supported(3, 1));
        assert_eq!(psi_cvm(2, 1.0), 0.5);
    }

    #[test]
    fn constant_ci() {
        let mu = UnitVector::basis(3, 2).unwrap();
        let p = CardioidParams::new(2, 1, mu.clone(), 0.4).unwrap();
        let ci = bootstrap_ci(&vec![p; 40], &mu, 0.05).unwrap();
        assert_eq!(ci.ci_rho, (0.4, 0.4));
        assert_eq!(ci.cap_mu, 1.0);
        assert!(bootstrap_ci(&[], &mu, 0.05).is_err());
    }
}
