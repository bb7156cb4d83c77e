//! Monte Carlo experiment harness: rejection rates of the bootstrap test
//! under the null (size) and under alternatives (power), and sampling
//! distributions of the estimators (asymptotics).
//!
//! Every replicate draws from its own stream keyed by the experiment seed,
//! the cell index and the replicate index, so reports do not depend on
//! thread scheduling.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sphcard::estimation::{fisher_info, fit, fit_ml, moment_estimator_for, sigma2_mm1, sigma2_mm2, SignChoice};
use sphcard::gof::{bootstrap_test, GofConfig, Lambda, Weight};
use sphcard::rng::stream;
use sphcard::sampling::{sample, SamplerKind};
use sphcard::{CardioidParams, UnitVector};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{usage, CliResult};

/// Experiment family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SizeTable,
    PowerTable,
    Asymptotics,
}

/// Estimator family used by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorChoice {
    /// The moment estimator of the null order (`mm1` or `mm2`).
    Mm,
    Ml,
}

/// One grid cell. `k` is the order of the data and `k0` the order of the
/// null (equal to `k` unless given).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub k: usize,
    #[serde(default)]
    pub k0: Option<usize>,
    pub d: usize,
    pub rho: f64,
    pub n: usize,
}

impl Cell {
    pub fn null_order(&self) -> usize {
        self.k0.unwrap_or(self.k)
    }
}

/// Statistic variant of the test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatVariant {
    pub weight: Weight,
    pub lambda: Lambda,
}

fn default_statistics() -> Vec<StatVariant> {
    vec![StatVariant { weight: Weight::Cvm, lambda: Lambda::EmpiricalPn }]
}

fn default_estimators() -> Vec<EstimatorChoice> {
    vec![EstimatorChoice::Mm, EstimatorChoice::Ml]
}

fn default_alpha() -> f64 {
    0.05
}

fn default_k_dirs() -> usize {
    50
}

fn default_b() -> usize {
    100
}

/// Experiment description, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub grid: Vec<Cell>,
    /// Monte Carlo replicates per cell.
    #[serde(rename = "M")]
    pub m: usize,
    /// Bootstrap replicates per test.
    #[serde(rename = "B", default = "default_b")]
    pub b: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub seed: u64,
    /// Test statistics (size and power tables).
    #[serde(default = "default_statistics")]
    pub statistics: Vec<StatVariant>,
    /// Estimator used to fit the null (size and power tables).
    #[serde(default = "default_estimator")]
    pub estimator: EstimatorChoice,
    /// Estimators to summarize (asymptotics).
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorChoice>,
    /// Monte Carlo directions for statistics without an exact form.
    #[serde(rename = "K", default = "default_k_dirs")]
    pub k_dirs: usize,
}

fn default_estimator() -> EstimatorChoice {
    EstimatorChoice::Mm
}

impl ExperimentSpec {
    pub fn validate(&self) -> CliResult<()> {
        if self.m == 0 {
            return usage("M must be at least 1");
        }
        if self.kind != ExperimentKind::Asymptotics && self.b < 19 {
            return usage("B must be at least 19");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return usage("alpha must lie in (0, 1)");
        }
        for c in &self.grid {
            if self.kind == ExperimentKind::PowerTable && c.null_order() == c.k {
                return usage(format!("power cell with k = k0 = {}", c.k));
            }
            if self.kind == ExperimentKind::SizeTable && c.null_order() != c.k {
                return usage(format!("size cell with k = {} but k0 = {}", c.k, c.null_order()));
            }
            if c.n == 0 {
                return usage("cells need n >= 1");
            }
        }
        Ok(())
    }
}

/// Location used for simulated data: the last basis vector.
pub fn experiment_mu(d: usize) -> sphcard::Result<UnitVector> {
    UnitVector::basis(d + 1, d)
}

/// Rejection count of one cell with an exact Clopper-Pearson interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectionRow {
    pub kind: ExperimentKind,
    pub k: usize,
    pub k0: usize,
    pub d: usize,
    pub rho: f64,
    pub n: usize,
    pub weight: Weight,
    pub lambda: Lambda,
    pub estimator: EstimatorChoice,
    #[serde(rename = "M")]
    pub m: usize,
    /// Replicates whose test completed.
    #[serde(rename = "M_effective")]
    pub m_effective: usize,
    pub rejections: usize,
    pub rejection_pct: f64,
    /// 95% Clopper-Pearson interval for the rejection percentage.
    pub ci_lo_pct: f64,
    pub ci_hi_pct: f64,
    pub alpha: f64,
    #[serde(rename = "B")]
    pub b: usize,
    pub skipped: String,
}

/// Sampling summary of one estimator and one quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticsRow {
    pub k: usize,
    pub d: usize,
    pub rho: f64,
    pub n: usize,
    pub estimator: EstimatorChoice,
    /// `mu1` for `sqrt(n) (mu_hat_1 - mu_1)` or `rho` for
    /// `sqrt(n) (rho_hat - rho)`.
    pub quantity: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "M_effective")]
    pub m_effective: usize,
    pub mean: f64,
    pub sd: f64,
    pub asymptotic_sd: f64,
    /// `sd / asymptotic_sd - 1`.
    pub rel_err: f64,
    pub skipped: String,
}

/// Exact two-sided Clopper-Pearson interval for a binomial proportion.
pub fn clopper_pearson(x: usize, m: usize, level: f64) -> (f64, f64) {
    if m == 0 {
        return (0.0, 1.0);
    }
    let a = 1.0 - level;
    let lo = if x == 0 {
        0.0
    } else {
        Beta::new(x as f64, (m - x + 1) as f64).expect("positive shapes").inverse_cdf(a / 2.0)
    };
    let hi = if x == m {
        1.0
    } else {
        Beta::new((x + 1) as f64, (m - x) as f64).expect("positive shapes").inverse_cdf(1.0 - a / 2.0)
    };
    (lo, hi)
}

/// Per-replicate seed of the bootstrap stream.
fn bootstrap_seed(seed: u64, cell: usize, rep: usize) -> u64 {
    stream(seed, &[1, cell as u64, rep as u64]).random()
}

fn data_stream(seed: u64, cell: usize, rep: usize) -> sphcard::rng::StreamRng {
    stream(seed, &[0, cell as u64, rep as u64])
}

fn estimator_kind(choice: EstimatorChoice, k: usize) -> sphcard::estimation::EstimatorKind {
    match choice {
        EstimatorChoice::Mm => moment_estimator_for(k),
        EstimatorChoice::Ml => sphcard::estimation::EstimatorKind::Ml,
    }
}

/// Rejections of the bootstrap test in one cell for one statistic.
///
/// Replicates whose data or test fail are excluded from `M_effective`.
pub fn rejection_cell(
    kind: ExperimentKind,
    cell_index: usize,
    cell: &Cell,
    variant: StatVariant,
    spec: &ExperimentSpec,
) -> CliResult<RejectionRow> {
    let k0 = cell.null_order();
    let truth = CardioidParams::new(cell.d, cell.k, experiment_mu(cell.d)?, cell.rho)?;
    let base = GofConfig {
        weight: variant.weight,
        lambda: variant.lambda,
        k_dirs: spec.k_dirs,
        b: spec.b,
        estimator: estimator_kind(spec.estimator, k0),
        sign: SignChoice::Auto,
        ..GofConfig::default()
    };
    let outcomes: Vec<Option<bool>> = (0..spec.m)
        .into_par_iter()
        .map(|r| {
            let mut rng = data_stream(spec.seed, cell_index, r);
            let data = sample(&truth, cell.n, SamplerKind::Auto, &mut rng).ok()?.sample;
            let cfg = GofConfig { seed: bootstrap_seed(spec.seed, cell_index, r), ..base.clone() };
            let res = bootstrap_test(&data, k0, &cfg).ok()?;
            Some(res.pvalue <= spec.alpha)
        })
        .collect();
    let done: Vec<bool> = outcomes.into_iter().flatten().collect();
    let rejections = done.iter().filter(|&&r| r).count();
    let m_eff = done.len();
    let (lo, hi) = clopper_pearson(rejections, m_eff, 0.95);
    Ok(RejectionRow {
        kind,
        k: cell.k,
        k0,
        d: cell.d,
        rho: cell.rho,
        n: cell.n,
        weight: variant.weight,
        lambda: variant.lambda,
        estimator: spec.estimator,
        m: spec.m,
        m_effective: m_eff,
        rejections,
        rejection_pct: if m_eff > 0 { 100.0 * rejections as f64 / m_eff as f64 } else { f64::NAN },
        ci_lo_pct: 100.0 * lo,
        ci_hi_pct: 100.0 * hi,
        alpha: spec.alpha,
        b: spec.b,
        skipped: String::new(),
    })
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Asymptotic standard deviations `(mu_1, rho)` of an estimator at the
/// true parameters, or the reason it does not apply.
fn asymptotic_sds(choice: EstimatorChoice, cell: &Cell) -> std::result::Result<(f64, f64), String> {
    match (choice, cell.k) {
        (EstimatorChoice::Mm, 1) => {
            let (m, r) = sigma2_mm1(cell.d, cell.rho);
            Ok((m.sqrt(), r.sqrt()))
        }
        (EstimatorChoice::Mm, 2) => {
            let (m, r) = sigma2_mm2(cell.d, cell.rho);
            Ok((m.sqrt(), r.sqrt()))
        }
        (EstimatorChoice::Mm, k) => Err(format!("no moment estimator for k = {k}")),
        (EstimatorChoice::Ml, _) => {
            let f = fisher_info(cell.d, cell.k, cell.rho).map_err(|e| e.to_string())?;
            Ok((f.sigma2_mu().sqrt(), f.sigma2_rho().sqrt()))
        }
    }
}

/// Sampling summaries of `sqrt(n) (mu_hat_1 - mu_1)` and
/// `sqrt(n) (rho_hat - rho)` for one cell and estimator.
///
/// The location is the last basis vector, so `mu_1 = 0`. Fits are restricted
/// to the sign of the true `rho`, the parameter space the asymptotic
/// variances describe; for even `k` an unrestricted fit occasionally prefers
/// the opposite branch. For even `k` the sign of `mu_hat` is aligned with
/// `mu` before taking its first coordinate.
pub fn asymptotics_cell(
    cell_index: usize,
    cell: &Cell,
    choice: EstimatorChoice,
    spec: &ExperimentSpec,
) -> CliResult<Vec<AsymptoticsRow>> {
    let row = |quantity: &str, m_eff: usize, mean: f64, sd: f64, asd: f64, skipped: String| AsymptoticsRow {
        k: cell.k,
        d: cell.d,
        rho: cell.rho,
        n: cell.n,
        estimator: choice,
        quantity: quantity.to_owned(),
        m: spec.m,
        m_effective: m_eff,
        mean,
        sd,
        asymptotic_sd: asd,
        rel_err: sd / asd - 1.0,
        skipped,
    };
    let (asd_mu, asd_rho) = match asymptotic_sds(choice, cell) {
        Ok(v) => v,
        Err(reason) => {
            return Ok(vec![
                row("mu1", 0, f64::NAN, f64::NAN, f64::NAN, reason.clone()),
                row("rho", 0, f64::NAN, f64::NAN, f64::NAN, reason),
            ])
        }
    };
    let mu = experiment_mu(cell.d)?;
    let truth = CardioidParams::new(cell.d, cell.k, mu.clone(), cell.rho)?;
    let root_n = (cell.n as f64).sqrt();
    let branch = if cell.rho < 0.0 { SignChoice::Minus } else { SignChoice::Plus };
    let draws: Vec<Option<(f64, f64)>> = (0..spec.m)
        .into_par_iter()
        .map(|r| {
            let mut rng = data_stream(spec.seed, cell_index, r);
            let data = sample(&truth, cell.n, SamplerKind::Auto, &mut rng).ok()?.sample;
            let fitted = match choice {
                EstimatorChoice::Mm => fit(&data, moment_estimator_for(cell.k), cell.k, branch, None),
                EstimatorChoice::Ml => fit_ml(&data, cell.k, None, branch),
            }
            .ok()?
            .params;
            let mut m_hat = fitted.mu().as_slice().to_vec();
            if cell.k % 2 == 0 && mu.dot(&m_hat) < 0.0 {
                m_hat.iter_mut().for_each(|x| *x = -*x);
            }
            Some((root_n * (m_hat[0] - mu.as_slice()[0]), root_n * (fitted.rho() - cell.rho)))
        })
        .collect();
    let (mus, rhos): (Vec<f64>, Vec<f64>) = draws.into_iter().flatten().unzip();
    let m_eff = mus.len();
    let (mm, ms) = mean_sd(&mus);
    let (rm, rs) = mean_sd(&rhos);
    Ok(vec![
        row("mu1", m_eff, mm, ms, asd_mu, String::new()),
        row("rho", m_eff, rm, rs, asd_rho, String::new()),
    ])
}

/// Run a whole experiment and render its CSV report.
pub fn run_experiment(spec: &ExperimentSpec) -> CliResult<Vec<u8>> {
    spec.validate()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    match spec.kind {
        ExperimentKind::SizeTable | ExperimentKind::PowerTable => {
            for (c, cell) in spec.grid.iter().enumerate() {
                for &v in &spec.statistics {
                    w.serialize(rejection_cell(spec.kind, c, cell, v, spec)?)?;
                }
            }
        }
        ExperimentKind::Asymptotics => {
            for (c, cell) in spec.grid.iter().enumerate() {
                for &e in &spec.estimators {
                    for r in asymptotics_cell(c, cell, e, spec)? {
                        w.serialize(r)?;
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?)
}
