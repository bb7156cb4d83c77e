//! Command-line surface. Each subcommand renders its output into a byte
//! buffer so it can be tested without a process boundary.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use regex::Regex;
use serde::Serialize;
use sphcard::cardioid::density;
use sphcard::estimation::{are, fit, moment_estimator_for, AreKind, EstimatorKind, SignChoice};
use sphcard::geometry::uniform_sphere;
use sphcard::gof::{bootstrap_test, projection_curve, GofConfig, Lambda, Weight};
use sphcard::rng::stream;
use sphcard::sampling::{sample, SamplerKind};
use sphcard::{CardioidParams, SphereSample, UnitVector};

use crate::error::{usage, CliResult};
use crate::experiment::{run_experiment, ExperimentSpec};
use crate::ingest::{load_sample, IngestFormat, IngestSpec, Ingested};
use crate::io::{coordinate_header, read_sample_binary, write_sample_binary, write_sample_csv};

/// Spherical cardioid distributions: simulation, fitting and testing.
#[derive(Debug, Parser)]
#[command(name = "sphcard", version)]
pub struct Cli {
    /// Write the output here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a sample.
    Sample(SampleArgs),
    /// Evaluate the density at input points or on a grid.
    Density(DensityArgs),
    /// Fit a cardioid to a sample.
    Fit(FitArgs),
    /// Bootstrap goodness-of-fit test.
    Gof(GofArgs),
    /// Asymptotic relative efficiencies over a grid of rho.
    Are(AreArgs),
    /// Run an experiment described by a JSON file.
    Experiment(ExperimentArgs),
    /// Projected ecdf against the fitted projected cdf.
    Project(ProjectArgs),
}

/// Model parameters given on the command line.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Sphere dimension d of S^d.
    #[arg(long)]
    pub d: usize,
    /// Order k.
    #[arg(long)]
    pub k: usize,
    /// Concentration rho in [-1, 1].
    #[arg(long, allow_hyphen_values = true)]
    pub rho: f64,
    /// Location as comma-separated coordinates; defaults to the last
    /// basis vector.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub mu: Option<Vec<f64>>,
}

impl ModelArgs {
    pub fn params(&self) -> CliResult<CardioidParams> {
        let mu = match &self.mu {
            Some(v) => UnitVector::new(v.clone())?,
            None => UnitVector::basis(self.d + 1, self.d)?,
        };
        if mu.d() != self.d {
            return usage(format!("mu has {} coordinates, expected {}", mu.d() + 1, self.d + 1));
        }
        Ok(CardioidParams::new(self.d, self.k, mu, self.rho)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Vectors,
    Angles,
    Latlon,
    Orbital,
    /// Binary columnar sample.
    Binary,
}

/// Where and how to read a sample.
#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Sample file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "vectors")]
    pub format: FormatArg,
    /// Rows farther than this from unit norm are dropped.
    #[arg(long, default_value_t = 1e-6)]
    pub normalize_tol: f64,
    /// Angles are in degrees (default for orbital elements).
    #[arg(long, conflicts_with = "radians")]
    pub degrees: bool,
    /// Angles are in radians (default except for orbital elements).
    #[arg(long)]
    pub radians: bool,
    /// Drop rows whose name column matches this regular expression.
    #[arg(long)]
    pub exclude: Option<String>,
}

impl InputArgs {
    pub fn load(&self) -> CliResult<SphereSample> {
        let format = match self.format {
            FormatArg::Binary => {
                let file = std::fs::File::open(&self.input)?;
                return read_sample_binary(std::io::BufReader::new(file));
            }
            FormatArg::Vectors => IngestFormat::VectorsCsv,
            FormatArg::Angles => IngestFormat::AnglesCsvD1,
            FormatArg::Latlon => IngestFormat::LatlonCsvD2,
            FormatArg::Orbital => IngestFormat::OrbitalElementsCsv,
        };
        let mut spec = IngestSpec::new(format);
        spec.normalize_tol = self.normalize_tol;
        if self.degrees {
            spec.degrees = true;
        }
        if self.radians {
            spec.degrees = false;
        }
        if let Some(p) = &self.exclude {
            spec.exclude = Some(Regex::new(p).map_err(|e| crate::error::CliError::Usage(e.to_string()))?);
        }
        let Ingested { sample, dropped, renormalized } = load_sample(&self.input, &spec)?;
        for d in &dropped {
            log::warn!("dropped row {}: {}", d.row, d.reason);
        }
        if renormalized > 0 {
            log::info!("renormalized {renormalized} rows");
        }
        Ok(sample)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerArg {
    Auto,
    Rejection,
    RejectionFree,
    Inverse,
}

impl From<SamplerArg> for SamplerKind {
    fn from(s: SamplerArg) -> Self {
        match s {
            SamplerArg::Auto => SamplerKind::Auto,
            SamplerArg::Rejection => SamplerKind::Rejection,
            SamplerArg::RejectionFree => SamplerKind::RejectionFreeOdd,
            SamplerArg::Inverse => SamplerKind::InverseD2K2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleFormat {
    Csv,
    Binary,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "auto")]
    pub sampler: SamplerArg,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: SampleFormat,
}

#[derive(Debug, Clone, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Points to evaluate (vectors CSV); a grid is used when absent.
    #[arg(long, conflicts_with = "grid")]
    pub input: Option<PathBuf>,
    /// Grid resolution: angles on the circle, or colatitude by longitude
    /// nodes on S^2.
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Mm1,
    Mm2,
    Gm,
    Ml,
}

impl From<EstimatorArg> for EstimatorKind {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Mm1 => EstimatorKind::Mm1,
            EstimatorArg::Mm2 => EstimatorKind::Mm2,
            EstimatorArg::Gm => EstimatorKind::Gm,
            EstimatorArg::Ml => EstimatorKind::Ml,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    #[value(name = "+", alias = "plus")]
    Plus,
    #[value(name = "-", alias = "minus")]
    Minus,
    Auto,
}

impl From<SignArg> for SignChoice {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Plus => SignChoice::Plus,
            SignArg::Minus => SignChoice::Minus,
            SignArg::Auto => SignChoice::Auto,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum)]
    pub estimator: EstimatorArg,
    #[arg(long, value_enum, default_value = "auto", allow_hyphen_values = true)]
    pub sign: SignArg,
    /// Known location for the Gegenbauer-moment estimator.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub mu: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightArg {
    Cvm,
    Ad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LambdaArg {
    Unif,
    /// The empirical distribution of the sample.
    Pn,
    /// The fitted cardioid.
    Cardioid,
}

/// Default test settings: the simulation-study profile or the data
/// application profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    /// K = 50, B = 100, moment estimator.
    Experiment,
    /// K = 10^4, B = 10^4, maximum likelihood.
    Application,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GofEstimatorArg {
    /// Moment estimator of order k (maximum likelihood beyond k = 2).
    Mm,
    Ml,
}

#[derive(Debug, Clone, Args)]
pub struct GofArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "cvm")]
    pub weight: WeightArg,
    #[arg(long, value_enum, default_value = "unif")]
    pub lambda: LambdaArg,
    #[arg(long, value_enum, default_value = "experiment")]
    pub profile: ProfileArg,
    /// Monte Carlo directions.
    #[arg(long = "K")]
    pub k_dirs: Option<usize>,
    /// Bootstrap replicates.
    #[arg(long = "B")]
    pub b: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum)]
    pub estimator: Option<GofEstimatorArg>,
    #[arg(long, value_enum, default_value = "auto", allow_hyphen_values = true)]
    pub sign: SignArg,
    /// Fixed null parameters as JSON, e.g. '{"d":2,"k":1,"mu":[0,0,1],"rho":0}'.
    #[arg(long)]
    pub simple_null: Option<String>,
    /// Level of the percentile confidence regions.
    #[arg(long)]
    pub ci_alpha: Option<f64>,
    /// Reuse the Monte Carlo directions across replicates.
    #[arg(long)]
    pub shared_directions: bool,
    /// Use Monte Carlo directions even where a closed form exists.
    #[arg(long)]
    pub no_closed_form: bool,
}

#[derive(Debug, Clone, Args)]
pub struct AreArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub k: usize,
    /// Explicit grid of rho values; otherwise `--steps` points from
    /// `--rho-min` to `--rho-max`.
    #[arg(long, value_delimiter = ',')]
    pub rhos: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.05)]
    pub rho_min: f64,
    #[arg(long, default_value_t = 0.95)]
    pub rho_max: f64,
    #[arg(long, default_value_t = 19)]
    pub steps: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    /// JSON experiment description.
    #[arg(long)]
    pub spec: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ProjectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub k: usize,
    /// Fitted parameters as JSON; fitted with `--estimator` when absent.
    #[arg(long)]
    pub params: Option<String>,
    #[arg(long, value_enum, default_value = "ml")]
    pub estimator: GofEstimatorArg,
    #[arg(long, value_enum, default_value = "auto", allow_hyphen_values = true)]
    pub sign: SignArg,
    /// Number of uniformly drawn projection directions.
    #[arg(long, default_value_t = 4)]
    pub directions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Grid points in [-1, 1].
    #[arg(long, default_value_t = 201)]
    pub points: usize,
}

fn json<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> CliResult<Vec<u8>> {
    w.into_inner().map_err(|e| std::io::Error::other(e.to_string()).into())
}

/// Run a parsed command line and return the bytes to write.
pub fn run(cli: &Cli) -> CliResult<Vec<u8>> {
    match &cli.command {
        Command::Sample(a) => cmd_sample(a),
        Command::Density(a) => cmd_density(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Gof(a) => cmd_gof(a),
        Command::Are(a) => cmd_are(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Project(a) => cmd_project(a),
    }
}

pub fn cmd_sample(a: &SampleArgs) -> CliResult<Vec<u8>> {
    let p = a.model.params()?;
    let out = sample(&p, a.n, a.sampler.into(), &mut stream(a.seed, &[]))?;
    let mut buf = Vec::new();
    match a.format {
        SampleFormat::Csv => write_sample_csv(&out.sample, &mut buf)?,
        SampleFormat::Binary => write_sample_binary(&out.sample, &mut buf)?,
    }
    Ok(buf)
}

fn density_grid(d: usize, m: usize) -> CliResult<SphereSample> {
    use std::f64::consts::PI;
    if m == 0 {
        return usage("grid resolution must be positive");
    }
    let mut s = SphereSample::empty(d);
    match d {
        1 => {
            for i in 0..m {
                let t = 2.0 * PI * i as f64 / m as f64;
                s.push_unchecked(&[t.cos(), t.sin()]);
            }
        }
        2 => {
            for i in 0..m {
                let th = PI * (i as f64 + 0.5) / m as f64;
                for j in 0..2 * m {
                    let ph = PI * j as f64 / m as f64;
                    s.push_unchecked(&[th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]);
                }
            }
        }
        _ => return usage("grids exist for d = 1 and d = 2; pass --input for larger d"),
    }
    Ok(s)
}

pub fn cmd_density(a: &DensityArgs) -> CliResult<Vec<u8>> {
    let p = a.model.params()?;
    let points = match &a.input {
        Some(path) => {
            load_sample(path, &IngestSpec::new(IngestFormat::VectorsCsv))?.sample
        }
        None => density_grid(p.d(), a.grid)?,
    };
    if points.d() != p.d() {
        return usage("points and model live on different spheres");
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = coordinate_header(p.d());
    header.push("density".into());
    w.write_record(&header)?;
    for x in points.rows() {
        let f = density(&p, x)?;
        w.write_record(x.iter().chain(std::iter::once(&f)).map(|v| v.to_string()))?;
    }
    finish_csv(w)
}

pub fn cmd_fit(a: &FitArgs) -> CliResult<Vec<u8>> {
    let kind: EstimatorKind = a.estimator.into();
    match (kind, a.k) {
        (EstimatorKind::Mm1, k) if k != 1 => return usage("mm1 applies to k = 1 only"),
        (EstimatorKind::Mm2, k) if k != 2 => return usage("mm2 applies to k = 2 only"),
        (EstimatorKind::Gm, _) if a.mu.is_none() => return usage("gm needs the known location --mu"),
        _ => {}
    }
    let sample = a.input.load()?;
    let mu = a.mu.clone().map(UnitVector::new).transpose()?;
    let res = fit(&sample, kind, a.k, a.sign.into(), mu.as_ref())?;
    json(&res)
}

/// Test settings from the command line after applying the profile.
pub fn gof_config(a: &GofArgs) -> CliResult<GofConfig> {
    let (k_dirs, b, est) = match a.profile {
        ProfileArg::Experiment => (50, 100, GofEstimatorArg::Mm),
        ProfileArg::Application => (10_000, 10_000, GofEstimatorArg::Ml),
    };
    let estimator = match a.estimator.unwrap_or(est) {
        GofEstimatorArg::Mm => moment_estimator_for(a.k),
        GofEstimatorArg::Ml => EstimatorKind::Ml,
    };
    let simple_null = match &a.simple_null {
        Some(s) => Some(serde_json::from_str::<CardioidParams>(s)?),
        None => None,
    };
    Ok(GofConfig {
        weight: match a.weight {
            WeightArg::Cvm => Weight::Cvm,
            WeightArg::Ad => Weight::Ad,
        },
        lambda: match a.lambda {
            LambdaArg::Unif => Lambda::Unif,
            LambdaArg::Pn => Lambda::EmpiricalPn,
            LambdaArg::Cardioid => Lambda::CardioidNull,
        },
        k_dirs: a.k_dirs.unwrap_or(k_dirs),
        b: a.b.unwrap_or(b),
        seed: a.seed,
        estimator,
        sign: a.sign.into(),
        simple_null,
        shared_directions: a.shared_directions,
        use_closed_form: !a.no_closed_form,
        ci_alpha: a.ci_alpha,
    })
}

pub fn cmd_gof(a: &GofArgs) -> CliResult<Vec<u8>> {
    let cfg = gof_config(a)?;
    let sample = a.input.load()?;
    json(&bootstrap_test(&sample, a.k, &cfg)?)
}

#[derive(Serialize)]
struct AreRow {
    rho: f64,
    #[serde(rename = "ARE_MM_mu")]
    mm_mu: f64,
    #[serde(rename = "ARE_MM_rho")]
    mm_rho: f64,
    #[serde(rename = "ARE_GM_rho")]
    gm_rho: f64,
}

pub fn cmd_are(a: &AreArgs) -> CliResult<Vec<u8>> {
    let rhos = match &a.rhos {
        Some(r) => r.clone(),
        None if a.steps == 1 => vec![a.rho_min],
        None if a.steps >= 2 => (0..a.steps)
            .map(|i| (a.rho_min * (a.steps - 1 - i) as f64 + a.rho_max * i as f64) / (a.steps - 1) as f64)
            .collect(),
        None => return usage("steps must be positive"),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    for rho in rhos {
        // Moment estimators of mu and rho exist for k = 1 and k = 2 only.
        let mm = |which| if a.k <= 2 { are(a.d, a.k, rho, which) } else { Ok(f64::NAN) };
        w.serialize(AreRow {
            rho,
            mm_mu: mm(AreKind::MmMu)?,
            mm_rho: mm(AreKind::MmRho)?,
            gm_rho: are(a.d, a.k, rho, AreKind::GmRho)?,
        })?;
    }
    finish_csv(w)
}

pub fn cmd_experiment(a: &ExperimentArgs) -> CliResult<Vec<u8>> {
    let text = std::fs::read_to_string(&a.spec)?;
    let spec: ExperimentSpec = serde_json::from_str(&text)?;
    run_experiment(&spec)
}

pub fn cmd_project(a: &ProjectArgs) -> CliResult<Vec<u8>> {
    let sample = a.input.load()?;
    let fitted = match &a.params {
        Some(s) => serde_json::from_str::<CardioidParams>(s)?,
        None => {
            let kind = match a.estimator {
                GofEstimatorArg::Mm => moment_estimator_for(a.k),
                GofEstimatorArg::Ml => EstimatorKind::Ml,
            };
            fit(&sample, kind, a.k, a.sign.into(), None)?.params
        }
    };
    let mut rng = stream(a.seed, &[]);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["direction".to_string()];
    header.extend((1..=sample.dim()).map(|i| format!("gamma{i}")));
    header.extend(["x", "ecdf", "cdf"].map(String::from));
    w.write_record(&header)?;
    for j in 0..a.directions {
        let gamma = uniform_sphere(sample.d(), &mut rng)?;
        let curve = projection_curve(&sample, &fitted, &gamma, a.points)?;
        for i in 0..curve.x.len() {
            let mut rec = vec![j.to_string()];
            rec.extend(gamma.as_slice().iter().map(|g| g.to_string()));
            rec.extend([curve.x[i], curve.ecdf[i], curve.cdf[i]].map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
    }
    finish_csv(w)
}
