//! Reading samples from CSV files of vectors, angles or orbital elements.

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sphcard::{SphereSample, UnitVector};

use crate::error::{usage, CliError, CliResult};

/// Rows whose norm is within this distance of one are kept bit for bit.
pub const VERBATIM_TOL: f64 = 1e-14;

/// Input layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IngestFormat {
    /// One unit vector per row, header optional.
    VectorsCsv,
    /// One angle `theta` per row on the circle, mapped to `(cos, sin)`.
    AnglesCsvD1,
    /// Columns `colatitude` and `longitude` on `S^2`.
    LatlonCsvD2,
    /// Columns `i` (inclination) and `Omega` (longitude of the ascending
    /// node), mapped to orbit normals on `S^2`.
    OrbitalElementsCsv,
}

/// How to read a sample file.
#[derive(Debug, Clone)]
pub struct IngestSpec {
    pub format: IngestFormat,
    /// Rows whose norm differs from one by more than this are dropped.
    pub normalize_tol: f64,
    /// Angles are given in degrees.
    pub degrees: bool,
    /// Drop rows whose name column matches this pattern.
    pub exclude: Option<Regex>,
}

impl IngestSpec {
    /// Defaults for `format`: tolerance `1e-6`, degrees for orbital
    /// elements and radians otherwise.
    pub fn new(format: IngestFormat) -> Self {
        Self {
            format,
            normalize_tol: 1e-6,
            degrees: format == IngestFormat::OrbitalElementsCsv,
            exclude: None,
        }
    }
}

/// A row left out of the sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedRow {
    /// Zero-based data row index (the header is not counted).
    pub row: usize,
    pub reason: String,
}

/// Parsed sample with the ingestion report.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub sample: SphereSample,
    pub dropped: Vec<DroppedRow>,
    /// Rows rescaled onto the sphere.
    pub renormalized: usize,
}

/// Orbit normal `(sin i sin Omega, -sin i cos Omega, cos i)` for angles in
/// radians with `i` in `[0, pi]` and `Omega` in `[0, 2 pi)`.
pub fn orbital_to_normal(i: f64, omega: f64) -> sphcard::Result<UnitVector> {
    if !(0.0..=PI).contains(&i) {
        return Err(sphcard::Error::Domain(format!("inclination {i} outside [0, pi]")));
    }
    if !(0.0..2.0 * PI).contains(&omega) {
        return Err(sphcard::Error::Domain(format!("node longitude {omega} outside [0, 2 pi)")));
    }
    let (si, ci) = i.sin_cos();
    let (so, co) = omega.sin_cos();
    UnitVector::new(vec![si * so, -si * co, ci])
}

/// Read a sample from `path`.
pub fn load_sample(path: &Path, spec: &IngestSpec) -> CliResult<Ingested> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
    load_from_reader(file, spec)
}

struct Table {
    header: Option<Vec<String>>,
    rows: Vec<Vec<String>>,
}

fn read_table<R: Read>(input: R) -> CliResult<Table> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(input);
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        rows.push(rec.iter().map(str::to_owned).collect::<Vec<_>>());
    }
    let header = match rows.first() {
        Some(first) if first.iter().any(|f| f.parse::<f64>().is_err()) => Some(rows.remove(0)),
        _ => None,
    };
    Ok(Table { header, rows })
}

fn column(header: &[String], names: &[&str]) -> Option<usize> {
    names.iter().find_map(|n| header.iter().position(|h| h == n))
}

fn parse(row: usize, field: &str) -> CliResult<f64> {
    field
        .parse::<f64>()
        .map_err(|_| CliError::Row { row, msg: format!("cannot parse {field:?} as a number") })
}

/// Parse a sample from CSV text.
pub fn load_from_reader<R: Read>(input: R, spec: &IngestSpec) -> CliResult<Ingested> {
    if !(spec.normalize_tol >= 0.0) {
        return usage("normalize tolerance must be nonnegative");
    }
    let table = read_table(input)?;
    let to_rad = |x: f64| if spec.degrees { x.to_radians() } else { x };
    let name_col = table
        .header
        .as_deref()
        .and_then(|h| column(h, &["name", "full_name", "designation"]));
    if spec.exclude.is_some() && name_col.is_none() {
        return usage("name exclusion needs a name, full_name or designation column");
    }
    let (d, angle_cols) = match spec.format {
        IngestFormat::VectorsCsv => {
            let width = table.header.as_ref().map(Vec::len).or_else(|| table.rows.first().map(Vec::len));
            match width {
                Some(w) if w >= 2 => (w - 1, Vec::new()),
                Some(_) => return usage("vector rows need at least two columns"),
                None => return usage("input holds no rows"),
            }
        }
        IngestFormat::AnglesCsvD1 => {
            let c = match &table.header {
                Some(h) => column(h, &["theta"]).unwrap_or(0),
                None => 0,
            };
            (1, vec![c])
        }
        IngestFormat::LatlonCsvD2 | IngestFormat::OrbitalElementsCsv => {
            let Some(h) = &table.header else {
                return usage("this format needs a header row naming its columns");
            };
            let (a, b) = if spec.format == IngestFormat::LatlonCsvD2 {
                (column(h, &["colatitude"]), column(h, &["longitude"]))
            } else {
                (column(h, &["i", "inc"]), column(h, &["Omega", "om", "node"]))
            };
            match (a, b) {
                (Some(a), Some(b)) => (2, vec![a, b]),
                _ if spec.format == IngestFormat::LatlonCsvD2 => {
                    return usage("latlon input needs colatitude and longitude columns")
                }
                _ => return usage("orbital input needs i and Omega columns"),
            }
        }
    };
    let dim = d + 1;
    let mut sample = SphereSample::empty(d);
    let mut dropped = Vec::new();
    let mut renormalized = 0;
    for (r, fields) in table.rows.iter().enumerate() {
        if let (Some(re), Some(c)) = (&spec.exclude, name_col) {
            if re.is_match(&fields[c]) {
                dropped.push(DroppedRow { row: r, reason: format!("name {:?} excluded", fields[c]) });
                continue;
            }
        }
        let mut x = match spec.format {
            IngestFormat::VectorsCsv => {
                if fields.len() != dim {
                    return Err(CliError::Row { row: r, msg: format!("expected {dim} columns") });
                }
                fields.iter().map(|f| parse(r, f)).collect::<CliResult<Vec<f64>>>()?
            }
            IngestFormat::AnglesCsvD1 => {
                let t = to_rad(parse(r, &fields[angle_cols[0]])?);
                vec![t.cos(), t.sin()]
            }
            IngestFormat::LatlonCsvD2 => {
                let th = to_rad(parse(r, &fields[angle_cols[0]])?);
                let ph = to_rad(parse(r, &fields[angle_cols[1]])?);
                vec![th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]
            }
            IngestFormat::OrbitalElementsCsv => {
                let i = to_rad(parse(r, &fields[angle_cols[0]])?);
                let om = to_rad(parse(r, &fields[angle_cols[1]])?);
                orbital_to_normal(i, om)
                    .map_err(|e| CliError::Row { row: r, msg: e.to_string() })?
                    .into_vec()
            }
        };
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dev = (norm - 1.0).abs();
        if !(dev <= spec.normalize_tol) {
            dropped.push(DroppedRow { row: r, reason: format!("norm {norm} off the sphere") });
            continue;
        }
        if dev > VERBATIM_TOL {
            x.iter_mut().for_each(|v| *v /= norm);
            renormalized += 1;
        }
        sample.push_unchecked(&x);
    }
    if sample.is_empty() {
        return usage("no usable rows in the input");
    }
    Ok(Ingested { sample, dropped, renormalized })
}
