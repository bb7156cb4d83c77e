//! Sample serialization: CSV with a header row and the binary columnar
//! `SPHC` format.
//!
//! Floats are written in their shortest round-trip decimal form, so a
//! written sample reads back bit for bit.

use std::io::{Read, Write};

use sphcard::SphereSample;

use crate::error::{usage, CliResult};

/// Magic bytes opening a binary sample.
pub const BINARY_MAGIC: &[u8; 4] = b"SPHC";
/// Version of the binary layout.
pub const BINARY_VERSION: u32 = 1;

/// Column names `x1, ..., x{d+1}`.
pub fn coordinate_header(d: usize) -> Vec<String> {
    (1..=d + 1).map(|i| format!("x{i}")).collect()
}

/// Write one CSV row per observation after the coordinate header.
pub fn write_sample_csv<W: Write>(sample: &SphereSample, out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(coordinate_header(sample.d()))?;
    for row in sample.rows() {
        w.write_record(row.iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Binary layout: magic, `u32` version, `u32` d, `u64` n, then the `d + 1`
/// coordinate columns of `n` little-endian doubles each.
pub fn write_sample_binary<W: Write>(sample: &SphereSample, mut out: W) -> CliResult<()> {
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&BINARY_VERSION.to_le_bytes())?;
    out.write_all(&(sample.d() as u32).to_le_bytes())?;
    out.write_all(&(sample.n() as u64).to_le_bytes())?;
    for j in 0..sample.dim() {
        for row in sample.rows() {
            out.write_all(&row[j].to_le_bytes())?;
        }
    }
    Ok(())
}

/// Read the binary layout written by [`write_sample_binary`].
pub fn read_sample_binary<R: Read>(mut input: R) -> CliResult<SphereSample> {
    let mut head = [0u8; 20];
    input.read_exact(&mut head)?;
    if &head[..4] != BINARY_MAGIC {
        return usage("not a binary sample file (bad magic)");
    }
    let version = u32::from_le_bytes(head[4..8].try_into().expect("four bytes"));
    if version != BINARY_VERSION {
        return usage(format!("unsupported binary sample version {version}"));
    }
    let d = u32::from_le_bytes(head[8..12].try_into().expect("four bytes")) as usize;
    let n = u64::from_le_bytes(head[12..20].try_into().expect("eight bytes")) as usize;
    if d == 0 {
        return usage("binary sample declares d = 0");
    }
    let dim = d + 1;
    let mut cols = vec![0u8; n * dim * 8];
    input.read_exact(&mut cols)?;
    let mut sample = SphereSample::empty(d);
    let mut row = vec![0.0; dim];
    for i in 0..n {
        for (j, x) in row.iter_mut().enumerate() {
            let at = (j * n + i) * 8;
            *x = f64::from_le_bytes(cols[at..at + 8].try_into().expect("eight bytes"));
        }
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !((norm - 1.0).abs() <= crate::ingest::VERBATIM_TOL) {
            return usage(format!("binary row {i} has norm {norm}"));
        }
        sample.push_unchecked(&row);
    }
    Ok(sample)
}
