//! Sphere geometry and small multilinear algebra.
//!
//! Vectors in `R^{d+1}` are plain `f64` slices. Kronecker products follow the
//! convention `(a ⊗ b)[i * D + j] = a[i] * b[j]` with `D = b.len()`, and a
//! square matrix stored row-major is `M[r * D + c]`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Inputs within this distance of unit norm are renormalized on construction.
pub const RENORMALIZE_TOL: f64 = 1e-6;

/// A point of `S^d` stored as its `d + 1` ambient coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitVector {
    coords: Vec<f64>,
}

impl UnitVector {
    /// Accept `coords` whose norm is within [`RENORMALIZE_TOL`] of one and
    /// rescale it to unit norm.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(coords, RENORMALIZE_TOL)
    }

    /// As [`UnitVector::new`] with a caller-chosen tolerance.
    pub fn with_tolerance(mut coords: Vec<f64>, tol: f64) -> Result<Self> {
        if coords.len() < 2 {
            return domain("a unit vector needs at least two coordinates");
        }
        let norm = norm(&coords);
        if !norm.is_finite() || (norm - 1.0).abs() > tol {
            return domain(format!("vector norm {norm} is not within {tol} of 1"));
        }
        coords.iter_mut().for_each(|c| *c /= norm);
        Ok(Self { coords })
    }

    /// Normalize any nonzero finite vector.
    pub fn normalize(mut coords: Vec<f64>) -> Result<Self> {
        let n = norm(&coords);
        if coords.len() < 2 || !(n > 0.0) || !n.is_finite() {
            return domain("cannot normalize a zero, non-finite or one-dimensional vector");
        }
        coords.iter_mut().for_each(|c| *c /= n);
        Ok(Self { coords })
    }

    /// Canonical basis vector `e_i` (zero-based) of `R^dim`.
    pub fn basis(dim: usize, i: usize) -> Result<Self> {
        if dim < 2 || i >= dim {
            return domain(format!("no basis vector e_{i} in R^{dim}"));
        }
        let mut coords = vec![0.0; dim];
        coords[i] = 1.0;
        Ok(Self { coords })
    }

    /// Point `(cos theta, sin theta)` of the circle.
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { coords: vec![c, s] }
    }

    /// Sphere dimension `d`; the vector lives in `R^{d+1}`.
    pub fn d(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.coords, other)
    }

    /// Antipodal point.
    pub fn neg(&self) -> Self {
        Self { coords: self.coords.iter().map(|c| -c).collect() }
    }
}

impl TryFrom<Vec<f64>> for UnitVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<UnitVector> for Vec<f64> {
    fn from(u: UnitVector) -> Self {
        u.coords
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// A sample of `n` points on `S^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereSample {
    d: usize,
    data: Vec<f64>,
    renormalized: usize,
}

impl SphereSample {
    /// Empty sample on `S^d`.
    pub fn empty(d: usize) -> Self {
        Self { d, data: Vec::new(), renormalized: 0 }
    }

    /// Wrap row-major coordinates that are already unit vectors.
    ///
    /// Rows off the sphere by more than [`RENORMALIZE_TOL`] are rejected;
    /// closer rows are rescaled.
    pub fn from_flat(d: usize, data: Vec<f64>) -> Result<Self> {
        Self::from_flat_with_tolerance(d, data, RENORMALIZE_TOL)
    }

    /// As [`SphereSample::from_flat`] with a caller-chosen tolerance.
    pub fn from_flat_with_tolerance(d: usize, mut data: Vec<f64>, tol: f64) -> Result<Self> {
        if d == 0 {
            return domain("sphere dimension d must be at least 1");
        }
        let dim = d + 1;
        if data.len() % dim != 0 {
            return domain(format!("{} coordinates do not split into rows of {dim}", data.len()));
        }
        let mut renormalized = 0;
        for (i, row) in data.chunks_exact_mut(dim).enumerate() {
            let n = norm(row);
            if !n.is_finite() || (n - 1.0).abs() > tol {
                return domain(format!("row {i} has norm {n}, not within {tol} of 1"));
            }
            if n != 1.0 {
                row.iter_mut().for_each(|c| *c /= n);
                renormalized += 1;
            }
        }
        Ok(Self { d, data, renormalized })
    }

    pub fn from_rows(d: usize, rows: &[Vec<f64>]) -> Result<Self> {
        if let Some(bad) = rows.iter().position(|r| r.len() != d + 1) {
            return domain(format!("row {bad} does not have {} coordinates", d + 1));
        }
        Self::from_flat(d, rows.concat())
    }

    /// Append a point known to have unit norm.
    pub fn push_unchecked(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.d + 1);
        self.data.extend_from_slice(x);
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.d + 1
    }

    pub fn n(&self) -> usize {
        self.data.len() / (self.d + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Number of rows rescaled to unit norm on construction.
    pub fn renormalized(&self) -> usize {
        self.renormalized
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let dim = self.d + 1;
        &self.data[i * dim..(i + 1) * dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.d + 1)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Apply the row-major `(d+1) x (d+1)` matrix `o` to every point.
    pub fn transformed(&self, o: &[f64]) -> Self {
        let dim = self.d + 1;
        let mut data = Vec::with_capacity(self.data.len());
        for row in self.rows() {
            data.extend((0..dim).map(|r| dot(&o[r * dim..(r + 1) * dim], row)));
        }
        Self { d: self.d, data, renormalized: 0 }
    }

    /// Sample mean vector.
    pub fn mean(&self) -> Vec<f64> {
        let dim = self.d + 1;
        let mut m = vec![0.0; dim];
        for row in self.rows() {
            m.iter_mut().zip(row).for_each(|(a, b)| *a += b);
        }
        let n = self.n().max(1) as f64;
        m.iter_mut().for_each(|a| *a /= n);
        m
    }

    /// Sample scatter matrix `(1/n) sum x x'`, row-major.
    pub fn scatter(&self) -> Vec<f64> {
        let dim = self.d + 1;
        let mut s = vec![0.0; dim * dim];
        for row in self.rows() {
            for r in 0..dim {
                for c in r..dim {
                    s[r * dim + c] += row[r] * row[c];
                }
            }
        }
        let n = self.n().max(1) as f64;
        for r in 0..dim {
            for c in r..dim {
                let v = s[r * dim + c] / n;
                s[r * dim + c] = v;
                s[c * dim + r] = v;
            }
        }
        s
    }
}

/// Fill `out` with a uniform point of the sphere `S^{out.len()-1}`.
pub fn fill_uniform<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        for c in out.iter_mut() {
            *c = rng.sample(StandardNormal);
        }
        let n = norm(out);
        if n > 0.0 {
            out.iter_mut().for_each(|c| *c /= n);
            return;
        }
    }
}

/// Uniform point of `S^d` from normalized standard normal coordinates.
pub fn uniform_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<UnitVector> {
    if d == 0 {
        return domain("sphere dimension d must be at least 1");
    }
    let mut coords = vec![0.0; d + 1];
    fill_uniform(rng, &mut coords);
    Ok(UnitVector { coords })
}

/// Sample of `n` uniform points on `S^d`.
pub fn uniform_sample<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Result<SphereSample> {
    if d == 0 {
        return domain("sphere dimension d must be at least 1");
    }
    let mut data = vec![0.0; n * (d + 1)];
    for row in data.chunks_exact_mut(d + 1) {
        fill_uniform(rng, row);
    }
    Ok(SphereSample { d, data, renormalized: 0 })
}

/// Semi-orthogonal `(d+1) x d` matrix `B_mu` with `mu' B_mu = 0`.
///
/// Built from the Householder reflection that maps `e_{d+1}` to `mu`, with
/// the last column dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentBasis {
    anchor: UnitVector,
    /// Column `j` occupies `cols[j * (d+1)..(j+1) * (d+1)]`.
    cols: Vec<f64>,
}

impl TangentBasis {
    pub fn anchor(&self) -> &UnitVector {
        &self.anchor
    }

    pub fn d(&self) -> usize {
        self.anchor.d()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let dim = self.d() + 1;
        &self.cols[j * dim..(j + 1) * dim]
    }

    /// Matrix entry `(r, c)`.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.cols[c * (self.d() + 1) + r]
    }

    /// `B_mu xi` for `xi` in `R^d`.
    pub fn apply(&self, xi: &[f64]) -> Vec<f64> {
        let dim = self.d() + 1;
        let mut out = vec![0.0; dim];
        for (j, &x) in xi.iter().enumerate() {
            out.iter_mut().zip(self.column(j)).for_each(|(o, b)| *o += x * b);
        }
        out
    }

    /// `B_mu' x` for `x` in `R^{d+1}`.
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        (0..self.d()).map(|j| dot(self.column(j), x)).collect()
    }

    /// Write `t mu + sqrt(1 - t^2) B_mu xi` into `out`.
    pub fn compose_into(&self, t: f64, xi: &[f64], out: &mut [f64]) {
        let t = t.clamp(-1.0, 1.0);
        let s = (1.0 - t * t).max(0.0).sqrt();
        out.iter_mut().zip(self.anchor.as_slice()).for_each(|(o, m)| *o = t * m);
        for (j, &x) in xi.iter().enumerate() {
            let w = s * x;
            out.iter_mut().zip(self.column(j)).for_each(|(o, b)| *o += w * b);
        }
    }
}

/// Deterministic tangent basis at `mu`.
pub fn tangent_basis(mu: &UnitVector) -> TangentBasis {
    let m = mu.as_slice();
    let d = mu.d();
    let dim = d + 1;
    let last = m[d];
    let s: f64 = m[..d].iter().map(|x| x * x).sum();
    let mut cols = vec![0.0; dim * d];
    for j in 0..d {
        cols[j * dim + j] = 1.0;
    }
    if !(s == 0.0 && last > 0.0) {
        // v = mu - e_{d+1}; 1 - mu_{d+1} is formed without cancellation.
        let one_minus = if last >= 0.0 { s / (1.0 + last) } else { 1.0 - last };
        let mut v = m.to_vec();
        v[d] = -one_minus;
        let vv = s + one_minus * one_minus;
        for j in 0..d {
            let f = 2.0 * v[j] / vv;
            for r in 0..dim {
                cols[j * dim + r] -= f * v[r];
            }
        }
    }
    TangentBasis { anchor: mu.clone(), cols }
}

/// `t mu + sqrt(1 - t^2) B_mu xi` for `xi` on `S^{d-1}`.
pub fn tangent_normal_compose(mu: &UnitVector, t: f64, xi: &[f64]) -> Result<UnitVector> {
    if xi.len() != mu.d() {
        return domain(format!("xi must have {} coordinates", mu.d()));
    }
    if !(t.abs() <= 1.0 + crate::specfun::CLAMP_TOL) {
        return domain(format!("t = {t} outside [-1, 1]"));
    }
    let basis = tangent_basis(mu);
    let mut out = vec![0.0; mu.d() + 1];
    basis.compose_into(t, xi, &mut out);
    UnitVector::normalize(out)
}

/// Eigen-decomposition of a small symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Unit eigenvectors matching `values`.
    pub vectors: Vec<Vec<f64>>,
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigensolver for a row-major symmetric `n x n` matrix.
pub fn sym_eigen(s: &[f64], n: usize) -> Result<SymEigen> {
    if n == 0 || s.len() != n * n {
        return domain(format!("expected a {n} x {n} matrix"));
    }
    let mut a = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            let (x, y) = (s[r * n + c], s[c * n + r]);
            if !x.is_finite() || (x - y).abs() > 1e-8 {
                return domain("matrix is not symmetric and finite");
            }
            a[r * n + c] = 0.5 * (x + y);
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let fro = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off = (0..n)
            .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| a[r * n + c] * a[r * n + c])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-12 * fro.max(f64::MIN_POSITIVE) || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - sn * akq;
                    a[k * n + q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - sn * aqk;
                    a[q * n + k] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - sn * vkq;
                    v[k * n + q] = sn * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::Numeric("Jacobi eigensolver did not converge in 100 sweeps".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    Ok(SymEigen {
        values: order.iter().map(|&i| a[i * n + i]).collect(),
        vectors: order.iter().map(|&i| (0..n).map(|r| v[r * n + i]).collect()).collect(),
    })
}

/// Haar-distributed orthogonal matrix (row-major) by Gram-Schmidt on
/// Gaussian columns with sign correction.
pub fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut c: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let start = norm(&c);
        // Two projection passes keep the columns orthogonal to rounding.
        for _ in 0..2 {
            for prev in &cols {
                let p = dot(prev, &c);
                c.iter_mut().zip(prev).for_each(|(x, y)| *x -= p * y);
            }
        }
        let n = norm(&c);
        if n > 1e-6 * start {
            c.iter_mut().for_each(|x| *x /= n);
            cols.push(c);
        }
    }
    let mut o = vec![0.0; dim * dim];
    for (j, c) in cols.iter().enumerate() {
        for (r, x) in c.iter().enumerate() {
            o[r * dim + j] = *x;
        }
    }
    o
}

/// Row-major matrix-vector product for a square matrix.
pub fn mat_vec(m: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n).map(|r| dot(&m[r * n..(r + 1) * n], x)).collect()
}

/// Limits on the tensor order and ambient dimension accepted by the
/// symmetrizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymBudget {
    pub max_order: usize,
    pub max_dim: usize,
}

impl Default for SymBudget {
    fn default() -> Self {
        Self { max_order: 6, max_dim: 5 }
    }
}

impl SymBudget {
    pub fn check(&self, order: usize, dim: usize) -> Result<()> {
        if order > self.max_order || dim > self.max_dim {
            return Err(Error::Resource(format!(
                "tensor of order {order} in dimension {dim} exceeds the budget (order <= {}, dimension <= {})",
                self.max_order, self.max_dim
            )));
        }
        Ok(())
    }
}

/// Vectorized tensor of order `order` over `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorVec {
    pub order: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl SymTensorVec {
    pub fn zeros(order: usize, dim: usize) -> Self {
        Self { order, dim, data: vec![0.0; dim.pow(order as u32)] }
    }

    pub fn new(order: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim.pow(order as u32) {
            return domain(format!("length {} is not {dim}^{order}", data.len()));
        }
        Ok(Self { order, dim, data })
    }

    /// `v^{⊗r}` with `v^{⊗0} = 1`.
    pub fn power(v: &[f64], r: usize) -> Self {
        let mut out = Self { order: 0, dim: v.len(), data: vec![1.0] };
        for _ in 0..r {
            out = out.kron_vec(v);
        }
        out
    }

    /// `(vec I_dim)^{⊗j}`, an order `2j` tensor.
    pub fn identity_power(dim: usize, j: usize) -> Self {
        let mut vec_i = vec![0.0; dim * dim];
        for i in 0..dim {
            vec_i[i * dim + i] = 1.0;
        }
        let mut out = Self { order: 0, dim, data: vec![1.0] };
        for _ in 0..j {
            out = out.kron(&Self { order: 2, dim, data: vec_i.clone() });
        }
        out
    }

    pub fn kron(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut data = Vec::with_capacity(self.data.len() * other.data.len());
        for a in &self.data {
            data.extend(other.data.iter().map(|b| a * b));
        }
        Self { order: self.order + other.order, dim: self.dim, data }
    }

    fn kron_vec(&self, v: &[f64]) -> Self {
        self.kron(&Self { order: 1, dim: v.len(), data: v.to_vec() })
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.data.iter_mut().for_each(|x| *x *= s);
        self
    }

    pub fn add_assign(&mut self, other: &Self, scale: f64) {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += scale * b);
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Entry at a multi-index (first index most significant).
    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[index.iter().fold(0, |acc, &i| acc * self.dim + i)]
    }
}

/// Apply the symmetrizer `S_{dim,order}` without forming its matrix.
///
/// Each entry is replaced by the mean over all rearrangements of its
/// multi-index, which equals the average over the `order!` permutations.
pub fn symmetrizer_apply(v: &SymTensorVec, budget: SymBudget) -> Result<SymTensorVec> {
    budget.check(v.order, v.dim)?;
    if v.data.len() != v.dim.pow(v.order as u32) {
        return domain("tensor data length does not match its order and dimension");
    }
    if v.order <= 1 {
        return Ok(v.clone());
    }
    let len = v.data.len();
    let mut key = vec![0usize; len];
    let mut digits = vec![0usize; v.order];
    for (flat, slot) in key.iter_mut().enumerate() {
        let mut rest = flat;
        for dgt in digits.iter_mut().rev() {
            *dgt = rest % v.dim;
            rest /= v.dim;
        }
        digits.sort_unstable();
        *slot = digits.iter().fold(0, |acc, &i| acc * v.dim + i);
    }
    let mut sums = vec![0.0; len];
    let mut counts = vec![0u32; len];
    for (flat, &k) in key.iter().enumerate() {
        sums[k] += v.data[flat];
        counts[k] += 1;
    }
    let data = key.iter().map(|&k| sums[k] / counts[k] as f64).collect();
    Ok(SymTensorVec { order: v.order, dim: v.dim, data })
}

/// `E[U^{⊗m}]` for `U ~ Unif(S^d)`; zero for odd `m`.
pub fn uniform_moment(d: usize, m: usize, budget: SymBudget) -> Result<SymTensorVec> {
    if d == 0 || m == 0 {
        return domain("uniform moments need d >= 1 and m >= 1");
    }
    let dim = d + 1;
    budget.check(m, dim)?;
    if m % 2 == 1 {
        return Ok(SymTensorVec::zeros(m, dim));
    }
    let half = m / 2;
    let double_fact: f64 = (1..m).step_by(2).map(|x| x as f64).product();
    let denom: f64 = (0..half).map(|r| (dim + 2 * r) as f64).product();
    let sym = symmetrizer_apply(&SymTensorVec::identity_power(dim, half), budget)?;
    Ok(sym.scaled(double_fact / denom))
}
