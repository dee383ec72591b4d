//! Dense symmetric matrices: cyclic Jacobi eigendecomposition, Frobenius
//! geometry, projection onto the positive definite cone and Cholesky.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Relative off-diagonal mass at which Jacobi sweeps stop.
const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Symmetric `d x d` matrix stored as its packed lower triangle.
///
/// Entry `(i, j)` with `i >= j` lives at `i * (i + 1) / 2 + j`, so symmetry
/// holds by construction.
#[derive(Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SymMatrix {
    dim: usize,
    packed: Vec<f64>,
}

#[inline]
pub fn packed_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

/// Metric weights that turn the Euclidean norm on packed storage into the
/// Frobenius norm of the full matrix: off-diagonal entries count twice.
pub fn frobenius_metric(dim: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(packed_len(dim));
    for i in 0..dim {
        for j in 0..=i {
            w.push(if i == j { 1.0 } else { 2.0 });
        }
    }
    w
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "SymMatrix dimension must be at least 1");
        SymMatrix { dim, packed: vec![0.0; packed_len(dim)] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, scale);
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn from_packed(dim: usize, packed: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("matrix dimension must be at least 1"));
        }
        if packed.len() != packed_len(dim) {
            return Err(Error::DimensionMismatch { expected: packed_len(dim), found: packed.len() });
        }
        Ok(SymMatrix { dim, packed })
    }

    /// Builds from a row-major full matrix, rejecting asymmetry above `1e-12`
    /// relative to the largest entry.
    pub fn from_full(dim: usize, full: &[f64]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("matrix dimension must be at least 1"));
        }
        if full.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: full.len() });
        }
        let scale = full.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                let a = full[i * dim + j];
                let b = full[j * dim + i];
                if (a - b).abs() > 1e-12 * scale {
                    return Err(Error::invalid("matrix is not symmetric"));
                }
                m.set(i, j, 0.5 * (a + b));
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let mut full = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: r.len() });
            }
            full.extend_from_slice(r);
        }
        Self::from_full(dim, &full)
    }

    /// `x x^T`.
    pub fn outer(x: &[f64]) -> Self {
        let mut m = Self::zeros(x.len());
        outer_into(x, &mut m.packed);
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[packed_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.packed[packed_index(i, j)] = v;
    }

    pub fn packed(&self) -> &[f64] {
        &self.packed
    }

    pub fn packed_mut(&mut self) -> &mut [f64] {
        &mut self.packed
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Row-major full matrix.
    pub fn to_full(&self) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = self.get(i, j);
            }
        }
        out
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.packed.iter().all(|v| v.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..=i {
                let v = self.get(i, j);
                s += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        libm::sqrt(s)
    }

    pub fn scale(&self, c: f64) -> Self {
        SymMatrix { dim: self.dim, packed: self.packed.iter().map(|v| c * v).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let packed = self.packed.iter().zip(&other.packed).map(|(&a, &b)| f(a, b)).collect();
        Ok(SymMatrix { dim: self.dim, packed })
    }

    /// `y = M x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.get(i, j) * x[j]).sum()).collect()
    }

    /// `Q M Q^T` for a row-major `d x d` matrix `q`.
    pub fn congruence(&self, q: &[f64]) -> Self {
        let d = self.dim;
        let full = self.to_full();
        // t = Q M
        let mut t = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let qik = q[i * d + k];
                for j in 0..d {
                    t[i * d + j] += qik * full[k * d + j];
                }
            }
        }
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..=i {
                let v: f64 = (0..d).map(|k| t[i * d + k] * q[j * d + k]).sum();
                out.set(i, j, v);
            }
        }
        out
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymMatrix").field("dim", &self.dim).field("rows", &self.to_rows()).finish()
    }
}

/// Writes the packed lower triangle of `x x^T` into `out`.
#[inline]
pub(crate) fn outer_into(x: &[f64], out: &mut [f64]) {
    let mut k = 0;
    for i in 0..x.len() {
        for j in 0..=i {
            out[k] = x[i] * x[j];
            k += 1;
        }
    }
}

/// Eigenvalues in decreasing order with their orthonormal eigenvectors.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// Column-major: eigenvector `k` is `vectors[k * d..(k + 1) * d]`.
    pub vectors: Vec<f64>,
}

impl EigenPairs {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        let d = self.dim();
        &self.vectors[k * d..(k + 1) * d]
    }

    /// `sum_k values[k] v_k v_k^T`.
    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(&self.values)
    }

    /// Same eigenvectors, different eigenvalues.
    pub fn reconstruct_with(&self, values: &[f64]) -> SymMatrix {
        let d = self.dim();
        let mut m = SymMatrix::zeros(d);
        for (k, &lambda) in values.iter().enumerate() {
            let v = self.vector(k);
            for i in 0..d {
                for j in 0..=i {
                    let cur = m.get(i, j);
                    m.set(i, j, cur + lambda * v[i] * v[j]);
                }
            }
        }
        m
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eigen(m: &SymMatrix) -> Result<EigenPairs> {
    if !m.is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let d = m.dim();
    let mut a = m.to_full();
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    let norm = m.frobenius_norm();
    let threshold = JACOBI_TOL * norm;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..d {
            for q in (p + 1)..d {
                off += 2.0 * a[p * d + q] * a[p * d + q];
            }
        }
        if libm::sqrt(off) <= threshold {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(theta * theta + 1.0))
                } else {
                    -1.0 / (-theta + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                // A <- A J
                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                // A <- J^T A
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                a[p * d + q] = 0.0;
                a[q * d + p] = 0.0;
                // V <- V J
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[j * d + j].total_cmp(&a[i * d + i]));
    let values = order.iter().map(|&i| a[i * d + i]).collect();
    let mut vectors = Vec::with_capacity(d * d);
    for &col in &order {
        for row in 0..d {
            vectors.push(v[row * d + col]);
        }
    }
    Ok(EigenPairs { values, vectors })
}

/// Frobenius distance between two symmetric matrices.
pub fn frobenius_distance(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    Ok(a.sub(b)?.frobenius_norm())
}

/// Frobenius distance between two row-major `d x d` matrices.
pub fn frobenius_distance_dense(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(libm::sqrt(s))
}

/// Floor used when projecting: `1e-8 * max(1, largest eigenvalue)`.
pub fn default_floor(largest_eigenvalue: f64) -> f64 {
    1e-8 * largest_eigenvalue.max(1.0)
}

/// Clips eigenvalues below `floor` up to `floor`, keeping the eigenvectors.
pub fn psd_project(m: &SymMatrix, floor: f64) -> Result<SymMatrix> {
    if !(floor > 0.0) || !floor.is_finite() {
        return Err(Error::invalid("projection floor must be positive"));
    }
    let eig = sym_eigen(m)?;
    if eig.values.iter().all(|&v| v >= floor) {
        return Ok(m.clone());
    }
    let clipped: Vec<f64> = eig.values.iter().map(|&v| v.max(floor)).collect();
    Ok(eig.reconstruct_with(&clipped))
}

/// [`psd_project`] with [`default_floor`].
pub fn psd_project_default(m: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eigen(m)?;
    let floor = default_floor(eig.values[0]);
    if eig.values.iter().all(|&v| v >= floor) {
        return Ok(m.clone());
    }
    let clipped: Vec<f64> = eig.values.iter().map(|&v| v.max(floor)).collect();
    Ok(eig.reconstruct_with(&clipped))
}

/// Lower Cholesky factor `L` with `M = L L^T`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    dim: usize,
    /// Row-major full lower triangle.
    lower: Vec<f64>,
}

impl Cholesky {
    pub fn new(m: &SymMatrix) -> Result<Self> {
        let d = m.dim();
        let mut l = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let mut s = m.get(i, j);
                for k in 0..j {
                    s -= l[i * d + k] * l[j * d + k];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite);
                    }
                    l[i * d + i] = libm::sqrt(s);
                } else {
                    l[i * d + j] = s / l[j * d + j];
                }
            }
        }
        Ok(Cholesky { dim: d, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `log det M`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim).map(|i| libm::log(self.lower[i * self.dim + i])).sum::<f64>()
    }

    /// `r^T M^{-1} r`, reusing `scratch` (length `d`).
    pub fn mahalanobis_sq(&self, r: &[f64], scratch: &mut [f64]) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for i in 0..d {
            let mut s = r[i];
            for k in 0..i {
                s -= self.lower[i * d + k] * scratch[k];
            }
            let z = s / self.lower[i * d + i];
            scratch[i] = z;
            acc += z * z;
        }
        acc
    }

    /// `L z`.
    pub fn mul_lower(&self, z: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            out[i] = (0..=i).map(|k| self.lower[i * d + k] * z[k]).sum();
        }
    }
}
