use serde::{Deserialize, Serialize};

use super::{NumericsError, Result};

/// Dense symmetric matrix with full row-major storage.
///
/// Every mutation writes both `(i, j)` and `(j, i)`, so the stored entries are
/// exactly symmetric at all times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = v;
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle (`i <= j`).
    pub fn from_upper_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds a matrix from rows, which must be square and exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(NumericsError::DimMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if data[i * dim + j] != data[j * dim + i] {
                    return Err(NumericsError::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self { dim, data })
    }

    /// Builds a matrix from a square row-major buffer by averaging it with its
    /// transpose.
    pub fn symmetrize(dim: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), dim * dim);
        Self::from_upper_fn(dim, |i, j| 0.5 * (data[i * dim + j] + data[j * dim + i]))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] += v;
        if i != j {
            self.data[j * self.dim + i] += v;
        }
    }

    /// Row-major view of the full storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// `self += weight * z zᵀ`.
    pub fn add_outer(&mut self, z: &[f64], weight: f64) {
        debug_assert_eq!(z.len(), self.dim);
        let d = self.dim;
        for i in 0..d {
            let wi = weight * z[i];
            if wi == 0.0 {
                continue;
            }
            for j in i..d {
                self.data[i * d + j] += wi * z[j];
            }
        }
        self.mirror_upper();
    }

    /// Copies the upper triangle onto the lower triangle.
    pub(crate) fn mirror_upper(&mut self) {
        let d = self.dim;
        for i in 0..d {
            for j in (i + 1)..d {
                self.data[j * d + i] = self.data[i * d + j];
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// Trace inner product `⟨A, B⟩ = tr(A B)`.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `uᵀ M u`.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        super::dot(u, &self.matvec(u))
    }
}
