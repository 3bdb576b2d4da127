use serde::{Deserialize, Serialize};

use super::{DistributionsError, Result};
use crate::numerics::{dot, UnitVector};

/// Sign with the global tie-breaking convention `sign(0) = +1`.
#[inline]
pub fn sign(t: f64) -> i8 {
    if t >= 0.0 {
        1
    } else {
        -1
    }
}

/// `n` points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Points {
    dim: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(DistributionsError::InvalidParameter("dimension must be positive".into()));
        }
        if data.len() % dim != 0 {
            return Err(DistributionsError::InvalidParameter(format!(
                "buffer of length {} is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(DistributionsError::NonFinite);
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(DistributionsError::DimMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(dim, data)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn select(&self, idx: &[usize]) -> Points {
        let mut data = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Points { dim: self.dim, data }
    }

    /// Applies `f` to each row, producing points of dimension `out_dim`.
    pub fn map_rows(&self, out_dim: usize, mut f: impl FnMut(&[f64], &mut [f64])) -> Points {
        let mut data = vec![0.0; self.len() * out_dim];
        for (x, out) in self.rows().zip(data.chunks_exact_mut(out_dim.max(1))) {
            f(x, out);
        }
        Points { dim: out_dim, data }
    }

    pub(crate) fn from_raw(dim: usize, data: Vec<f64>) -> Self {
        debug_assert!(dim > 0 && data.len() % dim == 0);
        Points { dim, data }
    }
}

/// Labeled sample `S = {(x, y)}` with `y ∈ {−1, +1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    points: Points,
    labels: Vec<i8>,
}

impl Dataset {
    pub fn new(points: Points, labels: Vec<i8>) -> Result<Self> {
        if points.is_empty() {
            return Err(DistributionsError::Empty);
        }
        if labels.len() != points.len() {
            return Err(DistributionsError::DimMismatch {
                expected: points.len(),
                found: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
            return Err(DistributionsError::InvalidLabel(bad as i64));
        }
        Ok(Self { points, labels })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    #[inline]
    pub fn x(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    #[inline]
    pub fn y(&self, i: usize) -> f64 {
        self.labels[i] as f64
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points.rows().zip(self.labels.iter().map(|&y| y as f64))
    }

    pub fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            points: self.points.select(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Splits into the first `k` rows and the rest.
    pub fn split_at(&self, k: usize) -> (Dataset, Dataset) {
        let k = k.min(self.len());
        let first: Vec<usize> = (0..k).collect();
        let rest: Vec<usize> = (k..self.len()).collect();
        (self.select(&first), self.select(&rest))
    }

    pub fn with_negated_labels(&self) -> Dataset {
        Dataset {
            points: self.points.clone(),
            labels: self.labels.iter().map(|y| -y).collect(),
        }
    }

    /// Empirical 0-1 error of `x ↦ sign(⟨w, x⟩)`.
    pub fn zero_one_error(&self, w: &UnitVector) -> f64 {
        assert_eq!(w.dim(), self.dim());
        let wrong = self
            .iter()
            .filter(|(x, y)| sign(dot(w.as_slice(), x)) as f64 != *y)
            .count();
        wrong as f64 / self.len() as f64
    }
}

/// Minimum empirical 0-1 error over the candidate directions.
pub fn empirical_opt_upper_bound(ds: &Dataset, candidates: &[UnitVector]) -> Result<f64> {
    if candidates.is_empty() {
        return Err(DistributionsError::InvalidParameter(
            "candidate list is empty".into(),
        ));
    }
    for c in candidates {
        if c.dim() != ds.dim() {
            return Err(DistributionsError::DimMismatch {
                expected: ds.dim(),
                found: c.dim(),
            });
        }
    }
    Ok(candidates
        .iter()
        .map(|c| ds.zero_one_error(c))
        .fold(f64::INFINITY, f64::min))
}
