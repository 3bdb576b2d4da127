use super::{NumericsError, Result, SymMatrix};

/// General dense square matrix, row-major. Used internally by the SDP solver
/// for factors and scalings that are not symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    n: usize,
    data: Vec<f64>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_sym(s: &SymMatrix) -> Self {
        Self {
            n: s.dim(),
            data: s.as_slice().to_vec(),
        }
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n);
        Self { n, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t.data[j * n + i] = self.data[i * n + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        assert_eq!(n, other.n);
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            let row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                for (r, b) in row.iter_mut().zip(brow) {
                    *r += a * b;
                }
            }
        }
        Self { n, data: out }
    }

    /// `self · diag(d)`.
    pub fn scale_columns(&self, d: &[f64]) -> Self {
        let n = self.n;
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] *= d[j];
            }
        }
        out
    }

    /// `A S Aᵀ`, symmetrized.
    pub fn congruence(&self, s: &SymMatrix) -> SymMatrix {
        let as_ = self.matmul(&Dense::from_sym(s));
        let r = as_.matmul(&self.transpose());
        SymMatrix::symmetrize(self.n, &r.data)
    }

    /// `Aᵀ S A`, symmetrized.
    pub fn congruence_t(&self, s: &SymMatrix) -> SymMatrix {
        self.transpose().congruence(s)
    }

    /// `(A + Aᵀ)/2`.
    pub fn sym_part(&self) -> SymMatrix {
        SymMatrix::symmetrize(self.n, &self.data)
    }

    /// Lower Cholesky factor `L` with `S = L Lᵀ`.
    pub fn cholesky(s: &SymMatrix) -> Result<Self> {
        let n = s.dim();
        let mut l = Self::zeros(n);
        for j in 0..n {
            let mut diag = s.get(j, j);
            for k in 0..j {
                diag -= l.data[j * n + k] * l.data[j * n + k];
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(NumericsError::NotPositiveDefinite);
            }
            let ljj = diag.sqrt();
            l.data[j * n + j] = ljj;
            for i in (j + 1)..n {
                let mut v = s.get(i, j);
                for k in 0..j {
                    v -= l.data[i * n + k] * l.data[j * n + k];
                }
                l.data[i * n + j] = v / ljj;
            }
        }
        Ok(l)
    }

    /// Inverse of a lower triangular matrix.
    pub fn lower_inverse(&self) -> Self {
        let n = self.n;
        let mut inv = Self::zeros(n);
        for j in 0..n {
            inv.data[j * n + j] = 1.0 / self.data[j * n + j];
            for i in (j + 1)..n {
                let mut s = 0.0;
                for k in j..i {
                    s += self.data[i * n + k] * inv.data[k * n + j];
                }
                inv.data[i * n + j] = -s / self.data[i * n + i];
            }
        }
        inv
    }

    /// Solves `L Lᵀ x = b` given the lower Cholesky factor `L = self`.
    pub fn cholesky_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.data[i * n + k] * y[k];
            }
            y[i] = s / self.data[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.data[k * n + i] * y[k];
            }
            y[i] = s / self.data[i * n + i];
        }
        y
    }
}
