use serde::{Deserialize, Serialize};

use super::{NumericsError, Result, SymMatrix};

/// Stopping rule for the cyclic Jacobi eigensolver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobiOptions {
    /// Stop once the off-diagonal Frobenius norm falls below
    /// `rel_tol * ‖M‖_F`.
    pub rel_tol: f64,
    pub max_sweeps: usize,
}

impl Default for JacobiOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_sweeps: 100,
        }
    }
}

/// Spectrum of a symmetric matrix, eigenvalues ascending.
///
/// `eigenvectors` is row-major `dim × dim`; column `k` is the unit eigenvector
/// for `eigenvalues[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<f64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| self.eigenvectors[i * n + k]).collect()
    }

    /// `V f(Λ) Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.dim();
        let mapped: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let v = &self.eigenvectors;
        SymMatrix::from_upper_fn(n, |i, j| {
            (0..n).map(|k| v[i * n + k] * mapped[k] * v[j * n + k]).sum()
        })
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(|l| l)
    }
}

pub fn sym_eigendecompose(m: &SymMatrix) -> Result<EigenDecomposition> {
    sym_eigendecompose_with(m, &JacobiOptions::default())
}

/// Cyclic Jacobi rotations.
pub fn sym_eigendecompose_with(m: &SymMatrix, opts: &JacobiOptions) -> Result<EigenDecomposition> {
    if !m.is_finite() {
        return Err(NumericsError::NonFinite);
    }
    let n = m.dim();
    let mut a = m.as_slice().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let threshold = opts.rel_tol * m.frobenius_norm();

    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * a[i * n + j] * a[i * n + j];
            }
        }
        s.sqrt()
    };

    let mut converged = off(&a) <= threshold;
    let mut sweeps = 0;
    while !converged && sweeps < opts.max_sweeps {
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (tau * tau + 1.0).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        converged = off(&a) <= threshold;
    }
    if !converged {
        return Err(NumericsError::NoConvergence { sweeps });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let eigenvalues = order.iter().map(|&i| a[i * n + i]).collect();
    let mut eigenvectors = vec![0.0; n * n];
    for (k, &src) in order.iter().enumerate() {
        for i in 0..n {
            eigenvectors[i * n + k] = v[i * n + src];
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Largest absolute eigenvalue.
pub fn operator_norm(m: &SymMatrix) -> Result<f64> {
    if m.dim() == 0 {
        return Ok(0.0);
    }
    let e = sym_eigendecompose(m)?;
    Ok(e.eigenvalues[0].abs().max(e.eigenvalues[e.dim() - 1].abs()))
}

pub fn min_eigenvalue(m: &SymMatrix) -> Result<f64> {
    if m.dim() == 0 {
        return Err(NumericsError::EmptyDimension);
    }
    Ok(sym_eigendecompose(m)?.eigenvalues[0])
}

pub fn max_eigenvalue(m: &SymMatrix) -> Result<f64> {
    if m.dim() == 0 {
        return Err(NumericsError::EmptyDimension);
    }
    let e = sym_eigendecompose(m)?;
    Ok(e.eigenvalues[e.dim() - 1])
}
