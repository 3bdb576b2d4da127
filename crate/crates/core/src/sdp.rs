//! Small dense semidefinite programs in the form
//!
//! ```text
//! maximize ⟨C, X⟩  subject to  ⟨A_i, X⟩ = b_i,  X ⪰ 0,
//! ```
//!
//! solved by an infeasible-start primal-dual interior point method with
//! Nesterov–Todd scaling and Mehrotra predictor-corrector steps.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{sym_eigendecompose, Dense, SymMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpError {
    #[error("constraint {index} has dimension {found}, expected {expected}")]
    DimMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("problem data contains a non-finite value")]
    NonFinite,
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub n: usize,
    pub objective: SymMatrix,
    pub constraints: Vec<(SymMatrix, f64)>,
}

impl SdpProblem {
    pub fn new(objective: SymMatrix) -> Self {
        Self {
            n: objective.dim(),
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn add_constraint(&mut self, a: SymMatrix, b: f64) {
        self.constraints.push((a, b));
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        if self.objective.dim() != self.n {
            return Err(SdpError::DimMismatch {
                index: 0,
                expected: self.n,
                found: self.objective.dim(),
            });
        }
        if !self.objective.is_finite() {
            return Err(SdpError::NonFinite);
        }
        for (i, (a, b)) in self.constraints.iter().enumerate() {
            if a.dim() != self.n {
                return Err(SdpError::DimMismatch {
                    index: i + 1,
                    expected: self.n,
                    found: a.dim(),
                });
            }
            if !a.is_finite() || !b.is_finite() {
                return Err(SdpError::NonFinite);
            }
        }
        Ok(())
    }

    /// Plain-text sparse dump. Each line is `matrix-id i j value` with
    /// 1-based upper-triangle indices; id 0 is the objective and id `k` the
    /// k-th constraint matrix. The right-hand side `b_k` is written as
    /// `k 0 0 b_k`. The first line is a comment `# n <n> m <m>`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# n {} m {}", self.n, self.constraints.len());
        let mut emit = |id: usize, m: &SymMatrix| {
            for i in 0..self.n {
                for j in i..self.n {
                    let v = m.get(i, j);
                    if v != 0.0 {
                        let _ = writeln!(s, "{id} {} {} {v:?}", i + 1, j + 1);
                    }
                }
            }
        };
        emit(0, &self.objective);
        for (k, (a, _)) in self.constraints.iter().enumerate() {
            emit(k + 1, a);
        }
        for (k, (_, b)) in self.constraints.iter().enumerate() {
            let _ = writeln!(s, "{} 0 0 {b:?}", k + 1);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal { gap: f64 },
    Infeasible,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub x: SymMatrix,
    /// Primal objective `⟨C, X⟩`.
    pub value: f64,
    /// Dual objective, an upper bound on the optimum when dual feasible.
    pub dual_value: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        matches!(self.status, SdpStatus::Optimal { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdpOptions {
    /// Absolute duality gap target.
    pub tol: f64,
    pub tol_feas: f64,
    pub tol_psd: f64,
    pub max_iterations: usize,
    /// Iterates with `‖y‖` or `tr(X)` above this are declared infeasible.
    pub divergence_bound: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            tol_feas: 1e-7,
            tol_psd: 1e-7,
            max_iterations: 500,
            divergence_bound: 1e10,
        }
    }
}

pub fn solve_sdp(p: &SdpProblem, tol: f64) -> Result<SdpSolution, SdpError> {
    solve_sdp_with(
        p,
        &SdpOptions {
            tol,
            ..SdpOptions::default()
        },
    )
}

/// Upper-triangle nonzeros of a constraint matrix.
struct Sparse {
    entries: Vec<(usize, usize, f64)>,
}

impl Sparse {
    fn from_sym(m: &SymMatrix) -> Self {
        let n = m.dim();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in i..n {
                let v = m.get(i, j);
                if v != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        Self { entries }
    }

    /// `⟨A, S⟩`.
    fn inner(&self, s: &SymMatrix) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v * s.get(i, i) } else { 2.0 * v * s.get(i, j) })
            .sum()
    }

    /// `out += c·A`.
    fn axpy(&self, c: f64, out: &mut SymMatrix) {
        for &(i, j, v) in &self.entries {
            out.add_to(i, j, c * v);
        }
    }

    /// `(W A W)_{pq}` for symmetric `W`.
    fn wawt_entry(&self, w: &SymMatrix, p: usize, q: usize) -> f64 {
        let mut s = 0.0;
        for &(r, t, v) in &self.entries {
            if r == t {
                s += v * w.get(p, r) * w.get(r, q);
            } else {
                s += v * (w.get(p, r) * w.get(t, q) + w.get(p, t) * w.get(r, q));
            }
        }
        s
    }
}

struct Direction {
    dx: SymMatrix,
    dy: Vec<f64>,
    dz: SymMatrix,
}

/// Largest `α ∈ (0, 1]` with `M + αΔ ⪰ 0`, given the Cholesky factor of `M`.
fn max_step(l: &Dense, delta: &SymMatrix) -> f64 {
    let linv = l.lower_inverse();
    let scaled = linv.congruence(delta);
    match sym_eigendecompose(&scaled) {
        Ok(e) => {
            let lmin = e.eigenvalues.first().copied().unwrap_or(0.0);
            if lmin >= 0.0 {
                1.0
            } else {
                (-1.0 / lmin).min(1.0)
            }
        }
        Err(_) => 0.0,
    }
}

pub fn solve_sdp_with(p: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution, SdpError> {
    p.validate()?;
    if !(opts.tol > 0.0) {
        return Err(SdpError::InvalidTolerance(opts.tol));
    }
    let n = p.n;
    let m = p.constraints.len();
    let nf = n as f64;
    // Internal minimization form: minimize ⟨C', X⟩ with C' = −C.
    let c = p.objective.scaled(-1.0);
    let a: Vec<Sparse> = p.constraints.iter().map(|(a, _)| Sparse::from_sym(a)).collect();
    let b: Vec<f64> = p.constraints.iter().map(|(_, b)| *b).collect();

    let a_norms: Vec<f64> = p.constraints.iter().map(|(a, _)| a.frobenius_norm()).collect();
    let mut xi = 10f64.max(nf.sqrt());
    let mut eta = 10f64.max(nf.sqrt()).max(c.frobenius_norm());
    for k in 0..m {
        xi = xi.max(nf * (1.0 + b[k].abs()) / (1.0 + a_norms[k]));
        eta = eta.max(a_norms[k]);
    }
    eta = eta.max((1.0 + c.frobenius_norm()) / nf.sqrt());
    let mut x = SymMatrix::identity(n).scaled(xi);
    let mut z = SymMatrix::identity(n).scaled(eta);
    let mut y = vec![0.0; m];

    let residuals = |x: &SymMatrix, y: &[f64], z: &SymMatrix| {
        let rp: Vec<f64> = (0..m).map(|k| b[k] - a[k].inner(x)).collect();
        let mut rd = c.sub(z);
        for k in 0..m {
            a[k].axpy(-y[k], &mut rd);
        }
        (rp, rd)
    };

    let mut status = SdpStatus::MaxIterations;
    let mut iterations = 0;

    loop {
        let (rp, rd) = residuals(&x, &y, &z);
        let pinf = rp.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        let dinf = rd.max_abs();
        let pobj = c.inner(&x);
        let dobj: f64 = b.iter().zip(&y).map(|(bi, yi)| bi * yi).sum();
        let gap = (pobj - dobj).abs().max(x.inner(&z));
        if pinf <= opts.tol_feas && dinf <= opts.tol_feas && gap <= opts.tol {
            status = SdpStatus::Optimal { gap };
            break;
        }
        let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if ynorm > opts.divergence_bound || x.trace() > opts.divergence_bound {
            status = SdpStatus::Infeasible;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;

        let lx = match Dense::cholesky(&x) {
            Ok(l) => l,
            Err(_) => break,
        };
        let lz = match Dense::cholesky(&z) {
            Ok(l) => l,
            Err(_) => break,
        };
        // NT scaling point.
        let ltzl = lx.congruence_t(&z);
        let eig = match sym_eigendecompose(&ltzl) {
            Ok(e) => e,
            Err(_) => break,
        };
        let dvals: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(1e-300).sqrt()).collect();
        let q = Dense::from_row_major(n, eig.eigenvectors.clone());
        let g = lx.matmul(&q).scale_columns(&dvals.iter().map(|d| 1.0 / d.sqrt()).collect::<Vec<_>>());
        let ginv = {
            let qt_linv = q.transpose().matmul(&lx.lower_inverse());
            let mut out = qt_linv;
            for i in 0..n {
                let s = dvals[i].sqrt();
                for j in 0..n {
                    out.set(i, j, out.get(i, j) * s);
                }
            }
            out
        };
        let w = g.congruence(&SymMatrix::identity(n));

        // Schur complement M_ij = ⟨A_i, W A_j W⟩.
        let mut schur = SymMatrix::zeros(m);
        {
            let mut waw = SymMatrix::zeros(n);
            for j in 0..m {
                for pp in 0..n {
                    for qq in pp..n {
                        waw.set(pp, qq, a[j].wawt_entry(&w, pp, qq));
                    }
                }
                for i in 0..=j {
                    schur.set(i, j, a[i].inner(&waw));
                }
            }
        }
        let schur_chol = {
            let mut reg = 0.0;
            let diag_max = (0..m).fold(0.0f64, |s, i| s.max(schur.get(i, i)));
            loop {
                let mut mm = schur.clone();
                for i in 0..m {
                    mm.add_to(i, i, reg);
                }
                match Dense::cholesky(&mm) {
                    Ok(l) => break Some(l),
                    Err(_) => {
                        reg = if reg == 0.0 { 1e-14 * diag_max.max(1e-300) } else { reg * 100.0 };
                        if reg > 1e-2 * diag_max.max(1.0) {
                            break None;
                        }
                    }
                }
            }
        };
        let Some(schur_chol) = schur_chol else { break };

        let wrdw = Dense::from_sym(&w).congruence(&rd);
        let solve_dir = |k_mat: &SymMatrix| -> Direction {
            let rhs: Vec<f64> = (0..m)
                .map(|i| rp[i] - a[i].inner(k_mat) + a[i].inner(&wrdw))
                .collect();
            let dy = if m > 0 { schur_chol.cholesky_solve(&rhs) } else { Vec::new() };
            let mut dz = rd.clone();
            for k in 0..m {
                a[k].axpy(-dy[k], &mut dz);
            }
            let dx = k_mat.sub(&Dense::from_sym(&w).congruence(&dz));
            Direction { dx, dy, dz }
        };
        // K = G R̃ Gᵀ with R̃_ij = RHS_ij / (D_i + D_j).
        let k_from_rhs = |rhs: &SymMatrix| -> SymMatrix {
            let rt = SymMatrix::from_upper_fn(n, |i, j| rhs.get(i, j) / (dvals[i] + dvals[j]));
            g.congruence(&rt)
        };

        let mu = x.inner(&z) / nf;
        let d2 = SymMatrix::from_diag(&dvals.iter().map(|d| d * d).collect::<Vec<_>>());

        // Predictor.
        let aff = solve_dir(&k_from_rhs(&d2.scaled(-2.0)));
        let ap = max_step(&lx, &aff.dx);
        let ad = max_step(&lz, &aff.dz);
        let x_aff = x.add(&aff.dx.scaled(ap));
        let z_aff = z.add(&aff.dz.scaled(ad));
        let mu_aff = x_aff.inner(&z_aff) / nf;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector.
        let dxt = ginv.congruence(&aff.dx);
        let dzt = g.congruence_t(&aff.dz);
        let cross = Dense::from_sym(&dxt).matmul(&Dense::from_sym(&dzt));
        let cross_sym = cross.sym_part().scaled(2.0);
        let rhs = SymMatrix::identity(n)
            .scaled(2.0 * sigma * mu)
            .sub(&d2.scaled(2.0))
            .sub(&cross_sym);
        let dir = solve_dir(&k_from_rhs(&rhs));
        let ap = (0.98 * max_step(&lx, &dir.dx)).min(1.0);
        let ad = (0.98 * max_step(&lz, &dir.dz)).min(1.0);
        if ap < 1e-14 && ad < 1e-14 {
            break;
        }
        x = x.add(&dir.dx.scaled(ap));
        z = z.add(&dir.dz.scaled(ad));
        for k in 0..m {
            y[k] += ad * dir.dy[k];
        }
    }

    let (rp, rd) = residuals(&x, &y, &z);
    let pobj = c.inner(&x);
    let dobj: f64 = b.iter().zip(&y).map(|(bi, yi)| bi * yi).sum();
    if let SdpStatus::Optimal { .. } = status {
        if let Ok(e) = sym_eigendecompose(&x) {
            if e.eigenvalues.first().copied().unwrap_or(0.0) < -opts.tol_psd {
                status = SdpStatus::MaxIterations;
            }
        }
    }
    Ok(SdpSolution {
        x,
        value: -pobj,
        dual_value: -dobj,
        status,
        iterations,
        primal_infeasibility: rp.iter().fold(0.0f64, |s, v| s.max(v.abs())),
        dual_infeasibility: rd.max_abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_one(c: SymMatrix) -> SdpProblem {
        let n = c.dim();
        let mut p = SdpProblem::new(c);
        p.add_constraint(SymMatrix::identity(n), 1.0);
        p
    }

    #[test]
    fn constraint_pins_objective() {
        let s = solve_sdp(&trace_one(SymMatrix::identity(2)), 1e-8).unwrap();
        assert!(s.is_optimal(), "{:?}", s.status);
        assert!((s.value - 1.0).abs() < 1e-7);
    }

    #[test]
    fn eigenvalue_lp() {
        let s = solve_sdp(&trace_one(SymMatrix::from_diag(&[1.0, 0.0])), 1e-9).unwrap();
        assert!(s.is_optimal());
        assert!((s.value - 1.0).abs() < 1e-7);
        assert!((s.x.get(0, 0) - 1.0).abs() < 1e-6);
        assert!(s.x.get(1, 1).abs() < 1e-6);
    }

    #[test]
    fn off_diagonal_objective() {
        let c = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let s = solve_sdp(&trace_one(c), 1e-9).unwrap();
        assert!(s.is_optimal());
        assert!((s.value - 1.0).abs() < 1e-7);
        assert!(s.value <= s.dual_value + 1e-8);
    }

    #[test]
    fn unbounded_is_reported() {
        let p = SdpProblem::new(SymMatrix::identity(2));
        let s = solve_sdp(&p, 1e-8).unwrap();
        assert!(!s.is_optimal());
    }

    #[test]
    fn dump_format() {
        let p = trace_one(SymMatrix::from_diag(&[2.0, 0.0]));
        let d = p.dump();
        assert_eq!(d, "# n 2 m 1\n0 1 1 2.0\n1 1 1 1.0\n1 2 2 1.0\n1 0 0 1.0\n");
    }
}
