//! Degree-4 sum-of-squares relaxation of `max_{‖v‖=1} E_S[⟨v,x⟩⁴]` and the
//! hypercontractivity tester built on it.
//!
//! The SDP variable is the block `Y[(ij),(kl)] = Ẽ[v_i v_j v_k v_l]` over the
//! quadratic monomials `v_i v_j` (`i ≤ j`). Entries naming the same quartic
//! monomial are tied by equalities and `Ẽ[(Σ v_i²)²] = 1`. The lower-degree
//! pseudo-moments are then fixed by the sphere ideal, `Ẽ[v_i v_j] =
//! Σ_k Ẽ[v_i v_j v_k²]`, odd moments vanish by the symmetry `v ↦ −v`, and the
//! full moment matrix over `{1, v_i, v_i v_j}` is recovered by
//! [`PseudoMomentMatrix::from_quartic_block`]. Working with the block keeps the
//! program strictly feasible; the full matrix always has the null vector
//! `Σ v_i² − 1`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::distributions::Points;
use crate::numerics::{min_eigenvalue, SymMatrix};
use crate::sdp::{solve_sdp_with, SdpError, SdpOptions, SdpProblem, SdpSolution};
use crate::verdict::TesterVerdict;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SosError {
    #[error("point set is empty")]
    Empty,
    #[error(transparent)]
    Sdp(#[from] SdpError),
}

/// Index of the sorted quadruple `i ≤ j ≤ k ≤ l` in the reduced storage.
fn quad_rank(d: usize) -> impl Fn([usize; 4]) -> usize {
    move |mut q: [usize; 4]| {
        q.sort_unstable();
        // Row-major over a full d⁴ table keeps indexing trivial; only sorted
        // slots are ever touched.
        ((q[0] * d + q[1]) * d + q[2]) * d + q[3]
    }
}

/// Fully symmetric fourth-moment tensor `T_ijkl = E_S[x_i x_j x_k x_l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourthMomentTensor {
    dim: usize,
    /// Sorted quadruples and their values.
    entries: Vec<([usize; 4], f64)>,
    lookup: Vec<usize>,
}

fn sorted_quads(d: usize) -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for i in 0..d {
        for j in i..d {
            for k in j..d {
                for l in k..d {
                    out.push([i, j, k, l]);
                }
            }
        }
    }
    out
}

/// Number of distinct orderings of a sorted quadruple.
fn multiplicity(q: [usize; 4]) -> f64 {
    let mut counts = BTreeMap::new();
    for i in q {
        *counts.entry(i).or_insert(0usize) += 1;
    }
    let fact = |k: usize| (1..=k).product::<usize>() as f64;
    24.0 / counts.values().map(|&c| fact(c)).product::<f64>()
}

impl FourthMomentTensor {
    fn from_entries(dim: usize, entries: Vec<([usize; 4], f64)>) -> Self {
        let rank = quad_rank(dim);
        let mut lookup = vec![usize::MAX; dim.pow(4)];
        for (pos, (q, _)) in entries.iter().enumerate() {
            lookup[rank(*q)] = pos;
        }
        Self {
            dim,
            entries,
            lookup,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `T_ijkl`, for indices in any order.
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.entries[self.lookup[quad_rank(self.dim)([i, j, k, l])]].1
    }

    pub fn entries(&self) -> &[([usize; 4], f64)] {
        &self.entries
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_entries(
            self.dim,
            self.entries.iter().map(|(q, v)| (*q, v * s)).collect(),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |m, (_, v)| m.max(v.abs()))
    }

    /// `Σ_ijkl T_ijkl v_i v_j v_k v_l`.
    pub fn evaluate(&self, v: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|(q, t)| multiplicity(*q) * t * v[q[0]] * v[q[1]] * v[q[2]] * v[q[3]])
            .sum()
    }

    /// Gradient of [`evaluate`](Self::evaluate) in the ambient space.
    pub fn gradient(&self, v: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for (q, t) in &self.entries {
            let c = multiplicity(*q) * t;
            for a in 0..4 {
                let mut prod = c;
                for (b, &idx) in q.iter().enumerate() {
                    if b != a {
                        prod *= v[idx];
                    }
                }
                g[q[a]] += prod;
            }
        }
        g
    }
}

pub fn empirical_fourth_moment_tensor(points: &Points) -> Result<FourthMomentTensor, SosError> {
    if points.is_empty() {
        return Err(SosError::Empty);
    }
    let d = points.dim();
    let quads = sorted_quads(d);
    let mut acc = vec![0.0; quads.len()];
    for x in points.rows() {
        for (a, q) in acc.iter_mut().zip(&quads) {
            *a += x[q[0]] * x[q[1]] * x[q[2]] * x[q[3]];
        }
    }
    let inv = 1.0 / points.len() as f64;
    Ok(FourthMomentTensor::from_entries(
        d,
        quads.into_iter().zip(acc).map(|(q, v)| (q, v * inv)).collect(),
    ))
}

/// Quadratic monomials `v_i v_j`, `i ≤ j`, in a fixed order.
pub fn quadratic_monomials(d: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for i in 0..d {
        for j in i..d {
            out.push((i, j));
        }
    }
    out
}

/// Symmetric matrix `E` with `⟨E, Y⟩ = Y_pq`.
fn entry_selector(n: usize, p: usize, q: usize) -> SymMatrix {
    let mut e = SymMatrix::zeros(n);
    e.set(p, q, if p == q { 1.0 } else { 0.5 });
    e
}

/// The degree-4 relaxation as an SDP over the quartic block `Y`.
pub fn build_degree4_relaxation(t: &FourthMomentTensor) -> SdpProblem {
    let d = t.dim();
    let mons = quadratic_monomials(d);
    let n = mons.len();
    let pair_weight = |(i, j): (usize, usize)| if i < j { 2.0 } else { 1.0 };
    let objective = SymMatrix::from_upper_fn(n, |p, q| {
        let (i, j) = mons[p];
        let (k, l) = mons[q];
        pair_weight(mons[p]) * pair_weight(mons[q]) * t.get(i, j, k, l)
    });
    let mut problem = SdpProblem::new(objective);

    // Tie every entry to the first entry naming the same quartic monomial.
    let rank = quad_rank(d);
    let mut canonical: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for p in 0..n {
        for q in p..n {
            let (i, j) = mons[p];
            let (k, l) = mons[q];
            let key = rank([i, j, k, l]);
            match canonical.get(&key) {
                None => {
                    canonical.insert(key, (p, q));
                }
                Some(&(p0, q0)) => {
                    let a = entry_selector(n, p, q).sub(&entry_selector(n, p0, q0));
                    problem.add_constraint(a, 0.0);
                }
            }
        }
    }
    // Ẽ[(Σ v_i²)²] = Σ_{i,j} Y[(ii),(jj)] = 1.
    let diag_pairs: Vec<usize> = (0..n).filter(|&p| mons[p].0 == mons[p].1).collect();
    let mut norm = SymMatrix::zeros(n);
    for &p in &diag_pairs {
        for &q in &diag_pairs {
            if p <= q {
                norm.set(p, q, 1.0);
            }
        }
    }
    problem.add_constraint(norm, 1.0);
    problem
}

/// Degree-≤4 pseudo-moment matrix indexed by `1, v_1..v_d, v_i v_j (i ≤ j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoMomentMatrix {
    dim: usize,
    /// Monomials as sorted index lists, in matrix order.
    pub index: Vec<Vec<usize>>,
    pub m: SymMatrix,
}

impl PseudoMomentMatrix {
    /// Extends a feasible quartic block `Y` to the full moment matrix.
    pub fn from_quartic_block(d: usize, y: &SymMatrix) -> Self {
        let mons = quadratic_monomials(d);
        assert_eq!(y.dim(), mons.len());
        let mut index: Vec<Vec<usize>> = vec![vec![]];
        index.extend((0..d).map(|i| vec![i]));
        index.extend(mons.iter().map(|&(i, j)| vec![i, j]));
        let size = index.len();
        let pos = |i: usize, j: usize| {
            let (i, j) = (i.min(j), i.max(j));
            mons.iter().position(|&m| m == (i, j)).unwrap()
        };
        let quartic = |a: usize, b: usize, c: usize, e: usize| y.get(pos(a, b), pos(c, e));
        let quadratic = |i: usize, j: usize| (0..d).map(|k| quartic(i, j, k, k)).sum::<f64>();
        let off = 1 + d;
        let mut m = SymMatrix::zeros(size);
        m.set(0, 0, 1.0);
        for (p, &(i, j)) in mons.iter().enumerate() {
            m.set(0, off + p, quadratic(i, j));
            for (q, _) in mons.iter().enumerate().skip(p) {
                m.set(off + p, off + q, y.get(p, q));
            }
        }
        for i in 0..d {
            for j in i..d {
                m.set(1 + i, 1 + j, quadratic(i, j));
            }
        }
        Self { dim: d, index, m }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn position(&self, mono: &[usize]) -> usize {
        self.index.iter().position(|m| m == mono).expect("monomial of degree ≤ 2")
    }

    /// `Ẽ[monomial]` read from a canonical entry (degree ≤ 4).
    pub fn expectation(&self, mono: &[usize]) -> f64 {
        let mut s = mono.to_vec();
        s.sort_unstable();
        match s.len() {
            0 => self.m.get(0, 0),
            1 | 2 => self.m.get(0, self.position(&s)),
            3 => self.m.get(self.position(&s[..1]), self.position(&s[1..])),
            4 => self.m.get(self.position(&s[..2]), self.position(&s[2..])),
            _ => panic!("degree above 4"),
        }
    }

    /// Largest deviation between an entry and the canonical entry of its monomial.
    pub fn consistency_error(&self) -> f64 {
        let size = self.index.len();
        let mut worst = 0.0f64;
        for a in 0..size {
            for b in a..size {
                let mut mono = self.index[a].clone();
                mono.extend_from_slice(&self.index[b]);
                worst = worst.max((self.m.get(a, b) - self.expectation(&mono)).abs());
            }
        }
        worst
    }

    /// Largest `|Ẽ[(Σ v_i² − 1)·m]|` over monomials `m` of degree ≤ 2.
    pub fn sphere_ideal_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for mono in &self.index {
            let mut s = -self.expectation(mono);
            for i in 0..self.dim {
                let mut m2 = mono.clone();
                m2.extend([i, i]);
                s += self.expectation(&m2);
            }
            worst = worst.max(s.abs());
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.m).unwrap_or(f64::NEG_INFINITY)
    }
}

#[derive(Debug, Clone)]
pub struct RelaxationResult {
    /// Certified upper bound on the maximum directional fourth moment
    /// (the dual objective, never below the primal objective).
    pub value: f64,
    pub primal_value: f64,
    pub solution: SdpSolution,
    pub moments: PseudoMomentMatrix,
}

/// Solves the relaxation. The tensor is rescaled to unit max-entry before
/// solving and the values are mapped back, so `tol` is the duality-gap
/// tolerance relative to the largest tensor entry.
pub fn solve_degree4_relaxation(
    t: &FourthMomentTensor,
    tol: f64,
) -> Result<RelaxationResult, SosError> {
    let d = t.dim();
    let zero = t.max_abs() == 0.0;
    let scale = if zero { 1.0 } else { t.max_abs() };
    let problem = build_degree4_relaxation(&t.scaled(1.0 / scale));
    let opts = SdpOptions {
        tol,
        ..SdpOptions::default()
    };
    let mut solution = solve_sdp_with(&problem, &opts)?;
    solution.value *= scale;
    solution.dual_value *= scale;
    let moments = PseudoMomentMatrix::from_quartic_block(d, &solution.x);
    Ok(RelaxationResult {
        // A zero objective vanishes on every feasible point.
        value: if zero { 0.0 } else { solution.value.max(solution.dual_value) },
        primal_value: solution.value,
        solution,
        moments,
    })
}

/// Accepts iff the certified relaxation value is at most `(C_hyper − 1)·γ⁴`.
/// On acceptance every unit `v` has `E_S[⟨v,x⟩⁴] ≤ C_hyper·γ⁴`. Solver
/// failure rejects.
pub fn hypercontractivity_test(
    points: &Points,
    gamma: f64,
    c_hyper: f64,
    tol: f64,
) -> TesterVerdict {
    let mut v = TesterVerdict::new("hypercontractivity");
    let threshold = (c_hyper - 1.0) * gamma.powi(4);
    v.diag("threshold", threshold).diag("samples", points.len() as f64);
    if points.is_empty() {
        v.diag("sdp_value", 0.0);
        return v;
    }
    let t = match empirical_fourth_moment_tensor(points) {
        Ok(t) => t,
        Err(e) => {
            v.reject(format!("moment tensor: {e}"));
            return v;
        }
    };
    match solve_degree4_relaxation(&t, tol) {
        Ok(r) => {
            v.diag("sdp_value", r.value)
                .diag("sdp_primal_value", r.primal_value)
                .diag("sdp_iterations", r.solution.iterations as f64);
            if !r.solution.is_optimal() {
                v.reject(format!("solver did not converge ({:?})", r.solution.status));
            } else if r.value > threshold {
                v.reject(format!(
                    "fourth-moment certificate {:.6} exceeds {:.6}",
                    r.value, threshold
                ));
            }
        }
        Err(e) => {
            v.reject(format!("solver failure: {e}"));
        }
    }
    v
}
