//! Brute-force reference computations used to cross-check the library:
//! the maximum directional fourth moment, finite-difference gradients on the
//! sphere, small-dimensional ERM over halfspaces, the terms of the surrogate
//! gradient lower bound, and Gaussian strip statistics.
//!
//! Nothing here calls into the SDP, SOS or surrogate-gradient code paths.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::distributions::{sign, Dataset, Points};
use crate::numerics::{dot, norm2, OrthogonalProjector, UnitVector};
use crate::rng::{purpose, stream_id, CtrRng};
use crate::surrogate::RAMP_SLOPE_BOUND;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("dimension {dim} exceeds the limit {max} for this oracle")]
    DimTooLarge { dim: usize, max: usize },
    #[error("empty input")]
    Empty,
    #[error("finite-difference step {0} outside [1e-8, 1e-4]")]
    InvalidStep(f64),
    #[error("w and w* are parallel; the angle is degenerate")]
    DegenerateAngle,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
}

pub type Result<T> = std::result::Result<T, OracleError>;

/// Angular step of the fourth-moment grid.
pub const GRID_STEP: f64 = 0.01;
/// Largest dimension handled by grid search.
pub const GRID_MAX_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FourthMomentMethod {
    /// Exhaustive angular grid, `d ≤ 4`.
    Grid,
    /// Multi-start ascent; a lower bound only.
    MultiStart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourthMomentMax {
    pub value: f64,
    pub direction: UnitVector,
    pub method: FourthMomentMethod,
}

impl FourthMomentMax {
    pub fn lower_bound_only(&self) -> bool {
        self.method == FourthMomentMethod::MultiStart
    }
}

/// Coefficients of `q(v) = E_S[⟨v,x⟩⁴]` in the monomial basis.
struct Quartic {
    terms: Vec<([usize; 4], f64)>,
}

impl Quartic {
    fn new(points: &Points) -> Self {
        let d = points.dim();
        let n = points.len() as f64;
        let mut terms = Vec::new();
        for i in 0..d {
            for j in i..d {
                for k in j..d {
                    for l in k..d {
                        let idx = [i, j, k, l];
                        let mean = points
                            .rows()
                            .map(|x| x[i] * x[j] * x[k] * x[l])
                            .sum::<f64>()
                            / n;
                        terms.push((idx, multinomial(&idx) * mean));
                    }
                }
            }
        }
        Self { terms }
    }

    fn eval(&self, v: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(q, c)| c * v[q[0]] * v[q[1]] * v[q[2]] * v[q[3]])
            .sum()
    }
}

/// Number of distinct orderings of a sorted quadruple.
fn multinomial(q: &[usize; 4]) -> f64 {
    let mut runs = Vec::new();
    let mut len = 1;
    for w in q.windows(2) {
        if w[0] == w[1] {
            len += 1;
        } else {
            runs.push(len);
            len = 1;
        }
    }
    runs.push(len);
    let fact = |k: usize| (1..=k).product::<usize>() as f64;
    24.0 / runs.iter().map(|&r| fact(r)).product::<f64>()
}

fn direct_fourth_moment(points: &Points, v: &[f64]) -> f64 {
    points.rows().map(|x| dot(v, x).powi(4)).sum::<f64>() / points.len() as f64
}

/// Fixed-point ascent `v ← ∇q(v)/‖∇q(v)‖`. Because `q` is convex and
/// homogeneous, each step does not decrease `q` on the sphere.
fn ascend(points: &Points, start: &[f64], max_steps: usize) -> (f64, Vec<f64>) {
    let d = points.dim();
    let mut v = start.to_vec();
    let mut best = direct_fourth_moment(points, &v);
    for _ in 0..max_steps {
        let mut g = vec![0.0; d];
        for x in points.rows() {
            let t = dot(&v, x).powi(3);
            for (gi, xi) in g.iter_mut().zip(x) {
                *gi += t * xi;
            }
        }
        let gn = norm2(&g);
        if gn == 0.0 {
            break;
        }
        g.iter_mut().for_each(|c| *c /= gn);
        let val = direct_fourth_moment(points, &g);
        let moved = g.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if val < best {
            break;
        }
        best = val;
        v = g;
        if moved < 1e-13 {
            break;
        }
    }
    (best, v)
}

/// Spherical coordinates to a point on `𝕊^{d−1}`.
fn spherical(angles: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(angles.len() + 1);
    let mut s = 1.0;
    for a in angles {
        v.push(s * a.cos());
        s *= a.sin();
    }
    v.push(s);
    v
}

fn steps(range: f64) -> Vec<f64> {
    let k = (range / GRID_STEP).ceil() as usize;
    (0..=k).map(|i| (i as f64 * GRID_STEP).min(range)).collect()
}

fn grid_search(points: &Points, q: &Quartic) -> (f64, Vec<f64>) {
    use std::f64::consts::{FRAC_PI_2, PI, TAU};
    let d = points.dim();
    let better = |a: (f64, Vec<f64>), b: (f64, Vec<f64>)| if b.0 > a.0 { b } else { a };
    match d {
        1 => (q.eval(&[1.0]), vec![1.0]),
        // Only half the sphere is needed since q(−v) = q(v).
        2 => steps(PI)
            .into_par_iter()
            .map(|a| {
                let v = spherical(&[a]);
                (q.eval(&v), v)
            })
            .reduce(|| (f64::MIN, vec![1.0, 0.0]), better),
        3 => steps(FRAC_PI_2)
            .into_par_iter()
            .map(|a| {
                steps(TAU)
                    .into_iter()
                    .map(|b| {
                        let v = spherical(&[a, b]);
                        (q.eval(&v), v)
                    })
                    .fold((f64::MIN, vec![1.0, 0.0, 0.0]), better)
            })
            .reduce(|| (f64::MIN, vec![1.0, 0.0, 0.0]), better),
        4 => {
            let outer: Vec<(f64, f64)> = steps(FRAC_PI_2)
                .into_iter()
                .flat_map(|a| steps(PI).into_iter().map(move |b| (a, b)))
                .collect();
            let inner = steps(TAU);
            outer
                .into_par_iter()
                .map(|(a, b)| {
                    inner
                        .iter()
                        .map(|&c| {
                            let v = spherical(&[a, b, c]);
                            (q.eval(&v), v)
                        })
                        .fold((f64::MIN, vec![1.0, 0.0, 0.0, 0.0]), better)
                })
                .reduce(|| (f64::MIN, vec![1.0, 0.0, 0.0, 0.0]), better)
        }
        _ => unreachable!("grid search is limited to d <= 4"),
    }
}

/// Maximum of `E_S[⟨v,x⟩⁴]` over unit `v`: grid search followed by ascent
/// for `d ≤ 4`, multi-start ascent (a lower bound) above that.
pub fn brute_force_max_fourth_moment(points: &Points) -> Result<FourthMomentMax> {
    let method = if points.dim() <= GRID_MAX_DIM {
        FourthMomentMethod::Grid
    } else {
        FourthMomentMethod::MultiStart
    };
    brute_force_max_fourth_moment_with(points, method, 0)
}

pub fn brute_force_max_fourth_moment_with(
    points: &Points,
    method: FourthMomentMethod,
    seed: u64,
) -> Result<FourthMomentMax> {
    if points.is_empty() {
        return Err(OracleError::Empty);
    }
    let d = points.dim();
    let (value, v) = match method {
        FourthMomentMethod::Grid => {
            if d > GRID_MAX_DIM {
                return Err(OracleError::DimTooLarge {
                    dim: d,
                    max: GRID_MAX_DIM,
                });
            }
            let q = Quartic::new(points);
            let (gv, start) = grid_search(points, &q);
            let (av, v) = ascend(points, &start, 10_000);
            if av >= gv {
                (av, v)
            } else {
                (direct_fourth_moment(points, &start), start)
            }
        }
        FourthMomentMethod::MultiStart => {
            let mut rng = CtrRng::new(seed, stream_id(purpose::ORACLE, 1));
            let mut starts: Vec<Vec<f64>> = (0..64).map(|_| rng.unit_sphere(d)).collect();
            // Long sample directions are natural candidates for heavy directions.
            let mut by_norm: Vec<&[f64]> = points.rows().filter(|x| norm2(x) > 0.0).collect();
            by_norm.sort_by(|a, b| norm2(b).total_cmp(&norm2(a)));
            starts.extend(by_norm.iter().take(16).map(|x| {
                let n = norm2(x);
                x.iter().map(|c| c / n).collect::<Vec<_>>()
            }));
            starts
                .par_iter()
                .map(|s| ascend(points, s, 10_000))
                .reduce(|| (f64::MIN, vec![0.0; d]), |a, b| if b.0 > a.0 { b } else { a })
        }
    };
    Ok(FourthMomentMax {
        value,
        direction: UnitVector::normalize(&v).expect("ascent stays on the sphere"),
        method,
    })
}

/// Central differences of `f` along the geodesics through `w` in the
/// directions of an orthonormal tangent basis; returns the ambient tangent
/// vector `Σ_k D_k f(w)·b_k`.
pub fn finite_difference_gradient(
    f: impl Fn(&UnitVector) -> f64,
    w: &UnitVector,
    h: f64,
) -> Result<Vec<f64>> {
    if !(1e-8..=1e-4).contains(&h) {
        return Err(OracleError::InvalidStep(h));
    }
    let d = w.dim();
    let mut g = vec![0.0; d];
    if d < 2 {
        return Ok(g);
    }
    let proj = OrthogonalProjector::new(w);
    let mut e = vec![0.0; d - 1];
    for k in 0..d - 1 {
        e.iter_mut().for_each(|c| *c = 0.0);
        e[k] = 1.0;
        let b = proj.lift(&e);
        let plus = f(&w.rotate_towards(&b, h));
        let minus = f(&w.rotate_towards(&b, -h));
        let dk = (plus - minus) / (2.0 * h);
        for (gi, bi) in g.iter_mut().zip(&b) {
            *gi += dk * bi;
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErmMethod {
    /// Exact sweep over the arrangement, `d ≤ 2`.
    Exact,
    /// Arrangement vertices from all point pairs, `d = 3`.
    Pairs,
    /// Random search with local refinement; an upper bound on `opt_S`.
    Search,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErmResult {
    pub w: UnitVector,
    pub opt: f64,
    pub method: ErmMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErmOptions {
    /// Above this many points the pair enumeration at `d = 3` uses only the
    /// first `max_pair_points` rows and the result is flagged as a search.
    pub max_pair_points: usize,
    pub random_candidates: usize,
    pub refine_rounds: usize,
    pub seed: u64,
    /// Extra starting candidates, e.g. a known generating direction.
    #[serde(default)]
    pub hints: Vec<UnitVector>,
}

impl Default for ErmOptions {
    fn default() -> Self {
        Self {
            max_pair_points: 200,
            random_candidates: 4000,
            refine_rounds: 300,
            seed: 0,
            hints: Vec::new(),
        }
    }
}

/// Largest dimension accepted by [`erm_halfspace`].
pub const ERM_MAX_DIM: usize = 8;

pub fn erm_halfspace(ds: &Dataset) -> Result<ErmResult> {
    erm_halfspace_with(ds, &ErmOptions::default())
}

fn best_of(ds: &Dataset, cands: Vec<Vec<f64>>) -> Option<(f64, UnitVector)> {
    cands
        .into_par_iter()
        .filter_map(|c| UnitVector::normalize(&c).ok())
        .map(|u| (ds.zero_one_error(&u), u))
        .reduce_with(|a, b| if b.0 < a.0 { b } else { a })
}

pub fn erm_halfspace_with(ds: &Dataset, opts: &ErmOptions) -> Result<ErmResult> {
    let d = ds.dim();
    if d > ERM_MAX_DIM {
        return Err(OracleError::DimTooLarge {
            dim: d,
            max: ERM_MAX_DIM,
        });
    }
    for h in &opts.hints {
        if h.dim() != d {
            return Err(OracleError::DimMismatch {
                expected: d,
                found: h.dim(),
            });
        }
    }
    let mut cands: Vec<Vec<f64>> = opts.hints.iter().map(|h| h.as_slice().to_vec()).collect();
    let method = match d {
        1 => {
            cands.push(vec![1.0]);
            cands.push(vec![-1.0]);
            ErmMethod::Exact
        }
        2 => {
            // The error is constant between consecutive angles at which w is
            // orthogonal to some point; try each such angle and each midpoint.
            let mut angles = Vec::with_capacity(2 * ds.len());
            for x in ds.points().rows() {
                if x[0] == 0.0 && x[1] == 0.0 {
                    continue;
                }
                cands.push(vec![-x[1], x[0]]);
                cands.push(vec![x[1], -x[0]]);
                let a = x[1].atan2(x[0]);
                angles.push(a + std::f64::consts::FRAC_PI_2);
                angles.push(a - std::f64::consts::FRAC_PI_2);
            }
            let mut angles: Vec<f64> = angles
                .into_iter()
                .map(|a| a.rem_euclid(std::f64::consts::TAU))
                .collect();
            angles.sort_by(f64::total_cmp);
            for (i, a) in angles.iter().enumerate() {
                let b = angles
                    .get(i + 1)
                    .copied()
                    .unwrap_or(angles[0] + std::f64::consts::TAU);
                let m = 0.5 * (a + b);
                cands.push(vec![m.cos(), m.sin()]);
            }
            cands.push(vec![1.0, 0.0]);
            ErmMethod::Exact
        }
        3 => {
            let m = ds.len().min(opts.max_pair_points);
            let eps = 1e-7;
            for i in 0..m {
                for j in (i + 1)..m {
                    let (a, b) = (ds.x(i), ds.x(j));
                    let c = cross(a, b);
                    let cn = norm2(&c);
                    if cn < 1e-12 {
                        continue;
                    }
                    let c: Vec<f64> = c.iter().map(|v| v / cn).collect();
                    let pa = unit_or_zero(&cross(b, &c));
                    let pb = unit_or_zero(&cross(a, &c));
                    for s in [1.0, -1.0] {
                        let base: Vec<f64> = c.iter().map(|v| s * v).collect();
                        cands.push(base.clone());
                        for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                            cands.push(
                                (0..3)
                                    .map(|k| base[k] + eps * (sa * pa[k] + sb * pb[k]))
                                    .collect(),
                            );
                        }
                    }
                }
            }
            if m < ds.len() {
                ErmMethod::Search
            } else {
                ErmMethod::Pairs
            }
        }
        _ => ErmMethod::Search,
    };
    if method == ErmMethod::Search {
        let mut rng = CtrRng::new(opts.seed, stream_id(purpose::ORACLE, 2));
        for _ in 0..opts.random_candidates {
            cands.push(rng.unit_sphere(d));
        }
    }
    let (mut opt, mut w) = best_of(ds, cands).ok_or(OracleError::Empty)?;
    if method == ErmMethod::Search {
        let mut rng = CtrRng::new(opts.seed, stream_id(purpose::ORACLE, 3));
        let mut radius = 0.2;
        for _ in 0..opts.refine_rounds {
            let trials: Vec<Vec<f64>> = (0..16)
                .map(|_| {
                    let z = rng.unit_sphere(d);
                    w.as_slice().iter().zip(&z).map(|(a, b)| a + radius * b).collect()
                })
                .collect();
            match best_of(ds, trials) {
                Some((e, u)) if e < opt => {
                    opt = e;
                    w = u;
                }
                _ => radius = (radius * 0.7).max(1e-4),
            }
        }
    }
    Ok(ErmResult { w, opt, method })
}

fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn unit_or_zero(v: &[f64]) -> Vec<f64> {
    let n = norm2(v);
    if n > 0.0 {
        v.iter().map(|c| c / n).collect()
    } else {
        vec![0.0; v.len()]
    }
}

/// The three terms of the surrogate gradient lower bound, evaluated on the
/// empirical distribution with the ramp's own constants: `ℓ' = 1/σ` on the
/// linear piece and `ℓ' ≤ 3/σ` everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundTerms {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub theta: f64,
    /// Error of `w*` on the sample, standing in for `opt`.
    pub opt: f64,
}

impl LowerBoundTerms {
    pub fn massart_bound(&self, eta: f64) -> f64 {
        (1.0 - 2.0 * eta) * self.a1 - self.a2
    }

    pub fn agnostic_bound(&self) -> f64 {
        self.a1 - self.a2 - self.a3
    }
}

pub fn gradient_lower_bound_terms(
    ds: &Dataset,
    w: &UnitVector,
    w_star: &UnitVector,
    sigma: f64,
    alpha: f64,
) -> Result<LowerBoundTerms> {
    let d = ds.dim();
    for u in [w, w_star] {
        if u.dim() != d {
            return Err(OracleError::DimMismatch {
                expected: d,
                found: u.dim(),
            });
        }
    }
    if !(sigma > 0.0) {
        return Err(OracleError::Precondition(format!("sigma must be positive, got {sigma}")));
    }
    let c = w.dot(w_star.as_slice());
    // v is the unit vector in span(w, w*) orthogonal to w with ⟨v, w*⟩ < 0.
    let resid: Vec<f64> = w_star
        .as_slice()
        .iter()
        .zip(w.as_slice())
        .map(|(s, a)| -(s - c * a))
        .collect();
    let rn = norm2(&resid);
    if rn < 1e-12 {
        return Err(OracleError::DegenerateAngle);
    }
    let v: Vec<f64> = resid.iter().map(|r| r / rn).collect();
    let theta = c.clamp(-1.0, 1.0).acos();
    if theta >= std::f64::consts::FRAC_PI_2 {
        return Err(OracleError::Precondition(format!(
            "angle {theta} between w and w* must be below pi/2"
        )));
    }
    let alpha_min = sigma / (2.0 * theta.tan());
    if alpha < alpha_min {
        return Err(OracleError::Precondition(format!(
            "alpha {alpha} must be at least sigma/(2 tan theta) = {alpha_min}"
        )));
    }
    let n = ds.len() as f64;
    let (mut p1, mut p2, mut m2, mut errs) = (0usize, 0usize, 0.0, 0usize);
    for (x, y) in ds.iter() {
        let xw = w.dot(x).abs();
        let xv = dot(&v, x);
        if xw <= sigma / 6.0 && xv.abs() >= alpha {
            p1 += 1;
        }
        if xw <= sigma / 2.0 {
            p2 += 1;
            m2 += xv * xv;
        }
        if f64::from(sign(w_star.dot(x))) != y {
            errs += 1;
        }
    }
    let opt = errs as f64 / n;
    Ok(LowerBoundTerms {
        a1: alpha / sigma * p1 as f64 / n,
        a2: RAMP_SLOPE_BOUND / (2.0 * theta.tan()) * p2 as f64 / n,
        a3: 2.0 * RAMP_SLOPE_BOUND / sigma * opt.sqrt() * (m2 / n).sqrt(),
        theta,
        opt,
    })
}

/// The four strip quantities for a direction `w`, a unit `v ⟂ w`, a pair of
/// unit vectors `u, u′`, a width `σ` and an offset `c`:
/// `Pr[|⟨w,x⟩| ≤ σ]`, `E[⟨v,x⟩²·1{|⟨w,x⟩| ≤ σ}]`, `E[⟨u,x⟩²⟨u′,x⟩²]` and
/// `E[⟨v,x⟩²·1{|⟨w,x⟩| ∈ [c, c+σ]}]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripQuery<'a> {
    pub w: &'a [f64],
    pub v: &'a [f64],
    pub u: &'a [f64],
    pub u_prime: &'a [f64],
    pub sigma: f64,
    pub offset: f64,
}

pub fn empirical_strip_statistics(points: &Points, q: &StripQuery<'_>) -> Result<[f64; 4]> {
    if points.is_empty() {
        return Err(OracleError::Empty);
    }
    let mut s = [0.0; 4];
    for x in points.rows() {
        let xw = dot(q.w, x).abs();
        let xv2 = dot(q.v, x).powi(2);
        if xw <= q.sigma {
            s[0] += 1.0;
            s[1] += xv2;
        }
        s[2] += dot(q.u, x).powi(2) * dot(q.u_prime, x).powi(2);
        if xw >= q.offset && xw <= q.offset + q.sigma {
            s[3] += xv2;
        }
    }
    let n = points.len() as f64;
    Ok(s.map(|t| t / n))
}

/// Standard Gaussian values of the four strip quantities together with the
/// standard deviation of a single draw of each, so `sd/√n` is the standard
/// error of an `n`-sample average.
pub fn gaussian_strip_statistics(q: &StripQuery<'_>) -> ([f64; 4], [f64; 4]) {
    let phi = Normal::new(0.0, 1.0).expect("standard normal");
    let p = 2.0 * phi.cdf(q.sigma) - 1.0;
    let band = 2.0 * (phi.cdf(q.offset + q.sigma) - phi.cdf(q.offset));
    let r = dot(q.u, q.u_prime);
    let cross = 1.0 + 2.0 * r * r;
    // E[a⁴b⁴] for standard normals with correlation r.
    let cross_sq = 9.0 + 72.0 * r * r + 24.0 * r.powi(4);
    let mean = [p, p, cross, band];
    let var = [
        p * (1.0 - p),
        3.0 * p - p * p,
        cross_sq - cross * cross,
        3.0 * band - band * band,
    ];
    (mean, var.map(f64::sqrt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{label_dataset, sample_marginal, MarginalSpec, NoiseModel};
    use crate::surrogate::{surrogate_gradient, surrogate_loss, RampParams};

    fn pts(rows: &[Vec<f64>]) -> Points {
        Points::from_rows(rows).unwrap()
    }

    #[test]
    fn multinomial_counts() {
        assert_eq!(multinomial(&[0, 0, 0, 0]), 1.0);
        assert_eq!(multinomial(&[0, 0, 1, 1]), 6.0);
        assert_eq!(multinomial(&[0, 1, 2, 3]), 24.0);
        assert_eq!(multinomial(&[0, 0, 0, 2]), 4.0);
    }

    #[test]
    fn one_dimensional_value() {
        let p = pts(&[vec![2.0], vec![-1.0]]);
        let r = brute_force_max_fourth_moment(&p).unwrap();
        assert_eq!(r.value, 8.5);
    }

    #[test]
    fn two_point_example() {
        let p = pts(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
        let r = brute_force_max_fourth_moment(&p).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-12, "{}", r.value);
        assert!(r.direction.as_slice()[0].abs() > 1.0 - 1e-9);
        // Rotated copy.
        let (s, c) = 0.7f64.sin_cos();
        let rot = pts(&[vec![c, s], vec![c, s], vec![-s, c]]);
        let r2 = brute_force_max_fourth_moment(&rot).unwrap();
        assert!((r2.value - r.value).abs() < 1e-4);
    }

    #[test]
    fn grid_rejects_large_dimension() {
        let p = pts(&[vec![1.0; 5]]);
        assert!(matches!(
            brute_force_max_fourth_moment_with(&p, FourthMomentMethod::Grid, 0),
            Err(OracleError::DimTooLarge { .. })
        ));
        let r = brute_force_max_fourth_moment(&p).unwrap();
        assert!(r.lower_bound_only());
        assert!((r.value - 25.0).abs() < 1e-9);
    }

    #[test]
    fn quartic_matches_direct_evaluation() {
        let p = sample_marginal(&MarginalSpec::gaussian(4), 50, 2).unwrap();
        let q = Quartic::new(&p);
        let v = [0.5, -0.5, 0.5, 0.5];
        assert!((q.eval(&v) - direct_fourth_moment(&p, &v)).abs() < 1e-12);
    }

    #[test]
    fn finite_differences_of_simple_fields() {
        let w = UnitVector::normalize(&[0.2, -0.5, 0.8]).unwrap();
        let g = finite_difference_gradient(|_| 3.0, &w, 1e-5).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
        let c = [1.0, 2.0, -0.5];
        let g = finite_difference_gradient(|u| u.dot(&c), &w, 1e-5).unwrap();
        let wc = w.dot(&c);
        for k in 0..3 {
            assert!((g[k] - (c[k] - wc * w.as_slice()[k])).abs() < 1e-9);
        }
        assert!(matches!(
            finite_difference_gradient(|_| 0.0, &w, 1e-3),
            Err(OracleError::InvalidStep(_))
        ));
    }

    #[test]
    fn surrogate_gradient_matches_finite_differences() {
        let p = sample_marginal(&MarginalSpec::gaussian(4), 150, 9).unwrap();
        let target = UnitVector::axis(4, 0);
        let ds = label_dataset(&p, &NoiseModel::massart(0.2, target), 4).unwrap();
        let w = UnitVector::normalize(&[0.3, 0.9, -0.2, 0.1]).unwrap();
        let rp = RampParams::new(0.4).unwrap();
        let fd = finite_difference_gradient(|u| surrogate_loss(u, &ds, rp).unwrap(), &w, 1e-6)
            .unwrap();
        let g = surrogate_gradient(&w, &ds, rp).unwrap();
        let diff: Vec<f64> = fd.iter().zip(&g).map(|(a, b)| a - b).collect();
        assert!(norm2(&diff) <= 1e-5 * norm2(&g).max(1e-12), "{fd:?} {g:?}");
    }

    #[test]
    fn erm_clean_data_is_zero() {
        for d in [1, 2, 3, 5] {
            let p = sample_marginal(&MarginalSpec::gaussian(d), 120, d as u64).unwrap();
            let mut c = vec![0.0; d];
            c[0] = 1.0;
            if d > 1 {
                c[1] = -0.6;
            }
            let target = UnitVector::normalize(&c).unwrap();
            let ds = label_dataset(&p, &NoiseModel::clean(target.clone()), 1).unwrap();
            let opts = ErmOptions {
                hints: vec![target],
                ..ErmOptions::default()
            };
            let r = erm_halfspace_with(&ds, &opts).unwrap();
            assert_eq!(r.opt, 0.0, "d = {d}");
            if d <= 3 {
                let r = erm_halfspace(&ds).unwrap();
                assert_eq!(r.opt, 0.0, "d = {d} without hints");
            }
        }
    }

    #[test]
    fn erm_boundary_convention() {
        let p = pts(&[vec![1.0, 0.0], vec![-1.0, 0.0]]);
        let ds = Dataset::new(p, vec![1, 1]).unwrap();
        let r = erm_halfspace(&ds).unwrap();
        assert_eq!(r.opt, 0.0);
        assert_eq!(r.method, ErmMethod::Exact);
    }

    #[test]
    fn erm_rejects_large_dimension() {
        let p = pts(&[vec![1.0; 9]]);
        let ds = Dataset::new(p, vec![1]).unwrap();
        assert!(matches!(erm_halfspace(&ds), Err(OracleError::DimTooLarge { .. })));
    }

    #[test]
    fn erm_three_dimensional_matches_exhaustive_search() {
        // Tiny instance: compare against a dense sphere scan.
        let p = sample_marginal(&MarginalSpec::gaussian(3), 12, 4).unwrap();
        let labels = vec![1, -1, 1, 1, -1, -1, 1, -1, 1, 1, 1, -1];
        let ds = Dataset::new(p, labels).unwrap();
        let r = erm_halfspace(&ds).unwrap();
        let mut rng = CtrRng::new(8, 0);
        let scan = (0..200_000)
            .map(|_| ds.zero_one_error(&UnitVector::normalize(&rng.unit_sphere(3)).unwrap()))
            .fold(1.0, f64::min);
        assert!(r.opt <= scan, "{} vs {}", r.opt, scan);
        assert_eq!(r.method, ErmMethod::Pairs);
    }

    #[test]
    fn lower_bound_terms_vanish_as_documented() {
        let p = pts(&[vec![5.0, 1.0], vec![-4.0, 2.0], vec![3.0, -1.0]]);
        let w = UnitVector::axis(2, 0);
        let ws = UnitVector::normalize(&[1.0, 0.3]).unwrap();
        let labels: Vec<i8> = p.rows().map(|x| sign(ws.dot(x))).collect();
        let ds = Dataset::new(p, labels).unwrap();
        let t = gradient_lower_bound_terms(&ds, &w, &ws, 0.1, 1.0).unwrap();
        assert_eq!(t.a2, 0.0);
        assert_eq!(t.a3, 0.0);
        assert_eq!(t.opt, 0.0);
        assert!(matches!(
            gradient_lower_bound_terms(&ds, &w, &w, 0.1, 1.0),
            Err(OracleError::DegenerateAngle)
        ));
        assert!(matches!(
            gradient_lower_bound_terms(&ds, &w, &-&w, 0.1, 1.0),
            Err(OracleError::DegenerateAngle)
        ));
    }

    #[test]
    fn gaussian_strip_values() {
        let w = [1.0, 0.0, 0.0];
        let v = [0.0, 1.0, 0.0];
        let q = StripQuery {
            w: &w,
            v: &v,
            u: &v,
            u_prime: &v,
            sigma: 0.1,
            offset: 0.0,
        };
        let (m, sd) = gaussian_strip_statistics(&q);
        assert!((m[0] - 0.079_655).abs() < 1e-5);
        assert_eq!(m[0], m[1]);
        assert_eq!(m[2], 3.0);
        assert!((sd[2] * sd[2] - 96.0).abs() < 1e-12);
        assert_eq!(m[3], m[0]);
    }
}
