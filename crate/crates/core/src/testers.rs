//! Statistical testers over a fixed sample: spectral, strip probability,
//! local halfspace disagreement, weak anti-concentration and the
//! stationary-point structure test.
//!
//! All testers are deterministic functions of their inputs. Constants that
//! the analysis leaves unspecified are collapsed into the scale
//! `K = C1·λ^C1` of [`TesterConfig::scale`] and into `C_hyper`.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::Points;
use crate::numerics::{min_eigenvalue, operator_norm, OrthogonalProjector, SymMatrix, UnitVector};
use crate::sos_hyper::hypercontractivity_test;
use crate::verdict::TesterVerdict;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TesterError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
}

pub type Result<T> = std::result::Result<T, TesterError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TesterConfig {
    pub lambda: f64,
    pub gamma: f64,
    pub delta: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_c_hyper")]
    pub c_hyper: f64,
    /// Duality-gap tolerance of the SOS solver, relative to the largest
    /// fourth-moment entry.
    #[serde(default = "default_sdp_tol")]
    pub sdp_tol: f64,
}

fn default_c1() -> f64 {
    4.0
}

fn default_c_hyper() -> f64 {
    10.0
}

fn default_sdp_tol() -> f64 {
    1e-7
}

impl Default for TesterConfig {
    fn default() -> Self {
        Self::new(1.0, 1.0)
    }
}

impl TesterConfig {
    pub fn new(lambda: f64, gamma: f64) -> Self {
        Self {
            lambda,
            gamma,
            delta: 0.1,
            c1: default_c1(),
            c_hyper: default_c_hyper(),
            sdp_tol: default_sdp_tol(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(TesterError::InvalidConfig(what.to_string()));
        if !(self.lambda >= 1.0) || !self.lambda.is_finite() {
            return bad("lambda must be a finite number at least 1");
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return bad("gamma must be positive");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        if !(self.c1 > 0.0) || !self.c1.is_finite() {
            return bad("c1 must be positive");
        }
        if !(self.c_hyper > 1.0) || !self.c_hyper.is_finite() {
            return bad("c_hyper must exceed 1");
        }
        if !(self.sdp_tol > 0.0) {
            return bad("sdp_tol must be positive");
        }
        Ok(())
    }

    /// `K = C1·λ^C1`.
    pub fn scale(&self) -> f64 {
        self.c1 * self.lambda.powf(self.c1)
    }
}

/// Noise regime a stationary point is interpreted under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseRegime {
    Massart { eta: f64 },
    Agnostic,
}

impl NoiseRegime {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseRegime::Massart { eta } if !(0.0..0.5).contains(&eta) => Err(
                TesterError::InvalidConfig(format!("Massart rate must lie in [0, 1/2), got {eta}")),
            ),
            _ => Ok(()),
        }
    }

    /// `1 − 2η`, or 1 for agnostic noise.
    pub fn margin_factor(&self) -> f64 {
        match *self {
            NoiseRegime::Massart { eta } => 1.0 - 2.0 * eta,
            NoiseRegime::Agnostic => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralMode {
    Min,
    Max,
}

fn check_dim(points: &Points, w: &UnitVector) -> Result<()> {
    if points.dim() != w.dim() {
        return Err(TesterError::DimMismatch {
            expected: w.dim(),
            found: points.dim(),
        });
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(TesterError::Precondition(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// Empirical second-moment matrix `E_S[zzᵀ]`.
pub fn second_moment_matrix(points: &Points) -> SymMatrix {
    let mut m = SymMatrix::zeros(points.dim());
    if points.is_empty() {
        return m;
    }
    let wt = 1.0 / points.len() as f64;
    for z in points.rows() {
        m.add_outer(z, wt);
    }
    m
}

/// Spectral test on an already-formed matrix. Min mode accepts iff
/// `λ_min(M) > θ/2`; max mode accepts iff `‖M‖_op < 2θ`.
pub fn spectral_matrix_test(
    name: &str,
    m: &SymMatrix,
    theta: f64,
    mode: SpectralMode,
) -> TesterVerdict {
    let mut v = TesterVerdict::new(name);
    v.diag("theta", theta);
    match mode {
        SpectralMode::Min => {
            let cut = theta / 2.0;
            let val = min_eigenvalue(m);
            v.diag("cutoff", cut);
            match val {
                Ok(e) => {
                    v.diag("min_eigenvalue", e);
                    if !(e > cut) {
                        v.reject(format!("minimum eigenvalue {e:.6e} not above {cut:.6e}"));
                    }
                }
                Err(e) => {
                    v.reject(format!("eigensolver: {e}"));
                }
            }
        }
        SpectralMode::Max => {
            let cut = 2.0 * theta;
            v.diag("cutoff", cut);
            match operator_norm(m) {
                Ok(e) => {
                    v.diag("operator_norm", e);
                    if !(e < cut) {
                        v.reject(format!("operator norm {e:.6e} not below {cut:.6e}"));
                    }
                }
                Err(e) => {
                    v.reject(format!("eigensolver: {e}"));
                }
            }
        }
    }
    v
}

/// Spectral tester on `M_S = E_S[zzᵀ]`.
pub fn spectral_test(points: &Points, theta: f64, mode: SpectralMode) -> Result<TesterVerdict> {
    check_positive("theta", theta)?;
    let mut v = spectral_matrix_test("spectral", &second_moment_matrix(points), theta, mode);
    v.diag("samples", points.len() as f64);
    Ok(v)
}

/// Exact fraction of points with `|⟨w,x⟩| ≤ σ`; zero for an empty set.
pub fn strip_probability(points: &Points, w: &UnitVector, sigma: f64) -> Result<f64> {
    check_dim(points, w)?;
    if points.is_empty() {
        return Ok(0.0);
    }
    let hits = points.rows().filter(|x| w.dot(x).abs() <= sigma).count();
    Ok(hits as f64 / points.len() as f64)
}

/// Projections onto `w⊥` of the points with `|⟨w,x⟩| ≤ σ`, in the
/// deterministic basis of [`OrthogonalProjector`].
pub fn projected_strip(points: &Points, w: &UnitVector, sigma: f64) -> Result<Points> {
    check_dim(points, w)?;
    let proj = OrthogonalProjector::new(w);
    let k = w.dim() - 1;
    let mut data = Vec::new();
    let mut buf = vec![0.0; k];
    for x in points.rows() {
        if w.dot(x).abs() <= sigma {
            proj.project_into(x, &mut buf);
            data.extend_from_slice(&buf);
        }
    }
    Ok(Points::new(k, data).expect("projections of finite points are finite"))
}

/// `E_S[(proj x)(proj x)ᵀ·1{|⟨w,x⟩| ≤ σ}]`, normalized by the full sample size.
pub fn strip_moment_matrix(points: &Points, w: &UnitVector, sigma: f64) -> Result<SymMatrix> {
    let inside = projected_strip(points, w, sigma)?;
    let mut m = SymMatrix::zeros(w.dim() - 1);
    if points.is_empty() {
        return Ok(m);
    }
    let wt = 1.0 / points.len() as f64;
    for z in inside.rows() {
        m.add_outer(z, wt);
    }
    Ok(m)
}

/// Band matrix `Σ_{i≥2} E_S[zzᵀ·1{|⟨w,x⟩| ∈ [(i−1)θ, iθ)}]/(i−1)²`. Only
/// bands holding a sample contribute. Also returns the number of occupied
/// bands.
pub fn band_matrix(points: &Points, w: &UnitVector, theta: f64) -> Result<(SymMatrix, usize)> {
    check_dim(points, w)?;
    let proj = OrthogonalProjector::new(w);
    let mut m = SymMatrix::zeros(w.dim() - 1);
    if points.is_empty() {
        return Ok((m, 0));
    }
    let inv_n = 1.0 / points.len() as f64;
    let mut z = vec![0.0; w.dim() - 1];
    let mut bands = std::collections::BTreeSet::new();
    for x in points.rows() {
        let k = (w.dot(x).abs() / theta).floor();
        if k >= 1.0 {
            bands.insert(k as u64);
            proj.project_into(x, &mut z);
            m.add_outer(&z, inv_n / (k * k));
        }
    }
    Ok((m, bands.len()))
}

fn require_projection_dim(w: &UnitVector) -> Result<()> {
    if w.dim() < 2 {
        return Err(TesterError::Precondition(
            "the orthogonal complement of w is empty; dimension must be at least 2".into(),
        ));
    }
    Ok(())
}

/// Local halfspace disagreement tester.
///
/// On acceptance every unit `w′` within angle θ of `w` disagrees with `w` on
/// at most `5Kθ` of the sample; the sharper measured bound
/// `strip + 4‖M‖` is recorded as `certified_disagreement`.
pub fn local_disagreement_test(
    points: &Points,
    w: &UnitVector,
    theta: f64,
    cfg: &TesterConfig,
) -> Result<TesterVerdict> {
    cfg.validate()?;
    if !(theta > 0.0 && theta <= FRAC_PI_4) {
        return Err(TesterError::Precondition(format!(
            "theta must lie in (0, pi/4], got {theta}"
        )));
    }
    require_projection_dim(w)?;
    let k = cfg.scale();
    let bound = k * theta;
    let mut v = TesterVerdict::new("local_disagreement");
    v.diag("theta", theta)
        .diag("scale", k)
        .diag("samples", points.len() as f64)
        .diag("disagreement_bound", 5.0 * bound);

    let p = strip_probability(points, w, theta)?;
    let mut strip = TesterVerdict::new("strip");
    strip.diag("probability", p).diag("upper", bound);
    if p > bound {
        strip.reject(format!("strip mass {p:.6} exceeds {bound:.6}"));
    }
    v.push(strip);
    if !v.accepted {
        return Ok(v);
    }

    let (m, bands) = band_matrix(points, w, theta)?;
    v.diag("bands", bands as f64);
    let spectral = spectral_matrix_test("band_spectral", &m, bound / 2.0, SpectralMode::Max);
    let norm = spectral.get("operator_norm").unwrap_or(f64::INFINITY);
    v.push(spectral);
    if v.accepted {
        v.diag("certified_disagreement", p + 4.0 * norm);
    }
    Ok(v)
}

/// Weak anti-concentration tester around the hyperplane `w⊥`.
///
/// On acceptance, every unit `v ⟂ w` has
/// `Pr_S[|⟨v,x⟩| ≥ certified_margin | |⟨w,x⟩| ≤ σ] ≥ certified_mass`, by
/// Paley–Zygmund applied to `⟨v,x⟩²` within the strip. The constants-only
/// versions of both numbers are recorded as `implied_margin`/`implied_mass`.
pub fn weak_anticoncentration_test(
    points: &Points,
    w: &UnitVector,
    sigma: f64,
    cfg: &TesterConfig,
) -> Result<TesterVerdict> {
    cfg.validate()?;
    check_positive("sigma", sigma)?;
    if sigma > 1.0 / (2.0 * cfg.lambda) {
        return Err(TesterError::Precondition(format!(
            "sigma {sigma} exceeds 1/(2 lambda) = {}",
            1.0 / (2.0 * cfg.lambda)
        )));
    }
    require_projection_dim(w)?;
    let k = cfg.scale();
    let mut v = TesterVerdict::new("weak_anticoncentration");
    v.diag("sigma", sigma)
        .diag("scale", k)
        .diag("samples", points.len() as f64)
        .diag("implied_margin", 1.0 / (2.0 * k))
        .diag(
            "implied_mass",
            1.0 / (16.0 * k.powi(4) * (cfg.c_hyper - 1.0) * cfg.gamma.powi(4)),
        );

    let p = strip_probability(points, w, sigma)?;
    let upper = 2.0 * sigma * k;
    let mut strip = TesterVerdict::new("strip");
    strip.diag("probability", p).diag("upper", upper);
    if p == 0.0 {
        strip.reject("empty strip");
    } else if p > upper {
        strip.reject(format!("strip mass {p:.6} exceeds {upper:.6}"));
    }
    v.push(strip);
    if !v.accepted {
        return Ok(v);
    }

    let inside = projected_strip(points, w, sigma)?;
    let m = second_moment_matrix(&inside).scaled(p);
    let spectral = spectral_matrix_test("strip_spectral", &m, 2.0 * sigma / k, SpectralMode::Min);
    let m_min = spectral.get("min_eigenvalue").unwrap_or(0.0);
    v.push(spectral);
    if !v.accepted {
        return Ok(v);
    }

    let hyper = hypercontractivity_test(&inside, cfg.gamma, cfg.c_hyper, cfg.sdp_tol);
    let fourth = hyper.get("sdp_value").unwrap_or(f64::INFINITY);
    v.push(hyper);
    if v.accepted {
        let second = m_min / p;
        v.diag("certified_margin", (second / 2.0).sqrt());
        if fourth > 0.0 {
            v.diag("certified_mass", 0.25 * second * second / fourth);
        }
    }
    Ok(v)
}

/// Structure test certifying that stationary points of `L_σ` are close in
/// angle to the empirical optimum. The outcome depends only on the points;
/// the noise regime sets the recorded angle bound
/// `K(1+γ⁴)σ/(1−2η)` (or `K(1+γ⁴)σ` for agnostic noise).
pub fn stationary_point_test(
    points: &Points,
    w: &UnitVector,
    sigma: f64,
    noise: NoiseRegime,
    cfg: &TesterConfig,
) -> Result<TesterVerdict> {
    cfg.validate()?;
    noise.validate()?;
    check_positive("sigma", sigma)?;
    require_projection_dim(w)?;
    let k = cfg.scale();
    let g4 = cfg.gamma.powi(4);
    let mut v = TesterVerdict::new("stationary_point");
    v.diag("sigma", sigma)
        .diag("scale", k)
        .diag("samples", points.len() as f64)
        .diag("sigma_within_precondition", f64::from(u8::from(sigma <= 1.0 / k)))
        .diag("angle_bound", k * (1.0 + g4) * sigma / noise.margin_factor());

    let p_inner = strip_probability(points, w, sigma / 6.0)?;
    let p_outer = strip_probability(points, w, sigma / 2.0)?;
    let lower = sigma / k;
    let upper = sigma * k;
    let mut strip = TesterVerdict::new("strip");
    strip
        .diag("inner_probability", p_inner)
        .diag("outer_probability", p_outer)
        .diag("lower", lower)
        .diag("upper", upper);
    if p_inner == 0.0 {
        strip.reject("empty strip");
    } else if p_inner <= lower {
        strip.reject(format!("inner strip mass {p_inner:.6e} not above {lower:.6e}"));
    } else if p_outer > upper {
        strip.reject(format!("outer strip mass {p_outer:.6} exceeds {upper:.6}"));
    }
    v.push(strip);
    if !v.accepted {
        return Ok(v);
    }

    let m_plus = strip_moment_matrix(points, w, sigma / 2.0)?;
    v.push(spectral_matrix_test("outer_spectral", &m_plus, upper / 2.0, SpectralMode::Max));
    if !v.accepted {
        return Ok(v);
    }
    let m_minus = strip_moment_matrix(points, w, sigma / 6.0)?;
    v.push(spectral_matrix_test("inner_spectral", &m_minus, 2.0 * lower, SpectralMode::Min));
    if !v.accepted {
        return Ok(v);
    }

    let inside = projected_strip(points, w, sigma)?;
    v.push(hypercontractivity_test(&inside, cfg.gamma, cfg.c_hyper, cfg.sdp_tol));
    Ok(v)
}

/// Both sides of the Paley–Zygmund inequality on an empirical sample of a
/// nonnegative variable: `(Pr[Z > E[Z]/2], E[Z]²/(4·E[Z²]))`. The right side
/// is zero when `Z ≡ 0`.
pub fn paley_zygmund_sides(z: &[f64]) -> (f64, f64) {
    if z.is_empty() {
        return (0.0, 0.0);
    }
    let n = z.len() as f64;
    let m1 = z.iter().sum::<f64>() / n;
    let m2 = z.iter().map(|v| v * v).sum::<f64>() / n;
    let lhs = z.iter().filter(|&&v| v > m1 / 2.0).count() as f64 / n;
    let rhs = if m2 > 0.0 { 0.25 * m1 * m1 / m2 } else { 0.0 };
    (lhs, rhs)
}
