use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DistributionsError, Points, Result};
use crate::numerics::UnitVector;
use crate::rng::{purpose, stream_id, CtrRng};

/// Marginal families. All nice families are isotropic (identity covariance).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginalKind {
    StandardGaussian,
    /// Independent Laplace coordinates with scale `1/√2`.
    ProductLaplace,
    /// Uniform on the ball of radius `√(d+2)`.
    UniformBall,
    /// Uniform on the cube `[−√3, √3]^d`.
    UniformCube,
    /// Multivariate Student-t with `nu` degrees of freedom, rescaled to unit
    /// covariance when `nu > 2`.
    StudentT { nu: f64 },
    /// `±spread·e₁` with probability 1/2 each.
    TwoPointMass { spread: f64 },
    /// `g·direction` with `g ~ N(0, 1)`.
    LineMass { direction: Vec<f64> },
    /// Standard Gaussian where each row is independently replaced, with
    /// probability `weight`, by `±spread·e₁`.
    SpikedGaussian { weight: f64, spread: f64 },
}

impl MarginalKind {
    pub const NAMES: [&'static str; 8] = [
        "standard_gaussian",
        "product_laplace",
        "uniform_ball",
        "uniform_cube",
        "student_t",
        "two_point_mass",
        "line_mass",
        "spiked_gaussian",
    ];

    /// Looks up a parameter-free family by name.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "standard_gaussian" | "gaussian" => Ok(Self::StandardGaussian),
            "product_laplace" | "laplace" => Ok(Self::ProductLaplace),
            "uniform_ball" | "ball" => Ok(Self::UniformBall),
            "uniform_cube" | "cube" => Ok(Self::UniformCube),
            other if Self::NAMES.contains(&other) => Err(DistributionsError::InvalidParameter(
                format!("marginal kind '{other}' needs parameters"),
            )),
            other => Err(DistributionsError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalSpec {
    #[serde(flatten)]
    pub kind: MarginalKind,
    pub dim: usize,
}

impl MarginalSpec {
    pub fn new(kind: MarginalKind, dim: usize) -> Self {
        Self { kind, dim }
    }

    pub fn gaussian(dim: usize) -> Self {
        Self::new(MarginalKind::StandardGaussian, dim)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(DistributionsError::InvalidParameter("dim must be positive".into()));
        }
        match &self.kind {
            MarginalKind::StudentT { nu } if !(*nu > 0.0) => Err(
                DistributionsError::InvalidParameter(format!("student_t nu must be positive, got {nu}")),
            ),
            MarginalKind::TwoPointMass { spread } if !spread.is_finite() => Err(
                DistributionsError::InvalidParameter("two_point_mass spread must be finite".into()),
            ),
            MarginalKind::LineMass { direction } if direction.len() != self.dim => {
                Err(DistributionsError::DimMismatch {
                    expected: self.dim,
                    found: direction.len(),
                })
            }
            MarginalKind::LineMass { direction } => UnitVector::normalize(direction)
                .map(|_| ())
                .map_err(|_| DistributionsError::InvalidParameter("line_mass direction must be nonzero".into())),
            MarginalKind::SpikedGaussian { weight, spread }
                if !(0.0..=1.0).contains(weight) || !spread.is_finite() =>
            {
                Err(DistributionsError::InvalidParameter(
                    "spiked_gaussian needs weight in [0, 1] and finite spread".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    /// The niceness parameter λ for families that have one.
    ///
    /// Computed from the bounded-spectrum and two-dimensional density
    /// conditions: the smallest λ ≥ 1 with `q(r) ≥ 1/λ` for `r ≤ 1/λ` and
    /// `sup q ≤ λ`, where `q` is the (worst) two-dimensional marginal density.
    /// The tail-integral condition is not evaluated. Student-t is only
    /// claimed for `nu > 4`.
    pub fn claimed_lambda(&self) -> Option<f64> {
        let d = self.dim;
        let q: Box<dyn Fn(f64) -> f64> = match &self.kind {
            MarginalKind::StandardGaussian => Box::new(|r: f64| (-r * r / 2.0).exp() / (2.0 * PI)),
            MarginalKind::ProductLaplace => Box::new(|r: f64| 0.5 * (-2.0 * r).exp()),
            MarginalKind::UniformCube => Box::new(|_r: f64| 1.0 / 12.0),
            MarginalKind::UniformBall => {
                if d < 2 {
                    return Some(1.0);
                }
                let r2 = (d + 2) as f64;
                let d = d as f64;
                Box::new(move |r: f64| {
                    let t = (1.0 - r * r / r2).max(0.0);
                    d / (2.0 * PI * r2) * t.powf((d - 2.0) / 2.0)
                })
            }
            MarginalKind::StudentT { nu } if *nu > 4.0 => {
                let nu = *nu;
                let s2 = (nu - 2.0) / nu;
                Box::new(move |r: f64| {
                    (1.0 + r * r / (nu * s2)).powf(-(nu + 2.0) / 2.0) / (2.0 * PI * s2)
                })
            }
            _ => return None,
        };
        if d < 2 {
            return Some(1.0);
        }
        // q is radially nonincreasing for every family above, so the two
        // density conditions reduce to q(1/λ) ≥ 1/λ and q(0) ≤ λ.
        let ok = |lam: f64| q(1.0 / lam) >= 1.0 / lam && q(0.0) <= lam;
        let (mut lo, mut hi) = (1.0, 1e4);
        if ok(lo) {
            return Some(1.0);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }

    /// Poincaré constant γ for families that have one.
    pub fn claimed_gamma(&self) -> Option<f64> {
        match &self.kind {
            MarginalKind::StandardGaussian => Some(1.0),
            // 1-d Laplace with scale b has Poincaré constant 4b²; tensorizes.
            MarginalKind::ProductLaplace => Some(2.0),
            // Interval of length L: (L/π)².
            MarginalKind::UniformCube => Some(12.0 / (PI * PI)),
            // Convex body of diameter D: D²/π².
            MarginalKind::UniformBall => Some(4.0 * (self.dim + 2) as f64 / (PI * PI)),
            _ => None,
        }
    }

    fn sample_row(&self, rng: &mut CtrRng, out: &mut [f64]) {
        let d = self.dim;
        match &self.kind {
            MarginalKind::StandardGaussian => out.iter_mut().for_each(|v| *v = rng.normal()),
            MarginalKind::ProductLaplace => {
                let b = std::f64::consts::FRAC_1_SQRT_2;
                for v in out.iter_mut() {
                    let u = rng.uniform() - 0.5;
                    let s = if u < 0.0 { -1.0 } else { 1.0 };
                    *v = -b * s * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln();
                }
            }
            MarginalKind::UniformCube => {
                let a = 3f64.sqrt();
                out.iter_mut().for_each(|v| *v = rng.uniform_range(-a, a));
            }
            MarginalKind::UniformBall => {
                let dir = rng.unit_sphere(d);
                let radius = ((d + 2) as f64).sqrt() * rng.uniform().powf(1.0 / d as f64);
                for (v, u) in out.iter_mut().zip(dir) {
                    *v = radius * u;
                }
            }
            MarginalKind::StudentT { nu } => {
                let chi2 = 2.0 * rng.gamma(nu / 2.0);
                let scale = if *nu > 2.0 { ((nu - 2.0) / nu).sqrt() } else { 1.0 };
                let f = scale * (nu / chi2.max(f64::MIN_POSITIVE)).sqrt();
                out.iter_mut().for_each(|v| *v = f * rng.normal());
            }
            MarginalKind::TwoPointMass { spread } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                out[0] = if rng.bernoulli(0.5) { *spread } else { -*spread };
            }
            MarginalKind::LineMass { direction } => {
                let u = UnitVector::normalize(direction).expect("validated");
                let g = rng.normal();
                for (v, c) in out.iter_mut().zip(u.as_slice()) {
                    *v = g * c;
                }
            }
            MarginalKind::SpikedGaussian { weight, spread } => {
                if rng.bernoulli(*weight) {
                    out.iter_mut().for_each(|v| *v = 0.0);
                    out[0] = if rng.bernoulli(0.5) { *spread } else { -*spread };
                } else {
                    out.iter_mut().for_each(|v| *v = rng.normal());
                }
            }
        }
    }
}

/// Draws `n` iid points. Row `i` uses its own counter stream, so the output
/// is independent of how rows are scheduled across threads.
pub fn sample_marginal(spec: &MarginalSpec, n: usize, seed: u64) -> Result<Points> {
    spec.validate()?;
    if n == 0 {
        return Err(DistributionsError::InvalidParameter("n must be at least 1".into()));
    }
    let d = spec.dim;
    let mut data = vec![0.0; n * d];
    data.par_chunks_mut(d)
        .enumerate()
        .with_min_len(1024)
        .for_each(|(i, out)| {
            let mut rng = CtrRng::new(seed, stream_id(purpose::MARGINAL, i as u64));
            spec.sample_row(&mut rng, out);
        });
    Ok(Points::from_raw(d, data))
}
