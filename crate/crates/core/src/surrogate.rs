//! The smooth ramp `ℓ_σ`, the surrogate loss `L_σ`, its sphere gradient, and
//! projected SGD.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::Dataset;
use crate::numerics::{dot, UnitVector};
use crate::rng::{purpose, stream_id, CtrRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurrogateError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, SurrogateError>;

/// Bound on `ℓ'_σ` is `RAMP_SLOPE_BOUND / σ`.
pub const RAMP_SLOPE_BOUND: f64 = 3.0;
/// Bound on `|ℓ''_σ|` is `RAMP_CURVATURE_BOUND / σ²`.
pub const RAMP_CURVATURE_BOUND: f64 = 27.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RampParams {
    pub sigma: f64,
}

impl RampParams {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(SurrogateError::InvalidConfig(format!(
                "sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self { sigma })
    }
}

/// `ℓ_σ(t)`: linear `1/2 + t/σ` on `|t| ≤ σ/6`, a cubic Hermite segment up to
/// `σ/2`, constant beyond, and `ℓ_σ(−t) = 1 − ℓ_σ(t)`.
pub fn smooth_ramp(t: f64, p: RampParams) -> f64 {
    let sigma = p.sigma;
    let a = t.abs();
    if a <= sigma / 6.0 {
        return 0.5 + t / sigma;
    }
    let upper = if a >= sigma / 2.0 {
        1.0
    } else {
        // Hermite from (2/3, slope 1/σ) to (1, slope 0) over a third of σ.
        let s = (a - sigma / 6.0) / (sigma / 3.0);
        (2.0 + s + s * s - s * s * s) / 3.0
    };
    if t > 0.0 {
        upper
    } else {
        1.0 - upper
    }
}

/// `ℓ'_σ(t)`, computed from `|t|` so it is exactly even.
pub fn smooth_ramp_derivative(t: f64, p: RampParams) -> f64 {
    let sigma = p.sigma;
    let a = t.abs();
    if a <= sigma / 6.0 {
        1.0 / sigma
    } else if a >= sigma / 2.0 {
        0.0
    } else {
        let s = (a - sigma / 6.0) / (sigma / 3.0);
        (1.0 + 2.0 * s - 3.0 * s * s) / sigma
    }
}

/// `ℓ''_σ(t)` away from the knots `±σ/6`, `±σ/2`.
pub fn smooth_ramp_second_derivative(t: f64, p: RampParams) -> f64 {
    let sigma = p.sigma;
    let a = t.abs();
    if a <= sigma / 6.0 || a >= sigma / 2.0 {
        0.0
    } else {
        let s = (a - sigma / 6.0) / (sigma / 3.0);
        let v = 3.0 * (2.0 - 6.0 * s) / (sigma * sigma);
        if t > 0.0 {
            v
        } else {
            -v
        }
    }
}

fn check_dim(w: &UnitVector, ds: &Dataset) -> Result<()> {
    if w.dim() != ds.dim() {
        return Err(SurrogateError::DimMismatch {
            expected: ds.dim(),
            found: w.dim(),
        });
    }
    Ok(())
}

/// `L_σ(w; S) = E_S[ℓ_σ(−y⟨w, x⟩)]`.
pub fn surrogate_loss(w: &UnitVector, ds: &Dataset, p: RampParams) -> Result<f64> {
    check_dim(w, ds)?;
    let s: f64 = ds
        .iter()
        .map(|(x, y)| smooth_ramp(-y * w.dot(x), p))
        .sum();
    Ok(s / ds.len() as f64)
}

/// Accumulates `−ℓ'_σ(|⟨w,x⟩|)·y·(x − ⟨w,x⟩w)` over the rows in `idx`
/// (or all rows) into `out`, without dividing by the count.
fn accumulate_gradient<'a>(
    w: &[f64],
    rows: impl Iterator<Item = (&'a [f64], f64)>,
    p: RampParams,
    out: &mut [f64],
) {
    for (x, y) in rows {
        let t = dot(w, x);
        let g = smooth_ramp_derivative(t, p);
        if g == 0.0 {
            continue;
        }
        let c = -g * y;
        for ((o, xi), wi) in out.iter_mut().zip(x).zip(w) {
            *o += c * (xi - t * wi);
        }
    }
}

/// Gradient of `L_σ(·; S)` on the sphere at `w`; tangent to the sphere.
pub fn surrogate_gradient(w: &UnitVector, ds: &Dataset, p: RampParams) -> Result<Vec<f64>> {
    check_dim(w, ds)?;
    let mut g = vec![0.0; ds.dim()];
    accumulate_gradient(w.as_slice(), ds.iter(), p, &mut g);
    let inv = 1.0 / ds.len() as f64;
    g.iter_mut().for_each(|v| *v *= inv);
    // Remove the rounding residue along w.
    let r = w.dot(&g);
    for (gi, wi) in g.iter_mut().zip(w.as_slice()) {
        *gi -= r * wi;
    }
    Ok(g)
}

pub fn surrogate_gradient_norm(w: &UnitVector, ds: &Dataset, p: RampParams) -> Result<f64> {
    Ok(crate::numerics::norm2(&surrogate_gradient(w, ds, p)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsgdConfig {
    pub iterations: usize,
    pub step_size: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Starting point; drawn uniformly from the sphere when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<UnitVector>,
}

impl PsgdConfig {
    /// Step `β = σ²/2`, batch 1.
    pub fn default_for(sigma: f64, iterations: usize, seed: u64) -> Self {
        Self {
            iterations,
            step_size: 0.5 * sigma * sigma,
            batch_size: 1,
            seed,
            init: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(SurrogateError::InvalidConfig("step_size must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(SurrogateError::InvalidConfig("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Projected SGD on `L_σ(·; S)`. Returns all `T + 1` iterates, starting point first.
///
/// A random starting point is oriented so that `⟨w₀, E_S[yx]⟩ ≥ 0`; together
/// with label-independent batch indices this makes the whole trajectory flip
/// sign exactly when all labels are negated.
pub fn psgd(ds: &Dataset, p: RampParams, cfg: &PsgdConfig) -> Result<Vec<UnitVector>> {
    cfg.validate()?;
    let d = ds.dim();
    let mut rng = CtrRng::new(cfg.seed, stream_id(purpose::PSGD, 0));
    let mut w = match &cfg.init {
        Some(w0) => {
            check_dim(w0, ds)?;
            w0.as_slice().to_vec()
        }
        None => {
            let mut w0 = rng.unit_sphere(d);
            let mut mean_yx = vec![0.0; d];
            for (x, y) in ds.iter() {
                for (m, xi) in mean_yx.iter_mut().zip(x) {
                    *m += y * xi;
                }
            }
            if dot(&w0, &mean_yx) < 0.0 {
                w0.iter_mut().for_each(|v| *v = -*v);
            }
            w0
        }
    };
    let mut iterates = Vec::with_capacity(cfg.iterations + 1);
    iterates.push(UnitVector::normalize(&w).expect("start on the sphere"));
    let n = ds.len();
    let full_batch = cfg.batch_size >= n;
    let scale = cfg.step_size / if full_batch { n } else { cfg.batch_size } as f64;
    let mut g = vec![0.0; d];
    for _ in 0..cfg.iterations {
        g.iter_mut().for_each(|v| *v = 0.0);
        if full_batch {
            accumulate_gradient(&w, ds.iter(), p, &mut g);
        } else {
            let rows = (0..cfg.batch_size).map(|_| {
                let i = rng.below(n);
                (ds.x(i), ds.y(i))
            });
            accumulate_gradient(&w, rows, p, &mut g);
        }
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= scale * gi;
        }
        let u = UnitVector::normalize(&w).expect("projected iterate is finite and nonzero");
        w.copy_from_slice(u.as_slice());
        iterates.push(u);
    }
    Ok(iterates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{label_dataset, sample_marginal, MarginalSpec, NoiseModel, Points};

    fn rp(s: f64) -> RampParams {
        RampParams::new(s).unwrap()
    }

    #[test]
    fn ramp_values() {
        let p = rp(0.3);
        assert_eq!(smooth_ramp(0.0, p), 0.5);
        assert_eq!(smooth_ramp(0.3, p), 1.0);
        assert_eq!(smooth_ramp(-0.3, p), 0.0);
        assert!((smooth_ramp(0.05, p) - 2.0 / 3.0).abs() < 1e-15);
        assert!((smooth_ramp(0.15 - 1e-12, p) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ramp_derivative_values() {
        let p = rp(0.2);
        assert_eq!(smooth_ramp_derivative(0.0, p), 5.0);
        assert_eq!(smooth_ramp_derivative(0.2, p), 0.0);
        let a = smooth_ramp_derivative(0.05, p);
        assert_eq!(a, smooth_ramp_derivative(-0.05, p));
        assert!(a > 0.0 && a < 15.0);
        let h = 1e-7;
        let fd = (smooth_ramp(0.05 + h, p) - smooth_ramp(0.05 - h, p)) / (2.0 * h);
        assert!((fd - a).abs() < 1e-5 * a);
    }

    #[test]
    fn loss_examples() {
        let w = UnitVector::axis(2, 0);
        let p = rp(0.1);
        let pts = Points::from_rows(&[vec![1.0, 0.0], vec![-1.0, 3.0]]).unwrap();
        let ds = Dataset::new(pts.clone(), vec![1, -1]).unwrap();
        assert_eq!(surrogate_loss(&w, &ds, p).unwrap(), 0.0);
        let ds = Dataset::new(pts, vec![-1, 1]).unwrap();
        assert_eq!(surrogate_loss(&w, &ds, p).unwrap(), 1.0);
        let on = Dataset::new(Points::from_rows(&[vec![0.0, 1.0]]).unwrap(), vec![1]).unwrap();
        assert_eq!(surrogate_loss(&w, &on, p).unwrap(), 0.5);
    }

    #[test]
    fn gradient_examples() {
        let w = UnitVector::axis(2, 0);
        let p = rp(0.1);
        let far = Dataset::new(Points::from_rows(&[vec![1.0, 0.5]]).unwrap(), vec![1]).unwrap();
        assert_eq!(surrogate_gradient(&w, &far, p).unwrap(), vec![0.0, 0.0]);
        let perp = Dataset::new(Points::from_rows(&[vec![0.0, 0.01]]).unwrap(), vec![1]).unwrap();
        let g = surrogate_gradient(&w, &perp, p).unwrap();
        assert!((g[0]).abs() < 1e-15 && (g[1] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn psgd_returns_all_iterates() {
        let ds = Dataset::new(Points::from_rows(&[vec![1.0, 0.0]]).unwrap(), vec![1]).unwrap();
        let cfg = PsgdConfig::default_for(0.1, 0, 3);
        assert_eq!(psgd(&ds, rp(0.1), &cfg).unwrap().len(), 1);
        let cfg = PsgdConfig::default_for(0.1, 17, 3);
        let it = psgd(&ds, rp(0.1), &cfg).unwrap();
        assert_eq!(it.len(), 18);
        for w in &it {
            assert!((crate::numerics::norm2(w.as_slice()) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn psgd_separable_2d() {
        let w_star = UnitVector::normalize(&[0.6, -0.8]).unwrap();
        let pts = sample_marginal(&MarginalSpec::gaussian(2), 5000, 11).unwrap();
        let ds = label_dataset(&pts, &NoiseModel::clean(w_star), 0).unwrap();
        let sigma = 0.2;
        let it = psgd(&ds, rp(sigma), &PsgdConfig::default_for(sigma, 2000, 5)).unwrap();
        let best = it.iter().map(|w| ds.zero_one_error(w)).fold(1.0, f64::min);
        assert!(best <= 0.02, "{best}");
    }

    #[test]
    fn psgd_sign_equivariance() {
        let w_star = UnitVector::normalize(&[0.2, 0.9, -0.4]).unwrap();
        let pts = sample_marginal(&MarginalSpec::gaussian(3), 500, 2).unwrap();
        let ds = label_dataset(&pts, &NoiseModel::massart(0.2, w_star), 1).unwrap();
        let cfg = PsgdConfig::default_for(0.3, 200, 9);
        let a = psgd(&ds, rp(0.3), &cfg).unwrap();
        let b = psgd(&ds.with_negated_labels(), rp(0.3), &cfg).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert_eq!(u, &-v);
        }
    }
}
