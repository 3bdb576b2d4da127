use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{sign, Dataset, DistributionsError, Points, Result};
use crate::numerics::UnitVector;
use crate::rng::{purpose, stream_id, CtrRng};

/// How the Massart flip probability varies with `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum FlipProfile {
    /// `η(x) = η`.
    Constant,
    /// `η(x) = η·exp(−|⟨w*,x⟩|/scale)`.
    MarginDecay { scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum CorruptionRule {
    /// Flip iff `|⟨w*,x⟩| ≤ width`.
    BoundaryBand { width: f64 },
    /// Flip each label independently with probability `rate`.
    RandomFraction { rate: f64 },
    /// Flip iff `⟨direction, x⟩ > offset`.
    Halfspace { direction: Vec<f64>, offset: f64 },
}

impl CorruptionRule {
    /// Boundary band whose Gaussian mass is `rate`.
    pub fn gaussian_boundary_band(rate: f64) -> Self {
        let n = Normal::new(0.0, 1.0).expect("standard normal");
        CorruptionRule::BoundaryBand {
            width: n.inverse_cdf(0.5 + rate / 2.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    Clean,
    Massart {
        eta: f64,
        #[serde(flatten)]
        profile: FlipProfile,
    },
    Agnostic {
        #[serde(flatten)]
        rule: CorruptionRule,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    #[serde(flatten)]
    pub kind: NoiseKind,
    pub target: UnitVector,
}

impl NoiseModel {
    pub fn clean(target: UnitVector) -> Self {
        Self {
            kind: NoiseKind::Clean,
            target,
        }
    }

    pub fn massart(eta: f64, target: UnitVector) -> Self {
        Self {
            kind: NoiseKind::Massart {
                eta,
                profile: FlipProfile::Constant,
            },
            target,
        }
    }

    pub fn agnostic(rule: CorruptionRule, target: UnitVector) -> Self {
        Self {
            kind: NoiseKind::Agnostic { rule },
            target,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            NoiseKind::Clean => Ok(()),
            NoiseKind::Massart { eta, profile } => {
                if !(0.0..0.5).contains(eta) {
                    return Err(DistributionsError::InvalidParameter(format!(
                        "massart eta must lie in [0, 1/2), got {eta}"
                    )));
                }
                if let FlipProfile::MarginDecay { scale } = profile {
                    if !(*scale > 0.0) {
                        return Err(DistributionsError::InvalidParameter(
                            "margin_decay scale must be positive".into(),
                        ));
                    }
                }
                Ok(())
            }
            NoiseKind::Agnostic { rule } => match rule {
                CorruptionRule::BoundaryBand { width } if !(*width >= 0.0) => Err(
                    DistributionsError::InvalidParameter("boundary_band width must be nonnegative".into()),
                ),
                CorruptionRule::RandomFraction { rate } if !(0.0..=1.0).contains(rate) => Err(
                    DistributionsError::InvalidParameter("random_fraction rate must lie in [0, 1]".into()),
                ),
                CorruptionRule::Halfspace { direction, .. } if direction.len() != self.target.dim() => {
                    Err(DistributionsError::DimMismatch {
                        expected: self.target.dim(),
                        found: direction.len(),
                    })
                }
                _ => Ok(()),
            },
        }
    }

    /// Flip probability `η(x)` for Massart noise; `None` otherwise.
    pub fn massart_flip_probability(&self, x: &[f64]) -> Option<f64> {
        match &self.kind {
            NoiseKind::Massart { eta, profile } => Some(match profile {
                FlipProfile::Constant => *eta,
                FlipProfile::MarginDecay { scale } => {
                    eta * (-self.target.dot(x).abs() / scale).exp()
                }
            }),
            _ => None,
        }
    }

    fn label(&self, x: &[f64], rng: &mut CtrRng) -> i8 {
        let clean = sign(self.target.dot(x));
        let flip = match &self.kind {
            NoiseKind::Clean => false,
            NoiseKind::Massart { .. } => {
                let p = self.massart_flip_probability(x).expect("massart");
                rng.bernoulli(p)
            }
            NoiseKind::Agnostic { rule } => match rule {
                CorruptionRule::BoundaryBand { width } => self.target.dot(x).abs() <= *width,
                CorruptionRule::RandomFraction { rate } => rng.bernoulli(*rate),
                CorruptionRule::Halfspace { direction, offset } => {
                    crate::numerics::dot(direction, x) > *offset
                }
            },
        };
        if flip {
            -clean
        } else {
            clean
        }
    }
}

/// Labels `points` under the noise model. Row `i` draws from its own stream.
pub fn label_dataset(points: &Points, noise: &NoiseModel, seed: u64) -> Result<Dataset> {
    noise.validate()?;
    if noise.target.dim() != points.dim() {
        return Err(DistributionsError::DimMismatch {
            expected: points.dim(),
            found: noise.target.dim(),
        });
    }
    let labels: Vec<i8> = (0..points.len())
        .into_par_iter()
        .with_min_len(1024)
        .map(|i| {
            let mut rng = CtrRng::new(seed, stream_id(purpose::LABELS, i as u64));
            noise.label(points.row(i), &mut rng)
        })
        .collect();
    Dataset::new(points.clone(), labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{sample_marginal, MarginalSpec};

    #[test]
    fn clean_labels_use_sign_convention() {
        let p = Points::from_rows(&[vec![1.0, 0.0], vec![-2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let ds = label_dataset(&p, &NoiseModel::clean(UnitVector::axis(2, 0)), 0).unwrap();
        assert_eq!(ds.labels(), &[1, -1, 1]);
    }

    #[test]
    fn massart_flip_rate() {
        let p = sample_marginal(&MarginalSpec::gaussian(3), 100_000, 1).unwrap();
        let w = UnitVector::axis(3, 0);
        let ds = label_dataset(&p, &NoiseModel::massart(0.1, w.clone()), 2).unwrap();
        let rate = ds.zero_one_error(&w);
        assert!((0.094..=0.106).contains(&rate), "{rate}");
    }

    #[test]
    fn margin_decay_never_exceeds_eta() {
        let w = UnitVector::axis(2, 1);
        let m = NoiseModel {
            kind: NoiseKind::Massart {
                eta: 0.3,
                profile: FlipProfile::MarginDecay { scale: 0.5 },
            },
            target: w,
        };
        for t in [-3.0, -0.1, 0.0, 0.2, 5.0] {
            let p = m.massart_flip_probability(&[1.0, t]).unwrap();
            assert!(p <= 0.3 && p >= 0.0);
        }
    }

    #[test]
    fn boundary_band_width_for_five_percent() {
        match CorruptionRule::gaussian_boundary_band(0.05) {
            CorruptionRule::BoundaryBand { width } => assert!((width - 0.06271).abs() < 1e-4),
            _ => unreachable!(),
        }
    }

    #[test]
    fn boundary_band_opt_bound() {
        let p = sample_marginal(&MarginalSpec::gaussian(2), 20_000, 4).unwrap();
        let w = UnitVector::axis(2, 0);
        let noise = NoiseModel::agnostic(CorruptionRule::BoundaryBand { width: 0.1 }, w.clone());
        let ds = label_dataset(&p, &noise, 0).unwrap();
        let band = p.rows().filter(|x| x[0].abs() <= 0.1).count() as f64 / p.len() as f64;
        assert!(ds.zero_one_error(&w) <= band);
    }

    #[test]
    fn rejects_bad_eta() {
        let p = Points::from_rows(&[vec![1.0]]).unwrap();
        let noise = NoiseModel::massart(0.5, UnitVector::axis(1, 0));
        assert!(label_dataset(&p, &noise, 0).is_err());
    }

    #[test]
    fn noise_json_shape() {
        let m = NoiseModel::massart(0.1, UnitVector::axis(2, 0));
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"kind":"massart","eta":0.1,"profile":"constant","target":[1.0,0.0]}"#);
        let back: NoiseModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
