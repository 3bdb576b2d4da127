use std::ops::Neg;

use serde::{Deserialize, Serialize};

use super::{norm2, NumericsError, Result};

/// A point on the unit sphere `𝕊^{d−1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitVector {
    coords: Vec<f64>,
}

impl UnitVector {
    /// Normalizes `v` onto the sphere.
    pub fn normalize(v: &[f64]) -> Result<Self> {
        if v.is_empty() {
            return Err(NumericsError::EmptyDimension);
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(NumericsError::NonFinite);
        }
        let n = norm2(v);
        if n == 0.0 {
            return Err(NumericsError::ZeroVector);
        }
        Ok(Self {
            coords: v.iter().map(|x| x / n).collect(),
        })
    }

    pub fn axis(dim: usize, i: usize) -> Self {
        assert!(i < dim);
        let mut coords = vec![0.0; dim];
        coords[i] = 1.0;
        Self { coords }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }

    #[inline]
    pub fn dot(&self, x: &[f64]) -> f64 {
        super::dot(&self.coords, x)
    }

    /// Angle to another unit vector, in `[0, π]`.
    pub fn angle_to(&self, other: &UnitVector) -> f64 {
        self.dot(&other.coords).clamp(-1.0, 1.0).acos()
    }

    /// Rotates `self` by `angle` towards the unit vector `dir`, which must be
    /// orthogonal to `self`.
    pub fn rotate_towards(&self, dir: &[f64], angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let v: Vec<f64> = self
            .coords
            .iter()
            .zip(dir)
            .map(|(a, b)| c * a + s * b)
            .collect();
        Self::normalize(&v).expect("rotation of a unit vector stays on the sphere")
    }
}

impl TryFrom<Vec<f64>> for UnitVector {
    type Error = NumericsError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::normalize(&v)
    }
}

impl From<UnitVector> for Vec<f64> {
    fn from(u: UnitVector) -> Self {
        u.coords
    }
}

impl Neg for &UnitVector {
    type Output = UnitVector;

    fn neg(self) -> UnitVector {
        UnitVector {
            coords: self.coords.iter().map(|x| -x).collect(),
        }
    }
}

impl Neg for UnitVector {
    type Output = UnitVector;

    fn neg(self) -> UnitVector {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_is_tight() {
        let u = UnitVector::normalize(&[3.0, 4.0, 1e-3]).unwrap();
        assert!((norm2(u.as_slice()) - 1.0).abs() <= 1e-12);
        assert_eq!(UnitVector::normalize(&[0.0, 0.0]), Err(NumericsError::ZeroVector));
        assert_eq!(
            UnitVector::normalize(&[f64::NAN, 1.0]),
            Err(NumericsError::NonFinite)
        );
    }

    #[test]
    fn negation_is_exact() {
        let u = UnitVector::normalize(&[0.3, -0.7, 0.1]).unwrap();
        let v = -&u;
        for (a, b) in u.as_slice().iter().zip(v.as_slice()) {
            assert_eq!(*a, -*b);
        }
    }
}
