use super::{NumericsError, Result, UnitVector};

/// Coordinates in a fixed orthonormal basis of `w⊥`.
///
/// The basis is rows `2..d` of the Householder reflector `H = I − 2uuᵀ/‖u‖²`
/// with `u = w + sign(w₁)·e₁` (taking `sign(0) = +1`). Since `H` is
/// orthogonal and `Hw = −sign(w₁)e₁`, those rows span `w⊥`.
#[derive(Debug, Clone)]
pub struct OrthogonalProjector {
    w: UnitVector,
    u: Vec<f64>,
    two_over_uu: f64,
}

impl OrthogonalProjector {
    pub fn new(w: &UnitVector) -> Self {
        let mut u = w.as_slice().to_vec();
        let s = if u[0] >= 0.0 { 1.0 } else { -1.0 };
        u[0] += s;
        let uu: f64 = u.iter().map(|x| x * x).sum();
        Self {
            w: w.clone(),
            u,
            two_over_uu: 2.0 / uu,
        }
    }

    pub fn direction(&self) -> &UnitVector {
        &self.w
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// Writes the `d − 1` coordinates of `x − ⟨w,x⟩w` into `out`.
    pub fn project_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.u.len();
        debug_assert_eq!(x.len(), d);
        debug_assert_eq!(out.len(), d - 1);
        let c = self.two_over_uu * super::dot(&self.u, x);
        for i in 1..d {
            out[i - 1] = x[i] - c * self.u[i];
        }
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.u.len() - 1];
        self.project_into(x, &mut out);
        out
    }

    /// Maps coordinates in the `w⊥` basis back to an ambient vector.
    pub fn lift(&self, z: &[f64]) -> Vec<f64> {
        let d = self.u.len();
        debug_assert_eq!(z.len(), d - 1);
        // Hᵀ = H, so the ambient vector is H·(0, z).
        let uz: f64 = self.u[1..].iter().zip(z).map(|(a, b)| a * b).sum();
        let c = self.two_over_uu * uz;
        let mut out = vec![0.0; d];
        out[0] = -c * self.u[0];
        for i in 1..d {
            out[i] = z[i - 1] - c * self.u[i];
        }
        out
    }
}

pub fn project_orthogonal(w: &UnitVector, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != w.dim() {
        return Err(NumericsError::DimMismatch {
            expected: w.dim(),
            found: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    Ok(OrthogonalProjector::new(w).project(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{dot, norm2};

    #[test]
    fn axis_aligned() {
        let w = UnitVector::axis(3, 0);
        assert_eq!(project_orthogonal(&w, &[3.0, 4.0, 5.0]).unwrap(), vec![4.0, 5.0]);
        assert_eq!(project_orthogonal(&w, &[1.0, 0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn diagonal_direction() {
        let w = UnitVector::normalize(&[1.0, 1.0]).unwrap();
        let p = project_orthogonal(&w, &[1.0, 0.0]).unwrap();
        assert_eq!(p.len(), 1);
        assert!((p[0].abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn lift_inverts_projection_on_complement() {
        let w = UnitVector::normalize(&[-0.3, 0.5, 0.8, 0.1]).unwrap();
        let p = OrthogonalProjector::new(&w);
        let x = [0.7, -1.1, 0.4, 2.0];
        let z = p.project(&x);
        let back = p.lift(&z);
        let wx = w.dot(&x);
        for i in 0..4 {
            assert!((back[i] - (x[i] - wx * w.as_slice()[i])).abs() < 1e-14);
        }
        assert!(dot(&back, w.as_slice()).abs() < 1e-14);
        assert!((norm2(&z).powi(2) + wx * wx - norm2(&x).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let w = UnitVector::axis(2, 1);
        assert!(matches!(
            project_orthogonal(&w, &[1.0]),
            Err(NumericsError::DimMismatch { .. })
        ));
    }
}
