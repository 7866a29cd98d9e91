//! The interface every vector field exposes to the integrator and the batch tools.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::GeometryError;
use crate::linalg;

/// A removed point of the state space together with the radius of the ball kept away
/// from it.
#[derive(Clone, Debug, PartialEq)]
pub struct Puncture {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Puncture {
    pub fn contains(&self, x: &[f64]) -> bool {
        linalg::distance(&self.center, x) <= self.radius
    }
}

/// Admissible region for trajectories: an optional axis-aligned box minus punctures.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Domain {
    pub bounds: Option<Vec<(f64, f64)>>,
    pub punctures: Vec<Puncture>,
}

impl Domain {
    pub fn unbounded() -> Self {
        Self::default()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        if let Some(b) = &self.bounds {
            if x.iter().zip(b).any(|(v, (lo, hi))| v < lo || v > hi) {
                return false;
            }
        }
        !self.punctures.iter().any(|p| p.contains(x))
    }
}

/// An autonomous vector field with a Lyapunov function and a notion of distance to the
/// set it is meant to attract to.
pub trait Dynamics {
    fn dim(&self) -> usize;

    fn velocity_into(&self, x: &[f64], out: &mut [f64]) -> Result<(), GeometryError>;

    fn velocity(&self, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let mut out = vec![0.0; self.dim()];
        self.velocity_into(x, &mut out)?;
        Ok(out)
    }

    fn lyapunov(&self, x: &[f64]) -> Result<f64, GeometryError>;

    /// Distance from `x` to the target set, or `None` where it cannot be computed.
    fn target_distance(&self, x: &[f64]) -> Option<f64>;

    fn domain(&self) -> &Domain;
}

impl<D: Dynamics + ?Sized> Dynamics for &D {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn velocity_into(&self, x: &[f64], out: &mut [f64]) -> Result<(), GeometryError> {
        (**self).velocity_into(x, out)
    }
    fn lyapunov(&self, x: &[f64]) -> Result<f64, GeometryError> {
        (**self).lyapunov(x)
    }
    fn target_distance(&self, x: &[f64]) -> Option<f64> {
        (**self).target_distance(x)
    }
    fn domain(&self) -> &Domain {
        (**self).domain()
    }
}

/// `f / (1 + |f|^2)`: same zeros and orbits as `f`, bounded by `1/2`, so its flow is
/// complete.
#[derive(Clone, Debug)]
pub struct Normalized<D>(pub D);

pub fn normalize_field<D: Dynamics>(field: D) -> Normalized<D> {
    Normalized(field)
}

/// Rescales `v` in place by `1 / (1 + |v|^2)`.
pub fn normalize_vector(v: &mut [f64]) {
    let s = 1.0 / (1.0 + linalg::norm_sq(v));
    for c in v.iter_mut() {
        *c *= s;
    }
}

impl<D: Dynamics> Dynamics for Normalized<D> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn velocity_into(&self, x: &[f64], out: &mut [f64]) -> Result<(), GeometryError> {
        self.0.velocity_into(x, out)?;
        normalize_vector(out);
        Ok(())
    }
    fn lyapunov(&self, x: &[f64]) -> Result<f64, GeometryError> {
        self.0.lyapunov(x)
    }
    fn target_distance(&self, x: &[f64]) -> Option<f64> {
        self.0.target_distance(x)
    }
    fn domain(&self) -> &Domain {
        self.0.domain()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalization_examples() {
        let mut z = [0.0, 0.0];
        normalize_vector(&mut z);
        assert_eq!(z, [0.0, 0.0]);
        let mut e = [1.0, 0.0];
        normalize_vector(&mut e);
        assert_eq!(e, [0.5, 0.0]);
    }

    proptest! {
        #[test]
        fn normalization_is_positive_rescaling_bounded_by_half(v in proptest::collection::vec(-1e3f64..1e3, 3)) {
            let mut w = v.clone();
            normalize_vector(&mut w);
            prop_assert!(linalg::norm(&w) <= 0.5 + 1e-15);
            let s = 1.0 / (1.0 + linalg::norm_sq(&v));
            for (a, b) in v.iter().zip(&w) {
                prop_assert!((a * s - b).abs() <= 1e-15 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn domain_box_and_punctures() {
        let d = Domain {
            bounds: Some(vec![(-1.0, 1.0), (-1.0, 1.0)]),
            punctures: vec![Puncture { center: vec![0.5, 0.0], radius: 0.1 }],
        };
        assert!(d.contains(&[0.0, 0.0]));
        assert!(!d.contains(&[0.55, 0.0]));
        assert!(!d.contains(&[1.5, 0.0]));
        assert!(!d.contains(&[f64::NAN, 0.0]));
    }
}
