//! Closed convex sets with closed-form Euclidean projections.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{dist2, dot, norm2};

/// Projectable constraint set of one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", try_from = "RawSet", into = "RawSet")]
pub enum ConvexSet {
    WholeSpace { dim: usize },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    NonnegOrthant { dim: usize },
    /// `{x : normalᵀx ≤ offset}`
    Halfspace { normal: Vec<f64>, offset: f64 },
}

// Mirror used to route deserialization through validation.
#[derive(Serialize, Deserialize)]
#[serde(tag = "variant")]
enum RawSet {
    WholeSpace { dim: usize },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    NonnegOrthant { dim: usize },
    Halfspace { normal: Vec<f64>, offset: f64 },
}

impl TryFrom<RawSet> for ConvexSet {
    type Error = Error;

    fn try_from(raw: RawSet) -> Result<Self> {
        match raw {
            RawSet::WholeSpace { dim } => Ok(Self::WholeSpace { dim }),
            RawSet::Box { lower, upper } => Self::boxed(lower, upper),
            RawSet::Ball { center, radius } => Self::ball(center, radius),
            RawSet::NonnegOrthant { dim } => Ok(Self::NonnegOrthant { dim }),
            RawSet::Halfspace { normal, offset } => Self::halfspace(normal, offset),
        }
    }
}

impl From<ConvexSet> for RawSet {
    fn from(s: ConvexSet) -> Self {
        match s {
            ConvexSet::WholeSpace { dim } => Self::WholeSpace { dim },
            ConvexSet::Box { lower, upper } => Self::Box { lower, upper },
            ConvexSet::Ball { center, radius } => Self::Ball { center, radius },
            ConvexSet::NonnegOrthant { dim } => Self::NonnegOrthant { dim },
            ConvexSet::Halfspace { normal, offset } => Self::Halfspace { normal, offset },
        }
    }
}

impl ConvexSet {
    pub fn whole_space(dim: usize) -> Self {
        Self::WholeSpace { dim }
    }

    pub fn nonneg_orthant(dim: usize) -> Self {
        Self::NonnegOrthant { dim }
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_len(lower.len(), upper.len())?;
        if let Some(k) = (0..lower.len()).find(|&k| !(lower[k] <= upper[k])) {
            return Err(Error::InvalidSet(format!("box bound {k}: lower {} > upper {}", lower[k], upper[k])));
        }
        Ok(Self::Box { lower, upper })
    }

    /// Same interval `[lo, hi]` in every coordinate.
    pub fn uniform_box(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::boxed(vec![lo; dim], vec![hi; dim])
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidSet(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self::Ball { center, radius })
    }

    pub fn halfspace(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if !(norm2(&normal) > 0.0) {
            return Err(Error::InvalidSet("halfspace normal must be nonzero".into()));
        }
        Ok(Self::Halfspace { normal, offset })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::WholeSpace { dim } | Self::NonnegOrthant { dim } => *dim,
            Self::Box { lower, .. } => lower.len(),
            Self::Ball { center, .. } => center.len(),
            Self::Halfspace { normal, .. } => normal.len(),
        }
    }

    /// Same set in another dimension, for sets described by scalars
    /// (whole space, orthant, uniform box, ball centered at the origin).
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        match self {
            Self::WholeSpace { .. } => Ok(Self::WholeSpace { dim }),
            Self::NonnegOrthant { .. } => Ok(Self::NonnegOrthant { dim }),
            Self::Box { lower, upper }
                if lower.windows(2).all(|w| w[0] == w[1]) && upper.windows(2).all(|w| w[0] == w[1]) =>
            {
                match (lower.first(), upper.first()) {
                    (Some(&lo), Some(&hi)) => Self::uniform_box(dim, lo, hi),
                    _ => Err(Error::InvalidSet("empty box".into())),
                }
            }
            Self::Ball { center, radius } if center.iter().all(|c| *c == 0.0) => Self::ball(vec![0.0; dim], *radius),
            _ => Err(Error::InvalidSet("set cannot be resized".into())),
        }
    }

    /// Euclidean projection `argmin_{u∈Ω} ‖u − v‖`.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), v.len())?;
        let mut out = v.to_vec();
        self.project_in_place(&mut out);
        Ok(out)
    }

    /// Projects `v` in place. Dimensions are assumed to match.
    pub fn project_in_place(&self, v: &mut [f64]) {
        match self {
            Self::WholeSpace { .. } => {}
            Self::NonnegOrthant { .. } => v.iter_mut().for_each(|x| *x = x.max(0.0)),
            Self::Box { lower, upper } => {
                for ((x, lo), hi) in v.iter_mut().zip(lower).zip(upper) {
                    *x = x.clamp(*lo, *hi);
                }
            }
            Self::Ball { center, radius } => {
                let d = dist2(v, center);
                if d > *radius {
                    let scale = radius / d;
                    for (x, c) in v.iter_mut().zip(center) {
                        *x = c + (*x - c) * scale;
                    }
                }
            }
            Self::Halfspace { normal, offset } => {
                let excess = dot(normal, v) - offset;
                if excess > 0.0 {
                    let step = excess / dot(normal, normal);
                    for (x, a) in v.iter_mut().zip(normal) {
                        *x -= step * a;
                    }
                }
            }
        }
    }

    /// True iff `v` violates the defining inequalities by at most `tol`.
    pub fn contains(&self, v: &[f64], tol: f64) -> Result<bool> {
        check_len(self.dim(), v.len())?;
        Ok(match self {
            Self::WholeSpace { .. } => true,
            Self::NonnegOrthant { .. } => v.iter().all(|x| *x >= -tol),
            Self::Box { lower, upper } => {
                v.iter().zip(lower).zip(upper).all(|((x, lo), hi)| *x >= lo - tol && *x <= hi + tol)
            }
            Self::Ball { center, radius } => dist2(v, center) <= radius + tol,
            Self::Halfspace { normal, offset } => dot(normal, v) - offset <= tol,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_projections() {
        let v = [3.0, -7.5];
        assert_eq!(ConvexSet::whole_space(2).project(&v).unwrap(), v.to_vec());

        let unit_box = ConvexSet::uniform_box(2, 0.0, 1.0).unwrap();
        assert_eq!(unit_box.project(&[2.0, -1.0]).unwrap(), vec![1.0, 0.0]);

        let ball = ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let p = ball.project(&[3.0, 4.0]).unwrap();
        assert_relative_eq!(p[0], 0.6, epsilon = 1e-15);
        assert_relative_eq!(p[1], 0.8, epsilon = 1e-15);

        let half = ConvexSet::halfspace(vec![1.0, 0.0], 0.0).unwrap();
        assert_eq!(half.project(&[2.0, 5.0]).unwrap(), vec![0.0, 5.0]);

        assert_eq!(ConvexSet::nonneg_orthant(3).project(&[-1.0, 0.0, 2.0]).unwrap(), vec![0.0, 0.0, 2.0]);
    }

    #[test]
    fn ball_center_projects_to_itself() {
        let ball = ConvexSet::ball(vec![1.0, -2.0], 0.5).unwrap();
        assert_eq!(ball.project(&[1.0, -2.0]).unwrap(), vec![1.0, -2.0]);
    }

    #[test]
    fn membership_with_tolerance() {
        let unit_box = ConvexSet::uniform_box(2, 0.0, 1.0).unwrap();
        assert!(unit_box.contains(&[0.5, 0.5], 0.0).unwrap());
        let ball = ConvexSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert!(!ball.contains(&[1.0 + 1e-6, 0.0], 1e-12).unwrap());
        assert!(ConvexSet::nonneg_orthant(2).contains(&[-1e-10, 2.0], 1e-9).unwrap());
    }

    #[test]
    fn rejects_invalid_sets_and_shapes() {
        assert!(ConvexSet::boxed(vec![1.0], vec![0.0]).is_err());
        assert!(ConvexSet::ball(vec![0.0], 0.0).is_err());
        assert!(ConvexSet::halfspace(vec![0.0, 0.0], 1.0).is_err());
        assert!(matches!(
            ConvexSet::whole_space(3).project(&[1.0]),
            Err(Error::ShapeMismatch { expected: 3, found: 1 })
        ));
        assert!(ConvexSet::nonneg_orthant(2).contains(&[1.0], 0.0).is_err());
    }

    #[test]
    fn resizing_scalar_sets() {
        let b = ConvexSet::uniform_box(1, 0.0, 1.5).unwrap().with_dim(3).unwrap();
        assert_eq!(b, ConvexSet::uniform_box(3, 0.0, 1.5).unwrap());
        assert!(ConvexSet::boxed(vec![0.0, 1.0], vec![2.0, 2.0]).unwrap().with_dim(4).is_err());
    }
}
