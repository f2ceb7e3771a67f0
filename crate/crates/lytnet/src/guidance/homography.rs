//! Ground-plane projection.
//!
//! A 3x3 homography maps image pixels to a bird's-eye view of the ground
//! (the crossing lies in the z = 1 plane). The calibration matrix is
//! device-specific and supplied through config; it must target a ground frame
//! measured in image-pixel units so the positioning thresholds keep their
//! meaning. The identity default makes the ground frame the image itself.

use crate::guidance::GuidanceError;

/// Row-major 3x3 projective transform from image pixels to ground points.
#[derive(Debug, Clone, PartialEq)]
pub struct Homography {
    m: [f64; 9],
}

/// Determinant floor below which a matrix is rejected as singular.
pub const DET_FLOOR: f64 = 1e-9;

/// Projective w floor below which a mapped point is degenerate (at or beyond
/// the horizon).
pub const W_FLOOR: f64 = 1e-9;

impl Homography {
    pub fn new(m: [f64; 9]) -> Result<Homography, GuidanceError> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(GuidanceError::SingularHomography { det: f64::NAN });
        }
        let det = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
            + m[2] * (m[3] * m[7] - m[4] * m[6]);
        if det.abs() <= DET_FLOOR {
            return Err(GuidanceError::SingularHomography { det });
        }
        Ok(Homography { m })
    }

    pub fn identity() -> Homography {
        Homography {
            m: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        }
    }

    pub fn matrix(&self) -> &[f64; 9] {
        &self.m
    }

    /// Dehomogenized image of `(x, y, 1)`.
    pub fn to_ground(&self, x: f64, y: f64) -> Result<(f64, f64), GuidanceError> {
        let m = &self.m;
        let gx = m[0] * x + m[1] * y + m[2];
        let gy = m[3] * x + m[4] * y + m[5];
        let gw = m[6] * x + m[7] * y + m[8];
        if gw <= W_FLOOR {
            return Err(GuidanceError::DegeneratePoint { x, y, w: gw });
        }
        Ok((gx / gw, gy / gw))
    }

    /// Inverse transform, for round-trip checks and calibration tooling.
    pub fn inverse(&self) -> Result<Homography, GuidanceError> {
        let m = &self.m;
        let det = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
            + m[2] * (m[3] * m[7] - m[4] * m[6]);
        if det.abs() <= DET_FLOOR {
            return Err(GuidanceError::SingularHomography { det });
        }
        let inv = [
            (m[4] * m[8] - m[5] * m[7]) / det,
            (m[2] * m[7] - m[1] * m[8]) / det,
            (m[1] * m[5] - m[2] * m[4]) / det,
            (m[5] * m[6] - m[3] * m[8]) / det,
            (m[0] * m[8] - m[2] * m[6]) / det,
            (m[2] * m[3] - m[0] * m[5]) / det,
            (m[3] * m[7] - m[4] * m[6]) / det,
            (m[1] * m[6] - m[0] * m[7]) / det,
            (m[0] * m[4] - m[1] * m[3]) / det,
        ];
        Homography::new(inv)
    }
}

/// Maps an image point to the ground plane.
pub fn to_ground(point: (f64, f64), h: &Homography) -> Result<(f64, f64), GuidanceError> {
    h.to_ground(point.0, point.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_leaves_points_alone() {
        let h = Homography::identity();
        assert_eq!(h.to_ground(383.5, 100.0).unwrap(), (383.5, 100.0));
    }

    #[test]
    fn pure_scale_doubles_coordinates() {
        let h = Homography::new([2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(h.to_ground(10.0, -4.0).unwrap(), (20.0, -8.0));
    }

    #[test]
    fn singular_matrices_are_rejected() {
        let result = Homography::new([1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            result,
            Err(GuidanceError::SingularHomography { .. })
        ));
    }

    #[test]
    fn horizon_points_are_degenerate() {
        // bottom row sends y = 1 to w = 0
        let h = Homography::new([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0, 1.0]).unwrap();
        assert!(matches!(
            h.to_ground(0.0, 1.0),
            Err(GuidanceError::DegeneratePoint { .. })
        ));
        // beyond the horizon (negative w) is degenerate too
        assert!(matches!(
            h.to_ground(0.0, 2.0),
            Err(GuidanceError::DegeneratePoint { .. })
        ));
    }

    #[test]
    fn round_trip_through_the_inverse_recovers_the_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut checked = 0;
        while checked < 100 {
            let mut m = [0.0f64; 9];
            for v in m.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
            m[8] = rng.random_range(1.0..2.0); // keep w positive near the origin
            let Ok(h) = Homography::new(m) else { continue };
            let Ok(inv) = h.inverse() else { continue };
            let x = rng.random_range(0.0..10.0);
            let y = rng.random_range(0.0..10.0);
            let Ok((gx, gy)) = h.to_ground(x, y) else { continue };
            let Ok((bx, by)) = inv.to_ground(gx, gy) else { continue };
            assert!((bx - x).abs() < 1e-6, "x: {x} -> {bx}");
            assert!((by - y).abs() < 1e-6, "y: {y} -> {by}");
            checked += 1;
        }
    }
}
