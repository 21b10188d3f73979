//! Pinhole camera projection.

use crate::linalg::{Matrix2x3, Vector2, Vector3};
use crate::{Error, Result};

/// Smallest camera-frame depth accepted by the projection.
pub const DEPTH_EPSILON: f64 = 1e-6;

fn check_depth(p: &Vector3) -> Result<()> {
    if p[0] > DEPTH_EPSILON && p.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::BehindImagePlane(p[0]))
    }
}

/// Image coordinates `(f/x)(y, z)` of a camera-frame point.
pub fn camera_project(p: &Vector3, f: f64) -> Result<Vector2> {
    check_depth(p)?;
    Ok(Vector2::new(p[1], p[2]) * (f / p[0]))
}

/// Jacobian of [`camera_project`] with respect to the camera-frame point.
pub fn camera_jacobian(p: &Vector3, f: f64) -> Result<Matrix2x3> {
    check_depth(p)?;
    let (x, y, z) = (p[0], p[1], p[2]);
    let k = f / (x * x);
    Ok(Matrix2x3::new(-y, x, 0.0, -z, 0.0, x) * k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn projection_examples() {
        assert_eq!(camera_project(&Vector3::new(1.0, 2.0, 3.0), 1.0).unwrap(), Vector2::new(2.0, 3.0));
        let p = Vector3::new(100.0, 10.0, -5.0);
        let m = camera_project(&p, 0.05).unwrap();
        assert!((m - Vector2::new(0.005, -0.0025)).norm() < 1e-15);
        let q = Vector3::new(3.0, -1.0, 7.0);
        assert!((camera_project(&q, 0.05).unwrap() - camera_project(&(q * 2.0), 0.05).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn behind_plane_rejected() {
        assert!(camera_project(&Vector3::new(0.0, 1.0, 1.0), 1.0).is_err());
        assert!(camera_project(&Vector3::new(-5.0, 1.0, 1.0), 1.0).is_err());
        assert!(camera_jacobian(&Vector3::new(1e-7, 1.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn on_axis_jacobian() {
        let j = camera_jacobian(&Vector3::new(1.0, 0.0, 0.0), 1.0).unwrap();
        assert_eq!(j, Matrix2x3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0));
    }

    #[test]
    fn jacobian_annihilates_the_ray() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p = Vector3::new(rng.random_range(1.0..500.0), rng.random_range(-300.0..300.0), rng.random_range(-300.0..300.0));
            let j = camera_jacobian(&p, 0.05).unwrap();
            assert!((j * p).norm() < 1e-15 * p.norm());
        }
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let p = Vector3::new(rng.random_range(5.0..500.0), rng.random_range(-300.0..300.0), rng.random_range(-300.0..300.0));
            let f = rng.random_range(0.01..2.0);
            let j = camera_jacobian(&p, f).unwrap();
            let h = 1e-6 * p.norm();
            let mut fd = Matrix2x3::zeros();
            for c in 0..3 {
                let mut dp = Vector3::zeros();
                dp[c] = h;
                let col = (camera_project(&(p + dp), f).unwrap() - camera_project(&(p - dp), f).unwrap()) / (2.0 * h);
                fd.set_column(c, &col);
            }
            let rel = (j - fd).norm() / j.norm();
            assert!(rel < 1e-5, "rel error {rel} at {p:?}");
        }
    }
}
