//! Range/azimuth radar co-located with the UAV.

use crate::linalg::{Matrix2x3, Vector2, Vector3};
use crate::{Error, Result};

/// Horizontal distances below this (m) leave the azimuth undefined.
pub const AZIMUTH_EPSILON: f64 = 1e-9;

fn check(p: &Vector3) -> Result<(f64, f64)> {
    if !p.iter().all(|v| v.is_finite()) {
        return Err(Error::DegenerateGeometry("non-finite radar geometry"));
    }
    let rho2 = p[0] * p[0] + p[1] * p[1];
    if rho2.sqrt() < AZIMUTH_EPSILON {
        return Err(Error::DegenerateGeometry("target directly above or below the radar"));
    }
    Ok((p.norm(), rho2))
}

/// Range and four-quadrant azimuth of a relative position.
pub fn radar_measure(p: &Vector3) -> Result<Vector2> {
    let (d, _) = check(p)?;
    Ok(Vector2::new(d, p[1].atan2(p[0])))
}

pub fn radar_jacobian(p: &Vector3) -> Result<Matrix2x3> {
    let (d, rho2) = check(p)?;
    let (x, y, z) = (p[0], p[1], p[2]);
    Ok(Matrix2x3::new(x / d, y / d, z / d, -y / rho2, x / rho2, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    #[test]
    fn measure_examples() {
        let m = radar_measure(&Vector3::new(3.0, 4.0, 0.0)).unwrap();
        assert!((m[0] - 5.0).abs() < 1e-15 && (m[1] - 0.9273).abs() < 1e-4);
        let m = radar_measure(&Vector3::new(0.0, 1.0, 0.0)).unwrap();
        assert!((m[0] - 1.0).abs() < 1e-15 && (m[1] - PI / 2.0).abs() < 1e-15);
        let m = radar_measure(&Vector3::new(-1.0, -1.0, 2f64.sqrt())).unwrap();
        assert!((m[0] - 2.0).abs() < 1e-15 && (m[1] + 3.0 * PI / 4.0).abs() < 1e-15);
        assert!(radar_measure(&Vector3::new(0.0, 0.0, 5.0)).is_err());
        assert!(radar_jacobian(&Vector3::zeros()).is_err());
    }

    #[test]
    fn unit_axis_jacobian() {
        let j = radar_jacobian(&Vector3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(j, Matrix2x3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0));
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let p = loop {
                let p = Vector3::new(rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0), rng.random_range(-100.0..100.0));
                if p.xy().norm() > 5.0 {
                    break p;
                }
            };
            let j = radar_jacobian(&p).unwrap();
            assert!((j.row(0).norm() - 1.0).abs() < 1e-12);
            let h = 1e-6 * p.norm();
            let mut fd = Matrix2x3::zeros();
            for c in 0..3 {
                let mut dp = Vector3::zeros();
                dp[c] = h;
                let (hi, lo) = (radar_measure(&(p + dp)).unwrap(), radar_measure(&(p - dp)).unwrap());
                let col = Vector2::new(hi[0] - lo[0], angle::diff(hi[1], lo[1])) / (2.0 * h);
                fd.set_column(c, &col);
            }
            let rel = (j - fd).norm() / j.norm();
            assert!(rel < 1e-5, "rel error {rel} at {p:?}");
        }
    }
}
