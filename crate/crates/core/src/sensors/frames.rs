//! Inertial, body and camera frames, and ideal gimbal pointing.
//!
//! The inertial Z axis points down: the UAV flies at `z = -altitude` and a
//! ground target sits near `z = 0`, so a positive gimbal pitch looks below
//! the horizon.

use serde::{Deserialize, Serialize};

use crate::angle::wrap;
use crate::linalg::{Matrix3, Vector3};
use crate::{Error, Result};

/// Camera mount angles: pitch in `[0, pi/2]`, yaw in `[-pi, pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GimbalAngles {
    pub pitch: f64,
    pub yaw: f64,
}

/// Result of [`point_gimbal`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GimbalPointing {
    pub angles: GimbalAngles,
    /// The ideal pitch was outside `[0, pi/2]` and had to be clamped.
    pub clamped: bool,
}

fn yaw_matrix(psi: f64) -> Matrix3 {
    let (s, c) = psi.sin_cos();
    Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0)
}

fn pitch_matrix(theta: f64) -> Matrix3 {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Inertial-to-body rotation for UAV heading `psi_a`.
pub fn inertial_to_body(psi_a: f64) -> Matrix3 {
    yaw_matrix(psi_a)
}

/// Body-to-camera rotation for the gimbal angles.
pub fn body_to_camera(gimbal: &GimbalAngles) -> Matrix3 {
    pitch_matrix(gimbal.pitch) * yaw_matrix(gimbal.yaw)
}

/// Inertial-to-camera rotation.
pub fn inertial_to_camera(psi_a: f64, gimbal: &GimbalAngles) -> Matrix3 {
    body_to_camera(gimbal) * inertial_to_body(psi_a)
}

/// Angles that put the target on the camera's optical (x) axis.
pub fn point_gimbal(uav_position: &Vector3, psi_a: f64, target: &Vector3) -> Result<GimbalPointing> {
    let rel = target - uav_position;
    if !(rel.norm() > 0.0) {
        return Err(Error::DegenerateGeometry("target coincides with the UAV"));
    }
    let b = inertial_to_body(psi_a) * rel;
    let rho = b[0].hypot(b[1]);
    let yaw = if rho > 0.0 { wrap(b[1].atan2(b[0])) } else { 0.0 };
    let ideal = b[2].atan2(rho);
    let pitch = ideal.clamp(0.0, std::f64::consts::FRAC_PI_2);
    Ok(GimbalPointing { angles: GimbalAngles { pitch, yaw }, clamped: pitch != ideal })
}
