//! Discrete Lyapunov guidance vector field for loitering over a moving
//! target, and its conversion into speed/heading commands.

use serde::{Deserialize, Serialize};

use crate::angle::wrap;
use crate::linalg::Vector2;
use crate::uav::ActuatorLimits;
use crate::{Error, Result};

/// Inside this radius (m) the field is replaced by a fixed escape direction.
pub const ORIGIN_EPSILON: f64 = 1e-6;

/// Desired orbit radius `r_d` (m) and relative speed `v_d` (m/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoiterSpec {
    pub radius: f64,
    pub speed: f64,
}

impl LoiterSpec {
    pub fn new(radius: f64, speed: f64) -> Result<Self> {
        if !(radius > 0.0 && speed > 0.0) {
            return Err(Error::Config(format!("loiter radius and speed must be positive, got ({radius}, {speed})")));
        }
        Ok(Self { radius, speed })
    }
}

/// Desired UAV speed (m/s) and heading (rad).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceCommand {
    pub speed: f64,
    pub heading: f64,
}

/// `v_d / r_d < u_max` and `1/tau > sqrt(3) u_max / 2`.
pub fn check_feasibility(spec: &LoiterSpec, tau: f64, limits: &ActuatorLimits) -> bool {
    let u = limits.max_turn_rate;
    tau > 0.0 && spec.speed / spec.radius < u && 1.0 / tau > 3f64.sqrt() * u / 2.0
}

/// Desired relative velocity at relative position `rel` (UAV minus target).
pub fn lyapunov_field(rel: &Vector2, spec: &LoiterSpec) -> Vector2 {
    let (x, y) = (rel[0], rel[1]);
    let r2 = x * x + y * y;
    let r = r2.sqrt();
    if r < ORIGIN_EPSILON {
        return Vector2::new(spec.speed, 0.0);
    }
    let rd = spec.radius;
    let rd2 = rd * rd;
    let gain = -spec.speed / (r * (r2 + rd2));
    Vector2::new(
        gain * (x * (r2 - rd2) + 2.0 * y * rd * r),
        gain * (y * (r2 - rd2) - 2.0 * x * rd * r),
    )
}

/// Cosine of the angle between a position and a velocity.
pub fn cos_alpha(rel: &Vector2, vel: &Vector2) -> Result<f64> {
    let (a, b) = (rel.norm(), vel.norm());
    if a == 0.0 || b == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((rel.dot(vel) / (a * b)).clamp(-1.0, 1.0))
}

/// Speed and heading of `gmt_vel + field_vel`.
///
/// A zero total velocity has no heading; `fallback_heading` is returned
/// instead (typically the previous command).
pub fn desired_command(field_vel: &Vector2, gmt_vel: &Vector2, fallback_heading: f64) -> GuidanceCommand {
    let total = gmt_vel + field_vel;
    let speed = total.norm();
    let heading = if speed > 0.0 { wrap(total[1].atan2(total[0])) } else { wrap(fallback_heading) };
    GuidanceCommand { speed, heading }
}

/// The radial map induced by the field in polar coordinates.
pub fn radial_iterate(r: f64, spec: &LoiterSpec, tau: f64) -> f64 {
    let (r2, rd2) = (r * r, spec.radius * spec.radius);
    r - spec.speed * tau * (r2 - rd2) / (r2 + rd2)
}

/// `V(r) = (r^2 - r_d^2)^2 / 2`.
pub fn lyapunov_value(r: f64, spec: &LoiterSpec) -> f64 {
    let d = r * r - spec.radius * spec.radius;
    0.5 * d * d
}
