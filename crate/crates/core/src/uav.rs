//! Fixed-altitude unicycle UAV with exact zero-order-hold discretization.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::angle::wrap;
use crate::linalg::Vector2;
use crate::{Error, Result};

/// Below this turn rate (rad/s) the closed form is replaced by its series.
pub const TURN_RATE_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UavState {
    pub x: f64,
    pub y: f64,
    /// Forward speed (m/s).
    pub v: f64,
    /// Heading (rad), kept in `[-pi, pi)`.
    pub psi: f64,
}

impl UavState {
    pub fn position(&self) -> Vector2 {
        Vector2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    /// Commanded acceleration (m/s²).
    pub accel: f64,
    /// Commanded turn rate (rad/s).
    pub turn_rate: f64,
}

impl ControlInput {
    pub fn new(accel: f64, turn_rate: f64) -> Self {
        Self { accel, turn_rate }
    }

    pub fn to_vector(&self) -> Vector2 {
        Vector2::new(self.accel, self.turn_rate)
    }
}

/// Per-channel disturbance bounds `|w_v| <= w_v`, `|w_psi| <= w_psi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceBounds {
    pub w_v: f64,
    pub w_psi: f64,
}

impl DisturbanceBounds {
    pub fn new(w_v: f64, w_psi: f64) -> Result<Self> {
        if !(w_v >= 0.0 && w_psi >= 0.0) {
            return Err(Error::Config(format!("disturbance bounds must be nonnegative, got ({w_v}, {w_psi})")));
        }
        Ok(Self { w_v, w_psi })
    }

    pub fn to_vector(&self) -> Vector2 {
        Vector2::new(self.w_v, self.w_psi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorLimits {
    /// Largest admissible turn rate magnitude (rad/s).
    pub max_turn_rate: f64,
}

impl ActuatorLimits {
    pub fn new(max_turn_rate: f64) -> Result<Self> {
        if !(max_turn_rate > 0.0) {
            return Err(Error::Config(format!("turn-rate limit must be positive, got {max_turn_rate}")));
        }
        Ok(Self { max_turn_rate })
    }
}

/// Clamp the turn rate; acceleration passes through.
pub fn saturate(input: ControlInput, limits: ActuatorLimits) -> ControlInput {
    let m = limits.max_turn_rate;
    ControlInput { accel: input.accel, turn_rate: input.turn_rate.clamp(-m, m) }
}

/// Advance the UAV one interval with perturbed input `input + disturbance`.
///
/// Speed and turn rate are held over the interval and the unicycle is
/// integrated exactly.
pub fn step_uav(state: &UavState, input: ControlInput, disturbance: &Vector2, tau: f64) -> Result<UavState> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::NonPositiveStep(tau));
    }
    let a = input.accel + disturbance[0];
    let w = input.turn_rate + disturbance[1];
    let (dx, dy) = displacement(state.v, state.psi, a, w, tau);
    Ok(UavState {
        x: state.x + dx,
        y: state.y + dy,
        v: state.v + a * tau,
        psi: wrap(state.psi + w * tau),
    })
}

fn displacement(v: f64, psi: f64, a: f64, w: f64, tau: f64) -> (f64, f64) {
    if w.abs() < TURN_RATE_EPSILON {
        series_displacement(v, psi, a, w, tau)
    } else {
        exact_displacement(v, psi, a, w, tau)
    }
}

fn exact_displacement(v: f64, psi: f64, a: f64, w: f64, tau: f64) -> (f64, f64) {
    let half = w * tau / 2.0;
    let s_half = half.sin();
    let (s_mid, c_mid) = (psi + half).sin_cos();
    let (s_end, c_end) = (psi + w * tau).sin_cos();
    let dx = (2.0 * v * c_mid * s_half + a * tau * s_end - (a / w) * 2.0 * s_mid * s_half) / w;
    let dy = (2.0 * v * s_mid * s_half - a * tau * c_end + (a / w) * 2.0 * c_mid * s_half) / w;
    (dx, dy)
}

/// Second-order expansion of the exact displacement in the turn rate; at
/// `w = 0` it is the straight-line, constant-acceleration update.
fn series_displacement(v: f64, psi: f64, a: f64, w: f64, tau: f64) -> (f64, f64) {
    let (s, c) = psi.sin_cos();
    let t2 = tau * tau;
    let t3 = t2 * tau;
    let t4 = t3 * tau;
    let w2 = w * w;
    let dx = v * (tau * c - w * t2 / 2.0 * s - w2 * t3 / 6.0 * c)
        + a * (t2 / 2.0 * c - w * t3 / 3.0 * s - w2 * t4 / 8.0 * c);
    let dy = v * (tau * s + w * t2 / 2.0 * c - w2 * t3 / 6.0 * s)
        + a * (t2 / 2.0 * s + w * t3 / 3.0 * c - w2 * t4 / 8.0 * s);
    (dx, dy)
}

/// Gaussian disturbance per channel, redrawn until it lies inside the bounds.
pub fn sample_bounded_disturbance<R: Rng + ?Sized>(
    bounds: DisturbanceBounds,
    sigma_v: f64,
    sigma_psi: f64,
    rng: &mut R,
) -> Vector2 {
    Vector2::new(
        truncated_normal(sigma_v, bounds.w_v, rng),
        truncated_normal(sigma_psi, bounds.w_psi, rng),
    )
}

fn truncated_normal<R: Rng + ?Sized>(sigma: f64, bound: f64, rng: &mut R) -> f64 {
    if sigma <= 0.0 || bound <= 0.0 {
        return 0.0;
    }
    // Rejection is hopeless for bounds far inside one standard deviation;
    // the distribution is then practically uniform on the interval.
    if bound < 1e-3 * sigma {
        return rng.random_range(-bound..=bound);
    }
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let w = sigma * z;
        if w.abs() <= bound {
            return w;
        }
    }
}
