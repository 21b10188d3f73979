//! Discrete integral sliding-mode tracking of speed/heading commands, with
//! PD and plain SMC baselines.
//!
//! Both channels are handled componentwise: index 0 is speed, index 1 is
//! heading.

use serde::{Deserialize, Serialize};

use crate::angle;
use crate::guidance::GuidanceCommand;
use crate::linalg::Vector2;
use crate::uav::{ControlInput, DisturbanceBounds, UavState};
use crate::{Error, Result};

/// Anti-windup clamp on each channel of the error accumulator.
pub const INTEGRAL_CLAMP: f64 = 1e4;

/// Diagonal gains `W` (switching), `M` (reaching) and `C` (integral surface).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSet {
    pub w: [f64; 2],
    pub m: [f64; 2],
    pub c: [f64; 2],
}

impl GainSet {
    pub fn w(&self) -> Vector2 {
        Vector2::from(self.w)
    }

    pub fn m(&self) -> Vector2 {
        Vector2::from(self.m)
    }

    pub fn c(&self) -> Vector2 {
        Vector2::from(self.c)
    }
}

impl Default for GainSet {
    fn default() -> Self {
        Self { w: [0.2, 0.04], m: [5.0, 0.6], c: [5.0, 3.0] }
    }
}

/// `e = (v - v_d, wrap(psi - psi_d))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingError {
    pub e_v: f64,
    pub e_psi: f64,
}

impl TrackingError {
    pub fn to_vector(&self) -> Vector2 {
        Vector2::new(self.e_v, self.e_psi)
    }
}

/// Per-episode controller memory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ControllerState {
    /// Sum of all previous errors.
    pub integral: Vector2,
    pub previous_command: Option<GuidanceCommand>,
    pub previous_error: Option<Vector2>,
}

impl ControllerState {
    pub fn reset(&mut self) {
        *self = Self::default();
    }

    /// Backward difference of the command (heading part wrapped); zero on
    /// the first call. Records `cmd` as the previous command.
    pub fn command_increment(&mut self, cmd: GuidanceCommand) -> Vector2 {
        let delta = match self.previous_command {
            Some(prev) => Vector2::new(cmd.speed - prev.speed, angle::diff(cmd.heading, prev.heading)),
            None => Vector2::zeros(),
        };
        self.previous_command = Some(cmd);
        delta
    }
}

pub fn tracking_error(uav: &UavState, cmd: &GuidanceCommand) -> TrackingError {
    TrackingError { e_v: uav.v - cmd.speed, e_psi: angle::diff(uav.psi, cmd.heading) }
}

/// `s = e + tau C sum(e_i)` over past errors, then folds `e` into the sum.
pub fn surface(err: &TrackingError, ctrl: &mut ControllerState, c: &Vector2, tau: f64) -> Vector2 {
    let e = err.to_vector();
    let s = e + tau * c.component_mul(&ctrl.integral);
    ctrl.integral = (ctrl.integral + e).map(|v| v.clamp(-INTEGRAL_CLAMP, INTEGRAL_CLAMP));
    s
}

/// Ternary sign with `sgn(0) = 0`.
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `u = -W sgn(s) - M s - C e + delta_cmd / tau`.
pub fn control(err: &TrackingError, s: &Vector2, delta_cmd: &Vector2, gains: &GainSet, tau: f64) -> ControlInput {
    let e = err.to_vector();
    let u = -gains.w().component_mul(&s.map(sgn)) - gains.m().component_mul(s) - gains.c().component_mul(&e)
        + delta_cmd / tau;
    ControlInput::new(u[0], u[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainValidation {
    pub valid: bool,
    pub diagnostics: Vec<String>,
}

/// All of `c_v, c_psi, m_v, m_psi` must lie strictly inside `(0, 1/tau)`.
pub fn validate_gains(gains: &GainSet, tau: f64) -> GainValidation {
    let mut diagnostics = Vec::new();
    if !(tau > 0.0) {
        diagnostics.push(format!("step {tau} is not positive"));
    }
    let upper = 1.0 / tau;
    let named = [
        ("c_v", gains.c[0]),
        ("c_psi", gains.c[1]),
        ("m_v", gains.m[0]),
        ("m_psi", gains.m[1]),
    ];
    for (name, value) in named {
        if !(value > 0.0 && value < upper) {
            diagnostics.push(format!("{name} = {value} is outside (0, {upper})"));
        }
    }
    for (name, value) in [("w_v", gains.w[0]), ("w_psi", gains.w[1])] {
        if !(value >= 0.0) {
            diagnostics.push(format!("{name} = {value} is negative"));
        }
    }
    GainValidation { valid: diagnostics.is_empty(), diagnostics }
}

fn require_valid(gains: &GainSet, tau: f64) -> Result<()> {
    let check = validate_gains(gains, tau);
    if check.valid {
        Ok(())
    } else {
        Err(Error::InvalidGains(check.diagnostics.join("; ")))
    }
}

/// Asymptotic bound on `|e|` per channel: `4 w / (c (2 - tau m))`.
pub fn error_bound(gains: &GainSet, bounds: &DisturbanceBounds, tau: f64) -> Result<Vector2> {
    require_valid(gains, tau)?;
    let w = bounds.to_vector();
    Ok(Vector2::from_fn(|i, _| 4.0 * w[i] / (gains.c[i] * (2.0 - tau * gains.m[i]))))
}

/// Width of the band the sliding variable settles into: `2 tau w / (2 - tau m)`.
pub fn boundary_layer(gains: &GainSet, bounds: &DisturbanceBounds, tau: f64) -> Result<Vector2> {
    require_valid(gains, tau)?;
    let w = bounds.to_vector();
    Ok(Vector2::from_fn(|i, _| 2.0 * tau * w[i] / (2.0 - tau * gains.m[i])))
}

/// `u = -kp e - kd (e - e_prev) / tau + delta_cmd / tau`; the derivative
/// term is zero when no previous error exists.
pub fn pd_baseline(
    err: &TrackingError,
    previous_error: Option<&Vector2>,
    delta_cmd: &Vector2,
    kp: &Vector2,
    kd: &Vector2,
    tau: f64,
) -> ControlInput {
    let e = err.to_vector();
    let de = previous_error.map_or_else(Vector2::zeros, |p| (e - p) / tau);
    let u = -kp.component_mul(&e) - kd.component_mul(&de) + delta_cmd / tau;
    ControlInput::new(u[0], u[1])
}

/// Constant-rate reaching law on `s = e`: `u = -W sgn(s) + delta_cmd / tau`.
pub fn smc_baseline(s: &Vector2, delta_cmd: &Vector2, w: &Vector2, tau: f64) -> ControlInput {
    let u = -w.component_mul(&s.map(sgn)) + delta_cmd / tau;
    ControlInput::new(u[0], u[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Ismc,
    Pd,
    Smc,
}

/// PD gains for the baseline controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdGains {
    pub kp: [f64; 2],
    pub kd: [f64; 2],
}

impl Default for PdGains {
    fn default() -> Self {
        Self { kp: [1.0, 0.6], kd: [0.05, 0.05] }
    }
}

/// One control cycle's internals, for logging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub error: TrackingError,
    pub surface: Vector2,
    pub input: ControlInput,
}

/// A controller of any supported kind plus its memory.
#[derive(Debug, Clone)]
pub struct Controller {
    pub kind: ControllerKind,
    pub gains: GainSet,
    pub pd: PdGains,
    pub tau: f64,
    pub state: ControllerState,
}

impl Controller {
    pub fn new(kind: ControllerKind, gains: GainSet, pd: PdGains, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::NonPositiveStep(tau));
        }
        Ok(Self { kind, gains, pd, tau, state: ControllerState::default() })
    }

    /// Unsaturated input for the current pose and command.
    pub fn step(&mut self, uav: &UavState, cmd: GuidanceCommand) -> ControlOutput {
        let error = tracking_error(uav, &cmd);
        let delta = self.state.command_increment(cmd);
        let e = error.to_vector();
        let (surface, input) = match self.kind {
            ControllerKind::Ismc => {
                let s = surface(&error, &mut self.state, &self.gains.c(), self.tau);
                (s, control(&error, &s, &delta, &self.gains, self.tau))
            }
            ControllerKind::Pd => {
                let kp = Vector2::from(self.pd.kp);
                let kd = Vector2::from(self.pd.kd);
                let u = pd_baseline(&error, self.state.previous_error.as_ref(), &delta, &kp, &kd, self.tau);
                (e, u)
            }
            ControllerKind::Smc => (e, smc_baseline(&e, &delta, &self.gains.w(), self.tau)),
        };
        self.state.previous_error = Some(e);
        ControlOutput { error, surface, input }
    }
}
