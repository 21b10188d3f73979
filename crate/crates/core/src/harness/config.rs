//! Scenario configuration (TOML) and its validation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::gmt::{build_system_matrices, GmtNoiseModel, GmtState, ManeuverModel};
use crate::guidance::{check_feasibility, LoiterSpec};
use crate::ismc::{error_bound, validate_gains, ControllerKind, GainSet, GainValidation, PdGains};
use crate::linalg::{Matrix5, Vector5};
use crate::estimation::{ModePrior, RbpfConfig, Resampling};
use crate::sensors::{delay_steps, SensorModel};
use crate::uav::{ActuatorLimits, DisturbanceBounds, UavState};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Simulation step (s).
    pub tau: f64,
    /// Number of simulation steps.
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    pub target: TargetConfig,
    pub uav: UavConfig,
    pub guidance: LoiterSpec,
    pub controller: ControllerConfig,
    pub sensor: SensorConfig,
    pub filter: FilterConfig,
    pub experiment: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub initial: GmtState,
    pub maneuver: ManeuverModel,
    /// Input noise covariance (X/Y acceleration, altitude rate).
    pub noise_cov: GmtNoiseModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UavConfig {
    pub initial: UavState,
    /// Constant flight altitude (m), used only by the sensor geometry.
    pub altitude: f64,
    pub max_turn_rate: f64,
    /// Standard deviations of the speed and turn-rate disturbances.
    pub disturbance_sigma: [f64; 2],
    /// Truncation bounds of the disturbances.
    pub disturbance_bound: [f64; 2],
}

impl UavConfig {
    pub fn limits(&self) -> Result<ActuatorLimits> {
        ActuatorLimits::new(self.max_turn_rate)
    }

    pub fn bounds(&self) -> Result<DisturbanceBounds> {
        DisturbanceBounds::new(self.disturbance_bound[0], self.disturbance_bound[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub kind: ControllerKind,
    pub gains: GainSet,
    #[serde(default)]
    pub pd: PdGains,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub model: SensorModel,
    /// Measurement latency (s), applied in closed-loop experiments only.
    #[serde(default)]
    pub delay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub particles: usize,
    #[serde(default)]
    pub threshold: Option<f64>,
    pub transition_known: bool,
    #[serde(default)]
    pub prior: ModePrior,
    #[serde(default)]
    pub resampling: Resampling,
    /// Diagonal of the initial covariance.
    pub initial_cov_diag: [f64; 5],
}

impl FilterConfig {
    pub fn rbpf(&self, transition_known: bool) -> RbpfConfig {
        RbpfConfig {
            particles: self.particles,
            threshold: self.threshold,
            transition_known,
            prior: self.prior.clone(),
            resampling: self.resampling,
        }
    }

    pub fn initial_cov(&self) -> Matrix5 {
        Matrix5::from_diagonal(&Vector5::from(self.initial_cov_diag))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Guidance and control driven by the state source.
    ClosedLoop,
    /// RBPF with known and unknown transitions against the random-input
    /// EKF, the UAV guided on the true target state.
    Filters,
    /// ISMC, PD and SMC on the true target state.
    Controllers,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::ClosedLoop => "closed-loop",
            Experiment::Filters => "filters",
            Experiment::Controllers => "controllers",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateSource {
    /// RBPF estimates (certainty equivalence).
    Filter,
    /// Exact target state.
    Truth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Experiment,
    pub state_source: StateSource,
    /// Half-width (m) of the distance band around the orbit radius used for
    /// loitering and settling statistics.
    pub band: f64,
    /// Trailing fraction of the episode treated as steady state for RMSE.
    pub steady_fraction: f64,
    /// Trailing fraction of the episode checked for the distance band and
    /// tracking errors.
    pub final_fraction: f64,
}

/// Outcome of validating a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Hard errors: the scenario cannot run.
    pub errors: Vec<String>,
    pub feasible: bool,
    pub gains: GainValidation,
    pub sensor_period: f64,
    pub sensor_every: usize,
    pub delay_steps: usize,
    /// Asymptotic tracking-error bound (speed, heading) for the configured
    /// disturbance bounds, if the gains admit one.
    pub error_bound: Option<[f64; 2]>,
}

impl ValidationReport {
    pub fn structurally_valid(&self) -> bool {
        self.errors.is_empty()
    }

    /// No hard errors, feasible guidance and admissible gains.
    pub fn passes(&self) -> bool {
        self.errors.is_empty() && self.feasible && self.gains.valid
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        toml::from_str(&text).map_err(|source| Error::TomlDe { path: path.into(), source })
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Sensor period (s).
    pub fn sensor_period(&self) -> f64 {
        1.0 / self.sensor.model.rate_hz()
    }

    /// Simulation steps per sensor sample.
    pub fn sensor_every(&self) -> usize {
        (self.sensor_period() / self.tau).round().max(1.0) as usize
    }

    pub fn validate(&self) -> ValidationReport {
        let mut errors = Vec::new();
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            errors.push(format!("tau must be positive, got {}", self.tau));
        }
        if self.horizon == 0 {
            errors.push("horizon must be at least 1".into());
        }
        let rate = self.sensor.model.rate_hz();
        let mut period = f64::NAN;
        let mut every = 1;
        if !(rate > 0.0 && rate.is_finite()) {
            errors.push(format!("sensor rate must be positive, got {rate}"));
        } else if self.tau > 0.0 {
            period = 1.0 / rate;
            every = self.sensor_every();
            if ((period / self.tau) - every as f64).abs() > 1e-9 * every as f64 {
                errors.push(format!("sensor period {period} is not a multiple of tau {}", self.tau));
            }
        }
        if let SensorModel::Camera(c) = &self.sensor.model {
            if !(c.focal_length > 0.0) {
                errors.push(format!("focal length must be positive, got {}", c.focal_length));
            }
        }
        if !(self.sensor.delay >= 0.0) {
            errors.push(format!("delay must be nonnegative, got {}", self.sensor.delay));
        }
        if let Err(e) = self.uav.limits() {
            errors.push(e.to_string());
        }
        if let Err(e) = self.uav.bounds() {
            errors.push(e.to_string());
        }
        if self.uav.disturbance_sigma.iter().any(|s| !(*s >= 0.0)) {
            errors.push("disturbance sigmas must be nonnegative".into());
        }
        if !(self.uav.altitude > 0.0) {
            errors.push(format!("altitude must be positive, got {}", self.uav.altitude));
        }
        if let Err(e) = LoiterSpec::new(self.guidance.radius, self.guidance.speed) {
            errors.push(e.to_string());
        }
        if self.target.initial_mode_valid().is_err() {
            errors.push("initial target mode out of range".into());
        }
        if !self.target.initial.is_finite() {
            errors.push("initial target state must be finite".into());
        }
        if let Err(e) = self.filter.rbpf(true).validate(self.target.maneuver.len()) {
            errors.push(e.to_string());
        }
        if self.filter.initial_cov_diag.iter().any(|v| !(*v > 0.0)) {
            errors.push("initial covariance diagonal must be positive".into());
        }
        let ex = &self.experiment;
        if !(ex.band > 0.0) {
            errors.push("experiment band must be positive".into());
        }
        for (name, f) in [("steady_fraction", ex.steady_fraction), ("final_fraction", ex.final_fraction)] {
            if !(f > 0.0 && f <= 1.0) {
                errors.push(format!("{name} must lie in (0, 1], got {f}"));
            }
        }

        let control_period = if period.is_finite() { period } else { self.tau };
        let feasible = self
            .uav
            .limits()
            .map(|l| check_feasibility(&self.guidance, control_period, &l))
            .unwrap_or(false);
        let gains = validate_gains(&self.controller.gains, control_period);
        let bound = self
            .uav
            .bounds()
            .ok()
            .and_then(|b| error_bound(&self.controller.gains, &b, control_period).ok())
            .map(|v| [v[0], v[1]]);
        let delay = if period.is_finite() { delay_steps(self.sensor.delay, period) } else { 0 };
        if build_system_matrices(control_period).is_err() {
            errors.push("cannot build target matrices for the sensor period".into());
        }
        ValidationReport {
            errors,
            feasible,
            gains,
            sensor_period: period,
            sensor_every: every,
            delay_steps: delay,
            error_bound: bound,
        }
    }

    /// Fail on hard errors; log feasibility and gain problems.
    pub fn check(&self) -> Result<ValidationReport> {
        let report = self.validate();
        if !report.errors.is_empty() {
            return Err(Error::Config(report.errors.join("; ")));
        }
        if !report.feasible {
            log::warn!("{}: guidance feasibility condition violated; convergence is not guaranteed", self.name);
        }
        if !report.gains.valid {
            log::warn!("{}: controller gains outside the admissible range: {}", self.name, report.gains.diagnostics.join("; "));
        }
        Ok(report)
    }

    /// 64-bit FNV-1a hash of the canonical TOML form, as hex.
    pub fn hash(&self) -> String {
        let text = self.to_toml().unwrap_or_default();
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }

    pub fn noise(&self) -> &GmtNoiseModel {
        &self.target.noise_cov
    }
}

impl TargetConfig {
    fn initial_mode_valid(&self) -> Result<usize> {
        let m = self.maneuver.initial_mode();
        self.maneuver.input(m).map(|_| m)
    }
}
