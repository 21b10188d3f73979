//! Named scenario presets.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use crate::estimation::{ModePrior, Resampling};
use crate::gmt::{GmtNoiseModel, GmtState, ManeuverModel};
use crate::guidance::LoiterSpec;
use crate::harness::config::{
    ControllerConfig, Experiment, ExperimentConfig, FilterConfig, ScenarioConfig, SensorConfig, StateSource,
    TargetConfig, UavConfig,
};
use crate::ismc::{ControllerKind, GainSet, PdGains};
use crate::sensors::{CameraModel, NoiseCovariance, RadarModel, SensorModel};
use crate::uav::UavState;

pub const NAMES: [&str; 4] = ["paper-3mode-camera", "paper-3mode-radar", "paper-9mode", "paper-stationary"];

/// Episode length (s) of every preset.
pub const DURATION: f64 = 300.0;

/// Orbit radius (m) and relative loiter speed (m/s) of every preset.
pub const LOITER_RADIUS: f64 = 200.0;
pub const LOITER_SPEED: f64 = 5.0;

/// Camera focal length in normalized image units.
pub const FOCAL_LENGTH: f64 = 1.0;

pub fn preset(name: &str) -> Option<ScenarioConfig> {
    match name {
        "paper-3mode-camera" => Some(camera()),
        "paper-3mode-radar" => Some(radar()),
        "paper-9mode" => Some(nine_mode()),
        "paper-stationary" => Some(stationary()),
        _ => None,
    }
}

fn camera_sensor() -> SensorModel {
    SensorModel::Camera(CameraModel {
        focal_length: FOCAL_LENGTH,
        noise: NoiseCovariance::diagonal(0.03, 0.03).expect("diagonal"),
        rate_hz: 25.0,
    })
}

fn radar_sensor() -> SensorModel {
    SensorModel::Radar(RadarModel { noise: NoiseCovariance::diagonal(2.0, 0.01).expect("diagonal"), rate_hz: 10.0 })
}

fn camera() -> ScenarioConfig {
    let tau = 0.04;
    ScenarioConfig {
        name: "paper-3mode-camera".into(),
        tau,
        horizon: (DURATION / tau).round() as usize,
        seed: 0,
        target: TargetConfig {
            initial: GmtState::from_speed_heading(0.0, 100.0, 0.0, 8.0, FRAC_PI_4),
            maneuver: ManeuverModel::three_mode(),
            noise_cov: GmtNoiseModel::diagonal(0.3, 0.3, 0.1).expect("diagonal"),
        },
        uav: UavConfig {
            initial: UavState { x: -300.0, y: 100.0, v: 10.0, psi: -FRAC_PI_2 },
            altitude: 50.0,
            max_turn_rate: 0.2,
            disturbance_sigma: [0.1, 0.02],
            disturbance_bound: [0.3, 0.06],
        },
        guidance: LoiterSpec { radius: LOITER_RADIUS, speed: LOITER_SPEED },
        controller: ControllerConfig { kind: ControllerKind::Ismc, gains: GainSet::default(), pd: PdGains::default() },
        sensor: SensorConfig { model: camera_sensor(), delay: 0.1 },
        filter: FilterConfig {
            particles: 100,
            threshold: None,
            transition_known: true,
            prior: ModePrior::Initial,
            resampling: Resampling::Multinomial,
            initial_cov_diag: [100.0, 100.0, 1.0, 4.0, 4.0],
        },
        experiment: ExperimentConfig {
            kind: Experiment::ClosedLoop,
            state_source: StateSource::Filter,
            band: 20.0,
            steady_fraction: 0.5,
            final_fraction: 0.25,
        },
    }
}

fn radar() -> ScenarioConfig {
    let tau = 0.1;
    let mut cfg = camera();
    cfg.name = "paper-3mode-radar".into();
    cfg.tau = tau;
    cfg.horizon = (DURATION / tau).round() as usize;
    cfg.sensor.model = radar_sensor();
    cfg
}

fn nine_mode() -> ScenarioConfig {
    let mut cfg = camera();
    cfg.name = "paper-9mode".into();
    cfg.target.maneuver = ManeuverModel::nine_mode();
    cfg.filter.transition_known = false;
    cfg
}

fn stationary() -> ScenarioConfig {
    let mut cfg = camera();
    cfg.name = "paper-stationary".into();
    cfg.target.initial = GmtState { x: 0.0, y: 100.0, z: 0.0, vx: 0.0, vy: 0.0 };
    cfg.target.maneuver = ManeuverModel::stationary();
    cfg.target.noise_cov = GmtNoiseModel::diagonal(0.0, 0.0, 0.0).expect("zero");
    cfg
}
