//! Single-episode runners.
//!
//! Every simulation step advances the target and the UAV (the UAV with the
//! input held from the last control update). On sensor steps the gimbal is
//! pointed at the predicted target position, a measurement of the (possibly
//! delayed) true target is taken, the estimators update, and guidance and
//! control produce the input held until the next sensor step.

use serde::{Deserialize, Serialize};

use crate::estimation::{EkfBaseline, Rbpf};
use crate::gmt::{build_system_matrices, sample_mode, step_gmt, GmtState, SystemMatrices};
use crate::guidance::{desired_command, lyapunov_field, GuidanceCommand};
use crate::harness::config::{Experiment, ScenarioConfig, StateSource};
use crate::ismc::{Controller, ControllerKind};
use crate::linalg::{Matrix5, Vector2, Vector3, Vector5};
use crate::rng::{stream, SimRng, Stream};
use crate::sensors::{point_gimbal, DelayBuffer, GimbalAngles, Measurement, SensorContext, SensorModel};
use crate::uav::{sample_bounded_disturbance, saturate, step_uav, ActuatorLimits, ControlInput, DisturbanceBounds, UavState};
use crate::Result;

/// One row of a closed-loop trace. Sensor-side columns are empty on steps
/// without a measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    pub t: f64,
    pub gmt_x: f64,
    pub gmt_y: f64,
    pub gmt_z: f64,
    pub gmt_vx: f64,
    pub gmt_vy: f64,
    pub gmt_mode: usize,
    pub uav_x: f64,
    pub uav_y: f64,
    pub uav_v: f64,
    pub uav_psi: f64,
    pub est_x: f64,
    pub est_y: f64,
    pub est_vx: f64,
    pub est_vy: f64,
    pub est_cov_trace: f64,
    pub distance: f64,
    pub cmd_v: f64,
    pub cmd_psi: f64,
    pub e_v: f64,
    pub e_psi: f64,
    pub s_v: f64,
    pub s_psi: f64,
    pub u_v: f64,
    pub u_psi: f64,
    pub meas_kind: Option<String>,
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub meas_valid: Option<bool>,
    pub gimbal_pitch: Option<f64>,
    pub gimbal_yaw: Option<f64>,
    pub gimbal_clamped: Option<bool>,
    pub n_eff: Option<f64>,
    pub resampled: Option<bool>,
    pub mode_histogram: Option<String>,
}

/// Per-episode statistics used by the Monte Carlo driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    /// Squared planar estimation error per step.
    pub squared_error: Vec<f64>,
    /// Largest `|distance - r_d|` over the final window.
    pub final_max_deviation: f64,
    pub within_band: bool,
    /// Time (s) after which the distance stays inside the band.
    pub settling_time: Option<f64>,
    /// Largest `|e_v|`, `|e_psi|` over the final window.
    pub final_max_error: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub records: Vec<StepRecord>,
    pub summary: EpisodeSummary,
}

/// Planar error of three estimators on one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRecord {
    pub k: usize,
    pub t: f64,
    pub gmt_x: f64,
    pub gmt_y: f64,
    pub gmt_mode: usize,
    pub known_x: f64,
    pub known_y: f64,
    pub known_n_eff: f64,
    pub unknown_x: f64,
    pub unknown_y: f64,
    pub unknown_n_eff: f64,
    pub ekf_x: f64,
    pub ekf_y: f64,
    pub uav_x: f64,
    pub uav_y: f64,
}

/// Estimator names in [`FilterSummary::squared_error`] order.
pub const FILTER_NAMES: [&str; 3] = ["rbpf_known", "rbpf_unknown", "ekf"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSummary {
    pub squared_error: [Vec<f64>; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterTrace {
    pub records: Vec<FilterRecord>,
    pub summary: FilterSummary,
}

/// Settling statistics of the three controllers on the same scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerSummary {
    pub kinds: Vec<ControllerKind>,
    pub settling_time: Vec<Option<f64>>,
    pub final_max_error: Vec<[f64; 2]>,
}

/// Target truth and UAV with their random streams.
struct Plant {
    truth: GmtState,
    mode: usize,
    uav: UavState,
    input: ControlInput,
    mats: SystemMatrices,
    limits: ActuatorLimits,
    bounds: DisturbanceBounds,
    mode_rng: SimRng,
    noise_rng: SimRng,
    disturbance_rng: SimRng,
}

impl Plant {
    fn new(cfg: &ScenarioConfig, seed: u64) -> Result<Self> {
        Ok(Self {
            truth: cfg.target.initial,
            mode: cfg.target.maneuver.initial_mode(),
            uav: cfg.uav.initial,
            input: ControlInput::default(),
            mats: build_system_matrices(cfg.tau)?,
            limits: cfg.uav.limits()?,
            bounds: cfg.uav.bounds()?,
            mode_rng: stream(seed, Stream::TargetModes),
            noise_rng: stream(seed, Stream::TargetNoise),
            disturbance_rng: stream(seed, Stream::UavDisturbance),
        })
    }

    fn advance(&mut self, cfg: &ScenarioConfig) -> Result<()> {
        let w = cfg.target.noise_cov.sample(&mut self.noise_rng);
        self.truth = step_gmt(&self.truth, self.mode, &w, &cfg.target.maneuver, &self.mats)?;
        self.mode = sample_mode(self.mode, &cfg.target.maneuver, &mut self.mode_rng)?;
        let [sv, sp] = cfg.uav.disturbance_sigma;
        let d = sample_bounded_disturbance(self.bounds, sv, sp, &mut self.disturbance_rng);
        self.uav = step_uav(&self.uav, self.input, &d, cfg.tau)?;
        Ok(())
    }

    fn uav_position(&self, altitude: f64) -> Vector3 {
        Vector3::new(self.uav.x, self.uav.y, -altitude)
    }

    fn distance(&self) -> f64 {
        (self.uav.position() - self.truth.planar_position()).norm()
    }
}

/// Gimbal pointed at `aim` (if the sensor has one) and the resulting context.
fn sensor_context(sensor: &SensorModel, uav_pos: &Vector3, heading: f64, aim: &Vector3) -> (SensorContext, Option<(GimbalAngles, bool)>) {
    if sensor.uses_gimbal() {
        match point_gimbal(uav_pos, heading, aim) {
            Ok(p) => (SensorContext::new(*uav_pos, heading, p.angles), Some((p.angles, p.clamped))),
            Err(_) => (SensorContext::new(*uav_pos, heading, GimbalAngles::default()), None),
        }
    } else {
        (SensorContext::new(*uav_pos, heading, GimbalAngles::default()), None)
    }
}

fn position3(x: &Vector5) -> Vector3 {
    Vector3::new(x[0], x[1], x[2])
}

fn command(cfg: &ScenarioConfig, uav: &UavState, est: &Vector5, fallback: f64) -> GuidanceCommand {
    let rel = uav.position() - Vector2::new(est[0], est[1]);
    let field = lyapunov_field(&rel, &cfg.guidance);
    desired_command(&field, &Vector2::new(est[3], est[4]), fallback)
}

fn final_window(horizon: usize, fraction: f64) -> usize {
    let len = ((horizon as f64) * fraction).round() as usize;
    horizon - len.clamp(1, horizon)
}

fn settling_time(distances: &[f64], radius: f64, band: f64, tau: f64) -> Option<f64> {
    let last_outside = distances.iter().rposition(|d| (d - radius).abs() > band);
    match last_outside {
        None => Some(tau),
        Some(i) if i + 1 < distances.len() => Some((i + 2) as f64 * tau),
        Some(_) => None,
    }
}

/// Closed-loop episode; guidance uses the configured state source.
pub fn run_episode(cfg: &ScenarioConfig, seed: u64) -> Result<EpisodeTrace> {
    let report = cfg.check()?;
    let mut plant = Plant::new(cfg, seed)?;
    let every = report.sensor_every;
    let sensor_tau = report.sensor_period;
    let sensor = &cfg.sensor.model;
    let filter_mats = build_system_matrices(sensor_tau)?;
    let process_noise = filter_mats.process_noise(cfg.noise());
    let mut filter_rng = stream(seed, Stream::Filter(0));
    let mut meas_rng = stream(seed, Stream::MeasurementNoise);
    let x0 = cfg.target.initial.to_vector();
    let mut rbpf = Rbpf::new(
        cfg.filter.rbpf(cfg.filter.transition_known),
        cfg.target.maneuver.clone(),
        filter_mats,
        process_noise,
        &x0,
        &cfg.filter.initial_cov(),
        &mut filter_rng,
    )?;
    let mut delay = DelayBuffer::new(report.delay_steps * every);
    let mut controller = Controller::new(cfg.controller.kind, cfg.controller.gains, cfg.controller.pd, sensor_tau)?;
    let use_filter = cfg.experiment.state_source == StateSource::Filter;

    let mut est = x0;
    let mut est_trace = cfg.filter.initial_cov().trace();
    let mut cmd = command(cfg, &plant.uav, &est, plant.uav.psi);
    let mut out = controller.step(&plant.uav, cmd);
    plant.input = saturate(out.input, plant.limits);

    let mut records = Vec::with_capacity(cfg.horizon);
    let mut squared_error = Vec::with_capacity(cfg.horizon);
    let mut distances = Vec::with_capacity(cfg.horizon);
    let mut errors = Vec::with_capacity(cfg.horizon);
    for k in 1..=cfg.horizon {
        plant.advance(cfg)?;
        let delayed = delay.push(plant.truth);
        let mut rec_sensor: Option<(Measurement, Option<(GimbalAngles, bool)>)> = None;
        let mut rec_filter = None;
        if k % every == 0 {
            let uav_pos = plant.uav_position(cfg.uav.altitude);
            if use_filter {
                rbpf.predict()?;
                let aim = position3(&rbpf.estimate().mean);
                let (ctx, gimbal) = sensor_context(sensor, &uav_pos, plant.uav.psi, &aim);
                let m = sensor.measure(&delayed, &ctx, &mut meas_rng, k);
                let tel = rbpf.update(Some(&m), sensor, &ctx, &mut filter_rng)?;
                est = tel.estimate.mean;
                est_trace = tel.estimate.cov.trace();
                rec_sensor = Some((m, gimbal));
                rec_filter = Some(tel);
            } else {
                let (ctx, gimbal) = sensor_context(sensor, &uav_pos, plant.uav.psi, &plant.truth.position());
                let m = sensor.measure(&delayed, &ctx, &mut meas_rng, k);
                est = plant.truth.to_vector();
                est_trace = 0.0;
                rec_sensor = Some((m, gimbal));
            }
            cmd = command(cfg, &plant.uav, &est, cmd.heading);
            out = controller.step(&plant.uav, cmd);
            plant.input = saturate(out.input, plant.limits);
        }

        let dist = plant.distance();
        distances.push(dist);
        errors.push([out.error.e_v, out.error.e_psi]);
        squared_error.push((Vector2::new(est[0], est[1]) - plant.truth.planar_position()).norm_squared());
        let (m, gimbal) = match &rec_sensor {
            Some((m, g)) => (Some(m), *g),
            None => (None, None),
        };
        records.push(StepRecord {
            k,
            t: k as f64 * cfg.tau,
            gmt_x: plant.truth.x,
            gmt_y: plant.truth.y,
            gmt_z: plant.truth.z,
            gmt_vx: plant.truth.vx,
            gmt_vy: plant.truth.vy,
            gmt_mode: plant.mode,
            uav_x: plant.uav.x,
            uav_y: plant.uav.y,
            uav_v: plant.uav.v,
            uav_psi: plant.uav.psi,
            est_x: est[0],
            est_y: est[1],
            est_vx: est[3],
            est_vy: est[4],
            est_cov_trace: est_trace,
            distance: dist,
            cmd_v: cmd.speed,
            cmd_psi: cmd.heading,
            e_v: out.error.e_v,
            e_psi: out.error.e_psi,
            s_v: out.surface[0],
            s_psi: out.surface[1],
            u_v: plant.input.accel,
            u_psi: plant.input.turn_rate,
            meas_kind: m.map(|m| m.kind.as_str().to_string()),
            m1: m.filter(|m| m.valid).map(|m| m.values[0]),
            m2: m.filter(|m| m.valid).map(|m| m.values[1]),
            meas_valid: m.map(|m| m.valid),
            gimbal_pitch: gimbal.map(|g| g.0.pitch),
            gimbal_yaw: gimbal.map(|g| g.0.yaw),
            gimbal_clamped: gimbal.map(|g| g.1),
            n_eff: rec_filter.as_ref().map(|t| t.n_eff),
            resampled: rec_filter.as_ref().map(|t| t.resampled),
            mode_histogram: rec_filter.as_ref().map(|t| {
                t.mode_histogram.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";")
            }),
        });
    }

    let start = final_window(cfg.horizon, cfg.experiment.final_fraction);
    let r_d = cfg.guidance.radius;
    let final_max_deviation = distances[start..].iter().map(|d| (d - r_d).abs()).fold(0.0, f64::max);
    let final_max_error = errors[start..]
        .iter()
        .fold([0.0f64, 0.0f64], |acc, e| [acc[0].max(e[0].abs()), acc[1].max(e[1].abs())]);
    let summary = EpisodeSummary {
        squared_error,
        final_max_deviation,
        within_band: final_max_deviation <= cfg.experiment.band,
        settling_time: settling_time(&distances, r_d, cfg.experiment.band, cfg.tau),
        final_max_error,
    };
    Ok(EpisodeTrace { records, summary })
}

/// RBPF (known transitions), RBPF (uniform transitions) and the
/// random-input EKF on one shared truth and measurement-noise sequence.
///
/// The UAV is guided on the exact target state and no measurement delay is
/// applied.
pub fn run_filter_episode(cfg: &ScenarioConfig, seed: u64) -> Result<FilterTrace> {
    let report = cfg.check()?;
    let mut plant = Plant::new(cfg, seed)?;
    let every = report.sensor_every;
    let sensor_tau = report.sensor_period;
    let sensor = &cfg.sensor.model;
    let mats = build_system_matrices(sensor_tau)?;
    let q: Matrix5 = mats.process_noise(cfg.noise());
    let x0 = cfg.target.initial.to_vector();
    let cov0 = cfg.filter.initial_cov();
    let model = cfg.target.maneuver.clone();
    let mut rngs = [stream(seed, Stream::Filter(0)), stream(seed, Stream::Filter(1)), stream(seed, Stream::Filter(2))];
    let mut meas_rng = stream(seed, Stream::MeasurementNoise);
    let mut known = Rbpf::new(cfg.filter.rbpf(true), model.clone(), mats.clone(), q, &x0, &cov0, &mut rngs[0])?;
    let mut unknown = Rbpf::new(cfg.filter.rbpf(false), model.clone(), mats.clone(), q, &x0, &cov0, &mut rngs[1])?;
    let mut ekf = EkfBaseline::new(model, mats, q, x0, cov0);
    let mut controller = Controller::new(cfg.controller.kind, cfg.controller.gains, cfg.controller.pd, sensor_tau)?;

    let truth_vec = plant.truth.to_vector();
    let mut cmd = command(cfg, &plant.uav, &truth_vec, plant.uav.psi);
    plant.input = saturate(controller.step(&plant.uav, cmd).input, plant.limits);

    let mut est = [x0; 3];
    let mut n_eff = [cfg.filter.particles as f64; 2];
    let mut records = Vec::with_capacity(cfg.horizon);
    let mut sq: [Vec<f64>; 3] = Default::default();
    for k in 1..=cfg.horizon {
        plant.advance(cfg)?;
        if k % every == 0 {
            let uav_pos = plant.uav_position(cfg.uav.altitude);
            let heading = plant.uav.psi;
            let noise = sensor.noise().sample(&mut meas_rng);
            for (i, filter) in [&mut known, &mut unknown].into_iter().enumerate() {
                filter.predict()?;
                let aim = position3(&filter.estimate().mean);
                let (ctx, _) = sensor_context(sensor, &uav_pos, heading, &aim);
                let m = sensor.measure_with_noise(&plant.truth, &ctx, &noise, k);
                let tel = filter.update(Some(&m), sensor, &ctx, &mut rngs[i])?;
                est[i] = tel.estimate.mean;
                n_eff[i] = tel.n_eff;
            }
            ekf.predict(&mut rngs[2])?;
            let (ctx, _) = sensor_context(sensor, &uav_pos, heading, &position3(&ekf.state.mean));
            let m = sensor.measure_with_noise(&plant.truth, &ctx, &noise, k);
            ekf.correct(Some(&m), sensor, &ctx);
            est[2] = ekf.state.mean;

            cmd = command(cfg, &plant.uav, &plant.truth.to_vector(), cmd.heading);
            plant.input = saturate(controller.step(&plant.uav, cmd).input, plant.limits);
        }
        let p = plant.truth.planar_position();
        for i in 0..3 {
            sq[i].push((Vector2::new(est[i][0], est[i][1]) - p).norm_squared());
        }
        records.push(FilterRecord {
            k,
            t: k as f64 * cfg.tau,
            gmt_x: plant.truth.x,
            gmt_y: plant.truth.y,
            gmt_mode: plant.mode,
            known_x: est[0][0],
            known_y: est[0][1],
            known_n_eff: n_eff[0],
            unknown_x: est[1][0],
            unknown_y: est[1][1],
            unknown_n_eff: n_eff[1],
            ekf_x: est[2][0],
            ekf_y: est[2][1],
            uav_x: plant.uav.x,
            uav_y: plant.uav.y,
        });
    }
    Ok(FilterTrace { records, summary: FilterSummary { squared_error: sq } })
}

/// ISMC, PD and SMC episodes on the exact target state.
pub fn run_controller_comparison(cfg: &ScenarioConfig, seed: u64) -> Result<ControllerSummary> {
    let kinds = vec![ControllerKind::Ismc, ControllerKind::Pd, ControllerKind::Smc];
    let mut settling = Vec::new();
    let mut errors = Vec::new();
    for kind in &kinds {
        let mut c = cfg.clone();
        c.controller.kind = *kind;
        c.experiment.state_source = StateSource::Truth;
        c.experiment.kind = Experiment::ClosedLoop;
        let trace = run_episode(&c, seed)?;
        settling.push(trace.summary.settling_time);
        errors.push(trace.summary.final_max_error);
    }
    Ok(ControllerSummary { kinds, settling_time: settling, final_max_error: errors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::presets::preset;

    fn short(name: &str, steps: usize) -> ScenarioConfig {
        let mut c = preset(name).unwrap();
        c.horizon = steps;
        c.filter.particles = 20;
        c
    }

    #[test]
    fn settling_definition() {
        assert_eq!(settling_time(&[300.0, 250.0, 210.0, 205.0], 200.0, 20.0, 1.0), Some(3.0));
        assert_eq!(settling_time(&[200.0, 201.0], 200.0, 20.0, 1.0), Some(1.0));
        assert_eq!(settling_time(&[200.0, 250.0], 200.0, 20.0, 1.0), None);
    }

    #[test]
    fn one_record_per_step_and_deterministic() {
        let c = short("paper-3mode-camera", 200);
        let a = run_episode(&c, 42).unwrap();
        let b = run_episode(&c, 42).unwrap();
        assert_eq!(a.records.len(), 200);
        assert_eq!(a.records, b.records);
        let d = run_episode(&c, 43).unwrap();
        assert_ne!(a.records, d.records);
    }

    #[test]
    fn measurements_and_telemetry_present() {
        let c = short("paper-3mode-radar", 50);
        let t = run_episode(&c, 1).unwrap();
        for r in &t.records {
            assert_eq!(r.meas_kind.as_deref(), Some("radar"));
            assert_eq!(r.meas_valid, Some(true));
            let n = r.n_eff.unwrap();
            assert!((1.0..=20.0).contains(&n));
            let hist: usize = r.mode_histogram.as_ref().unwrap().split(';').map(|v| v.parse::<usize>().unwrap()).sum();
            assert_eq!(hist, 20);
            assert!(r.u_psi.abs() <= 0.2);
        }
    }

    #[test]
    fn camera_stays_valid_in_closed_loop() {
        let c = short("paper-3mode-camera", 1500);
        let t = run_episode(&c, 5).unwrap();
        assert!(t.records.iter().all(|r| r.meas_valid == Some(true)));
    }

    #[test]
    fn filter_episode_shapes() {
        let c = short("paper-3mode-radar", 100);
        let t = run_filter_episode(&c, 3).unwrap();
        assert_eq!(t.records.len(), 100);
        assert!(t.summary.squared_error.iter().all(|s| s.len() == 100));
        let again = run_filter_episode(&c, 3).unwrap();
        assert_eq!(t.records, again.records);
    }

    fn undisturbed(vx: f64, vy: f64) -> EpisodeTrace {
        let mut c = preset("paper-stationary").unwrap();
        c.target.initial = GmtState { x: 0.0, y: 100.0, z: 0.0, vx, vy };
        c.uav.disturbance_bound = [0.0, 0.0];
        c.controller.gains.w = [0.0, 0.0];
        c.experiment.state_source = StateSource::Truth;
        run_episode(&c, 0).unwrap()
    }

    /// No disturbance, exact state and a motionless target: the command
    /// settles to a constant speed and turn rate and the error dies out.
    #[test]
    fn undisturbed_tracking_error_vanishes() {
        let t = undisturbed(0.0, 0.0);
        let e = t.summary.final_max_error;
        assert!(e[0] < 1e-6 && e[1] < 1e-6, "{e:?}");
        assert!(t.summary.within_band);
    }

    /// A moving target makes the command oscillate; the backward-difference
    /// feedforward leaves a residual proportional to its second difference,
    /// linear in the target speed while that is small against `v_d`.
    #[test]
    fn undisturbed_residual_scales_with_target_speed() {
        let a = undisturbed(0.6, 0.4).summary;
        let b = undisturbed(0.3, 0.2).summary;
        assert!(a.within_band && b.within_band);
        for i in 0..2 {
            assert!(a.final_max_error[i] < 1e-4, "{:?}", a.final_max_error);
            let ratio = a.final_max_error[i] / b.final_max_error[i];
            assert!((1.5..3.0).contains(&ratio), "{ratio}");
        }
    }
}
