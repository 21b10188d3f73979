//! EKF that replaces the unknown maneuver input by a uniformly drawn mode
//! input at every step.

use rand::Rng;

use crate::estimation::ekf::{measurement_update, time_update, Gaussian};
use crate::gmt::{ManeuverModel, SystemMatrices};
use crate::linalg::{Matrix5, Vector5};
use crate::sensors::{Measurement, SensorContext, SensorModel};
use crate::Result;

#[derive(Debug, Clone)]
pub struct EkfBaseline {
    pub state: Gaussian,
    model: ManeuverModel,
    mats: SystemMatrices,
    process_noise: Matrix5,
}

impl EkfBaseline {
    pub fn new(model: ManeuverModel, mats: SystemMatrices, process_noise: Matrix5, x0: Vector5, cov0: Matrix5) -> Self {
        Self { state: Gaussian { mean: x0, cov: cov0 }, model, mats, process_noise }
    }

    /// Predict with a uniformly drawn mode input; returns the mode used.
    pub fn predict<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<usize> {
        let mode = rng.random_range(0..self.model.len());
        self.predict_with_mode(mode)?;
        Ok(mode)
    }

    pub fn predict_with_mode(&mut self, mode: usize) -> Result<()> {
        let u = self.model.input(mode)?;
        self.state = time_update(&self.state, &u, &self.mats, &self.process_noise);
        Ok(())
    }

    /// Correct with a valid measurement; invalid ones and failed
    /// corrections leave the prediction in place.
    pub fn correct(&mut self, m: Option<&Measurement>, sensor: &SensorModel, ctx: &SensorContext) {
        if let Some(m) = m.filter(|m| m.valid) {
            match measurement_update(&self.state, &m.vector(), sensor, ctx) {
                Ok(c) => self.state = c.posterior,
                Err(err) => log::debug!("baseline correction failed: {err}"),
            }
        }
    }

    /// One full predict/correct cycle.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        m: Option<&Measurement>,
        sensor: &SensorModel,
        ctx: &SensorContext,
        rng: &mut R,
    ) -> Result<usize> {
        let mode = self.predict(rng)?;
        self.correct(m, sensor, ctx);
        Ok(mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmt::{build_system_matrices, step_gmt, GmtState};
    use crate::linalg::{Vector2, Vector3};
    use crate::rng::{stream, Stream};
    use crate::sensors::{GimbalAngles, NoiseCovariance, PositionModel, SensorKind};

    fn sensor(r: f64) -> SensorModel {
        SensorModel::Position(PositionModel { noise: NoiseCovariance::diagonal(r, r).unwrap(), rate_hz: 25.0 })
    }

    fn ctx() -> SensorContext {
        SensorContext::new(Vector3::new(0.0, 0.0, -50.0), 0.0, GimbalAngles::default())
    }

    fn meas(v: Vector2) -> Measurement {
        Measurement { values: [v[0], v[1]], kind: SensorKind::Position, step: 0, valid: true }
    }

    #[test]
    fn input_frequencies_are_uniform() {
        let mats = build_system_matrices(0.04).unwrap();
        let mut f = EkfBaseline::new(ManeuverModel::three_mode(), mats, Matrix5::zeros(), Vector5::zeros(), Matrix5::identity());
        let mut rng = stream(1, Stream::Filter(9));
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[f.predict(&mut rng).unwrap()] += 1;
            f.state.cov = Matrix5::identity();
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() < 0.01);
        }
    }

    #[test]
    fn matching_input_without_noise_tracks_truth() {
        let tau = 0.04;
        let mats = build_system_matrices(tau).unwrap();
        let model = ManeuverModel::three_mode();
        let mut truth = GmtState::from_speed_heading(0.0, 100.0, 0.0, 8.0, 0.7);
        let mut f = EkfBaseline::new(model.clone(), mats.clone(), Matrix5::zeros(), truth.to_vector(), Matrix5::identity() * 1e-6);
        let s = sensor(1e-9);
        for k in 0..500 {
            let mode = (k / 50) % 3;
            truth = step_gmt(&truth, mode, &Vector3::zeros(), &model, &mats).unwrap();
            f.predict_with_mode(mode).unwrap();
            f.correct(Some(&meas(truth.planar_position())), &s, &ctx());
            assert!((f.state.mean - truth.to_vector()).abs().max() < 1e-6, "step {k}");
        }
    }
}
