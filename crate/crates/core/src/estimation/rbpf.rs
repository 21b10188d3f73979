//! Rao-Blackwellised particle filter.
//!
//! Particles sample only the maneuver-mode sequence; each carries EKF
//! statistics for the continuous state conditioned on its mode history.
//! One call sequence per sensor step:
//!
//! 1. [`Rbpf::predict`]: time update of every particle with the mode it
//!    currently holds (the mode in force over the elapsed interval).
//! 2. [`Rbpf::update`]: EKF correction, importance weighting with the
//!    predictive likelihood of the new measurement, resampling when the
//!    effective sample size drops below the threshold, the weighted output
//!    estimate, and finally a fresh mode draw per particle for the next
//!    interval.
//!
//! The weights computed from measurement `k` therefore belong to the mode
//! hypotheses drawn at step `k - 1`, which is why the textbook recursion
//! indexes them one step behind the measurement.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::estimation::ekf::{measurement_update, time_update, Gaussian};
use crate::gmt::{sample_mode, ManeuverModel, SystemMatrices};
use crate::linalg::{is_positive_definite, Matrix5, Vector5};
use crate::sensors::{Measurement, SensorContext, SensorModel};
use crate::{Error, Result};

/// Log-likelihood assigned to a particle whose correction failed.
pub const LOG_WEIGHT_FLOOR: f64 = -700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resampling {
    #[default]
    Multinomial,
    Systematic,
}

/// Distribution of the initial mode.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModePrior {
    /// All mass on the model's initial mode.
    #[default]
    Initial,
    Uniform,
    Weights(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbpfConfig {
    pub particles: usize,
    /// Resample when `n_eff` falls below this; defaults to half the
    /// particle count.
    #[serde(default)]
    pub threshold: Option<f64>,
    /// Propagate modes with the model's transition matrix; otherwise
    /// uniformly.
    #[serde(default = "default_true")]
    pub transition_known: bool,
    #[serde(default)]
    pub prior: ModePrior,
    #[serde(default)]
    pub resampling: Resampling,
}

fn default_true() -> bool {
    true
}

impl Default for RbpfConfig {
    fn default() -> Self {
        Self { particles: 100, threshold: None, transition_known: true, prior: ModePrior::Initial, resampling: Resampling::Multinomial }
    }
}

impl RbpfConfig {
    pub fn threshold(&self) -> f64 {
        self.threshold.unwrap_or(self.particles as f64 / 2.0)
    }

    pub fn validate(&self, modes: usize) -> Result<()> {
        if self.particles == 0 {
            return Err(Error::Config("particle count must be at least 1".into()));
        }
        let t = self.threshold();
        if !(1.0..=self.particles as f64).contains(&t) {
            return Err(Error::Config(format!("resampling threshold {t} outside [1, {}]", self.particles)));
        }
        if let ModePrior::Weights(w) = &self.prior {
            if w.len() != modes {
                return Err(Error::LengthMismatch { expected: modes, actual: w.len() });
            }
            let sum: f64 = w.iter().sum();
            if w.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Config("mode prior must be a probability vector".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub mode: usize,
    pub mean: Vector5,
    pub cov: Matrix5,
    /// Log of the normalized weight.
    pub log_weight: f64,
}

impl Particle {
    pub fn weight(&self) -> f64 {
        self.log_weight.exp()
    }

    fn gaussian(&self) -> Gaussian {
        Gaussian { mean: self.mean, cov: self.cov }
    }
}

/// Weighted output of the particle set.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub mean: Vector5,
    pub cov: Matrix5,
}

/// Particles with identical EKF statistics, weights `1/n`, modes from the prior.
pub fn init<R: Rng + ?Sized>(
    config: &RbpfConfig,
    model: &ManeuverModel,
    x0: &Vector5,
    cov0: &Matrix5,
    rng: &mut R,
) -> Result<Vec<Particle>> {
    config.validate(model.len())?;
    if !is_positive_definite(cov0) {
        return Err(Error::NotPositiveDefinite("initial covariance"));
    }
    let n = config.particles;
    let log_w = -(n as f64).ln();
    let prior = match &config.prior {
        ModePrior::Initial => None,
        ModePrior::Uniform => Some(WeightedIndex::new(vec![1.0; model.len()]).expect("nonempty")),
        ModePrior::Weights(w) => {
            Some(WeightedIndex::new(w.iter().copied()).map_err(|e| Error::Config(format!("mode prior: {e}")))?)
        }
    };
    Ok((0..n)
        .map(|_| Particle {
            mode: prior.as_ref().map_or(model.initial_mode(), |d| d.sample(rng)),
            mean: *x0,
            cov: *cov0,
            log_weight: log_w,
        })
        .collect())
}

/// Time update with the particle's own mode input.
pub fn particle_time_update(
    particle: &Particle,
    model: &ManeuverModel,
    mats: &SystemMatrices,
    process_noise: &Matrix5,
) -> Result<Particle> {
    let u = model.input(particle.mode)?;
    let g = time_update(&particle.gaussian(), &u, mats, process_noise);
    Ok(Particle { mean: g.mean, cov: g.cov, ..particle.clone() })
}

/// EKF correction of one particle. Returns the predictive log-likelihood
/// of the measurement; a failed correction leaves the prediction in place
/// and reports [`LOG_WEIGHT_FLOOR`].
pub fn particle_measurement_update(
    particle: &mut Particle,
    m: &Measurement,
    sensor: &SensorModel,
    ctx: &SensorContext,
) -> f64 {
    match measurement_update(&particle.gaussian(), &m.vector(), sensor, ctx) {
        Ok(c) => {
            particle.mean = c.posterior.mean;
            particle.cov = c.posterior.cov;
            c.log_likelihood
        }
        Err(err) => {
            log::debug!("particle correction failed: {err}");
            LOG_WEIGHT_FLOOR
        }
    }
}

/// Renormalize log-weights with log-sum-exp. Returns `true` if the weights
/// were degenerate and had to be reset to uniform.
pub fn normalize_weights(particles: &mut [Particle]) -> bool {
    let n = particles.len();
    let max = particles.iter().map(|p| p.log_weight).fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        log::warn!("all particle weights vanished; resetting to uniform");
        let u = -(n as f64).ln();
        particles.iter_mut().for_each(|p| p.log_weight = u);
        return true;
    }
    let lse = max + particles.iter().map(|p| (p.log_weight - max).exp()).sum::<f64>().ln();
    particles.iter_mut().for_each(|p| p.log_weight -= lse);
    false
}

/// Add per-particle log-likelihoods and renormalize.
pub fn weight_update(particles: &mut [Particle], log_likelihoods: &[f64]) -> bool {
    for (p, l) in particles.iter_mut().zip(log_likelihoods) {
        p.log_weight += l;
    }
    normalize_weights(particles)
}

/// `1 / sum(w^2)` of normalized weights.
pub fn effective_sample_size(particles: &[Particle]) -> f64 {
    let sum_sq: f64 = particles.iter().map(|p| p.weight().powi(2)).sum();
    (1.0 / sum_sq).clamp(1.0, particles.len() as f64)
}

/// Draw `n` particles with replacement by weight; weights reset to `1/n`.
pub fn resample<R: Rng + ?Sized>(particles: &[Particle], scheme: Resampling, rng: &mut R) -> Vec<Particle> {
    let n = particles.len();
    let log_w = -(n as f64).ln();
    let weights: Vec<f64> = particles.iter().map(Particle::weight).collect();
    let indices: Vec<usize> = match scheme {
        Resampling::Multinomial => match WeightedIndex::new(&weights) {
            Ok(dist) => (0..n).map(|_| dist.sample(rng)).collect(),
            Err(_) => (0..n).collect(),
        },
        Resampling::Systematic => {
            let total: f64 = weights.iter().sum();
            let start: f64 = rng.random::<f64>() / n as f64;
            let mut out = Vec::with_capacity(n);
            let (mut i, mut cum) = (0, weights[0] / total);
            for j in 0..n {
                let u = start + j as f64 / n as f64;
                while u > cum && i + 1 < n {
                    i += 1;
                    cum += weights[i] / total;
                }
                out.push(i);
            }
            out
        }
    };
    indices.into_iter().map(|i| Particle { log_weight: log_w, ..particles[i].clone() }).collect()
}

/// Redraw each particle's mode from its transition row, or uniformly when
/// the transition matrix is treated as unknown.
pub fn propagate_modes<R: Rng + ?Sized>(
    particles: &mut [Particle],
    model: &ManeuverModel,
    transition_known: bool,
    rng: &mut R,
) -> Result<()> {
    let count = model.len();
    for p in particles.iter_mut() {
        p.mode = if transition_known { sample_mode(p.mode, model, rng)? } else { rng.random_range(0..count) };
    }
    Ok(())
}

/// Weighted mean of particle means and of particle covariances.
pub fn estimate(particles: &[Particle]) -> Estimate {
    let mut mean = Vector5::zeros();
    let mut cov = Matrix5::zeros();
    for p in particles {
        let w = p.weight();
        mean += p.mean * w;
        cov += p.cov * w;
    }
    Estimate { mean, cov }
}

/// Per-step filter diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTelemetry {
    pub n_eff: f64,
    pub resampled: bool,
    pub weights_reset: bool,
    /// Particle count per mode after the step's mode draw.
    pub mode_histogram: Vec<usize>,
    pub estimate: Estimate,
}

/// A particle set together with the models it runs on.
#[derive(Debug, Clone)]
pub struct Rbpf {
    config: RbpfConfig,
    model: ManeuverModel,
    mats: SystemMatrices,
    process_noise: Matrix5,
    particles: Vec<Particle>,
}

impl Rbpf {
    pub fn new<R: Rng + ?Sized>(
        config: RbpfConfig,
        model: ManeuverModel,
        mats: SystemMatrices,
        process_noise: Matrix5,
        x0: &Vector5,
        cov0: &Matrix5,
        rng: &mut R,
    ) -> Result<Self> {
        let particles = init(&config, &model, x0, cov0, rng)?;
        Ok(Self { config, model, mats, process_noise, particles })
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn config(&self) -> &RbpfConfig {
        &self.config
    }

    pub fn predict(&mut self) -> Result<()> {
        for p in self.particles.iter_mut() {
            *p = particle_time_update(p, &self.model, &self.mats, &self.process_noise)?;
        }
        Ok(())
    }

    /// Current weighted estimate (after [`Rbpf::predict`] this is the
    /// one-step prediction).
    pub fn estimate(&self) -> Estimate {
        estimate(&self.particles)
    }

    /// Correction, weighting, resampling, output and mode draw. A missing
    /// or invalid measurement skips the first three.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        measurement: Option<&Measurement>,
        sensor: &SensorModel,
        ctx: &SensorContext,
        rng: &mut R,
    ) -> Result<StepTelemetry> {
        let mut resampled = false;
        let mut weights_reset = false;
        if let Some(m) = measurement.filter(|m| m.valid) {
            let lls: Vec<f64> =
                self.particles.iter_mut().map(|p| particle_measurement_update(p, m, sensor, ctx)).collect();
            weights_reset = weight_update(&mut self.particles, &lls);
        }
        let n_eff = effective_sample_size(&self.particles);
        if n_eff < self.config.threshold() {
            self.particles = resample(&self.particles, self.config.resampling, rng);
            resampled = true;
        }
        let estimate = estimate(&self.particles);
        propagate_modes(&mut self.particles, &self.model, self.config.transition_known, rng)?;
        let mut mode_histogram = vec![0; self.model.len()];
        for p in &self.particles {
            mode_histogram[p.mode] += 1;
        }
        Ok(StepTelemetry { n_eff, resampled, weights_reset, mode_histogram, estimate })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmt::build_system_matrices;
    use crate::linalg::{Vector2, Vector3};
    use crate::rng::{stream, Stream};
    use crate::sensors::{GimbalAngles, NoiseCovariance, PositionModel, SensorKind};
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn particle(mean: Vector5, log_weight: f64) -> Particle {
        Particle { mode: 0, mean, cov: Matrix5::identity(), log_weight }
    }

    fn weighted(ws: &[f64]) -> Vec<Particle> {
        ws.iter().map(|w| particle(Vector5::zeros(), w.ln())).collect()
    }

    fn position_sensor(r: f64) -> SensorModel {
        SensorModel::Position(PositionModel { noise: NoiseCovariance::diagonal(r, r).unwrap(), rate_hz: 25.0 })
    }

    fn ctx() -> SensorContext {
        SensorContext::new(Vector3::new(0.0, 0.0, -50.0), 0.0, GimbalAngles::default())
    }

    fn meas(v: Vector2) -> Measurement {
        Measurement { values: [v[0], v[1]], kind: SensorKind::Position, step: 0, valid: true }
    }

    #[test]
    fn init_deterministic_prior() {
        let mut rng = stream(1, Stream::Filter(0));
        let model = ManeuverModel::three_mode();
        let ps = init(&RbpfConfig::default(), &model, &Vector5::zeros(), &Matrix5::identity(), &mut rng).unwrap();
        assert_eq!(ps.len(), 100);
        assert!(ps.iter().all(|p| p.mode == 0 && (p.weight() - 0.01).abs() < 1e-15));
    }

    #[test]
    fn init_uniform_prior_frequencies() {
        let mut rng = stream(2, Stream::Filter(0));
        let model = ManeuverModel::three_mode();
        let cfg = RbpfConfig { particles: 10_000, prior: ModePrior::Uniform, ..Default::default() };
        let ps = init(&cfg, &model, &Vector5::zeros(), &Matrix5::identity(), &mut rng).unwrap();
        for m in 0..3 {
            let f = ps.iter().filter(|p| p.mode == m).count() as f64 / 10_000.0;
            assert!((f - 1.0 / 3.0).abs() < 0.02);
        }
    }

    #[test]
    fn init_rejects_bad_input() {
        let mut rng = stream(3, Stream::Filter(0));
        let model = ManeuverModel::three_mode();
        let mut bad = Matrix5::identity();
        bad[(2, 2)] = 0.0;
        assert!(init(&RbpfConfig::default(), &model, &Vector5::zeros(), &bad, &mut rng).is_err());
        let cfg = RbpfConfig { particles: 0, ..Default::default() };
        assert!(init(&cfg, &model, &Vector5::zeros(), &Matrix5::identity(), &mut rng).is_err());
        let cfg = RbpfConfig { threshold: Some(200.0), ..Default::default() };
        assert!(init(&cfg, &model, &Vector5::zeros(), &Matrix5::identity(), &mut rng).is_err());
        let cfg = RbpfConfig { prior: ModePrior::Weights(vec![0.5, 0.5]), ..Default::default() };
        assert!(init(&cfg, &model, &Vector5::zeros(), &Matrix5::identity(), &mut rng).is_err());
    }

    #[test]
    fn effective_sample_size_examples() {
        assert!((effective_sample_size(&weighted(&[0.01; 100])) - 100.0).abs() < 1e-9);
        let mut one = vec![1.0];
        one.extend(std::iter::repeat(0.0).take(9));
        assert_eq!(effective_sample_size(&weighted(&one)), 1.0);
        let mut two = vec![0.5, 0.5];
        two.extend(std::iter::repeat(0.0).take(8));
        assert!((effective_sample_size(&weighted(&two)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn equal_predictions_keep_equal_weights() {
        let mut ps = weighted(&[0.5, 0.5]);
        assert!(!weight_update(&mut ps, &[-3.0, -3.0]));
        assert!((ps[0].weight() - 0.5).abs() < 1e-15 && (ps[1].weight() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn closer_prediction_wins() {
        let sensor = position_sensor(1.0);
        let mut a = particle(Vector5::zeros(), 0.5f64.ln());
        let mut b = particle(Vector5::new(10.0 * 2f64.sqrt(), 0.0, 0.0, 0.0, 0.0), 0.5f64.ln());
        // Innovation std is sqrt(P + R) = sqrt(2); b sits 10 sigma away.
        let m = meas(Vector2::zeros());
        let la = particle_measurement_update(&mut a, &m, &sensor, &ctx());
        let lb = particle_measurement_update(&mut b, &m, &sensor, &ctx());
        let mut ps = vec![a, b];
        weight_update(&mut ps, &[la, lb]);
        assert!(ps[0].weight() > 0.99);
        let ratio = (ps[1].weight() / ps[0].weight()).ln();
        assert!((ratio + 50.0).abs() < 1e-9, "log ratio {ratio}");
    }

    #[test]
    fn degenerate_weights_reset() {
        let mut ps = weighted(&[0.5, 0.5]);
        assert!(weight_update(&mut ps, &[f64::NEG_INFINITY, f64::NEG_INFINITY]));
        assert!(ps.iter().all(|p| (p.weight() - 0.5).abs() < 1e-15));
    }

    #[test]
    fn resample_point_mass() {
        let mut rng = stream(4, Stream::Filter(0));
        let mut ps = weighted(&[0.0, 1.0, 0.0, 0.0]);
        ps[1].mode = 2;
        ps[1].mean[0] = 7.0;
        for scheme in [Resampling::Multinomial, Resampling::Systematic] {
            let out = resample(&ps, scheme, &mut rng);
            assert!(out.iter().all(|p| p.mode == 2 && p.mean[0] == 7.0));
            assert!(out.iter().all(|p| p.weight() == 0.25));
        }
    }

    #[test]
    fn multinomial_counts_pass_chi_square() {
        let n = 10;
        let mut ps = weighted(&vec![0.1; n]);
        for (i, p) in ps.iter_mut().enumerate() {
            p.mean[0] = i as f64;
        }
        let mut rng = stream(5, Stream::Filter(0));
        let reps = 10_000;
        let mut counts = vec![0usize; n];
        for _ in 0..reps {
            for p in resample(&ps, Resampling::Multinomial, &mut rng) {
                counts[p.mean[0] as usize] += 1;
            }
        }
        let expected = reps as f64;
        let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        let critical = ChiSquared::new((n - 1) as f64).unwrap().inverse_cdf(0.99);
        assert!(stat < critical, "{stat} >= {critical}");
    }

    #[test]
    fn propagation_rules() {
        let modes = vec![Vector2::zeros(); 3];
        let eye = (0..3).map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        let identity = ManeuverModel::new(modes, eye, 0).unwrap();
        let mut rng = stream(6, Stream::Filter(0));
        let mut ps: Vec<Particle> = (0..30).map(|i| Particle { mode: i % 3, ..particle(Vector5::zeros(), 0.0) }).collect();
        propagate_modes(&mut ps, &identity, true, &mut rng).unwrap();
        assert!(ps.iter().enumerate().all(|(i, p)| p.mode == i % 3));

        let model = ManeuverModel::three_mode();
        let (mut stays, mut total) = (0usize, 0usize);
        let mut unknown = [0usize; 3];
        for _ in 0..1000 {
            let mut ps = vec![particle(Vector5::zeros(), 0.0); 100];
            propagate_modes(&mut ps, &model, true, &mut rng).unwrap();
            stays += ps.iter().filter(|p| p.mode == 0).count();
            total += 100;
            let mut qs = vec![particle(Vector5::zeros(), 0.0); 100];
            propagate_modes(&mut qs, &model, false, &mut rng).unwrap();
            qs.iter().for_each(|p| unknown[p.mode] += 1);
        }
        assert!((stays as f64 / total as f64 - 0.9).abs() < 0.01);
        for c in unknown {
            assert!((c as f64 / total as f64 - 1.0 / 3.0).abs() < 0.01);
        }
    }

    #[test]
    fn estimate_examples() {
        let p = Particle { mode: 1, mean: Vector5::repeat(2.0), cov: Matrix5::identity() * 3.0, log_weight: 0.0 };
        let e = estimate(std::slice::from_ref(&p));
        assert_eq!((e.mean, e.cov), (p.mean, p.cov));
        let ps = vec![particle(Vector5::repeat(1.0), 0.5f64.ln()), particle(Vector5::repeat(3.0), 0.5f64.ln())];
        assert!((estimate(&ps).mean - Vector5::repeat(2.0)).norm() < 1e-15);
    }

    #[test]
    fn estimate_matches_dense_sum() {
        let mut rng = stream(7, Stream::Filter(0));
        let mut ps: Vec<Particle> = (0..50)
            .map(|_| Particle {
                mode: 0,
                mean: Vector5::from_fn(|_, _| rng.random_range(-10.0..10.0)),
                cov: Matrix5::from_fn(|_, _| rng.random_range(0.0..1.0)),
                log_weight: rng.random_range(-5.0..0.0),
            })
            .collect();
        normalize_weights(&mut ps);
        let e = estimate(&ps);
        for i in 0..5 {
            let mut m = 0.0;
            for p in &ps {
                m += p.log_weight.exp() * p.mean[i];
            }
            assert!((e.mean[i] - m).abs() < 1e-12);
            for j in 0..5 {
                let mut c = 0.0;
                for p in &ps {
                    c += p.log_weight.exp() * p.cov[(i, j)];
                }
                assert!((e.cov[(i, j)] - c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn invalid_measurement_skips_correction() {
        let mut rng = stream(8, Stream::Filter(0));
        let mats = build_system_matrices(0.04).unwrap();
        let mut f = Rbpf::new(
            RbpfConfig { particles: 5, ..Default::default() },
            ManeuverModel::three_mode(),
            mats,
            Matrix5::zeros(),
            &Vector5::zeros(),
            &Matrix5::identity(),
            &mut rng,
        )
        .unwrap();
        f.predict().unwrap();
        let before = f.estimate();
        let mut m = meas(Vector2::new(100.0, 100.0));
        m.valid = false;
        let t = f.update(Some(&m), &position_sensor(1.0), &ctx(), &mut rng).unwrap();
        assert_eq!(t.estimate, before);
        assert!(!t.resampled);
    }
}
