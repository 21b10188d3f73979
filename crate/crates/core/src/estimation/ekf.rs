//! Extended Kalman filter building blocks shared by every particle and by
//! the baseline.

use std::f64::consts::PI;

use crate::gmt::SystemMatrices;
use crate::linalg::{symmetrize, Matrix5, Vector2, Vector5};
use crate::sensors::{SensorContext, SensorModel};
use crate::{Error, Result};

/// Diagonal loading added when a covariance loses positive definiteness.
pub const JITTER: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub mean: Vector5,
    pub cov: Matrix5,
}

/// Symmetrize and, if Cholesky fails, load the diagonal until it succeeds.
/// Returns the number of jitter additions.
pub fn condition_covariance(cov: &mut Matrix5) -> usize {
    *cov = symmetrize(cov);
    let mut added = 0;
    let mut jitter = JITTER;
    while cov.cholesky().is_none() {
        if !cov.iter().all(|v| v.is_finite()) || added >= 60 {
            log::warn!("covariance could not be repaired; resetting to jitter");
            *cov = Matrix5::identity() * JITTER;
            return added + 1;
        }
        *cov += Matrix5::identity() * jitter;
        jitter *= 2.0;
        added += 1;
    }
    if added > 0 {
        log::debug!("added covariance jitter {added} time(s)");
    }
    added
}

/// `x = F x + B u`, `P = F P Fᵀ + G Q Gᵀ`.
pub fn time_update(state: &Gaussian, input: &Vector2, mats: &SystemMatrices, process_noise: &Matrix5) -> Gaussian {
    let mean = mats.f * state.mean + mats.b * input;
    let mut cov = mats.f * state.cov * mats.f.transpose() + process_noise;
    condition_covariance(&mut cov);
    Gaussian { mean, cov }
}

/// Posterior plus the Gaussian log-likelihood of the measurement under the
/// prior `N(h(x), H P Hᵀ + R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Correction {
    pub posterior: Gaussian,
    pub log_likelihood: f64,
}

pub fn measurement_update(
    prior: &Gaussian,
    m: &Vector2,
    sensor: &SensorModel,
    ctx: &SensorContext,
) -> Result<Correction> {
    let lin = sensor.linearize(&prior.mean, ctx)?;
    let h = lin.jacobian;
    let ph = prior.cov * h.transpose();
    let s = symmetrize(&(h * ph + sensor.noise().matrix()));
    let chol = s.cholesky().ok_or(Error::NotPositiveDefinite("innovation covariance"))?;
    let r = sensor.residual(m, &lin.predicted);
    // K = P Hᵀ S⁻¹, computed as (S⁻¹ H P)ᵀ.
    let gain = chol.solve(&ph.transpose()).transpose();
    let mean = prior.mean + gain * r;
    let mut cov = prior.cov - gain * h * prior.cov;
    condition_covariance(&mut cov);
    let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let mahalanobis = r.dot(&chol.solve(&r));
    let log_likelihood = -0.5 * (mahalanobis + log_det + 2.0 * (2.0 * PI).ln());
    if !log_likelihood.is_finite() {
        return Err(Error::NotPositiveDefinite("innovation covariance"));
    }
    Ok(Correction { posterior: Gaussian { mean, cov }, log_likelihood })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmt::{build_system_matrices, GmtNoiseModel};
    use crate::linalg::{Matrix2, Matrix2x5, Vector3};
    use crate::sensors::{GimbalAngles, NoiseCovariance, PositionModel, RadarModel};
    use rand::{Rng, SeedableRng};

    fn position_sensor(r: f64) -> SensorModel {
        SensorModel::Position(PositionModel { noise: NoiseCovariance::diagonal(r, r).unwrap(), rate_hz: 25.0 })
    }

    fn ctx() -> SensorContext {
        SensorContext::new(Vector3::new(0.0, 0.0, -50.0), 0.0, GimbalAngles::default())
    }

    fn random_spd(rng: &mut impl Rng) -> Matrix5 {
        let a = Matrix5::from_fn(|_, _| rng.random_range(-1.0..1.0));
        a * a.transpose() + Matrix5::identity() * 0.5
    }

    #[test]
    fn pure_drift_prediction() {
        let mats = build_system_matrices(1.0).unwrap();
        let g = Gaussian { mean: Vector5::new(0.0, 0.0, 0.0, 1.0, 0.0), cov: Matrix5::identity() };
        let next = time_update(&g, &Vector2::zeros(), &mats, &Matrix5::zeros());
        assert_eq!(next.mean, Vector5::new(1.0, 0.0, 0.0, 1.0, 0.0));
    }

    #[test]
    fn input_moves_velocity() {
        let mats = build_system_matrices(0.1).unwrap();
        let g = Gaussian { mean: Vector5::zeros(), cov: Matrix5::identity() };
        let next = time_update(&g, &Vector2::new(1.0, -1.0), &mats, &Matrix5::zeros());
        assert!((next.mean[3] - 0.1).abs() < 1e-15 && (next.mean[4] + 0.1).abs() < 1e-15);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn covariance_prediction_matches_dense_loops() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mats = build_system_matrices(0.04).unwrap();
        let q = mats.process_noise(&GmtNoiseModel::diagonal(0.3, 0.3, 0.1).unwrap());
        let p = random_spd(&mut rng);
        let next = time_update(&Gaussian { mean: Vector5::zeros(), cov: p }, &Vector2::zeros(), &mats, &q);
        let mut want = [[0.0; 5]; 5];
        for i in 0..5 {
            for j in 0..5 {
                let mut acc = q[(i, j)];
                for a in 0..5 {
                    for b in 0..5 {
                        acc += mats.f[(i, a)] * p[(a, b)] * mats.f[(j, b)];
                    }
                }
                want[i][j] = acc;
            }
        }
        for i in 0..5 {
            for j in 0..5 {
                assert!((next.cov[(i, j)] - want[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn perfect_linear_observation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let prior = Gaussian { mean: Vector5::new(1.0, 2.0, 0.0, 3.0, 4.0), cov: random_spd(&mut rng) };
        let m = Vector2::new(5.0, -7.0);
        let c = measurement_update(&prior, &m, &position_sensor(0.0), &ctx()).unwrap();
        assert!((c.posterior.mean[0] - 5.0).abs() < 1e-10 && (c.posterior.mean[1] + 7.0).abs() < 1e-10);
    }

    #[test]
    fn huge_noise_leaves_state_unchanged() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let prior = Gaussian { mean: Vector5::new(1.0, 2.0, 0.0, 3.0, 4.0), cov: random_spd(&mut rng) };
        let c = measurement_update(&prior, &Vector2::new(50.0, -70.0), &position_sensor(1e6), &ctx()).unwrap();
        assert!((c.posterior.mean - prior.mean).abs().max() < 1e-9);
        assert!((c.posterior.cov - prior.cov).abs().max() < 1e-9);
    }

    /// Information form: P⁺ = (P⁻¹ + Hᵀ R⁻¹ H)⁻¹, x⁺ = x + P⁺ Hᵀ R⁻¹ r.
    #[test]
    fn matches_information_form() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let sensor = SensorModel::Radar(RadarModel { noise: NoiseCovariance::diagonal(2.0, 0.01).unwrap(), rate_hz: 10.0 });
        for _ in 0..50 {
            let prior = Gaussian {
                mean: Vector5::new(rng.random_range(-300.0..300.0), rng.random_range(-300.0..300.0), 0.0, 2.0, -1.0),
                cov: random_spd(&mut rng) * 10.0,
            };
            let c = ctx();
            let lin = sensor.linearize(&prior.mean, &c).unwrap();
            let m = lin.predicted + Vector2::new(rng.random_range(-3.0..3.0), rng.random_range(-0.02..0.02));
            let got = measurement_update(&prior, &m, &sensor, &c).unwrap();

            let h: Matrix2x5 = lin.jacobian;
            let r_inv: Matrix2 = sensor.noise().matrix().try_inverse().unwrap();
            let info = prior.cov.try_inverse().unwrap() + h.transpose() * r_inv * h;
            let cov = info.try_inverse().unwrap();
            let mean = prior.mean + cov * h.transpose() * r_inv * sensor.residual(&m, &lin.predicted);
            assert!((got.posterior.cov - cov).abs().max() < 1e-8 * cov.abs().max().max(1.0));
            assert!((got.posterior.mean - mean).abs().max() < 1e-8 * mean.abs().max().max(1.0));
        }
    }

    #[test]
    fn likelihood_is_gaussian_density() {
        let prior = Gaussian { mean: Vector5::zeros(), cov: Matrix5::identity() };
        // S = I + I = 2I; residual (1, 0): log N = -0.5 (1/2 + ln 4 + 2 ln 2pi).
        let c = measurement_update(&prior, &Vector2::new(1.0, 0.0), &position_sensor(1.0), &ctx()).unwrap();
        let want = -0.5 * (0.5 + 4f64.ln() + 2.0 * (2.0 * PI).ln());
        assert!((c.log_likelihood - want).abs() < 1e-12);
    }

    #[test]
    fn singular_innovation_rejected() {
        let prior = Gaussian { mean: Vector5::zeros(), cov: Matrix5::zeros() };
        assert!(measurement_update(&prior, &Vector2::zeros(), &position_sensor(0.0), &ctx()).is_err());
    }

    #[test]
    fn conditioning_repairs_indefinite_matrix() {
        let mut p = Matrix5::identity();
        p[(4, 4)] = -1e-9;
        p[(0, 1)] = 1e-12;
        assert!(condition_covariance(&mut p) > 0);
        assert!(p.cholesky().is_some());
        assert_eq!(p, p.transpose());
        let mut q = Matrix5::identity();
        assert_eq!(condition_covariance(&mut q), 0);
    }
}
