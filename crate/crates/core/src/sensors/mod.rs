//! Camera and radar measurement models.
//!
//! Measurements are taken from the UAV, whose 3-D position uses the
//! down-positive inertial frame described in [`frames`].

pub mod camera;
pub mod delay;
pub mod frames;
pub mod radar;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::angle;
use crate::gmt::GmtState;
use crate::linalg::{gaussian, psd_factor, Matrix2, Matrix2x5, Matrix3, Vector2, Vector3, Vector5};
use crate::{Error, Result};

pub use camera::{camera_jacobian, camera_project};
pub use delay::{delay_steps, DelayBuffer};
pub use frames::{inertial_to_camera, point_gimbal, GimbalAngles, GimbalPointing};
pub use radar::{radar_jacobian, radar_measure};

/// A 2×2 measurement noise covariance with its cached square-root factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 2]; 2]", into = "[[f64; 2]; 2]")]
pub struct NoiseCovariance {
    matrix: Matrix2,
    factor: Matrix2,
}

impl NoiseCovariance {
    pub fn new(matrix: Matrix2) -> Result<Self> {
        let factor = psd_factor(&matrix, "measurement noise covariance")?;
        Ok(Self { matrix, factor })
    }

    pub fn diagonal(s1: f64, s2: f64) -> Result<Self> {
        Self::new(Matrix2::new(s1 * s1, 0.0, 0.0, s2 * s2))
    }

    pub fn matrix(&self) -> &Matrix2 {
        &self.matrix
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector2 {
        gaussian(&self.factor, rng)
    }
}

impl TryFrom<[[f64; 2]; 2]> for NoiseCovariance {
    type Error = Error;

    fn try_from(rows: [[f64; 2]; 2]) -> Result<Self> {
        Self::new(Matrix2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1]))
    }
}

impl From<NoiseCovariance> for [[f64; 2]; 2] {
    fn from(c: NoiseCovariance) -> Self {
        let m = c.matrix;
        [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub focal_length: f64,
    pub noise: NoiseCovariance,
    pub rate_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarModel {
    pub noise: NoiseCovariance,
    pub rate_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorKind {
    Camera,
    Radar,
    /// Direct noisy observation of the planar position (test instrument).
    Position,
}

impl SensorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SensorKind::Camera => "camera",
            SensorKind::Radar => "radar",
            SensorKind::Position => "position",
        }
    }
}

/// Linear observer of `(x, y)`; useful as an exactly solvable reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionModel {
    pub noise: NoiseCovariance,
    pub rate_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SensorModel {
    Camera(CameraModel),
    Radar(RadarModel),
    Position(PositionModel),
}

/// UAV pose and gimbal at the measurement instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorContext {
    /// UAV position in the down-positive inertial frame.
    pub position: Vector3,
    pub heading: f64,
    pub gimbal: GimbalAngles,
    /// Inertial-to-camera rotation for `heading` and `gimbal`.
    pub rotation: Matrix3,
}

impl SensorContext {
    pub fn new(position: Vector3, heading: f64, gimbal: GimbalAngles) -> Self {
        Self { position, heading, gimbal, rotation: inertial_to_camera(heading, &gimbal) }
    }

    /// Context for a UAV at planar `(x, y)` flying at `altitude`.
    pub fn at_altitude(x: f64, y: f64, altitude: f64, heading: f64, gimbal: GimbalAngles) -> Self {
        Self::new(Vector3::new(x, y, -altitude), heading, gimbal)
    }
}

/// Model output and its Jacobian with respect to the 5-D target state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linearization {
    pub predicted: Vector2,
    pub jacobian: Matrix2x5,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub values: [f64; 2],
    pub kind: SensorKind,
    pub step: usize,
    /// False when the geometry made the model undefined; the filter then
    /// skips its correction.
    pub valid: bool,
}

impl Measurement {
    pub fn vector(&self) -> Vector2 {
        Vector2::from(self.values)
    }
}

/// Embed a 2×3 position Jacobian into the 5-state space.
fn pad(j: &crate::linalg::Matrix2x3) -> Matrix2x5 {
    let mut h = Matrix2x5::zeros();
    h.fixed_view_mut::<2, 3>(0, 0).copy_from(j);
    h
}

impl SensorModel {
    pub fn kind(&self) -> SensorKind {
        match self {
            SensorModel::Camera(_) => SensorKind::Camera,
            SensorModel::Radar(_) => SensorKind::Radar,
            SensorModel::Position(_) => SensorKind::Position,
        }
    }

    pub fn rate_hz(&self) -> f64 {
        match self {
            SensorModel::Camera(c) => c.rate_hz,
            SensorModel::Radar(r) => r.rate_hz,
            SensorModel::Position(p) => p.rate_hz,
        }
    }

    pub fn noise(&self) -> &NoiseCovariance {
        match self {
            SensorModel::Camera(c) => &c.noise,
            SensorModel::Radar(r) => &r.noise,
            SensorModel::Position(p) => &p.noise,
        }
    }

    pub fn uses_gimbal(&self) -> bool {
        matches!(self, SensorModel::Camera(_))
    }

    /// Noise-free measurement of a target at inertial position `target`.
    pub fn observe(&self, target: &Vector3, ctx: &SensorContext) -> Result<Vector2> {
        let rel = target - ctx.position;
        match self {
            SensorModel::Camera(c) => {
                camera_project(&(ctx.rotation * rel), c.focal_length)
            }
            SensorModel::Radar(_) => radar_measure(&rel),
            SensorModel::Position(_) => Ok(target.xy()),
        }
    }

    /// Predicted measurement and Jacobian at target state `x`.
    pub fn linearize(&self, x: &Vector5, ctx: &SensorContext) -> Result<Linearization> {
        let target = Vector3::new(x[0], x[1], x[2]);
        let rel = target - ctx.position;
        match self {
            SensorModel::Camera(c) => {
                let p = ctx.rotation * rel;
                let predicted = camera_project(&p, c.focal_length)?;
                let jacobian = pad(&(camera_jacobian(&p, c.focal_length)? * ctx.rotation));
                Ok(Linearization { predicted, jacobian })
            }
            SensorModel::Radar(_) => Ok(Linearization {
                predicted: radar_measure(&rel)?,
                jacobian: pad(&radar_jacobian(&rel)?),
            }),
            SensorModel::Position(_) => {
                let mut jacobian = Matrix2x5::zeros();
                jacobian[(0, 0)] = 1.0;
                jacobian[(1, 1)] = 1.0;
                Ok(Linearization { predicted: target.xy(), jacobian })
            }
        }
    }

    /// Innovation `m - predicted`; the radar azimuth is wrapped.
    pub fn residual(&self, m: &Vector2, predicted: &Vector2) -> Vector2 {
        let mut r = m - predicted;
        if let SensorModel::Radar(_) = self {
            r[1] = angle::wrap(r[1]);
        }
        r
    }

    /// Measurement of `truth` (already delayed by the caller) with additive
    /// noise `noise`. Invalid geometry yields an invalid measurement.
    pub fn measure_with_noise(&self, truth: &GmtState, ctx: &SensorContext, noise: &Vector2, step: usize) -> Measurement {
        match self.observe(&truth.position(), ctx) {
            Ok(clean) => {
                let mut values = clean + noise;
                if let SensorModel::Radar(_) = self {
                    values[1] = angle::wrap(values[1]);
                }
                Measurement { values: [values[0], values[1]], kind: self.kind(), step, valid: true }
            }
            Err(err) => {
                log::debug!("step {step}: dropped {} measurement: {err}", self.kind().as_str());
                Measurement { values: [f64::NAN, f64::NAN], kind: self.kind(), step, valid: false }
            }
        }
    }

    pub fn measure<R: Rng + ?Sized>(&self, truth: &GmtState, ctx: &SensorContext, rng: &mut R, step: usize) -> Measurement {
        let noise = self.noise().sample(rng);
        self.measure_with_noise(truth, ctx, &noise, step)
    }
}
