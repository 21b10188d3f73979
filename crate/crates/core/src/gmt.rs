//! Ground moving target: a linear model driven by a Markov-switching
//! acceleration input plus Gaussian input noise.

use nalgebra::Matrix3;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{psd_factor, Matrix5, Matrix5x2, Matrix5x3, Vector2, Vector3, Vector5};
use crate::{Error, Result};

/// Target position (m) and planar velocity (m/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmtState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
}

impl GmtState {
    pub fn from_speed_heading(x: f64, y: f64, z: f64, speed: f64, heading: f64) -> Self {
        Self { x, y, z, vx: speed * heading.cos(), vy: speed * heading.sin() }
    }

    pub fn to_vector(&self) -> Vector5 {
        Vector5::new(self.x, self.y, self.z, self.vx, self.vy)
    }

    pub fn from_vector(v: &Vector5) -> Self {
        Self { x: v[0], y: v[1], z: v[2], vx: v[3], vy: v[4] }
    }

    pub fn position(&self) -> Vector3 {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn planar_position(&self) -> Vector2 {
        Vector2::new(self.x, self.y)
    }

    pub fn planar_velocity(&self) -> Vector2 {
        Vector2::new(self.vx, self.vy)
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

/// Serialized form of [`ManeuverModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManeuverModelSpec {
    pub modes: Vec<[f64; 2]>,
    pub transition: Vec<Vec<f64>>,
    #[serde(default)]
    pub initial_mode: usize,
}

/// Mode acceleration table plus the row-stochastic transition matrix.
///
/// Mode indices are zero-based: mode 0 here is the first mode of the table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ManeuverModelSpec", into = "ManeuverModelSpec")]
pub struct ManeuverModel {
    modes: Vec<Vector2>,
    transition: Vec<Vec<f64>>,
    initial_mode: usize,
    rows: Vec<WeightedIndex<f64>>,
}

impl PartialEq for ManeuverModel {
    fn eq(&self, other: &Self) -> bool {
        self.modes == other.modes
            && self.transition == other.transition
            && self.initial_mode == other.initial_mode
    }
}

impl ManeuverModel {
    pub fn new(modes: Vec<Vector2>, transition: Vec<Vec<f64>>, initial_mode: usize) -> Result<Self> {
        let n = modes.len();
        if n == 0 {
            return Err(Error::InvalidModel("at least one mode is required".into()));
        }
        if modes.iter().any(|u| !u.iter().all(|v| v.is_finite())) {
            return Err(Error::InvalidModel("mode inputs must be finite".into()));
        }
        if transition.len() != n {
            return Err(Error::InvalidModel(format!(
                "transition matrix has {} rows for {n} modes",
                transition.len()
            )));
        }
        let mut rows = Vec::with_capacity(n);
        for (i, row) in transition.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidModel(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidModel(format!("row {i} has an entry outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidModel(format!("row {i} sums to {sum}")));
            }
            let sampler = WeightedIndex::new(row.iter().copied())
                .map_err(|e| Error::InvalidModel(format!("row {i}: {e}")))?;
            rows.push(sampler);
        }
        if initial_mode >= n {
            return Err(Error::InvalidMode { index: initial_mode, count: n });
        }
        Ok(Self { modes, transition, initial_mode, rows })
    }

    /// Three modes: straight, turn left, turn right; sticky chain with
    /// stay probability 0.9.
    pub fn three_mode() -> Self {
        let modes = vec![Vector2::new(0.0, 0.0), Vector2::new(-1.0, 1.0), Vector2::new(1.0, -1.0)];
        Self::new(modes, sticky_rows(3, 0.9, 0.05), 0).expect("valid table")
    }

    /// Nine modes: rest plus the eight unit-grid accelerations, stay
    /// probability 0.6.
    pub fn nine_mode() -> Self {
        let modes = [
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [-1.0, 1.0],
            [-1.0, 0.0],
            [-1.0, -1.0],
            [0.0, -1.0],
            [1.0, -1.0],
        ]
        .iter()
        .map(|u| Vector2::new(u[0], u[1]))
        .collect();
        Self::new(modes, sticky_rows(9, 0.6, 0.05), 0).expect("valid table")
    }

    /// Single zero-acceleration mode.
    pub fn stationary() -> Self {
        Self::new(vec![Vector2::zeros()], vec![vec![1.0]], 0).expect("valid table")
    }

    /// Same mode table with every transition row uniform.
    pub fn with_uniform_transition(&self) -> Self {
        let n = self.len();
        let row = vec![1.0 / n as f64; n];
        let mut transition = vec![row; n];
        // Keep the rows summing to one within tolerance for any n.
        for r in &mut transition {
            let excess: f64 = r.iter().sum::<f64>() - 1.0;
            r[n - 1] -= excess;
        }
        Self::new(self.modes.clone(), transition, self.initial_mode).expect("uniform rows are valid")
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Vector2] {
        &self.modes
    }

    pub fn input(&self, mode: usize) -> Result<Vector2> {
        self.modes
            .get(mode)
            .copied()
            .ok_or(Error::InvalidMode { index: mode, count: self.len() })
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn initial_mode(&self) -> usize {
        self.initial_mode
    }

    fn row_sampler(&self, mode: usize) -> Result<&WeightedIndex<f64>> {
        self.rows.get(mode).ok_or(Error::InvalidMode { index: mode, count: self.len() })
    }
}

fn sticky_rows(n: usize, stay: f64, switch: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { stay } else { switch }).collect())
        .collect()
}

impl TryFrom<ManeuverModelSpec> for ManeuverModel {
    type Error = Error;

    fn try_from(spec: ManeuverModelSpec) -> Result<Self> {
        let modes = spec.modes.iter().map(|u| Vector2::new(u[0], u[1])).collect();
        Self::new(modes, spec.transition, spec.initial_mode)
    }
}

impl From<ManeuverModel> for ManeuverModelSpec {
    fn from(model: ManeuverModel) -> Self {
        Self {
            modes: model.modes.iter().map(|u| [u[0], u[1]]).collect(),
            transition: model.transition,
            initial_mode: model.initial_mode,
        }
    }
}

/// Input-noise covariance `Q` (X/Y acceleration noise, altitude-rate noise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 3]; 3]", into = "[[f64; 3]; 3]")]
pub struct GmtNoiseModel {
    covariance: Matrix3<f64>,
    factor: Matrix3<f64>,
}

impl GmtNoiseModel {
    pub fn new(covariance: Matrix3<f64>) -> Result<Self> {
        let factor = psd_factor(&covariance, "target noise covariance")?;
        Ok(Self { covariance, factor })
    }

    pub fn diagonal(sx: f64, sy: f64, sz: f64) -> Result<Self> {
        Self::new(Matrix3::from_diagonal(&Vector3::new(sx * sx, sy * sy, sz * sz)))
    }

    pub fn covariance(&self) -> &Matrix3<f64> {
        &self.covariance
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector3 {
        crate::linalg::gaussian(&self.factor, rng)
    }
}

impl TryFrom<[[f64; 3]; 3]> for GmtNoiseModel {
    type Error = Error;

    fn try_from(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::new(Matrix3::from_fn(|i, j| rows[i][j]))
    }
}

impl From<GmtNoiseModel> for [[f64; 3]; 3] {
    fn from(model: GmtNoiseModel) -> Self {
        let q = model.covariance;
        [[q[(0, 0)], q[(0, 1)], q[(0, 2)]], [q[(1, 0)], q[(1, 1)], q[(1, 2)]], [q[(2, 0)], q[(2, 1)], q[(2, 2)]]]
    }
}

/// `x' = F x + B u + G w` for one sampling interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    pub tau: f64,
    pub f: Matrix5,
    pub b: Matrix5x2,
    pub g: Matrix5x3,
}

impl SystemMatrices {
    /// `G Q Gᵀ`, the state-space process noise.
    pub fn process_noise(&self, noise: &GmtNoiseModel) -> Matrix5 {
        self.g * noise.covariance() * self.g.transpose()
    }
}

pub fn build_system_matrices(tau: f64) -> Result<SystemMatrices> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::NonPositiveStep(tau));
    }
    let half = 0.5 * tau * tau;
    let mut f = Matrix5::identity();
    f[(0, 3)] = tau;
    f[(1, 4)] = tau;
    let mut b = Matrix5x2::zeros();
    b[(0, 0)] = half;
    b[(1, 1)] = half;
    b[(3, 0)] = tau;
    b[(4, 1)] = tau;
    let mut g = Matrix5x3::zeros();
    g[(0, 0)] = half;
    g[(1, 1)] = half;
    g[(2, 2)] = tau;
    g[(3, 0)] = tau;
    g[(4, 1)] = tau;
    Ok(SystemMatrices { tau, f, b, g })
}

/// Draw the next mode from row `prev` of the transition matrix.
pub fn sample_mode<R: Rng + ?Sized>(prev: usize, model: &ManeuverModel, rng: &mut R) -> Result<usize> {
    Ok(model.row_sampler(prev)?.sample(rng))
}

pub fn step_gmt(
    state: &GmtState,
    mode: usize,
    noise: &Vector3,
    model: &ManeuverModel,
    mats: &SystemMatrices,
) -> Result<GmtState> {
    let u = model.input(mode)?;
    let next = mats.f * state.to_vector() + mats.b * u + mats.g * noise;
    Ok(GmtState::from_vector(&next))
}
