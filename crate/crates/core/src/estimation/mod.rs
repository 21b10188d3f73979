//! Target state estimation: a Rao-Blackwellised particle filter over the
//! maneuver modes, and a random-input EKF baseline.

pub mod baseline;
pub mod ekf;
pub mod metrics;
pub mod rbpf;

pub use baseline::EkfBaseline;
pub use ekf::{measurement_update, time_update, Correction, Gaussian};
pub use metrics::{rmse, RmseAccumulator};
pub use rbpf::{
    effective_sample_size, estimate, init, normalize_weights, propagate_modes, resample, Estimate, ModePrior,
    Particle, Rbpf, RbpfConfig, Resampling, StepTelemetry,
};
