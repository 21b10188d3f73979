//! Discrete-time loitering over a ground moving target.
//!
//! The crate bundles the pieces needed to simulate a fixed-altitude unicycle
//! UAV orbiting a ground target whose maneuvers follow a finite-state Markov
//! chain:
//!
//! - [`gmt`]: jump-Markov linear target dynamics.
//! - [`uav`]: exact discrete unicycle with bounded input disturbance.
//! - [`guidance`]: discrete Lyapunov vector field and speed/heading commands.
//! - [`ismc`]: integral sliding-mode tracking controller plus PD/SMC baselines.
//! - [`sensors`]: gimballed camera and radar models with analytic Jacobians.
//! - [`estimation`]: Rao-Blackwellised particle filter (a bank of EKFs indexed
//!   by sampled maneuver modes) and a random-input EKF baseline.
//! - [`harness`]: closed-loop episodes, Monte Carlo experiments, presets and
//!   CSV/JSON export.
//!
//! Every stochastic component draws from an explicitly seeded stream, so an
//! episode is a pure function of `(config, seed)`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod angle;
pub mod error;
pub mod estimation;
pub mod gmt;
pub mod guidance;
pub mod harness;
pub mod ismc;
pub mod linalg;
pub mod rng;
pub mod sensors;
pub mod uav;

pub use error::{Error, Result};
