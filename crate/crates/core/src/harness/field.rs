//! Sampled guidance field, for plotting.

use serde::{Deserialize, Serialize};

use crate::guidance::{lyapunov_field, LoiterSpec};
use crate::linalg::Vector2;

/// Field velocity at a position relative to the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

/// `n x n` grid over `[-half_width, half_width]^2`.
pub fn field_grid(spec: &LoiterSpec, half_width: f64, n: usize) -> Vec<FieldSample> {
    let n = n.max(2);
    let step = 2.0 * half_width / (n - 1) as f64;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let p = Vector2::new(-half_width + j as f64 * step, -half_width + i as f64 * step);
            let v = lyapunov_field(&p, spec);
            out.push(FieldSample { x: p.x, y: p.y, vx: v.x, vy: v.y });
        }
    }
    out
}
