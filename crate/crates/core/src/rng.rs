//! Seeded random streams.
//!
//! Each stochastic process in an episode gets its own ChaCha stream derived
//! from the run seed and a fixed stream id, so adding draws to one process
//! never perturbs another, and two estimators fed the same scenario see the
//! same truth and measurement noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream ids used by the episode runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    TargetModes,
    TargetNoise,
    UavDisturbance,
    MeasurementNoise,
    Filter(u64),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::TargetModes => 1,
            Stream::TargetNoise => 2,
            Stream::UavDisturbance => 3,
            Stream::MeasurementNoise => 4,
            Stream::Filter(k) => 0x100 + k,
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, Stream::TargetNoise), |r, _| Some(r.random())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, Stream::TargetNoise), |r, _| Some(r.random())).collect();
        let c: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, Stream::TargetModes), |r, _| Some(r.random())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
