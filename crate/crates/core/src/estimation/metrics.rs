//! Position RMSE across Monte Carlo runs.

use crate::linalg::Vector2;
use crate::{Error, Result};

/// `RMSE_k = sqrt(mean over runs of |p̂_k - p_k|²)` for runs × steps inputs.
pub fn rmse(estimates: &[Vec<Vector2>], truths: &[Vec<Vector2>]) -> Result<Vec<f64>> {
    if estimates.len() != truths.len() {
        return Err(Error::LengthMismatch { expected: truths.len(), actual: estimates.len() });
    }
    let mut acc = RmseAccumulator::default();
    for (est, tru) in estimates.iter().zip(truths) {
        if est.len() != tru.len() {
            return Err(Error::LengthMismatch { expected: tru.len(), actual: est.len() });
        }
        let sq: Vec<f64> = est.iter().zip(tru).map(|(e, t)| (e - t).norm_squared()).collect();
        acc.add_run(&sq)?;
    }
    Ok(acc.series())
}

/// Running sum of squared position errors per step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RmseAccumulator {
    sum_sq: Vec<f64>,
    runs: usize,
}

impl RmseAccumulator {
    pub fn add_run(&mut self, squared_errors: &[f64]) -> Result<()> {
        if self.runs == 0 {
            self.sum_sq = vec![0.0; squared_errors.len()];
        } else if squared_errors.len() != self.sum_sq.len() {
            return Err(Error::LengthMismatch { expected: self.sum_sq.len(), actual: squared_errors.len() });
        }
        for (a, e) in self.sum_sq.iter_mut().zip(squared_errors) {
            *a += e;
        }
        self.runs += 1;
        Ok(())
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn series(&self) -> Vec<f64> {
        let n = self.runs.max(1) as f64;
        self.sum_sq.iter().map(|s| (s / n).sqrt()).collect()
    }
}

/// Mean of the trailing `fraction` of a series.
pub fn tail_mean(series: &[f64], fraction: f64) -> f64 {
    let n = series.len();
    let start = n - ((n as f64 * fraction).round() as usize).clamp(1, n.max(1));
    let tail = &series[start..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let t = vec![vec![Vector2::new(1.0, 2.0); 4]];
        assert_eq!(rmse(&t, &t).unwrap(), vec![0.0; 4]);
        let e = vec![vec![Vector2::new(4.0, 6.0); 4]];
        assert_eq!(rmse(&e, &t).unwrap(), vec![5.0; 4]);
        let truth = vec![vec![Vector2::zeros()], vec![Vector2::zeros()]];
        let est = vec![vec![Vector2::new(1.0, 0.0)], vec![Vector2::new(0.0, 1.0)]];
        assert_eq!(rmse(&est, &truth).unwrap(), vec![1.0]);
    }

    #[test]
    fn mismatches_rejected() {
        let a = vec![vec![Vector2::zeros(); 3]];
        let b = vec![vec![Vector2::zeros(); 2]];
        assert!(rmse(&a, &b).is_err());
        assert!(rmse(&a, &[]).is_err());
    }

    #[test]
    fn tail() {
        assert_eq!(tail_mean(&[10.0, 10.0, 1.0, 3.0], 0.5), 2.0);
        assert_eq!(tail_mean(&[4.0], 0.25), 4.0);
    }
}
