//! Independent runs over consecutive seeds, aggregated in seed order so the
//! report does not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::estimation::metrics::tail_mean;
use crate::estimation::RmseAccumulator;
use crate::harness::config::{Experiment, ScenarioConfig, StateSource};
use crate::harness::episode::{run_controller_comparison, run_episode, run_filter_episode, FILTER_NAMES};
use crate::ismc::ControllerKind;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseSeries {
    pub name: String,
    /// Planar position RMSE per step (m).
    pub series: Vec<f64>,
    /// Mean of the series over the steady-state window.
    pub steady_state: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoiterStats {
    pub band: f64,
    pub within_band: usize,
    pub fraction_within: f64,
    /// Per-run largest `|distance - r_d|` over the final window.
    pub max_deviation: Vec<f64>,
    /// Per-run largest `|e_v|`, `|e_psi|` over the final window.
    pub max_tracking_error: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerStats {
    pub kind: ControllerKind,
    pub settling_time: Vec<Option<f64>>,
    pub settled: usize,
    /// Mean over settled runs.
    pub mean_settling_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub scenario: String,
    pub experiment: Experiment,
    pub config_hash: String,
    pub base_seed: u64,
    pub runs: usize,
    pub seeds: Vec<u64>,
    pub tau: f64,
    pub rmse: Vec<RmseSeries>,
    pub loiter: Option<LoiterStats>,
    pub controllers: Vec<ControllerStats>,
}

fn parallel<T: Send>(threads: usize, n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(f).collect())
}

fn rmse_series(name: &str, runs: &[&[f64]], steady_fraction: f64) -> Result<RmseSeries> {
    let mut acc = RmseAccumulator::default();
    for r in runs {
        acc.add_run(r)?;
    }
    let series = acc.series();
    let steady_state = tail_mean(&series, steady_fraction);
    Ok(RmseSeries { name: name.to_string(), series, steady_state })
}

/// Runs seeds `base_seed .. base_seed + runs` of the configured experiment
/// on `threads` worker threads (0 picks the rayon default).
pub fn run_monte_carlo(cfg: &ScenarioConfig, runs: usize, threads: usize) -> Result<MonteCarloReport> {
    if runs == 0 {
        return Err(Error::Config("at least one run is required".into()));
    }
    cfg.check()?;
    let seeds: Vec<u64> = (0..runs as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    let steady = cfg.experiment.steady_fraction;
    let mut report = MonteCarloReport {
        scenario: cfg.name.clone(),
        experiment: cfg.experiment.kind,
        config_hash: cfg.hash(),
        base_seed: cfg.seed,
        runs,
        seeds: seeds.clone(),
        tau: cfg.tau,
        rmse: Vec::new(),
        loiter: None,
        controllers: Vec::new(),
    };
    match cfg.experiment.kind {
        Experiment::ClosedLoop => {
            let out = parallel(threads, runs, |i| run_episode(cfg, seeds[i]).map(|t| t.summary))?;
            let name = match cfg.experiment.state_source {
                StateSource::Filter => "rbpf",
                StateSource::Truth => "truth",
            };
            let sq: Vec<&[f64]> = out.iter().map(|s| s.squared_error.as_slice()).collect();
            report.rmse.push(rmse_series(name, &sq, steady)?);
            let within = out.iter().filter(|s| s.within_band).count();
            report.loiter = Some(LoiterStats {
                band: cfg.experiment.band,
                within_band: within,
                fraction_within: within as f64 / runs as f64,
                max_deviation: out.iter().map(|s| s.final_max_deviation).collect(),
                max_tracking_error: out.iter().map(|s| s.final_max_error).collect(),
            });
        }
        Experiment::Filters => {
            let out = parallel(threads, runs, |i| run_filter_episode(cfg, seeds[i]).map(|t| t.summary))?;
            for (j, name) in FILTER_NAMES.iter().enumerate() {
                let sq: Vec<&[f64]> = out.iter().map(|s| s.squared_error[j].as_slice()).collect();
                report.rmse.push(rmse_series(name, &sq, steady)?);
            }
        }
        Experiment::Controllers => {
            let out = parallel(threads, runs, |i| run_controller_comparison(cfg, seeds[i]))?;
            let kinds = out[0].kinds.clone();
            for (j, kind) in kinds.into_iter().enumerate() {
                let times: Vec<Option<f64>> = out.iter().map(|s| s.settling_time[j]).collect();
                let settled: Vec<f64> = times.iter().flatten().copied().collect();
                let mean = (!settled.is_empty()).then(|| settled.iter().sum::<f64>() / settled.len() as f64);
                report.controllers.push(ControllerStats {
                    kind,
                    settled: settled.len(),
                    settling_time: times,
                    mean_settling_time: mean,
                });
            }
        }
    }
    Ok(report)
}
