//! Scenario configuration, presets, episode runners, Monte Carlo driver and
//! file output.

pub mod config;
pub mod episode;
pub mod export;
pub mod field;
pub mod montecarlo;
pub mod presets;

pub use config::{
    ControllerConfig, Experiment, ExperimentConfig, FilterConfig, ScenarioConfig, SensorConfig, StateSource,
    TargetConfig, UavConfig, ValidationReport,
};
pub use episode::{
    run_controller_comparison, run_episode, run_filter_episode, ControllerSummary, EpisodeSummary, EpisodeTrace,
    FilterRecord, FilterSummary, FilterTrace, StepRecord, FILTER_NAMES,
};
pub use export::{read_json, write_csv, write_json};
pub use field::{field_grid, FieldSample};
pub use montecarlo::{run_monte_carlo, ControllerStats, LoiterStats, MonteCarloReport, RmseSeries};
pub use presets::preset;
