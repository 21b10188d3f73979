//! `loiter`: run loitering scenarios from the command line.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use loiter_core::guidance::LoiterSpec;
use loiter_core::harness::{
    field_grid, preset, presets, run_episode, run_filter_episode, run_monte_carlo, write_csv, write_json, Experiment,
    MonteCarloReport, ScenarioConfig,
};
use serde::Serialize;

/// Exit code for configurations that fail validation.
const INVALID: u8 = 2;

#[derive(Parser)]
#[command(name = "loiter", version, about = "UAV loitering over a maneuvering ground target")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and write its per-step trace.
    Simulate {
        #[command(flatten)]
        scenario: Scenario,
        #[command(flatten)]
        output: Output,
    },
    /// Run seeded episodes in parallel and write the aggregate report.
    Montecarlo {
        #[command(flatten)]
        scenario: Scenario,
        #[command(flatten)]
        output: Output,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Override the configured experiment.
        #[arg(long, value_enum)]
        experiment: Option<ExperimentArg>,
    },
    /// Sample the guidance field on a square grid around the target.
    ExportField {
        #[arg(long, default_value_t = presets::LOITER_RADIUS)]
        radius: f64,
        #[arg(long, default_value_t = presets::LOITER_SPEED)]
        speed: f64,
        #[arg(long, default_value_t = 400.0)]
        half_width: f64,
        #[arg(long, default_value_t = 41)]
        points: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Check a configuration: structure, guidance feasibility and gains.
    Validate {
        #[command(flatten)]
        scenario: Scenario,
    },
    /// Print a built-in scenario as TOML.
    Preset {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(presets::NAMES))]
        name: String,
    },
}

#[derive(Args)]
struct Scenario {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario; the default when no file is given.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(presets::NAMES))]
    preset: Option<String>,
    /// Override the configured base seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct Output {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentArg {
    ClosedLoop,
    Filters,
    Controllers,
}

impl From<ExperimentArg> for Experiment {
    fn from(e: ExperimentArg) -> Self {
        match e {
            ExperimentArg::ClosedLoop => Experiment::ClosedLoop,
            ExperimentArg::Filters => Experiment::Filters,
            ExperimentArg::Controllers => Experiment::Controllers,
        }
    }
}

impl Scenario {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ScenarioConfig::load(path)?,
            (None, Some(name)) => preset(name).context("unknown preset")?,
            (None, None) => preset(presets::NAMES[0]).context("missing default preset")?,
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

/// Error raised for invalid configurations, mapped to exit code 2.
#[derive(Debug)]
struct Invalid(String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn checked(cfg: &ScenarioConfig) -> Result<()> {
    let report = cfg.validate();
    if !report.structurally_valid() {
        bail!(Invalid(format!("invalid scenario `{}`: {}", cfg.name, report.errors.join("; "))));
    }
    Ok(())
}

fn emit_rows<T: Serialize>(rows: &[T], output: &Output) -> Result<()> {
    match (&output.out, output.format) {
        (Some(path), Format::Csv) => write_csv(path, rows)?,
        (Some(path), Format::Json) => write_json(path, &rows)?,
        (None, Format::Csv) => {
            let mut w = csv::Writer::from_writer(std::io::stdout().lock());
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        (None, Format::Json) => print_json(&rows)?,
    }
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn emit_report(report: &MonteCarloReport, output: &Output) -> Result<()> {
    match output.format {
        Format::Json => match &output.out {
            Some(path) => write_json(path, report)?,
            None => print_json(report)?,
        },
        Format::Csv => {
            if report.rmse.is_empty() {
                bail!("the {} experiment has no per-step series; use --format json", report.experiment.as_str());
            }
            let rows: Vec<Vec<String>> = (0..report.rmse[0].series.len())
                .map(|k| {
                    let mut row = vec![(k + 1).to_string(), ((k + 1) as f64 * report.tau).to_string()];
                    row.extend(report.rmse.iter().map(|s| s.series[k].to_string()));
                    row
                })
                .collect();
            let mut header = vec!["k".to_string(), "t".to_string()];
            header.extend(report.rmse.iter().map(|s| format!("rmse_{}", s.name)));
            let sink: Box<dyn Write> = match &output.out {
                Some(path) => Box::new(create(path)?),
                None => Box::new(std::io::stdout().lock()),
            };
            let mut w = csv::Writer::from_writer(sink);
            w.write_record(&header)?;
            for r in rows {
                w.write_record(&r)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn create(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { scenario, output } => {
            let cfg = scenario.load()?;
            checked(&cfg)?;
            match cfg.experiment.kind {
                Experiment::Filters => emit_rows(&run_filter_episode(&cfg, cfg.seed)?.records, &output),
                _ => emit_rows(&run_episode(&cfg, cfg.seed)?.records, &output),
            }
        }
        Command::Montecarlo { scenario, output, runs, threads, experiment } => {
            let mut cfg = scenario.load()?;
            if let Some(e) = experiment {
                cfg.experiment.kind = e.into();
            }
            checked(&cfg)?;
            let report = run_monte_carlo(&cfg, runs, threads)?;
            for s in &report.rmse {
                log::info!("{}: steady-state RMSE {:.3} m", s.name, s.steady_state);
            }
            if let Some(l) = &report.loiter {
                log::info!("{}/{} runs inside the {} m band", l.within_band, report.runs, l.band);
            }
            emit_report(&report, &output)
        }
        Command::ExportField { radius, speed, half_width, points, output } => {
            let spec = LoiterSpec::new(radius, speed).map_err(|e| Invalid(e.to_string()))?;
            emit_rows(&field_grid(&spec, half_width, points), &output)
        }
        Command::Validate { scenario } => {
            let cfg = scenario.load()?;
            let report = cfg.validate();
            print_json(&report)?;
            if !report.passes() {
                bail!(Invalid(format!("scenario `{}` failed validation", cfg.name)));
            }
            Ok(())
        }
        Command::Preset { name } => {
            let cfg = preset(&name).context("unknown preset")?;
            print!("{}", cfg.to_toml()?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.chain().any(|e| e.is::<Invalid>() || matches!(e.downcast_ref(), Some(loiter_core::Error::Config(_)))) {
                ExitCode::from(INVALID)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
