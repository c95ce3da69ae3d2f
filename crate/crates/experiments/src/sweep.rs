//! Parameter sweeps: one tournament per grid point over shared instances.

use serde::Serialize;

use saa_core::strategies::StrategyRegistry;

use crate::archive::{ensure_dir, read_plays, write_json, write_text, PLAYS};
use crate::config::{ExperimentConfig, GridPoint};
use crate::error::{ExperimentError, Result};
use crate::instances::{build_instances, dimensions, prepare};
use crate::report::{build_report, MetricsRow};
use crate::tournament::{run_prepared, RunSummary};

pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_JSON: &str = "sweep.json";

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub point: String,
    pub alpha: Option<f64>,
    pub n_act: Option<usize>,
    pub iterations: Option<u64>,
    pub profile: String,
    pub strategy: String,
    pub seats: usize,
    pub plays: usize,
    pub expected_utility: f64,
    pub exposure_frequency: f64,
    pub expected_exposure: f64,
    pub expected_gain: f64,
    pub avg_price_per_item_won: Option<f64>,
    pub ratio_items_won: f64,
    pub ratio_items_allocated: f64,
}

impl SweepRow {
    fn new(point: &GridPoint, m: MetricsRow) -> Self {
        SweepRow {
            point: point.label(),
            alpha: point.alpha,
            n_act: point.n_act,
            iterations: point.iterations,
            profile: m.profile,
            strategy: m.strategy,
            seats: m.seats,
            plays: m.plays,
            expected_utility: m.expected_utility,
            exposure_frequency: m.exposure_frequency,
            expected_exposure: m.expected_exposure,
            expected_gain: m.expected_gain,
            avg_price_per_item_won: m.avg_price_per_item_won,
            ratio_items_won: m.ratio_items_won,
            ratio_items_allocated: m.ratio_items_allocated,
        }
    }
}

/// Runs every grid point into `output/<point label>`; instances and their
/// predictions are computed once and shared.
pub fn run_sweep(config: &ExperimentConfig, registry: &StrategyRegistry) -> Result<Vec<(GridPoint, RunSummary)>> {
    let spec = config.sweep.as_ref().ok_or_else(|| ExperimentError::Config("config has no [sweep] table".into()))?;
    if !config.strategies.contains_key(&spec.target) {
        return Err(ExperimentError::Config(format!("sweep target {:?} is not a strategy label", spec.target)));
    }
    let (n, m) = dimensions(config)?;
    config.validate(registry, n)?;
    let grid = spec.grid();
    let prepared = prepare(config, build_instances(config)?);
    ensure_dir(&config.output)?;
    let mut summaries = Vec::with_capacity(grid.len());
    let mut rows = Vec::new();
    for point in grid {
        let dir = config.output.join(point.label());
        let summary = run_prepared(config, registry, &prepared, &dir, Some((&spec.target, &point)))?;
        let records = read_plays(&dir.join(PLAYS))?;
        for metrics in build_report(config, &records, n, m)?.metrics {
            rows.push(SweepRow::new(&point, metrics));
        }
        summaries.push((point, summary));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(|e| ExperimentError::Config(e.to_string()))?;
    }
    let text = String::from_utf8(w.into_inner().map_err(|e| ExperimentError::Config(e.to_string()))?)
        .expect("csv output is UTF-8");
    write_text(&config.output.join(SWEEP_CSV), &text)?;
    write_json(&config.output.join(SWEEP_JSON), &rows)?;
    Ok(summaries)
}
