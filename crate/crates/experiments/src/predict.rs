//! Stand-alone closing-price predictions and instance files.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use saa_core::prediction::iterate_prediction;

use crate::archive::{ensure_dir, write_json, write_text};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::instances::{build_instances, prepare};

pub const INSTANCES: &str = "instances.json";
pub const CONVERGENCE: &str = "convergence.csv";
pub const PREDICTIONS: &str = "predictions.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub instance: usize,
    pub prediction: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub last_delta: Option<f64>,
}

/// Writes the configured instances to `output/instances.json`.
pub fn generate(config: &ExperimentConfig) -> Result<std::path::PathBuf> {
    ensure_dir(&config.output)?;
    let path = config.output.join(INSTANCES);
    write_json(&path, &build_instances(config)?)?;
    Ok(path)
}

/// Runs the fixed-point predictor on every instance, writing the per-iteration
/// convergence trace and the final predictions.
pub fn predict(config: &ExperimentConfig) -> Result<Vec<PredictionRecord>> {
    ensure_dir(&config.output)?;
    let prepared = prepare(config, build_instances(config)?);
    let mut csv = String::from("instance,t,delta");
    let m = prepared.first().map_or(0, |p| p.instance.config.m_items);
    for j in 0..m {
        let _ = write!(csv, ",p{j}");
    }
    csv.push('\n');
    let mut out = Vec::with_capacity(prepared.len());
    for (k, p) in prepared.iter().enumerate() {
        let (final_p, trace) = iterate_prediction(&p.instance.config, &p.instance.profiles, &p.predictor)?;
        for (t, point) in trace.points.iter().enumerate() {
            let delta = if t == 0 { String::new() } else { trace.deltas[t - 1].to_string() };
            let _ = write!(csv, "{k},{t},{delta}");
            for x in point.as_slice() {
                let _ = write!(csv, ",{x}");
            }
            csv.push('\n');
        }
        out.push(PredictionRecord {
            instance: k,
            prediction: final_p.0,
            iterations: trace.deltas.len(),
            converged: trace.converged,
            last_delta: trace.deltas.last().copied(),
        });
    }
    write_text(&config.output.join(CONVERGENCE), &csv)?;
    write_json(&config.output.join(PREDICTIONS), &out)?;
    Ok(out)
}
