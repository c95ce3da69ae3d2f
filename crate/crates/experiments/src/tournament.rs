//! Runs every (instance, profile) cell of a config and archives the plays.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;

use saa_core::seed::rng_for;
use saa_core::strategies::{PredictionSource, PreparedInstance, Strategy, StrategyParams, StrategyRegistry};
use saa_core::trace::write_trace;
use saa_core::{play_out, play_out_traced};

use crate::archive::{
    ensure_dir, normalize, read_plays, write_json, write_plays, write_text, Manifest, PlayRecord, PlaysAppender,
    MANIFEST, METRICS, PLAYS, REPORT_JSON, REPORT_MD, TRACES,
};
use crate::config::{ExperimentConfig, GridPoint, Profile};
use crate::error::{io_err, ExperimentError, Result};
use crate::instances::{build_instances, dimensions, instance_seed, play_seed, predictor_seed, prepare};
use crate::report::{build_report, metrics_csv, render_markdown};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub output: PathBuf,
    pub cells_total: usize,
    pub cells_run: usize,
    pub cells_skipped: usize,
}

/// Validates, builds the instances and runs the tournament into `config.output`.
pub fn run_tournament(config: &ExperimentConfig, registry: &StrategyRegistry) -> Result<RunSummary> {
    let (n, _) = dimensions(config)?;
    config.validate(registry, n)?;
    let prepared = prepare(config, build_instances(config)?);
    run_prepared(config, registry, &prepared, &config.output, None)
}

/// Runs all cells missing from `out`'s plays file. `point`, when given,
/// overrides the search parameters of the sweep target.
pub fn run_prepared(
    config: &ExperimentConfig,
    registry: &StrategyRegistry,
    prepared: &[PreparedInstance],
    out: &Path,
    point: Option<(&str, &GridPoint)>,
) -> Result<RunSummary> {
    let first = prepared.first().ok_or_else(|| ExperimentError::Config("no instances".into()))?;
    let (n, m) = (first.instance.config.n_bidders, first.instance.config.m_items);
    config.validate(registry, n)?;
    let profiles = config.expanded_profiles(n);
    let params_for = |label: &str| -> StrategyParams {
        let mut p = config.params_for(label).expect("validated label");
        if let Some((target, g)) = point {
            if target == label {
                g.apply(&mut p);
            }
        }
        p
    };
    // Resolve every strategy once up front so bad parameters fail before any play.
    // A zero prediction keeps this cheap; the real one is computed per instance.
    for (label, spec) in &config.strategies {
        let mut params = params_for(label);
        if let PredictionSource::Literal(p) = &params.prediction {
            if p.len() != m {
                return Err(ExperimentError::Config(format!("strategy {label:?}: prediction has {} prices for {m} items", p.len())));
            }
        }
        params.prediction = PredictionSource::Zero;
        registry.resolve(&spec.strategy, first, &params)?;
    }

    ensure_dir(out)?;
    let plays_path = out.join(PLAYS);
    let existing = normalize(read_plays(&plays_path)?, &profiles, n);
    let done: BTreeSet<(usize, String)> = existing.iter().map(|r| r.cell()).collect();
    let pending: Vec<(usize, &Profile)> = (0..prepared.len())
        .flat_map(|k| profiles.iter().map(move |p| (k, p)))
        .filter(|(k, p)| !done.contains(&(*k, p.label.clone())))
        .collect();
    let cells_total = prepared.len() * profiles.len();
    let summary = RunSummary {
        output: out.to_path_buf(),
        cells_total,
        cells_run: pending.len(),
        cells_skipped: cells_total - pending.len(),
    };
    if pending.is_empty() && out.join(MANIFEST).exists() {
        log::info!("{}: all {cells_total} cells present, nothing to do", out.display());
        return Ok(summary);
    }

    let manifest = Manifest::new(
        config,
        n,
        m,
        (0..prepared.len()).map(|k| instance_seed(config.master_seed, k)).collect(),
        (0..prepared.len()).map(|k| predictor_seed(config.master_seed, k)).collect(),
    );
    write_json(&out.join(MANIFEST), &manifest)?;
    // Drop partial cells left by an interrupted run, then append as cells finish.
    write_plays(&plays_path, &existing)?;
    if config.traces {
        ensure_dir(&out.join(TRACES))?;
    }
    let appender = Mutex::new(PlaysAppender::open(&plays_path)?);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| ExperimentError::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        pending.par_iter().try_for_each(|(k, profile)| -> Result<()> {
            let records = play_cell(config, registry, &prepared[*k], *k, profile, out, &params_for)?;
            appender.lock().expect("appender lock").append(&records)
        })
    })?;
    drop(appender);

    finalize(config, out, n, m)?;
    Ok(summary)
}

fn play_cell(
    config: &ExperimentConfig,
    registry: &StrategyRegistry,
    prepared: &PreparedInstance,
    k: usize,
    profile: &Profile,
    out: &Path,
    params_for: &(dyn Fn(&str) -> StrategyParams + Sync),
) -> Result<Vec<PlayRecord>> {
    let inst = &prepared.instance;
    let strategies: Vec<Box<dyn Strategy>> = profile
        .seats
        .iter()
        .map(|label| registry.resolve(&config.strategies[label].strategy, prepared, &params_for(label)))
        .collect::<saa_core::Result<_>>()?;
    let refs: Vec<&dyn Strategy> = strategies.iter().map(|s| s.as_ref()).collect();
    let mut rng = rng_for(play_seed(config.master_seed, k, &profile.label), &[]);
    let outcome = if config.traces {
        let (outcome, trace) = play_out_traced(&inst.config, &inst.profiles, &refs, &mut rng)?;
        let path = out.join(TRACES).join(format!("{k:05}_{}.jsonl", profile.label));
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        write_trace(std::io::BufWriter::new(file), &trace).map_err(io_err(&path))?;
        outcome
    } else {
        play_out(&inst.config, &inst.profiles, &refs, &mut rng)?
    };
    let unsold = inst.config.m_items - outcome.final_allocation.allocated_count();
    log::debug!("instance {k} profile {}: {} rounds", profile.label, outcome.rounds_played);
    Ok(profile
        .seats
        .iter()
        .enumerate()
        .map(|(seat, label)| PlayRecord {
            instance: k,
            profile: profile.label.clone(),
            seat,
            strategy: label.clone(),
            utility: outcome.utilities[seat],
            items_won: outcome.won_by(seat).len(),
            spend: outcome.spend(seat, inst.config.epsilon),
            rounds: outcome.rounds_played,
            unsold,
        })
        .collect())
}

/// Rewrites the plays file in canonical order and regenerates metrics and reports.
pub fn finalize(config: &ExperimentConfig, out: &Path, n: usize, m: usize) -> Result<()> {
    let plays_path = out.join(PLAYS);
    let records = normalize(read_plays(&plays_path)?, &config.expanded_profiles(n), n);
    write_plays(&plays_path, &records)?;
    let report = build_report(config, &records, n, m)?;
    write_text(&out.join(METRICS), &metrics_csv(&report.metrics)?)?;
    write_json(&out.join(REPORT_JSON), &report)?;
    write_text(&out.join(REPORT_MD), &render_markdown(&report))
}

/// Regenerates metrics and reports of an existing run directory from its manifest.
pub fn regenerate(out: &Path) -> Result<()> {
    let manifest: Manifest = crate::archive::read_json(&out.join(MANIFEST))?;
    let config = ExperimentConfig::from_toml(&manifest.config)?;
    finalize(&config, out, manifest.n_bidders, manifest.m_items)
}
