//! Aggregation of play records into metrics, empirical games and reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use saa_core::analytics::{build_empirical_game, compute_metrics, EmpiricalGame};

use crate::archive::PlayRecord;
use crate::config::{ExperimentConfig, Profile};
use crate::error::Result;

/// Metrics of one strategy label within one profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub profile: String,
    pub strategy: String,
    pub seats: usize,
    pub plays: usize,
    pub expected_utility: f64,
    pub exposure_frequency: f64,
    pub expected_exposure: f64,
    pub expected_gain: f64,
    pub avg_price_per_item_won: Option<f64>,
    /// Items won by all seats of this strategy over `plays · m`.
    pub ratio_items_won: f64,
    /// Items sold in the profile over `plays · m`.
    pub ratio_items_allocated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSummary {
    pub game: EmpiricalGame,
    /// Gain of one B-player switching to A, for k = 0..n−1 existing A-players.
    pub deviation_gains: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub metrics: Vec<MetricsRow>,
    pub game: Option<GameSummary>,
}

pub fn metrics_rows(records: &[PlayRecord], profiles: &[Profile], m: usize) -> Result<Vec<MetricsRow>> {
    let mut out = Vec::new();
    for p in profiles {
        let rows: Vec<&PlayRecord> = records.iter().filter(|r| r.profile == p.label).collect();
        if rows.is_empty() {
            continue;
        }
        let mut unsold: BTreeMap<usize, usize> = BTreeMap::new();
        for r in &rows {
            unsold.insert(r.instance, r.unsold);
        }
        let plays = unsold.len();
        let allocated = 1.0 - unsold.values().sum::<usize>() as f64 / (plays * m) as f64;
        let mut seen = Vec::new();
        for label in p.seats.iter() {
            if seen.contains(&label) {
                continue;
            }
            seen.push(label);
            let group: Vec<&&PlayRecord> = rows.iter().filter(|r| &r.strategy == label).collect();
            let rewards: Vec<f64> = group.iter().map(|r| r.utility).collect();
            let won: Vec<usize> = group.iter().map(|r| r.items_won).collect();
            let spend: Vec<f64> = group.iter().map(|r| r.spend).collect();
            let metrics = compute_metrics(&rewards, &won, &spend, m)?;
            out.push(MetricsRow {
                profile: p.label.clone(),
                strategy: label.clone(),
                seats: p.seats.iter().filter(|s| *s == label).count(),
                plays,
                expected_utility: metrics.expected_utility,
                exposure_frequency: metrics.exposure_frequency,
                expected_exposure: metrics.expected_exposure,
                expected_gain: metrics.expected_gain,
                avg_price_per_item_won: metrics.avg_price_per_item_won,
                ratio_items_won: won.iter().sum::<usize>() as f64 / (plays * m) as f64,
                ratio_items_allocated: allocated,
            });
        }
    }
    Ok(out)
}

/// The two-strategy game, when the config defines one and every profile has plays.
pub fn game_summary(config: &ExperimentConfig, records: &[PlayRecord], n: usize) -> Result<Option<GameSummary>> {
    let Some(spec) = &config.game else { return Ok(None) };
    let mut utilities = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let label: Vec<String> = (0..n).map(|i| if i < k { spec.a.clone() } else { spec.b.clone() }).collect();
        let label = label.join("-");
        let mut per_instance: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for r in records.iter().filter(|r| r.profile == label) {
            per_instance.entry(r.instance).or_insert_with(|| vec![0.0; n])[r.seat] = r.utility;
        }
        if per_instance.is_empty() {
            return Ok(None);
        }
        utilities.push(per_instance.into_values().collect::<Vec<_>>());
    }
    let game = build_empirical_game(&spec.a, &spec.b, &utilities)?;
    let deviation_gains = (0..n).map(|k| game.deviation_gain(k)).collect();
    Ok(Some(GameSummary { game, deviation_gains }))
}

pub fn build_report(config: &ExperimentConfig, records: &[PlayRecord], n: usize, m: usize) -> Result<Report> {
    let profiles = config.expanded_profiles(n);
    Ok(Report {
        name: config.name.clone(),
        metrics: metrics_rows(records, &profiles, m)?,
        game: game_summary(config, records, n)?,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{v:.3}"))
}

pub fn render_markdown(report: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {}\n", report.name);
    let _ = writeln!(
        s,
        "| profile | strategy | seats | plays | E[u] | P(u<0) | exposure | price/item | items won | allocated |"
    );
    let _ = writeln!(s, "|---|---|---|---|---|---|---|---|---|---|");
    for r in &report.metrics {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {:.3} | {:.3} | {:.3} | {} | {:.3} | {:.3} |",
            r.profile,
            r.strategy,
            r.seats,
            r.plays,
            r.expected_utility,
            r.exposure_frequency,
            r.expected_exposure,
            opt(r.avg_price_per_item_won),
            r.ratio_items_won,
            r.ratio_items_allocated
        );
    }
    if let Some(g) = &report.game {
        let _ = writeln!(s, "\n## {} vs {}\n", g.game.strategy_a, g.game.strategy_b);
        let _ = writeln!(s, "| A-players | u(A) | u(B) | gain of one more A |");
        let _ = writeln!(s, "|---|---|---|---|");
        for c in &g.game.cells {
            let gain = g.deviation_gains.get(c.k).copied().flatten();
            let _ = writeln!(s, "| {} | {} | {} | {} |", c.k, opt(c.utility_a), opt(c.utility_b), opt(gain));
        }
    }
    s
}

/// CSV text of the metrics table; `None` prices are written as empty fields.
pub fn metrics_csv(rows: &[MetricsRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| crate::error::ExperimentError::Config(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| crate::error::ExperimentError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}
