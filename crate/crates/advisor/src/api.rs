//! Request and response bodies. Bids and bundles are item-index lists.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use saa_core::prediction::PredictorParams;
use saa_core::{AuctionConfig, BidderProfile, RoundRecord, SearchParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSettings {
    pub alpha: f64,
    pub n_act: usize,
    pub r_max: u32,
    pub iterations: Option<u64>,
    pub time_ms: Option<u64>,
    pub seed: u64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        let d = SearchParams::default();
        SearchSettings { alpha: d.alpha, n_act: d.n_act, r_max: d.r_max, iterations: d.iterations, time_ms: None, seed: d.seed }
    }
}

impl SearchSettings {
    pub fn params(&self) -> SearchParams {
        SearchParams {
            alpha: self.alpha,
            n_act: self.n_act,
            r_max: self.r_max,
            iterations: self.iterations,
            time_budget: self.time_ms.map(Duration::from_millis),
            seed: self.seed,
        }
    }
}

/// Overrides of the closing-price predictor; missing fields keep their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorSettings {
    pub mc_samples: Option<u32>,
    pub max_iters: Option<u32>,
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
}

impl PredictorSettings {
    pub fn params(&self, config: &AuctionConfig) -> PredictorParams {
        let d = PredictorParams::for_config(config);
        PredictorParams {
            mc_samples: self.mc_samples.unwrap_or(d.mc_samples),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            tolerance: self.tolerance.unwrap_or(d.tolerance),
            rng_seed: self.seed.unwrap_or(d.rng_seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub config: AuctionConfig,
    /// Point estimates for every bidder, the advised one included.
    pub profiles: Vec<BidderProfile>,
    pub advised: usize,
    #[serde(default)]
    pub search: SearchSettings,
    #[serde(default)]
    pub predictor: PredictorSettings,
    /// Rounds to replay before the session starts.
    #[serde(default)]
    pub history: Vec<RoundRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemView {
    pub price: f64,
    pub ticks: u32,
    pub winner: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionStatus {
    Computing,
    Ready,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionView {
    pub status: PredictionStatus,
    /// Completed predictor iterations out of at most `total`.
    pub done: u32,
    pub total: u32,
    pub p_star: Option<Vec<f64>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub n_bidders: usize,
    pub m_items: usize,
    pub epsilon: f64,
    pub advised: usize,
    /// Rounds resolved so far.
    pub round: u32,
    pub terminal: bool,
    pub items: Vec<ItemView>,
    pub eligibility: Vec<u32>,
    /// Money committed to currently held items, per bidder.
    pub committed: Vec<f64>,
    pub budgets: Vec<f64>,
    /// Final utilities once the auction has closed.
    pub utilities: Option<Vec<f64>>,
    pub prediction: PredictionView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundInput {
    /// Index of the round being recorded: one more than the rounds already resolved.
    pub round: u32,
    pub bids: Vec<Vec<usize>>,
    /// Observed temporary winner per item; required for tied items.
    #[serde(default)]
    pub winners: Option<Vec<Option<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRow {
    pub bid: Vec<usize>,
    /// Mean risk-averse reward; absent for unvisited actions.
    pub mean: Option<f64>,
    pub visits: u64,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    /// Rounds resolved when the search ran.
    pub round: u32,
    pub bid: Vec<usize>,
    pub iterations: u64,
    pub elapsed_ms: f64,
    pub tree_nodes: usize,
    /// Root actions by descending mean; unvisited actions last.
    pub actions: Vec<ActionRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Idle,
    Running,
    Ready,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationStatus {
    pub status: JobStatus,
    pub round: Option<u32>,
    /// A round was recorded or profiles changed after the search started.
    pub stale: bool,
    pub recommendation: Option<Recommendation>,
    pub error: Option<crate::ApiError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    pub bid: Vec<usize>,
    /// Rounds to simulate, the forced one included; unlimited when absent.
    #[serde(default)]
    pub horizon: Option<u32>,
    #[serde(default = "default_samples")]
    pub samples: u32,
    #[serde(default)]
    pub seed: u64,
}

fn default_samples() -> u32 {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfReport {
    pub bid: Vec<usize>,
    pub samples: u32,
    pub mean_utility: f64,
    pub min_utility: f64,
    pub max_utility: f64,
    /// Mean with losses weighted by the session's alpha, comparable to the
    /// recommendation table.
    pub mean_risk_adjusted: f64,
    pub exposure_frequency: f64,
    pub closing_price_means: Vec<f64>,
    /// Share of samples in which the auction closed within the horizon.
    pub closed_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfilesUpdate {
    pub profiles: Vec<BidderProfile>,
}
