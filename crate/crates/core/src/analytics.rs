//! Outcome statistics: exposure, empirical games over strategy profiles, and
//! game-size counts.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Summary of one strategy's plays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub sample_count: usize,
    pub expected_utility: f64,
    /// Share of plays ending with negative utility.
    pub exposure_frequency: f64,
    /// `−Σ_{u<0} u / N`.
    pub expected_exposure: f64,
    /// `Σ_{u≥0} u / N`, so that `expected_utility = expected_gain − expected_exposure`.
    pub expected_gain: f64,
    /// Total spend over total items won; absent when nothing was won.
    pub avg_price_per_item_won: Option<f64>,
    /// Items won over `N · m`.
    pub ratio_items_won: f64,
}

/// Aggregates per-play utilities, item counts and spend. The three slices
/// are parallel, one entry per play.
pub fn compute_metrics(rewards: &[f64], items_won: &[usize], spend: &[f64], m: usize) -> Result<MetricsReport> {
    if rewards.is_empty() {
        return Err(Error::InvalidConfig("metrics need at least one play".into()));
    }
    if items_won.len() != rewards.len() || spend.len() != rewards.len() {
        return Err(Error::InvalidConfig(format!(
            "metrics need one item count and spend per play: {} rewards, {} counts, {} spends",
            rewards.len(),
            items_won.len(),
            spend.len()
        )));
    }
    let n = rewards.len() as f64;
    let loss_sum: f64 = rewards.iter().copied().filter(|u| *u < 0.0).sum();
    let gain_sum: f64 = rewards.iter().copied().filter(|u| *u >= 0.0).sum();
    let won: usize = items_won.iter().sum();
    Ok(MetricsReport {
        sample_count: rewards.len(),
        expected_utility: rewards.iter().sum::<f64>() / n,
        exposure_frequency: rewards.iter().filter(|u| **u < 0.0).count() as f64 / n,
        expected_exposure: -loss_sum / n,
        expected_gain: gain_sum / n,
        avg_price_per_item_won: (won > 0).then(|| spend.iter().sum::<f64>() / won as f64),
        ratio_items_won: if m == 0 { 0.0 } else { won as f64 / (n * m as f64) },
    })
}

/// Metrics from utilities alone (no item or spend data).
pub fn utility_metrics(rewards: &[f64]) -> Result<MetricsReport> {
    compute_metrics(rewards, &vec![0; rewards.len()], &vec![0.0; rewards.len()], 0)
}

/// Mean of per-bidder mean utilities.
pub fn profile_average(per_bidder_means: &[f64]) -> f64 {
    per_bidder_means.iter().sum::<f64>() / per_bidder_means.len() as f64
}

/// Two-strategy symmetric empirical game: `cells[k]` holds the mean utility of
/// an A-player and of a B-player when `k` of the `n` bidders play A.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalGame {
    pub strategy_a: String,
    pub strategy_b: String,
    pub n_bidders: usize,
    pub cells: Vec<ProfileCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCell {
    /// Number of A-players.
    pub k: usize,
    /// `None` when `k = 0`.
    pub utility_a: Option<f64>,
    /// `None` when `k = n`.
    pub utility_b: Option<f64>,
    pub samples: usize,
}

/// Builds the game from per-bidder utilities: `utilities[k][s][i]` is bidder
/// `i`'s utility in sample `s` of the profile where bidders `0..k` play A.
pub fn build_empirical_game(
    strategy_a: &str,
    strategy_b: &str,
    utilities: &[Vec<Vec<f64>>],
) -> Result<EmpiricalGame> {
    if utilities.len() < 2 {
        return Err(Error::InvalidConfig("need profiles k = 0..n with n >= 1".into()));
    }
    let n = utilities.len() - 1;
    let mut cells = Vec::with_capacity(n + 1);
    for (k, samples) in utilities.iter().enumerate() {
        let mut sum_a = 0.0;
        let mut sum_b = 0.0;
        for s in samples {
            if s.len() != n {
                return Err(Error::InvalidConfig(format!("profile {k}: expected {n} utilities, got {}", s.len())));
            }
            sum_a += s[..k].iter().sum::<f64>();
            sum_b += s[k..].iter().sum::<f64>();
        }
        let count = samples.len() as f64;
        cells.push(ProfileCell {
            k,
            utility_a: (k > 0 && !samples.is_empty()).then(|| sum_a / (k as f64 * count)),
            utility_b: (k < n && !samples.is_empty()).then(|| sum_b / ((n - k) as f64 * count)),
            samples: samples.len(),
        });
    }
    Ok(EmpiricalGame { strategy_a: strategy_a.into(), strategy_b: strategy_b.into(), n_bidders: n, cells })
}

impl EmpiricalGame {
    /// Gain of one B-player switching to A when `k` others already play A:
    /// `u_A(k+1) − u_B(k)`.
    pub fn deviation_gain(&self, k: usize) -> Option<f64> {
        let after = self.cells.get(k + 1)?.utility_a?;
        let before = self.cells.get(k)?.utility_b?;
        Some(after - before)
    }

    /// Whether every B→A switch is weakly profitable within `tol`.
    pub fn deviation_weakly_profitable(&self, tol: f64) -> bool {
        (0..self.n_bidders).all(|k| self.deviation_gain(k).is_some_and(|g| g >= -tol))
    }
}

/// Number of information sets of the full game: `n (R n + 1)^m`.
pub fn info_set_count(n: u64, m: u32, r: u64) -> BigUint {
    BigUint::from(n) * BigUint::from(r * n + 1).pow(m)
}

/// `log10` of the lower bound `2^{m (n−1) R}` on game-tree leaves.
pub fn game_tree_lower_bound_log10(n: u64, m: u64, r: u64) -> f64 {
    (m * n.saturating_sub(1) * r) as f64 * std::f64::consts::LOG10_2
}

/// Rough `log10` of a big integer, from its bit length and leading bits.
pub fn log10_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 52 {
        return (x.to_u64_digits().first().copied().unwrap_or(0) as f64).log10();
    }
    let shift = bits - 52;
    let lead = (x >> shift).to_u64_digits()[0] as f64;
    lead.log10() + shift as f64 * std::f64::consts::LOG10_2
}
