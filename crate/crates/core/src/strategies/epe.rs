//! Expected-price-equilibrium prediction by tâtonnement.
//!
//! The adjustment ignores the bid increment entirely; prices move by
//! `kappa * (demand - 1)` regardless of the auction rules.

use serde::{Deserialize, Serialize};

use crate::auction::{AuctionConfig, BidderProfile};
use crate::items::{ItemSet, MAX_ITEMS};

use super::{BundleProblem, PricePrediction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpeParams {
    pub kappa: f64,
    pub iters: u32,
}

impl EpeParams {
    /// `kappa = ε / 2`, 200 steps.
    pub fn for_config(config: &AuctionConfig) -> Self {
        EpeParams { kappa: config.epsilon / 2.0, iters: 200 }
    }
}

/// Bundle a bidder demands at posted prices `p`, before the auction starts
/// (nothing held, full eligibility).
pub fn demand_at(profile: &BidderProfile, p: &[f64]) -> ItemSet {
    let m = p.len();
    BundleProblem {
        values: &profile.values,
        budget: profile.budget,
        eligibility: m as u32,
        held: ItemSet::EMPTY,
        m,
        rho: p,
    }
    .best()
    .bid
}

/// Shared tâtonnement prediction: from `p = 0`, repeat
/// `p_j ← max(0, p_j + kappa (d_j(p) − 1))` where `d_j` counts bidders demanding `j`.
pub fn epe_prediction(profiles: &[BidderProfile], config: &AuctionConfig, params: EpeParams) -> PricePrediction {
    assert!(params.kappa > 0.0 && params.iters >= 1, "kappa > 0 and iters >= 1 required");
    let m = config.m_items;
    debug_assert!(m <= MAX_ITEMS);
    let mut p = vec![0.0; m];
    let mut demand = vec![0u32; m];
    for _ in 0..params.iters {
        demand.iter_mut().for_each(|d| *d = 0);
        for profile in profiles {
            for j in demand_at(profile, &p).iter() {
                demand[j] += 1;
            }
        }
        for j in 0..m {
            p[j] = (p[j] + params.kappa * (demand[j] as f64 - 1.0)).max(0.0);
        }
    }
    PricePrediction(p)
}
