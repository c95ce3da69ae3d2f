//! Bidding agents: point-price prediction, straightforward bidding, the
//! tâtonnement baseline, and the name registry used by configs and services.

mod epe;
mod pp;
mod registry;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::auction::{AuctionState, BidderProfile};
use crate::items::BidAction;

pub use epe::{demand_at, epe_prediction, EpeParams};
pub use pp::{pp_bid, pp_playout, prefer, rho, rho_into, sb_bid, BundleProblem, Candidate};
pub use registry::{
    PredictionSource, PreparedInstance, StrategyFactory, StrategyParams, StrategyRegistry,
};

/// Predicted closing price per item, in money units.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PricePrediction(pub Vec<f64>);

impl PricePrediction {
    pub fn zeros(m: usize) -> Self {
        PricePrediction(vec![0.0; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest coordinate-wise absolute difference.
    pub fn sup_distance(&self, other: &PricePrediction) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// What a strategy sees when asked for a bid.
pub struct BidContext<'a> {
    pub state: &'a AuctionState,
    pub bidder: usize,
    pub profiles: &'a [BidderProfile],
}

impl BidContext<'_> {
    pub fn profile(&self) -> &BidderProfile {
        &self.profiles[self.bidder]
    }
}

/// A bidding policy. Implementations must only return bids that pass
/// [`crate::auction::check_bid`].
pub trait Strategy: Send + Sync {
    fn bid(&self, ctx: &BidContext<'_>, rng: &mut dyn RngCore) -> BidAction;
}

/// Never bids.
#[derive(Debug, Clone, Copy, Default)]
pub struct PassStrategy;

impl Strategy for PassStrategy {
    fn bid(&self, _ctx: &BidContext<'_>, _rng: &mut dyn RngCore) -> BidAction {
        BidAction::EMPTY
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StraightforwardBidder;

impl Strategy for StraightforwardBidder {
    fn bid(&self, ctx: &BidContext<'_>, _rng: &mut dyn RngCore) -> BidAction {
        sb_bid(ctx.state, ctx.bidder, ctx.profile())
    }
}

/// PP with a fixed initial prediction (EPE is this with a tâtonnement prediction).
#[derive(Debug, Clone)]
pub struct PointPriceBidder {
    pub prediction: PricePrediction,
}

impl Strategy for PointPriceBidder {
    fn bid(&self, ctx: &BidContext<'_>, _rng: &mut dyn RngCore) -> BidAction {
        pp_bid(&self.prediction.0, ctx.state, ctx.bidder, ctx.profile())
    }
}

/// The optimal opponent of the demand-reduction test: raise the cheapest
/// affordable item while winning nothing, otherwise pass.
#[derive(Debug, Clone, Copy, Default)]
pub struct CheapestItemBidder;

impl Strategy for CheapestItemBidder {
    fn bid(&self, ctx: &BidContext<'_>, _rng: &mut dyn RngCore) -> BidAction {
        let state = ctx.state;
        if !state.won_by(ctx.bidder).is_empty() || state.eligibility[ctx.bidder] == 0 {
            return BidAction::EMPTY;
        }
        let eps = state.config.epsilon;
        (0..state.config.m_items)
            .filter(|&j| state.price_money(j) + eps <= ctx.profile().budget + crate::auction::MONEY_TOLERANCE)
            .min_by_key(|&j| (state.prices[j], j))
            .map_or(BidAction::EMPTY, BidAction::single)
    }
}
