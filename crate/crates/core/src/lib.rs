//! Simultaneous ascending auction with ascending prices and eligibility,
//! point-price bidders, closing-price prediction, and a risk-averse
//! simultaneous-move MCTS bidder.

pub mod analytics;
pub mod auction;
pub mod error;
pub mod items;
pub mod mcts;
pub mod prediction;
pub mod seed;
pub mod strategies;
pub mod trace;
pub mod valuations;

pub use auction::{
    apply_round, apply_round_observed, check_bid, is_legal, legal_bids, payoffs, play_from, play_out, play_out_traced,
    risk_averse_utility, utility, Allocation, AuctionConfig, AuctionState, BidderProfile, Outcome, Owner, TickPrice,
};
pub use error::{Error, Result, Violation};
pub use items::{BidAction, ItemSet};
pub use mcts::{sms_alpha_bid, sms_alpha_search, SearchParams, SearchReport, SmsBidder};
pub use prediction::{iterate_prediction, ConvergenceTrace, PredictorParams};
pub use strategies::{PricePrediction, Strategy, StrategyParams, StrategyRegistry};
pub use trace::RoundRecord;
pub use valuations::{Instance, ValueFunction};
