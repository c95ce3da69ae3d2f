//! Simultaneous-move MCTS bidder with risk-averse rewards.

mod hash;
mod search;
mod stats;

pub use hash::{hash_eligibility, hash_prices_allocation, node_key, NodeKey};
pub use search::{
    expand_actions, sms_alpha_bid, sms_alpha_search, PlayerActions, RootAction, SearchParams, SearchReport,
    SearchTree, SmsBidder, TreeNode,
};
pub use stats::{best_mean, select_action, selection_index, ActionStats};
