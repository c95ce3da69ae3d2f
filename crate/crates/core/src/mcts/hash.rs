//! Perfect node keys for states within `r_max` rounds of the search root.

use serde::{Deserialize, Serialize};

use crate::auction::{AuctionState, Owner, TickPrice};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeKey {
    /// Prices and temporary winners, relative to the root prices.
    pub h1: u128,
    /// Eligibility vector.
    pub h2: u128,
}

/// Mixed-radix encoding of (price offset, winner) per item with base
/// `r_max * n`. Item `j` owned by bidder `i` at `d` ticks above the root
/// contributes `(r_max * i + d) * step^j`; unsold items contribute nothing.
pub fn hash_prices_allocation(
    root_prices: &[TickPrice],
    prices: &[TickPrice],
    allocation: &[Owner],
    n_bidders: usize,
    r_max: u32,
) -> Result<u128> {
    let overflow = || Error::OutOfDomain("price/allocation key exceeds 128 bits".into());
    let step = (r_max as u128) * (n_bidders as u128);
    let mut h: u128 = 0;
    let mut weight: u128 = 1;
    let m = prices.len();
    for j in 0..m {
        if let Owner::Bidder(i) = allocation[j] {
            let delta = prices[j].0.checked_sub(root_prices[j].0).ok_or_else(|| {
                Error::OutOfDomain(format!("item {j} price below the root price"))
            })?;
            if delta >= r_max {
                return Err(Error::HashOverflow { item: j, delta_ticks: delta as u64, r_max });
            }
            let digit = r_max as u128 * i as u128 + delta as u128;
            h = digit.checked_mul(weight).and_then(|d| h.checked_add(d)).ok_or_else(overflow)?;
        }
        if j + 1 < m {
            weight = weight.checked_mul(step).ok_or_else(overflow)?;
        }
    }
    Ok(h)
}

/// `Σ_i e_i (m+1)^i`.
pub fn hash_eligibility(eligibility: &[u32], m: usize) -> Result<u128> {
    let base = m as u128 + 1;
    let mut h: u128 = 0;
    let mut weight: u128 = 1;
    for (i, &e) in eligibility.iter().enumerate() {
        if e as usize > m {
            return Err(Error::OutOfDomain(format!("eligibility {e} of bidder {i} exceeds m = {m}")));
        }
        h = (e as u128)
            .checked_mul(weight)
            .and_then(|d| h.checked_add(d))
            .ok_or_else(|| Error::OutOfDomain("eligibility key exceeds 128 bits".into()))?;
        if i + 1 < eligibility.len() {
            weight = weight.saturating_mul(base);
        }
    }
    Ok(h)
}

pub fn node_key(root_prices: &[TickPrice], state: &AuctionState, r_max: u32) -> Result<NodeKey> {
    Ok(NodeKey {
        h1: hash_prices_allocation(root_prices, &state.prices, &state.allocation.winner_of, state.config.n_bidders, r_max)?,
        h2: hash_eligibility(&state.eligibility, state.config.m_items)?,
    })
}
