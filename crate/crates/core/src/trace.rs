//! Line-oriented auction traces: one JSON object per resolved round.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::auction::{apply_round_observed, AuctionState, BidderProfile, Owner, TickPrice};
use crate::error::{Error, Result};
use crate::items::{BidAction, ItemSet};

/// State after a round plus the bids that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// Index of the resolved round, starting at 1.
    pub round: u32,
    pub prices: Vec<TickPrice>,
    pub winners: Vec<Owner>,
    pub eligibility: Vec<u32>,
    pub bids: Vec<Vec<usize>>,
    #[serde(default)]
    pub terminal: bool,
}

impl RoundRecord {
    pub fn new(after: &AuctionState, bids: &[BidAction]) -> Self {
        RoundRecord {
            round: after.round,
            prices: after.prices.clone(),
            winners: after.allocation.winner_of.clone(),
            eligibility: after.eligibility.clone(),
            bids: bids.iter().map(|b| b.to_vec()).collect(),
            terminal: after.terminal,
        }
    }

    pub fn bid_sets(&self) -> Vec<BidAction> {
        self.bids.iter().map(|b| ItemSet::from_items(b.iter().copied())).collect()
    }

    /// Winners to feed [`apply_round_observed`]: the recorded owner of every
    /// item that received a bid this round.
    pub fn observed_winners(&self) -> Vec<Option<usize>> {
        let bids = self.bid_sets();
        (0..self.winners.len())
            .map(|j| if bids.iter().any(|b| b.contains(j)) { self.winners[j].into() } else { None })
            .collect()
    }
}

pub fn write_trace<W: Write>(mut out: W, records: &[RoundRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<RoundRecord>> {
    let mut out = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::OutOfDomain(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::OutOfDomain(format!("trace line {}: {e}", k + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

/// Re-applies a trace from `start`, checking every recorded post-state.
pub fn replay(start: &AuctionState, profiles: &[BidderProfile], records: &[RoundRecord]) -> Result<AuctionState> {
    let mut state = start.clone();
    for rec in records {
        let next = apply_round_observed(&state, profiles, &rec.bid_sets(), &rec.observed_winners())?;
        if RoundRecord::new(&next, &rec.bid_sets()) != *rec {
            return Err(Error::OutOfDomain(format!("trace diverges at round {}", rec.round)));
        }
        state = next;
    }
    Ok(state)
}
