//! Constrained point-price prediction bidding.

use std::cmp::Ordering;

use crate::auction::{AuctionState, BidderProfile, TickPrice, MONEY_TOLERANCE};
use crate::items::{BidAction, ItemSet, MAX_ITEMS};
use crate::valuations::ValueFunction;

use super::PricePrediction;

/// Predicted closing prices given the current state: held items keep
/// `max(p_init, P)`, every other item `max(p_init, P + ε)`.
pub fn rho(p_init: &[f64], prices: &[TickPrice], won: ItemSet, epsilon: f64) -> PricePrediction {
    let mut out = vec![0.0; prices.len()];
    rho_into(p_init, prices, won, epsilon, &mut out);
    PricePrediction(out)
}

#[inline]
pub fn rho_into(p_init: &[f64], prices: &[TickPrice], won: ItemSet, epsilon: f64, out: &mut [f64]) {
    for (j, slot) in out.iter_mut().enumerate() {
        let p = prices[j].money(epsilon);
        let floor = if won.contains(j) { p } else { p + epsilon };
        *slot = p_init[j].max(floor);
    }
}

/// A bundle the bidder could add, with its predicted (risk-averse) utility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub bid: BidAction,
    pub score: f64,
}

/// Definition-1 preference: higher score, then fewer items, then the
/// lexicographically smaller sorted index list. `Less` means `a` is preferred.
pub fn prefer(a: &Candidate, b: &Candidate) -> Ordering {
    if (a.score - b.score).abs() > MONEY_TOLERANCE {
        return b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal);
    }
    a.bid.len().cmp(&b.bid.len()).then_with(|| a.bid.cmp_lex(b.bid))
}

/// The bidder-side inputs of the PP optimizer.
#[derive(Debug, Clone, Copy)]
pub struct BundleProblem<'a> {
    pub values: &'a ValueFunction,
    pub budget: f64,
    pub eligibility: u32,
    pub held: ItemSet,
    pub m: usize,
    pub rho: &'a [f64],
}

impl BundleProblem<'_> {
    /// Calls `visit(X, σ(X ∪ Y, ρ))` for every non-empty `X` disjoint from
    /// `Y` with `|X| + |Y| ≤ e` and `Σ_{X∪Y} ρ ≤ b`.
    #[inline]
    pub fn for_each_feasible(&self, mut visit: impl FnMut(ItemSet, f64)) {
        let held_cost: f64 = self.held.iter().map(|j| self.rho[j]).sum();
        let room = (self.eligibility as usize).saturating_sub(self.held.len());
        if room == 0 {
            return;
        }
        let free = ItemSet::full(self.m).difference(self.held);
        // Subset costs, each built from the subset without its lowest bit.
        // Oversized subsets are never read back: their supersets are oversized too.
        let mut small = [0.0f64; 64];
        let mut large = Vec::new();
        let cost: &mut [f64] = if self.m <= 6 {
            &mut small[..1 << self.m]
        } else {
            large.resize(1 << self.m, 0.0);
            &mut large
        };
        for x in free.subsets().skip(1) {
            if x.len() > room {
                continue;
            }
            let bits = x.bits() as usize;
            let low = bits.trailing_zeros() as usize;
            let c = cost[bits & (bits - 1)] + self.rho[low];
            cost[bits] = c;
            let total = held_cost + c;
            if total > self.budget + MONEY_TOLERANCE {
                continue;
            }
            visit(x, self.values.value(x.union(self.held)) - total);
        }
    }

    /// Score of passing: σ(Y, ρ).
    pub fn pass_score(&self) -> f64 {
        let held_cost: f64 = self.held.iter().map(|j| self.rho[j]).sum();
        self.values.value(self.held) - held_cost
    }

    /// The preferred bundle under [`prefer`], with the pass always available.
    pub fn best(&self) -> Candidate {
        let mut best = Candidate { bid: ItemSet::EMPTY, score: self.pass_score() };
        self.for_each_feasible(|bid, score| {
            let c = Candidate { bid, score };
            if prefer(&c, &best) == Ordering::Less {
                best = c;
            }
        });
        best
    }

    /// All feasible non-empty bundles, best first, scored with `σ^α`.
    pub fn ranked(&self, alpha: f64) -> Vec<Candidate> {
        let mut all = Vec::new();
        self.for_each_feasible(|bid, score| {
            all.push(Candidate { bid, score: crate::auction::risk_averse_utility(score, alpha) })
        });
        all.sort_by(prefer);
        all
    }
}

/// Point-price bid of `bidder` with initial prediction `p_init`.
pub fn pp_bid(p_init: &[f64], state: &AuctionState, bidder: usize, profile: &BidderProfile) -> BidAction {
    debug_assert!(state.config.m_items <= MAX_ITEMS);
    let m = state.config.m_items;
    let held = state.won_by(bidder);
    let mut rho_buf = [0.0f64; MAX_ITEMS];
    rho_into(p_init, &state.prices, held, state.config.epsilon, &mut rho_buf[..m]);
    BundleProblem {
        values: &profile.values,
        budget: profile.budget,
        eligibility: state.eligibility[bidder],
        held,
        m,
        rho: &rho_buf[..m],
    }
    .best()
    .bid
}

/// Straightforward bidding: PP with a zero prediction.
pub fn sb_bid(state: &AuctionState, bidder: usize, profile: &BidderProfile) -> BidAction {
    const ZEROS: [f64; MAX_ITEMS] = [0.0; MAX_ITEMS];
    pp_bid(&ZEROS[..state.config.m_items], state, bidder, profile)
}

/// Plays `state` to the end with bidder `i` running PP on `predictions[i]`.
///
/// Specialised loop for rollouts and closing-price estimation: no trait
/// objects, one reused bid buffer, ties drawn from `rng`.
pub fn pp_playout<R: rand::Rng + ?Sized>(
    state: &mut AuctionState,
    profiles: &[BidderProfile],
    predictions: &[&[f64]],
    rng: &mut R,
) {
    let n = state.config.n_bidders;
    debug_assert_eq!(predictions.len(), n);
    let bound = crate::auction::round_bound(&state.config, profiles) + state.round as u64;
    let mut bids = [ItemSet::EMPTY; 64];
    let bids = &mut bids[..n];
    while !state.terminal {
        assert!((state.round as u64) < bound, "PP playout exceeded its round bound");
        for i in 0..n {
            bids[i] = pp_bid(predictions[i], state, i, &profiles[i]);
        }
        crate::auction::resolve_round_random(state, bids, rng);
    }
}
