//! The SAA-c state machine: legality, round resolution, payoffs and playouts.
//!
//! Prices are integer ticks of the bid increment, so every reachable price is
//! exact. Budgets and values are real money; conversions go through
//! [`TickPrice::money`].

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::items::{BidAction, ItemSet, MAX_ITEMS};
use crate::strategies::{BidContext, Strategy};
use crate::trace::RoundRecord;
use crate::valuations::ValueFunction;

/// Slack for money comparisons that mix tick products with real budgets.
pub const MONEY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuctionConfig {
    pub n_bidders: usize,
    pub m_items: usize,
    /// Bid increment in money units.
    pub epsilon: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

impl AuctionConfig {
    pub fn new(n_bidders: usize, m_items: usize, epsilon: f64) -> Result<Self> {
        let c = AuctionConfig { n_bidders, m_items, epsilon, rng_seed: 0 };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bidders < 2 {
            return Err(Error::InvalidConfig("an auction needs at least 2 bidders".into()));
        }
        if self.m_items == 0 {
            return Err(Error::InvalidConfig("an auction needs at least 1 item".into()));
        }
        if self.m_items > MAX_ITEMS {
            return Err(Error::TooManyItems { m: self.m_items, max: MAX_ITEMS });
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig("bid increment must be positive".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn money(&self, price: TickPrice) -> f64 {
        price.money(self.epsilon)
    }
}

/// An item price as a whole number of bid increments.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TickPrice(pub u32);

impl TickPrice {
    #[inline]
    pub fn money(self, epsilon: f64) -> f64 {
        self.0 as f64 * epsilon
    }
}

/// Temporary (or final) owner of an item. Serialized as `null` for the
/// auctioneer and the bidder index otherwise.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Option<usize>", into = "Option<usize>")]
pub enum Owner {
    #[default]
    Auctioneer,
    Bidder(usize),
}

impl From<Option<usize>> for Owner {
    fn from(o: Option<usize>) -> Self {
        o.map_or(Owner::Auctioneer, Owner::Bidder)
    }
}

impl From<Owner> for Option<usize> {
    fn from(o: Owner) -> Self {
        match o {
            Owner::Auctioneer => None,
            Owner::Bidder(i) => Some(i),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation {
    pub winner_of: Vec<Owner>,
}

impl Allocation {
    pub fn unsold(m: usize) -> Self {
        Allocation { winner_of: vec![Owner::Auctioneer; m] }
    }

    pub fn won_by(&self, bidder: usize) -> ItemSet {
        self.winner_of
            .iter()
            .enumerate()
            .filter(|(_, o)| **o == Owner::Bidder(bidder))
            .map(|(j, _)| j)
            .collect()
    }

    pub fn allocated_count(&self) -> usize {
        self.winner_of.iter().filter(|o| **o != Owner::Auctioneer).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidderProfile {
    pub budget: f64,
    pub values: ValueFunction,
}

impl BidderProfile {
    pub fn validate(&self, bidder: usize, m: usize) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidProfile { bidder, reason });
        if !(self.budget >= 0.0) || self.budget.is_nan() {
            return bad(format!("budget {} must be non-negative", self.budget));
        }
        if self.values.m_items() != m {
            return bad(format!("value table covers {} items, auction has {m}", self.values.m_items()));
        }
        if let Some((x, y)) = self.values.free_disposal_violation() {
            return bad(format!(
                "free disposal violated: v({x}) = {} > v({y}) = {}",
                self.values.value(x),
                self.values.value(y)
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionState {
    pub config: AuctionConfig,
    pub round: u32,
    pub prices: Vec<TickPrice>,
    pub allocation: Allocation,
    pub eligibility: Vec<u32>,
    pub terminal: bool,
}

impl AuctionState {
    /// Round-0 state: all prices 0, nothing allocated, eligibility `m` for everyone.
    pub fn new(config: AuctionConfig) -> Self {
        AuctionState {
            config,
            round: 0,
            prices: vec![TickPrice(0); config.m_items],
            allocation: Allocation::unsold(config.m_items),
            eligibility: vec![config.m_items as u32; config.n_bidders],
            terminal: false,
        }
    }

    pub fn won_by(&self, bidder: usize) -> ItemSet {
        self.allocation.won_by(bidder)
    }

    #[inline]
    pub fn price_money(&self, item: usize) -> f64 {
        self.prices[item].money(self.config.epsilon)
    }

    pub fn prices_money(&self) -> Vec<f64> {
        self.prices.iter().map(|p| p.money(self.config.epsilon)).collect()
    }

    /// Money committed by `bidder` on the items it temporarily wins.
    pub fn committed(&self, bidder: usize) -> f64 {
        self.won_by(bidder).iter().map(|j| self.price_money(j)).sum()
    }

    fn check_bidder(&self, bidder: usize) -> Result<()> {
        if bidder >= self.config.n_bidders {
            return Err(Error::BidderOutOfRange(bidder));
        }
        Ok(())
    }
}

/// Checks one bid against the budget, eligibility and no-self-raise rules.
pub fn check_bid(state: &AuctionState, bidder: usize, profile: &BidderProfile, bid: BidAction) -> Result<(), Violation> {
    let m = state.config.m_items;
    if !bid.is_subset(ItemSet::full(m)) {
        return Err(Violation::UnknownItem);
    }
    let held = state.won_by(bidder);
    if !bid.is_disjoint(held) {
        return Err(Violation::AlreadyWinning);
    }
    if (bid.len() + held.len()) as u32 > state.eligibility[bidder] {
        return Err(Violation::Eligibility);
    }
    let eps = state.config.epsilon;
    let raise: f64 = bid.iter().map(|j| state.price_money(j) + eps).sum();
    let committed: f64 = held.iter().map(|j| state.price_money(j)).sum();
    if raise > profile.budget - committed + MONEY_TOLERANCE {
        return Err(Violation::Budget);
    }
    Ok(())
}

pub fn is_legal(state: &AuctionState, bidder: usize, profile: &BidderProfile, bid: BidAction) -> bool {
    check_bid(state, bidder, profile, bid).is_ok()
}

/// Every bid the bidder may submit this round. Always contains the pass.
pub fn legal_bids(state: &AuctionState, bidder: usize, profile: &BidderProfile) -> Result<Vec<BidAction>> {
    if state.terminal {
        return Err(Error::Terminal);
    }
    state.check_bidder(bidder)?;
    let free = ItemSet::full(state.config.m_items).difference(state.won_by(bidder));
    Ok(free
        .subsets()
        .filter(|x| check_bid(state, bidder, profile, *x).is_ok())
        .collect())
}

fn validate_joint(state: &AuctionState, profiles: &[BidderProfile], joint_bids: &[BidAction]) -> Result<()> {
    if state.terminal {
        return Err(Error::Terminal);
    }
    let n = state.config.n_bidders;
    if joint_bids.len() != n || profiles.len() != n {
        return Err(Error::InvalidConfig(format!(
            "expected {n} bids and profiles, got {} and {}",
            joint_bids.len(),
            profiles.len()
        )));
    }
    for (i, bid) in joint_bids.iter().enumerate() {
        check_bid(state, i, &profiles[i], *bid).map_err(|violation| Error::IllegalBid { bidder: i, violation })?;
    }
    Ok(())
}

/// Resolves one round in place without legality checks. `pick` chooses the
/// temporary winner among the bidders on an item; it is only called for
/// items with two or more bids, with the candidates in ascending order.
pub fn resolve_round_unchecked(state: &mut AuctionState, joint_bids: &[BidAction], mut pick: impl FnMut(usize, &[usize]) -> usize) {
    let m = state.config.m_items;
    let any_bid = joint_bids.iter().any(|b| !b.is_empty());
    state.round += 1;
    if !any_bid {
        state.terminal = true;
        return;
    }
    for (i, bid) in joint_bids.iter().enumerate() {
        let held = state.allocation.won_by(i).len() as u32;
        state.eligibility[i] = held + bid.len() as u32;
    }
    let mut bidders: Vec<usize> = Vec::with_capacity(joint_bids.len());
    for j in 0..m {
        bidders.clear();
        bidders.extend(joint_bids.iter().enumerate().filter(|(_, b)| b.contains(j)).map(|(i, _)| i));
        let winner = match bidders.len() {
            0 => continue,
            1 => bidders[0],
            _ => pick(j, &bidders),
        };
        state.prices[j].0 += 1;
        state.allocation.winner_of[j] = Owner::Bidder(winner);
    }
}

/// Draws a uniform temporary winner for every tied item.
pub fn resolve_round_random<R: Rng + ?Sized>(state: &mut AuctionState, joint_bids: &[BidAction], rng: &mut R) {
    resolve_round_unchecked(state, joint_bids, |_, cands| cands[rng.random_range(0..cands.len())]);
}

/// One simultaneous bidding round with uniform tie-breaking.
pub fn apply_round<R: Rng + ?Sized>(
    state: &AuctionState,
    profiles: &[BidderProfile],
    joint_bids: &[BidAction],
    rng: &mut R,
) -> Result<AuctionState> {
    validate_joint(state, profiles, joint_bids)?;
    let mut next = state.clone();
    resolve_round_random(&mut next, joint_bids, rng);
    Ok(next)
}

/// One round whose ties were already resolved outside the engine.
///
/// `winners[j]` must name a bidder that bid on item `j` whenever two or more
/// bidders did; entries for other items must be `None` or agree with the
/// unique bidder.
pub fn apply_round_observed(
    state: &AuctionState,
    profiles: &[BidderProfile],
    joint_bids: &[BidAction],
    winners: &[Option<usize>],
) -> Result<AuctionState> {
    validate_joint(state, profiles, joint_bids)?;
    let m = state.config.m_items;
    if winners.len() != m {
        return Err(Error::InvalidConfig(format!("expected {m} winner entries, got {}", winners.len())));
    }
    for (j, w) in winners.iter().enumerate() {
        let bidders: Vec<usize> = (0..joint_bids.len()).filter(|&i| joint_bids[i].contains(j)).collect();
        match (*w, bidders.len()) {
            (Some(w), 0) => {
                return Err(Error::InvalidWinner { item: j, reason: format!("bidder {w} claimed an item nobody bid on") })
            }
            (Some(w), _) if !bidders.contains(&w) => {
                return Err(Error::InvalidWinner { item: j, reason: format!("bidder {w} did not bid on it") })
            }
            (None, k) if k >= 2 => {
                return Err(Error::InvalidWinner { item: j, reason: "tied item needs an observed winner".into() })
            }
            _ => {}
        }
    }
    let mut next = state.clone();
    resolve_round_unchecked(&mut next, joint_bids, |j, _| winners[j].expect("validated above"));
    Ok(next)
}

/// Profit of winning `won` at the given closing prices.
pub fn utility(values: &ValueFunction, won: ItemSet, closing_prices: &[TickPrice], epsilon: f64) -> f64 {
    values.value(won) - won.iter().map(|j| closing_prices[j].money(epsilon)).sum::<f64>()
}

/// Losses scaled by `1 + alpha`; gains unchanged.
#[inline]
pub fn risk_averse_utility(u: f64, alpha: f64) -> f64 {
    if u < 0.0 {
        (1.0 + alpha) * u
    } else {
        u
    }
}

/// Final payoff of every bidder in a (terminal) state.
pub fn payoffs(state: &AuctionState, profiles: &[BidderProfile]) -> Vec<f64> {
    profiles
        .iter()
        .enumerate()
        .map(|(i, p)| utility(&p.values, state.won_by(i), &state.prices, state.config.epsilon))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub closing_prices: Vec<TickPrice>,
    pub final_allocation: Allocation,
    pub utilities: Vec<f64>,
    pub rounds_played: u32,
}

impl Outcome {
    pub fn from_state(state: &AuctionState, profiles: &[BidderProfile]) -> Self {
        Outcome {
            closing_prices: state.prices.clone(),
            final_allocation: state.allocation.clone(),
            utilities: payoffs(state, profiles),
            rounds_played: state.round,
        }
    }

    pub fn won_by(&self, bidder: usize) -> ItemSet {
        self.final_allocation.won_by(bidder)
    }

    pub fn spend(&self, bidder: usize, epsilon: f64) -> f64 {
        self.won_by(bidder).iter().map(|j| self.closing_prices[j].money(epsilon)).sum()
    }
}

/// Upper bound on rounds: every non-final round adds at least one tick of
/// committed spend, and no bidder can commit more than `⌊b_i/ε⌋` ticks.
pub fn round_bound(config: &AuctionConfig, profiles: &[BidderProfile]) -> u64 {
    const CAP: u64 = 10_000_000;
    profiles
        .iter()
        .map(|p| {
            let t = (p.budget / config.epsilon + MONEY_TOLERANCE).floor();
            if t.is_finite() { (t as u64).min(CAP) } else { CAP }
        })
        .fold(1u64, |acc, t| acc.saturating_add(t))
}

/// Runs an auction to completion from `state`, reporting every round to `on_round`.
pub fn play_from(
    mut state: AuctionState,
    profiles: &[BidderProfile],
    strategies: &[&dyn Strategy],
    rng: &mut dyn RngCore,
    mut on_round: impl FnMut(&AuctionState, &[BidAction], &AuctionState),
) -> Result<AuctionState> {
    let config = state.config;
    if strategies.len() != config.n_bidders || profiles.len() != config.n_bidders {
        return Err(Error::InvalidConfig(format!(
            "{} strategies and {} profiles for {} bidders",
            strategies.len(),
            profiles.len(),
            config.n_bidders
        )));
    }
    let bound = round_bound(&config, profiles) + state.round as u64;
    let mut bids = vec![ItemSet::EMPTY; config.n_bidders];
    while !state.terminal {
        if state.round as u64 >= bound {
            return Err(Error::RoundBoundExceeded(bound));
        }
        for (i, s) in strategies.iter().enumerate() {
            let ctx = BidContext { state: &state, bidder: i, profiles };
            bids[i] = s.bid(&ctx, rng);
            check_bid(&state, i, &profiles[i], bids[i]).map_err(|violation| Error::IllegalBid { bidder: i, violation })?;
        }
        let before = state.clone();
        resolve_round_random(&mut state, &bids, rng);
        on_round(&before, &bids, &state);
    }
    Ok(state)
}

/// Plays a full auction from round 0.
pub fn play_out(
    config: &AuctionConfig,
    profiles: &[BidderProfile],
    strategies: &[&dyn Strategy],
    rng: &mut dyn RngCore,
) -> Result<Outcome> {
    config.validate()?;
    let end = play_from(AuctionState::new(*config), profiles, strategies, rng, |_, _, _| {})?;
    Ok(Outcome::from_state(&end, profiles))
}

/// Like [`play_out`], also returning one trace record per round.
pub fn play_out_traced(
    config: &AuctionConfig,
    profiles: &[BidderProfile],
    strategies: &[&dyn Strategy],
    rng: &mut dyn RngCore,
) -> Result<(Outcome, Vec<RoundRecord>)> {
    config.validate()?;
    let mut trace = Vec::new();
    let end = play_from(AuctionState::new(*config), profiles, strategies, rng, |_, bids, after| {
        trace.push(RoundRecord::new(after, bids));
    })?;
    Ok((Outcome::from_state(&end, profiles), trace))
}
