use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::auction::{
    payoffs, resolve_round_random, risk_averse_utility, AuctionState, BidderProfile, TickPrice,
};
use crate::error::{Error, Result};
use crate::items::{BidAction, ItemSet, MAX_ITEMS};
use crate::strategies::{pp_playout, rho_into, BidContext, BundleProblem, PricePrediction, Strategy};

use super::hash::{node_key, NodeKey};
use super::stats::{best_mean, select_action, ActionStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchParams {
    /// Loss weight applied to every player's rewards.
    pub alpha: f64,
    /// Actions per player and node, the pass included.
    pub n_act: usize,
    /// Tree depth limit in rounds; rollouts start below it.
    pub r_max: u32,
    /// Stop after this many iterations.
    pub iterations: Option<u64>,
    /// Stop once this much wall time has passed.
    pub time_budget: Option<Duration>,
    pub seed: u64,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams { alpha: 7.0, n_act: 20, r_max: 10, iterations: Some(10_000), time_budget: None, seed: 0 }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidConfig(format!("alpha must be finite and non-negative, got {}", self.alpha)));
        }
        if self.n_act == 0 {
            return Err(Error::InvalidConfig("n_act must be at least 1".into()));
        }
        if self.r_max == 0 {
            return Err(Error::InvalidConfig("r_max must be at least 1".into()));
        }
        if self.iterations.is_none() && self.time_budget.is_none() {
            return Err(Error::InvalidConfig("search needs an iteration or time budget".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerActions {
    pub actions: Vec<BidAction>,
    pub stats: Vec<ActionStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub key: NodeKey,
    pub state: AuctionState,
    /// Rounds from the root along the path that created the node.
    pub depth: u32,
    pub players: Vec<PlayerActions>,
    /// Child node per (joint action code, tie-break outcome), the outcome
    /// being identified by the child's key.
    pub children: HashMap<(u64, NodeKey), usize>,
}

/// One row of the root action table of the searching player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootAction {
    pub bid: BidAction,
    pub mean: Option<f64>,
    pub visits: u64,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub chosen: BidAction,
    pub iterations: u64,
    pub elapsed_ms: f64,
    pub tree_nodes: usize,
    pub root_actions: Vec<RootAction>,
}

/// Candidate actions of `bidder` at `state`: the pass, then the best
/// `n_act − 1` bundles by predicted risk-averse utility.
pub fn expand_actions(
    state: &AuctionState,
    bidder: usize,
    profile: &BidderProfile,
    p_star: &[f64],
    alpha: f64,
    n_act: usize,
) -> Vec<BidAction> {
    let m = state.config.m_items;
    let held = state.won_by(bidder);
    let mut rho = [0.0f64; MAX_ITEMS];
    rho_into(p_star, &state.prices, held, state.config.epsilon, &mut rho[..m]);
    let problem = BundleProblem {
        values: &profile.values,
        budget: profile.budget,
        eligibility: state.eligibility[bidder],
        held,
        m,
        rho: &rho[..m],
    };
    let mut actions = Vec::with_capacity(n_act);
    actions.push(ItemSet::EMPTY);
    if n_act > 1 {
        actions.extend(problem.ranked(alpha).into_iter().take(n_act - 1).map(|c| c.bid));
    }
    actions
}

/// Decoupled-UCT search tree with a transposition table.
pub struct SearchTree<'a> {
    profiles: &'a [BidderProfile],
    p_star: &'a [f64],
    params: SearchParams,
    player: usize,
    root_prices: Vec<TickPrice>,
    nodes: Vec<TreeNode>,
    table: HashMap<NodeKey, usize>,
    alphas: Vec<f64>,
    rng: ChaCha8Rng,
    iterations: u64,
    // Scratch buffers reused across iterations.
    noisy: Vec<f64>,
    path: Vec<(usize, Vec<u32>)>,
}

impl<'a> SearchTree<'a> {
    pub fn new(
        root: &AuctionState,
        player: usize,
        profiles: &'a [BidderProfile],
        p_star: &'a [f64],
        params: SearchParams,
    ) -> Result<Self> {
        params.validate()?;
        root.config.validate()?;
        let n = root.config.n_bidders;
        let m = root.config.m_items;
        if root.terminal {
            return Err(Error::Terminal);
        }
        if player >= n {
            return Err(Error::BidderOutOfRange(player));
        }
        if profiles.len() != n || p_star.len() != m {
            return Err(Error::InvalidConfig(format!(
                "search needs {n} profiles and {m} predicted prices, got {} and {}",
                profiles.len(),
                p_star.len()
            )));
        }
        let mut tree = SearchTree {
            profiles,
            p_star,
            player,
            root_prices: root.prices.clone(),
            nodes: Vec::new(),
            table: HashMap::new(),
            alphas: vec![params.alpha; n],
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            iterations: 0,
            noisy: vec![0.0; n * m],
            path: Vec::new(),
            params,
        };
        let key = node_key(&tree.root_prices, root, tree.params.r_max)?;
        tree.insert(key, root.clone(), 0);
        Ok(tree)
    }

    fn insert(&mut self, key: NodeKey, state: AuctionState, depth: u32) -> usize {
        let players = (0..state.config.n_bidders)
            .map(|i| {
                let actions =
                    expand_actions(&state, i, &self.profiles[i], self.p_star, self.params.alpha, self.params.n_act);
                let stats = vec![ActionStats::default(); actions.len()];
                PlayerActions { actions, stats }
            })
            .collect();
        let idx = self.nodes.len();
        self.nodes.push(TreeNode { key, state, depth, players, children: HashMap::new() });
        self.table.insert(key, idx);
        idx
    }

    /// Plays every bidder's noisy point-price strategy to the end and
    /// returns the risk-averse payoffs.
    fn rollout(&mut self, mut state: AuctionState) -> Vec<f64> {
        let n = state.config.n_bidders;
        let m = state.config.m_items;
        let eps = state.config.epsilon;
        if !state.terminal {
            for i in 0..n {
                for j in 0..m {
                    let eta: f64 = self.rng.random_range(-eps..=eps);
                    self.noisy[i * m + j] = (self.p_star[j] + eta).max(0.0);
                }
            }
            let predictions: Vec<&[f64]> = self.noisy.chunks(m).collect();
            pp_playout(&mut state, self.profiles, &predictions, &mut self.rng);
        }
        self.adjusted_payoffs(&state)
    }

    fn adjusted_payoffs(&self, state: &AuctionState) -> Vec<f64> {
        payoffs(state, self.profiles).into_iter().zip(&self.alphas).map(|(u, a)| risk_averse_utility(u, *a)).collect()
    }

    /// One selection / expansion / rollout / backpropagation pass.
    pub fn iterate(&mut self) {
        let n = self.nodes[0].state.config.n_bidders;
        let eps = self.nodes[0].state.config.epsilon;
        let mut path = std::mem::take(&mut self.path);
        path.clear();
        let mut current = 0usize;
        let mut depth = 0u32;
        let mut bids = vec![ItemSet::EMPTY; n];
        let values = loop {
            let node = &self.nodes[current];
            let mut joint = Vec::with_capacity(n);
            let mut code = 0u64;
            for (i, pa) in node.players.iter().enumerate() {
                let k = select_action(&pa.stats, eps);
                joint.push(k as u32);
                bids[i] = pa.actions[k];
                code = code.wrapping_mul(pa.actions.len() as u64).wrapping_add(k as u64);
            }
            let mut next = node.state.clone();
            resolve_round_random(&mut next, &bids, &mut self.rng);
            path.push((current, joint));
            depth += 1;
            if next.terminal {
                break self.adjusted_payoffs(&next);
            }
            if depth >= self.params.r_max {
                break self.rollout(next);
            }
            // Prices rise by at most one tick per round, so states above
            // the depth limit always have a key.
            let key = node_key(&self.root_prices, &next, self.params.r_max)
                .expect("states within r_max rounds of the root have keys");
            if let Some(&child) = self.nodes[current].children.get(&(code, key)) {
                current = child;
                continue;
            }
            match self.table.get(&key) {
                Some(&child) => {
                    self.nodes[current].children.insert((code, key), child);
                    current = child;
                }
                None => {
                    let child = self.insert(key, next.clone(), depth);
                    self.nodes[current].children.insert((code, key), child);
                    break self.rollout(next);
                }
            }
        };
        for (node, joint) in &path {
            let node = &mut self.nodes[*node];
            for (i, k) in joint.iter().enumerate() {
                node.players[i].stats[*k as usize].update(values[i]);
            }
        }
        self.path = path;
        self.iterations += 1;
    }

    /// Runs until the iteration or time budget is spent.
    pub fn run(&mut self) {
        let start = Instant::now();
        loop {
            if self.params.iterations.is_some_and(|cap| self.iterations >= cap) {
                break;
            }
            if self.params.time_budget.is_some_and(|t| start.elapsed() >= t) {
                break;
            }
            self.iterate();
        }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn root_stats(&self, player: usize) -> &PlayerActions {
        &self.nodes[0].players[player]
    }

    /// The searching player's move: best mean reward at the root, or the
    /// pass when nothing was visited.
    pub fn best_action(&self) -> BidAction {
        let root = self.root_stats(self.player);
        best_mean(&root.stats).map_or(ItemSet::EMPTY, |k| root.actions[k])
    }

    pub fn report(&self, elapsed: Duration) -> SearchReport {
        let root = self.root_stats(self.player);
        SearchReport {
            chosen: self.best_action(),
            iterations: self.iterations,
            elapsed_ms: elapsed.as_secs_f64() * 1e3,
            tree_nodes: self.nodes.len(),
            root_actions: root
                .actions
                .iter()
                .zip(&root.stats)
                .map(|(bid, s)| RootAction {
                    bid: *bid,
                    mean: s.mean(),
                    visits: s.n,
                    min: (s.n > 0).then_some(s.a_alpha),
                    max: (s.n > 0).then_some(s.c_alpha),
                })
                .collect(),
        }
    }
}

/// Searches from `state` on behalf of `player` and reports the chosen bid
/// with the root statistics.
pub fn sms_alpha_search(
    state: &AuctionState,
    player: usize,
    profiles: &[BidderProfile],
    p_star: &[f64],
    params: &SearchParams,
) -> Result<SearchReport> {
    let start = Instant::now();
    let mut tree = SearchTree::new(state, player, profiles, p_star, params.clone())?;
    tree.run();
    Ok(tree.report(start.elapsed()))
}

pub fn sms_alpha_bid(
    state: &AuctionState,
    player: usize,
    profiles: &[BidderProfile],
    p_star: &[f64],
    params: &SearchParams,
) -> Result<BidAction> {
    sms_alpha_search(state, player, profiles, p_star, params).map(|r| r.chosen)
}

/// Search-based bidder. Each decision seeds its search from the caller's rng.
#[derive(Debug, Clone)]
pub struct SmsBidder {
    pub prediction: PricePrediction,
    pub params: SearchParams,
}

impl SmsBidder {
    pub fn new(prediction: PricePrediction, params: SearchParams) -> Result<Self> {
        params.validate()?;
        Ok(SmsBidder { prediction, params })
    }
}

impl Strategy for SmsBidder {
    fn bid(&self, ctx: &BidContext<'_>, rng: &mut dyn RngCore) -> BidAction {
        let seed = crate::seed::derive_seed(self.params.seed, &[rng.next_u64()]);
        // Nothing to decide when passing is the only candidate.
        let only_pass = expand_actions(ctx.state, ctx.bidder, ctx.profile(), self.prediction.as_slice(), 0.0, 2).len() == 1;
        if only_pass {
            return ItemSet::EMPTY;
        }
        let params = SearchParams { seed, ..self.params.clone() };
        sms_alpha_bid(ctx.state, ctx.bidder, ctx.profiles, self.prediction.as_slice(), &params).unwrap_or_else(|e| {
            debug_assert!(false, "search failed on a validated state: {e}");
            ItemSet::EMPTY
        })
    }
}
