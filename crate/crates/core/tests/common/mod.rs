//! Independent oracles shared by the property and acceptance tests.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet, VecDeque};

use rand::Rng;
use saa_core::auction::{resolve_round_unchecked, Allocation, AuctionConfig, AuctionState, BidderProfile, Owner, TickPrice};
use saa_core::items::ItemSet;
use saa_core::mcts::node_key;
use saa_core::valuations::{generate_value_function, GeneratorParams, ValueFunction};

const TOL: f64 = 1e-9;

/// Direct reading of the legality rule: bid only on items not already
/// temporarily won, stay within eligibility, and afford one increment on
/// every new item plus the current price of every held item.
pub fn oracle_legal(state: &AuctionState, bidder: usize, budget: f64, bid: ItemSet) -> bool {
    let m = state.config.m_items;
    let eps = state.config.epsilon;
    let held: Vec<usize> = (0..m).filter(|&j| state.allocation.winner_of[j] == Owner::Bidder(bidder)).collect();
    let new: Vec<usize> = (0..m).filter(|&j| bid.contains(j)).collect();
    if bid.bits() >> m != 0 || new.iter().any(|j| held.contains(j)) {
        return false;
    }
    if new.len() + held.len() > state.eligibility[bidder] as usize {
        return false;
    }
    let price = |j: usize| state.prices[j].0 as f64 * eps;
    let raise: f64 = new.iter().map(|&j| price(j) + eps).sum();
    let committed: f64 = held.iter().map(|&j| price(j)).sum();
    raise <= budget - committed + TOL
}

/// Exhaustive point-price choice: enumerate every subset of unheld items,
/// keep those within eligibility and the ρ budget, and pick by score, then
/// size, then lexicographic item list.
pub fn brute_force_pp(state: &AuctionState, bidder: usize, profile: &BidderProfile, p_init: &[f64]) -> ItemSet {
    let m = state.config.m_items;
    let eps = state.config.epsilon;
    let held: Vec<usize> = (0..m).filter(|&j| state.allocation.winner_of[j] == Owner::Bidder(bidder)).collect();
    let rho: Vec<f64> = (0..m)
        .map(|j| {
            let p = state.prices[j].0 as f64 * eps;
            if held.contains(&j) { p_init[j].max(p) } else { p_init[j].max(p + eps) }
        })
        .collect();
    let held_mask: u32 = held.iter().map(|j| 1u32 << j).sum();
    let mut best: Option<(f64, Vec<usize>, u32)> = None;
    for mask in 0u32..(1 << m) {
        if mask & held_mask != 0 {
            continue;
        }
        let items: Vec<usize> = (0..m).filter(|j| mask >> j & 1 == 1).collect();
        if !items.is_empty() && items.len() + held.len() > state.eligibility[bidder] as usize {
            continue;
        }
        let cost: f64 = items.iter().chain(held.iter()).map(|&j| rho[j]).sum();
        if !items.is_empty() && cost > profile.budget + TOL {
            continue;
        }
        let score = profile.values.table()[(mask | held_mask) as usize] - cost;
        let better = match &best {
            None => true,
            Some((s, its, _)) => {
                if (score - s).abs() > TOL {
                    score > *s
                } else if items.len() != its.len() {
                    items.len() < its.len()
                } else {
                    items < *its
                }
            }
        };
        if better {
            best = Some((score, items, mask));
        }
    }
    ItemSet(best.expect("the pass is always a candidate").2)
}

/// A random mid-auction state for an instance with `m ≤ 4`.
pub fn random_state<R: Rng>(rng: &mut R, n: usize, m: usize, epsilon: f64) -> (AuctionState, Vec<BidderProfile>) {
    let config = AuctionConfig { n_bidders: n, m_items: m, epsilon, rng_seed: 0 };
    let params = GeneratorParams::default();
    let profiles: Vec<BidderProfile> = (0..n)
        .map(|_| BidderProfile { budget: rng.random_range(0.0..30.0), values: generate_value_function(m, &params, rng) })
        .collect();
    let mut state = AuctionState::new(config);
    state.round = rng.random_range(0..20);
    for j in 0..m {
        if rng.random_bool(0.6) {
            state.allocation.winner_of[j] = Owner::Bidder(rng.random_range(0..n));
            state.prices[j] = TickPrice(rng.random_range(1..12));
        }
    }
    let mut profiles = profiles;
    for i in 0..n {
        let held = state.won_by(i).len() as u32;
        state.eligibility[i] = rng.random_range(held..=m as u32);
        // Reachable states never commit more than the budget.
        let committed = state.committed(i);
        if profiles[i].budget < committed {
            profiles[i].budget = committed + rng.random_range(0.0..5.0);
        }
    }
    (state, profiles)
}

pub fn generous_profiles(n: usize, m: usize) -> Vec<BidderProfile> {
    (0..n).map(|_| BidderProfile { budget: 1e6, values: ValueFunction::zero(m) }).collect()
}

type Triple = (Vec<TickPrice>, Allocation, Vec<u32>);

fn triple(s: &AuctionState) -> Triple {
    (s.prices.clone(), s.allocation.clone(), s.eligibility.clone())
}

/// Every non-terminal state reachable from `root` within `depth` rounds,
/// over all bid combinations and tie outcomes, with its distance from the root.
pub fn reachable_states(root: &AuctionState, depth: u32) -> Vec<(AuctionState, u32)> {
    let n = root.config.n_bidders;
    let m = root.config.m_items;
    let mut seen: HashSet<Triple> = HashSet::new();
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    seen.insert(triple(root));
    queue.push_back((root.clone(), 0u32));
    while let Some((state, d)) = queue.pop_front() {
        out.push((state.clone(), d));
        if d == depth {
            continue;
        }
        let per_bidder: Vec<Vec<ItemSet>> = (0..n)
            .map(|i| {
                let held = state.won_by(i);
                (0u32..1 << m)
                    .map(ItemSet)
                    .filter(|x| x.is_disjoint(held) && (x.len() + held.len()) as u32 <= state.eligibility[i])
                    .collect()
            })
            .collect();
        let mut joint = vec![0usize; n];
        loop {
            let bids: Vec<ItemSet> = (0..n).map(|i| per_bidder[i][joint[i]]).collect();
            if bids.iter().any(|b| !b.is_empty()) {
                for next in tie_outcomes(&state, &bids) {
                    if seen.insert(triple(&next)) {
                        queue.push_back((next, d + 1));
                    }
                }
            }
            let mut k = 0;
            while k < n {
                joint[k] += 1;
                if joint[k] < per_bidder[k].len() {
                    break;
                }
                joint[k] = 0;
                k += 1;
            }
            if k == n {
                break;
            }
        }
    }
    out
}

fn tie_outcomes(state: &AuctionState, bids: &[ItemSet]) -> Vec<AuctionState> {
    let m = state.config.m_items;
    let bidders_on: Vec<Vec<usize>> =
        (0..m).map(|j| (0..bids.len()).filter(|&i| bids[i].contains(j)).collect()).collect();
    let mut choice = vec![0usize; m];
    let mut out = Vec::new();
    loop {
        let mut next = state.clone();
        resolve_round_unchecked(&mut next, bids, |j, cands| {
            debug_assert_eq!(cands, &bidders_on[j][..]);
            choice[j]
        });
        out.push(next);
        let mut j = 0;
        while j < m {
            choice[j] += 1;
            if choice[j] < bidders_on[j].len().max(1) {
                break;
            }
            choice[j] = 0;
            j += 1;
        }
        if j == m {
            return out;
        }
    }
}

/// Collision scan result: states that must have keys but failed, and keys
/// shared by distinct states.
pub struct CollisionScan {
    pub states: usize,
    pub hashed: usize,
    pub missing_keys: usize,
    pub collisions: usize,
}

pub fn collision_scan(n: usize, m: usize, r_max: u32) -> CollisionScan {
    let config = AuctionConfig { n_bidders: n, m_items: m, epsilon: 1.0, rng_seed: 0 };
    let root = AuctionState::new(config);
    let states = reachable_states(&root, r_max);
    let mut keys = HashMap::new();
    let mut missing_keys = 0;
    let mut collisions = 0;
    let mut hashed = 0;
    for (state, d) in &states {
        let t = triple(state);
        match node_key(&root.prices, state, r_max) {
            Ok(key) => {
                hashed += 1;
                if let Some(prev) = keys.insert(key, t.clone()) {
                    if prev != t {
                        collisions += 1;
                    }
                }
            }
            Err(_) if *d >= r_max => {}
            Err(_) => missing_keys += 1,
        }
    }
    CollisionScan { states: states.len(), hashed, missing_keys, collisions }
}

/// Expected closing prices of the two-item exposure example under all-PP(p),
/// derived by hand for `p ∈ [0, 11.5]²`.
pub fn example1_expected(p: (f64, f64)) -> (f64, f64) {
    let (p1, p2) = p;
    if p1 + p2 >= 20.0 {
        if p1 <= p2 { (1.0, 0.0) } else { (0.0, 1.0) }
    } else if p1 <= p2 {
        (11.5, 11.0)
    } else {
        (11.0, 11.5)
    }
}

/// Convex region bounding the averaged iteration at step `t`.
pub fn diamond(t: f64) -> [(f64, f64); 4] {
    [
        (10.0 - 10.0 / t, 10.0 - 9.0 / t),
        (10.0 - 9.0 / t, 10.0 - 10.0 / t),
        (10.0 + 7.0 / (4.0 * t), 10.0 + 3.0 / (4.0 * t)),
        (10.0 + 3.0 / (4.0 * t), 10.0 + 7.0 / (4.0 * t)),
    ]
}

/// Euclidean distance from `p` to the convex hull of `poly` (0 inside).
pub fn distance_to_convex(p: (f64, f64), poly: &[(f64, f64)]) -> f64 {
    let hull = convex_hull(poly);
    let k = hull.len();
    let cross = |a: (f64, f64), b: (f64, f64), c: (f64, f64)| (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
    if (0..k).all(|i| cross(hull[i], hull[(i + 1) % k], p) >= -1e-12) {
        return 0.0;
    }
    (0..k)
        .map(|i| segment_distance(p, hull[i], hull[(i + 1) % k]))
        .fold(f64::INFINITY, f64::min)
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

/// Counter-clockwise hull (monotone chain).
fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Checks that every allocated item's winner is a bidder and that the
/// allocation has one owner per item.
pub fn allocation_is_well_formed(a: &Allocation, n: usize, m: usize) -> bool {
    a.winner_of.len() == m && a.winner_of.iter().all(|o| matches!(o, Owner::Auctioneer) || matches!(o, Owner::Bidder(i) if *i < n))
}

pub fn distinct<T: std::hash::Hash + Eq>(items: impl IntoIterator<Item = T>) -> usize {
    items.into_iter().collect::<HashSet<_>>().len()
}
