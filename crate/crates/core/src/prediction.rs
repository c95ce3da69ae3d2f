//! Closing-price prediction by the averaged fixed-point iteration
//! `p_{t+1} = E[f(p_t)] / (t+1) + (1 − 1/(t+1)) p_t`, where `f(p)` is the
//! closing-price vector when every bidder plays PP with prediction `p`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::auction::{AuctionConfig, AuctionState, BidderProfile};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_for};
use crate::strategies::{pp_playout, PricePrediction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictorParams {
    /// Auctions simulated per iteration.
    pub mc_samples: u32,
    pub max_iters: u32,
    /// Stop once the sup-norm step falls below this.
    pub tolerance: f64,
    pub rng_seed: u64,
}

impl PredictorParams {
    /// K = 2,000, T = 300, tolerance ε/10.
    pub fn for_config(config: &AuctionConfig) -> Self {
        PredictorParams { mc_samples: 2_000, max_iters: 300, tolerance: config.epsilon / 10.0, rng_seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mc_samples == 0 || self.max_iters == 0 || !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!("predictor parameters must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    /// `p_0, p_1, …`; `p_0` is the zero vector.
    pub points: Vec<PricePrediction>,
    /// `deltas[t] = ‖p_{t+1} − p_t‖_∞`.
    pub deltas: Vec<f64>,
    /// Whether the tolerance was reached before `max_iters`.
    pub converged: bool,
}

impl ConvergenceTrace {
    pub fn last(&self) -> &PricePrediction {
        self.points.last().expect("trace always holds p_0")
    }
}

fn sample_closing_ticks(instance_state: &AuctionState, profiles: &[BidderProfile], p: &[f64], seed: u64) -> Vec<u64> {
    let n = instance_state.config.n_bidders;
    let mut rng = rng_for(seed, &[]);
    let mut state = instance_state.clone();
    let preds: Vec<&[f64]> = vec![p; n];
    pp_playout(&mut state, profiles, &preds, &mut rng);
    state.prices.iter().map(|t| t.0 as u64).collect()
}

/// Mean closing prices over `samples` all-PP(`p`) auctions.
///
/// Each sample draws from its own stream split off one seed taken from
/// `rng`; closing prices are summed as integer ticks, so the result does not
/// depend on the order samples complete in.
pub fn estimate_expected_closing<R: Rng + ?Sized>(
    config: &AuctionConfig,
    profiles: &[BidderProfile],
    p: &PricePrediction,
    samples: u32,
    rng: &mut R,
) -> PricePrediction {
    assert!(samples >= 1, "at least one sample required");
    let base = rng.random::<u64>();
    estimate_with_seed(config, profiles, p, samples, base)
}

fn estimate_with_seed(
    config: &AuctionConfig,
    profiles: &[BidderProfile],
    p: &PricePrediction,
    samples: u32,
    base: u64,
) -> PricePrediction {
    let m = config.m_items;
    let start = AuctionState::new(*config);
    let totals = (0..samples as u64)
        .into_par_iter()
        .map(|s| sample_closing_ticks(&start, profiles, &p.0, derive_seed(base, &[s])))
        .reduce(
            || vec![0u64; m],
            |mut acc, x| {
                acc.iter_mut().zip(x).for_each(|(a, b)| *a += b);
                acc
            },
        );
    PricePrediction(
        totals
            .into_iter()
            .map(|t| t as f64 * config.epsilon / samples as f64)
            .collect(),
    )
}

/// Runs the averaged iteration from `p_0 = 0`.
pub fn iterate_prediction(
    config: &AuctionConfig,
    profiles: &[BidderProfile],
    params: &PredictorParams,
) -> Result<(PricePrediction, ConvergenceTrace)> {
    iterate_prediction_with_progress(config, profiles, params, |_, _| {})
}

/// As [`iterate_prediction`], calling `progress(t, p_t)` after each step.
pub fn iterate_prediction_with_progress(
    config: &AuctionConfig,
    profiles: &[BidderProfile],
    params: &PredictorParams,
    mut progress: impl FnMut(u32, &PricePrediction),
) -> Result<(PricePrediction, ConvergenceTrace)> {
    params.validate()?;
    config.validate()?;
    let mut p = PricePrediction::zeros(config.m_items);
    let mut trace = ConvergenceTrace { points: vec![p.clone()], deltas: Vec::new(), converged: false };
    for t in 0..params.max_iters {
        let estimate = estimate_with_seed(config, profiles, &p, params.mc_samples, derive_seed(params.rng_seed, &[t as u64]));
        let w = 1.0 / (t as f64 + 1.0);
        let next = PricePrediction(p.0.iter().zip(&estimate.0).map(|(old, e)| w * e + (1.0 - w) * old).collect());
        let delta = next.sup_distance(&p);
        p = next;
        trace.points.push(p.clone());
        trace.deltas.push(delta);
        progress(t + 1, &p);
        if delta < params.tolerance {
            trace.converged = true;
            break;
        }
    }
    Ok((p, trace))
}

/// Closed form of `E[f(p)]` for the two-item exposure example, valid on `[0, 11.5]²`.
pub fn closed_form_example1(p: &PricePrediction) -> Result<PricePrediction> {
    let in_domain = p.len() == 2 && p.0.iter().all(|x| (0.0..=11.5).contains(x));
    if !in_domain {
        return Err(Error::OutOfDomain(format!("closed form holds on [0, 11.5]^2, got {:?}", p.0)));
    }
    let (p1, p2) = (p.0[0], p.0[1]);
    let v = match (p1 + p2 >= 20.0, p1 <= p2) {
        (true, true) => [1.0, 0.0],
        (true, false) => [0.0, 1.0],
        (false, true) => [11.5, 11.0],
        (false, false) => [11.0, 11.5],
    };
    Ok(PricePrediction(v.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuations::{example1_instance, ValueFunction, EXAMPLE1_UNLIMITED};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pp(v: [f64; 2]) -> PricePrediction {
        PricePrediction(v.to_vec())
    }

    #[test]
    fn closed_form_cases() {
        assert_eq!(closed_form_example1(&pp([0.0, 0.0])).unwrap(), pp([11.5, 11.0]));
        assert_eq!(closed_form_example1(&pp([11.0, 10.0])).unwrap(), pp([0.0, 1.0]));
        assert_eq!(closed_form_example1(&pp([5.0, 5.0])).unwrap(), pp([11.5, 11.0]));
        assert!(closed_form_example1(&pp([12.0, 0.0])).is_err());
        assert!(closed_form_example1(&pp([-0.1, 0.0])).is_err());
    }

    #[test]
    fn high_prediction_gives_exact_one_zero() {
        let inst = example1_instance(EXAMPLE1_UNLIMITED, EXAMPLE1_UNLIMITED);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = estimate_expected_closing(&inst.config, &inst.profiles, &pp([10.5, 10.5]), 500, &mut rng);
        assert_eq!(e, pp([1.0, 0.0]));
    }

    #[test]
    fn lone_interested_bidder_pays_one_increment() {
        // Bidder 1 has no value for anything; bidder 0 wants item 0 only.
        let inst = crate::valuations::Instance {
            config: AuctionConfig { n_bidders: 2, m_items: 2, epsilon: 1.0, rng_seed: 0 },
            profiles: vec![
                BidderProfile { budget: 10.0, values: ValueFunction::from_table(2, vec![0.0, 5.0, 0.0, 5.0]).unwrap() },
                BidderProfile { budget: 10.0, values: ValueFunction::zero(2) },
            ],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for p in [[0.0, 0.0], [3.0, 1.0]] {
            let e = estimate_expected_closing(&inst.config, &inst.profiles, &pp(p), 50, &mut rng);
            assert_eq!(e, pp([1.0, 0.0]));
        }
    }

    #[test]
    fn zero_values_converge_to_zero() {
        let cfg = AuctionConfig { n_bidders: 3, m_items: 2, epsilon: 1.0, rng_seed: 0 };
        let profiles = vec![BidderProfile { budget: 20.0, values: ValueFunction::zero(2) }; 3];
        let params = PredictorParams { mc_samples: 10, max_iters: 20, tolerance: 0.1, rng_seed: 0 };
        let (p, trace) = iterate_prediction(&cfg, &profiles, &params).unwrap();
        assert_eq!(p, PricePrediction::zeros(2));
        assert!(trace.converged);
        assert_eq!(trace.points.len(), 2);
    }

    #[test]
    fn predictor_is_deterministic_and_bounded() {
        let inst = example1_instance(14.0, 18.0);
        let params = PredictorParams { mc_samples: 200, max_iters: 30, tolerance: 1e-6, rng_seed: 7 };
        let (a, ta) = iterate_prediction(&inst.config, &inst.profiles, &params).unwrap();
        let (b, tb) = iterate_prediction(&inst.config, &inst.profiles, &params).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        assert!(ta.points.len() <= params.max_iters as usize + 1);
        let cap = inst.max_budget();
        assert!(ta.points.iter().flat_map(|p| p.0.iter()).all(|x| (0.0..=cap).contains(x)));
    }
}
