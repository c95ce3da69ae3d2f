//! Session store and the long-running jobs behind it.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use rand::Rng;
use serde_json::json;

use saa_core::auction::resolve_round_random;
use saa_core::prediction::{iterate_prediction_with_progress, PredictorParams};
use saa_core::seed::{derive_seed, rng_for};
use saa_core::strategies::pp_bid;
use saa_core::trace::{replay, write_trace};
use saa_core::{
    apply_round_observed, check_bid, is_legal, payoffs, risk_averse_utility, sms_alpha_search, AuctionConfig,
    AuctionState, BidAction, BidderProfile, Error, ItemSet, PricePrediction, RoundRecord, SearchParams,
};

use crate::api::*;
use crate::error::{ApiError, ApiResult, ErrorCode};

const WHAT_IF_STREAM: u64 = 0x57_4946;

enum PredictionState {
    Running { done: u32 },
    Ready(PricePrediction),
    Failed(String),
}

/// One closing-price computation, shared by every session with the same inputs.
pub struct PredictionJob {
    total: u32,
    state: Mutex<PredictionState>,
    changed: Condvar,
}

impl PredictionJob {
    fn spawn(config: AuctionConfig, profiles: Vec<BidderProfile>, params: PredictorParams) -> Arc<Self> {
        let job = Arc::new(PredictionJob {
            total: params.max_iters,
            state: Mutex::new(PredictionState::Running { done: 0 }),
            changed: Condvar::new(),
        });
        let worker = Arc::clone(&job);
        std::thread::spawn(move || {
            let result = iterate_prediction_with_progress(&config, &profiles, &params, |t, _| {
                *worker.state.lock().unwrap() = PredictionState::Running { done: t };
            });
            *worker.state.lock().unwrap() = match result {
                Ok((p, _)) => PredictionState::Ready(p),
                Err(e) => PredictionState::Failed(e.to_string()),
            };
            worker.changed.notify_all();
        });
        job
    }

    fn view(&self) -> PredictionView {
        match &*self.state.lock().unwrap() {
            PredictionState::Running { done } => PredictionView {
                status: PredictionStatus::Computing,
                done: *done,
                total: self.total,
                p_star: None,
                error: None,
            },
            PredictionState::Ready(p) => PredictionView {
                status: PredictionStatus::Ready,
                done: self.total,
                total: self.total,
                p_star: Some(p.0.clone()),
                error: None,
            },
            PredictionState::Failed(e) => PredictionView {
                status: PredictionStatus::Failed,
                done: 0,
                total: self.total,
                p_star: None,
                error: Some(e.clone()),
            },
        }
    }

    /// The prediction, or NOT_READY with progress.
    fn ready(&self) -> ApiResult<PricePrediction> {
        match &*self.state.lock().unwrap() {
            PredictionState::Ready(p) => Ok(p.clone()),
            PredictionState::Running { done } => Err(ApiError::new(ErrorCode::NotReady, "closing-price prediction still computing")
                .with_details(json!({ "done": done, "total": self.total }))),
            PredictionState::Failed(e) => Err(ApiError::new(ErrorCode::Internal, format!("closing-price prediction failed: {e}"))),
        }
    }

    fn wait(&self, timeout: Duration) -> bool {
        let guard = self.state.lock().unwrap();
        let (guard, _) = self
            .changed
            .wait_timeout_while(guard, timeout, |s| matches!(s, PredictionState::Running { .. }))
            .unwrap();
        !matches!(*guard, PredictionState::Running { .. })
    }
}

enum RecommendationState {
    Running,
    Ready(Recommendation),
    Failed(ApiError),
}

struct RecommendationJob {
    history_len: usize,
    prediction: Arc<PredictionJob>,
    state: Mutex<RecommendationState>,
}

struct Session {
    id: String,
    config: AuctionConfig,
    profiles: Vec<BidderProfile>,
    advised: usize,
    search: SearchParams,
    predictor: PredictorParams,
    history: Vec<RoundRecord>,
    state: AuctionState,
    prediction: Arc<PredictionJob>,
    recommendation: Option<Arc<RecommendationJob>>,
}

/// Everything a search or simulation needs, detached from the session lock.
struct Snapshot {
    state: AuctionState,
    profiles: Vec<BidderProfile>,
    advised: usize,
    search: SearchParams,
    history_len: usize,
}

impl Session {
    fn snapshot(&self) -> Snapshot {
        Snapshot {
            state: self.state.clone(),
            profiles: self.profiles.clone(),
            advised: self.advised,
            search: self.search.clone(),
            history_len: self.history.len(),
        }
    }

    fn view(&self) -> SessionView {
        let eps = self.config.epsilon;
        SessionView {
            id: self.id.clone(),
            n_bidders: self.config.n_bidders,
            m_items: self.config.m_items,
            epsilon: eps,
            advised: self.advised,
            round: self.state.round,
            terminal: self.state.terminal,
            items: (0..self.config.m_items)
                .map(|j| ItemView {
                    price: self.state.price_money(j),
                    ticks: self.state.prices[j].0,
                    winner: self.state.allocation.winner_of[j].into(),
                })
                .collect(),
            eligibility: self.state.eligibility.clone(),
            committed: (0..self.config.n_bidders).map(|i| self.state.committed(i)).collect(),
            budgets: self.profiles.iter().map(|p| p.budget).collect(),
            utilities: self.state.terminal.then(|| payoffs(&self.state, &self.profiles)),
            prediction: self.prediction.view(),
        }
    }

    fn recommendation_status(&self) -> RecommendationStatus {
        let Some(job) = &self.recommendation else {
            return RecommendationStatus { status: JobStatus::Idle, round: None, stale: false, recommendation: None, error: None };
        };
        let stale = job.history_len != self.history.len() || !Arc::ptr_eq(&job.prediction, &self.prediction);
        let round = Some(job.history_len as u32);
        match &*job.state.lock().unwrap() {
            RecommendationState::Running => {
                RecommendationStatus { status: JobStatus::Running, round, stale, recommendation: None, error: None }
            }
            RecommendationState::Ready(r) => RecommendationStatus {
                status: JobStatus::Ready,
                round,
                stale,
                recommendation: Some(r.clone()),
                error: None,
            },
            RecommendationState::Failed(e) => {
                RecommendationStatus { status: JobStatus::Failed, round, stale, recommendation: None, error: Some(e.clone()) }
            }
        }
    }
}

fn bundle(items: &[usize], m: usize) -> ApiResult<BidAction> {
    if let Some(j) = items.iter().find(|&&j| j >= m) {
        return Err(ApiError::new(ErrorCode::UnknownItem, format!("item {j} is outside 0..{m}")));
    }
    Ok(ItemSet::from_items(items.iter().copied()))
}

/// Rejects bad configs and profiles; free-disposal violations name the subset pair.
fn validate_profiles(config: &AuctionConfig, profiles: &[BidderProfile]) -> ApiResult<()> {
    config.validate()?;
    if profiles.len() != config.n_bidders {
        return Err(ApiError::new(
            ErrorCode::InvalidConfig,
            format!("{} profiles for {} bidders", profiles.len(), config.n_bidders),
        ));
    }
    for (i, p) in profiles.iter().enumerate() {
        if p.values.m_items() == config.m_items {
            if let Some((x, y)) = p.values.free_disposal_violation() {
                return Err(ApiError::new(
                    ErrorCode::InvalidProfile,
                    format!("bidder {i}: free disposal violated, v({x}) > v({y})"),
                )
                .with_details(json!({
                    "bidder": i,
                    "subset": x.to_vec(),
                    "superset": y.to_vec(),
                    "subset_value": p.values.value(x),
                    "superset_value": p.values.value(y),
                })));
            }
        }
        p.validate(i, config.m_items)?;
    }
    Ok(())
}

fn run_search(snap: &Snapshot, p_star: &PricePrediction) -> ApiResult<Recommendation> {
    if snap.state.terminal {
        return Err(Error::Terminal.into());
    }
    // One seed per decision point, so a recommendation does not depend on what was asked before it.
    let params = SearchParams { seed: derive_seed(snap.search.seed, &[snap.history_len as u64]), ..snap.search.clone() };
    let report = sms_alpha_search(&snap.state, snap.advised, &snap.profiles, p_star.as_slice(), &params)?;
    debug_assert!(is_legal(&snap.state, snap.advised, &snap.profiles[snap.advised], report.chosen));
    let mut actions: Vec<ActionRow> = report
        .root_actions
        .iter()
        .map(|a| ActionRow { bid: a.bid.to_vec(), mean: a.mean, visits: a.visits, min: a.min, max: a.max })
        .collect();
    let key = |a: &ActionRow| a.mean.unwrap_or(f64::NEG_INFINITY);
    actions.sort_by(|a, b| key(b).total_cmp(&key(a)));
    Ok(Recommendation {
        round: snap.state.round,
        bid: report.chosen.to_vec(),
        iterations: report.iterations,
        elapsed_ms: report.elapsed_ms,
        tree_nodes: report.tree_nodes,
        actions,
    })
}

/// Forward simulation after forcing `bid` for the advised bidder this round;
/// everyone else, and everyone afterwards, plays point-price bidding against
/// `p*` plus a per-sample uniform perturbation of at most one increment.
fn simulate(snap: &Snapshot, p_star: &PricePrediction, bid: BidAction, req: &WhatIfRequest) -> WhatIfReport {
    let config = snap.state.config;
    let (n, m, eps) = (config.n_bidders, config.m_items, config.epsilon);
    let base = derive_seed(snap.search.seed, &[WHAT_IF_STREAM, snap.history_len as u64, req.seed]);
    let horizon = req.horizon.unwrap_or(u32::MAX).max(1);
    let mut utilities = Vec::with_capacity(req.samples as usize);
    let mut price_sums = vec![0.0; m];
    let mut closed = 0u32;
    let mut noisy = vec![0.0; n * m];
    let mut bids = vec![ItemSet::EMPTY; n];
    for s in 0..req.samples {
        let mut rng = rng_for(base, &[s as u64]);
        for (k, x) in noisy.iter_mut().enumerate() {
            *x = (p_star.0[k % m] + rng.random_range(-eps..=eps)).max(0.0);
        }
        let mut state = snap.state.clone();
        let mut rounds = 0;
        while !state.terminal && rounds < horizon {
            for (i, b) in bids.iter_mut().enumerate() {
                *b = if rounds == 0 && i == snap.advised {
                    bid
                } else {
                    pp_bid(&noisy[i * m..(i + 1) * m], &state, i, &snap.profiles[i])
                };
            }
            resolve_round_random(&mut state, &bids, &mut rng);
            rounds += 1;
        }
        closed += state.terminal as u32;
        for (j, sum) in price_sums.iter_mut().enumerate() {
            *sum += state.price_money(j);
        }
        utilities.push(payoffs(&state, &snap.profiles)[snap.advised]);
    }
    let k = req.samples.max(1) as f64;
    let alpha = snap.search.alpha;
    WhatIfReport {
        bid: bid.to_vec(),
        samples: req.samples,
        mean_utility: utilities.iter().sum::<f64>() / k,
        min_utility: utilities.iter().copied().fold(f64::INFINITY, f64::min),
        max_utility: utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_risk_adjusted: utilities.iter().map(|&u| risk_averse_utility(u, alpha)).sum::<f64>() / k,
        exposure_frequency: utilities.iter().filter(|&&u| u < 0.0).count() as f64 / k,
        closing_price_means: price_sums.iter().map(|s| s / k).collect(),
        closed_fraction: closed as f64 / k,
    }
}

/// In-memory advisor sessions. Cheap to share behind an `Arc`.
#[derive(Default)]
pub struct AdvisorService {
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
    predictions: Mutex<HashMap<String, Arc<PredictionJob>>>,
}

impl AdvisorService {
    pub fn new() -> Self {
        Self::default()
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        self.sessions.lock().unwrap().get(id).cloned().ok_or_else(|| ApiError::not_found(id))
    }

    /// Starts (or reuses) the prediction for these inputs.
    fn prediction_for(&self, config: &AuctionConfig, profiles: &[BidderProfile], params: &PredictorParams) -> Arc<PredictionJob> {
        let key = serde_json::to_string(&(config, profiles, params)).expect("inputs serialize");
        let mut cache = self.predictions.lock().unwrap();
        let job = cache.entry(key).or_insert_with(|| PredictionJob::spawn(*config, profiles.to_vec(), *params));
        // A failed job is retried on the next request for the same inputs.
        if matches!(*job.state.lock().unwrap(), PredictionState::Failed(_)) {
            *job = PredictionJob::spawn(*config, profiles.to_vec(), *params);
        }
        Arc::clone(job)
    }

    pub fn create_session(&self, req: CreateSession) -> ApiResult<SessionView> {
        validate_profiles(&req.config, &req.profiles)?;
        if req.advised >= req.config.n_bidders {
            return Err(ApiError::new(
                ErrorCode::InvalidConfig,
                format!("advised bidder {} out of range for {} bidders", req.advised, req.config.n_bidders),
            ));
        }
        let search = req.search.params();
        search.validate()?;
        let predictor = req.predictor.params(&req.config);
        predictor.validate()?;
        let state = replay(&AuctionState::new(req.config), &req.profiles, &req.history)?;
        let prediction = self.prediction_for(&req.config, &req.profiles, &predictor);
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed) + 1);
        let session = Session {
            id: id.clone(),
            config: req.config,
            profiles: req.profiles,
            advised: req.advised,
            search,
            predictor,
            history: req.history,
            state,
            prediction,
            recommendation: None,
        };
        let view = session.view();
        self.sessions.lock().unwrap().insert(id, Arc::new(Mutex::new(session)));
        Ok(view)
    }

    pub fn get(&self, id: &str) -> ApiResult<SessionView> {
        Ok(self.session(id)?.lock().unwrap().view())
    }

    /// Applies one observed round. Re-sending the last recorded round is a no-op.
    pub fn record_round(&self, id: &str, input: RoundInput) -> ApiResult<SessionView> {
        let session = self.session(id)?;
        let mut s = session.lock().unwrap();
        let (n, m) = (s.config.n_bidders, s.config.m_items);
        if input.bids.len() != n {
            return Err(ApiError::new(ErrorCode::BadRequest, format!("{} bids for {n} bidders", input.bids.len())));
        }
        let bids = input.bids.iter().map(|b| bundle(b, m)).collect::<ApiResult<Vec<_>>>()?;
        let winners = input.winners.clone().unwrap_or_else(|| vec![None; m]);
        if let Some(last) = s.history.last() {
            if input.round == last.round && last.bid_sets() == bids && winners.len() == m {
                let agrees = winners
                    .iter()
                    .zip(&last.winners)
                    .all(|(w, owner)| w.is_none() || *w == Option::<usize>::from(*owner));
                if agrees {
                    return Ok(s.view());
                }
            }
        }
        if s.state.terminal {
            return Err(Error::Terminal.into());
        }
        let expected = s.state.round + 1;
        if input.round != expected {
            return Err(ApiError::new(ErrorCode::RoundIndex, format!("expected round {expected}, got {}", input.round))
                .with_details(json!({ "expected": expected })));
        }
        let next = apply_round_observed(&s.state, &s.profiles, &bids, &winners)?;
        s.history.push(RoundRecord::new(&next, &bids));
        s.state = next;
        Ok(s.view())
    }

    /// Runs the search on the calling thread.
    pub fn recommend(&self, id: &str) -> ApiResult<Recommendation> {
        let session = self.session(id)?;
        let (snap, prediction) = {
            let s = session.lock().unwrap();
            if s.state.terminal {
                return Err(Error::Terminal.into());
            }
            (s.snapshot(), Arc::clone(&s.prediction))
        };
        run_search(&snap, &prediction.ready()?)
    }

    /// Starts a search on a worker thread unless one for the current state
    /// already exists, and returns its status.
    pub fn start_recommendation(&self, id: &str) -> ApiResult<RecommendationStatus> {
        let session = self.session(id)?;
        let mut s = session.lock().unwrap();
        if s.state.terminal {
            return Err(Error::Terminal.into());
        }
        let p_star = s.prediction.ready()?;
        let current = s.recommendation_status();
        if current.status != JobStatus::Idle && !current.stale && current.status != JobStatus::Failed {
            return Ok(current);
        }
        let snap = s.snapshot();
        let job = Arc::new(RecommendationJob {
            history_len: snap.history_len,
            prediction: Arc::clone(&s.prediction),
            state: Mutex::new(RecommendationState::Running),
        });
        s.recommendation = Some(Arc::clone(&job));
        std::thread::spawn(move || {
            let result = run_search(&snap, &p_star);
            *job.state.lock().unwrap() = match result {
                Ok(r) => RecommendationState::Ready(r),
                Err(e) => RecommendationState::Failed(e),
            };
        });
        Ok(s.recommendation_status())
    }

    pub fn recommendation_status(&self, id: &str) -> ApiResult<RecommendationStatus> {
        Ok(self.session(id)?.lock().unwrap().recommendation_status())
    }

    /// Simulates continuations of a hypothetical own bid. Never changes the session.
    pub fn what_if(&self, id: &str, req: &WhatIfRequest) -> ApiResult<WhatIfReport> {
        let session = self.session(id)?;
        let (snap, prediction) = {
            let s = session.lock().unwrap();
            (s.snapshot(), Arc::clone(&s.prediction))
        };
        if snap.state.terminal {
            return Err(Error::Terminal.into());
        }
        if req.samples == 0 {
            return Err(ApiError::new(ErrorCode::BadRequest, "samples must be positive"));
        }
        let bid = bundle(&req.bid, snap.state.config.m_items)?;
        check_bid(&snap.state, snap.advised, &snap.profiles[snap.advised], bid)
            .map_err(|violation| Error::IllegalBid { bidder: snap.advised, violation })?;
        let p_star = prediction.ready()?;
        Ok(simulate(&snap, &p_star, bid, req))
    }

    /// Replaces the profile estimates. The history must stay legal under
    /// them; the prediction is recomputed for the new inputs.
    pub fn set_profiles(&self, id: &str, profiles: Vec<BidderProfile>) -> ApiResult<SessionView> {
        let session = self.session(id)?;
        let mut s = session.lock().unwrap();
        validate_profiles(&s.config, &profiles)?;
        let state = replay(&AuctionState::new(s.config), &profiles, &s.history)?;
        let prediction = self.prediction_for(&s.config, &profiles, &s.predictor);
        s.profiles = profiles;
        s.state = state;
        s.prediction = prediction;
        s.recommendation = None;
        Ok(s.view())
    }

    /// The session's rounds in trace format, one JSON record per line.
    pub fn trace(&self, id: &str) -> ApiResult<String> {
        let session = self.session(id)?;
        let s = session.lock().unwrap();
        let mut buf = Vec::new();
        write_trace(&mut buf, &s.history).expect("writing to memory");
        Ok(String::from_utf8(buf).expect("trace is UTF-8"))
    }

    /// Blocks until the session's prediction is ready or failed, up to `timeout`.
    pub fn wait_for_prediction(&self, id: &str, timeout: Duration) -> ApiResult<bool> {
        let job = Arc::clone(&self.session(id)?.lock().unwrap().prediction);
        Ok(job.wait(timeout))
    }

    /// Recomputes the state from the recorded history.
    pub fn replayed_state(&self, id: &str) -> ApiResult<(AuctionState, AuctionState)> {
        let session = self.session(id)?;
        let s = session.lock().unwrap();
        Ok((replay(&AuctionState::new(s.config), &s.profiles, &s.history)?, s.state.clone()))
    }
}
