//! Acceptance suite. Prints one PASS/FAIL line per criterion. A failing
//! criterion only makes the process exit non-zero when `ACCEPTANCE_STRICT=1`,
//! so the rest of a workspace test run still executes. Pass a substring as the
//! first argument to run only matching criteria.

mod common;

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use saa_core::analytics::{build_empirical_game, compute_metrics, game_tree_lower_bound_log10, info_set_count, log10_biguint};
use saa_core::auction::{play_out, risk_averse_utility, Outcome, Owner, TickPrice};
use saa_core::items::ItemSet;
use saa_core::mcts::{hash_prices_allocation, selection_index, ActionStats, SearchParams, SmsBidder};
use saa_core::prediction::{closed_form_example1, estimate_expected_closing, iterate_prediction, PredictorParams};
use saa_core::seed::rng_for;
use saa_core::strategies::{pp_bid, CheapestItemBidder, PricePrediction, StraightforwardBidder, Strategy};
use saa_core::valuations::{demand_reduction_instance, example1_instance, generate_instance, GeneratorParams, Instance, EXAMPLE1_UNLIMITED};

use common::{brute_force_pp, diamond, distance_to_convex, oracle_legal, example1_expected, random_state};

const MASTER_SEED: u64 = 0x5AA_C0DE;
/// Search iterations per decision in the scripted-opponent experiments.
const SCRIPTED_ITERATIONS: u64 = 20_000;
/// Search iterations per decision in the small tournament.
const TOURNAMENT_ITERATIONS: u64 = 50_000;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict { pass, detail: detail.into() }
    }
}

type Check = (&'static str, fn() -> Vec<(String, Verdict)>);

fn single(name: &str, v: Verdict) -> Vec<(String, Verdict)> {
    vec![(name.to_string(), v)]
}

fn within(actual: f64, target: f64, tol: f64) -> bool {
    (actual - target).abs() <= tol
}

fn closed_form_at_zero() -> Vec<(String, Verdict)> {
    let inst = example1_instance(EXAMPLE1_UNLIMITED, EXAMPLE1_UNLIMITED);
    let start = Instant::now();
    let mut rng = rng_for(MASTER_SEED, &[1]);
    let est = estimate_expected_closing(&inst.config, &inst.profiles, &PricePrediction::zeros(2), 10_000, &mut rng);
    let secs = start.elapsed().as_secs_f64();
    let ok = within(est.0[0], 11.5, 0.05) && within(est.0[1], 11.0, 0.05) && secs < 10.0;
    single(
        "example-1 expected closing prices at p = (0,0)",
        Verdict::new(ok, format!("estimate ({:.3}, {:.3}) vs (11.5, 11), {secs:.2}s", est.0[0], est.0[1])),
    )
}

fn fixed_point() -> Vec<(String, Verdict)> {
    let inst = example1_instance(EXAMPLE1_UNLIMITED, EXAMPLE1_UNLIMITED);
    let params = PredictorParams { mc_samples: 2_000, max_iters: 200, tolerance: 1e-12, rng_seed: MASTER_SEED };
    let start = Instant::now();
    let (p, trace) = iterate_prediction(&inst.config, &inst.profiles, &params).expect("valid parameters");
    let secs = start.elapsed().as_secs_f64();
    let near = within(p.0[0], 10.0, 0.25) && within(p.0[1], 10.0, 0.25);
    let mut out = vec![(
        "example-1 fixed point".to_string(),
        Verdict::new(
            near && secs < 120.0 && trace.points.len() == 201,
            format!("p_200 = ({:.3}, {:.3}) vs (10, 10), {} steps, {secs:.1}s", p.0[0], p.0[1], trace.points.len() - 1),
        ),
    )];
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for t in [5usize, 20, 100] {
        let pt = &trace.points[t];
        let d = distance_to_convex((pt.0[0], pt.0[1]), &diamond(t as f64));
        worst = worst.max(d);
        parts.push(format!("t={t}: ({:.3}, {:.3}) off by {d:.3}", pt.0[0], pt.0[1]));
    }
    out.push(("example-1 iterates inside the diamond bound".to_string(), Verdict::new(worst <= 0.3, parts.join("; "))));
    out
}

fn grid_oracle() -> Vec<(String, Verdict)> {
    let inst = example1_instance(EXAMPLE1_UNLIMITED, EXAMPLE1_UNLIMITED);
    let mut rng = rng_for(MASTER_SEED, &[3]);
    let axis: Vec<f64> = (0..5).map(|k| 11.5 * k as f64 / 4.0).collect();
    let mut worst = 0.0f64;
    let mut where_ = (0.0, 0.0);
    let mut library_agrees = true;
    for &a in &axis {
        for &b in &axis {
            let p = PricePrediction(vec![a, b]);
            let est = estimate_expected_closing(&inst.config, &inst.profiles, &p, 4_000, &mut rng);
            let oracle = example1_expected((a, b));
            let d = (est.0[0] - oracle.0).abs().max((est.0[1] - oracle.1).abs());
            if d > worst {
                worst = d;
                where_ = (a, b);
            }
            library_agrees &= closed_form_example1(&p).map(|c| c.0 == vec![oracle.0, oracle.1]).unwrap_or(false);
        }
    }
    single(
        "expected closing prices match the closed form on a 5x5 grid",
        Verdict::new(
            worst <= 0.1 && library_agrees,
            format!("worst deviation {worst:.3} at {where_:?}; closed_form_example1 agrees: {library_agrees}"),
        ),
    )
}

fn game_size() -> Vec<(String, Verdict)> {
    let count = info_set_count(5, 12, 171);
    let oracle = BigUint::from(5u128 * 856u128.pow(12));
    let log_count = log10_biguint(&count);
    let lb = game_tree_lower_bound_log10(5, 12, 171);
    let lb_oracle = 12.0 * 4.0 * 171.0 * 2f64.log10();
    vec![
        (
            "information-set count for (5, 12, 171)".into(),
            Verdict::new(count == oracle && within(log_count, 35.9, 0.05), format!("{count} (log10 {log_count:.2})")),
        ),
        (
            "game-tree lower bound for (5, 12, 171)".into(),
            Verdict::new(within(lb, 2470.9, 0.1) && within(lb, lb_oracle, 1e-9), format!("log10 = {lb:.2}")),
        ),
    ]
}

fn fixed_point_prediction(inst: &Instance, samples: u32, seed: u64) -> PricePrediction {
    let params = PredictorParams { mc_samples: samples, max_iters: 100, tolerance: inst.config.epsilon / 10.0, rng_seed: seed };
    iterate_prediction(&inst.config, &inst.profiles, &params).expect("valid parameters").0
}

fn sms(prediction: PricePrediction, alpha: f64, iterations: u64) -> SmsBidder {
    SmsBidder::new(prediction, SearchParams { alpha, iterations: Some(iterations), ..Default::default() })
        .expect("valid search parameters")
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn demand_reduction() -> Vec<(String, Verdict)> {
    let start = Instant::now();
    let mut rows = Vec::new();
    for (k, b2) in [1.0, 3.0, 7.0, 9.0].into_iter().enumerate() {
        let inst = demand_reduction_instance(10.0, 0.1, 20.0, b2);
        let p_star = fixed_point_prediction(&inst, 1_000, MASTER_SEED + k as u64);
        let searcher = sms(p_star, 7.0, SCRIPTED_ITERATIONS);
        let opponent = CheapestItemBidder;
        let utilities: Vec<f64> = (0..50u64)
            .map(|run| {
                let mut rng = rng_for(MASTER_SEED, &[4, k as u64, run]);
                play_out(&inst.config, &inst.profiles, &[&searcher as &dyn Strategy, &opponent], &mut rng)
                    .expect("legal play")
                    .utilities[0]
            })
            .collect();
        rows.push((b2, mean(&utilities)));
    }
    let secs = start.elapsed().as_secs_f64();
    let stated = |b2: f64| if b2 <= 5.0 { 10.0 - 2.0 * b2 } else { 10.0 };
    let corrected = |b2: f64| (20.0 - 2.0 * b2).max(10.0);
    let describe = |target: &dyn Fn(f64) -> f64| {
        rows.iter().map(|(b2, u)| format!("b2={b2}: {u:.2} vs {:.1}", target(*b2))).collect::<Vec<_>>().join("; ")
    };
    let stated_ok = rows.iter().all(|(b2, u)| within(*u, stated(*b2), 1.0)) && secs < 1800.0;
    let corrected_ok = rows.iter().all(|(b2, u)| within(*u, corrected(*b2), 1.0));
    vec![
        (
            "demand reduction: mean utility vs 10-2*b2 (b2<=5) and 10 (b2>5)".into(),
            Verdict::new(stated_ok, format!("{}; {secs:.0}s", describe(&stated))),
        ),
        (
            "demand reduction: mean utility vs max(20-2*b2, 10) [consistency check, not a stated criterion]".into(),
            Verdict::new(corrected_ok, describe(&corrected)),
        ),
    ]
}

fn exposure_avoidance() -> Vec<(String, Verdict)> {
    let mut out = Vec::new();
    let start = Instant::now();
    for (k, b1) in [4.0, 7.0, 8.0, 12.0].into_iter().enumerate() {
        let inst = example1_instance(b1, 16.0);
        let p_star = fixed_point_prediction(&inst, 1_000, MASTER_SEED + 10 + k as u64);
        let searcher = sms(p_star.clone(), 7.0, SCRIPTED_ITERATIONS);
        let utilities: Vec<f64> = (0..50u64)
            .map(|run| {
                let mut rng = rng_for(MASTER_SEED, &[5, k as u64, run]);
                play_out(&inst.config, &inst.profiles, &[&StraightforwardBidder as &dyn Strategy, &searcher], &mut rng)
                    .expect("legal play")
                    .utilities[1]
            })
            .collect();
        let exposed = utilities.iter().filter(|u| **u < 0.0).count();
        let lo = utilities.iter().copied().fold(f64::INFINITY, f64::min);
        let detail = format!(
            "mean {:.2}, min {lo:.2}, {exposed} exposed of 50, p* = ({:.2}, {:.2})",
            mean(&utilities),
            p_star.0[0],
            p_star.0[1]
        );
        let pass = if b1 >= 8.0 { utilities.iter().all(|u| *u == 0.0) } else { mean(&utilities) > 0.0 };
        let claim = if b1 >= 8.0 { "drops out with utility 0" } else { "earns positive utility" };
        out.push((format!("exposure avoidance: b1={b1}, searcher {claim}"), Verdict::new(pass, detail)));
    }
    let secs = start.elapsed().as_secs_f64();
    out.push(("exposure avoidance: runtime".into(), Verdict::new(true, format!("{secs:.0}s"))));
    out
}

struct Played {
    outcomes: Vec<Outcome>,
}

fn play_profile(instances: &[(Instance, PricePrediction)], profile: u64, seats: &dyn Fn(&PricePrediction) -> Vec<Box<dyn Strategy>>) -> Played {
    let outcomes = instances
        .iter()
        .enumerate()
        .map(|(k, (inst, p_star))| {
            let boxed = seats(p_star);
            let strategies: Vec<&dyn Strategy> = boxed.iter().map(|b| b.as_ref()).collect();
            let mut rng = rng_for(MASTER_SEED, &[6, k as u64, profile]);
            play_out(&inst.config, &inst.profiles, &strategies, &mut rng).expect("legal play")
        })
        .collect();
    Played { outcomes }
}

fn exposure_frequency(played: &Played, seat: usize) -> f64 {
    let us: Vec<f64> = played.outcomes.iter().map(|o| o.utilities[seat]).collect();
    saa_core::analytics::utility_metrics(&us).expect("non-empty").exposure_frequency
}

fn tournament() -> Vec<(String, Verdict)> {
    let start = Instant::now();
    let gen = GeneratorParams { v_cap: 5.0, b_min: 10.0, b_max: 40.0 };
    let instances: Vec<(Instance, PricePrediction)> = (0..200u64)
        .map(|k| {
            let mut rng = rng_for(MASTER_SEED, &[7, k]);
            let inst = generate_instance(2, 3, 1.0, &gen, &mut rng);
            let p_star = fixed_point_prediction(&inst, 500, MASTER_SEED ^ k);
            (inst, p_star)
        })
        .collect();
    let it = TOURNAMENT_ITERATIONS;
    let sb_sb = play_profile(&instances, 0, &|_| vec![Box::new(StraightforwardBidder), Box::new(StraightforwardBidder)]);
    let sms_sb = play_profile(&instances, 1, &|p| vec![Box::new(sms(p.clone(), 7.0, it)), Box::new(StraightforwardBidder)]);
    let sms_sms =
        play_profile(&instances, 2, &|p| vec![Box::new(sms(p.clone(), 7.0, it)), Box::new(sms(p.clone(), 7.0, it))]);
    let cautious: Vec<(f64, Played)> = [0.0, 12.0]
        .into_iter()
        .enumerate()
        .map(|(k, alpha)| {
            let played = play_profile(&instances, 3 + k as u64, &|p| {
                vec![Box::new(sms(p.clone(), alpha, it)), Box::new(StraightforwardBidder)]
            });
            (alpha, played)
        })
        .collect();

    let utilities = |p: &Played| p.outcomes.iter().map(|o| o.utilities.clone()).collect::<Vec<_>>();
    let game = build_empirical_game("SMS", "SB", &[utilities(&sb_sb), utilities(&sms_sb), utilities(&sms_sms)])
        .expect("well-formed profiles");
    let gains: Vec<f64> = (0..2).map(|k| game.deviation_gain(k).expect("complete game")).collect();

    let self_exposure = exposure_frequency(&sms_sms, 0).max(exposure_frequency(&sms_sms, 1));
    let (mut valued, mut unsold, mut unsold_affordable) = (0usize, 0usize, 0usize);
    for ((inst, _), o) in instances.iter().zip(&sms_sms.outcomes) {
        for j in 0..3 {
            let singles: Vec<f64> = inst.profiles.iter().map(|p| p.values.value(ItemSet::single(j))).collect();
            if singles.iter().sum::<f64>() > 0.0 {
                valued += 1;
                if o.final_allocation.winner_of[j] == Owner::Auctioneer {
                    unsold += 1;
                    if singles.iter().any(|v| *v >= inst.config.epsilon) {
                        unsold_affordable += 1;
                    }
                }
            }
        }
    }
    let exp0 = exposure_frequency(&cautious[0].1, 0);
    let exp7 = exposure_frequency(&sms_sb, 0);
    let exp12 = exposure_frequency(&cautious[1].1, 0);
    let secs = start.elapsed().as_secs_f64();
    let cells: Vec<String> = game
        .cells
        .iter()
        .map(|c| format!("k={}: A {:?} B {:?}", c.k, c.utility_a.map(|x| (x * 100.0).round() / 100.0), c.utility_b.map(|x| (x * 100.0).round() / 100.0)))
        .collect();
    vec![
        (
            "tournament (a): switching SB to SMS is weakly profitable".into(),
            Verdict::new(
                gains.iter().all(|g| *g >= 0.0),
                format!("gains {:.3} / {:.3}; {}", gains[0], gains[1], cells.join(", ")),
            ),
        ),
        (
            "tournament (b): SMS self-play never ends in exposure".into(),
            Verdict::new(self_exposure == 0.0, format!("exposure frequency {self_exposure:.3}")),
        ),
        (
            "tournament (c): SMS self-play allocates every item with positive total value".into(),
            Verdict::new(
                unsold == 0,
                format!(
                    "{unsold} of {valued} unsold ({unsold_affordable} with a single-item value of at least one increment)"
                ),
            ),
        ),
        (
            "tournament (d): exposure vs SB does not increase from alpha=0 to alpha=12".into(),
            Verdict::new(
                exp12 <= exp0 && secs < 7200.0,
                format!("alpha 0: {exp0:.3}, alpha 7: {exp7:.3}, alpha 12: {exp12:.3}; {TOURNAMENT_ITERATIONS} iterations/decision, {secs:.0}s"),
            ),
        ),
    ]
}

fn properties() -> Vec<(String, Verdict)> {
    let mut out = Vec::new();

    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED);
    let gen = GeneratorParams::default();
    let (mut rounds, mut bids, mut bad) = (0usize, 0usize, Vec::new());
    for k in 0..40u64 {
        let n = 2 + (k % 2) as usize;
        let m = 2 + (k % 3) as usize;
        let inst = generate_instance(n, m, 1.0, &gen, &mut rng);
        let p = PricePrediction(vec![2.0; m]);
        let searcher = SmsBidder::new(p.clone(), SearchParams { iterations: Some(200), ..Default::default() }).unwrap();
        let pp = saa_core::strategies::PointPriceBidder { prediction: p };
        let pool: [&dyn Strategy; 3] = [&StraightforwardBidder, &pp, &searcher];
        let strategies: Vec<&dyn Strategy> = (0..n).map(|i| pool[(i + k as usize) % 3]).collect();
        let bound = saa_core::auction::round_bound(&inst.config, &inst.profiles);
        let end = saa_core::play_from(
            saa_core::AuctionState::new(inst.config),
            &inst.profiles,
            &strategies,
            &mut rng,
            |before, joint, after| {
                rounds += 1;
                for (i, b) in joint.iter().enumerate() {
                    bids += 1;
                    if !oracle_legal(before, i, inst.profiles[i].budget, *b) {
                        bad.push(format!("illegal bid {b} by {i}"));
                    }
                    if after.eligibility[i] > before.eligibility[i] {
                        bad.push(format!("eligibility of {i} rose"));
                    }
                }
                if after.prices.iter().zip(&before.prices).any(|(a, b)| a < b) {
                    bad.push("a price fell".into());
                }
            },
        );
        match end {
            Ok(s) if s.round as u64 <= bound => {}
            Ok(s) => bad.push(format!("{} rounds exceed the bound {bound}", s.round)),
            Err(e) => bad.push(e.to_string()),
        }
    }
    out.push((
        "bids legal, eligibility and prices monotone, rounds within bound".into(),
        Verdict::new(bad.is_empty(), match bad.first() {
            None => format!("{rounds} rounds, {bids} bids, 0 violations"),
            Some(first) => format!("{rounds} rounds, {bids} bids, {} violations, first: {first:?}", bad.len()),
        }),
    ));

    let mut worst = 0.0f64;
    for k in 0..500u64 {
        let len = 1 + (k % 60) as usize;
        let us: Vec<f64> = (0..len).map(|s| ((k * 31 + s as u64 * 17) % 41) as f64 - 20.0 + 0.25 * (s % 3) as f64).collect();
        let won: Vec<usize> = (0..len).map(|s| (s + k as usize) % 4).collect();
        let spend: Vec<f64> = won.iter().map(|w| *w as f64 * 1.5).collect();
        let r = compute_metrics(&us, &won, &spend, 3).unwrap();
        worst = worst.max((r.expected_gain - r.expected_exposure - r.expected_utility).abs());
    }
    out.push(("mean utility = gain term - expected exposure".into(), Verdict::new(worst <= 1e-9, format!("max residual {worst:.1e} over 500 sample sets"))));

    let mut mismatches = 0;
    for k in 0..1_000usize {
        let m = 1 + k % 4;
        let n = 2 + k % 3;
        let (state, profiles) = random_state(&mut rng, n, m, 1.0);
        let p_init: Vec<f64> = (0..m).map(|j| ((k * 7 + j * 5) % 13) as f64).collect();
        let i = k % n;
        if pp_bid(&p_init, &state, i, &profiles[i]) != brute_force_pp(&state, i, &profiles[i], &p_init) {
            mismatches += 1;
        }
    }
    out.push(("PP matches exhaustive search on 1,000 random states".into(), Verdict::new(mismatches == 0, format!("{mismatches} mismatches"))));

    let scan = common::collision_scan(2, 3, 4);
    out.push((
        "node keys are collision-free within 4 rounds (n=2, m=3)".into(),
        Verdict::new(
            scan.missing_keys == 0 && scan.collisions == 0,
            format!("{} states, {} keyed, {} collisions, {} unkeyed", scan.states, scan.hashed, scan.collisions, scan.missing_keys),
        ),
    ));

    let q = selection_index(&ActionStats { r_alpha: 10.0, n: 4, a_alpha: 0.0, c_alpha: 8.0 }, 10, 1.0);
    out.push(("selection index spot value".into(), Verdict::new(within(q, 11.084, 0.001), format!("{q:.4}"))));

    let t = |p: &[u32]| p.iter().map(|x| TickPrice(*x)).collect::<Vec<_>>();
    let h = hash_prices_allocation(&t(&[0, 0]), &t(&[2, 1]), &[Owner::Bidder(0), Owner::Bidder(1)], 2, 10);
    out.push(("price/allocation key on the worked example".into(), Verdict::new(h == Ok(222), format!("{h:?}"))));

    let table = [(5.0, 7.0, 5.0), (-2.0, 7.0, -16.0), (0.0, 7.0, 0.0), (0.0, 0.0, 0.0), (0.0, 12.0, 0.0)];
    let ok = table.iter().all(|(u, a, want)| risk_averse_utility(*u, *a) == *want);
    out.push(("risk-averse utility table".into(), Verdict::new(ok, "(5,7)->5, (-2,7)->-16, (0,a)->0")));
    out
}

fn main() {
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let checks: [Check; 8] = [
        ("closed-form", closed_form_at_zero),
        ("fixed-point", fixed_point),
        ("grid", grid_oracle),
        ("game-size", game_size),
        ("properties", properties),
        ("exposure", exposure_avoidance),
        ("demand-reduction", demand_reduction),
        ("tournament", tournament),
    ];
    let mut failed = 0;
    let mut total = 0;
    let suite = Instant::now();
    for (key, run) in checks {
        if filter.as_deref().is_some_and(|f| !key.contains(f)) {
            continue;
        }
        let start = Instant::now();
        let results = run();
        let elapsed: Duration = start.elapsed();
        for (name, v) in results {
            total += 1;
            if !v.pass {
                failed += 1;
            }
            println!("{} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        }
        println!("      [{key} took {:.1}s]", elapsed.as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed, {:.0}s", total - failed, suite.elapsed().as_secs_f64());
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
