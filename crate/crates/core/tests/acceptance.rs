//! Acceptance criteria 1-13, one PASS/FAIL line each.
//!
//! `cargo test --test acceptance` runs all of them; trailing arguments pick
//! criteria by number, e.g. `cargo test --test acceptance -- 1 7 12`.

use std::collections::{HashSet, VecDeque};
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use brlab::bounds::{
    brd_convergence_formula, brd_convergence_formula_exact, brd_upper_bound, kais1_ratio, kais2_gap,
    riemann_chain_check, stirling_bounds_check, sweep_exhaustive, sweep_random, CombCheck,
};
use brlab::dynamics::{confirm_best_response_cycle, run_best_response, OutcomeKind, RunOptions};
use brlab::exact::{exact_summary, format_rational};
use brlab::game::{self, RealGame};
use brlab::graph::{build_graph, find_traps, sink_decomposition, GraphKind};
use brlab::harness::{
    conditional_rate, report_to_string, run_experiment, Condition, Experiment, ExperimentConfig, Format, Report,
};
use brlab::stats::{trial_rng, Estimate};
use brlab::{Game, Player, Profile};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run(cfg: ExperimentConfig) -> Report {
    run_experiment(&cfg).expect("experiment runs")
}

fn est<'a>(r: &'a Report, name: &str) -> &'a Estimate {
    r.require(name).expect("estimate present")
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn f(r: &BigRational) -> f64 {
    r.to_f64().expect("finite")
}

fn c01_exact_oracle() -> Outcome {
    let two = exact_summary(2).map_err(|e| e.to_string())?;
    let three = exact_summary(3).map_err(|e| e.to_string())?;
    let pmf_ok = two.pne_pmf.len() == 3
        && two.pne_pmf[&0] == ratio(1, 8)
        && two.pne_pmf[&1] == ratio(3, 4)
        && two.pne_pmf[&2] == ratio(1, 8);
    let ok = pmf_ok
        && two.p_trap == ratio(1, 8)
        && two.p_converge_better == ratio(7, 8)
        && two.p_converge_best == ratio(7, 8)
        && three.mean_pne() == BigRational::one()
        && three.pmf_total() == BigRational::one();
    ensure(
        ok,
        format!(
            "K=2 pmf {:?}, p_trap {}, brd {}, BRD {}; K=3 mean {}",
            two.pne_pmf.iter().map(|(k, v)| format!("{k}:{}", format_rational(v))).collect::<Vec<_>>(),
            format_rational(&two.p_trap),
            format_rational(&two.p_converge_better),
            format_rational(&two.p_converge_best),
            format_rational(&three.mean_pne())
        ),
    )
}

fn c02_oracle_agreement() -> Outcome {
    let n = 50_000;
    let mut checked = Vec::new();
    let mut worst = 0.0f64;
    for k in [2usize, 3] {
        let exact = exact_summary(k).map_err(|e| e.to_string())?;
        let seed = 200 + k as u64;
        let pne = run(ExperimentConfig::new(Experiment::PneCensus, k, n, seed));
        let traps = run(ExperimentConfig::new(Experiment::TrapCensus, k, n, seed));
        let coexist = run(ExperimentConfig::new(Experiment::Coexistence, k, n, seed));
        let brd = run(ExperimentConfig::new(Experiment::BrdConvergence, k, n, seed));
        let better = run(ExperimentConfig::new(Experiment::BetterConvergence, k, n, seed));

        let mut pairs: Vec<(String, &Estimate, f64)> = Vec::new();
        for c in 0..=k {
            let p = exact.pne_pmf.get(&c).map(f).unwrap_or(0.0);
            pairs.push((format!("n={c}"), est(&pne, &format!("n={c}")), p));
        }
        pairs.push(("start-is-pne".into(), est(&pne, "start-is-pne"), 1.0 / (k * k) as f64));
        pairs.push(("has-trap".into(), est(&traps, "has-trap"), f(&exact.p_trap)));
        pairs.push(("coexist has-trap".into(), est(&coexist, "has-trap"), f(&exact.p_trap)));
        pairs.push(("coexist has-pne".into(), est(&coexist, "has-pne"), 1.0 - f(&exact.pne_pmf[&0])));
        pairs.push(("BRD".into(), est(&brd, "converged"), f(&exact.p_converge_best)));
        pairs.push(("bRD".into(), est(&better, "converged"), f(&exact.p_converge_better)));
        if k == 2 {
            // Every trap-free class converges, so the rate given an equilibrium is exactly 1.
            pairs.push(("bRD|pne".into(), est(&better, "converged|pne"), 1.0));
        }
        for (name, e, p) in pairs {
            let sigma = e.sigma_at(p);
            let z = if sigma > 0.0 { (e.p_hat - p).abs() / sigma } else if e.p_hat == p { 0.0 } else { f64::INFINITY };
            worst = worst.max(z);
            if z > 3.0 {
                return Err(format!("K={k} {name}: p_hat {} vs exact {p} ({z:.2} sigma)", e.p_hat));
            }
            checked.push(name);
        }
    }
    Ok(format!("{} estimates within 3 sigma, worst {worst:.2} sigma", checked.len()))
}

fn c03_mean_pne() -> Outcome {
    let mut notes = Vec::new();
    for k in [5usize, 30] {
        let r = run(ExperimentConfig::new(Experiment::PneCensus, k, 100_000, 300 + k as u64));
        let census = r.census.as_ref().expect("census");
        let start = est(&r, "start-is-pne");
        let p = 1.0 / (k * k) as f64;
        notes.push(format!("K={k}: mean {:.4} (std {:.3}), P(1,1) {:.5} vs {p:.5}", census.mean, census.std, start.p_hat));
        if !census.mean_within(1.0, 3.0) || !start.within_sigmas(p, 3.0) {
            return Err(notes.join("; "));
        }
    }
    Ok(notes.join("; "))
}

fn c04_poisson_limit() -> Outcome {
    let r = run(ExperimentConfig::new(Experiment::PneCensus, 30, 100_000, 400));
    let p0 = est(&r, "n=0").p_hat;
    let target = (-1.0f64).exp();
    ensure((p0 - target).abs() <= 0.02, format!("P(#PNE=0) = {p0:.4}, e^-1 = {target:.4}"))
}

fn c05_better_convergence() -> Outcome {
    let cfg = ExperimentConfig::new(Experiment::BetterConvergence, 100, 5_000, 500);
    let p = est(&run(cfg), "converged").p_hat;
    let cond = conditional_rate(&cfg, Condition::HasPne).map_err(|e| e.to_string())?;
    let target = 1.0 - (-1.0f64).exp();
    ensure(
        (p - target).abs() <= 0.03 && cond.p_hat >= 0.9 && cond.ci_low > 0.8,
        format!(
            "P(converge) = {p:.4} vs {target:.4}; given PNE {:.4} [{:.4}, {:.4}] over {} games",
            cond.p_hat, cond.ci_low, cond.ci_high, cond.trials
        ),
    )
}

fn c06_best_convergence() -> Outcome {
    let mut by_k = Vec::new();
    for k in [25usize, 100, 400] {
        let r = run(ExperimentConfig::new(Experiment::BrdConvergence, k, 10_000, 600));
        by_k.push((k, *est(&r, "converged")));
    }
    let mut ok = true;
    let mut notes = Vec::new();
    for (k, e) in &by_k {
        let bound = brd_upper_bound(*k);
        ok &= e.p_hat <= bound;
        notes.push(format!("K={k}: {:.4} [{:.4}, {:.4}] <= {bound:.4}", e.p_hat, e.ci_low, e.ci_high));
    }
    let (first, last) = (by_k[0].1, by_k[2].1);
    ok &= last.p_hat < first.p_hat && !last.overlaps(&first);
    ensure(ok, notes.join("; "))
}

fn c07_closed_form() -> Outcome {
    let exact_ok = brd_convergence_formula_exact(2).map_err(|e| e.to_string())? == ratio(3, 4)
        && brd_convergence_formula_exact(3).map_err(|e| e.to_string())? == ratio(53, 81)
        && brd_convergence_formula(2).map_err(|e| e.to_string())? == 0.75;
    let mut worst_k = 0;
    for k in 2..=10_000 {
        let v = brd_convergence_formula(k).map_err(|e| e.to_string())?;
        if v > brd_upper_bound(k) {
            worst_k = k;
            break;
        }
    }
    let chain = [2, 10, 1000].iter().all(|&k| riemann_chain_check(k).unwrap_or(false));
    ensure(
        exact_ok && worst_k == 0 && chain,
        format!("K=2,3 exact values {exact_ok}; first K over bound {worst_k} (0 = none); Riemann chain {chain}"),
    )
}

fn c08_combinatorics() -> Outcome {
    let mut notes = Vec::new();
    let mut violations = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    for which in [CombCheck::Comb, CombCheck::Cocomb, CombCheck::ProdRatio] {
        let all = sweep_exhaustive(which, 5);
        let random = sweep_random(which, 6, 100_000, &mut rng);
        violations += all.violations + random.violations;
        notes.push(format!(
            "{which:?}: {}+{} checked, {} violations",
            all.checked,
            random.checked,
            all.violations + random.violations
        ));
    }
    ensure(violations == 0, notes.join("; "))
}

/// Strong connectivity of `members` under better-response moves, by search
/// from one member.
fn strongly_connected(g: &Game, members: &HashSet<Profile>) -> bool {
    let Some(&root) = members.iter().next() else { return false };
    let reach = |forward: bool| {
        let mut seen = HashSet::from([root]);
        let mut queue = VecDeque::from([root]);
        while let Some(s) = queue.pop_front() {
            for &t in members {
                let edge = if forward { (s, t) } else { (t, s) };
                let is_move = Player::BOTH.iter().any(|&p| g.better_responses(edge.0, p).contains(&edge.1));
                if is_move && seen.insert(t) {
                    queue.push_back(t);
                }
            }
        }
        seen.len() == members.len()
    };
    reach(true) && reach(false)
}

fn c09_trap_structure() -> Outcome {
    let k = 15;
    let (mut traps_seen, mut games_with_traps) = (0, 0);
    for i in 0..1000 {
        let g = Game::random(k, &mut trial_rng(900, k, i)).map_err(|e| e.to_string())?;
        let pne = g.enumerate_pne();
        let sinks = sink_decomposition(&build_graph(&g, GraphKind::Better));
        if sinks.singleton_sinks().len() != pne.len() {
            return Err(format!("game {i}: singleton sinks differ from equilibria"));
        }
        let traps = find_traps(&g);
        games_with_traps += usize::from(!traps.is_empty());
        for t in traps {
            traps_seen += 1;
            let members: HashSet<Profile> = t.profiles.iter().copied().collect();
            let closed = t
                .profiles
                .iter()
                .all(|&s| Player::BOTH.iter().all(|&p| g.better_responses(s, p).iter().all(|x| members.contains(x))));
            let near_pne = t.profiles.iter().any(|s| {
                pne.iter().any(|e| s.is_neighbor(*e, Player::One) || s.is_neighbor(*e, Player::Two))
            });
            let counts = t.row_counts.iter().sum::<usize>() == t.size && t.col_counts.iter().sum::<usize>() == t.size;
            if t.size < 4 || !closed || near_pne || !counts || !strongly_connected(&g, &members) {
                return Err(format!(
                    "game {i}: trap of size {} (closed {closed}, next to PNE {near_pne}, counts {counts})",
                    t.size
                ));
            }
        }
    }
    Ok(format!("{traps_seen} traps in {games_with_traps} of 1000 games, all valid"))
}

fn c10_coexistence() -> Outcome {
    let r = run(ExperimentConfig::new(Experiment::Coexistence, 20, 5_000, 1000));
    let e = est(&r, "trap-and-pne");
    ensure(
        e.p_hat <= 0.05,
        format!("P(trap and PNE) = {:.4} [{:.4}, {:.4}]", e.p_hat, e.ci_low, e.ci_high),
    )
}

/// Exact rate of row domination at K = 2 with all columns compared, over
/// the 24 orderings of player 2's payoffs.
fn delta_rate_k2() -> f64 {
    let mut perms = Vec::new();
    for a in 1..=4u32 {
        for b in 1..=4 {
            for c in 1..=4 {
                for d in 1..=4 {
                    if HashSet::from([a, b, c, d]).len() == 4 {
                        perms.push([[a, b], [c, d]]);
                    }
                }
            }
        }
    }
    let hits = perms
        .iter()
        .filter(|z| (z[0][0] > z[1][0] && z[0][1] > z[1][1]) || (z[1][0] > z[0][0] && z[1][1] > z[0][1]))
        .count();
    assert_eq!(perms.len(), 24);
    hits as f64 / perms.len() as f64
}

fn c11_delta_event() -> Outcome {
    let large = run(ExperimentConfig::new(Experiment::DeltaEvent, 100, 10_000, 1100));
    let events = est(&large, "delta").successes;
    // sigma = 0.8 gives ⌈2^0.8⌉ = 2 = K top columns at K = 2.
    let small = run(ExperimentConfig::new(Experiment::DeltaEvent, 2, 10_000, 1101));
    let e = est(&small, "delta");
    let exact = delta_rate_k2();
    ensure(
        events == 0 && e.within_sigmas(exact, 3.0),
        format!("K=100: {events} events in 10000; K=2: {:.4} vs exact {exact:.4}", e.p_hat),
    )
}

fn c12_appendix() -> Outcome {
    let kais1: Vec<f64> = [100, 200, 400, 800].iter().map(|&k| kais1_ratio(k, 0.5).unwrap()).collect();
    let kais1_ok = kais1.windows(2).all(|w| w[1] <= w[0]) && kais1.iter().all(|v| v.is_finite() && *v > 0.0);
    let kais2: Vec<f64> = [100, 200, 300, 400].iter().map(|&k| kais2_gap(k, 0.5, 0.2).unwrap()).collect();
    let kais2_ok = kais2.windows(2).all(|w| w[1] < w[0]) && kais2[3] < 0.0;
    let stirling_ok = (1..=170).all(|n| stirling_bounds_check(n).unwrap_or(false));
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ");
    ensure(
        kais1_ok && kais2_ok && stirling_ok,
        format!(
            "kais1 ratios [{}] non-increasing: {kais1_ok}; kais2 gaps [{}] decreasing and negative at 400: {kais2_ok}; stirling n<=170: {stirling_ok}",
            fmt(&kais1),
            fmt(&kais2)
        ),
    )
}

fn c13_determinism_invariance() -> Outcome {
    // Byte-identical reports at 1 and 8 workers.
    for (experiment, k) in [(Experiment::BetterConvergence, 12), (Experiment::TrapCensus, 9), (Experiment::PneCensus, 20)] {
        for format in [Format::Csv, Format::Json] {
            let cfg = ExperimentConfig::new(experiment, k, 2_000, 1300);
            let a = report_to_string(&run(cfg.with_parallelism(1)), format).map_err(|e| e.to_string())?;
            let b = report_to_string(&run(cfg.with_parallelism(8)), format).map_err(|e| e.to_string())?;
            if a != b {
                return Err(format!("{experiment} {format:?} differs between 1 and 8 workers"));
            }
        }
    }

    // Strictly increasing payoff transforms change nothing.
    let mut rng = ChaCha8Rng::seed_from_u64(1301);
    for i in 0..100 {
        let k = 2 + i % 7;
        let real = RealGame::random(k, &mut rng).map_err(|e| e.to_string())?;
        let warped = real.map(|x| 5.0 * x.powi(3) + (2.0 * x).exp() - 7.0);
        let same = (0..k * k).map(|j| Profile::from_index(j, k)).all(|s| {
            Player::BOTH.iter().all(|&p| {
                game::better_responses(&real, s, p) == game::better_responses(&warped, s, p)
                    && game::best_response(&real, s, p) == game::best_response(&warped, s, p)
            }) && game::is_pne(&real, s) == game::is_pne(&warped, s)
        }) && game::enumerate_pne(&real) == game::enumerate_pne(&warped);
        if !same {
            return Err(format!("transform changed responses on game {i}"));
        }
    }

    // Revisit detection agrees with the best-response graph.
    let k = 10;
    let opts = RunOptions {
        trajectory_cap: Some(usize::MAX),
        confirm_cycle: false,
    };
    let mut trapped = 0;
    for i in 0..1000 {
        let mut rng = trial_rng(1302, k, i);
        let g = Game::random(k, &mut rng).map_err(|e| e.to_string())?;
        let sinks = sink_decomposition(&build_graph(&g, GraphKind::Best));
        let (outcome, traj) = run_best_response(&g, &mut rng, Profile::new(1, 1), &opts).map_err(|e| e.to_string())?;
        let last = *traj.steps().last().expect("nonempty");
        let c = sinks.component_of_profile(last);
        let graph_trapped = sinks.is_sink(c) && sinks.component(c).len() > 1;
        let graph_converged = sinks.is_sink(c) && sinks.component(c).len() == 1;
        let agrees = match outcome.kind {
            OutcomeKind::Trapped => graph_trapped && confirm_best_response_cycle(&g, last).is_some(),
            OutcomeKind::Converged => graph_converged,
        };
        if !agrees {
            return Err(format!("game {i}: run says {:?} at {last}", outcome.kind));
        }
        trapped += usize::from(outcome.kind == OutcomeKind::Trapped);
    }
    Ok(format!(
        "reports identical across workers; 100 transformed games unchanged; 1000 BRD runs agree with the graph ({trapped} trapped)"
    ))
}

const CRITERIA: [(&str, fn() -> Outcome); 13] = [
    ("exact oracle regression", c01_exact_oracle),
    ("oracle vs Monte Carlo", c02_oracle_agreement),
    ("mean PNE identity", c03_mean_pne),
    ("Poisson limit", c04_poisson_limit),
    ("better-response convergence", c05_better_convergence),
    ("best-response convergence", c06_best_convergence),
    ("closed-form evaluator", c07_closed_form),
    ("combinatorial brute force", c08_combinatorics),
    ("trap structure", c09_trap_structure),
    ("coexistence rarity", c10_coexistence),
    ("row-domination event", c11_delta_event),
    ("appendix numerics", c12_appendix),
    ("determinism and invariance", c13_determinism_invariance),
];

fn main() -> ExitCode {
    let picked: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let listing = std::env::args().any(|a| a == "--list");
    if listing {
        for (i, (name, _)) in CRITERIA.iter().enumerate() {
            println!("criterion_{:02}_{}: test", i + 1, name.replace(' ', "_"));
        }
        return ExitCode::SUCCESS;
    }
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in CRITERIA.iter().enumerate() {
        let number = i + 1;
        if !picked.is_empty() && !picked.contains(&number) {
            continue;
        }
        let started = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("[{tag}] {number:>2} {name} ({secs:.1}s): {detail}");
        failed += usize::from(outcome.is_err());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        println!("all acceptance criteria passed");
        ExitCode::SUCCESS
    }
}
