use std::collections::{BTreeMap, HashSet};

use brlab::dynamics::{run_best_response, run_better_response, OutcomeKind, RunOptions};
use brlab::exact::exact_summary;
use brlab::game::{self, RealGame};
use brlab::graph::{absorption_probabilities, build_graph, sink_decomposition, GraphKind};
use brlab::harness::{run_experiment, Experiment, ExperimentConfig};
use brlab::stats::trial_rng;
use brlab::{Game, Player, Profile};
use num_traits::ToPrimitive;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn full() -> RunOptions {
    RunOptions {
        trajectory_cap: Some(usize::MAX),
        confirm_cycle: true,
    }
}

fn rank(g: &Game, p: Player, s: Profile) -> u32 {
    g.rank(p, s.s1 - 1, s.s2 - 1)
}

/// Every transition moves only the mover's coordinate and raises the mover's rank.
fn check_transitions(g: &Game, steps: &[Profile], movers: &[Player]) {
    for (w, &m) in steps.windows(2).zip(movers) {
        assert!(w[1].is_neighbor(w[0], m), "{} -> {} by {m}", w[0], w[1]);
        assert!(rank(g, m, w[1]) > rank(g, m, w[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn best_response_runs_alternate_and_stay_economical(seed in any::<u64>(), k in 2usize..14) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Game::random(k, &mut rng).unwrap();
        let start = Profile::new(rng_start(seed, k).0, rng_start(seed, k).1);
        let (outcome, traj) = run_best_response(&g, &mut rng, start, &full()).unwrap();
        check_transitions(&g, traj.steps(), traj.movers());
        for w in traj.movers().windows(2).skip(1) {
            prop_assert_ne!(w[0], w[1]);
        }
        // A start that is a best response for neither player is not counted:
        // the walk only settles into lines after its first move.
        let settled = g.best_response(start, Player::One).is_none() || g.best_response(start, Player::Two).is_none();
        // At most 2K-2 fresh transitions, then the revisiting one.
        prop_assert!(outcome.detection_step <= 2 * k - 1 + usize::from(!settled));
        // Before the revisit, no row or column holds more than two profiles.
        let end = match outcome.kind {
            OutcomeKind::Trapped => traj.steps().len() - 1,
            OutcomeKind::Converged => traj.steps().len(),
        };
        let before = &traj.steps()[usize::from(!settled).min(end)..end];
        let mut rows = BTreeMap::new();
        let mut cols = BTreeMap::new();
        for s in before {
            *rows.entry(s.s1).or_insert(0) += 1;
            *cols.entry(s.s2).or_insert(0) += 1;
        }
        prop_assert!(rows.values().chain(cols.values()).all(|&c| c <= 2));
        if let Some(p) = outcome.pne {
            prop_assert!(g.is_pne(p));
        }
    }

    #[test]
    fn better_response_runs_improve_and_end_in_sinks(seed in any::<u64>(), k in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Game::random(k, &mut rng).unwrap();
        let sinks = sink_decomposition(&build_graph(&g, GraphKind::Better));
        let (outcome, traj) = run_better_response(&g, &mut rng, &sinks, Profile::new(1, 1), &full()).unwrap();
        check_transitions(&g, traj.steps(), traj.movers());
        let last = *traj.steps().last().unwrap();
        let c = sinks.component_of_profile(last);
        prop_assert!(sinks.is_sink(c));
        match outcome.kind {
            OutcomeKind::Converged => prop_assert!(g.is_pne(last)),
            OutcomeKind::Trapped => prop_assert!(sinks.component(c).len() >= 4),
        }
    }

    #[test]
    fn ordinal_invariance(seed in any::<u64>(), k in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let real = RealGame::random(k, &mut rng).unwrap();
        let warped = real.map(|x| (3.0 * x).exp() + x.powi(3));
        for s in (0..k * k).map(|i| Profile::from_index(i, k)) {
            for p in Player::BOTH {
                prop_assert_eq!(game::better_responses(&real, s, p), game::better_responses(&warped, s, p));
                prop_assert_eq!(game::best_response(&real, s, p), game::best_response(&warped, s, p));
            }
        }
        prop_assert_eq!(game::enumerate_pne(&real), game::enumerate_pne(&warped));
        prop_assert_eq!(real.to_game().unwrap(), warped.to_game().unwrap());
    }
}

fn rng_start(seed: u64, k: usize) -> (usize, usize) {
    ((seed % k as u64) as usize + 1, ((seed / 7) % k as u64) as usize + 1)
}

/// An unsettled start spends one move adjusting, then runs the full 2K-1.
#[test]
fn unsettled_start_can_take_2k_steps() {
    let (seed, k) = (246009780437383665u64, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Game::random(k, &mut rng).unwrap();
    let (r, c) = rng_start(seed, k);
    let (outcome, _) = run_best_response(&g, &mut rng, Profile::new(r, c), &full()).unwrap();
    assert_eq!((outcome.kind, outcome.detection_step), (OutcomeKind::Trapped, 2 * k));
}

/// A trapped best-response run ends on a cycle that is a sink of the
/// best-response graph; a converged one on a singleton sink.
#[test]
fn best_response_outcome_matches_graph() {
    for i in 0..400 {
        let mut rng = trial_rng(9, 10, i);
        let g = Game::random(10, &mut rng).unwrap();
        let sinks = sink_decomposition(&build_graph(&g, GraphKind::Best));
        let (outcome, traj) = run_best_response(&g, &mut rng, Profile::new(1, 1), &full()).unwrap();
        let last = *traj.steps().last().unwrap();
        let c = sinks.component_of_profile(last);
        assert!(sinks.is_sink(c));
        let size = sinks.component(c).len();
        match outcome.kind {
            OutcomeKind::Converged => assert_eq!(size, 1),
            OutcomeKind::Trapped => {
                assert!(size >= 4);
                assert!(outcome.trap_id.is_some());
            }
        }
    }
}

fn small_games() -> Vec<Game> {
    let mut found = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    // One game with both a trap and an equilibrium, one with several equilibria.
    while found.len() < 2 {
        let g = Game::random(4, &mut rng).unwrap();
        let sinks = sink_decomposition(&build_graph(&g, GraphKind::Better));
        let pne = sinks.singleton_sinks().len();
        let traps = sinks.trap_components().count();
        let want = if found.is_empty() { pne >= 1 && traps >= 1 } else { pne >= 2 };
        if want {
            found.push(g);
        }
    }
    found
}

#[test]
fn better_response_frequencies_match_absorption() {
    let n = 10_000u64;
    for g in small_games() {
        let start = Profile::new(1, 1);
        let exact = absorption_probabilities(&g, GraphKind::Better, start).unwrap();
        let sinks = &exact.decomposition;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut hits: BTreeMap<usize, u64> = BTreeMap::new();
        for _ in 0..n {
            let (outcome, _) = run_better_response(&g, &mut rng, sinks, start, &RunOptions::default()).unwrap();
            let c = match outcome.pne {
                Some(p) => sinks.component_of_profile(p),
                None => outcome.trap_id.unwrap(),
            };
            *hits.entry(c).or_default() += 1;
        }
        for (&c, &p) in &exact.probabilities {
            let freq = *hits.get(&c).unwrap_or(&0) as f64 / n as f64;
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() <= 3.0 * sigma + 1e-12, "component {c}: {freq} vs {p}");
        }
        assert!(hits.keys().all(|c| exact.probabilities.contains_key(c)));
    }
}

#[test]
fn exact_values_inside_wide_intervals() {
    let exact = exact_summary(3).unwrap();
    for (experiment, name, value) in [
        (Experiment::BrdConvergence, "converged", &exact.p_converge_best),
        (Experiment::BetterConvergence, "converged", &exact.p_converge_better),
    ] {
        let cfg = ExperimentConfig::new(experiment, 3, 20_000, 5).with_confidence(0.99);
        let e = *run_experiment(&cfg).unwrap().require(name).unwrap();
        assert!(e.contains(value.to_f64().unwrap()), "{experiment}: {e:?}");
    }
}

/// The 95% interval should cover the exact value in at least 90 of 100 seeds.
/// At 1000 trials the exact coverage of the Wilson interval at p = 1/8 is 0.950.
#[test]
fn wilson_interval_coverage() {
    let exact = exact_summary(2).unwrap();
    let truth = exact.pne_pmf[&0].to_f64().unwrap();
    let covered = (0..100)
        .filter(|&seed| {
            let cfg = ExperimentConfig::new(Experiment::PneCensus, 2, 1000, 1000 + seed);
            run_experiment(&cfg).unwrap().require("n=0").unwrap().contains(truth)
        })
        .count();
    assert!(covered >= 90, "covered {covered} of 100");
}

#[test]
fn start_profile_does_not_matter() {
    for experiment in [Experiment::BrdConvergence, Experiment::BetterConvergence] {
        let base = ExperimentConfig::new(experiment, 20, 2_000, 8).with_confidence(0.99);
        let a = *run_experiment(&base).unwrap().require("converged").unwrap();
        let b = *run_experiment(&base.with_start(Profile::new(7, 13))).unwrap().require("converged").unwrap();
        assert!(a.overlaps(&b), "{experiment}: {a:?} vs {b:?}");
    }
}

#[test]
fn census_traps_are_sinks_away_from_equilibria() {
    for i in 0..200 {
        let g = Game::random(8, &mut trial_rng(4, 8, i)).unwrap();
        let pne: HashSet<Profile> = g.enumerate_pne().into_iter().collect();
        for t in brlab::graph::find_traps(&g) {
            let members: HashSet<Profile> = t.profiles.iter().copied().collect();
            for &s in &t.profiles {
                for p in Player::BOTH {
                    assert!(g.better_responses(s, p).iter().all(|x| members.contains(x)));
                }
                assert!(pne.iter().all(|e| !(s.is_neighbor(*e, Player::One) || s.is_neighbor(*e, Player::Two))));
            }
        }
    }
}
