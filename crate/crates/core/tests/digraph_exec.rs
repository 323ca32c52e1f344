//! Integration tests of digraph analysis and execution replay.

use crn_core::digraph::{check_strong_correctness, check_weak_correctness, explore, find_pitfalls, Mode};
use crn_core::exec::{
    is_weakly_fair_lasso, max_starvation, run_adversarial, run_stochastic, trial_rng, Execution, RandomStrategy, Stop,
    VoidOnly,
};
use crn_core::model::rational_int;
use crn_core::protocols::examples;
use crn_core::registry;
use proptest::prelude::*;

#[test]
fn kill_b_is_correct_under_both_fairness_notions() {
    let b = examples::kill_b().unwrap();
    let c0 = b.crn.parse_configuration("A + B + 2 X + X'").unwrap();
    let a = explore(&b.crn, &c0, 10_000).unwrap();
    let z = a.mask(&*b.target_of(&c0));
    assert!(check_weak_correctness(&b.crn, &a, &z, Mode::Halt).correct);
    assert!(check_strong_correctness(&a, &z, Mode::Halt).correct);
}

#[test]
fn cartesian_livelock_is_a_weakly_fair_lasso() {
    let b = examples::cartesian_product().unwrap();
    let c0 = b.initial_configs(4).remove(0);
    let root = b.ignition.mature(&b.crn, &c0);
    let a = explore(&b.crn, &root, 100_000).unwrap();
    let z = a.mask(&*b.target_of(&c0));
    let verdict = check_weak_correctness(&b.crn, &a, &z, Mode::Halt);
    assert!(!verdict.correct);
    let lasso = verdict.witness.and_then(|w| w.lasso).expect("lasso witness");
    assert!(is_weakly_fair_lasso(&b.crn, &root, &lasso));
    assert!(check_strong_correctness(&a, &z, Mode::Halt).correct);
}

#[test]
fn random_walk_broadcast_is_not_stably_correct() {
    let b = registry("random-walk-broadcast").unwrap();
    let c0 = b.crn.parse_configuration("P_1 + F_0 + F_1").unwrap();
    let a = explore(&b.crn, &c0, 10_000).unwrap();
    let z = a.mask(&*b.target_of(&c0));
    assert!(!check_weak_correctness(&b.crn, &a, &z, Mode::Stab).correct);
    assert!(check_strong_correctness(&a, &z, Mode::Stab).correct);
}

#[test]
fn skipping_policy_has_halting_pitfalls() {
    let b = examples::skipping_policy().unwrap();
    let c0 = b.initial_configs(8).remove(0);
    let a = explore(&b.crn, &c0, 100_000).unwrap();
    let z = a.mask(&*b.target_of(&c0));
    let pits = find_pitfalls(&b.crn, &a, &z, &rational_int(2), Mode::Halt).unwrap();
    assert!(!pits.is_empty());
    let e = b.crn.sid("E").unwrap();
    assert!(pits.iter().all(|&u| a.node(u).get(e) == 0));
}

#[test]
fn exploration_respects_the_state_budget() {
    let b = registry("threshold").unwrap();
    let c0 = b.initial_configs(8).remove(0);
    assert!(explore(&b.crn, &c0, 3).is_err());
}

#[test]
fn fairness_wrapper_bounds_starvation() {
    let b = examples::kill_b().unwrap();
    let c0 = b.crn.parse_configuration("A + B + 3 X + 3 X'").unwrap();
    let t_fair = 5;
    let e = run_adversarial(&b.crn, &c0, &mut VoidOnly, Some(t_fair), &Stop::Halt, 10_000, &mut trial_rng(1, 0)).unwrap();
    assert!(b.crn.is_halting(e.last()));
    let (longest, _) = max_starvation(&b.crn, &e);
    assert!(longest <= t_fair + b.crn.reaction_count());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn stochastic_runs_replay_identically(seed in 0u64..1000, x in 1u32..6) {
        let b = examples::kill_b().unwrap();
        let c0 = b.crn.parse_configuration(&format!("A + B + {x} X")).unwrap();
        let e1 = run_stochastic(&b.crn, &c0, &mut trial_rng(seed, 0), &Stop::Halt, 100_000).unwrap();
        let e2 = run_stochastic(&b.crn, &c0, &mut trial_rng(seed, 0), &Stop::Halt, 100_000).unwrap();
        prop_assert_eq!(&e1, &e2);
        let replay = Execution::from_steps(&b.crn, c0.clone(), e1.steps()).unwrap();
        prop_assert_eq!(replay.configs(), e1.configs());
    }

    #[test]
    fn traces_round_trip_through_jsonl(seed in 0u64..1000) {
        let b = examples::kill_b().unwrap();
        let c0 = b.crn.parse_configuration("A + B + 2 X + 2 X'").unwrap();
        let e = run_adversarial(&b.crn, &c0, &mut RandomStrategy { void_prob: 0.3 }, Some(20), &Stop::Halt, 10_000, &mut trial_rng(seed, 1)).unwrap();
        let back = Execution::from_jsonl(&b.crn, &e.to_jsonl(0)).unwrap();
        prop_assert_eq!(back.steps(), e.steps());
        prop_assert_eq!(back.last(), e.last());
    }

    #[test]
    fn every_reachable_node_is_within_the_density_bound(n in 2u64..7) {
        let b = registry("threshold").unwrap();
        for c0 in b.initial_configs(n) {
            let a = explore(&b.crn, &c0, 100_000).unwrap();
            let limit = b.crn.max_count(c0.total());
            prop_assert!(a.nodes().all(|c| c.total() <= limit));
        }
    }
}
