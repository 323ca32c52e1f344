//! Integration tests of round partitions and temporal costs.

use crn_core::exec::{run_adversarial, run_stochastic, trial_rng, Stop};
use crn_core::model::{rational, rational_to_f64};
use crn_core::protocols::examples;
use crn_core::runtime::{
    boundaries_are_non_void_steps, partition_rounds, rt_of_execution, temporal_cost_bound, temporal_cost_mc, RuntimePolicy,
    SkippingPolicy, TcSource,
};
use proptest::prelude::*;

#[test]
fn kill_b_temporal_cost_matches_the_closed_form() {
    let b = examples::kill_b().unwrap();
    let c = b.crn.parse_configuration("2 A + B + 3 X + 4 X'").unwrap();
    let phi = c.total();
    let q = b.policy.targets(&c);
    // phi / (a (x + x' + 1)) = 10 / (2 * 8).
    let bound = temporal_cost_bound(&b.crn, &c, &q, phi, 10_000).unwrap().unwrap();
    assert_eq!(bound, rational(10, 16));
    let est = temporal_cost_mc(&b.crn, &c, &q, phi, 5000, 7, 100_000);
    assert!((est.mean - 0.625).abs() < 0.03, "{}", est.mean);
}

#[test]
fn superset_rounds_are_single_steps() {
    let b = examples::superset_policy().unwrap();
    let c0 = b.initial_configs(10).remove(0);
    let adv = b.adversary("alpha-first").unwrap();
    let mut s = (adv.strategy)(&b.crn, &c0);
    let e = run_adversarial(&b.crn, &c0, s.as_mut(), None, &Stop::Halt, 1000, &mut trial_rng(0, 0)).unwrap();
    let p = partition_rounds(&b.crn, &e, &b.policy, &SkippingPolicy::Identity, e.len()).unwrap();
    assert_eq!(p.rounds.len(), e.len());
    // Each round costs phi / (1 + 2x) for x = 8, 7, ..., 0.
    let rep = rt_of_execution(&b.crn, &e, &b.policy, &SkippingPolicy::Identity, e.len(), TcSource::Bound { max_states: 1000 }).unwrap();
    let exact: f64 = (0..=8).map(|x| 10.0 / (1.0 + 2.0 * x as f64)).sum();
    assert!((rep.rt - exact).abs() < 1e-9, "{} vs {exact}", rep.rt);
}

#[test]
fn full_policy_rounds_end_at_non_void_steps() {
    let b = examples::kill_b().unwrap();
    let c0 = b.crn.parse_configuration("A + B + 4 X + 3 X'").unwrap();
    let e = run_stochastic(&b.crn, &c0, &mut trial_rng(3, 0), &Stop::Halt, 100_000).unwrap();
    let rho = RuntimePolicy::full(&b.crn);
    let p = partition_rounds(&b.crn, &e, &rho, &SkippingPolicy::Identity, e.len()).unwrap();
    assert!(boundaries_are_non_void_steps(&b.crn, &e, &p));
}

#[test]
fn bound_dominates_monte_carlo_on_round_inflation() {
    let b = examples::round_inflation().unwrap();
    let c = b.crn.parse_configuration("L_1 + 3 X + 5 Y").unwrap();
    let q = b.policy.targets(&c);
    let bound = rational_to_f64(&temporal_cost_bound(&b.crn, &c, &q, 9, 10_000).unwrap().unwrap());
    let est = temporal_cost_mc(&b.crn, &c, &q, 9, 4000, 11, 100_000);
    assert!(est.mean <= bound + 3.0 * est.half_width);
    assert!((est.mean - 9.0 / 8.0).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rounds_tile_the_prefix(seed in 0u64..500) {
        let b = examples::kill_b().unwrap();
        let c0 = b.crn.parse_configuration("A + B + 3 X + 2 X'").unwrap();
        let e = run_stochastic(&b.crn, &c0, &mut trial_rng(seed, 0), &Stop::Halt, 100_000).unwrap();
        let p = partition_rounds(&b.crn, &e, &b.policy, &SkippingPolicy::Identity, e.len()).unwrap();
        let mut t = 0;
        for r in &p.rounds {
            prop_assert_eq!(r.t, t);
            prop_assert!(r.t_e >= r.t && r.end > r.t_e);
            t = r.end;
        }
        prop_assert_eq!(t, e.len());
    }
}
