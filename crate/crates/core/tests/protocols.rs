//! Integration tests of the protocol library and the predicate compiler.

use crn_core::digraph::{check_weak_correctness, explore, Mode};
use crn_core::exec::{run_stochastic, trial_rng, Stop};
use crn_core::predicate::{self, PredicateAst};
use crn_core::protocols::{compositions, crd, va};
use crn_core::{registry, registry_names, ProtocolBundle};
use proptest::prelude::*;

/// Certify the compiled decider on every input with `‖x‖ ≤ max_total` and
/// every fuel count up to `max_fuel`, against `eval`.
fn certify(b: &ProtocolBundle, max_total: u32, max_fuel: u32) {
    let p = b.predicate.clone().expect("compiled predicate");
    let decider = b.crd.clone().expect("decider");
    for total in 0..=max_total {
        for x in compositions(total, decider.inputs.len()) {
            for fuel in 1..=max_fuel {
                let c0 = decider.initial(b.crn.species_count(), &x, fuel);
                let root = b.ignition.mature(&b.crn, &c0);
                let a = explore(&b.crn, &root, 1_000_000).unwrap();
                let xv: Vec<u64> = x.iter().map(|&v| v as u64).collect();
                let z = a.mask(&*decider.target(predicate::eval(&p.ast, &xv) as u8));
                assert!(check_weak_correctness(&b.crn, &a, &z, Mode::Halt).correct, "{p} at x={x:?} fuel={fuel}");
            }
        }
    }
}

#[test]
fn eval_examples() {
    let thr = PredicateAst::Threshold { a: vec![1, -1], b: 0 };
    assert!(predicate::eval(&thr, &[2, 3]));
    let not_even = PredicateAst::Not(Box::new(PredicateAst::Modulo { a: vec![1], b: 0, m: 2 }));
    assert!(!predicate::eval(&not_even, &[4]));
    let taut = PredicateAst::Or(Box::new(thr.clone()), Box::new(PredicateAst::Not(Box::new(thr))));
    for x in 0..5 {
        for y in 0..5 {
            assert!(predicate::eval(&taut, &[x, y]));
        }
    }
}

#[test]
fn compiled_threshold_decides_x_below_one() {
    let b = predicate::compile(&predicate::parse("thr(X < 1)").unwrap()).unwrap();
    certify(&b, 6, 4);
}

#[test]
fn compiled_conjunction_of_threshold_and_modulo() {
    let b = predicate::compile(&predicate::parse("thr(A < 2) & mod(A == 0 % 2)").unwrap()).unwrap();
    certify(&b, 4, 2);
}

#[test]
fn negation_swaps_voters_only() {
    let base = crd::threshold_crd(&["A".to_string()], &[1], 2).unwrap();
    let neg = crd::negate(base.clone());
    assert_eq!(neg.crn.declared_specs(), base.crn.declared_specs());
    let (b, n) = (base.crd.unwrap(), neg.crd.unwrap());
    assert_eq!(b.voters0, n.voters1);
    assert_eq!(b.voters1, n.voters0);
}

#[test]
fn compile_rejects_deep_predicates() {
    let mut ast = PredicateAst::Threshold { a: vec![1], b: 1 };
    for _ in 0..predicate::MAX_COMPILE_DEPTH {
        ast = PredicateAst::Not(Box::new(ast));
    }
    let p = predicate::Predicate { inputs: vec!["A".into()], ast };
    assert!(predicate::compile(&p).is_err());
}

#[test]
fn amplification_factor_is_ceiling_of_inverse() {
    assert_eq!(va::amplification_factor(&crn_core::model::rational(1, 3)).unwrap(), 3);
    assert_eq!(va::amplification_factor(&crn_core::model::rational(2, 5)).unwrap(), 3);
    assert!(va::amplification_factor(&crn_core::model::rational(0, 1)).is_err());
}

#[test]
fn registry_entries_round_trip_through_text() {
    for name in registry_names() {
        let b = registry(name).unwrap();
        let doc = crn_core::format::parse_protocol(&b.to_text()).unwrap();
        assert_eq!(doc.crn.species_names(), b.crn.species_names(), "{name}");
        assert_eq!(doc.crn.declared_specs(), b.crn.declared_specs(), "{name}");
    }
}

#[test]
fn detection_decides_any_positive_input() {
    let b = registry("detection").unwrap();
    let decider = b.crd.clone().unwrap();
    for x in [[0u32, 0], [1, 0], [0, 1], [2, 3]] {
        let c0 = decider.initial(b.crn.species_count(), &x, 1);
        let e = run_stochastic(&b.crn, &c0, &mut trial_rng(5, 0), &Stop::Halt, 1_000_000).unwrap();
        let expected = b.decision(&c0).unwrap();
        assert_eq!(decider.vote(e.last()), Some(expected as u8), "x={x:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn threshold_charge_is_invariant(x0 in 0u32..6, x1 in 0u32..6, fuel in 1u32..3, seed in 0u64..100) {
        let b = registry("threshold").unwrap();
        let decider = b.crd.clone().unwrap();
        let c0 = decider.initial(b.crn.species_count(), &[x0, x1], fuel);
        let e = run_stochastic(&b.crn, &c0, &mut trial_rng(seed, 0), &Stop::Halt, 1_000_000).unwrap();
        for t in 0..e.len() {
            for inv in &b.invariants {
                prop_assert!((inv.check)(&c0, e.config(t), e.step(t), e.config(t + 1)), "{} at step {t}", inv.name);
            }
        }
        prop_assert_eq!(decider.vote(e.last()), Some(b.decision(&c0).unwrap() as u8));
    }
}
