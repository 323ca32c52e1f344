//! Integration tests of the reaction-network model and the text format.

use crn_core::format::{parse_protocol, write_protocol};
use crn_core::model::{rational, rational_int, total_propensity, Configuration};
use crn_core::{CrnBuilder, CrnError, Multiset};
use num::Zero;
use proptest::prelude::*;

const KILL_B: &str = "\
species A B X X'
reaction beta: A + X -> 2 A
reaction beta': A + X' -> 2 A
reaction gamma: A + B -> 2 A
reaction delta: B + X -> B + X'
reaction delta': B + X' -> B + X
";

fn kill_b() -> crn_core::Crn {
    parse_protocol(KILL_B).unwrap().crn
}

#[test]
fn void_reactions_complete_every_reactant_class() {
    let crn = kill_b();
    let c = crn.parse_configuration("A + B + X + X'").unwrap();
    let phi = c.total();
    let sum = (0..crn.reaction_count()).fold(rational_int(0), |acc, r| acc + crn.propensity(r, &c, phi));
    assert_eq!(sum, total_propensity(4, 4));
    assert_eq!(total_propensity(4, 4), rational(11, 2));
}

#[test]
fn homodimer_propensity_counts_unordered_pairs() {
    let mut b = CrnBuilder::new();
    b.parse("gamma", "2 X -> X + Y");
    let crn = b.build().unwrap();
    let x = crn.sid("X").unwrap();
    let mut c = Configuration::zeros(crn.species_count());
    c.set(x, 4);
    let gamma = crn.rid("gamma").unwrap();
    assert_eq!(crn.propensity(gamma, &c, 8), rational(6, 8));
}

#[test]
fn apply_rejects_inapplicable_reactions() {
    let crn = kill_b();
    let c = crn.parse_configuration("A + X").unwrap();
    let gamma = crn.rid("gamma").unwrap();
    assert!(matches!(crn.apply(gamma, &c), Err(CrnError::Inapplicable { .. })));
}

#[test]
fn unknown_species_is_reported() {
    let crn = kill_b();
    assert!(matches!(crn.parse_configuration("A + Q"), Err(CrnError::UnknownSpecies { .. })));
}

#[test]
fn protocol_text_round_trips() {
    let doc = parse_protocol(KILL_B).unwrap();
    let again = parse_protocol(&write_protocol(&doc)).unwrap();
    assert_eq!(again.crn.species_names(), doc.crn.species_names());
    assert_eq!(again.crn.declared_count(), doc.crn.declared_count());
    for r in 0..doc.crn.reaction_count() {
        assert_eq!(again.crn.format_reaction(r), doc.crn.format_reaction(r));
    }
}

fn arb_config() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..6, 4).prop_filter("non-empty", |v| v.iter().sum::<u32>() > 0)
}

proptest! {
    #[test]
    fn propensities_sum_to_total(counts in arb_config(), extra in 0u64..5) {
        let crn = kill_b();
        let c = Configuration::new(counts);
        let phi = c.total() + extra;
        let sum = (0..crn.reaction_count()).fold(rational_int(0), |acc, r| acc + crn.propensity(r, &c, phi));
        prop_assert_eq!(sum, total_propensity(c.total(), phi));
    }

    #[test]
    fn applicable_iff_positive_propensity(counts in arb_config()) {
        let crn = kill_b();
        let c = Configuration::new(counts);
        for r in 0..crn.reaction_count() {
            let positive = !crn.propensity(r, &c, c.total()).is_zero();
            prop_assert_eq!(crn.is_applicable(r, &c), positive);
        }
    }

    #[test]
    fn apply_follows_the_stoichiometry(counts in arb_config()) {
        let crn = kill_b();
        let c = Configuration::new(counts);
        for r in crn.applicable(&c) {
            let next = crn.apply(r, &c).unwrap();
            let reaction = crn.reaction(r);
            for s in 0..crn.species_count() {
                let expected = c.get(s) as i64 - reaction.reactants.get(s) as i64 + reaction.products.get(s) as i64;
                prop_assert_eq!(next.get(s) as i64, expected);
            }
            prop_assert_eq!(next.total(), c.total());
        }
    }

    #[test]
    fn configuration_text_round_trips(counts in arb_config()) {
        let crn = kill_b();
        let c = Configuration::new(counts);
        let text = crn.format_configuration(&c);
        prop_assert_eq!(crn.parse_configuration(&text).unwrap(), c);
    }

    #[test]
    fn multiset_totals_add(a in 0u32..5, b in 0u32..5) {
        let m = Multiset::from_pairs([(0, a), (1, b)]);
        prop_assert_eq!(m.total(), a + b);
    }
}
