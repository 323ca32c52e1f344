//! Vote amplification: a protocol driving every fluid voter to the side of
//! the permanent voters, and the compiler that attaches it to a decider.

use std::sync::Arc;

use num::{Integer, ToPrimitive};

use crate::digraph::Mode;
use crate::error::{CrnError, Result};
use crate::model::{rational_int, Configuration, CrdSpec, CrnBuilder, Multiset, Rational, ReactionId, SpeciesId};
use crate::runtime::RuntimePolicy;

use super::crd::{crd_bundle, embed, finish_embedding};
use super::{compositions, Expected, IgnitionGadget, InitialFamily, Invariant, ProtocolBundle, TargetFactory};

/// Fluid voter names, in the order `H0, L0, L1, H1`.
pub const FLUID: [&str; 4] = ["H0", "L0", "L1", "H1"];

/// Score of the fluid voters `H0, L0, L1, H1` for a 1-voting configuration;
/// a 0-voting configuration uses the mirrored table.
pub const SCORE: [i64; 4] = [-4, -1, 1, 2];

/// Adds the amplification reactions over the given permanent voter species
/// and fluid species `[H0, L0, L1, H1]`; returns the new reaction positions.
fn add_va_reactions(bld: &mut CrnBuilder, perm: [&[SpeciesId]; 2], fluid: [SpeciesId; 4], names: &dyn Fn(SpeciesId) -> String) -> Vec<usize> {
    let [h0, l0, l1, h1] = fluid;
    let h = [h0, h1];
    let l = [l0, l1];
    let mut out = Vec::new();
    for v in 0..2 {
        for &p in perm[v] {
            for a in [h[1 - v], l0, l1] {
                let name = format!("beta_{v}_{}_{}", names(p), names(a));
                out.push(bld.reaction(Some(name), Multiset::pair(p, a), Multiset::pair(p, h[v])));
            }
        }
    }
    out.push(bld.reaction(Some("gamma".into()), Multiset::pair(h0, h1), Multiset::pair(l0, l1)));
    for v in 0..2 {
        out.push(bld.reaction(Some(format!("delta_{v}")), Multiset::pair(h[v], l[1 - v]), Multiset::pair(l[v], l[v])));
    }
    out
}

/// The vote amplification protocol over permanent voter species `p0`, `p1`
/// and fluid voters `H0, L0, L1, H1`.
pub fn va_protocol(p0: &[String], p1: &[String]) -> Result<ProtocolBundle> {
    if p0.iter().any(|p| p1.contains(p)) {
        return Err(CrnError::invalid("permanent voter sets must be disjoint"));
    }
    if p0.is_empty() || p1.is_empty() {
        return Err(CrnError::invalid("each permanent voter set needs a species"));
    }
    if p0.iter().chain(p1).any(|p| FLUID.contains(&p.as_str())) {
        return Err(CrnError::invalid("permanent voter names clash with fluid voters"));
    }
    let mut bld = CrnBuilder::new();
    let perm0: Vec<SpeciesId> = p0.iter().map(|n| bld.species(n)).collect();
    let perm1: Vec<SpeciesId> = p1.iter().map(|n| bld.species(n)).collect();
    let fluid = FLUID.map(|n| bld.species(n));
    let all_names: Vec<String> = p0.iter().chain(p1).cloned().chain(FLUID.iter().map(|s| s.to_string())).collect();
    add_va_reactions(&mut bld, [&perm0, &perm1], fluid, &|s| all_names[s].clone());
    let crn = bld.build_with_density(rational_int(1))?;
    let species_count = crn.species_count();

    let q1 = perm1.clone();
    let target: TargetFactory = Arc::new(move |c0: &Configuration| {
        let v = if c0.count_of(&q1) > 0 { 1 } else { 0 };
        let losers = if v == 1 { [fluid[0], fluid[1]] } else { [fluid[2], fluid[3]] };
        Arc::new(move |c: &Configuration| c.count_of(&losers) == 0)
    });
    let (q0b, q1b) = (perm0.clone(), perm1.clone());
    let initial: InitialFamily = Arc::new(move |n: u64| {
        let mut out = Vec::new();
        let n = n as u32;
        for perm in [&q0b, &q1b] {
            for p in 1..=n / 2 {
                for split in compositions(p, perm.len()) {
                    for fl in compositions(n - p, 4) {
                        let mut c = Configuration::zeros(species_count);
                        for (&s, &k) in perm.iter().zip(&split) {
                            c.add(s, k);
                        }
                        for (&s, &k) in fluid.iter().zip(&fl) {
                            c.add(s, k);
                        }
                        out.push(c);
                    }
                }
            }
        }
        out
    });
    let expected = Expected { mode: Mode::Stab, weak: true, strong: true, runtime: "O(n)".into() };
    let mut bundle = ProtocolBundle::basic(
        "va",
        "vote amplification with high and low confidence fluid voters",
        crn,
        expected,
        target,
        initial,
    );
    bundle.invariants = va_invariants(perm0, perm1, fluid);
    Ok(bundle)
}

/// Total score of the fluid voters of `c`, oriented by the vote of `c0`.
pub fn va_score(perm1: &[SpeciesId], fluid: [SpeciesId; 4], c0: &Configuration, c: &Configuration) -> i64 {
    let one = c0.count_of(perm1) > 0;
    fluid
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let w = if one { SCORE[i] } else { SCORE[3 - i] };
            w * c.get(s) as i64
        })
        .sum()
}

fn va_invariants(perm0: Vec<SpeciesId>, perm1: Vec<SpeciesId>, fluid: [SpeciesId; 4]) -> Vec<Invariant> {
    let p1 = perm1.clone();
    let perm: Vec<SpeciesId> = perm0.into_iter().chain(perm1).collect();
    vec![
        Invariant {
            name: "fluid and permanent counts constant".into(),
            check: Arc::new(move |_, before, _, after| {
                before.count_of(&fluid) == after.count_of(&fluid) && perm.iter().all(|&s| before.get(s) == after.get(s))
            }),
        },
        Invariant {
            name: "score increases exactly on non-void steps".into(),
            check: Arc::new(move |c0, before, _, after| {
                let s0 = va_score(&p1, fluid, c0, before);
                let s1 = va_score(&p1, fluid, c0, after);
                if before == after {
                    s1 == s0
                } else {
                    s1 > s0
                }
            }),
        },
    ]
}

/// `⌈1/ε⌉` for a positive rational `ε`.
pub fn amplification_factor(epsilon: &Rational) -> Result<u32> {
    if *epsilon <= rational_int(0) {
        return Err(CrnError::invalid("epsilon must be positive"));
    }
    let (q, r) = epsilon.denom().div_rem(epsilon.numer());
    let k = if r == num::BigInt::from(0) { q } else { q + 1 };
    k.to_u32().filter(|&k| k <= 64).ok_or_else(|| CrnError::invalid("1/epsilon is too large"))
}

/// Attach vote amplification to a haltingly correct decider: every species
/// `A` of the decider ignites into its renamed copy `A'` plus `⌈1/ε⌉` fluid
/// voters, the voters of the renamed decider act as permanent voters, and
/// the voters of the result are the permanent and fluid voters.
pub fn vote_amplified_compile(crd_bundle_in: &ProtocolBundle, epsilon: &Rational) -> Result<ProtocolBundle> {
    let crd = crd_bundle_in.crd.as_ref().ok_or_else(|| CrnError::invalid("vote amplification needs a decider"))?;
    let k = amplification_factor(epsilon)?;
    let sub = crd_bundle_in.crn.clone();
    for s in 0..sub.species_count() {
        let n = sub.species_name(s);
        if FLUID.contains(&n) || n.ends_with('\'') {
            return Err(CrnError::invalid(format!("species name '{n}' clashes with the amplifier")));
        }
    }
    let mut bld = CrnBuilder::new();
    let orig: Vec<SpeciesId> = (0..sub.species_count()).map(|s| bld.species(sub.species_name(s))).collect();
    let (primed, r_sub) = embed(&mut bld, &sub, "'");
    let fluid = FLUID.map(|n| bld.species(n));
    for (s, &o) in orig.iter().enumerate() {
        let mut p = Multiset::single(primed[s]);
        p.add(fluid[1], k);
        bld.reaction(Some(format!("iota_{}", sub.species_name(s))), Multiset::single(o), p);
    }
    let perm0: Vec<SpeciesId> = crd.voters0.iter().map(|&s| primed[s]).collect();
    let perm1: Vec<SpeciesId> = crd.voters1.iter().map(|&s| primed[s]).collect();
    let mut names_snapshot: Vec<String> = sub.species_names().into_iter().collect();
    names_snapshot.extend(sub.species_names().into_iter().map(|n| format!("{n}'")));
    names_snapshot.extend(FLUID.iter().map(|s| s.to_string()));
    let amp = add_va_reactions(&mut bld, [&perm0, &perm1], fluid, &|s| names_snapshot[s].clone());
    let density = sub.density_bound() + rational_int(k as u64);
    let crn = bld.build_with_density(density)?;
    let e = finish_embedding(&sub, primed.clone(), &r_sub);
    let inner = crd_bundle_in.policy.lift(e.species.clone(), e.reactions.clone());
    let amp_ids: Vec<ReactionId> = amp.iter().map(|&i| i as ReactionId).collect();
    let sp = e.species.clone();
    let orig_ids = orig.clone();
    let ignite: Vec<ReactionId> = {
        let g = IgnitionGadget::detect(&crn);
        g.reactions.iter().filter(|(s, _)| orig_ids.contains(s)).map(|&(_, r)| r).collect()
    };
    let policy = RuntimePolicy::new("va-compiled", move |c| {
        if c.count_of(&orig_ids) > 0 {
            ignite.clone()
        } else if !sub.is_halting(&c.restrict(&sp)) {
            inner.targets(c)
        } else {
            amp_ids.clone()
        }
    });
    let mut voters0 = perm0.clone();
    voters0.extend([fluid[0], fluid[1]]);
    let mut voters1 = perm1.clone();
    voters1.extend([fluid[2], fluid[3]]);
    let context = crd.context.map_species(|s| orig[s]);
    let inputs: Vec<SpeciesId> = crd.inputs.iter().map(|&s| orig[s]).collect();
    let spec = CrdSpec::new(inputs, voters0, voters1, orig[crd.fuel], context)?;
    let mut bundle = crd_bundle(
        format!("va-compiled({})", crd_bundle_in.name),
        format!("vote amplified [{}] with epsilon {}", crd_bundle_in.description, epsilon),
        crn,
        spec,
        crd_bundle_in.input_names.clone(),
        crd_bundle_in.oracle.clone().expect("decider bundle"),
        crd_bundle_in.predicate.clone(),
        policy,
        &format!("{} + O(n)", crd_bundle_in.expected.runtime),
    );
    bundle.expected.mode = Mode::Stab;
    Ok(bundle)
}

/// Number of molecules of `c` that are not voters of `crd`.
pub fn non_voter_count(crd: &CrdSpec, c: &Configuration) -> u64 {
    c.total() - c.count_of(&crd.voters0) - c.count_of(&crd.voters1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digraph::{check_weak_correctness, explore};
    use crate::model::rational;
    use crate::protocols::crd::threshold_crd;

    fn va() -> ProtocolBundle {
        va_protocol(&["P0".to_string()], &["P1".to_string()]).unwrap()
    }

    #[test]
    fn every_non_void_reaction_raises_the_score() {
        let b = va();
        let p1 = vec![b.crn.sid("P1").unwrap()];
        let fluid = FLUID.map(|n| b.crn.sid(n).unwrap());
        let c0 = b.crn.parse_configuration("P1 + H0").unwrap();
        let c = b.crn.parse_configuration("P1 + H0 + L0 + L1 + H1").unwrap();
        for &r in b.crn.non_void() {
            if b.crn.is_applicable(r, &c) {
                let next = b.crn.apply(r, &c).unwrap();
                assert!(va_score(&p1, fluid, &c0, &next) > va_score(&p1, fluid, &c0, &c), "{}", b.crn.reaction_label(r));
            }
        }
    }

    #[test]
    fn amplifies_both_votes() {
        let b = va();
        for n in 2..=6 {
            for c0 in b.initial_configs(n) {
                let a = explore(&b.crn, &c0, 100_000).unwrap();
                let z = a.mask(&*b.target_of(&c0));
                assert!(check_weak_correctness(&b.crn, &a, &z, Mode::Stab).correct);
            }
        }
    }

    #[test]
    fn ignition_produces_ceil_inverse_epsilon_fluid() {
        let t = threshold_crd(&["X".to_string()], &[1], 1).unwrap();
        let c = vote_amplified_compile(&t, &rational(1, 2)).unwrap();
        let r = c.rid("iota_X");
        assert_eq!(c.crn.format_reaction(r), "X -> X' + 2 L0");
        assert_eq!(amplification_factor(&rational(2, 5)).unwrap(), 3);
    }

    #[test]
    fn amplifier_never_changes_the_decider_part() {
        let t = threshold_crd(&["X".to_string()], &[1], 1).unwrap();
        let c = vote_amplified_compile(&t, &rational(1, 1)).unwrap();
        let primed: Vec<SpeciesId> = (0..t.crn.species_count())
            .map(|s| c.crn.sid(&format!("{}'", t.crn.species_name(s))).unwrap())
            .collect();
        for name in FLUID {
            let s = c.crn.sid(name).unwrap();
            for &r in c.crn.non_void_with_reactant(s) {
                let rx = c.crn.reaction(r);
                assert!(primed.iter().all(|&p| rx.reactants.get(p) == rx.products.get(p)));
            }
        }
    }

    #[test]
    fn compiled_decider_is_correct_on_small_inputs() {
        let t = threshold_crd(&["X".to_string()], &[1], 1).unwrap();
        let c = vote_amplified_compile(&t, &rational(1, 1)).unwrap();
        for n in 1..=3 {
            for c0 in c.initial_configs(n) {
                let m = c.ignition.mature(&c.crn, &c0);
                let a = explore(&c.crn, &m, 200_000).unwrap();
                let z = a.mask(&*c.target_of(&c0));
                assert!(check_weak_correctness(&c.crn, &a, &z, Mode::Stab).correct, "{}", c.crn.format_configuration(&c0));
            }
        }
    }
}
