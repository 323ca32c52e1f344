//! Chemical reaction deciders: the threshold and modulo constructions, the
//! Boolean closure, negation by voter swap, and the detection construction.

use std::sync::Arc;

use crate::digraph::Mode;
use crate::error::{CrnError, Result};
use crate::model::{
    rational_int, Configuration, CrdSpec, Crn, CrnBuilder, InputPredicate, Multiset, ReactionId, SpeciesId,
};
use crate::predicate::{input_predicate, Predicate, PredicateAst};
use crate::runtime::RuntimePolicy;

use super::{compositions, Expected, IgnitionGadget, InitialFamily, Invariant, ProtocolBundle};

/// Largest charge bound `s` accepted by [`threshold_crd`].
pub const MAX_THRESHOLD_S: i64 = 16;

/// Largest input alphabet accepted by [`detection_crd`].
pub const MAX_DETECTION_INPUTS: usize = 6;

/// Fuel cap of the generated initial family: `c0(F) ≤ 4‖x‖ + 4`.
pub fn fuel_cap(input_total: u32) -> u32 {
    4 * input_total + 4
}

/// Valid initial configurations of a CRD with molecular count `n`: every
/// input vector `x` and fuel `f` with `‖x‖ + f + ‖k‖ = n` and
/// `1 ≤ f ≤ 4‖x‖ + 4`.
pub fn crd_initial_family(crd: &CrdSpec, species_count: usize) -> InitialFamily {
    let crd = crd.clone();
    Arc::new(move |n: u64| {
        let k = crd.context.total() as u64;
        let mut out = Vec::new();
        if n <= k {
            return out;
        }
        let free = (n - k) as u32;
        for f in 1..=free {
            let xs = free - f;
            if f > fuel_cap(xs) {
                continue;
            }
            for x in compositions(xs, crd.inputs.len()) {
                out.push(crd.initial(species_count, &x, f));
            }
        }
        out
    })
}

/// Assemble a decider bundle from its parts.
#[allow(clippy::too_many_arguments)]
pub(crate) fn crd_bundle(
    name: String,
    description: String,
    crn: Crn,
    crd: CrdSpec,
    input_names: Vec<String>,
    oracle: InputPredicate,
    predicate: Option<Predicate>,
    policy: RuntimePolicy,
    runtime: &str,
) -> ProtocolBundle {
    let crn = Arc::new(crn);
    let ignition = IgnitionGadget::detect(&crn);
    let initial = crd_initial_family(&crd, crn.species_count());
    let mut bundle = ProtocolBundle {
        name,
        description,
        crn,
        crd: Some(crd),
        interface: None,
        input_names,
        policy,
        policies: Vec::new(),
        adversaries: Vec::new(),
        expected: Expected { mode: Mode::Halt, weak: true, strong: true, runtime: runtime.to_string() },
        target: Arc::new(|_| Arc::new(|_| false)),
        initial,
        weak_for: None,
        oracle: Some(oracle),
        predicate,
        ignition,
        invariants: Vec::new(),
    };
    refresh_decision(&mut bundle);
    bundle
}

/// Recompute the target factory and interface from the oracle.
fn refresh_decision(bundle: &mut ProtocolBundle) {
    let crd = bundle.crd.clone().expect("decider bundle");
    let oracle = bundle.oracle.clone().expect("decider bundle");
    let o = oracle.clone();
    let c = crd.clone();
    bundle.target = Arc::new(move |c0: &Configuration| c.target(o(&c.input_vector(c0)) as u8));
    bundle.interface = bundle.predicate.as_ref().map(|p| {
        crd.interface(bundle.crn.species_count(), oracle.clone(), format!("decide {}", p.to_text()), &bundle.input_names)
    });
}

/// Record the predicate a compiled bundle decides.
pub fn attach_predicate(bundle: &mut ProtocolBundle, p: &Predicate) {
    bundle.predicate = Some(p.clone());
    bundle.input_names = p.inputs.clone();
    bundle.oracle = Some(input_predicate(p));
    refresh_decision(bundle);
}

fn check_reserved(inputs: &[String], reserved: &dyn Fn(&str) -> bool) -> Result<()> {
    if inputs.is_empty() {
        return Err(CrnError::invalid("a decider needs at least one input species"));
    }
    for (i, name) in inputs.iter().enumerate() {
        if reserved(name) || inputs[..i].contains(name) {
            return Err(CrnError::invalid(format!("input name '{name}' is reserved or repeated")));
        }
    }
    Ok(())
}

/// Policy wrapper: the ignition reactions while ignition species remain,
/// and `rest` afterwards.
pub(crate) fn ignition_first(
    name: &str,
    gadget: IgnitionGadget,
    rest: impl Fn(&Configuration) -> Vec<ReactionId> + Send + Sync + 'static,
) -> RuntimePolicy {
    let ids = gadget.reaction_ids();
    RuntimePolicy::new(name, move |c| if gadget.is_mature(c) { rest(c) } else { ids.clone() })
}

fn threshold_name(u: i64) -> String {
    format!("L_{u}")
}

fn y_name(j: i64) -> &'static str {
    match j {
        -1 => "Y_-1",
        0 => "Y_0",
        _ => "Y_+1",
    }
}

/// Charge bound `s = max(|b| + 1, max |a(A)|)` of the threshold construction.
pub fn threshold_s(a: &[i64], b: i64) -> i64 {
    a.iter().map(|x| x.abs()).max().unwrap_or(0).max(b.abs() + 1)
}

/// Leaderless CRD deciding `a·x < b` by charge cancellation with a single
/// surviving leader `L_u`.
pub fn threshold_crd(inputs: &[String], a: &[i64], b: i64) -> Result<ProtocolBundle> {
    check_reserved(inputs, &|n| n == "F" || n.starts_with("L_") || n.starts_with("Y_"))?;
    if a.len() != inputs.len() {
        return Err(CrnError::invalid("coefficient vector and inputs differ in length"));
    }
    let s = threshold_s(a, b);
    if s > MAX_THRESHOLD_S {
        return Err(CrnError::Guard { message: format!("threshold charge bound {s} exceeds {MAX_THRESHOLD_S}") });
    }
    let mut bld = CrnBuilder::new();
    let input_ids: Vec<SpeciesId> = inputs.iter().map(|n| bld.species(n)).collect();
    let f = bld.species("F");
    let l: Vec<SpeciesId> = (-s..=s).map(|u| bld.species(&threshold_name(u))).collect();
    let li = |u: i64| l[(u + s) as usize];
    let y: Vec<SpeciesId> = (-1..=1).map(|j| bld.species(y_name(j))).collect();
    let yi = |j: i64| y[(j + 1) as usize];

    for (i, name) in inputs.iter().enumerate() {
        bld.reaction(Some(format!("iota_{name}")), Multiset::single(input_ids[i]), Multiset::single(li(a[i])));
    }
    bld.reaction(Some("iota_F".into()), Multiset::single(f), Multiset::single(li(0)));

    let mut beta_all = Vec::new();
    let mut beta_opp = Vec::new();
    for u in -s..=s {
        for v in u..=s {
            let sum = u + v;
            let idx = if sum.abs() <= s {
                let mut p = Multiset::single(li(sum));
                p.add(yi(0), 1);
                bld.reaction(Some(format!("beta_{u}_{v}")), Multiset::pair(li(u), li(v)), p)
            } else {
                let sg = sum.signum();
                let mut p = Multiset::single(li(sg * s));
                p.add(yi(sg), (sum.abs() - s) as u32);
                bld.reaction(Some(format!("betahat_{u}_{v}")), Multiset::pair(li(u), li(v)), p)
            };
            beta_all.push(idx);
            if u.signum() * v.signum() == -1 {
                beta_opp.push(idx);
            }
        }
    }
    let gamma = bld.reaction(Some("gamma".into()), Multiset::pair(yi(-1), yi(1)), Multiset::pair(yi(0), yi(0)));
    let mut delta_all = Vec::new();
    let mut delta_opp = Vec::new();
    for u in -s..=s {
        for j in [-1i64, 1] {
            if (u + j).abs() <= s {
                let mut p = Multiset::single(li(u + j));
                p.add(yi(0), 1);
                let idx = bld.reaction(Some(format!("delta_{u}_{}", if j < 0 { "-1" } else { "+1" })), Multiset::pair(li(u), yi(j)), p);
                delta_all.push(idx);
                if u.signum() * j == -1 {
                    delta_opp.push(idx);
                }
            }
        }
    }
    let crn = bld.build_with_density(rational_int((s + 1) as u64))?;
    let by_pos = |idx: &[usize]| -> Vec<ReactionId> { idx.iter().map(|&i| i as ReactionId).collect() };
    let (beta_all, beta_opp, delta_all, delta_opp) = (by_pos(&beta_all), by_pos(&beta_opp), by_pos(&delta_all), by_pos(&delta_opp));
    let gamma = gamma as ReactionId;

    let mut charge = vec![0i64; crn.species_count()];
    for (i, &sp) in input_ids.iter().enumerate() {
        charge[sp] = a[i];
    }
    for u in -s..=s {
        charge[li(u)] = u;
    }
    charge[yi(-1)] = -1;
    charge[yi(1)] = 1;
    let l_ids = l.clone();
    let ch = charge.clone();
    let gadget = IgnitionGadget::detect(&crn);
    let policy = ignition_first("threshold", gadget, move |c| {
        let (pos, neg) = charges(&ch, c);
        if pos > 0 && neg > 0 {
            let mut q = beta_opp.clone();
            q.push(gamma);
            q.extend(&delta_opp);
            q
        } else if c.count_of(&l_ids) > 1 {
            beta_all.clone()
        } else {
            delta_all.clone()
        }
    });
    let voters0: Vec<SpeciesId> = (-s..=s).filter(|&u| u >= b).map(li).collect();
    let voters1: Vec<SpeciesId> = (-s..=s).filter(|&u| u < b).map(li).collect();
    let crd = CrdSpec::new(input_ids, voters0, voters1, f, Multiset::new())?;
    let predicate = Predicate { inputs: inputs.to_vec(), ast: PredicateAst::Threshold { a: a.to_vec(), b } };
    let oracle = input_predicate(&predicate);
    let mut bundle = crd_bundle(
        "threshold".into(),
        format!("leaderless threshold decider for {}", predicate.to_text()),
        crn,
        crd,
        inputs.to_vec(),
        oracle,
        Some(predicate),
        policy,
        "O(n)",
    );
    bundle.invariants = threshold_invariants(charge);
    Ok(bundle)
}

/// Positive and negative charge totals `(χ⁺(c), χ⁻(c))`.
fn charges(charge: &[i64], c: &Configuration) -> (i64, i64) {
    let mut pos = 0;
    let mut neg = 0;
    for (s, &q) in charge.iter().enumerate() {
        let k = c.get(s) as i64;
        if q > 0 {
            pos += q * k;
        } else {
            neg -= q * k;
        }
    }
    (pos, neg)
}

fn threshold_invariants(charge: Vec<i64>) -> Vec<Invariant> {
    let ch = charge.clone();
    let total = move |c: &Configuration| -> i64 { ch.iter().enumerate().map(|(s, &q)| q * c.get(s) as i64).sum() };
    let ch2 = charge;
    vec![
        Invariant {
            name: "charge conservation".into(),
            check: Arc::new(move |c0, _, _, after| total(after) == total(c0)),
        },
        Invariant {
            name: "positive and negative charge non-increasing".into(),
            check: Arc::new(move |_, before, _, after| {
                let (p0, n0) = charges(&ch2, before);
                let (p1, n1) = charges(&ch2, after);
                p1 <= p0 && n1 <= n0
            }),
        },
    ]
}

/// Leaderless CRD deciding `a·x ≡ b (mod m)` by summing charges modulo `m`.
pub fn modulo_crd(inputs: &[String], a: &[i64], b: i64, m: u64) -> Result<ProtocolBundle> {
    check_reserved(inputs, &|n| n == "F" || n == "Y" || n.starts_with("L_"))?;
    if a.len() != inputs.len() {
        return Err(CrnError::invalid("coefficient vector and inputs differ in length"));
    }
    if m == 0 || m > 64 {
        return Err(CrnError::invalid("modulus must lie in 1..=64"));
    }
    let mi = m as i64;
    let mut bld = CrnBuilder::new();
    let input_ids: Vec<SpeciesId> = inputs.iter().map(|n| bld.species(n)).collect();
    let f = bld.species("F");
    let l: Vec<SpeciesId> = (0..mi).map(|u| bld.species(&threshold_name(u))).collect();
    let y = bld.species("Y");
    for (i, name) in inputs.iter().enumerate() {
        bld.reaction(Some(format!("iota_{name}")), Multiset::single(input_ids[i]), Multiset::single(l[a[i].rem_euclid(mi) as usize]));
    }
    bld.reaction(Some("iota_F".into()), Multiset::single(f), Multiset::single(l[0]));
    let mut betas = Vec::new();
    for u in 0..mi {
        for v in u..mi {
            let mut p = Multiset::single(l[((u + v) % mi) as usize]);
            p.add(y, 1);
            betas.push(bld.reaction(Some(format!("beta_{u}_{v}")), Multiset::pair(l[u as usize], l[v as usize]), p) as ReactionId);
        }
    }
    let crn = bld.build_with_density(rational_int(1))?;
    let gadget = IgnitionGadget::detect(&crn);
    let policy = ignition_first("modulo", gadget, move |_| betas.clone());
    let target = l[b.rem_euclid(mi) as usize];
    let voters1 = vec![target];
    let voters0: Vec<SpeciesId> = l.iter().copied().filter(|&s| s != target).collect();
    let crd = CrdSpec::new(input_ids.clone(), voters0, voters1, f, Multiset::new())?;
    let predicate = Predicate { inputs: inputs.to_vec(), ast: PredicateAst::Modulo { a: a.to_vec(), b, m } };
    let oracle = input_predicate(&predicate);
    let mut bundle = crd_bundle(
        "modulo".into(),
        format!("leaderless modulo decider for {}", predicate.to_text()),
        crn,
        crd,
        inputs.to_vec(),
        oracle,
        Some(predicate),
        policy,
        "O(n)",
    );
    let mut charge = vec![0i64; bundle.crn.species_count()];
    for (i, &sp) in input_ids.iter().enumerate() {
        charge[sp] = a[i];
    }
    for (u, &sp) in l.iter().enumerate() {
        charge[sp] = u as i64;
    }
    let total = move |c: &Configuration| -> i64 {
        charge.iter().enumerate().map(|(s, &q)| q * c.get(s) as i64).sum::<i64>().rem_euclid(mi)
    };
    bundle.invariants = vec![Invariant {
        name: "charge conservation modulo m".into(),
        check: Arc::new(move |c0, _, _, after| total(after) == total(c0)),
    }];
    Ok(bundle)
}

/// Negation: the same protocol with the voter sets swapped.
pub fn negate(mut bundle: ProtocolBundle) -> ProtocolBundle {
    let crd = bundle.crd.as_mut().expect("negate requires a decider");
    std::mem::swap(&mut crd.voters0, &mut crd.voters1);
    let inner = bundle.oracle.clone().expect("decider bundle");
    bundle.oracle = Some(Arc::new(move |x: &[u64]| !inner(x)));
    bundle.predicate = bundle
        .predicate
        .take()
        .map(|p| Predicate { inputs: p.inputs, ast: PredicateAst::Not(Box::new(p.ast)) });
    bundle.name = format!("not-{}", bundle.name);
    bundle.description = format!("negation of: {}", bundle.description);
    refresh_decision(&mut bundle);
    bundle
}

/// Species and reaction embedding of a renamed sub-protocol.
pub(crate) struct Embedding {
    pub(crate) species: Vec<SpeciesId>,
    pub(crate) reactions: Vec<Option<ReactionId>>,
}

/// Copy every species (suffixed with `suffix`) and declared non-void
/// reaction of `crn` into `bld`.
pub(crate) fn embed(bld: &mut CrnBuilder, crn: &Crn, suffix: &str) -> (Vec<SpeciesId>, Vec<(ReactionId, usize)>) {
    let species: Vec<SpeciesId> =
        (0..crn.species_count()).map(|s| bld.species(&format!("{}{suffix}", crn.species_name(s)))).collect();
    let mut reactions = Vec::new();
    for &r in crn.non_void() {
        let rx = crn.reaction(r);
        let name = rx.name.as_ref().map(|n| format!("{n}{suffix}"));
        let pos = bld.reaction(name, rx.reactants.map_species(|s| species[s]), rx.products.map_species(|s| species[s]));
        reactions.push((r, pos));
    }
    (species, reactions)
}

pub(crate) fn finish_embedding(crn: &Crn, species: Vec<SpeciesId>, reactions: &[(ReactionId, usize)]) -> Embedding {
    let mut map = vec![None; crn.reaction_count()];
    for &(r, pos) in reactions {
        map[r] = Some(pos as ReactionId);
    }
    Embedding { species, reactions: map }
}

/// The Boolean closure: runs both deciders on copies of the input and
/// records their votes in a single surviving global voter `G_{u1,u2}`,
/// which votes `ξ(u1, u2)`.
pub fn combine_boolean(b1: &ProtocolBundle, b2: &ProtocolBundle, xi: [[bool; 2]; 2]) -> Result<ProtocolBundle> {
    let (c1, c2) = match (&b1.crd, &b2.crd) {
        (Some(c1), Some(c2)) => (c1, c2),
        _ => return Err(CrnError::invalid("the Boolean closure combines deciders")),
    };
    if b1.input_names != b2.input_names {
        return Err(CrnError::invalid("the Boolean closure requires equal input alphabets"));
    }
    if !c1.context.is_empty() || !c2.context.is_empty() {
        return Err(CrnError::invalid("the Boolean closure requires leaderless deciders"));
    }
    let inputs = b1.input_names.clone();
    let g_names = ["G00", "G01", "G10", "G11"];
    check_reserved(&inputs, &|n| n == "F" || n == "W" || g_names.contains(&n) || n.contains('~'))?;
    let mut bld = CrnBuilder::new();
    let input_ids: Vec<SpeciesId> = inputs.iter().map(|n| bld.species(n)).collect();
    let f = bld.species("F");
    let (s1, r1) = embed(&mut bld, &b1.crn, "~1");
    let (s2, r2) = embed(&mut bld, &b2.crn, "~2");
    let g: Vec<SpeciesId> = g_names.iter().map(|n| bld.species(n)).collect();
    let gi = |u1: usize, u2: usize| g[2 * u1 + u2];
    let w = bld.species("W");
    for (i, name) in inputs.iter().enumerate() {
        let mut p = Multiset::single(s1[c1.inputs[i]]);
        p.add(s2[c2.inputs[i]], 1);
        bld.reaction(Some(format!("iota_{name}")), Multiset::single(input_ids[i]), p);
    }
    let mut p = Multiset::single(s1[c1.fuel]);
    p.add(s2[c2.fuel], 1);
    p.add(gi(0, 0), 1);
    bld.reaction(Some("iota_F".into()), Multiset::single(f), p);
    let mut betas = Vec::new();
    for x in 0..4 {
        for y in x..4 {
            let mut p = Multiset::single(gi(0, 0));
            p.add(w, 1);
            betas.push(bld.reaction(Some(format!("beta_{}_{}", g_names[x], g_names[y])), Multiset::pair(g[x], g[y]), p) as ReactionId);
        }
    }
    let mut gammas = Vec::new();
    for u1 in 0..2 {
        for u2 in 0..2 {
            let opp1 = if u1 == 0 { &c1.voters1 } else { &c1.voters0 };
            for &v in opp1 {
                let name = format!("gamma1_{}_{}", g_names[2 * u1 + u2], bld_name(&b1.crn, v, "~1"));
                gammas.push(bld.reaction(
                    Some(name),
                    Multiset::pair(gi(u1, u2), s1[v]),
                    Multiset::pair(gi(1 - u1, u2), s1[v]),
                ) as ReactionId);
            }
            let opp2 = if u2 == 0 { &c2.voters1 } else { &c2.voters0 };
            for &v in opp2 {
                let name = format!("gamma2_{}_{}", g_names[2 * u1 + u2], bld_name(&b2.crn, v, "~2"));
                gammas.push(bld.reaction(
                    Some(name),
                    Multiset::pair(gi(u1, u2), s2[v]),
                    Multiset::pair(gi(u1, 1 - u2), s2[v]),
                ) as ReactionId);
            }
        }
    }
    let density = b1.crn.density_bound() + b2.crn.density_bound() + rational_int(1);
    let crn = bld.build_with_density(density)?;
    let e1 = finish_embedding(&b1.crn, s1, &r1);
    let e2 = finish_embedding(&b2.crn, s2, &r2);
    let sub1 = b1.crn.clone();
    let sub2 = b2.crn.clone();
    let p1 = b1.policy.lift(e1.species.clone(), e1.reactions.clone());
    let p2 = b2.policy.lift(e2.species.clone(), e2.reactions.clone());
    let g_ids = g.clone();
    let (sp1, sp2) = (e1.species.clone(), e2.species.clone());
    let gadget = IgnitionGadget::detect(&crn);
    let policy = ignition_first("closure", gadget, move |c| {
        if !sub1.is_halting(&c.restrict(&sp1)) {
            p1.targets(c)
        } else if !sub2.is_halting(&c.restrict(&sp2)) {
            p2.targets(c)
        } else if c.count_of(&g_ids) > 1 {
            betas.clone()
        } else {
            gammas.clone()
        }
    });
    let mut voters0 = Vec::new();
    let mut voters1 = Vec::new();
    for u1 in 0..2 {
        for u2 in 0..2 {
            if xi[u1][u2] {
                voters1.push(gi(u1, u2));
            } else {
                voters0.push(gi(u1, u2));
            }
        }
    }
    let crd = CrdSpec::new(input_ids, voters0, voters1, f, Multiset::new())?;
    let (o1, o2) = (b1.oracle.clone().expect("decider"), b2.oracle.clone().expect("decider"));
    let oracle: InputPredicate = Arc::new(move |x: &[u64]| xi[o1(x) as usize][o2(x) as usize]);
    let predicate = match (&b1.predicate, &b2.predicate) {
        (Some(p), Some(q)) if xi == [[false, false], [false, true]] => {
            Some(Predicate { inputs: inputs.clone(), ast: PredicateAst::And(Box::new(p.ast.clone()), Box::new(q.ast.clone())) })
        }
        (Some(p), Some(q)) if xi == [[false, true], [true, true]] => {
            Some(Predicate { inputs: inputs.clone(), ast: PredicateAst::Or(Box::new(p.ast.clone()), Box::new(q.ast.clone())) })
        }
        _ => None,
    };
    let runtime = format!("O({} + {} + n)", b1.expected.runtime, b2.expected.runtime);
    Ok(crd_bundle(
        format!("closure({},{})", b1.name, b2.name),
        format!("Boolean closure of [{}] and [{}]", b1.description, b2.description),
        crn,
        crd,
        inputs,
        oracle,
        predicate,
        policy,
        &runtime,
    ))
}

fn bld_name(crn: &Crn, s: SpeciesId, suffix: &str) -> String {
    format!("{}{suffix}", crn.species_name(s))
}

/// Bit string name of a presence vector `u` over `k` inputs.
fn detection_name(u: usize, k: usize) -> String {
    let bits: String = (0..k).map(|i| if u >> i & 1 == 1 { '1' } else { '0' }).collect();
    format!("D_{bits}")
}

/// Leaderless CRD deciding a detection predicate given as a truth table
/// `psi[u]` over presence vectors (bit `i` of `u` is set when input `i` is
/// present), by spreading the bitwise OR of the presence vectors.
pub fn detection_crd(inputs: &[String], psi: &[bool]) -> Result<ProtocolBundle> {
    check_reserved(inputs, &|n| n == "F" || n.starts_with("D_"))?;
    let k = inputs.len();
    if k > MAX_DETECTION_INPUTS {
        return Err(CrnError::Guard { message: format!("detection over {k} inputs exceeds {MAX_DETECTION_INPUTS}") });
    }
    if psi.len() != 1 << k {
        return Err(CrnError::invalid(format!("detection table needs {} entries", 1 << k)));
    }
    let mut bld = CrnBuilder::new();
    let input_ids: Vec<SpeciesId> = inputs.iter().map(|n| bld.species(n)).collect();
    let f = bld.species("F");
    let d: Vec<SpeciesId> = (0..1usize << k).map(|u| bld.species(&detection_name(u, k))).collect();
    for (i, name) in inputs.iter().enumerate() {
        bld.reaction(Some(format!("iota_{name}")), Multiset::single(input_ids[i]), Multiset::single(d[1 << i]));
    }
    bld.reaction(Some("iota_F".into()), Multiset::single(f), Multiset::single(d[0]));
    for u in 0..1usize << k {
        for v in u..1usize << k {
            let w = u | v;
            if w != u || w != v {
                let name = format!("beta_{}_{}", &detection_name(u, k)[2..], &detection_name(v, k)[2..]);
                bld.reaction(Some(name), Multiset::pair(d[u], d[v]), Multiset::pair(d[w], d[w]));
            }
        }
    }
    let crn = bld.build_with_density(rational_int(1))?;
    let gadget = IgnitionGadget::detect(&crn);
    let nv = crn.non_void().to_vec();
    let policy = ignition_first("detection", gadget, move |_| nv.clone());
    let voters1: Vec<SpeciesId> = (0..1usize << k).filter(|&u| psi[u]).map(|u| d[u]).collect();
    let voters0: Vec<SpeciesId> = (0..1usize << k).filter(|&u| !psi[u]).map(|u| d[u]).collect();
    let crd = CrdSpec::new(input_ids.clone(), voters0, voters1, f, Multiset::new())?;
    let table = psi.to_vec();
    let oracle: InputPredicate = Arc::new(move |x: &[u64]| {
        let u = x.iter().enumerate().filter(|(_, &v)| v > 0).fold(0usize, |acc, (i, _)| acc | 1 << i);
        table[u]
    });
    let mut bundle = crd_bundle(
        "detection".into(),
        format!("leaderless detection decider over {}", inputs.join(",")),
        crn,
        crd,
        inputs.to_vec(),
        oracle,
        None,
        policy,
        "O(log n)",
    );
    let mut bits = vec![0usize; bundle.crn.species_count()];
    for (i, &s) in input_ids.iter().enumerate() {
        bits[s] = 1 << i;
    }
    for (u, &s) in d.iter().enumerate() {
        bits[s] = u;
    }
    let bits2 = bits.clone();
    let or = move |c: &Configuration| -> usize {
        bits.iter().enumerate().filter(|(s, _)| c.get(*s) > 0).fold(0, |acc, (_, &b)| acc | b)
    };
    let weight = move |c: &Configuration| -> u64 {
        bits2.iter().enumerate().map(|(s, &b)| c.get(s) as u64 * b.count_ones() as u64).sum()
    };
    bundle.invariants = vec![
        Invariant { name: "OR of presence vectors".into(), check: Arc::new(move |c0, _, _, after| or(after) == or(c0)) },
        Invariant {
            name: "presence weight non-decreasing".into(),
            check: Arc::new(move |_, before, _, after| weight(after) >= weight(before)),
        },
    ];
    Ok(bundle)
}

/// A Boolean connective as a truth table `xi[u1][u2]`.
pub fn truth_table(f: impl Fn(bool, bool) -> bool) -> [[bool; 2]; 2] {
    [[f(false, false), f(false, true)], [f(true, false), f(true, true)]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digraph::{check_weak_correctness, explore};

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn certify(bundle: &ProtocolBundle, c0: &Configuration) -> bool {
        let c = bundle.ignition.mature(&bundle.crn, c0);
        let analysis = explore(&bundle.crn, &c, 200_000).unwrap();
        let z = analysis.mask(&*bundle.target_of(c0));
        check_weak_correctness(&bundle.crn, &analysis, &z, Mode::Halt).correct
    }

    #[test]
    fn threshold_species_count() {
        let b = threshold_crd(&names(&["X"]), &[1], 1).unwrap();
        assert_eq!(b.crn.species_count(), 10);
        assert_eq!(threshold_s(&[1], 1), 2);
    }

    #[test]
    fn threshold_betahat_products() {
        let b = threshold_crd(&names(&["X"]), &[1], 1).unwrap();
        let c = b.crn.parse_configuration("2 L_2").unwrap();
        let r = b.rid("betahat_2_2");
        let next = b.crn.apply(r, &c).unwrap();
        assert_eq!(b.crn.format_configuration(&next), "L_2 + 2 Y_+1");
    }

    #[test]
    fn threshold_valid_initial() {
        let b = threshold_crd(&names(&["A"]), &[1], 1).unwrap();
        let crd = b.crd.as_ref().unwrap();
        assert!(crd.valid_initial(&b.crn.parse_configuration("3 A + 2 F").unwrap()));
        assert!(!crd.valid_initial(&b.crn.parse_configuration("3 A").unwrap()));
        assert!(!crd.valid_initial(&b.crn.parse_configuration("A + F + Y_0").unwrap()));
    }

    #[test]
    fn threshold_decides_small_inputs() {
        let b = threshold_crd(&names(&["X", "Z"]), &[2, -1], 1).unwrap();
        for n in 1..=6 {
            for c0 in b.initial_configs(n) {
                assert!(certify(&b, &c0), "{}", b.crn.format_configuration(&c0));
            }
        }
    }

    #[test]
    fn threshold_halts_with_saturated_leader() {
        let b = threshold_crd(&names(&["X"]), &[1], 1).unwrap();
        let c0 = b.crn.parse_configuration("5 X + F").unwrap();
        let mut rng = crate::exec::trial_rng(3, 0);
        let e = crate::exec::run_stochastic(&b.crn, &c0, &mut rng, &crate::exec::Stop::Halt, 100_000).unwrap();
        let l2 = b.crn.sid("L_2").unwrap();
        let leaders: u64 = (-2..=2).map(|u| e.last().get(b.crn.sid(&format!("L_{u}")).unwrap()) as u64).sum();
        assert_eq!(leaders, 1);
        assert_eq!(e.last().get(l2), 1);
    }

    #[test]
    fn modulo_decides_and_m_one_accepts() {
        let b = modulo_crd(&names(&["A"]), &[1], 0, 2).unwrap();
        let c0 = b.crn.parse_configuration("4 A + 3 F").unwrap();
        assert!(certify(&b, &c0));
        let one = modulo_crd(&names(&["A"]), &[1], 0, 1).unwrap();
        for c0 in one.initial_configs(5) {
            assert_eq!(one.decision(&c0), Some(true));
            assert!(certify(&one, &c0));
        }
    }

    #[test]
    fn negate_swaps_voters_only() {
        let b = modulo_crd(&names(&["A"]), &[1], 0, 2).unwrap();
        let n = negate(b.clone());
        assert_eq!(b.crn.reactions(), n.crn.reactions());
        assert_eq!(b.crd.as_ref().unwrap().voters0, n.crd.as_ref().unwrap().voters1);
        let c0 = n.crn.parse_configuration("3 A + F").unwrap();
        assert_eq!(n.decision(&c0), Some(true));
        assert!(certify(&n, &c0));
    }

    #[test]
    fn closure_and_of_threshold_and_parity() {
        let t = threshold_crd(&names(&["X"]), &[1], 2).unwrap();
        let m = modulo_crd(&names(&["X"]), &[1], 0, 2).unwrap();
        let and = combine_boolean(&t, &m, truth_table(|p, q| p && q)).unwrap();
        let c0 = and.crn.parse_configuration("F").unwrap();
        assert_eq!(and.decision(&c0), Some(true));
        for n in 1..=4 {
            for c0 in and.initial_configs(n) {
                assert!(certify(&and, &c0), "{}", and.crn.format_configuration(&c0));
            }
        }
    }

    #[test]
    fn closure_constant_false_table() {
        let t = threshold_crd(&names(&["X"]), &[1], 2).unwrap();
        let m = modulo_crd(&names(&["X"]), &[1], 0, 2).unwrap();
        let never = combine_boolean(&t, &m, truth_table(|_, _| false)).unwrap();
        assert!(never.crd.as_ref().unwrap().voters1.is_empty());
        assert!(never.predicate.is_none());
    }

    #[test]
    fn detection_spreads_or() {
        let b = detection_crd(&names(&["A", "B"]), &[false, false, false, true]).unwrap();
        let c0 = b.crn.parse_configuration("2 A + B + F").unwrap();
        let mut rng = crate::exec::trial_rng(1, 0);
        let e = crate::exec::run_stochastic(&b.crn, &c0, &mut rng, &crate::exec::Stop::Halt, 10_000).unwrap();
        assert_eq!(e.last().get(b.crn.sid("D_11").unwrap()), 4);
        let fuel_only = b.crn.parse_configuration("2 F").unwrap();
        let e = crate::exec::run_stochastic(&b.crn, &fuel_only, &mut rng, &crate::exec::Stop::Halt, 10_000).unwrap();
        assert_eq!(e.last().get(b.crn.sid("D_00").unwrap()), 2);
        assert!(certify(&b, &c0));
    }

    #[test]
    fn detection_guard() {
        let many: Vec<String> = (0..7).map(|i| format!("A{i}")).collect();
        assert!(matches!(detection_crd(&many, &[false; 128]), Err(CrnError::Guard { .. })));
    }
}
