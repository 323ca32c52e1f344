//! Worked example protocols: small networks that exhibit specific runtime
//! phenomena, each with its reference policy and scripted adversaries.

use std::sync::Arc;

use crate::digraph::Mode;
use crate::error::Result;
use crate::exec::{FnStrategy, StepView, StrategyFactory};
use crate::model::{Configuration, Crn, CrnBuilder, Multiset, ReactionId, SpeciesId};
use crate::runtime::{RuntimePolicy, SkippingPolicy};

use super::{compositions, fixed_target, Adversary, Expected, InitialFamily, ProtocolBundle, TargetFactory};

/// Wrap a deterministic choice function as a strategy factory.
pub fn scripted(
    name: &str,
    f: impl Fn(&StepView<'_>) -> ReactionId + Send + Sync + 'static,
) -> StrategyFactory {
    let f = Arc::new(f);
    let name = name.to_string();
    Arc::new(move |_: &Crn, _: &Configuration| {
        let f = f.clone();
        Box::new(FnStrategy::new(name.clone(), move |v: &StepView<'_>, _| f(v)))
    })
}

/// The lowest-id applicable void reaction (every configuration has one).
fn void_at(v: &StepView<'_>) -> ReactionId {
    v.crn.first_applicable_void(v.config).expect("void completion covers every configuration")
}

/// `r` if applicable, otherwise a void reaction.
fn or_void(v: &StepView<'_>, r: ReactionId) -> ReactionId {
    if v.crn.is_applicable(r, v.config) {
        r
    } else {
        void_at(v)
    }
}

fn build(lines: &[(&str, &str)]) -> Result<Crn> {
    let mut b = CrnBuilder::new();
    for (name, text) in lines {
        b.parse(name, text);
    }
    b.build()
}

fn ids(crn: &Crn, names: &[&str]) -> Vec<SpeciesId> {
    names.iter().map(|n| crn.sid(n).expect("species declared")).collect()
}

fn rids(crn: &Crn, names: &[&str]) -> Vec<ReactionId> {
    names.iter().map(|n| crn.rid(n).expect("reaction declared")).collect()
}

/// Configuration from `(species, count)` pairs.
fn config(crn: &Crn, pairs: &[(SpeciesId, u32)]) -> Configuration {
    Configuration::from_multiset(crn.species_count(), &Multiset::from_pairs(pairs.iter().copied()))
}

/// A leader `A` consumes the molecule `B` and all `X`/`X'` molecules while
/// `B` toggles `X` and `X'`.
pub fn kill_b() -> Result<ProtocolBundle> {
    let crn = build(&[
        ("beta", "A + X -> 2 A"),
        ("beta'", "A + X' -> 2 A"),
        ("gamma", "A + B -> 2 A"),
        ("delta", "B + X -> B + X'"),
        ("delta'", "B + X' -> B + X"),
    ])?;
    let [a, b, x, xp] = ids(&crn, &["A", "B", "X", "X'"])[..] else { unreachable!() };
    let [beta, betap, gamma] = rids(&crn, &["beta", "beta'", "gamma"])[..] else { unreachable!() };
    let sc = crn.species_count();
    let initial: InitialFamily = Arc::new(move |n| {
        if n < 2 {
            return Vec::new();
        }
        compositions(n as u32 - 2, 2)
            .into_iter()
            .map(|v| {
                let mut c = Configuration::zeros(sc);
                c.set(a, 1);
                c.set(b, 1);
                c.set(x, v[0]);
                c.set(xp, v[1]);
                c
            })
            .collect()
    });
    let target = fixed_target(move |c| c.get(b) == 0 && c.get(x) == 0 && c.get(xp) == 0);
    let expected = Expected { mode: Mode::Halt, weak: true, strong: true, runtime: "O(log n)".into() };
    let mut bundle = ProtocolBundle::basic("kill-b", "leader A absorbs B and the X/X' molecules", crn, expected, target, initial);
    bundle.policy = RuntimePolicy::new("kill-b", move |c| {
        if c.get(b) > 0 {
            vec![beta, betap, gamma]
        } else {
            vec![beta, betap]
        }
    });
    let (delta, deltap) = (bundle.rid("delta"), bundle.rid("delta'"));
    bundle.adversaries.push(Adversary {
        name: "toggle".into(),
        strategy: scripted("toggle", move |v| {
            let c = v.config;
            if c.get(b) > 0 && c.get(x) > 0 {
                delta
            } else if c.get(b) > 0 && c.get(xp) > 0 {
                deltap
            } else {
                v.crn.applicable_non_void(c).first().copied().unwrap_or_else(|| void_at(v))
            }
        }),
        skipping: SkippingPolicy::Identity,
    });
    Ok(bundle)
}

/// A leader walks through `L_0 .. L_{k+1}` by catalysis with `C`; every
/// level except `L_k` converts an `X` into a `Y` and resets to `L_0`.
pub fn multiple_pitfalls(k: usize) -> Result<ProtocolBundle> {
    let mut lines: Vec<(String, String)> = Vec::new();
    for i in 0..=k + 1 {
        if i != k {
            lines.push((format!("beta_{i}"), format!("L_{i} + X -> L_0 + Y")));
        }
    }
    for i in 0..=k {
        lines.push((format!("gamma_{i}"), format!("L_{i} + C -> L_{} + C", i + 1)));
    }
    let mut bld = CrnBuilder::new();
    for i in 0..=k + 1 {
        bld.species(&format!("L_{i}"));
    }
    for (n, t) in &lines {
        bld.parse(n, t);
    }
    let crn = bld.build()?;
    let levels: Vec<SpeciesId> = (0..=k + 1).map(|i| crn.sid(&format!("L_{i}")).expect("level")).collect();
    let [c_id, x, y] = ids(&crn, &["C", "X", "Y"])[..] else { unreachable!() };
    let gammas: Vec<ReactionId> = (0..=k).map(|i| crn.rid(&format!("gamma_{i}")).expect("gamma")).collect();
    let beta_top = crn.rid(&format!("beta_{}", k + 1)).expect("beta");
    let sc = crn.species_count();
    let l0 = levels[0];
    let initial: InitialFamily = Arc::new(move |n| {
        if n < 2 {
            return Vec::new();
        }
        compositions(n as u32 - 2, 2)
            .into_iter()
            .map(|v| {
                let mut c = Configuration::zeros(sc);
                c.set(l0, 1);
                c.set(c_id, 1);
                c.set(x, v[0]);
                c.set(y, v[1]);
                c
            })
            .collect()
    });
    let target = fixed_target(move |c| c.get(x) <= c.get(y));
    let expected = Expected { mode: Mode::Stab, weak: true, strong: true, runtime: "Theta(n^2)".into() };
    let mut bundle = ProtocolBundle::basic(
        "multiple-pitfalls",
        format!("leader walk with pitfall level k = {k}"),
        crn,
        expected,
        target,
        initial,
    );
    let crn2 = bundle.crn.clone();
    bundle.policy = RuntimePolicy::new("applicable", move |c| crn2.applicable_non_void(c));
    let lv = levels.clone();
    bundle.adversaries.push(Adversary {
        name: "pitfall-walk".into(),
        strategy: scripted("pitfall-walk", move |v| {
            let c = v.config;
            match lv.iter().position(|&s| c.get(s) > 0) {
                Some(i) if i <= k => or_void(v, gammas[i]),
                _ => or_void(v, beta_top),
            }
        }),
        skipping: SkippingPolicy::Identity,
    });
    Ok(bundle)
}

/// Configuration `L_k + C + (x0 − y) X + y Y` of [`multiple_pitfalls`].
pub fn multiple_pitfalls_config(bundle: &ProtocolBundle, k: usize, x0: u32, y: u32) -> Configuration {
    let crn = &bundle.crn;
    let l = crn.sid(&format!("L_{k}")).expect("level");
    let [c, x, yy] = ids(crn, &["C", "X", "Y"])[..] else { unreachable!() };
    config(crn, &[(l, 1), (c, 1), (x, x0 - y), (yy, y)])
}

/// Two alternating leaders `L_0`, `L_1` that are killed by `Y` and flip on
/// every `X` conversion.
pub fn round_inflation() -> Result<ProtocolBundle> {
    let crn = build(&[
        ("beta_0", "L_0 + Y -> 2 Y"),
        ("beta_1", "L_1 + Y -> 2 Y"),
        ("gamma_0", "L_0 + X -> L_1 + Y"),
        ("gamma_1", "L_1 + X -> L_0 + Y"),
    ])?;
    let [l0, y, l1, x] = ids(&crn, &["L_0", "Y", "L_1", "X"])[..] else { unreachable!() };
    let [b0, b1, g0, g1] = rids(&crn, &["beta_0", "beta_1", "gamma_0", "gamma_1"])[..] else { unreachable!() };
    let sc = crn.species_count();
    let initial: InitialFamily = Arc::new(move |n| {
        let mut out = Vec::new();
        if n < 2 {
            return out;
        }
        let m = n as u32 - 1;
        for xs in 0..=m {
            let ys = m - xs;
            if ys < xs || ys == 0 {
                continue;
            }
            for leader in [l0, l1] {
                out.push(config_raw(sc, &[(leader, 1), (x, xs), (y, ys)]));
            }
        }
        out
    });
    let target = fixed_target(move |c| c.get(l0) == 0 && c.get(l1) == 0);
    let expected = Expected { mode: Mode::Halt, weak: true, strong: true, runtime: "Theta(n)".into() };
    let mut bundle =
        ProtocolBundle::basic("round-inflation", "alternating leaders killed by Y", crn, expected, target, initial);
    bundle.policy = RuntimePolicy::new("leader", move |c| {
        if c.get(l0) > 0 {
            vec![b0]
        } else if c.get(l1) > 0 {
            vec![b1]
        } else {
            Vec::new()
        }
    });
    bundle.adversaries.push(Adversary {
        name: "alternating".into(),
        strategy: scripted("alternating", move |v| {
            let c = v.config;
            let (g, b) = if c.get(l0) > 0 { (g0, b0) } else { (g1, b1) };
            if c.get(x) > 0 && v.crn.is_applicable(g, c) {
                g
            } else {
                or_void(v, b)
            }
        }),
        skipping: SkippingPolicy::Identity,
    });
    Ok(bundle)
}

fn config_raw(sc: usize, pairs: &[(SpeciesId, u32)]) -> Configuration {
    let mut c = Configuration::zeros(sc);
    for &(s, k) in pairs {
        c.add(s, k);
    }
    c
}

/// `E` spreads once produced by `A + A` or `X + X`, while `B` can drain the
/// `X` molecules to disable the fast route.
pub fn skipping_policy() -> Result<ProtocolBundle> {
    let crn = build(&[
        ("beta", "A + A -> 2 E"),
        ("gamma", "X + X -> 2 E"),
        ("delta", "B + X -> 2 B"),
        ("chi_A", "E + A -> 2 E"),
        ("chi_B", "E + B -> 2 E"),
        ("chi_X", "E + X -> 2 E"),
    ])?;
    let [a, e, x, b] = ids(&crn, &["A", "E", "X", "B"])[..] else { unreachable!() };
    let [beta, gamma, delta, ca, cb, cx] = rids(&crn, &["beta", "gamma", "delta", "chi_A", "chi_B", "chi_X"])[..] else {
        unreachable!()
    };
    let sc = crn.species_count();
    let initial: InitialFamily = Arc::new(move |n| {
        if n < 3 {
            return Vec::new();
        }
        vec![config_raw(sc, &[(a, 2), (b, 1), (x, n as u32 - 3)])]
    });
    let target = fixed_target(move |c| c.get(a) == 0 && c.get(b) == 0 && c.get(x) == 0);
    let expected = Expected { mode: Mode::Halt, weak: true, strong: true, runtime: "Theta(n)".into() };
    let mut bundle = ProtocolBundle::basic(
        "skipping-policy",
        "E takes over after a slow or fast start",
        crn,
        expected,
        target,
        initial,
    );
    bundle.policy = RuntimePolicy::new("start-then-spread", move |c| {
        if c.get(e) == 0 {
            vec![beta, gamma]
        } else {
            vec![ca, cb, cx]
        }
    });
    let drain = scripted("drain", move |v| {
        let c = v.config;
        if c.get(e) == 0 && c.get(x) > 0 {
            delta
        } else if c.get(e) == 0 {
            or_void(v, beta)
        } else {
            v.crn.applicable_non_void(c).first().copied().unwrap_or_else(|| void_at(v))
        }
    });
    let skip = SkippingPolicy::Custom(
        "large-skip".into(),
        Arc::new(move |ex, t| {
            if ex.config(t).get(e) > 0 {
                return t;
            }
            (t..=ex.len())
                .find(|&u| {
                    let c = ex.config(u);
                    c.get(e) == 0 && c.get(x) < 2
                })
                .unwrap_or(t)
        }),
    );
    bundle.adversaries.push(Adversary { name: "large-skip".into(), strategy: drain.clone(), skipping: skip });
    bundle.adversaries.push(Adversary { name: "drain".into(), strategy: drain, skipping: SkippingPolicy::Identity });
    Ok(bundle)
}

/// `A_0`/`A_1` track the majority of `X_0` and `X_1`, which annihilate.
pub fn fixed_policy() -> Result<ProtocolBundle> {
    let crn = build(&[
        ("beta", "X_0 + X_1 -> 2 W"),
        ("gamma_0", "A_1 + X_0 -> A_0 + X_0"),
        ("gamma_1", "A_0 + X_1 -> A_1 + X_1"),
    ])?;
    let [x0, x1, a1, a0] = ids(&crn, &["X_0", "X_1", "A_1", "A_0"])[..] else { unreachable!() };
    let [beta, g0, g1] = rids(&crn, &["beta", "gamma_0", "gamma_1"])[..] else { unreachable!() };
    let sc = crn.species_count();
    let initial: InitialFamily = Arc::new(move |n| {
        let mut out = Vec::new();
        if n < 2 {
            return out;
        }
        for v in compositions(n as u32 - 1, 2) {
            if v[0] == v[1] {
                continue;
            }
            for leader in [a0, a1] {
                out.push(config_raw(sc, &[(leader, 1), (x0, v[0]), (x1, v[1])]));
            }
        }
        out
    });
    let target: TargetFactory = Arc::new(move |c0: &Configuration| {
        let (j, lose, aj, alose) = if c0.get(x0) > c0.get(x1) { (x0, x1, a0, a1) } else { (x1, x0, a1, a0) };
        let diff = c0.get(x0).abs_diff(c0.get(x1));
        Arc::new(move |c: &Configuration| c.get(aj) == 1 && c.get(j) == diff && c.get(lose) == 0 && c.get(alose) == 0)
    });
    let expected = Expected { mode: Mode::Halt, weak: true, strong: true, runtime: "O(n)".into() };
    let mut bundle =
        ProtocolBundle::basic("fixed-policy", "majority tracking by annihilation", crn, expected, target, initial);
    bundle.policy = RuntimePolicy::new("annihilate-first", move |c| {
        if c.get(x0) > 0 && c.get(x1) > 0 {
            vec![beta]
        } else {
            vec![g0, g1]
        }
    });
    bundle.policies.push(RuntimePolicy::fixed("fixed", vec![beta, g0, g1]));
    bundle.adversaries.push(Adversary {
        name: "alternating".into(),
        strategy: scripted("alternating", move |v| {
            let c = v.config;
            for r in [g0, g1] {
                if v.crn.is_applicable(r, c) {
                    return r;
                }
            }
            or_void(v, beta)
        }),
        skipping: SkippingPolicy::Identity,
    });
    Ok(bundle)
}

/// Two `A` molecules toggle `X`/`X'` until they pair up into `B`s that flip
/// forever, while `Y` absorbs all `X` and `X'`.
pub fn singleton_policy() -> Result<ProtocolBundle> {
    let crn = build(&[
        ("beta", "A + A -> 2 B"),
        ("gamma", "A + X -> A + X'"),
        ("gamma'", "A + X' -> A + X"),
        ("delta", "X + Y -> 2 Y"),
        ("delta'", "X' + Y -> 2 Y"),
        ("chi", "B + B -> 2 B'"),
        ("chi'", "B' + B' -> 2 B"),
    ])?;
    let [a, x, xp, y] = ids(&crn, &["A", "X", "X'", "Y"])[..] else { unreachable!() };
    let [beta, delta, deltap] = rids(&crn, &["beta", "delta", "delta'"])[..] else { unreachable!() };
    let sc = crn.species_count();
    let initial: InitialFamily = Arc::new(move |n| {
        if n < 3 {
            return Vec::new();
        }
        compositions(n as u32 - 3, 2)
            .into_iter()
            .map(|v| config_raw(sc, &[(a, 2), (y, 1), (x, v[0]), (xp, v[1])]))
            .collect()
    });
    let target = fixed_target(move |c| c.get(a) == 0 && c.get(x) == 0 && c.get(xp) == 0);
    let expected = Expected { mode: Mode::Stab, weak: true, strong: true, runtime: "O(n)".into() };
    let mut bundle = ProtocolBundle::basic(
        "singleton-policy",
        "pairing leaders with a toggled absorbed population",
        crn,
        expected,
        target,
        initial,
    );
    bundle.policy = RuntimePolicy::new("pair-and-absorb", move |c| {
        if c.get(a) == 2 {
            vec![beta, delta, deltap]
        } else {
            vec![delta, deltap]
        }
    });
    Ok(bundle)
}

/// Two leaders `L` convert `X` into `W` until they annihilate.
pub fn superset_policy() -> Result<ProtocolBundle> {
    let crn = build(&[("alpha", "L + X -> L + W"), ("beta", "L + L -> 2 W")])?;
    let [l, x] = ids(&crn, &["L", "X"])[..] else { unreachable!() };
    let [alpha, beta] = rids(&crn, &["alpha", "beta"])[..] else { unreachable!() };
    let sc = crn.species_count();
    let initial: InitialFamily = Arc::new(move |n| {
        if n < 2 {
            return Vec::new();
        }
        vec![config_raw(sc, &[(l, 2), (x, n as u32 - 2)])]
    });
    let target = fixed_target(move |c| c.get(l) == 0);
    let expected = Expected { mode: Mode::Halt, weak: true, strong: true, runtime: "O(n)".into() };
    let mut bundle =
        ProtocolBundle::basic("superset-policy", "leaders consume X until they meet", crn, expected, target, initial);
    bundle.policy = RuntimePolicy::new("superset", move |c| if c.get(l) == 2 { vec![alpha, beta] } else { Vec::new() });
    bundle.policies.push(RuntimePolicy::new("beta-only", move |c| if c.get(l) == 2 { vec![beta] } else { Vec::new() }));
    bundle.adversaries.push(Adversary {
        name: "alpha-first".into(),
        strategy: scripted("alpha-first", move |v| {
            if v.crn.is_applicable(alpha, v.config) {
                alpha
            } else {
                or_void(v, beta)
            }
        }),
        skipping: SkippingPolicy::Identity,
    });
    Ok(bundle)
}

/// Positional bimolecular reactions `[x, y] -> [x', y']` of a factor
/// protocol, void ones included.
fn positional_reactions(species: &[&str], non_void: &[(&str, &str, &str, &str)]) -> Vec<([String; 2], [String; 2])> {
    let mut out: Vec<([String; 2], [String; 2])> = non_void
        .iter()
        .map(|(a, b, c, d)| ([a.to_string(), b.to_string()], [c.to_string(), d.to_string()]))
        .collect();
    for (i, a) in species.iter().enumerate() {
        for b in &species[i..] {
            let key = |p: &[String; 2]| {
                let mut k = p.clone();
                k.sort();
                k
            };
            let mut me = [a.to_string(), b.to_string()];
            me.sort();
            if !out.iter().any(|(r, _)| key(r) == me) {
                out.push(([a.to_string(), b.to_string()], [a.to_string(), b.to_string()]));
            }
        }
    }
    out
}

/// The Cartesian product of two copies of a leader-driven `B` to `D`
/// converter with toggling `K`/`K'`.
pub fn cartesian_product() -> Result<ProtocolBundle> {
    let factor = |i: u32| {
        let sp: Vec<String> = ["B", "D", "L", "K", "K'"].iter().map(|s| format!("{s}{i}")).collect();
        (sp.clone(), positional_reactions(
            &sp.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
            &[
                (&sp[2], &sp[0], &sp[2], &sp[1]),
                (&sp[0], &sp[3], &sp[0], &sp[4]),
                (&sp[0], &sp[4], &sp[0], &sp[3]),
            ],
        ))
    };
    let (sp1, r1) = factor(1);
    let (sp2, r2) = factor(2);
    let pair = |a: &str, b: &str| format!("({a},{b})");
    let mut bld = CrnBuilder::new();
    for a in &sp1 {
        for b in &sp2 {
            bld.species(&pair(a, b));
        }
    }
    for (ra, pa) in &r1 {
        for (rb, pb) in &r2 {
            if ra == pa && rb == pb {
                continue;
            }
            for swap in [false, true] {
                let (r_b, p_b) = if swap { ([&rb[1], &rb[0]], [&pb[1], &pb[0]]) } else { ([&rb[0], &rb[1]], [&pb[0], &pb[1]]) };
                let lhs = format!("{} + {}", pair(&ra[0], r_b[0]), pair(&ra[1], r_b[1]));
                let rhs = format!("{} + {}", pair(&pa[0], p_b[0]), pair(&pa[1], p_b[1]));
                bld.parse("", &format!("{lhs} -> {rhs}"));
            }
        }
    }
    let crn = bld.build_with_density(crate::model::rational_int(1))?;
    let b1: Vec<SpeciesId> = sp2.iter().map(|b| crn.sid(&pair("B1", b)).expect("species")).collect();
    let b2: Vec<SpeciesId> = sp1.iter().map(|a| crn.sid(&pair(a, "B2")).expect("species")).collect();
    let c1 = crn
        .parse_configuration("(L1,K2) + (D1,B2) + (K1,L2) + (B1,D2)")
        .expect("species declared");
    let initial: InitialFamily = Arc::new(move |n| if n == 4 { vec![c1.clone()] } else { Vec::new() });
    let target = fixed_target(move |c| c.count_of(&b1) == 0 && c.count_of(&b2) == 0);
    let expected = Expected { mode: Mode::Halt, weak: false, strong: true, runtime: "unbounded".into() };
    Ok(ProtocolBundle::basic(
        "cartesian-product",
        "product of two halting converters that livelocks under weak fairness",
        crn,
        expected,
        target,
        initial,
    ))
}

/// The first configuration of the trapped cycle of [`cartesian_product`].
pub fn cartesian_cycle(bundle: &ProtocolBundle) -> Vec<Configuration> {
    [
        "(L1,K2) + (D1,B2) + (K1,L2) + (B1,D2)",
        "(L1,K'2) + (D1,B2) + (K1,L2) + (B1,D2)",
        "(L1,K'2) + (D1,B2) + (K'1,L2) + (B1,D2)",
        "(L1,K2) + (D1,B2) + (K'1,L2) + (B1,D2)",
    ]
    .iter()
    .map(|t| bundle.crn.parse_configuration(t).expect("species declared"))
    .collect()
}

/// Random-walk broadcast: opposite fluid voters convert each other and
/// permanent voters recruit fluid voters to their side.
pub fn random_walk_broadcast() -> Result<ProtocolBundle> {
    let crn = build(&[
        ("beta_0", "P_0 + F_1 -> P_0 + F_0"),
        ("beta_1", "P_1 + F_0 -> P_1 + F_1"),
        ("gamma_0", "F_0 + F_1 -> 2 F_0"),
        ("gamma_1", "F_0 + F_1 -> 2 F_1"),
    ])?;
    let [p0, f1, f0, p1] = ids(&crn, &["P_0", "F_1", "F_0", "P_1"])[..] else { unreachable!() };
    let [b0, b1, g0, g1] = rids(&crn, &["beta_0", "beta_1", "gamma_0", "gamma_1"])[..] else { unreachable!() };
    let sc = crn.species_count();
    let initial: InitialFamily = Arc::new(move |n| {
        let mut out = Vec::new();
        let n = n as u32;
        for perm in [p0, p1] {
            for p in 1..=n / 2 {
                for fl in compositions(n - p, 2) {
                    out.push(config_raw(sc, &[(perm, p), (f0, fl[0]), (f1, fl[1])]));
                }
            }
        }
        out
    });
    let target: TargetFactory = Arc::new(move |c0: &Configuration| {
        let loser = if c0.get(p1) > 0 { f0 } else { f1 };
        Arc::new(move |c: &Configuration| c.get(loser) == 0)
    });
    let expected = Expected { mode: Mode::Stab, weak: false, strong: true, runtime: "unbounded".into() };
    let mut bundle = ProtocolBundle::basic(
        "random-walk-broadcast",
        "fluid voters random-walk toward the permanent vote",
        crn,
        expected,
        target,
        initial,
    );
    bundle.weak_for = Some(Arc::new(move |c0: &Configuration| {
        let loser = if c0.get(p1) > 0 { f0 } else { f1 };
        !(c0.get(loser) >= 1 && c0.get(f0) + c0.get(f1) >= 2)
    }));
    bundle.adversaries.push(Adversary {
        name: "undo".into(),
        strategy: Arc::new(move |_: &Crn, c0: &Configuration| {
            let one = c0.get(p1) > 0;
            let (undo, recruit, mine) = if one { (g0, b1, f1) } else { (g1, b0, f0) };
            Box::new(FnStrategy::new("undo", move |v: &StepView<'_>, _| {
                if v.config.get(mine) > 0 && v.crn.is_applicable(undo, v.config) {
                    undo
                } else {
                    or_void(v, recruit)
                }
            }))
        }),
        skipping: SkippingPolicy::Identity,
    });
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digraph::{check_strong_correctness, check_weak_correctness, explore};
    use crate::exec::{run_adversarial, trial_rng, Stop};

    fn verdicts(b: &ProtocolBundle, c0: &Configuration) -> (bool, bool) {
        let a = explore(&b.crn, c0, 100_000).unwrap();
        let z = a.mask(&*b.target_of(c0));
        (
            check_weak_correctness(&b.crn, &a, &z, b.expected.mode).correct,
            check_strong_correctness(&a, &z, b.expected.mode).correct,
        )
    }

    #[test]
    fn kill_b_policy_and_classes() {
        let b = kill_b().unwrap();
        assert_eq!(b.crn.non_void().len(), 5);
        let c = b.crn.parse_configuration("A + B + X").unwrap();
        let names: Vec<String> = b.crn.applicable_non_void(&c).iter().map(|&r| b.crn.reaction_label(r)).collect();
        assert_eq!(names, vec!["beta", "gamma", "delta"]);
        let t: Vec<String> = b.policy.targets(&c).iter().map(|&r| b.crn.reaction_label(r)).collect();
        assert_eq!(t, vec!["beta", "beta'", "gamma"]);
        let c2 = b.crn.parse_configuration("2 A + B + 3 X").unwrap();
        let next = b.crn.apply(b.rid("gamma"), &c2).unwrap();
        assert_eq!(b.crn.format_configuration(&next), "3 A + 3 X");
    }

    #[test]
    fn examples_are_correct_where_stated() {
        for bundle in [kill_b(), multiple_pitfalls(2), round_inflation(), skipping_policy(), fixed_policy(), singleton_policy(), superset_policy()] {
            let b = bundle.unwrap();
            for n in 1..=7 {
                for c0 in b.initial_configs(n) {
                    assert_eq!(verdicts(&b, &c0), (true, true), "{} {}", b.name, b.crn.format_configuration(&c0));
                }
            }
        }
    }

    #[test]
    fn cartesian_product_livelocks() {
        let b = cartesian_product().unwrap();
        let c1 = &b.initial_configs(4)[0];
        assert_eq!(verdicts(&b, c1), (false, true));
        let a = explore(&b.crn, c1, 100_000).unwrap();
        let cyc = cartesian_cycle(&b);
        let comp = a.scc_of(a.index_of(&cyc[0]).unwrap());
        for c in &cyc {
            assert_eq!(a.scc_of(a.index_of(c).unwrap()), comp);
        }
        assert!(a.escaping(comp).is_empty());
    }

    #[test]
    fn random_walk_broadcast_verdicts_follow_the_rule() {
        let b = random_walk_broadcast().unwrap();
        for n in 2..=6 {
            for c0 in b.initial_configs(n) {
                let (weak, strong) = verdicts(&b, &c0);
                assert_eq!(weak, b.expected_weak(&c0), "{}", b.crn.format_configuration(&c0));
                assert!(strong);
            }
        }
    }

    #[test]
    fn scripted_adversaries_respect_applicability() {
        let b = random_walk_broadcast().unwrap();
        let c0 = b.crn.parse_configuration("P_1 + F_0 + 2 F_1").unwrap();
        let adv = b.adversary("undo").unwrap();
        let mut s = (adv.strategy)(&b.crn, &c0);
        let mut rng = trial_rng(0, 0);
        let e = run_adversarial(&b.crn, &c0, s.as_mut(), Some(200), &Stop::MaxSteps, 2000, &mut rng).unwrap();
        let f0 = b.crn.sid("F_0").unwrap();
        assert!(e.configs().iter().all(|c| c.get(f0) > 0));
    }
}
