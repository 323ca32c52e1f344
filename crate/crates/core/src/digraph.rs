//! Configuration digraph exploration and the topological analyses built on
//! it: strongly connected components, escaping reactions, `stab`/`halt`
//! membership, weak and strong correctness checks with witnesses, and
//! pitfall detection.
//!
//! Only non-void edges are stored. Every configuration also carries implicit
//! self-loops labelled by its applicable void reactions.

use std::collections::VecDeque;

use indexmap::IndexSet;
use num::{ToPrimitive, Zero};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use crate::error::{CrnError, Result};
use crate::exec;
use crate::model::{Configuration, Crn, Rational, ReactionId, SpeciesId};

/// Default exploration budget.
pub const DEFAULT_MAX_STATES: usize = 1_000_000;

/// Components larger than this get a verdict but no lasso witness.
pub const MAX_LASSO_COMPONENT: usize = 100_000;

/// Whether correctness refers to stabilization or halting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Reach `stab(Z)`.
    Stab,
    /// Reach `halt(Z)`.
    Halt,
}

impl std::str::FromStr for Mode {
    type Err = CrnError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stab" => Ok(Mode::Stab),
            "halt" => Ok(Mode::Halt),
            _ => Err(CrnError::invalid(format!("mode must be 'stab' or 'halt', got '{s}'"))),
        }
    }
}

/// The reachable configuration digraph of a CRN from one initial configuration.
#[derive(Clone, Debug)]
pub struct DigraphAnalysis {
    nodes: IndexSet<Configuration>,
    edges: Vec<Vec<(ReactionId, usize)>>,
    scc_id: Vec<usize>,
    components: Vec<Vec<usize>>,
    escaping: Vec<Vec<ReactionId>>,
    condensation: Vec<Vec<usize>>,
    phi: u64,
}

/// Build the digraph reachable from `c0` by breadth-first search, expanding
/// applicable non-void reactions in increasing id order.
pub fn explore(crn: &Crn, c0: &Configuration, max_states: usize) -> Result<DigraphAnalysis> {
    crn.check_shape(c0)?;
    if c0.total() == 0 {
        return Err(CrnError::EmptyConfiguration);
    }
    let limit = crn.max_count(c0.total());
    let mut nodes: IndexSet<Configuration> = IndexSet::new();
    let mut edges: Vec<Vec<(ReactionId, usize)>> = Vec::new();
    nodes.insert(c0.clone());
    let mut i = 0;
    while i < nodes.len() {
        let c = nodes.get_index(i).expect("node exists").clone();
        let mut out = Vec::new();
        for &r in crn.non_void() {
            if !crn.is_applicable(r, &c) {
                continue;
            }
            let mut next = c.clone();
            crn.apply_in_place(r, &mut next);
            if next.total() > limit {
                return Err(CrnError::DensityExceeded {
                    count: next.total(),
                    bound: crn.density_bound().to_string(),
                    initial: c0.total(),
                });
            }
            let (j, fresh) = nodes.insert_full(next);
            if fresh && nodes.len() > max_states {
                return Err(CrnError::StateBudget { limit: max_states });
            }
            out.push((r, j));
        }
        edges.push(out);
        i += 1;
    }
    Ok(analyse(crn, nodes, edges, c0.total()))
}

fn analyse(
    crn: &Crn,
    nodes: IndexSet<Configuration>,
    edges: Vec<Vec<(ReactionId, usize)>>,
    phi: u64,
) -> DigraphAnalysis {
    let n = nodes.len();
    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(n, edges.iter().map(Vec::len).sum());
    for _ in 0..n {
        g.add_node(());
    }
    for (u, out) in edges.iter().enumerate() {
        for &(_, v) in out {
            g.add_edge(petgraph::graph::NodeIndex::new(u), petgraph::graph::NodeIndex::new(v), ());
        }
    }
    let mut components: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|x| x.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    components.sort_unstable_by_key(|c| c[0]);
    let mut scc_id = vec![0; n];
    for (ci, comp) in components.iter().enumerate() {
        for &u in comp {
            scc_id[u] = ci;
        }
    }
    let mut condensation = vec![Vec::new(); components.len()];
    for (u, out) in edges.iter().enumerate() {
        for &(_, v) in out {
            if scc_id[u] != scc_id[v] {
                condensation[scc_id[u]].push(scc_id[v]);
            }
        }
    }
    for succ in &mut condensation {
        succ.sort_unstable();
        succ.dedup();
    }
    let escaping = components
        .iter()
        .enumerate()
        .map(|(ci, comp)| {
            // An escaping reaction labels an edge leaving the component at
            // every node, so the first node's outgoing edges give candidates.
            let mut cand: Vec<ReactionId> = edges[comp[0]]
                .iter()
                .filter(|&&(_, v)| scc_id[v] != ci)
                .map(|&(r, _)| r)
                .collect();
            for &u in &comp[1..] {
                if cand.is_empty() {
                    break;
                }
                cand.retain(|&r| {
                    edges[u]
                        .binary_search_by_key(&r, |e| e.0)
                        .map(|k| scc_id[edges[u][k].1] != ci)
                        .unwrap_or(false)
                });
            }
            cand
        })
        .collect();
    let _ = crn;
    DigraphAnalysis { nodes, edges, scc_id, components, escaping, condensation, phi }
}

/// Outcome of a correctness check.
#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    /// Whether the protocol is correct from this initial configuration.
    pub correct: bool,
    /// A violating component, when incorrect.
    pub witness: Option<Witness>,
}

/// A component trapping executions outside the target set.
#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    /// Component index.
    pub component: usize,
    /// Node indices of the component.
    pub nodes: Vec<usize>,
    /// A weakly fair lasso confined to the component after its stem.
    pub lasso: Option<Lasso>,
}

/// An ultimately periodic execution: `stem` followed by `cycle` repeated forever.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct Lasso {
    /// Reactions from `c0` to the first cycle configuration.
    pub stem: Vec<ReactionId>,
    /// Reactions of the cycle, returning to its first configuration.
    pub cycle: Vec<ReactionId>,
}

impl DigraphAnalysis {
    /// Number of nodes.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Configuration of a node.
    pub fn node(&self, i: usize) -> &Configuration {
        self.nodes.get_index(i).expect("node index in range")
    }

    /// Node index of a configuration.
    pub fn index_of(&self, c: &Configuration) -> Option<usize> {
        self.nodes.get_index_of(c)
    }

    /// Iterate over node configurations in BFS order.
    pub fn nodes(&self) -> impl Iterator<Item = &Configuration> {
        self.nodes.iter()
    }

    /// Outgoing non-void edges of a node, sorted by reaction id.
    pub fn edges(&self, i: usize) -> &[(ReactionId, usize)] {
        &self.edges[i]
    }

    /// Number of stored (non-void) edges.
    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// Component of a node.
    pub fn scc_of(&self, i: usize) -> usize {
        self.scc_id[i]
    }

    /// Components, each a sorted list of nodes; ordered by smallest node.
    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    /// Escaping reactions of a component.
    pub fn escaping(&self, component: usize) -> &[ReactionId] {
        &self.escaping[component]
    }

    /// Successor components in the condensation DAG.
    pub fn condensation(&self, component: usize) -> &[usize] {
        &self.condensation[component]
    }

    /// Volume used for propensities: the initial molecular count.
    pub fn phi(&self) -> u64 {
        self.phi
    }

    /// Node mask of a configuration predicate.
    pub fn mask(&self, z: &dyn Fn(&Configuration) -> bool) -> Vec<bool> {
        self.nodes.iter().map(z).collect()
    }

    fn reverse(&self) -> Vec<Vec<usize>> {
        let mut rev = vec![Vec::new(); self.nodes.len()];
        for (u, out) in self.edges.iter().enumerate() {
            for &(_, v) in out {
                rev[v].push(u);
            }
        }
        rev
    }

    /// Breadth-first path (reaction list) from `from` to the first node
    /// satisfying `goal`, moving only through nodes allowed by `inside`.
    fn path(&self, from: usize, goal: impl Fn(usize) -> bool, inside: impl Fn(usize) -> bool) -> Option<(Vec<ReactionId>, usize)> {
        if goal(from) {
            return Some((Vec::new(), from));
        }
        let mut prev: std::collections::HashMap<usize, (usize, ReactionId)> = std::collections::HashMap::new();
        let mut queue = VecDeque::from([from]);
        prev.insert(from, (usize::MAX, 0));
        while let Some(u) = queue.pop_front() {
            for &(r, v) in &self.edges[u] {
                if !inside(v) || prev.contains_key(&v) {
                    continue;
                }
                prev.insert(v, (u, r));
                if goal(v) {
                    let mut rs = Vec::new();
                    let mut x = v;
                    while x != from {
                        let (p, r) = prev[&x];
                        rs.push(r);
                        x = p;
                    }
                    rs.reverse();
                    return Some((rs, v));
                }
                queue.push_back(v);
            }
        }
        None
    }

    /// Reaction sequence from the root (node 0) to node `target`.
    pub fn path_from_root(&self, target: usize) -> Option<Vec<ReactionId>> {
        self.path(0, |v| v == target, |_| true).map(|p| p.0)
    }

    /// Build a weakly fair lasso trapped in a component without escaping
    /// reactions: the cycle visits, for every reaction, a node where it is
    /// inapplicable or an edge where it stays inside the component.
    pub fn lasso_in(&self, crn: &Crn, component: usize) -> Option<Lasso> {
        let comp = &self.components[component];
        if comp.len() > MAX_LASSO_COMPONENT {
            return None;
        }
        let start = comp[0];
        let stem = self.path_from_root(start)?;
        let inside = |v: usize| self.scc_id[v] == component;

        // For each species, a node of the component with its minimum count
        // and one with count below two.
        let ns = crn.species_count();
        let mut argmin: Vec<usize> = vec![start; ns];
        for &u in comp {
            let c = self.node(u);
            for s in 0..ns {
                if c.get(s) < self.node(argmin[s]).get(s) {
                    argmin[s] = u;
                }
            }
        }
        let min_count = |s: SpeciesId| self.node(argmin[s]).get(s);

        // Waypoints: (node to visit, optional reaction to take there).
        let mut waypoints: Vec<(usize, Option<ReactionId>)> = Vec::new();
        let mut prefix: Vec<ReactionId> = Vec::new();
        for r in crn.reactions() {
            let blocker = r.reactants.iter().find(|&(s, k)| min_count(s) < k);
            match blocker {
                Some((s, _)) => waypoints.push((argmin[s], None)),
                None if r.is_void => prefix.push(r.id),
                None => {
                    // Applicable everywhere and not escaping: some edge labelled
                    // by it stays inside.
                    let e = comp.iter().find_map(|&u| {
                        self.edges[u]
                            .iter()
                            .find(|&&(x, v)| x == r.id && inside(v))
                            .map(|_| u)
                    })?;
                    waypoints.push((e, Some(r.id)));
                }
            }
        }
        waypoints.sort_unstable();
        waypoints.dedup();

        let mut cycle = prefix;
        let mut at = start;
        for (w, take) in waypoints {
            let (seg, end) = self.path(at, |v| v == w, inside)?;
            cycle.extend(seg);
            at = end;
            if let Some(r) = take {
                cycle.push(r);
                at = self.edges[at].iter().find(|e| e.0 == r)?.1;
            }
        }
        let (seg, _) = self.path(at, |v| v == start, inside)?;
        cycle.extend(seg);
        if cycle.is_empty() {
            cycle.push(crn.first_applicable_void(self.node(start))?);
        }
        let lasso = Lasso { stem, cycle };
        exec::is_weakly_fair_lasso(crn, self.node(0), &lasso).then_some(lasso)
    }
}

/// Node masks of `stab(Z)` and `halt(Z)`.
///
/// `stab(Z)` holds nodes whose every reachable node lies in `Z`; `halt(Z)`
/// holds nodes of `Z` without outgoing non-void edges.
pub fn stab_halt_sets(analysis: &DigraphAnalysis, z: &[bool]) -> (Vec<bool>, Vec<bool>) {
    let n = analysis.node_count();
    let rev = analysis.reverse();
    let mut bad = vec![false; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&u| !z[u]).collect();
    for &u in &queue {
        bad[u] = true;
    }
    while let Some(v) = queue.pop_front() {
        for &u in &rev[v] {
            if !bad[u] {
                bad[u] = true;
                queue.push_back(u);
            }
        }
    }
    let stab: Vec<bool> = bad.iter().map(|b| !b).collect();
    let halt: Vec<bool> = (0..n).map(|u| z[u] && analysis.edges[u].is_empty()).collect();
    (stab, halt)
}

/// The target node mask for a mode.
pub fn target_mask(analysis: &DigraphAnalysis, z: &[bool], mode: Mode) -> Vec<bool> {
    let (stab, halt) = stab_halt_sets(analysis, z);
    match mode {
        Mode::Stab => stab,
        Mode::Halt => halt,
    }
}

/// Correctness under weak fairness: every component not contained in the
/// target set must admit an escaping reaction.
pub fn check_weak_correctness(crn: &Crn, analysis: &DigraphAnalysis, z: &[bool], mode: Mode) -> Verdict {
    let target = target_mask(analysis, z, mode);
    for (ci, comp) in analysis.components.iter().enumerate() {
        if analysis.escaping[ci].is_empty() && !comp.iter().all(|&u| target[u]) {
            return Verdict {
                correct: false,
                witness: Some(Witness {
                    component: ci,
                    nodes: comp.clone(),
                    lasso: analysis.lasso_in(crn, ci),
                }),
            };
        }
    }
    Verdict { correct: true, witness: None }
}

/// Correctness under strong fairness: every terminal component must be
/// contained in the target set.
pub fn check_strong_correctness(analysis: &DigraphAnalysis, z: &[bool], mode: Mode) -> Verdict {
    let target = target_mask(analysis, z, mode);
    for (ci, comp) in analysis.components.iter().enumerate() {
        if analysis.condensation[ci].is_empty() && !comp.iter().all(|&u| target[u]) {
            return Verdict {
                correct: false,
                witness: Some(Witness { component: ci, nodes: comp.clone(), lasso: None }),
            };
        }
    }
    Verdict { correct: true, witness: None }
}

/// Nodes from which every path to the target set uses an edge whose
/// reaction has propensity at most `s/φ` at the edge's source.
pub fn find_pitfalls(crn: &Crn, analysis: &DigraphAnalysis, z: &[bool], s: &Rational, mode: Mode) -> Result<Vec<usize>> {
    if *s <= Rational::zero() {
        return Err(CrnError::invalid("pitfall threshold s must be positive"));
    }
    let p = s.numer().to_u128().ok_or_else(|| CrnError::invalid("threshold too large"))?;
    let q = s.denom().to_u128().ok_or_else(|| CrnError::invalid("threshold too large"))?;
    let phi = analysis.phi as u128;
    // propensity > p/(q·φ), compared exactly on integers.
    let fast = |r: ReactionId, c: &Configuration| {
        let (num, per_phi) = crn.propensity_parts(r, c);
        let cls = crn.class_size(r) as u128;
        if per_phi {
            num as u128 * q > p * cls
        } else {
            num as u128 * phi * q > p * cls
        }
    };
    let target = target_mask(analysis, z, mode);
    let n = analysis.node_count();
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
    for u in 0..n {
        let c = analysis.node(u);
        for &(r, v) in &analysis.edges[u] {
            if fast(r, c) {
                rev[v].push(u);
            }
        }
    }
    let mut good = target.clone();
    let mut queue: VecDeque<usize> = (0..n).filter(|&u| target[u]).collect();
    while let Some(v) = queue.pop_front() {
        for &u in &rev[v] {
            if !good[u] {
                good[u] = true;
                queue.push_back(u);
            }
        }
    }
    Ok((0..n).filter(|&u| !good[u]).collect())
}

/// JSON summary of a digraph.
#[derive(Clone, Debug, Serialize)]
pub struct DigraphReport {
    /// Node configurations rendered as text.
    pub nodes: Vec<String>,
    /// Edges as `(source, reaction label, target)`.
    pub edges: Vec<(usize, String, usize)>,
    /// Components as node lists.
    pub components: Vec<Vec<usize>>,
    /// Escaping reaction labels per component.
    pub escaping: Vec<Vec<String>>,
}

impl DigraphAnalysis {
    /// Serializable summary.
    pub fn report(&self, crn: &Crn) -> DigraphReport {
        DigraphReport {
            nodes: self.nodes.iter().map(|c| crn.format_configuration(c)).collect(),
            edges: self
                .edges
                .iter()
                .enumerate()
                .flat_map(|(u, out)| out.iter().map(move |&(r, v)| (u, crn.reaction_label(r), v)))
                .collect(),
            components: self.components.clone(),
            escaping: self
                .escaping
                .iter()
                .map(|e| e.iter().map(|&r| crn.reaction_label(r)).collect())
                .collect(),
        }
    }

    /// Graphviz rendering of the condensation DAG.
    pub fn condensation_dot(&self, crn: &Crn) -> String {
        let mut out = String::from("digraph condensation {\n");
        for (ci, comp) in self.components.iter().enumerate() {
            let label = format!(
                "C{ci} ({} nodes)\\nesc: {}",
                comp.len(),
                self.escaping[ci].iter().map(|&r| crn.reaction_label(r)).collect::<Vec<_>>().join(",")
            );
            out.push_str(&format!("  c{ci} [label=\"{label}\"];\n"));
        }
        for (ci, succ) in self.condensation.iter().enumerate() {
            for d in succ {
                out.push_str(&format!("  c{ci} -> c{d};\n"));
            }
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rational_int, CrnBuilder};

    fn kill_b() -> Crn {
        let mut b = CrnBuilder::new();
        for s in ["A", "B", "X", "X'"] {
            b.species(s);
        }
        b.parse("beta", "A + X -> 2 A");
        b.parse("beta'", "A + X' -> 2 A");
        b.parse("gamma", "A + B -> 2 A");
        b.parse("delta", "B + X -> B + X'");
        b.parse("delta'", "B + X' -> B + X");
        b.build().unwrap()
    }

    #[test]
    fn single_molecule_void_only() {
        let mut b = CrnBuilder::new();
        b.species("A");
        let crn = b.build().unwrap();
        let c0 = crn.parse_configuration("A").unwrap();
        let d = explore(&crn, &c0, 10).unwrap();
        assert_eq!(d.node_count(), 1);
        assert_eq!(d.edge_count(), 0);
        assert!(d.escaping(0).is_empty());
        let v = check_weak_correctness(&crn, &d, &[true], Mode::Halt);
        assert!(v.correct);
        assert!(check_strong_correctness(&d, &[true], Mode::Halt).correct);
    }

    #[test]
    fn kill_b_component_escaped_only_by_gamma() {
        let crn = kill_b();
        let c0 = crn.parse_configuration("A + B + 2 X + X'").unwrap();
        let d = explore(&crn, &c0, 1000).unwrap();
        let ci = d.scc_of(0);
        let names: Vec<_> = d.escaping(ci).iter().map(|&r| crn.reaction_label(r)).collect();
        assert_eq!(names, ["gamma"]);
        assert_eq!(d.components()[ci].len(), 4);
    }

    #[test]
    fn kill_b_is_correct_and_halts_on_a_only() {
        let crn = kill_b();
        let a = crn.sid("A").unwrap();
        let c0 = crn.parse_configuration("A + B + 3 X + X'").unwrap();
        let d = explore(&crn, &c0, 10_000).unwrap();
        let z = d.mask(&|c: &Configuration| c.get(a) as u64 == c.total());
        let (stab, halt) = stab_halt_sets(&d, &z);
        for u in 0..d.node_count() {
            assert!(!halt[u] || stab[u]);
            assert_eq!(halt[u], d.node(u).get(a) == 6);
        }
        assert!(check_weak_correctness(&crn, &d, &z, Mode::Halt).correct);
        assert!(check_strong_correctness(&d, &z, Mode::Halt).correct);
    }

    #[test]
    fn trapped_component_yields_fair_lasso() {
        // A and B flip a token forever without escaping.
        let mut b = CrnBuilder::new();
        b.parse("f", "T + A -> T + B");
        b.parse("g", "T + B -> T + A");
        let crn = b.build().unwrap();
        let c0 = crn.parse_configuration("T + A").unwrap();
        let d = explore(&crn, &c0, 100).unwrap();
        let z = vec![false; d.node_count()];
        let v = check_weak_correctness(&crn, &d, &z, Mode::Stab);
        assert!(!v.correct);
        let lasso = v.witness.unwrap().lasso.unwrap();
        assert!(exec::is_weakly_fair_lasso(&crn, &c0, &lasso));
    }

    #[test]
    fn pitfalls_never_in_target() {
        let crn = kill_b();
        let a = crn.sid("A").unwrap();
        let c0 = crn.parse_configuration("A + B + 2 X").unwrap();
        let d = explore(&crn, &c0, 10_000).unwrap();
        let z = d.mask(&|c: &Configuration| c.get(a) as u64 == c.total());
        let (_, halt) = stab_halt_sets(&d, &z);
        let pits = find_pitfalls(&crn, &d, &z, &rational_int(2), Mode::Halt).unwrap();
        assert!(pits.iter().all(|&u| !halt[u]));
    }

    #[test]
    fn budget_and_density_errors() {
        let mut b = CrnBuilder::new();
        b.parse("grow", "A -> 2 A");
        let crn = b.build().unwrap();
        let c0 = crn.parse_configuration("A").unwrap();
        assert!(matches!(explore(&crn, &c0, 100), Err(CrnError::DensityExceeded { .. })));
        let mut b = CrnBuilder::new();
        b.parse("walk", "A + B -> 2 B");
        let crn = b.build().unwrap();
        let c0 = crn.parse_configuration("5 A + B").unwrap();
        assert!(matches!(explore(&crn, &c0, 3), Err(CrnError::StateBudget { .. })));
    }
}
