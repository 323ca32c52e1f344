//! Executions: construction, replay and serialization; the stochastic
//! scheduler; adversarial strategies with a weak-fairness enforcement
//! wrapper; and the `τ` operator.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::digraph::{self, DigraphAnalysis, Lasso, Mode};
use crate::error::{CrnError, Result};
use crate::model::{total_propensity_f64, Configuration, Crn, ReactantKey, ReactionId, TargetSet};
use crate::runtime::RuntimePolicy;

/// Default fairness threshold `T_fair = 10·n²`.
pub fn default_t_fair(n: u64) -> usize {
    (10 * n * n).max(1) as usize
}

/// RNG for trial `trial` derived from a master seed.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// A finite execution prefix with its cached configurations.
#[derive(Clone, Debug, PartialEq)]
pub struct Execution {
    steps: Vec<ReactionId>,
    configs: Vec<Configuration>,
    phi: u64,
    spans: Option<Vec<f64>>,
}

impl Execution {
    /// Empty execution from `c0`, with `phi = ‖c0‖`.
    pub fn new(c0: Configuration) -> Self {
        let phi = c0.total().max(1);
        Self { steps: Vec::new(), configs: vec![c0], phi, spans: None }
    }

    /// Replay a reaction sequence from `c0`.
    pub fn from_steps(crn: &Crn, c0: Configuration, steps: &[ReactionId]) -> Result<Self> {
        let mut e = Self::new(c0);
        for &r in steps {
            e.push(crn, r)?;
        }
        Ok(e)
    }

    /// Append a step, checking applicability.
    pub fn push(&mut self, crn: &Crn, r: ReactionId) -> Result<()> {
        let next = crn.apply(r, self.last())?;
        self.steps.push(r);
        self.configs.push(next);
        Ok(())
    }

    fn push_unchecked(&mut self, crn: &Crn, r: ReactionId) {
        let mut next = self.last().clone();
        crn.apply_in_place(r, &mut next);
        self.steps.push(r);
        self.configs.push(next);
    }

    /// Number of recorded steps.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    /// Whether no step has been recorded.
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Initial configuration.
    pub fn c0(&self) -> &Configuration {
        &self.configs[0]
    }

    /// Configuration `c^t`, for `t ≤ len`.
    pub fn config(&self, t: usize) -> &Configuration {
        &self.configs[t]
    }

    /// All configurations `c^0 ..= c^len`.
    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    /// Last configuration.
    pub fn last(&self) -> &Configuration {
        self.configs.last().expect("at least c0")
    }

    /// Reaction `α^t`.
    pub fn step(&self, t: usize) -> ReactionId {
        self.steps[t]
    }

    /// All scheduled reactions.
    pub fn steps(&self) -> &[ReactionId] {
        &self.steps
    }

    /// Volume `φ`.
    pub fn phi(&self) -> u64 {
        self.phi
    }

    /// Recorded per-step time spans, for stochastic runs.
    pub fn spans(&self) -> Option<&[f64]> {
        self.spans.as_deref()
    }

    /// Stochastic runtime of the prefix of `t` steps: `Σ_{s<t} 1/π_{c^s}`.
    pub fn stochastic_runtime(&self, t: usize) -> f64 {
        (0..t).map(|s| 1.0 / total_propensity_f64(self.configs[s].total(), self.phi)).sum()
    }

    /// Serialize as JSON lines: a header with `c0` and `phi`, then one line
    /// per step with a configuration checkpoint every `checkpoint` steps
    /// (never when `checkpoint` is zero).
    pub fn to_jsonl(&self, checkpoint: usize) -> String {
        let mut out = serde_json::to_string(&TraceHeader { c0: self.c0().counts().to_vec(), phi: self.phi })
            .expect("serializable");
        out.push('\n');
        for (t, &r) in self.steps.iter().enumerate() {
            let config = (checkpoint > 0 && (t + 1) % checkpoint == 0).then(|| self.configs[t + 1].counts().to_vec());
            let line = TraceLine { step: t, reaction: r, config };
            out.push_str(&serde_json::to_string(&line).expect("serializable"));
            out.push('\n');
        }
        out
    }

    /// Parse and replay a JSON-lines trace, verifying every checkpoint.
    pub fn from_jsonl(crn: &Crn, text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, head) = lines.next().ok_or_else(|| CrnError::parse(1, "empty trace"))?;
        let head: TraceHeader = serde_json::from_str(head).map_err(|e| CrnError::parse(1, e.to_string()))?;
        let c0 = Configuration::new(head.c0);
        crn.check_shape(&c0)?;
        let mut e = Execution::new(c0);
        e.phi = head.phi;
        for (i, l) in lines {
            let line: TraceLine = serde_json::from_str(l).map_err(|err| CrnError::parse(i + 1, err.to_string()))?;
            if line.step != e.len() {
                return Err(CrnError::parse(i + 1, format!("expected step {}, got {}", e.len(), line.step)));
            }
            e.push(crn, line.reaction)?;
            if let Some(c) = line.config {
                if e.last().counts() != c.as_slice() {
                    return Err(CrnError::parse(i + 1, "checkpoint does not match replay"));
                }
            }
        }
        Ok(e)
    }
}

#[derive(Serialize, Deserialize)]
struct TraceHeader {
    c0: Vec<u32>,
    phi: u64,
}

#[derive(Serialize, Deserialize)]
struct TraceLine {
    step: usize,
    reaction: ReactionId,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    config: Option<Vec<u32>>,
}

/// When a run ends.
#[derive(Clone)]
pub enum Stop {
    /// At the first configuration without applicable non-void reactions.
    Halt,
    /// At the first configuration satisfying the predicate.
    When(TargetSet),
    /// After exactly the step budget.
    MaxSteps,
}

impl Stop {
    fn reached(&self, crn: &Crn, c: &Configuration) -> bool {
        match self {
            Stop::Halt => crn.is_halting(c),
            Stop::When(z) => z(c),
            Stop::MaxSteps => false,
        }
    }
}

/// Sample a reaction with probability proportional to its propensity.
///
/// Draws a unimolecular class with probability `‖c‖/π_c` by picking a
/// uniformly random molecule, and otherwise a bimolecular class by picking a
/// uniformly random unordered pair of distinct molecules; a member of the
/// class is then chosen uniformly.
pub fn sample_reaction(crn: &Crn, c: &Configuration, phi: u64, rng: &mut impl Rng) -> ReactionId {
    let n = c.total();
    let uni = n as f64;
    let bi = (n as f64) * (n as f64 - 1.0) / (2.0 * phi as f64);
    let species_at = |k: u64| {
        let mut acc = 0u64;
        for (s, &cnt) in c.counts().iter().enumerate() {
            acc += cnt as u64;
            if k < acc {
                return s;
            }
        }
        unreachable!("molecule index below total")
    };
    let key = if n < 2 || rng.random::<f64>() * (uni + bi) < uni {
        ReactantKey::Uni(species_at(rng.random_range(0..n)))
    } else {
        let k1 = rng.random_range(0..n);
        let mut k2 = rng.random_range(0..n - 1);
        if k2 >= k1 {
            k2 += 1;
        }
        let (a, b) = (species_at(k1), species_at(k2));
        ReactantKey::Bi(a.min(b), a.max(b))
    };
    let members = crn.class_for(key);
    members[rng.random_range(0..members.len())]
}

/// Sample an applicable non-void reaction proportionally to propensity and
/// return it with the summed non-void propensity, or `None` when halting.
pub fn sample_non_void(crn: &Crn, c: &Configuration, phi: u64, rng: &mut impl Rng) -> Option<(ReactionId, f64)> {
    let mut total = 0.0;
    let mut weights = Vec::new();
    for &r in crn.non_void() {
        let p = crn.propensity_f64(r, c, phi);
        if p > 0.0 {
            total += p;
            weights.push((r, p));
        }
    }
    if weights.is_empty() {
        return None;
    }
    let mut u = rng.random::<f64>() * total;
    for &(r, p) in &weights {
        if u < p {
            return Some((r, total));
        }
        u -= p;
    }
    Some((weights.last().expect("non-empty").0, total))
}

/// Run the stochastic scheduler from `c0`, recording time spans `1/π_{c^t}`.
pub fn run_stochastic(crn: &Crn, c0: &Configuration, rng: &mut ChaCha8Rng, stop: &Stop, max_steps: usize) -> Result<Execution> {
    crn.check_shape(c0)?;
    if c0.total() == 0 {
        return Err(CrnError::EmptyConfiguration);
    }
    let mut e = Execution::new(c0.clone());
    let phi = e.phi;
    let limit = crn.max_count(c0.total());
    let mut spans = Vec::new();
    loop {
        if stop.reached(crn, e.last()) {
            break;
        }
        if e.len() >= max_steps {
            if matches!(stop, Stop::MaxSteps) {
                break;
            }
            return Err(CrnError::StopNotReached { max_steps });
        }
        let c = e.last();
        spans.push(1.0 / total_propensity_f64(c.total(), phi));
        let r = sample_reaction(crn, c, phi, rng);
        e.push_unchecked(crn, r);
        check_density(e.last(), limit, crn, c0)?;
    }
    e.spans = Some(spans);
    Ok(e)
}

fn check_density(c: &Configuration, limit: u64, crn: &Crn, c0: &Configuration) -> Result<()> {
    if c.total() > limit {
        return Err(CrnError::DensityExceeded {
            count: c.total(),
            bound: crn.density_bound().to_string(),
            initial: c0.total(),
        });
    }
    Ok(())
}

/// What a strategy sees at each step.
pub struct StepView<'a> {
    /// The protocol.
    pub crn: &'a Crn,
    /// Current configuration `c^t`.
    pub config: &'a Configuration,
    /// Step index `t`.
    pub step: usize,
    /// Volume.
    pub phi: u64,
    /// Per reaction, the step since which it has been continuously applicable
    /// and unscheduled (`usize::MAX` when inapplicable); only under the
    /// fairness wrapper.
    pub since: Option<&'a [usize]>,
}

/// An adversarial scheduling strategy.
pub trait Strategy: Send {
    /// Display name.
    fn name(&self) -> &str;
    /// Choose an applicable reaction.
    fn choose(&mut self, view: &StepView<'_>, rng: &mut ChaCha8Rng) -> ReactionId;
}

/// Uniform choice among applicable non-void reactions, with a void reaction
/// scheduled with probability `void_prob` (and whenever no non-void
/// reaction is applicable).
#[derive(Clone, Debug)]
pub struct RandomStrategy {
    /// Probability of scheduling a void reaction.
    pub void_prob: f64,
}

impl Strategy for RandomStrategy {
    fn name(&self) -> &str {
        "random"
    }
    fn choose(&mut self, view: &StepView<'_>, rng: &mut ChaCha8Rng) -> ReactionId {
        let nv = view.crn.applicable_non_void(view.config);
        if nv.is_empty() || rng.random::<f64>() < self.void_prob {
            let voids: Vec<_> = view.crn.applicable(view.config).into_iter().filter(|&r| view.crn.is_void(r)).collect();
            if !voids.is_empty() {
                return voids[rng.random_range(0..voids.len())];
            }
        }
        nv[rng.random_range(0..nv.len())]
    }
}

/// Always schedules the lowest-id applicable void reaction.
#[derive(Clone, Debug, Default)]
pub struct VoidOnly;

impl Strategy for VoidOnly {
    fn name(&self) -> &str {
        "void-only"
    }
    fn choose(&mut self, view: &StepView<'_>, _rng: &mut ChaCha8Rng) -> ReactionId {
        view.crn.first_applicable_void(view.config).expect("some void reaction is applicable")
    }
}

/// Schedules the lowest-id applicable non-void reaction outside the policy's
/// target set, falling back to the lowest-id applicable target, and to a
/// void reaction at halting configurations.
#[derive(Clone)]
pub struct GreedyStarve {
    /// The runtime policy whose targets are starved.
    pub policy: RuntimePolicy,
}

impl Strategy for GreedyStarve {
    fn name(&self) -> &str {
        "greedy-starve"
    }
    fn choose(&mut self, view: &StepView<'_>, _rng: &mut ChaCha8Rng) -> ReactionId {
        let targets = self.policy.targets(view.config);
        let nv = view.crn.applicable_non_void(view.config);
        nv.iter()
            .copied()
            .find(|r| !targets.contains(r))
            .or_else(|| nv.first().copied())
            .or_else(|| view.crn.first_applicable_void(view.config))
            .expect("some reaction is applicable")
    }
}

/// A strategy defined by a closure.
pub struct FnStrategy {
    name: String,
    f: Box<dyn FnMut(&StepView<'_>, &mut ChaCha8Rng) -> ReactionId + Send>,
}

impl FnStrategy {
    /// Wrap a closure.
    pub fn new(name: impl Into<String>, f: impl FnMut(&StepView<'_>, &mut ChaCha8Rng) -> ReactionId + Send + 'static) -> Self {
        Self { name: name.into(), f: Box::new(f) }
    }
}

impl Strategy for FnStrategy {
    fn name(&self) -> &str {
        &self.name
    }
    fn choose(&mut self, view: &StepView<'_>, rng: &mut ChaCha8Rng) -> ReactionId {
        (self.f)(view, rng)
    }
}

/// Factory building a fresh strategy for an initial configuration.
pub type StrategyFactory = Arc<dyn Fn(&Crn, &Configuration) -> Box<dyn Strategy> + Send + Sync>;

/// Weak-fairness enforcement: tracks how long each reaction has been
/// continuously applicable and unscheduled, and preempts the inner strategy
/// with earliest-deadline-first scheduling (lowest reaction id among equal
/// deadlines) so that no reaction waits longer than `T_fair` steps as long
/// as at most `T_fair` reactions are simultaneously waiting.
#[derive(Clone, Debug)]
pub struct FairnessWrapper {
    t_fair: usize,
    since: Vec<usize>,
    queue: BTreeSet<(usize, ReactionId)>,
}

impl FairnessWrapper {
    /// Start tracking at `c0`.
    pub fn new(crn: &Crn, c0: &Configuration, t_fair: usize) -> Self {
        let mut since = vec![usize::MAX; crn.reaction_count()];
        let mut queue = BTreeSet::new();
        for r in crn.applicable(c0) {
            since[r] = 0;
            queue.insert((0, r));
        }
        Self { t_fair: t_fair.max(1), since, queue }
    }

    /// Threshold `T_fair`.
    pub fn t_fair(&self) -> usize {
        self.t_fair
    }

    /// Per-reaction start of the current waiting interval.
    pub fn since(&self) -> &[usize] {
        &self.since
    }

    /// Reaction that must be scheduled at step `t`, if any.
    pub fn forced(&self, t: usize) -> Option<ReactionId> {
        let len = self.queue.len();
        for (i, &(s, _)) in self.queue.iter().enumerate() {
            let deadline = s + self.t_fair - 1;
            if deadline <= t + i {
                return self.queue.first().map(|e| e.1);
            }
            if deadline > t + len - 1 {
                break;
            }
        }
        None
    }

    /// Record that `chosen` was scheduled at step `t`, producing `next`.
    pub fn update(&mut self, crn: &Crn, chosen: ReactionId, t: usize, next: &Configuration) {
        let touch = |r: ReactionId, this: &mut Self, reset: bool| {
            let applicable = crn.is_applicable(r, next);
            let cur = this.since[r];
            if reset && cur != usize::MAX {
                this.queue.remove(&(cur, r));
                this.since[r] = usize::MAX;
            }
            let cur = this.since[r];
            match (applicable, cur == usize::MAX) {
                (true, true) => {
                    this.since[r] = t + 1;
                    this.queue.insert((t + 1, r));
                }
                (false, false) => {
                    this.queue.remove(&(cur, r));
                    this.since[r] = usize::MAX;
                }
                _ => {}
            }
        };
        touch(chosen, self, true);
        for &(s, _) in crn.delta(chosen) {
            for &r in crn.reactions_with_reactant(s) {
                if r != chosen {
                    touch(r, self, false);
                }
            }
        }
    }
}

/// Run an adversarial strategy, optionally under the fairness wrapper with
/// threshold `t_fair`.
pub fn run_adversarial(
    crn: &Crn,
    c0: &Configuration,
    strategy: &mut dyn Strategy,
    t_fair: Option<usize>,
    stop: &Stop,
    max_steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Execution> {
    crn.check_shape(c0)?;
    if c0.total() == 0 {
        return Err(CrnError::EmptyConfiguration);
    }
    let mut e = Execution::new(c0.clone());
    let limit = crn.max_count(c0.total());
    let mut fair = t_fair.map(|t| FairnessWrapper::new(crn, c0, t));
    loop {
        let t = e.len();
        if stop.reached(crn, e.last()) {
            break;
        }
        if t >= max_steps {
            if matches!(stop, Stop::MaxSteps) {
                break;
            }
            return Err(CrnError::StopNotReached { max_steps });
        }
        let forced = fair.as_ref().and_then(|f| f.forced(t));
        let r = match forced {
            Some(r) => r,
            None => {
                let view = StepView {
                    crn,
                    config: e.last(),
                    step: t,
                    phi: e.phi,
                    since: fair.as_ref().map(|f| f.since()),
                };
                let r = strategy.choose(&view, rng);
                if r >= crn.reaction_count() || !crn.is_applicable(r, e.last()) {
                    return Err(CrnError::StrategyBug { strategy: strategy.name().to_string(), reaction: r, step: t });
                }
                r
            }
        };
        e.push_unchecked(crn, r);
        check_density(e.last(), limit, crn, c0)?;
        if let Some(f) = fair.as_mut() {
            f.update(crn, r, t, e.last());
        }
    }
    Ok(e)
}

/// Longest interval (in steps) on which some reaction was continuously
/// applicable and never scheduled, with the reaction attaining it.
pub fn max_starvation(crn: &Crn, e: &Execution) -> (usize, Option<ReactionId>) {
    let mut run = vec![0usize; crn.reaction_count()];
    let mut best = (0, None);
    for t in 0..e.len() {
        let c = e.config(t);
        let chosen = e.step(t);
        for r in 0..crn.reaction_count() {
            if r != chosen && crn.is_applicable(r, c) {
                run[r] += 1;
                if run[r] > best.0 {
                    best = (run[r], Some(r));
                }
            } else {
                run[r] = 0;
            }
        }
    }
    best
}

/// Whether `stem · cycle^ω` is a valid execution from `c0` whose periodic
/// part is weakly fair: the cycle returns to its start, and every reaction
/// is scheduled on the cycle or inapplicable at some configuration of it.
pub fn is_weakly_fair_lasso(crn: &Crn, c0: &Configuration, lasso: &Lasso) -> bool {
    let Ok(stem) = Execution::from_steps(crn, c0.clone(), &lasso.stem) else {
        return false;
    };
    if lasso.cycle.is_empty() {
        return false;
    }
    let start = stem.last().clone();
    let Ok(cyc) = Execution::from_steps(crn, start.clone(), &lasso.cycle) else {
        return false;
    };
    if *cyc.last() != start {
        return false;
    }
    let mut covered = vec![false; crn.reaction_count()];
    for &r in &lasso.cycle {
        covered[r] = true;
    }
    for c in &cyc.configs()[..cyc.len()] {
        for (r, cov) in covered.iter_mut().enumerate() {
            if !*cov && !crn.is_applicable(r, c) {
                *cov = true;
            }
        }
    }
    covered.into_iter().all(|x| x)
}

/// `τ(η, t, Q)`: the smallest `s > t` such that `α^{s−1} ∈ Q`, or such that
/// every reaction of `Q` was inapplicable at some configuration among
/// `c^t, …, c^s`.
pub fn tau(crn: &Crn, e: &Execution, t: usize, q: &[ReactionId]) -> Result<usize> {
    let mut marked: Vec<bool> = q.iter().map(|&r| !crn.is_applicable(r, e.config(t))).collect();
    let mut remaining = marked.iter().filter(|m| !**m).count();
    for s in t + 1.. {
        if s > e.len() {
            return Err(CrnError::Horizon { what: format!("tau from step {t} needs more than {} steps", e.len()) });
        }
        if q.contains(&e.step(s - 1)) {
            return Ok(s);
        }
        let c = e.config(s);
        for (i, &r) in q.iter().enumerate() {
            if !marked[i] && !crn.is_applicable(r, c) {
                marked[i] = true;
                remaining -= 1;
            }
        }
        if remaining == 0 {
            return Ok(s);
        }
    }
    unreachable!("loop returns")
}

/// First step whose configuration satisfies the predicate.
pub fn first_step_in(e: &Execution, pred: &dyn Fn(&Configuration) -> bool) -> Option<usize> {
    e.configs().iter().position(pred)
}

/// Earliest `t` with `c^t` in `stab(Z)` or `halt(Z)`, using a digraph that
/// contains the trace's configurations and the node mask of `Z`.
pub fn stabilization_step(e: &Execution, analysis: &DigraphAnalysis, z: &[bool], mode: Mode) -> Result<usize> {
    let target = digraph::target_mask(analysis, z, mode);
    for (t, c) in e.configs().iter().enumerate() {
        let i = analysis
            .index_of(c)
            .ok_or_else(|| CrnError::NotInDigraph { config: format!("{:?}", c.counts()) })?;
        if target[i] {
            return Ok(t);
        }
    }
    Err(CrnError::Horizon { what: "trace never enters the target set".into() })
}

/// Earliest `t` from which every configuration of the trace lies in `Z`.
///
/// On a halting trace this lower-bounds the stabilization step without a
/// digraph, which keeps it usable at population sizes beyond exploration.
pub fn settled_from(e: &Execution, z: &dyn Fn(&Configuration) -> bool) -> Option<usize> {
    let configs = e.configs();
    let mut t = configs.len();
    while t > 0 && z(&configs[t - 1]) {
        t -= 1;
    }
    (t < configs.len()).then_some(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CrnBuilder;

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
    fn kill_b_stochastic_runs_halt() {
        let crn = kill_b();
        let c0 = crn.parse_configuration("A + B + 6 X").unwrap();
        for trial in 0..100 {
            let mut rng = trial_rng(7, trial);
            let e = run_stochastic(&crn, &c0, &mut rng, &Stop::Halt, 100_000).unwrap();
            assert_eq!(e.last().get(0), 8);
            let spans = e.spans().unwrap();
            assert_eq!(spans.len(), e.len());
            assert!((spans.iter().sum::<f64>() - e.stochastic_runtime(e.len())).abs() < 1e-9);
        }
    }

    #[test]
    fn halting_start_accrues_only_void_spans() {
        let crn = kill_b();
        let c0 = crn.parse_configuration("3 A").unwrap();
        let mut rng = trial_rng(1, 0);
        let e = run_stochastic(&crn, &c0, &mut rng, &Stop::MaxSteps, 50).unwrap();
        assert_eq!(e.len(), 50);
        assert!(e.steps().iter().all(|&r| crn.is_void(r)));
    }

    #[test]
    fn sampling_matches_propensities() {
        let crn = kill_b();
        let c = crn.parse_configuration("2 A + B + 3 X + X'").unwrap();
        let phi = 7;
        let mut rng = trial_rng(3, 0);
        let draws = 100_000;
        let mut counts = vec![0usize; crn.reaction_count()];
        for _ in 0..draws {
            counts[sample_reaction(&crn, &c, phi, &mut rng)] += 1;
        }
        let total = crn.total_propensity_f64(&c, phi);
        for r in 0..crn.reaction_count() {
            let p = crn.propensity_f64(r, &c, phi) / total;
            let sd = (draws as f64 * p * (1.0 - p)).sqrt();
            assert!((counts[r] as f64 - draws as f64 * p).abs() <= 3.0 * sd + 1.0, "reaction {r}");
        }
    }

    #[test]
    fn wrapper_preempts_void_only_strategy() {
        let crn = kill_b();
        let c0 = crn.parse_configuration("A + B + 2 X").unwrap();
        let mut rng = trial_rng(0, 0);
        let t_fair = 25;
        let e = run_adversarial(&crn, &c0, &mut VoidOnly, Some(t_fair), &Stop::MaxSteps, 2_000, &mut rng).unwrap();
        assert!(e.steps().iter().any(|&r| !crn.is_void(r)));
        assert!(max_starvation(&crn, &e).0 <= t_fair);
        let unwrapped = run_adversarial(&crn, &c0, &mut VoidOnly, None, &Stop::MaxSteps, 200, &mut rng).unwrap();
        assert!(unwrapped.steps().iter().all(|&r| crn.is_void(r)));
    }

    #[test]
    fn strategy_bug_is_reported() {
        let crn = kill_b();
        let c0 = crn.parse_configuration("A + X").unwrap();
        let gamma = crn.rid("gamma").unwrap();
        let mut s = FnStrategy::new("bad", move |_, _| gamma);
        let mut rng = trial_rng(0, 0);
        let err = run_adversarial(&crn, &c0, &mut s, None, &Stop::Halt, 10, &mut rng).unwrap_err();
        assert!(matches!(err, CrnError::StrategyBug { step: 0, .. }));
    }

    #[test]
    fn jsonl_round_trip() {
        let crn = kill_b();
        let c0 = crn.parse_configuration("A + B + 4 X").unwrap();
        let mut rng = trial_rng(11, 2);
        let e = run_stochastic(&crn, &c0, &mut rng, &Stop::Halt, 100_000).unwrap();
        let text = e.to_jsonl(3);
        let back = Execution::from_jsonl(&crn, &text).unwrap();
        assert_eq!(back.configs(), e.configs());
        let tampered = text.replacen("\"reaction\":", "\"reaction\":9999,\"x\":", 1);
        assert!(Execution::from_jsonl(&crn, &tampered).is_err());
    }

    #[test]
    fn tau_conditions() {
        let crn = kill_b();
        let beta = crn.rid("beta").unwrap();
        let gamma = crn.rid("gamma").unwrap();
        let beta2 = crn.rid("beta'").unwrap();
        let delta = crn.rid("delta").unwrap();
        let c0 = crn.parse_configuration("A + B + 2 X").unwrap();
        let e = Execution::from_steps(&crn, c0, &[delta, delta, gamma, beta2]).unwrap();
        // Condition I at step 2.
        assert_eq!(tau(&crn, &e, 0, &[gamma]).unwrap(), 3);
        // Beta becomes inapplicable at c^2 (no X left) before it is scheduled.
        assert_eq!(tau(&crn, &e, 0, &[beta]).unwrap(), 2);
        // Already inapplicable at c^t: the round ends after one step.
        let e2 = Execution::from_steps(&crn, crn.parse_configuration("2 A").unwrap(), &[]).unwrap();
        assert!(tau(&crn, &e2, 0, &[beta]).is_err());
        let void = crn.first_applicable_void(e2.c0()).unwrap();
        let e2 = Execution::from_steps(&crn, e2.c0().clone(), &[void]).unwrap();
        assert_eq!(tau(&crn, &e2, 0, &[beta]).unwrap(), 1);
    }
}
