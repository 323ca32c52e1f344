//! The adversarial runtime measure: runtime policies, skipping policies,
//! round partitioning, temporal cost (Monte-Carlo and analytic bound) and
//! runtime aggregation over rounds.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use num::Zero;
use serde::Serialize;

use crate::digraph::DigraphAnalysis;
use crate::error::{CrnError, Result};
use crate::exec::{run_stochastic, sample_non_void, tau, trial_rng, Execution, Stop};
use crate::model::{
    rational_to_f64, recip, total_propensity, total_propensity_f64, Configuration, Crn, Rational,
    ReactionId, SpeciesId,
};

/// Target function of a runtime policy.
pub type PolicyFn = Arc<dyn Fn(&Configuration) -> Vec<ReactionId> + Send + Sync>;

/// A runtime policy `ρ`: maps configurations to target sets of non-void
/// reactions (which may be inapplicable).
#[derive(Clone)]
pub struct RuntimePolicy {
    /// Display name.
    pub name: String,
    f: PolicyFn,
}

impl std::fmt::Debug for RuntimePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RuntimePolicy({})", self.name)
    }
}

impl RuntimePolicy {
    /// Wrap a target function.
    pub fn new(name: impl Into<String>, f: impl Fn(&Configuration) -> Vec<ReactionId> + Send + Sync + 'static) -> Self {
        Self { name: name.into(), f: Arc::new(f) }
    }

    /// Target set of `c`, sorted and deduplicated.
    pub fn targets(&self, c: &Configuration) -> Vec<ReactionId> {
        let mut q = (self.f)(c);
        q.sort_unstable();
        q.dedup();
        q
    }

    /// The full policy `ρ_f(c) = NV(R)`.
    pub fn full(crn: &Crn) -> Self {
        let nv = crn.non_void().to_vec();
        Self::new("full", move |_| nv.clone())
    }

    /// A constant target set.
    pub fn fixed(name: impl Into<String>, ids: Vec<ReactionId>) -> Self {
        Self::new(name, move |_| ids.clone())
    }

    /// The escaping-set policy: targets the escaping reactions of the
    /// component containing `c` (empty outside the digraph).
    pub fn escaping(analysis: Arc<DigraphAnalysis>) -> Self {
        Self::new("escaping", move |c| match analysis.index_of(c) {
            Some(i) => analysis.escaping(analysis.scc_of(i)).to_vec(),
            None => Vec::new(),
        })
    }

    /// Lift a policy of a sub-protocol embedded in a larger one.
    ///
    /// `species_map[s]` is the outer id of inner species `s`;
    /// `reaction_map[r]` the outer id of inner reaction `r`.
    pub fn lift(&self, species_map: Vec<SpeciesId>, reaction_map: Vec<Option<ReactionId>>) -> Self {
        let inner = self.clone();
        Self::new(self.name.clone(), move |c| {
            let sub = c.restrict(&species_map);
            inner.targets(&sub).into_iter().filter_map(|r| reaction_map.get(r).copied().flatten()).collect()
        })
    }
}

/// A skipping policy `σ` with `σ(t) ≥ t`.
#[derive(Clone)]
pub enum SkippingPolicy {
    /// `σ(t) = t`.
    Identity,
    /// A trace-dependent map.
    Custom(String, Arc<dyn Fn(&Execution, usize) -> usize + Send + Sync>),
}

impl std::fmt::Debug for SkippingPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl SkippingPolicy {
    /// Display name.
    pub fn name(&self) -> &str {
        match self {
            SkippingPolicy::Identity => "identity",
            SkippingPolicy::Custom(n, _) => n,
        }
    }

    /// Evaluate `σ(t)`, checking `σ(t) ≥ t`.
    pub fn apply(&self, e: &Execution, t: usize) -> Result<usize> {
        let s = match self {
            SkippingPolicy::Identity => t,
            SkippingPolicy::Custom(_, f) => f(e, t),
        };
        if s < t {
            return Err(CrnError::BadSkipping { step: t, got: s });
        }
        Ok(s)
    }
}

/// One round of the partition.
#[derive(Clone, Debug, Serialize)]
pub struct Round {
    /// Initial step `t(i)`.
    pub t: usize,
    /// Effective step `t_e(i) = σ(t(i))`.
    pub t_e: usize,
    /// Target set `Q_i = ρ(e^i)`.
    pub targets: Vec<ReactionId>,
    /// Whether the round ended by scheduling a target.
    pub accomplished: bool,
    /// First step after the round, `t(i+1)`.
    pub end: usize,
}

/// Round partition of an execution prefix.
#[derive(Clone, Debug, Serialize)]
pub struct RoundPartition {
    /// Rounds `0 .. i*`.
    pub rounds: Vec<Round>,
    /// `i* = min{i : t(i) ≥ t*}`.
    pub i_star: usize,
    /// The step `t*` the partition was computed up to.
    pub t_star: usize,
}

/// Partition `e` into rounds under `ρ` and `σ` until the first round whose
/// initial step reaches `t_star`.
pub fn partition_rounds(crn: &Crn, e: &Execution, rho: &RuntimePolicy, sigma: &SkippingPolicy, t_star: usize) -> Result<RoundPartition> {
    let mut rounds = Vec::new();
    let mut t = 0;
    while t < t_star {
        let t_e = sigma.apply(e, t)?;
        if t_e > e.len() {
            return Err(CrnError::Horizon { what: format!("effective step {t_e} beyond trace of {} steps", e.len()) });
        }
        let q = rho.targets(e.config(t_e));
        let end = tau(crn, e, t_e, &q)?;
        let accomplished = q.contains(&e.step(end - 1));
        rounds.push(Round { t, t_e, targets: q, accomplished, end });
        t = end;
    }
    let i_star = rounds.len();
    Ok(RoundPartition { rounds, i_star, t_star })
}

/// Monte-Carlo temporal cost estimate.
#[derive(Clone, Debug, Serialize)]
pub struct TcEstimate {
    /// Mean over completed trials, in time units.
    pub mean: f64,
    /// 95% normal-approximation half-width.
    pub half_width: f64,
    /// Completed trials.
    pub trials: usize,
    /// Trials that exceeded the jump budget and were excluded.
    pub flagged: usize,
}

/// Default jump budget of one temporal-cost trial.
pub const DEFAULT_MAX_JUMPS: usize = 1_000_000;

/// Estimate `TC^ρ(c)` for target set `q` by simulating the jump chain of
/// the stochastic scheduler from `c`.
///
/// Void steps leave the configuration unchanged and cannot end a round, so
/// each non-void jump contributes its expected holding time `1/π_NV`
/// exactly; when `q` is entirely inapplicable at `c` the round is a single
/// step of cost `1/π_c`.
pub fn temporal_cost_mc(crn: &Crn, c: &Configuration, q: &[ReactionId], phi: u64, trials: usize, seed: u64, max_jumps: usize) -> TcEstimate {
    let marked0: Vec<bool> = q.iter().map(|&r| !crn.is_applicable(r, c)).collect();
    if marked0.iter().all(|m| *m) {
        return TcEstimate { mean: 1.0 / total_propensity_f64(c.total(), phi), half_width: 0.0, trials, flagged: 0 };
    }
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    let mut done = 0usize;
    let mut flagged = 0usize;
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial as u64);
        let mut cur = c.clone();
        let mut marked = marked0.clone();
        let mut remaining = marked.iter().filter(|m| !**m).count();
        let mut time = 0.0;
        let mut ok = false;
        for _ in 0..max_jumps {
            let Some((r, pi_nv)) = sample_non_void(crn, &cur, phi, &mut rng) else {
                break;
            };
            time += 1.0 / pi_nv;
            if q.contains(&r) {
                ok = true;
                break;
            }
            crn.apply_in_place(r, &mut cur);
            for (i, &x) in q.iter().enumerate() {
                if !marked[i] && !crn.is_applicable(x, &cur) {
                    marked[i] = true;
                    remaining -= 1;
                }
            }
            if remaining == 0 {
                ok = true;
                break;
            }
        }
        if ok {
            sum += time;
            sumsq += time * time;
            done += 1;
        } else {
            flagged += 1;
        }
    }
    let mean = if done > 0 { sum / done as f64 } else { f64::NAN };
    let var = if done > 1 { (sumsq - sum * mean) / (done as f64 - 1.0) } else { 0.0 };
    let half_width = 1.96 * (var.max(0.0) / done.max(1) as f64).sqrt();
    TcEstimate { mean, half_width, trials: done, flagged }
}

/// Analytic upper bound `1/p` on `TC^ρ(c)`, where `p` is the least target
/// propensity `π(ρ(c))` over the `ρ`-avoiding reachable set of `c`: the
/// configurations reachable from `c` by non-target reactions while some
/// target stays applicable.
///
/// When no target is applicable at `c` the round lasts exactly one step and
/// the cost is `1/π_c`.
pub fn temporal_cost_bound(crn: &Crn, c: &Configuration, q: &[ReactionId], phi: u64, max_states: usize) -> Result<Option<Rational>> {
    let active: Vec<ReactionId> = q.iter().copied().filter(|&r| crn.is_applicable(r, c)).collect();
    if active.is_empty() {
        return Ok(Some(recip(&total_propensity(c.total(), phi))));
    }
    let pi_q = |x: &Configuration| crn.propensity_of(q, x, phi);
    let others: Vec<ReactionId> = crn.non_void().iter().copied().filter(|r| !q.contains(r)).collect();
    // When no avoiding reaction touches a target reactant, π(ρ(c)) is the
    // same along every avoiding path.
    let q_species: HashSet<SpeciesId> = q.iter().flat_map(|&r| crn.reaction(r).reactants.iter().map(|(s, _)| s)).collect();
    let invariant = others.iter().all(|&r| crn.delta(r).iter().all(|(s, _)| !q_species.contains(s)));
    if invariant {
        let p = pi_q(c);
        return Ok((!p.is_zero()).then(|| recip(&p)));
    }
    let mut min_p: Option<Rational> = None;
    let mut visited: HashSet<Configuration> = HashSet::new();
    for &alpha in &active {
        let mut seen: HashSet<Configuration> = HashSet::from([c.clone()]);
        let mut queue = VecDeque::from([c.clone()]);
        while let Some(x) = queue.pop_front() {
            if visited.insert(x.clone()) {
                let p = pi_q(&x);
                if min_p.as_ref().is_none_or(|m| p < *m) {
                    min_p = Some(p);
                }
                if visited.len() > max_states {
                    return Err(CrnError::StateBudget { limit: max_states });
                }
            }
            for &r in &others {
                if crn.is_applicable(r, &x) {
                    let mut y = x.clone();
                    crn.apply_in_place(r, &mut y);
                    if crn.is_applicable(alpha, &y) && seen.insert(y.clone()) {
                        queue.push_back(y);
                    }
                }
            }
        }
    }
    Ok(min_p.filter(|p| !p.is_zero()).map(|p| recip(&p)))
}

/// Source of per-round temporal costs.
#[derive(Clone, Copy, Debug)]
pub enum TcSource {
    /// Monte-Carlo estimate.
    Mc {
        /// Trials per configuration.
        trials: usize,
        /// Master seed.
        seed: u64,
    },
    /// The analytic bound.
    Bound {
        /// Budget for the avoiding-set search.
        max_states: usize,
    },
}

/// Runtime of an execution prefix with its round partition.
#[derive(Clone, Debug, Serialize)]
pub struct RtReport {
    /// `Σ_{i<i*} TC^ρ(e^i)` in time units.
    pub rt: f64,
    /// The partition.
    pub partition: RoundPartition,
    /// Temporal cost of each round.
    pub costs: Vec<f64>,
}

/// `RT^{ρ,σ}` of the prefix of `e` ending at `t_star` (a stabilization or
/// halting step), with per-round costs memoized by effective configuration.
pub fn rt_of_execution(crn: &Crn, e: &Execution, rho: &RuntimePolicy, sigma: &SkippingPolicy, t_star: usize, tc: TcSource) -> Result<RtReport> {
    let partition = partition_rounds(crn, e, rho, sigma, t_star)?;
    let mut memo: HashMap<Configuration, f64> = HashMap::new();
    let mut costs = Vec::with_capacity(partition.rounds.len());
    for round in &partition.rounds {
        let c = e.config(round.t_e);
        let cost = match memo.get(c) {
            Some(&v) => v,
            None => {
                let v = round_cost(crn, c, &round.targets, e.phi(), tc)?;
                memo.insert(c.clone(), v);
                v
            }
        };
        costs.push(cost);
    }
    Ok(RtReport { rt: costs.iter().fold(0.0, |a, b| a + b), partition, costs })
}

fn round_cost(crn: &Crn, c: &Configuration, q: &[ReactionId], phi: u64, tc: TcSource) -> Result<f64> {
    match tc {
        TcSource::Mc { trials, seed } => {
            let est = temporal_cost_mc(crn, c, q, phi, trials, seed, DEFAULT_MAX_JUMPS);
            if est.trials == 0 {
                return Err(CrnError::Horizon { what: "every temporal-cost trial exceeded its budget".into() });
            }
            Ok(est.mean)
        }
        TcSource::Bound { max_states } => match temporal_cost_bound(crn, c, q, phi, max_states)? {
            Some(b) => Ok(rational_to_f64(&b)),
            None => Err(CrnError::Horizon { what: "temporal cost bound undefined".into() }),
        },
    }
}

/// Result of the stochastic benchmark comparison.
#[derive(Clone, Debug, Serialize)]
pub struct BenchmarkReport {
    /// Runs performed.
    pub runs: usize,
    /// Mean `RT^{ρ_f, σ_id}` with Monte-Carlo round costs.
    pub mean_rt: f64,
    /// Mean accumulated stochastic runtime up to `t*`.
    pub mean_stochastic: f64,
    /// Standard error of the stochastic runtime mean.
    pub stochastic_se: f64,
    /// Whether every trace had a round boundary exactly at `t*`.
    pub boundary_at_t_star: bool,
}

/// Compare, over stochastic runs from `c0` stopped by `stop`, the runtime
/// under the full policy and identity skipping with the accumulated
/// stochastic runtime.
pub fn benchmark_check(crn: &Crn, c0: &Configuration, stop: &Stop, runs: usize, seed: u64, max_steps: usize, tc_trials: usize) -> Result<BenchmarkReport> {
    let rho = RuntimePolicy::full(crn);
    let mut sum_rt = 0.0;
    let mut sum_st = 0.0;
    let mut sumsq_st = 0.0;
    let mut boundary = true;
    for run in 0..runs {
        let mut rng = trial_rng(seed, run as u64);
        let e = run_stochastic(crn, c0, &mut rng, stop, max_steps)?;
        let t_star = e.len();
        let rep = rt_of_execution(crn, &e, &rho, &SkippingPolicy::Identity, t_star, TcSource::Mc { trials: tc_trials, seed: seed ^ 0x9e37_79b9 })?;
        let last_end = rep.partition.rounds.last().map_or(0, |r| r.end);
        boundary &= last_end == t_star;
        let st: f64 = e.spans().expect("stochastic run records spans").iter().sum();
        sum_rt += rep.rt;
        sum_st += st;
        sumsq_st += st * st;
    }
    let n = runs.max(1) as f64;
    let mean_st = sum_st / n;
    let var = if runs > 1 { (sumsq_st - sum_st * mean_st) / (n - 1.0) } else { 0.0 };
    Ok(BenchmarkReport {
        runs,
        mean_rt: sum_rt / n,
        mean_stochastic: mean_st,
        stochastic_se: (var.max(0.0) / n).sqrt(),
        boundary_at_t_star: boundary,
    })
}

/// Whether non-void round boundaries coincide with the non-void steps of
/// the trace, as they must under the full policy and identity skipping.
pub fn boundaries_are_non_void_steps(crn: &Crn, e: &Execution, p: &RoundPartition) -> bool {
    let expected: Vec<usize> = (0..p.t_star.min(e.len())).filter(|&t| !crn.is_void(e.step(t))).map(|t| t + 1).collect();
    let got: Vec<usize> = p.rounds.iter().filter(|r| r.accomplished).map(|r| r.end).collect();
    let deprived_ok = p.rounds.iter().filter(|r| !r.accomplished).all(|r| r.end == r.t_e + 1);
    got == expected && deprived_ok
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rational, CrnBuilder};

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
    fn full_policy_rounds_end_at_non_void_steps() {
        let crn = kill_b();
        let c0 = crn.parse_configuration("A + B + 5 X").unwrap();
        let mut rng = trial_rng(5, 0);
        let e = run_stochastic(&crn, &c0, &mut rng, &Stop::Halt, 100_000).unwrap();
        let p = partition_rounds(&crn, &e, &RuntimePolicy::full(&crn), &SkippingPolicy::Identity, e.len()).unwrap();
        assert!(boundaries_are_non_void_steps(&crn, &e, &p));
        assert_eq!(p.rounds.last().unwrap().end, e.len());
    }

    #[test]
    fn empty_targets_cost_one_step() {
        let crn = kill_b();
        let c = crn.parse_configuration("4 A").unwrap();
        let q = crn.non_void().to_vec();
        let est = temporal_cost_mc(&crn, &c, &q, 4, 10, 0, 100);
        assert!((est.mean - 2.0 / 11.0).abs() < 1e-12);
        assert_eq!(temporal_cost_bound(&crn, &c, &q, 4, 10).unwrap(), Some(rational(2, 11)));
    }

    #[test]
    fn full_policy_bound_is_inverse_non_void_propensity() {
        let crn = kill_b();
        let c = crn.parse_configuration("2 A + B + 3 X").unwrap();
        let q = crn.non_void().to_vec();
        let b = temporal_cost_bound(&crn, &c, &q, 6, 100).unwrap().unwrap();
        let expect = recip(&crn.propensity_of(&q, &c, 6));
        assert_eq!(b, expect);
        let est = temporal_cost_mc(&crn, &c, &q, 6, 50, 1, 100);
        assert!((est.mean - rational_to_f64(&expect)).abs() < 1e-9);
        assert_eq!(est.half_width, 0.0);
    }

    #[test]
    fn kill_b_policy_cost_matches_closed_form() {
        let crn = kill_b();
        let [beta, beta2, gamma] = ["beta", "beta'", "gamma"].map(|n| crn.rid(n).unwrap());
        let c = crn.parse_configuration("2 A + B + 3 X + 2 X'").unwrap();
        let phi = 8;
        let q = vec![beta, beta2, gamma];
        let exact = rational(phi as i64, 2 * (3 + 2 + 1));
        assert_eq!(temporal_cost_bound(&crn, &c, &q, phi, 100).unwrap(), Some(exact.clone()));
        let est = temporal_cost_mc(&crn, &c, &q, phi, 4000, 9, 10_000);
        assert!((est.mean - rational_to_f64(&exact)).abs() < 0.05 * rational_to_f64(&exact));
    }

    #[test]
    fn skipping_must_not_go_back() {
        let crn = kill_b();
        let e = Execution::new(crn.parse_configuration("A").unwrap());
        let back = SkippingPolicy::Custom("back".into(), Arc::new(|_, t| t.saturating_sub(1)));
        assert!(back.apply(&e, 0).is_ok());
        assert!(matches!(back.apply(&e, 3), Err(CrnError::BadSkipping { .. })));
    }

    #[test]
    fn halting_start_has_zero_runtime() {
        let crn = kill_b();
        let c0 = crn.parse_configuration("3 A").unwrap();
        let r = benchmark_check(&crn, &c0, &Stop::Halt, 5, 0, 10, 1).unwrap();
        assert_eq!(r.mean_rt, 0.0);
        assert_eq!(r.mean_stochastic, 0.0);
        assert!(r.boundary_at_t_star);
    }
}
