//! Library of protocol constructions and worked examples, each bundled with
//! its reference runtime policy, scripted adversaries and expected behavior.

pub mod crd;
pub mod examples;
pub mod ignition;
pub mod registry;
pub mod va;

use std::sync::Arc;

use crate::digraph::Mode;
use crate::exec::StrategyFactory;
use crate::model::{Configuration, CrdSpec, Crn, InputPredicate, Interface, ReactionId, TargetSet};
use crate::predicate::Predicate;
use crate::runtime::{RuntimePolicy, SkippingPolicy};

pub use ignition::IgnitionGadget;
pub use registry::{registry, registry_names};

/// Builds the target set `Z(c0)` of an initial configuration.
pub type TargetFactory = Arc<dyn Fn(&Configuration) -> TargetSet + Send + Sync>;

/// Generates the valid initial configurations of molecular count `n`.
pub type InitialFamily = Arc<dyn Fn(u64) -> Vec<Configuration> + Send + Sync>;

/// A per-initial-configuration expectation.
pub type InitialPredicate = Arc<dyn Fn(&Configuration) -> bool + Send + Sync>;

/// Check of one step `before --reaction--> after` of a run from `c0`.
pub type StepCheck = Arc<dyn Fn(&Configuration, &Configuration, ReactionId, &Configuration) -> bool + Send + Sync>;

/// A scripted adversarial scheduler: a strategy plus the skipping policy it
/// pairs with.
#[derive(Clone)]
pub struct Adversary {
    /// Display name.
    pub name: String,
    /// Builds the strategy for a given initial configuration.
    pub strategy: StrategyFactory,
    /// The skipping policy the adversary uses.
    pub skipping: SkippingPolicy,
}

/// A named conservation law or monotonicity property of a protocol.
#[derive(Clone)]
pub struct Invariant {
    /// Display name.
    pub name: String,
    /// Arguments: `c0`, the configuration before the step, the reaction,
    /// the configuration after the step.
    pub check: StepCheck,
}

/// The behavior the protocol is expected to exhibit.
#[derive(Clone, Debug)]
pub struct Expected {
    /// Whether correctness refers to stabilization or halting.
    pub mode: Mode,
    /// Correct under weak fairness for every valid initial configuration.
    pub weak: bool,
    /// Correct under strong fairness for every valid initial configuration.
    pub strong: bool,
    /// Asymptotic runtime class, as a label.
    pub runtime: String,
}

/// A protocol with everything needed to analyze it.
#[derive(Clone)]
pub struct ProtocolBundle {
    /// Registry name.
    pub name: String,
    /// One-line description.
    pub description: String,
    /// The reaction system.
    pub crn: Arc<Crn>,
    /// CRD metadata, for deciders.
    pub crd: Option<CrdSpec>,
    /// Task interface, when it has a textual relation.
    pub interface: Option<Interface>,
    /// Input species names, for deciders.
    pub input_names: Vec<String>,
    /// The reference runtime policy.
    pub policy: RuntimePolicy,
    /// Further named runtime policies.
    pub policies: Vec<RuntimePolicy>,
    /// Scripted adversaries.
    pub adversaries: Vec<Adversary>,
    /// Expected behavior.
    pub expected: Expected,
    /// Per initial configuration: the target set `Z(c0)`.
    pub target: TargetFactory,
    /// Valid initial configurations by molecular count.
    pub initial: InitialFamily,
    /// When weak correctness depends on the initial configuration, the
    /// expected weak verdict of each one.
    pub weak_for: Option<InitialPredicate>,
    /// Decided predicate over input vectors, for deciders.
    pub oracle: Option<InputPredicate>,
    /// The decided predicate as text-capable syntax, when known.
    pub predicate: Option<Predicate>,
    /// The ignition gadget (possibly empty).
    pub ignition: IgnitionGadget,
    /// Step invariants that hold on every run.
    pub invariants: Vec<Invariant>,
}

impl std::fmt::Debug for ProtocolBundle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProtocolBundle")
            .field("name", &self.name)
            .field("species", &self.crn.species_count())
            .field("reactions", &self.crn.non_void().len())
            .field("expected", &self.expected)
            .finish()
    }
}

impl ProtocolBundle {
    /// A bundle with the full policy, no adversaries and no CRD metadata.
    pub fn basic(
        name: impl Into<String>,
        description: impl Into<String>,
        crn: Crn,
        expected: Expected,
        target: TargetFactory,
        initial: InitialFamily,
    ) -> Self {
        let crn = Arc::new(crn);
        let ignition = IgnitionGadget::detect(&crn);
        Self {
            name: name.into(),
            description: description.into(),
            policy: RuntimePolicy::full(&crn),
            crn,
            crd: None,
            interface: None,
            input_names: Vec::new(),
            policies: Vec::new(),
            adversaries: Vec::new(),
            expected,
            target,
            initial,
            weak_for: None,
            oracle: None,
            predicate: None,
            ignition,
            invariants: Vec::new(),
        }
    }

    /// Valid initial configurations of molecular count `n`.
    pub fn initial_configs(&self, n: u64) -> Vec<Configuration> {
        (self.initial)(n)
    }

    /// The target set of `c0`.
    pub fn target_of(&self, c0: &Configuration) -> TargetSet {
        (self.target)(c0)
    }

    /// Expected weak-fairness verdict for `c0`.
    pub fn expected_weak(&self, c0: &Configuration) -> bool {
        match &self.weak_for {
            Some(f) => f(c0),
            None => self.expected.weak,
        }
    }

    /// The reference policy or a further policy by name.
    pub fn policy_named(&self, name: &str) -> Option<&RuntimePolicy> {
        std::iter::once(&self.policy).chain(&self.policies).find(|p| p.name == name)
    }

    /// A scripted adversary by name.
    pub fn adversary(&self, name: &str) -> Option<&Adversary> {
        self.adversaries.iter().find(|a| a.name == name)
    }

    /// Reaction id by name; panics on a construction bug.
    pub fn rid(&self, name: &str) -> ReactionId {
        self.crn.rid(name).unwrap_or_else(|_| panic!("bundle {} lacks reaction {name}", self.name))
    }

    /// The decided predicate evaluated on the input vector of `c0`.
    pub fn decision(&self, c0: &Configuration) -> Option<bool> {
        let crd = self.crd.as_ref()?;
        let oracle = self.oracle.as_ref()?;
        Some(oracle(&crd.input_vector(c0)))
    }

    /// The protocol in the text format.
    pub fn to_text(&self) -> String {
        crate::format::write_parts(&self.crn, self.crd.as_ref(), self.interface.as_ref())
    }
}

/// Target sets that ignore the initial configuration.
pub fn fixed_target(z: impl Fn(&Configuration) -> bool + Send + Sync + 'static) -> TargetFactory {
    let z: TargetSet = Arc::new(z);
    Arc::new(move |_| z.clone())
}

/// All vectors of `k` non-negative entries summing to `total`.
pub fn compositions(total: u32, k: usize) -> Vec<Vec<u32>> {
    if k == 0 {
        return if total == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}
