//! Error type shared by every module of the crate.

use serde::Serialize;
use thiserror::Error;

/// Errors reported by model construction, analysis and simulation.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CrnError {
    /// Two species share a display name.
    #[error("duplicate species name '{name}'")]
    DuplicateSpecies { name: String },

    /// A name does not refer to a declared species.
    #[error("unknown species '{name}'")]
    UnknownSpecies { name: String },

    /// A species id is outside `0..|S|`.
    #[error("species id {id} out of range (|S| = {count})")]
    SpeciesOutOfRange { id: usize, count: usize },

    /// A reaction whose reactant vector is neither unimolecular nor bimolecular.
    #[error("reaction {reaction} has {arity} reactant molecules (expected 1 or 2)")]
    BadArity { reaction: String, arity: u32 },

    /// A reaction that consumes more molecules than it produces.
    #[error("reaction {reaction} decreases the molecular count")]
    MassDecreasing { reaction: String },

    /// A void reaction was declared in a class that also holds non-void reactions.
    #[error("void reaction {reaction} shares its reactant class with non-void reactions")]
    MixedVoidClass { reaction: String },

    /// The same (reactants, products) pair was declared twice.
    #[error("reaction {reaction} is declared twice")]
    DuplicateReaction { reaction: String },

    /// A reaction id is outside the reaction list.
    #[error("reaction id {id} out of range")]
    ReactionOutOfRange { id: usize },

    /// A reaction was applied to a configuration that does not contain its reactants.
    #[error("reaction {reaction} is not applicable to {config}")]
    Inapplicable { reaction: usize, config: String },

    /// A configuration with no molecules.
    #[error("configuration must contain at least one molecule")]
    EmptyConfiguration,

    /// A configuration whose length does not match the species count.
    #[error("configuration has {got} entries, expected {expected}")]
    ConfigurationShape { got: usize, expected: usize },

    /// Exploration visited more configurations than allowed.
    #[error("state budget of {limit} configurations exceeded")]
    StateBudget { limit: usize },

    /// A reachable configuration breaks the declared density bound.
    #[error("molecular count {count} exceeds density bound {bound} (initial count {initial})")]
    DensityExceeded { count: u64, bound: String, initial: u64 },

    /// A trace ended before the requested quantity could be determined.
    #[error("execution horizon exhausted: {what}")]
    Horizon { what: String },

    /// A stop condition was not met within the step budget.
    #[error("stop condition not reached within {max_steps} steps")]
    StopNotReached { max_steps: usize },

    /// A scheduling strategy returned a reaction that is not applicable.
    #[error("strategy '{strategy}' chose inapplicable reaction {reaction} at step {step}")]
    StrategyBug { strategy: String, reaction: usize, step: usize },

    /// A skipping policy returned a step before its argument.
    #[error("skipping policy returned {got} for step {step}")]
    BadSkipping { step: usize, got: usize },

    /// A configuration was looked up in a digraph that does not contain it.
    #[error("configuration {config} is not a node of the explored digraph")]
    NotInDigraph { config: String },

    /// Text input could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Registry lookup of an unknown protocol.
    #[error("unknown protocol '{name}'")]
    UnknownProtocol { name: String },

    /// A construction guard (size limits) was exceeded.
    #[error("guard exceeded: {message}")]
    Guard { message: String },

    /// Inputs that are structurally inconsistent.
    #[error("invalid argument: {message}")]
    InvalidArgument { message: String },
}

/// Convenience alias.
pub type Result<T> = std::result::Result<T, CrnError>;

impl CrnError {
    /// Shorthand for [`CrnError::InvalidArgument`].
    pub fn invalid(message: impl Into<String>) -> Self {
        CrnError::InvalidArgument { message: message.into() }
    }

    /// Shorthand for [`CrnError::Parse`].
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        CrnError::Parse { line, message: message.into() }
    }
}
