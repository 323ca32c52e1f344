//! Discrete chemical reaction networks: reachability digraphs, stochastic
//! and weakly fair adversarial execution, policy-based runtime analysis and
//! a library of leaderless decider constructions.

pub mod digraph;
pub mod error;
pub mod exec;
pub mod format;
pub mod model;
pub mod predicate;
pub mod protocols;
pub mod runtime;

pub use error::{CrnError, Result};
pub use model::{Configuration, Crn, CrnBuilder, Multiset, Rational, ReactionId, SpeciesId};
pub use protocols::{registry, registry_names, ProtocolBundle};
