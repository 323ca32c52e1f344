//! The ignition gadget: unimolecular start-up reactions that convert initial
//! species into working species exactly once.

use serde::Serialize;

use crate::model::{Configuration, Crn, ReactionId, SpeciesId};

/// Ignition species together with their ignition reactions.
///
/// Every ignition species `A` has exactly one non-void reaction `ι_A` using
/// it as a reactant, that reaction is unimolecular, and `A` appears in no
/// other non-void reaction except as a product of another ignition reaction.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IgnitionGadget {
    /// Pairs `(A, ι_A)`, sorted by species.
    pub reactions: Vec<(SpeciesId, ReactionId)>,
}

impl IgnitionGadget {
    /// Detect the largest ignition gadget of `crn`.
    pub fn detect(crn: &Crn) -> Self {
        let mut cand: Vec<(SpeciesId, ReactionId)> = Vec::new();
        for s in 0..crn.species_count() {
            let uses = crn.non_void_with_reactant(s);
            if uses.len() != 1 {
                continue;
            }
            let r = crn.reaction(uses[0]);
            if r.reactants.total() == 1 && r.products.get(s) == 0 {
                cand.push((s, uses[0]));
            }
        }
        loop {
            let ids: Vec<ReactionId> = cand.iter().map(|&(_, r)| r).collect();
            let before = cand.len();
            cand.retain(|&(s, _)| {
                crn.non_void()
                    .iter()
                    .all(|&r| ids.contains(&r) || crn.reaction(r).products.get(s) == 0)
            });
            if cand.len() == before {
                break;
            }
        }
        Self { reactions: cand }
    }

    /// Whether the gadget is empty.
    pub fn is_empty(&self) -> bool {
        self.reactions.is_empty()
    }

    /// The ignition species.
    pub fn species(&self) -> Vec<SpeciesId> {
        self.reactions.iter().map(|&(s, _)| s).collect()
    }

    /// The ignition reactions.
    pub fn reaction_ids(&self) -> Vec<ReactionId> {
        self.reactions.iter().map(|&(_, r)| r).collect()
    }

    /// Molecular count of the ignition species in `c`.
    pub fn pending(&self, c: &Configuration) -> u64 {
        self.reactions.iter().map(|&(s, _)| c.get(s) as u64).sum()
    }

    /// Whether the gadget has matured in `c` (no ignition species left).
    pub fn is_mature(&self, c: &Configuration) -> bool {
        self.pending(c) == 0
    }

    /// Fire ignition reactions until none is applicable.
    ///
    /// Ignition reactions commute with every other reaction, so the result
    /// is the unique mature configuration reachable from `c` by ignitions.
    pub fn mature(&self, crn: &Crn, c: &Configuration) -> Configuration {
        let mut cur = c.clone();
        loop {
            let mut fired = false;
            for &(s, r) in &self.reactions {
                while cur.get(s) > 0 {
                    crn.apply_in_place(r, &mut cur);
                    fired = true;
                }
            }
            if !fired {
                return cur;
            }
        }
    }
}
