//! The discrete CRN model: species, reactions, configurations, applicability,
//! reaction application, propensities, interfaces and CRD metadata.
//!
//! A [`Crn`] is immutable once built. Every unimolecular and bimolecular
//! reactant vector over the declared species owns a non-empty reactant class;
//! classes without a declared reaction receive one synthesized void reaction,
//! whose id comes after all declared ids.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{CrnError, Result};

/// Dense species index in `0..|S|`.
pub type SpeciesId = usize;
/// Reaction index; declared reactions first, synthesized voids after.
pub type ReactionId = usize;
/// Exact rational used for propensities and temporal costs.
pub type Rational = BigRational;

/// Membership predicate for a set of configurations (a target set `Z`).
pub type TargetSet = Arc<dyn Fn(&Configuration) -> bool + Send + Sync>;

/// Build `n / d` as a [`Rational`].
pub fn rational(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Build an integer [`Rational`].
pub fn rational_int(n: u64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// Lossy conversion of a rational to `f64`.
pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// A species of a CRN.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Species {
    /// Dense index.
    pub id: SpeciesId,
    /// Display name, unique within a CRN.
    pub name: String,
}

/// A finite multiset of species stored as sorted `(species, count)` pairs
/// with every count at least one.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Multiset {
    entries: Vec<(SpeciesId, u32)>,
}

impl Multiset {
    /// The empty multiset.
    pub fn new() -> Self {
        Self::default()
    }

    /// Build from possibly repeated, unsorted pairs; zero counts are dropped.
    pub fn from_pairs<I: IntoIterator<Item = (SpeciesId, u32)>>(pairs: I) -> Self {
        let mut m = Self::new();
        for (s, k) in pairs {
            m.add(s, k);
        }
        m
    }

    /// One molecule of `s`.
    pub fn single(s: SpeciesId) -> Self {
        Self { entries: vec![(s, 1)] }
    }

    /// One molecule each of `a` and `b` (two of `a` when equal).
    pub fn pair(a: SpeciesId, b: SpeciesId) -> Self {
        Self::from_pairs([(a, 1), (b, 1)])
    }

    /// Add `k` molecules of species `s`.
    pub fn add(&mut self, s: SpeciesId, k: u32) {
        if k == 0 {
            return;
        }
        match self.entries.binary_search_by_key(&s, |e| e.0) {
            Ok(i) => self.entries[i].1 += k,
            Err(i) => self.entries.insert(i, (s, k)),
        }
    }

    /// Count of species `s`.
    pub fn get(&self, s: SpeciesId) -> u32 {
        match self.entries.binary_search_by_key(&s, |e| e.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0,
        }
    }

    /// Total number of molecules.
    pub fn total(&self) -> u32 {
        self.entries.iter().map(|e| e.1).sum()
    }

    /// Iterate `(species, count)` pairs in species order.
    pub fn iter(&self) -> impl Iterator<Item = (SpeciesId, u32)> + '_ {
        self.entries.iter().copied()
    }

    /// Whether the multiset is empty.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of distinct species.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Apply a species renaming.
    pub fn map_species(&self, f: impl Fn(SpeciesId) -> SpeciesId) -> Self {
        Self::from_pairs(self.iter().map(|(s, k)| (f(s), k)))
    }
}

/// The reactant vector of a reactant class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReactantKey {
    /// A single molecule of a species.
    Uni(SpeciesId),
    /// Two molecules, `a <= b`; `a == b` encodes `2A`.
    Bi(SpeciesId, SpeciesId),
}

impl ReactantKey {
    /// Key of a reactant multiset with one or two molecules.
    pub fn of(r: &Multiset) -> Option<Self> {
        let e: Vec<_> = r.iter().collect();
        match (e.as_slice(), r.total()) {
            ([(a, 1)], 1) => Some(ReactantKey::Uni(*a)),
            ([(a, 2)], 2) => Some(ReactantKey::Bi(*a, *a)),
            ([(a, 1), (b, 1)], 2) => Some(ReactantKey::Bi(*a, *b)),
            _ => None,
        }
    }

    /// The reactant multiset.
    pub fn multiset(&self) -> Multiset {
        match *self {
            ReactantKey::Uni(a) => Multiset::single(a),
            ReactantKey::Bi(a, b) => Multiset::pair(a, b),
        }
    }
}

/// A reaction `(r, p)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reaction {
    /// Reaction id.
    pub id: ReactionId,
    /// Optional display name.
    pub name: Option<String>,
    /// Reactant multiset, one or two molecules.
    pub reactants: Multiset,
    /// Product multiset, at least as many molecules as the reactants.
    pub products: Multiset,
    /// Whether reactants equal products.
    pub is_void: bool,
    /// Whether the reaction was added by void completion.
    pub synthesized: bool,
}

/// A reaction as declared by a protocol, before ids are assigned.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReactionSpec {
    /// Optional display name.
    pub name: Option<String>,
    /// Reactant multiset.
    pub reactants: Multiset,
    /// Product multiset.
    pub products: Multiset,
}

impl ReactionSpec {
    /// A named reaction.
    pub fn named(name: impl Into<String>, reactants: Multiset, products: Multiset) -> Self {
        Self { name: Some(name.into()), reactants, products }
    }

    /// An unnamed reaction.
    pub fn anonymous(reactants: Multiset, products: Multiset) -> Self {
        Self { name: None, reactants, products }
    }
}

/// A configuration: a dense vector of molecular counts with a cached total.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration {
    counts: Box<[u32]>,
    total: u64,
}

impl Configuration {
    /// Build from a dense count vector.
    pub fn new(counts: Vec<u32>) -> Self {
        let total = counts.iter().map(|&k| k as u64).sum();
        Self { counts: counts.into_boxed_slice(), total }
    }

    /// The all-zero configuration over `species_count` species.
    pub fn zeros(species_count: usize) -> Self {
        Self::new(vec![0; species_count])
    }

    /// Build from a multiset.
    pub fn from_multiset(species_count: usize, m: &Multiset) -> Self {
        let mut counts = vec![0u32; species_count];
        for (s, k) in m.iter() {
            counts[s] += k;
        }
        Self::new(counts)
    }

    /// Count of species `s`.
    #[inline]
    pub fn get(&self, s: SpeciesId) -> u32 {
        self.counts[s]
    }

    /// Dense counts.
    #[inline]
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Molecular count `‖c‖`.
    #[inline]
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of species the configuration ranges over.
    pub fn species_count(&self) -> usize {
        self.counts.len()
    }

    /// Summed count of a species set.
    pub fn count_of(&self, set: &[SpeciesId]) -> u64 {
        set.iter().map(|&s| self.counts[s] as u64).sum()
    }

    /// Set the count of `s`.
    pub fn set(&mut self, s: SpeciesId, k: u32) {
        self.total = self.total - self.counts[s] as u64 + k as u64;
        self.counts[s] = k;
    }

    /// Add `k` molecules of `s`.
    pub fn add(&mut self, s: SpeciesId, k: u32) {
        self.counts[s] += k;
        self.total += k as u64;
    }

    /// Projection onto the given species, in the given order.
    pub fn restrict(&self, species: &[SpeciesId]) -> Configuration {
        Configuration::new(species.iter().map(|&s| self.counts[s]).collect())
    }

    /// Sparse view.
    pub fn to_multiset(&self) -> Multiset {
        Multiset::from_pairs(self.counts.iter().enumerate().map(|(s, &k)| (s, k)))
    }

    /// Whether the multiset `r` is contained in the configuration.
    #[inline]
    pub fn contains(&self, r: &Multiset) -> bool {
        r.iter().all(|(s, k)| self.counts[s] >= k)
    }

    fn apply_delta(&mut self, delta: &[(SpeciesId, i64)]) {
        for &(s, d) in delta {
            let v = self.counts[s] as i64 + d;
            debug_assert!(v >= 0);
            self.counts[s] = v as u32;
            self.total = (self.total as i64 + d) as u64;
        }
    }
}

/// Reactions and reactant-class index of a CRN protocol.
#[derive(Clone, Debug)]
pub struct Crn {
    species: Vec<Species>,
    index: HashMap<String, SpeciesId>,
    reactions: Vec<Reaction>,
    declared: usize,
    class_of: Vec<usize>,
    classes: Vec<Vec<ReactionId>>,
    class_keys: Vec<ReactantKey>,
    uni_class: Vec<usize>,
    bi_class: Vec<usize>,
    non_void: Vec<ReactionId>,
    delta: Vec<Vec<(SpeciesId, i64)>>,
    by_reactant: Vec<Vec<ReactionId>>,
    nv_by_reactant: Vec<Vec<ReactionId>>,
    density_bound: Rational,
}

/// Default density bound `c_d`: reachable molecular counts stay within `4·‖c0‖`.
pub fn default_density_bound() -> Rational {
    rational_int(4)
}

/// Build a CRN from species names and declared reactions, completing every
/// reactant class that has no declared reaction with a synthesized void
/// reaction.
pub fn build_crn(
    species: Vec<String>,
    declared: Vec<ReactionSpec>,
    density_bound: Rational,
) -> Result<Crn> {
    Crn::new(species, declared, density_bound)
}

impl Crn {
    /// See [`build_crn`].
    pub fn new(
        species_names: Vec<String>,
        declared: Vec<ReactionSpec>,
        density_bound: Rational,
    ) -> Result<Crn> {
        if density_bound <= Rational::zero() {
            return Err(CrnError::invalid("density bound must be positive"));
        }
        let mut index = HashMap::new();
        let mut species = Vec::with_capacity(species_names.len());
        for (id, name) in species_names.into_iter().enumerate() {
            if index.insert(name.clone(), id).is_some() {
                return Err(CrnError::DuplicateSpecies { name });
            }
            species.push(Species { id, name });
        }
        let n_species = species.len();
        let label = |i: usize, spec: &ReactionSpec| match &spec.name {
            Some(n) => n.clone(),
            None => format!("#{i}"),
        };

        let mut seen = HashSet::new();
        let mut reactions = Vec::with_capacity(declared.len());
        for (i, spec) in declared.into_iter().enumerate() {
            for (s, _) in spec.reactants.iter().chain(spec.products.iter()) {
                if s >= n_species {
                    return Err(CrnError::SpeciesOutOfRange { id: s, count: n_species });
                }
            }
            let arity = spec.reactants.total();
            if !(1..=2).contains(&arity) {
                return Err(CrnError::BadArity { reaction: label(i, &spec), arity });
            }
            if spec.products.total() < arity {
                return Err(CrnError::MassDecreasing { reaction: label(i, &spec) });
            }
            if !seen.insert((spec.reactants.clone(), spec.products.clone())) {
                return Err(CrnError::DuplicateReaction { reaction: label(i, &spec) });
            }
            let is_void = spec.reactants == spec.products;
            reactions.push(Reaction {
                id: i,
                name: spec.name,
                reactants: spec.reactants,
                products: spec.products,
                is_void,
                synthesized: false,
            });
        }
        let declared_count = reactions.len();

        // Enumerate every reactant key in a fixed order: unimolecular keys by
        // species, then bimolecular keys (a, b) with a <= b lexicographically.
        let mut class_keys = Vec::new();
        let mut uni_class = vec![usize::MAX; n_species];
        let mut bi_class = vec![usize::MAX; n_species * n_species];
        for a in 0..n_species {
            uni_class[a] = class_keys.len();
            class_keys.push(ReactantKey::Uni(a));
        }
        for a in 0..n_species {
            for b in a..n_species {
                bi_class[a * n_species + b] = class_keys.len();
                class_keys.push(ReactantKey::Bi(a, b));
            }
        }
        let key_index = |k: ReactantKey| match k {
            ReactantKey::Uni(a) => uni_class[a],
            ReactantKey::Bi(a, b) => bi_class[a * n_species + b],
        };

        let mut classes: Vec<Vec<ReactionId>> = vec![Vec::new(); class_keys.len()];
        let mut class_of = Vec::with_capacity(reactions.len());
        for r in &reactions {
            let key = ReactantKey::of(&r.reactants).expect("arity checked");
            let ci = key_index(key);
            classes[ci].push(r.id);
            class_of.push(ci);
        }
        for members in &classes {
            if members.len() > 1 {
                if let Some(&v) = members.iter().find(|&&id| reactions[id].is_void) {
                    let spec = &reactions[v];
                    let name = spec.name.clone().unwrap_or_else(|| format!("#{v}"));
                    return Err(CrnError::MixedVoidClass { reaction: name });
                }
            }
        }
        for (ci, key) in class_keys.iter().enumerate() {
            if classes[ci].is_empty() {
                let id = reactions.len();
                let r = key.multiset();
                reactions.push(Reaction {
                    id,
                    name: None,
                    reactants: r.clone(),
                    products: r,
                    is_void: true,
                    synthesized: true,
                });
                classes[ci].push(id);
                class_of.push(ci);
            }
        }

        let mut delta = Vec::with_capacity(reactions.len());
        let mut by_reactant = vec![Vec::new(); n_species];
        let mut nv_by_reactant = vec![Vec::new(); n_species];
        let mut non_void = Vec::new();
        for r in &reactions {
            let mut d: HashMap<SpeciesId, i64> = HashMap::new();
            for (s, k) in r.reactants.iter() {
                *d.entry(s).or_default() -= k as i64;
            }
            for (s, k) in r.products.iter() {
                *d.entry(s).or_default() += k as i64;
            }
            let mut d: Vec<_> = d.into_iter().filter(|&(_, v)| v != 0).collect();
            d.sort_unstable();
            delta.push(d);
            for (s, _) in r.reactants.iter() {
                by_reactant[s].push(r.id);
                if !r.is_void {
                    nv_by_reactant[s].push(r.id);
                }
            }
            if !r.is_void {
                non_void.push(r.id);
            }
        }

        Ok(Crn {
            species,
            index,
            reactions,
            declared: declared_count,
            class_of,
            classes,
            class_keys,
            uni_class,
            bi_class,
            non_void,
            delta,
            by_reactant,
            nv_by_reactant,
            density_bound,
        })
    }

    /// Species list.
    pub fn species(&self) -> &[Species] {
        &self.species
    }

    /// Number of species.
    pub fn species_count(&self) -> usize {
        self.species.len()
    }

    /// Look up a species id by name.
    pub fn species_id(&self, name: &str) -> Option<SpeciesId> {
        self.index.get(name).copied()
    }

    /// Look up a species id by name, failing on unknown names.
    pub fn sid(&self, name: &str) -> Result<SpeciesId> {
        self.species_id(name)
            .ok_or_else(|| CrnError::UnknownSpecies { name: name.to_string() })
    }

    /// Display name of a species.
    pub fn species_name(&self, s: SpeciesId) -> &str {
        &self.species[s].name
    }

    /// All reactions, declared first.
    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    /// One reaction.
    pub fn reaction(&self, id: ReactionId) -> &Reaction {
        &self.reactions[id]
    }

    /// Number of reactions including synthesized voids.
    pub fn reaction_count(&self) -> usize {
        self.reactions.len()
    }

    /// Number of declared reactions.
    pub fn declared_count(&self) -> usize {
        self.declared
    }

    /// Find a declared reaction by name.
    pub fn reaction_id(&self, name: &str) -> Option<ReactionId> {
        self.reactions[..self.declared]
            .iter()
            .position(|r| r.name.as_deref() == Some(name))
    }

    /// Find a declared reaction by name, failing on unknown names.
    pub fn rid(&self, name: &str) -> Result<ReactionId> {
        self.reaction_id(name)
            .ok_or_else(|| CrnError::invalid(format!("unknown reaction '{name}'")))
    }

    /// Non-void reaction ids in increasing order.
    pub fn non_void(&self) -> &[ReactionId] {
        &self.non_void
    }

    /// Whether a reaction is void.
    #[inline]
    pub fn is_void(&self, id: ReactionId) -> bool {
        self.reactions[id].is_void
    }

    /// Net change vector of a reaction, sorted by species.
    #[inline]
    pub fn delta(&self, id: ReactionId) -> &[(SpeciesId, i64)] {
        &self.delta[id]
    }

    /// Reactions (void or not) having `s` among their reactants.
    pub fn reactions_with_reactant(&self, s: SpeciesId) -> &[ReactionId] {
        &self.by_reactant[s]
    }

    /// Non-void reactions having `s` among their reactants.
    pub fn non_void_with_reactant(&self, s: SpeciesId) -> &[ReactionId] {
        &self.nv_by_reactant[s]
    }

    /// Members of the reactant class of reaction `id`.
    pub fn class_members(&self, id: ReactionId) -> &[ReactionId] {
        &self.classes[self.class_of[id]]
    }

    /// `|R(r)|` for the reactants `r` of reaction `id`.
    #[inline]
    pub fn class_size(&self, id: ReactionId) -> usize {
        self.classes[self.class_of[id]].len()
    }

    /// Iterate over every reactant class with its key.
    pub fn reactant_classes(&self) -> impl Iterator<Item = (ReactantKey, &[ReactionId])> + '_ {
        self.class_keys
            .iter()
            .zip(self.classes.iter())
            .map(|(k, m)| (*k, m.as_slice()))
    }

    /// Members of the class with the given reactant vector.
    pub fn class_for(&self, key: ReactantKey) -> &[ReactionId] {
        let n = self.species.len();
        let ci = match key {
            ReactantKey::Uni(a) => self.uni_class[a],
            ReactantKey::Bi(a, b) => self.bi_class[a.min(b) * n + a.max(b)],
        };
        &self.classes[ci]
    }

    /// Declared density bound `c_d`.
    pub fn density_bound(&self) -> &Rational {
        &self.density_bound
    }

    /// Largest molecular count permitted by the density bound for an initial
    /// count `initial`.
    pub fn max_count(&self, initial: u64) -> u64 {
        let b = &self.density_bound * rational_int(initial);
        b.floor().to_integer().to_u64().unwrap_or(u64::MAX)
    }

    /// Check that a configuration ranges over this CRN's species.
    pub fn check_shape(&self, c: &Configuration) -> Result<()> {
        if c.species_count() != self.species.len() {
            return Err(CrnError::ConfigurationShape {
                got: c.species_count(),
                expected: self.species.len(),
            });
        }
        Ok(())
    }

    /// Whether reaction `id` is applicable to `c`.
    #[inline]
    pub fn is_applicable(&self, id: ReactionId, c: &Configuration) -> bool {
        c.contains(&self.reactions[id].reactants)
    }

    /// Every applicable reaction (void ones included), in increasing id order.
    pub fn applicable(&self, c: &Configuration) -> Vec<ReactionId> {
        let n = self.species.len();
        let present: Vec<SpeciesId> = (0..n).filter(|&s| c.get(s) > 0).collect();
        let mut out = Vec::new();
        for (i, &a) in present.iter().enumerate() {
            out.extend_from_slice(&self.classes[self.uni_class[a]]);
            if c.get(a) >= 2 {
                out.extend_from_slice(&self.classes[self.bi_class[a * n + a]]);
            }
            for &b in &present[i + 1..] {
                out.extend_from_slice(&self.classes[self.bi_class[a * n + b]]);
            }
        }
        out.sort_unstable();
        out
    }

    /// Applicable non-void reactions in increasing id order.
    pub fn applicable_non_void(&self, c: &Configuration) -> Vec<ReactionId> {
        self.non_void
            .iter()
            .copied()
            .filter(|&id| self.is_applicable(id, c))
            .collect()
    }

    /// Whether no non-void reaction is applicable.
    pub fn is_halting(&self, c: &Configuration) -> bool {
        !self.non_void.iter().any(|&id| self.is_applicable(id, c))
    }

    /// The lowest-id applicable void reaction, if any.
    pub fn first_applicable_void(&self, c: &Configuration) -> Option<ReactionId> {
        self.applicable(c).into_iter().find(|&id| self.is_void(id))
    }

    /// Apply reaction `id` to `c`, checking applicability.
    pub fn apply(&self, id: ReactionId, c: &Configuration) -> Result<Configuration> {
        if id >= self.reactions.len() {
            return Err(CrnError::ReactionOutOfRange { id });
        }
        if !self.is_applicable(id, c) {
            return Err(CrnError::Inapplicable { reaction: id, config: self.format_configuration(c) });
        }
        let mut next = c.clone();
        next.apply_delta(&self.delta[id]);
        Ok(next)
    }

    /// Apply reaction `id` in place without checking applicability.
    #[inline]
    pub fn apply_in_place(&self, id: ReactionId, c: &mut Configuration) {
        c.apply_delta(&self.delta[id]);
    }

    /// Propensity `π_c(α)` under volume `phi`, exactly.
    pub fn propensity(&self, id: ReactionId, c: &Configuration, phi: u64) -> Rational {
        let (num, per_phi) = self.propensity_parts(id, c);
        let cls = self.class_size(id) as u64;
        let den = if per_phi { phi * cls } else { cls };
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    /// Propensity as `f64`.
    #[inline]
    pub fn propensity_f64(&self, id: ReactionId, c: &Configuration, phi: u64) -> f64 {
        let (num, per_phi) = self.propensity_parts(id, c);
        let cls = self.class_size(id) as f64;
        if per_phi {
            num as f64 / (phi as f64 * cls)
        } else {
            num as f64 / cls
        }
    }

    /// Numerator of the propensity before dividing by the class size, and
    /// whether it is further divided by `phi` (bimolecular).
    #[inline]
    pub fn propensity_parts(&self, id: ReactionId, c: &Configuration) -> (u64, bool) {
        let r = &self.reactions[id].reactants;
        let mut it = r.iter();
        match (it.next(), it.next()) {
            (Some((a, 1)), None) => (c.get(a) as u64, false),
            (Some((a, 2)), None) => {
                let k = c.get(a) as u64;
                (k * k.saturating_sub(1) / 2, true)
            }
            (Some((a, 1)), Some((b, 1))) => (c.get(a) as u64 * c.get(b) as u64, true),
            _ => unreachable!("reactant arity is 1 or 2"),
        }
    }

    /// Total propensity `π_c = ‖c‖ + C(‖c‖, 2)/φ` over all reactions.
    pub fn total_propensity(&self, c: &Configuration, phi: u64) -> Rational {
        total_propensity(c.total(), phi)
    }

    /// Total propensity as `f64`.
    pub fn total_propensity_f64(&self, c: &Configuration, phi: u64) -> f64 {
        total_propensity_f64(c.total(), phi)
    }

    /// Summed propensity of the given reactions, exactly.
    pub fn propensity_of(&self, ids: &[ReactionId], c: &Configuration, phi: u64) -> Rational {
        ids.iter()
            .fold(Rational::zero(), |acc, &id| acc + self.propensity(id, c, phi))
    }

    /// Summed propensity of all non-void reactions as `f64`.
    pub fn non_void_propensity_f64(&self, c: &Configuration, phi: u64) -> f64 {
        self.non_void.iter().map(|&id| self.propensity_f64(id, c, phi)).sum()
    }

    /// Parse a configuration written as `2 A + B` (or `0` for the empty one).
    pub fn parse_configuration(&self, text: &str) -> Result<Configuration> {
        let m = crate::format::parse_side(text, &|name: &str| self.sid(name), 0)?;
        Ok(Configuration::from_multiset(self.species.len(), &m))
    }

    /// Render a configuration as `2 A + B`.
    pub fn format_configuration(&self, c: &Configuration) -> String {
        self.format_multiset(&c.to_multiset())
    }

    /// Render a multiset as `2 A + B`.
    pub fn format_multiset(&self, m: &Multiset) -> String {
        if m.is_empty() {
            return "0".to_string();
        }
        m.iter()
            .map(|(s, k)| {
                if k == 1 {
                    self.species_name(s).to_string()
                } else {
                    format!("{k} {}", self.species_name(s))
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// Name of a reaction, or `#id` for unnamed ones.
    pub fn reaction_label(&self, id: ReactionId) -> String {
        match &self.reactions[id].name {
            Some(n) => n.clone(),
            None => format!("#{id}"),
        }
    }

    /// Render a reaction as `A + X -> 2 A`.
    pub fn format_reaction(&self, id: ReactionId) -> String {
        let r = &self.reactions[id];
        format!("{} -> {}", self.format_multiset(&r.reactants), self.format_multiset(&r.products))
    }

    /// The declared reactions as specs (synthesized voids omitted).
    pub fn declared_specs(&self) -> Vec<ReactionSpec> {
        self.reactions[..self.declared]
            .iter()
            .map(|r| ReactionSpec {
                name: r.name.clone(),
                reactants: r.reactants.clone(),
                products: r.products.clone(),
            })
            .collect()
    }

    /// Species names in id order.
    pub fn species_names(&self) -> Vec<String> {
        self.species.iter().map(|s| s.name.clone()).collect()
    }
}

/// `‖c‖ + C(‖c‖, 2)/φ` exactly.
pub fn total_propensity(total: u64, phi: u64) -> Rational {
    let n = BigInt::from(total);
    let pairs = BigInt::from(total * total.saturating_sub(1) / 2);
    BigRational::from_integer(n) + BigRational::new(pairs, BigInt::from(phi))
}

/// `‖c‖ + C(‖c‖, 2)/φ` as `f64`.
#[inline]
pub fn total_propensity_f64(total: u64, phi: u64) -> f64 {
    let n = total as f64;
    n + n * (n - 1.0) / (2.0 * phi as f64)
}

/// Incremental construction of a CRN by species name, with set semantics for
/// reactions: a second declaration of the same `(r, p)` pair is ignored.
#[derive(Clone, Debug, Default)]
pub struct CrnBuilder {
    names: Vec<String>,
    index: HashMap<String, SpeciesId>,
    reactions: Vec<ReactionSpec>,
    seen: HashMap<(Multiset, Multiset), usize>,
}

impl CrnBuilder {
    /// An empty builder.
    pub fn new() -> Self {
        Self::default()
    }

    /// Get or create a species.
    pub fn species(&mut self, name: &str) -> SpeciesId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    /// Look up an existing species.
    pub fn get(&self, name: &str) -> Option<SpeciesId> {
        self.index.get(name).copied()
    }

    /// Number of species so far.
    pub fn species_count(&self) -> usize {
        self.names.len()
    }

    /// Add a reaction; returns its position among declared reactions.
    pub fn reaction(
        &mut self,
        name: Option<String>,
        reactants: Multiset,
        products: Multiset,
    ) -> usize {
        let key = (reactants.clone(), products.clone());
        if let Some(&i) = self.seen.get(&key) {
            return i;
        }
        let i = self.reactions.len();
        self.reactions.push(ReactionSpec { name, reactants, products });
        self.seen.insert(key, i);
        i
    }

    /// Add a reaction written as `A + X -> 2 A`, creating species on demand.
    pub fn parse(&mut self, name: &str, text: &str) -> usize {
        let (lhs, rhs) = text.split_once("->").expect("reaction text contains '->'");
        let r = self.side(lhs);
        let p = self.side(rhs);
        let name = if name.is_empty() { None } else { Some(name.to_string()) };
        self.reaction(name, r, p)
    }

    fn side(&mut self, text: &str) -> Multiset {
        let mut m = Multiset::new();
        for term in text.split(" + ") {
            let term = term.trim();
            if term.is_empty() || term == "0" {
                continue;
            }
            let (k, name) = match term.split_once(' ') {
                Some((k, n)) if k.chars().all(|ch| ch.is_ascii_digit()) => {
                    (k.parse::<u32>().expect("coefficient"), n.trim())
                }
                _ => (1, term),
            };
            let s = self.species(name);
            m.add(s, k);
        }
        m
    }

    /// Finish, with the default density bound.
    pub fn build(self) -> Result<Crn> {
        self.build_with_density(default_density_bound())
    }

    /// Finish, with an explicit density bound.
    pub fn build_with_density(self, density_bound: Rational) -> Result<Crn> {
        Crn::new(self.names, self.reactions, density_bound)
    }
}

/// Correctness relation of an interface over pairs of interface vectors
/// `(μ(c0), μ(c))`.
pub type CorrectnessRelation = Arc<dyn Fn(&[u64], &[u64]) -> bool + Send + Sync>;

/// A predicate over input vectors.
pub type InputPredicate = Arc<dyn Fn(&[u64]) -> bool + Send + Sync>;

/// Task interface: a value set `U`, a species-to-value mapping, and a
/// correctness relation over interface vectors.
#[derive(Clone)]
pub struct Interface {
    /// Value labels.
    pub values: Vec<String>,
    /// Value index of every species.
    pub mapping: Vec<usize>,
    /// Textual description of the correctness relation (for serialization).
    pub relation_text: String,
    /// The correctness relation.
    pub relation: CorrectnessRelation,
}

impl fmt::Debug for Interface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Interface")
            .field("values", &self.values)
            .field("mapping", &self.mapping)
            .field("relation", &self.relation_text)
            .finish()
    }
}

impl Interface {
    /// Interface vector `μ(c)`.
    pub fn vector(&self, c: &Configuration) -> Vec<u64> {
        interface_vector(self, c)
    }

    /// The target set `Z(c0) = {c : (μ(c0), μ(c)) ∈ C}`.
    pub fn target(&self, c0: &Configuration) -> TargetSet {
        let me = self.clone();
        let mu0 = self.vector(c0);
        Arc::new(move |c: &Configuration| (me.relation)(&mu0, &me.vector(c)))
    }
}

/// Interface vector `μ(c)`: summed counts of the species mapped to each value.
pub fn interface_vector(interface: &Interface, c: &Configuration) -> Vec<u64> {
    let mut v = vec![0u64; interface.values.len()];
    for (s, &u) in interface.mapping.iter().enumerate() {
        v[u] += c.get(s) as u64;
    }
    v
}

/// CRD metadata: input species, voter sets, fuel species and context.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrdSpec {
    /// Input species `Σ`.
    pub inputs: Vec<SpeciesId>,
    /// Voters `Υ0`.
    pub voters0: Vec<SpeciesId>,
    /// Voters `Υ1`.
    pub voters1: Vec<SpeciesId>,
    /// Fuel species `F`.
    pub fuel: SpeciesId,
    /// Context `k` over `S − (Σ ∪ {F})`.
    pub context: Multiset,
}

impl CrdSpec {
    /// Validate and build.
    pub fn new(
        inputs: Vec<SpeciesId>,
        voters0: Vec<SpeciesId>,
        voters1: Vec<SpeciesId>,
        fuel: SpeciesId,
        context: Multiset,
    ) -> Result<Self> {
        if voters0.iter().any(|v| voters1.contains(v)) {
            return Err(CrnError::invalid("voter sets must be disjoint"));
        }
        if inputs.contains(&fuel) {
            return Err(CrnError::invalid("fuel species must not be an input"));
        }
        if context.iter().any(|(s, _)| s == fuel || inputs.contains(&s)) {
            return Err(CrnError::invalid("context must avoid inputs and fuel"));
        }
        Ok(Self { inputs, voters0, voters1, fuel, context })
    }

    /// Whether `c` is a valid initial configuration.
    pub fn valid_initial(&self, c: &Configuration) -> bool {
        valid_initial(self, c)
    }

    /// The initial configuration with input vector `x` and `fuel` fuel molecules.
    pub fn initial(&self, species_count: usize, x: &[u32], fuel: u32) -> Configuration {
        let mut c = Configuration::from_multiset(species_count, &self.context);
        for (&s, &k) in self.inputs.iter().zip(x) {
            c.add(s, k);
        }
        c.add(self.fuel, fuel);
        c
    }

    /// Input vector `c|_Σ`.
    pub fn input_vector(&self, c: &Configuration) -> Vec<u64> {
        self.inputs.iter().map(|&s| c.get(s) as u64).collect()
    }

    /// The vote `v` of `c` if `c(Υ_v) > 0` and `c(Υ_{1−v}) = 0`.
    pub fn vote(&self, c: &Configuration) -> Option<u8> {
        let n0 = c.count_of(&self.voters0);
        let n1 = c.count_of(&self.voters1);
        match (n0 > 0, n1 > 0) {
            (true, false) => Some(0),
            (false, true) => Some(1),
            _ => None,
        }
    }

    /// The target set `D_v`.
    pub fn target(&self, v: u8) -> TargetSet {
        let me = self.clone();
        Arc::new(move |c: &Configuration| me.vote(c) == Some(v))
    }

    /// The CRD interface `U = (Σ ∪ {⊥}) × {0, 1, ⊥}` for a decided predicate.
    pub fn interface(
        &self,
        species_count: usize,
        predicate: InputPredicate,
        relation_text: impl Into<String>,
        input_names: &[String],
    ) -> Interface {
        let k = self.inputs.len();
        let mut values: Vec<String> = input_names.iter().map(|n| format!("({n},⊥)")).collect();
        values.extend(["(⊥,0)", "(⊥,1)", "(⊥,⊥)"].map(String::from));
        let mut mapping = vec![k + 2; species_count];
        for &s in &self.voters0 {
            mapping[s] = k;
        }
        for &s in &self.voters1 {
            mapping[s] = k + 1;
        }
        for (i, &s) in self.inputs.iter().enumerate() {
            mapping[s] = i;
        }
        let relation: CorrectnessRelation = Arc::new(move |mu0: &[u64], mu: &[u64]| {
            let v = predicate(&mu0[..k]) as usize;
            mu[k + v] > 0 && mu[k + 1 - v] == 0
        });
        Interface { values, mapping, relation_text: relation_text.into(), relation }
    }
}

/// Whether `c` restricted to `S − (Σ ∪ {F})` equals the context and `c(F) ≥ 1`.
pub fn valid_initial(crd: &CrdSpec, c: &Configuration) -> bool {
    if c.get(crd.fuel) == 0 {
        return false;
    }
    (0..c.species_count())
        .filter(|s| *s != crd.fuel && !crd.inputs.contains(s))
        .all(|s| c.get(s) == crd.context.get(s))
}

/// `C(n, 2)` as an exact rational over `phi`: helper for closed-form oracles.
pub fn pairs_over_phi(n: u64, phi: u64) -> Rational {
    BigRational::new(BigInt::from(n * n.saturating_sub(1) / 2), BigInt::from(phi))
}

/// `1 / x` for a positive rational.
pub fn recip(x: &Rational) -> Rational {
    Rational::one() / x
}

#[cfg(test)]
mod tests {
    use super::*;

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
    fn empty_declaration_is_fully_void_completed() {
        let crn = build_crn(vec!["A".into()], vec![], default_density_bound()).unwrap();
        assert_eq!(crn.reaction_count(), 2);
        assert!(crn.reactions().iter().all(|r| r.is_void && r.synthesized));
        assert_eq!(crn.class_for(ReactantKey::Uni(0)).len(), 1);
        assert_eq!(crn.class_for(ReactantKey::Bi(0, 0)).len(), 1);
        assert!(crn.non_void().is_empty());
    }

    #[test]
    fn kill_b_non_void_set_and_class() {
        let crn = kill_b();
        assert_eq!(crn.non_void(), &[0, 1, 2, 3, 4]);
        let a = crn.sid("A").unwrap();
        let x = crn.sid("X").unwrap();
        assert_eq!(crn.class_for(ReactantKey::Bi(a, x)), &[0]);
        // 4 unimolecular + 10 bimolecular classes, 5 of which are declared.
        assert_eq!(crn.reaction_count(), 5 + 14 - 5);
    }

    #[test]
    fn mixed_void_class_is_rejected() {
        let m = |a: usize, b: usize| Multiset::pair(a, b);
        let specs = vec![
            ReactionSpec::named("beta", m(0, 1), Multiset::from_pairs([(2, 2)])),
            ReactionSpec::named("v", m(0, 1), m(0, 1)),
        ];
        let err = build_crn(vec!["X0".into(), "X1".into(), "W".into()], specs, default_density_bound());
        assert!(matches!(err, Err(CrnError::MixedVoidClass { .. })));
    }

    #[test]
    fn bad_declarations_are_rejected() {
        let names = || vec!["A".to_string(), "B".to_string()];
        let three = ReactionSpec::anonymous(Multiset::from_pairs([(0, 3)]), Multiset::from_pairs([(1, 3)]));
        assert!(matches!(
            build_crn(names(), vec![three], default_density_bound()),
            Err(CrnError::BadArity { .. })
        ));
        let shrink = ReactionSpec::anonymous(Multiset::pair(0, 1), Multiset::single(0));
        assert!(matches!(
            build_crn(names(), vec![shrink], default_density_bound()),
            Err(CrnError::MassDecreasing { .. })
        ));
        assert!(matches!(
            build_crn(vec!["A".into(), "A".into()], vec![], default_density_bound()),
            Err(CrnError::DuplicateSpecies { .. })
        ));
    }

    #[test]
    fn kill_b_applicability_and_apply() {
        let crn = kill_b();
        let c = crn.parse_configuration("A + B + X").unwrap();
        let nv = crn.applicable_non_void(&c);
        let names: Vec<_> = nv.iter().map(|&r| crn.reaction_label(r)).collect();
        assert_eq!(names, ["beta", "gamma", "delta"]);
        let c = crn.parse_configuration("2 A + B + 3 X").unwrap();
        let g = crn.rid("gamma").unwrap();
        let next = crn.apply(g, &c).unwrap();
        assert_eq!(next, crn.parse_configuration("3 A + 3 X").unwrap());
        let void = crn.first_applicable_void(&c).unwrap();
        assert_eq!(crn.apply(void, &c).unwrap(), c);
        assert!(crn.apply(g, &next).is_err());
    }

    #[test]
    fn single_molecule_only_void_applicable_for_dimer_class() {
        let mut b = CrnBuilder::new();
        b.parse("dimer", "A + A -> 2 B");
        let crn = b.build().unwrap();
        let c = crn.parse_configuration("A").unwrap();
        let app = crn.applicable(&c);
        assert_eq!(app.len(), 1);
        assert!(crn.is_void(app[0]));
        assert_eq!(crn.reaction(app[0]).reactants.total(), 1);
    }

    #[test]
    fn propensity_examples() {
        let mut b = CrnBuilder::new();
        b.parse("beta", "X0 + X1 -> 2 W");
        let crn = b.build().unwrap();
        let c = crn.parse_configuration("3 X0 + 2 X1").unwrap();
        assert_eq!(crn.propensity(0, &c, 8), rational(6, 8));
        let c4 = crn.parse_configuration("2 X0 + 2 W").unwrap();
        assert_eq!(crn.total_propensity(&c4, 4), rational(11, 2));
        let sum = crn.propensity_of(&(0..crn.reaction_count()).collect::<Vec<_>>(), &c4, 4);
        assert_eq!(sum, rational(11, 2));
        assert_eq!(crn.propensity(0, &c4, 4), Rational::zero());
    }

    #[test]
    fn crd_interface_vector_matches_footnote_example() {
        let mut b = CrnBuilder::new();
        let a = b.species("A");
        let f = b.species("F");
        let lb = b.species("L_b");
        let l0 = b.species("L_0");
        b.parse("", "A -> L_b");
        let crn = b.build().unwrap();
        let crd = CrdSpec::new(vec![a], vec![l0], vec![lb], f, Multiset::new()).unwrap();
        let iface = crd.interface(crn.species_count(), Arc::new(|_: &[u64]| true), "decide", &["A".into()]);
        let c = crn.parse_configuration("2 A + L_b").unwrap();
        let mu = iface.vector(&c);
        assert_eq!(mu, vec![2, 0, 1, 0]);
        let none = crn.parse_configuration("2 A + F").unwrap();
        assert_eq!(&iface.vector(&none)[1..3], &[0, 0]);
    }

    #[test]
    fn valid_initial_checks_fuel_and_context() {
        let mut b = CrnBuilder::new();
        let a = b.species("A");
        let f = b.species("F");
        let l = b.species("L");
        b.parse("ia", "A -> L");
        let crn = b.build().unwrap();
        let crd = CrdSpec::new(vec![a], vec![], vec![l], f, Multiset::new()).unwrap();
        assert!(crd.valid_initial(&crn.parse_configuration("3 A + 2 F").unwrap()));
        assert!(!crd.valid_initial(&crn.parse_configuration("3 A").unwrap()));
        assert!(!crd.valid_initial(&crn.parse_configuration("3 A + F + L").unwrap()));
    }
}
