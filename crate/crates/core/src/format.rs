//! Plain-text protocol documents.
//!
//! A document lists species, declared reactions, the density bound and the
//! optional `crd` and `interface` blocks:
//!
//! ```text
//! species A B X X'
//! density 4
//! reaction beta: A + X -> 2 A
//! reaction A + X' -> 2 A
//! crd
//!   inputs A
//!   voters0
//!   voters1 B
//!   fuel F
//!   context 0
//! end
//! interface
//!   values u0 u1
//!   map A u0
//!   relation any
//! end
//! ```
//!
//! Lines starting with `#` are comments. Synthesized void reactions are never
//! written; they are recreated by void completion on parsing, so
//! `parse(write(parse(t)))` equals `parse(t)` and `write` is a fixpoint.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{CrnError, Result};
use crate::model::{
    build_crn, default_density_bound, CorrectnessRelation, CrdSpec, Crn, Interface, Multiset,
    Rational, ReactionSpec, SpeciesId,
};

/// A parsed protocol document.
#[derive(Clone, Debug)]
pub struct ProtocolDoc {
    /// The reaction system.
    pub crn: Crn,
    /// Optional CRD metadata.
    pub crd: Option<CrdSpec>,
    /// Optional task interface.
    pub interface: Option<Interface>,
}

/// Whether `name` is usable as a species, reaction or value name.
pub fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && !name.chars().any(|c| c.is_whitespace() || c == ':' || c == '#')
        && name != "+"
        && name != "->"
}

/// Parse one side of a reaction (`2 A + B`, `2A + B` or `0`).
pub fn parse_side(
    text: &str,
    resolve: &dyn Fn(&str) -> Result<SpeciesId>,
    line: usize,
) -> Result<Multiset> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens == ["0"] {
        return Ok(Multiset::new());
    }
    let mut m = Multiset::new();
    let mut i = 0;
    let mut expect_term = true;
    while i < tokens.len() {
        let tok = tokens[i];
        if !expect_term {
            if tok != "+" {
                return Err(CrnError::parse(line, format!("expected '+', found '{tok}'")));
            }
            expect_term = true;
            i += 1;
            continue;
        }
        let digits = tok.chars().take_while(|c| c.is_ascii_digit()).count();
        let (k, name) = if digits == tok.len() {
            let k: u32 = tok
                .parse()
                .map_err(|_| CrnError::parse(line, format!("bad coefficient '{tok}'")))?;
            i += 1;
            let name = tokens
                .get(i)
                .ok_or_else(|| CrnError::parse(line, "coefficient without species"))?;
            (k, *name)
        } else if digits > 0 {
            let k: u32 = tok[..digits]
                .parse()
                .map_err(|_| CrnError::parse(line, format!("bad coefficient '{tok}'")))?;
            (k, &tok[digits..])
        } else {
            (1, tok)
        };
        if k == 0 {
            return Err(CrnError::parse(line, "zero coefficient"));
        }
        if !valid_name(name) {
            return Err(CrnError::parse(line, format!("bad species name '{name}'")));
        }
        m.add(resolve(name)?, k);
        expect_term = false;
        i += 1;
    }
    if expect_term {
        return Err(CrnError::parse(line, "empty or dangling side"));
    }
    Ok(m)
}

/// Parse `p` or `p/q` as an exact rational; `line` labels errors.
pub fn parse_rational(text: &str, line: usize) -> Result<Rational> {
    let err = || CrnError::parse(line, format!("bad rational '{text}'"));
    let (n, d) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let n: num::BigInt = n.parse().map_err(|_| err())?;
    let d: num::BigInt = d.parse().map_err(|_| err())?;
    if d == num::BigInt::from(0) {
        return Err(err());
    }
    Ok(Rational::new(n, d))
}

fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Build the correctness relation named by an `interface` block.
///
/// `any` accepts every pair, `none` rejects every pair, and
/// `decide <predicate>` is the CRD relation of the given predicate (which
/// requires a `crd` block and takes the place of the `values`/`map` lines).
fn resolve_relation(text: &str, line: usize) -> Result<CorrectnessRelation> {
    match text {
        "any" => Ok(Arc::new(|_: &[u64], _: &[u64]| true)),
        "none" => Ok(Arc::new(|_: &[u64], _: &[u64]| false)),
        _ => Err(CrnError::parse(line, format!("unknown relation '{text}'"))),
    }
}

/// Parse a protocol document.
pub fn parse_protocol(text: &str) -> Result<ProtocolDoc> {
    let mut species: Option<Vec<String>> = None;
    let mut density = default_density_bound();
    let mut raw_reactions: Vec<(usize, Option<String>, String, String)> = Vec::new();
    let mut crd_lines: Option<Vec<(usize, String)>> = None;
    let mut iface_lines: Option<Vec<(usize, String)>> = None;

    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    while let Some((ln, line)) = lines.next() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match head {
            "species" => {
                if species.is_some() {
                    return Err(CrnError::parse(ln, "second species line"));
                }
                let names: Vec<String> = rest.split_whitespace().map(String::from).collect();
                if let Some(bad) = names.iter().find(|n| !valid_name(n)) {
                    return Err(CrnError::parse(ln, format!("bad species name '{bad}'")));
                }
                species = Some(names);
            }
            "density" => density = parse_rational(rest, ln)?,
            "reaction" => {
                let (name, body) = match rest.split_once(':') {
                    Some((n, b)) => {
                        let n = n.trim();
                        if !valid_name(n) {
                            return Err(CrnError::parse(ln, format!("bad reaction name '{n}'")));
                        }
                        (Some(n.to_string()), b)
                    }
                    None => (None, rest),
                };
                let (lhs, rhs) = body
                    .split_once("->")
                    .ok_or_else(|| CrnError::parse(ln, "reaction without '->'"))?;
                raw_reactions.push((ln, name, lhs.to_string(), rhs.to_string()));
            }
            "crd" | "interface" => {
                let mut block = Vec::new();
                loop {
                    match lines.next() {
                        Some((_, "end")) => break,
                        Some((bl, l)) => {
                            if !l.is_empty() && !l.starts_with('#') {
                                block.push((bl, l.to_string()));
                            }
                        }
                        None => return Err(CrnError::parse(ln, format!("unterminated {head} block"))),
                    }
                }
                let slot = if head == "crd" { &mut crd_lines } else { &mut iface_lines };
                if slot.is_some() {
                    return Err(CrnError::parse(ln, format!("second {head} block")));
                }
                *slot = Some(block);
            }
            _ => return Err(CrnError::parse(ln, format!("unknown directive '{head}'"))),
        }
    }

    let species = species.ok_or_else(|| CrnError::parse(0, "missing species line"))?;
    let lookup = |name: &str| -> Result<SpeciesId> {
        species
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| CrnError::UnknownSpecies { name: name.to_string() })
    };
    let mut specs = Vec::with_capacity(raw_reactions.len());
    for (ln, name, lhs, rhs) in &raw_reactions {
        let reactants = parse_side(lhs, &lookup, *ln)?;
        let products = parse_side(rhs, &lookup, *ln)?;
        specs.push(ReactionSpec { name: name.clone(), reactants, products });
    }
    let crn = build_crn(species.clone(), specs, density)?;

    let crd = match crd_lines {
        None => None,
        Some(block) => Some(parse_crd(&crn, &block)?),
    };
    let interface = match iface_lines {
        None => None,
        Some(block) => Some(parse_interface(&crn, crd.as_ref(), &block)?),
    };
    Ok(ProtocolDoc { crn, crd, interface })
}

fn parse_crd(crn: &Crn, block: &[(usize, String)]) -> Result<CrdSpec> {
    let mut inputs = None;
    let mut v0 = None;
    let mut v1 = None;
    let mut fuel = None;
    let mut context = None;
    for (ln, line) in block {
        let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let ids = || -> Result<Vec<SpeciesId>> { rest.split_whitespace().map(|n| crn.sid(n)).collect() };
        match head {
            "inputs" => inputs = Some(ids()?),
            "voters0" => v0 = Some(ids()?),
            "voters1" => v1 = Some(ids()?),
            "fuel" => fuel = Some(crn.sid(rest.trim())?),
            "context" => context = Some(parse_side(rest, &|n| crn.sid(n), *ln)?),
            _ => return Err(CrnError::parse(*ln, format!("unknown crd field '{head}'"))),
        }
    }
    let missing = |f: &str| CrnError::parse(0, format!("crd block lacks '{f}'"));
    CrdSpec::new(
        inputs.ok_or_else(|| missing("inputs"))?,
        v0.ok_or_else(|| missing("voters0"))?,
        v1.ok_or_else(|| missing("voters1"))?,
        fuel.ok_or_else(|| missing("fuel"))?,
        context.ok_or_else(|| missing("context"))?,
    )
}

fn parse_interface(crn: &Crn, crd: Option<&CrdSpec>, block: &[(usize, String)]) -> Result<Interface> {
    let mut values: Option<Vec<String>> = None;
    let mut mapping: Vec<Option<usize>> = vec![None; crn.species_count()];
    let mut relation: Option<(usize, String)> = None;
    for (ln, line) in block {
        let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match head {
            "values" => values = Some(rest.split_whitespace().map(String::from).collect()),
            "map" => {
                let vals = values
                    .as_ref()
                    .ok_or_else(|| CrnError::parse(*ln, "map before values"))?;
                let mut it = rest.split_whitespace();
                let (s, v) = match (it.next(), it.next(), it.next()) {
                    (Some(s), Some(v), None) => (s, v),
                    _ => return Err(CrnError::parse(*ln, "map expects '<species> <value>'")),
                };
                let s = crn.sid(s)?;
                let v = vals
                    .iter()
                    .position(|x| x == v)
                    .ok_or_else(|| CrnError::parse(*ln, format!("unknown value '{v}'")))?;
                mapping[s] = Some(v);
            }
            "relation" => relation = Some((*ln, rest.to_string())),
            _ => return Err(CrnError::parse(*ln, format!("unknown interface field '{head}'"))),
        }
    }
    let (rl, rtext) = relation.ok_or_else(|| CrnError::parse(0, "interface block lacks 'relation'"))?;
    if let Some(pred) = rtext.strip_prefix("decide ") {
        let crd = crd.ok_or_else(|| CrnError::parse(rl, "'decide' relation requires a crd block"))?;
        let ast = crate::predicate::parse(pred).map_err(|e| CrnError::parse(rl, e.to_string()))?;
        let names: Vec<String> = crd.inputs.iter().map(|&s| crn.species_name(s).to_string()).collect();
        let eval = crate::predicate::input_predicate(&ast);
        return Ok(crd.interface(crn.species_count(), eval, rtext.clone(), &names));
    }
    let values = values.ok_or_else(|| CrnError::parse(0, "interface block lacks 'values'"))?;
    let mapping = mapping
        .into_iter()
        .enumerate()
        .map(|(s, v)| {
            v.ok_or_else(|| CrnError::parse(0, format!("species '{}' is not mapped", crn.species_name(s))))
        })
        .collect::<Result<Vec<_>>>()?;
    let relation = resolve_relation(&rtext, rl)?;
    Ok(Interface { values, mapping, relation_text: rtext, relation })
}

/// Serialize a protocol document.
pub fn write_protocol(doc: &ProtocolDoc) -> String {
    write_parts(&doc.crn, doc.crd.as_ref(), doc.interface.as_ref())
}

/// Serialize a CRN with optional CRD metadata and interface.
pub fn write_parts(crn: &Crn, crd: Option<&CrdSpec>, interface: Option<&Interface>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "species {}", crn.species_names().join(" "));
    let _ = writeln!(out, "density {}", format_rational(crn.density_bound()));
    for r in &crn.reactions()[..crn.declared_count()] {
        let body = format!(
            "{} -> {}",
            crn.format_multiset(&r.reactants),
            crn.format_multiset(&r.products)
        );
        match &r.name {
            Some(n) => {
                let _ = writeln!(out, "reaction {n}: {body}");
            }
            None => {
                let _ = writeln!(out, "reaction {body}");
            }
        }
    }
    let names = |ids: &[SpeciesId]| {
        ids.iter().map(|&s| format!(" {}", crn.species_name(s))).collect::<String>()
    };
    if let Some(crd) = crd {
        out.push_str("crd\n");
        let _ = writeln!(out, "  inputs{}", names(&crd.inputs));
        let _ = writeln!(out, "  voters0{}", names(&crd.voters0));
        let _ = writeln!(out, "  voters1{}", names(&crd.voters1));
        let _ = writeln!(out, "  fuel {}", crn.species_name(crd.fuel));
        let _ = writeln!(out, "  context {}", crn.format_multiset(&crd.context));
        out.push_str("end\n");
    }
    if let Some(iface) = interface {
        out.push_str("interface\n");
        if !iface.relation_text.starts_with("decide ") {
            let _ = writeln!(out, "  values {}", iface.values.join(" "));
            for (s, &v) in iface.mapping.iter().enumerate() {
                let _ = writeln!(out, "  map {} {}", crn.species_name(s), iface.values[v]);
            }
        }
        let _ = writeln!(out, "  relation {}", iface.relation_text);
        out.push_str("end\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const KILL_B: &str = "species A B X X'\n\
        reaction beta: A + X -> 2 A\n\
        reaction beta': A + X' -> 2A\n\
        reaction gamma: A + B -> 2 A\n\
        reaction delta: B + X -> B + X'\n\
        reaction delta': B + X' -> B + X\n";

    #[test]
    fn parses_kill_b_and_round_trips() {
        let doc = parse_protocol(KILL_B).unwrap();
        assert_eq!(doc.crn.declared_count(), 5);
        let text = write_protocol(&doc);
        let again = parse_protocol(&text).unwrap();
        assert_eq!(write_protocol(&again), text);
        assert_eq!(again.crn.declared_specs(), doc.crn.declared_specs());
        assert_eq!(again.crn.reaction_count(), doc.crn.reaction_count());
    }

    #[test]
    fn crd_and_interface_blocks_round_trip() {
        let text = "species A F L Y\n\
            reaction iota: A -> L\n\
            reaction F -> L\n\
            crd\n  inputs A\n  voters0 Y\n  voters1 L\n  fuel F\n  context 0\nend\n\
            interface\n  values a b\n  map A a\n  map F a\n  map L b\n  map Y b\n  relation any\nend\n";
        let doc = parse_protocol(text).unwrap();
        let crd = doc.crd.as_ref().unwrap();
        assert_eq!(crd.inputs, vec![0]);
        assert_eq!(crd.fuel, 1);
        let out = write_protocol(&doc);
        assert_eq!(write_protocol(&parse_protocol(&out).unwrap()), out);
    }

    #[test]
    fn decide_relation_builds_crd_interface() {
        let text = "species X F L0 L1\n\
            reaction X -> L1\n\
            crd\n  inputs X\n  voters0 L0\n  voters1 L1\n  fuel F\n  context 0\nend\n\
            interface\n  relation decide thr(X < 1)\nend\n";
        let doc = parse_protocol(text).unwrap();
        let iface = doc.interface.unwrap();
        assert_eq!(iface.values.len(), 4);
        let c0 = doc.crn.parse_configuration("X + F").unwrap();
        let good = doc.crn.parse_configuration("L0").unwrap();
        let bad = doc.crn.parse_configuration("L1").unwrap();
        let z = iface.target(&c0);
        assert!(z(&good));
        assert!(!z(&bad));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_protocol("species A\nreaction A -> 2 B\n").unwrap_err();
        assert!(matches!(err, CrnError::UnknownSpecies { .. }));
        let err = parse_protocol("species A\nreaction A => A\n").unwrap_err();
        assert_eq!(err, CrnError::parse(2, "reaction without '->'"));
        assert!(parse_protocol("species 2A\n").is_err());
        assert!(parse_protocol("reaction A -> A\n").is_err());
    }

    #[test]
    fn compact_coefficients_are_accepted() {
        let m = parse_side("2A + 3 B", &|n| Ok(if n == "A" { 0 } else { 1 }), 1).unwrap();
        assert_eq!(m, Multiset::from_pairs([(0, 2), (1, 3)]));
        assert!(parse_side("A +", &|_| Ok(0), 1).is_err());
        assert!(parse_side("A B", &|_| Ok(0), 1).is_err());
    }
}
