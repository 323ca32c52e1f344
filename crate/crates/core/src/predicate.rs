//! Semilinear predicate frontend: a small text syntax, the predicate AST, a
//! direct evaluation oracle and compilation into leaderless CRDs.
//!
//! Syntax: `thr(a1*X1 + a2*X2 < b)`, `mod(a1*X1 + a2*X2 == b % m)`, the
//! connectives `&`, `|`, `!` and parentheses. `&` binds tighter than `|`;
//! both associate to the left. Coefficients may be written `2*X`, `2X`, `-X`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CrnError, Result};
use crate::model::InputPredicate;
use crate::protocols::{crd, ProtocolBundle};

/// Predicate syntax tree over a fixed, ordered input alphabet.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredicateAst {
    /// `a·x < b`.
    Threshold {
        /// Coefficients, one per input.
        a: Vec<i64>,
        /// Bound.
        b: i64,
    },
    /// `a·x ≡ b (mod m)`.
    Modulo {
        /// Coefficients, one per input.
        a: Vec<i64>,
        /// Residue.
        b: i64,
        /// Modulus, at least one.
        m: u64,
    },
    /// Conjunction.
    And(Box<PredicateAst>, Box<PredicateAst>),
    /// Disjunction.
    Or(Box<PredicateAst>, Box<PredicateAst>),
    /// Negation.
    Not(Box<PredicateAst>),
}

/// A predicate together with the names of its input species.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicate {
    /// Input species names `Σ`, in order of first appearance.
    pub inputs: Vec<String>,
    /// The syntax tree.
    pub ast: PredicateAst,
}

/// Largest AST depth accepted by [`compile`] (a leaf has depth 1).
pub const MAX_COMPILE_DEPTH: usize = 4;

/// Largest species count of a compiled CRD.
pub const MAX_COMPILED_SPECIES: usize = 4000;

impl PredicateAst {
    /// Depth of the tree; a leaf has depth 1.
    pub fn depth(&self) -> usize {
        match self {
            PredicateAst::Threshold { .. } | PredicateAst::Modulo { .. } => 1,
            PredicateAst::Not(x) => 1 + x.depth(),
            PredicateAst::And(x, y) | PredicateAst::Or(x, y) => 1 + x.depth().max(y.depth()),
        }
    }

    /// Evaluate on an input vector.
    pub fn eval(&self, x: &[u64]) -> bool {
        let dot = |a: &[i64]| -> i128 { a.iter().zip(x).map(|(&a, &x)| a as i128 * x as i128).sum() };
        match self {
            PredicateAst::Threshold { a, b } => dot(a) < *b as i128,
            PredicateAst::Modulo { a, b, m } => {
                let m = *m as i128;
                (dot(a) - *b as i128).rem_euclid(m) == 0
            }
            PredicateAst::And(p, q) => p.eval(x) && q.eval(x),
            PredicateAst::Or(p, q) => p.eval(x) || q.eval(x),
            PredicateAst::Not(p) => !p.eval(x),
        }
    }

    fn pad(&mut self, k: usize) {
        match self {
            PredicateAst::Threshold { a, .. } | PredicateAst::Modulo { a, .. } => a.resize(k, 0),
            PredicateAst::Not(x) => x.pad(k),
            PredicateAst::And(x, y) | PredicateAst::Or(x, y) => {
                x.pad(k);
                y.pad(k);
            }
        }
    }
}

/// Evaluate a predicate on an input vector.
pub fn eval(ast: &PredicateAst, x: &[u64]) -> bool {
    ast.eval(x)
}

/// The predicate as a shareable closure over input vectors.
pub fn input_predicate(p: &Predicate) -> InputPredicate {
    let ast = p.ast.clone();
    Arc::new(move |x: &[u64]| ast.eval(x))
}

impl Predicate {
    /// Evaluate on an input vector.
    pub fn eval(&self, x: &[u64]) -> bool {
        self.ast.eval(x)
    }

    /// Canonical text; parsing it yields an equal predicate.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.write_node(&self.ast, &mut out);
        out
    }

    fn write_linear(&self, a: &[i64], out: &mut String) {
        for (i, (&c, name)) in a.iter().zip(&self.inputs).enumerate() {
            let mag = c.unsigned_abs();
            let coef = if mag == 1 { String::new() } else { format!("{mag}*") };
            if i == 0 {
                let sign = if c < 0 { "-" } else { "" };
                out.push_str(&format!("{sign}{coef}{name}"));
            } else {
                let sign = if c < 0 { "-" } else { "+" };
                out.push_str(&format!(" {sign} {coef}{name}"));
            }
        }
        if a.is_empty() {
            out.push('0');
        }
    }

    fn write_node(&self, node: &PredicateAst, out: &mut String) {
        let wrap = |child: &PredicateAst, out: &mut String| {
            let compound = matches!(child, PredicateAst::And(..) | PredicateAst::Or(..));
            if compound {
                out.push('(');
            }
            self.write_node(child, out);
            if compound {
                out.push(')');
            }
        };
        match node {
            PredicateAst::Threshold { a, b } => {
                out.push_str("thr(");
                self.write_linear(a, out);
                out.push_str(&format!(" < {b})"));
            }
            PredicateAst::Modulo { a, b, m } => {
                out.push_str("mod(");
                self.write_linear(a, out);
                out.push_str(&format!(" == {b} % {m})"));
            }
            PredicateAst::Not(x) => {
                out.push('!');
                wrap(x, out);
            }
            PredicateAst::And(x, y) | PredicateAst::Or(x, y) => {
                let op = if matches!(node, PredicateAst::And(..)) { " & " } else { " | " };
                wrap(x, out);
                out.push_str(op);
                wrap(y, out);
            }
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
}

fn tokenize(text: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse().map_err(|_| CrnError::parse(1, format!("integer '{s}' too large")))?;
            out.push(Tok::Int(v));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if c == '=' && chars.get(i + 1) == Some(&'=') {
            out.push(Tok::Sym("=="));
            i += 2;
        } else {
            let sym = match c {
                '(' => "(",
                ')' => ")",
                '+' => "+",
                '-' => "-",
                '*' => "*",
                '<' => "<",
                '%' => "%",
                '&' => "&",
                '|' => "|",
                '!' => "!",
                _ => return Err(CrnError::parse(1, format!("unexpected character '{c}'"))),
            };
            out.push(Tok::Sym(sym));
            i += 1;
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    inputs: Vec<String>,
}

impl Parser {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(CrnError::parse(1, format!("{} (token {})", msg.into(), self.pos)))
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(s)) if *s == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> Result<()> {
        if self.eat(sym) {
            Ok(())
        } else {
            self.err(format!("expected '{sym}'"))
        }
    }

    fn int(&mut self) -> Result<i64> {
        let neg = self.eat("-");
        match self.peek() {
            Some(Tok::Int(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(if neg { -v } else { v })
            }
            _ => self.err("expected integer"),
        }
    }

    fn input(&mut self, name: &str) -> usize {
        match self.inputs.iter().position(|n| n == name) {
            Some(i) => i,
            None => {
                self.inputs.push(name.to_string());
                self.inputs.len() - 1
            }
        }
    }

    fn or(&mut self) -> Result<PredicateAst> {
        let mut lhs = self.and()?;
        while self.eat("|") {
            let rhs = self.and()?;
            lhs = PredicateAst::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<PredicateAst> {
        let mut lhs = self.unary()?;
        while self.eat("&") {
            let rhs = self.unary()?;
            lhs = PredicateAst::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<PredicateAst> {
        if self.eat("!") {
            return Ok(PredicateAst::Not(Box::new(self.unary()?)));
        }
        if self.eat("(") {
            let e = self.or()?;
            self.expect(")")?;
            return Ok(e);
        }
        let kw = match self.peek() {
            Some(Tok::Ident(s)) => s.clone(),
            _ => return self.err("expected 'thr', 'mod', '!' or '('"),
        };
        self.pos += 1;
        self.expect("(")?;
        let a = self.linear()?;
        let node = match kw.as_str() {
            "thr" => {
                self.expect("<")?;
                let b = self.int()?;
                PredicateAst::Threshold { a, b }
            }
            "mod" => {
                self.expect("==")?;
                let b = self.int()?;
                self.expect("%")?;
                let m = self.int()?;
                if m < 1 {
                    return self.err("modulus must be at least 1");
                }
                PredicateAst::Modulo { a, b, m: m as u64 }
            }
            _ => return self.err(format!("unknown predicate '{kw}'")),
        };
        self.expect(")")?;
        Ok(node)
    }

    fn linear(&mut self) -> Result<Vec<i64>> {
        let mut a: Vec<i64> = Vec::new();
        let mut sign = if self.eat("-") { -1 } else { 1 };
        loop {
            let coef = match self.peek() {
                Some(Tok::Int(v)) => {
                    let v = *v;
                    self.pos += 1;
                    self.eat("*");
                    v
                }
                _ => 1,
            };
            let name = match self.peek() {
                Some(Tok::Ident(s)) => s.clone(),
                _ => return self.err("expected input species name"),
            };
            self.pos += 1;
            let i = self.input(&name);
            if a.len() <= i {
                a.resize(i + 1, 0);
            }
            a[i] += sign * coef;
            if self.eat("+") {
                sign = 1;
            } else if self.eat("-") {
                sign = -1;
            } else {
                return Ok(a);
            }
        }
    }
}

/// Parse predicate text.
pub fn parse(text: &str) -> Result<Predicate> {
    let mut p = Parser { toks: tokenize(text)?, pos: 0, inputs: Vec::new() };
    let mut ast = p.or()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    ast.pad(p.inputs.len());
    Ok(Predicate { inputs: p.inputs, ast })
}

/// Compile a predicate into a leaderless, haltingly correct CRD.
///
/// Leaves use the threshold and modulo constructions, negation swaps the
/// voter sets and binary connectives use the Boolean closure construction.
pub fn compile(p: &Predicate) -> Result<ProtocolBundle> {
    if p.ast.depth() > MAX_COMPILE_DEPTH {
        return Err(CrnError::Guard {
            message: format!("predicate depth {} exceeds {}", p.ast.depth(), MAX_COMPILE_DEPTH),
        });
    }
    let mut bundle = compile_node(&p.inputs, &p.ast)?;
    crd::attach_predicate(&mut bundle, p);
    Ok(bundle)
}

fn compile_node(inputs: &[String], node: &PredicateAst) -> Result<ProtocolBundle> {
    let bundle = match node {
        PredicateAst::Threshold { a, b } => crd::threshold_crd(inputs, a, *b)?,
        PredicateAst::Modulo { a, b, m } => crd::modulo_crd(inputs, a, *b, *m)?,
        PredicateAst::Not(x) => crd::negate(compile_node(inputs, x)?),
        PredicateAst::And(x, y) => {
            crd::combine_boolean(&compile_node(inputs, x)?, &compile_node(inputs, y)?, [[false, false], [false, true]])?
        }
        PredicateAst::Or(x, y) => {
            crd::combine_boolean(&compile_node(inputs, x)?, &compile_node(inputs, y)?, [[false, true], [true, true]])?
        }
    };
    if bundle.crn.species_count() > MAX_COMPILED_SPECIES {
        return Err(CrnError::Guard {
            message: format!("compiled CRD has {} species", bundle.crn.species_count()),
        });
    }
    Ok(bundle)
}
