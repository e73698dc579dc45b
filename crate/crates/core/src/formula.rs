//! Wilkinson-notation model formulas.
//!
//! A formula such as `Response ~ X*Y - X` is lexed, parsed with the usual
//! precedence (`:` over `*` over `+`/`-`), and expanded into a canonical
//! [`Formula`]: a response, an intercept flag, and an ordered list of
//! interaction [`Term`]s. Terms are sets of variable names, so `X:X` is
//! just `X`, and `X*Y` expands to `1 + X + Y + X:Y`.
//!
//! Canonical order is ascending term order (number of variables), ties
//! broken by first appearance in the source text.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unsupported operator `{op}` at position {pos}: {hint}")]
    UnsupportedOperator {
        op: String,
        pos: usize,
        hint: &'static str,
    },
    #[error("formula must contain exactly one `~`")]
    MissingTilde,
    #[error("empty right-hand side")]
    EmptyRhs,
    #[error("`0` cannot take part in an interaction (position {pos})")]
    ZeroInInteraction { pos: usize },
}

/// An interaction term: a non-empty set of distinct variable names.
///
/// The names are kept in the order they were first written so that
/// rendering and design-matrix column order are stable; equality ignores
/// that order.
#[derive(Debug, Clone, Serialize)]
pub struct Term {
    vars: Vec<String>,
}

impl Term {
    /// Builds a term, dropping repeated names (`X:X` is `X`).
    pub fn new<I, S>(vars: I) -> Term
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out: Vec<String> = Vec::new();
        for v in vars {
            let v = v.into();
            if !out.contains(&v) {
                out.push(v);
            }
        }
        Term { vars: out }
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    pub fn order(&self) -> usize {
        self.vars.len()
    }

    pub fn contains(&self, var: &str) -> bool {
        self.vars.iter().any(|v| v == var)
    }

    pub fn var_set(&self) -> BTreeSet<&str> {
        self.vars.iter().map(String::as_str).collect()
    }

    /// The term with `var` removed; empty when `self` is a main effect.
    pub fn without(&self, var: &str) -> Term {
        Term {
            vars: self.vars.iter().filter(|v| *v != var).cloned().collect(),
        }
    }

    fn union(&self, other: &Term) -> Term {
        Term::new(self.vars.iter().chain(other.vars.iter()).cloned())
    }

    fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn label(&self) -> String {
        self.vars.join(":")
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        self.vars.len() == other.vars.len() && self.vars.iter().all(|v| other.contains(v))
    }
}

impl Eq for Term {}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// A parsed, canonicalized model formula.
#[derive(Debug, Clone, Serialize)]
pub struct Formula {
    response: String,
    terms: Vec<Term>,
    intercept: bool,
}

impl Formula {
    /// Assembles a formula from parts, deduplicating and sorting terms into
    /// canonical order. Returns `EmptyRhs` when there is neither a term nor
    /// an intercept.
    pub fn from_parts(
        response: impl Into<String>,
        terms: Vec<Term>,
        intercept: bool,
    ) -> Result<Formula, FormulaError> {
        let mut uniq: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            if !t.is_empty() && !uniq.contains(&t) {
                uniq.push(t);
            }
        }
        if uniq.is_empty() && !intercept {
            return Err(FormulaError::EmptyRhs);
        }
        // stable: ties keep first-appearance order
        uniq.sort_by_key(Term::order);
        Ok(Formula {
            response: response.into(),
            terms: uniq,
            intercept,
        })
    }

    pub fn response(&self) -> &str {
        &self.response
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept
    }

    /// Every variable mentioned on the right-hand side, in first-use order.
    pub fn variables(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for t in &self.terms {
            for v in &t.vars {
                if !out.contains(&v.as_str()) {
                    out.push(v);
                }
            }
        }
        out
    }

    /// Canonical text form; `parse(render(f))` reproduces `f`.
    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return format!("{} ~ 1", self.response);
        }
        let rhs: Vec<String> = self.terms.iter().map(Term::label).collect();
        let suffix = if self.intercept { "" } else { " - 1" };
        format!("{} ~ {}{}", self.response, rhs.join(" + "), suffix)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl std::str::FromStr for Formula {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// Structural equality: response, intercept flag and term sets.
pub fn formulas_equal(a: &Formula, b: &Formula) -> bool {
    a.response == b.response
        && a.intercept == b.intercept
        && a.terms.len() == b.terms.len()
        && a.terms.iter().all(|t| b.terms.contains(t))
}

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        formulas_equal(self, other)
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    One,
    Zero,
    Plus,
    Minus,
    Star,
    Colon,
    LParen,
    RParen,
    Tilde,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, FormulaError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '+' => out.push((Tok::Plus, start)),
            '-' => out.push((Tok::Minus, start)),
            '*' => out.push((Tok::Star, start)),
            ':' => out.push((Tok::Colon, start)),
            '(' => out.push((Tok::LParen, start)),
            ')' => out.push((Tok::RParen, start)),
            '~' => out.push((Tok::Tilde, start)),
            '^' => return Err(unsupported("^", start, "powers of terms are not supported")),
            '/' => return Err(unsupported("/", start, "nesting is not supported")),
            '|' => {
                return Err(unsupported(
                    "|",
                    start,
                    "random-effect terms are not supported",
                ))
            }
            '%' => {
                let end = text[start + 1..]
                    .find('%')
                    .map(|e| start + e + 2)
                    .unwrap_or(bytes.len());
                return Err(unsupported(
                    &text[start..end],
                    start,
                    "nesting is not supported",
                ));
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_digit() || bytes[j] == b'.') {
                    j += 1;
                }
                match &text[i..j] {
                    "1" => out.push((Tok::One, start)),
                    "0" => out.push((Tok::Zero, start)),
                    other => {
                        return Err(FormulaError::Syntax {
                            pos: start,
                            msg: format!("numeric literal `{other}` (only 0 and 1 are allowed)"),
                        })
                    }
                }
                i = j;
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                let mut j = i;
                while j < bytes.len()
                    && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_' || bytes[j] == b'.')
                {
                    j += 1;
                }
                let ident = &text[i..j];
                if j < bytes.len() && bytes[j] == b'(' {
                    return Err(unsupported(
                        &format!("{ident}(...)"),
                        start,
                        "inline function calls such as I(...) are not supported",
                    ));
                }
                out.push((Tok::Ident(ident.to_string()), start));
                i = j;
                continue;
            }
            other => {
                return Err(FormulaError::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        }
        i += 1;
    }
    Ok(out)
}

fn unsupported(op: &str, pos: usize, hint: &'static str) -> FormulaError {
    FormulaError::UnsupportedOperator {
        op: op.to_string(),
        pos,
        hint,
    }
}

// ---------------------------------------------------------------------------
// Parser and term algebra

/// Value of a right-hand-side sub-expression. `terms` may contain the empty
/// term, which stands for an explicit `1`.
#[derive(Debug, Clone, Default)]
struct TermList {
    terms: Vec<Term>,
    intercept: Option<bool>,
    /// Expression is a bare `0`.
    zero: bool,
}

impl TermList {
    fn push(&mut self, t: Term) {
        if !self.terms.contains(&t) {
            self.terms.push(t);
        }
    }

    fn add(&mut self, rhs: TermList) {
        if rhs.zero {
            self.terms.retain(|t| !t.is_empty());
            self.intercept = Some(false);
            return;
        }
        for t in rhs.terms {
            if t.is_empty() {
                self.intercept = Some(true);
            }
            self.push(t);
        }
        if let Some(i) = rhs.intercept {
            self.intercept = Some(i);
            if !i {
                self.terms.retain(|t| !t.is_empty());
            }
        }
    }

    fn subtract(&mut self, rhs: TermList) {
        if rhs.zero {
            self.intercept = Some(true);
            return;
        }
        for t in rhs.terms {
            if t.is_empty() {
                self.intercept = Some(false);
            }
            // removing an absent term is a no-op
            self.terms.retain(|u| *u != t);
        }
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn sum(&mut self) -> Result<TermList, FormulaError> {
        let mut acc = TermList::default();
        // leading unary minus, e.g. `~ -1 + X`
        if self.peek() == Some(&Tok::Minus) {
            self.bump();
            let rhs = self.product()?;
            acc.subtract(rhs);
        } else {
            let first = self.product()?;
            acc.add(first);
        }
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    let rhs = self.product()?;
                    acc.add(rhs);
                }
                Some(Tok::Minus) => {
                    self.bump();
                    let rhs = self.product()?;
                    acc.subtract(rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn product(&mut self) -> Result<TermList, FormulaError> {
        let mut acc = self.interaction()?;
        while self.peek() == Some(&Tok::Star) {
            let pos = self.here();
            self.bump();
            let rhs = self.interaction()?;
            let cross = cross(&acc, &rhs, pos)?;
            let mut sum = acc;
            sum.add(rhs);
            sum.add(cross);
            acc = sum;
        }
        Ok(acc)
    }

    fn interaction(&mut self) -> Result<TermList, FormulaError> {
        let mut acc = self.atom()?;
        while self.peek() == Some(&Tok::Colon) {
            let pos = self.here();
            self.bump();
            let rhs = self.atom()?;
            acc = cross(&acc, &rhs, pos)?;
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<TermList, FormulaError> {
        let pos = self.here();
        match self.bump() {
            Some(Tok::Ident(name)) => Ok(TermList {
                terms: vec![Term::new([name])],
                ..Default::default()
            }),
            Some(Tok::One) => Ok(TermList {
                terms: vec![Term { vars: Vec::new() }],
                ..Default::default()
            }),
            Some(Tok::Zero) => Ok(TermList {
                zero: true,
                ..Default::default()
            }),
            Some(Tok::LParen) => {
                let inner = self.sum()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => Err(FormulaError::Syntax {
                        pos: self.toks.get(self.pos - 1).map(|(_, p)| *p).unwrap_or(self.end),
                        msg: "expected `)`".into(),
                    }),
                }
            }
            Some(tok) => Err(FormulaError::Syntax {
                pos,
                msg: format!("unexpected {}", describe(&tok)),
            }),
            None => Err(FormulaError::Syntax {
                pos,
                msg: "unexpected end of formula".into(),
            }),
        }
    }
}

fn cross(a: &TermList, b: &TermList, pos: usize) -> Result<TermList, FormulaError> {
    if a.zero || b.zero {
        return Err(FormulaError::ZeroInInteraction { pos });
    }
    let mut out = TermList::default();
    for ta in &a.terms {
        for tb in &b.terms {
            out.push(ta.union(tb));
        }
    }
    Ok(out)
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::One => "`1`".into(),
        Tok::Zero => "`0`".into(),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Colon => "`:`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Tilde => "`~`".into(),
    }
}

/// Parses and canonicalizes a formula such as `"Response ~ X*Y - X"`.
pub fn parse(text: &str) -> Result<Formula, FormulaError> {
    let toks = lex(text)?;
    let tildes: Vec<usize> = toks
        .iter()
        .enumerate()
        .filter(|(_, (t, _))| *t == Tok::Tilde)
        .map(|(i, _)| i)
        .collect();
    if tildes.len() != 1 {
        return Err(FormulaError::MissingTilde);
    }
    let split = tildes[0];
    let response = match &toks[..split] {
        [(Tok::Ident(name), _)] => name.clone(),
        [] => {
            return Err(FormulaError::Syntax {
                pos: 0,
                msg: "missing response variable".into(),
            })
        }
        [_, (_, p), ..] | [(_, p)] => {
            return Err(FormulaError::Syntax {
                pos: *p,
                msg: "left-hand side must be a single variable name".into(),
            })
        }
    };
    let rhs: Vec<(Tok, usize)> = toks[split + 1..].to_vec();
    if rhs.is_empty() {
        return Err(FormulaError::EmptyRhs);
    }
    let mut parser = Parser {
        toks: rhs,
        pos: 0,
        end: text.len(),
    };
    let value = parser.sum()?;
    if parser.pos < parser.toks.len() {
        let (tok, pos) = &parser.toks[parser.pos];
        return Err(FormulaError::Syntax {
            pos: *pos,
            msg: format!("unexpected {}", describe(tok)),
        });
    }
    let intercept = value.intercept.unwrap_or(true);
    Formula::from_parts(response, value.terms, intercept)
}
