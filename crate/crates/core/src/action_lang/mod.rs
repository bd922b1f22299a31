//! Front end for action descriptions written as causal laws.
//!
//! A domain file declares fluents with finite domains, actions, static laws
//! (`A if A1, ..., Am`) and dynamic laws (`a causes A0 if A1, ..., Am`).
//! Laws may be schematic over integer variables:
//!
//! ```text
//! % 3x1 corridor
//! fluent loc : 1..3.
//! action moveleft.
//! action moveright.
//! moveleft causes loc=L-1 if loc=L.
//! moveright causes loc=L+1 if loc=L where L in 1..3.
//! ```
//!
//! Variables start with an uppercase letter. A variable without a `where`
//! clause takes its range from an atom `f = V` whose fluent has an integer
//! interval domain. Value expressions are limited to `c`, `V`, `V+c` and `V-c`.
//!
//! A query file holds the initial condition and the goal:
//!
//! ```text
//! init loc=1.
//! goal loc=3.
//! ```

mod lexer;
mod parser;
mod pretty;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use validate::{validate, Diagnostic, DiagnosticKind, Severity};

/// A line/column position in the source text, both 1-based.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Location {
    pub line: u32,
    pub column: u32,
}

impl Location {
    pub fn new(line: u32, column: u32) -> Self {
        Self { line, column }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// A fluent value: either an integer or a lowercase symbol.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Sym(String),
}

impl Value {
    pub fn sym(s: impl Into<String>) -> Self {
        Value::Sym(s.into())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Sym(s) => f.write_str(s),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Sym(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    /// Inclusive integer interval.
    Range { lo: i64, hi: i64 },
    /// Explicit ordered value set.
    Set(Vec<Value>),
}

impl Domain {
    /// Domain values in declaration order.
    pub fn values(&self) -> Vec<Value> {
        match self {
            Domain::Range { lo, hi } => (*lo..=*hi).map(Value::Int).collect(),
            Domain::Set(vs) => vs.clone(),
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Domain::Range { lo, hi }, Value::Int(i)) => lo <= i && i <= hi,
            (Domain::Range { .. }, Value::Sym(_)) => false,
            (Domain::Set(vs), v) => vs.contains(v),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Domain::Range { lo, hi } if hi >= lo => (hi - lo + 1) as usize,
            Domain::Range { .. } => 0,
            Domain::Set(vs) => vs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FluentDecl {
    pub name: String,
    pub domain: Domain,
    pub loc: Location,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionDecl {
    pub name: String,
    pub loc: Location,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueExpr {
    Const(Value),
    Var(String),
    /// `V+c` or `V-c`; the offset carries the sign.
    Offset { var: String, offset: i64 },
}

impl ValueExpr {
    pub fn var(&self) -> Option<&str> {
        match self {
            ValueExpr::Const(_) => None,
            ValueExpr::Var(v) | ValueExpr::Offset { var: v, .. } => Some(v),
        }
    }
}

/// `fluent = value-expr`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub fluent: String,
    pub value: ValueExpr,
    pub loc: Location,
}

/// `where <var> in <lo>..<hi>`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub var: String,
    pub lo: i64,
    pub hi: i64,
    pub loc: Location,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaticLaw {
    pub head: Atom,
    pub body: Vec<Atom>,
    pub params: Vec<Param>,
    pub loc: Location,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicLaw {
    pub action: String,
    pub effect: Atom,
    pub conditions: Vec<Atom>,
    pub params: Vec<Param>,
    pub loc: Location,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActionDescription {
    pub fluents: Vec<FluentDecl>,
    pub actions: Vec<ActionDecl>,
    pub statics: Vec<StaticLaw>,
    pub dynamics: Vec<DynamicLaw>,
}

impl ActionDescription {
    pub fn fluent(&self, name: &str) -> Option<&FluentDecl> {
        self.fluents.iter().find(|f| f.name == name)
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a.name == name)
    }

    /// Copy with every source location reset, for structural comparison.
    pub fn without_locations(&self) -> Self {
        let mut d = self.clone();
        let zero = Location::default();
        let atom = |a: &mut Atom| a.loc = zero;
        let params = |ps: &mut Vec<Param>| ps.iter_mut().for_each(|p| p.loc = zero);
        d.fluents.iter_mut().for_each(|f| f.loc = zero);
        d.actions.iter_mut().for_each(|a| a.loc = zero);
        for law in &mut d.statics {
            law.loc = zero;
            atom(&mut law.head);
            law.body.iter_mut().for_each(atom);
            params(&mut law.params);
        }
        for law in &mut d.dynamics {
            law.loc = zero;
            atom(&mut law.effect);
            law.conditions.iter_mut().for_each(atom);
            params(&mut law.params);
        }
        d
    }
}

impl fmt::Display for ActionDescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        pretty::write_description(f, self)
    }
}

/// A ground `fluent = value` pair as it appears in a query. Equality ignores
/// the source location.
#[derive(Debug, Clone)]
pub struct GroundAtom {
    pub fluent: String,
    pub value: Value,
    pub loc: Location,
}

impl GroundAtom {
    pub fn new(fluent: impl Into<String>, value: impl Into<Value>) -> Self {
        Self {
            fluent: fluent.into(),
            value: value.into(),
            loc: Location::default(),
        }
    }
}

impl PartialEq for GroundAtom {
    fn eq(&self, other: &Self) -> bool {
        self.fluent == other.fluent && self.value == other.value
    }
}

impl Eq for GroundAtom {}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.fluent, self.value)
    }
}

/// Initial condition and goal of a planning problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub initial: Vec<GroundAtom>,
    pub goal: Vec<GroundAtom>,
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        pretty::write_query(f, self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character `{0}`")]
    Lexical(char),
    #[error("integer literal out of range: {0}")]
    BadInteger(String),
    #[error("malformed statement: {0}")]
    Malformed(String),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("duplicate declaration of `{0}`")]
    Duplicate(String),
    #[error("no fluent declarations")]
    NoFluents,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{location}: {kind}")]
pub struct ParseError {
    pub location: Location,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub(crate) fn new(location: Location, kind: ParseErrorKind) -> Self {
        Self { location, kind }
    }
}

/// Parse a domain file and reject it if validation reports any error.
pub fn parse_domain(text: &str) -> Result<ActionDescription, ParseError> {
    let desc = parser::parse_description(text)?;
    if let Some(d) = validate(&desc)
        .into_iter()
        .find(|d| d.severity == Severity::Error)
    {
        return Err(d.into_parse_error());
    }
    Ok(desc)
}

/// Parse a query file, resolving fluent names and values against `desc`.
pub fn parse_query(text: &str, desc: &ActionDescription) -> Result<Query, ParseError> {
    parser::parse_query(text, desc)
}
