use std::collections::{HashMap, HashSet};
use std::fmt;

use super::{
    ActionDescription, Atom, Domain, Location, Param, ParseError, ParseErrorKind, Value, ValueExpr,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagnosticKind {
    NoFluents,
    Duplicate(String),
    UndeclaredFluent(String),
    UndeclaredAction(String),
    UnboundVariable(String),
    EmptyDomain(String),
    DuplicateDomainValue { fluent: String, value: Value },
    EmptyRange(String),
    /// A constant that is not in the fluent's domain.
    ValueOutOfDomain { fluent: String, value: Value },
    /// A schematic law none of whose groundings stays within the fluent domains.
    VacuousLaw,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagnosticKind::NoFluents => f.write_str("no fluent declarations"),
            DiagnosticKind::Duplicate(n) => write!(f, "duplicate declaration of `{n}`"),
            DiagnosticKind::UndeclaredFluent(n) => write!(f, "undeclared fluent `{n}`"),
            DiagnosticKind::UndeclaredAction(n) => write!(f, "undeclared action `{n}`"),
            DiagnosticKind::UnboundVariable(v) => {
                write!(f, "variable `{v}` has no range; add `where {v} in lo..hi`")
            }
            DiagnosticKind::EmptyDomain(n) => write!(f, "fluent `{n}` has an empty domain"),
            DiagnosticKind::DuplicateDomainValue { fluent, value } => {
                write!(f, "value `{value}` listed twice in the domain of `{fluent}`")
            }
            DiagnosticKind::EmptyRange(v) => write!(f, "range of `{v}` is empty"),
            DiagnosticKind::ValueOutOfDomain { fluent, value } => {
                write!(f, "value `{value}` is outside the domain of `{fluent}`")
            }
            DiagnosticKind::VacuousLaw => f.write_str("law has no grounding within the fluent domains"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub location: Location,
    pub kind: DiagnosticKind,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{}: {tag}: {}", self.location, self.kind)
    }
}

impl Diagnostic {
    fn error(location: Location, kind: DiagnosticKind) -> Self {
        Self {
            severity: Severity::Error,
            location,
            kind,
        }
    }

    pub fn into_parse_error(self) -> ParseError {
        let kind = match self.kind {
            DiagnosticKind::NoFluents => ParseErrorKind::NoFluents,
            DiagnosticKind::Duplicate(n) => ParseErrorKind::Duplicate(n),
            DiagnosticKind::UndeclaredFluent(n) | DiagnosticKind::UndeclaredAction(n) => {
                ParseErrorKind::UnknownIdentifier(n)
            }
            other => ParseErrorKind::Invalid(other.to_string()),
        };
        ParseError::new(self.location, kind)
    }
}

/// Check declarations and laws for consistency. Diagnostics are ordered by
/// source location.
pub fn validate(desc: &ActionDescription) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    if desc.fluents.is_empty() {
        out.push(Diagnostic::error(Location::new(1, 1), DiagnosticKind::NoFluents));
    }

    let mut names = HashSet::new();
    for f in &desc.fluents {
        if !names.insert(f.name.as_str()) {
            out.push(Diagnostic::error(f.loc, DiagnosticKind::Duplicate(f.name.clone())));
        }
        if f.domain.is_empty() {
            out.push(Diagnostic::error(f.loc, DiagnosticKind::EmptyDomain(f.name.clone())));
        }
        if let Domain::Set(vs) = &f.domain {
            let mut seen = HashSet::new();
            for v in vs {
                if !seen.insert(v) {
                    out.push(Diagnostic::error(
                        f.loc,
                        DiagnosticKind::DuplicateDomainValue {
                            fluent: f.name.clone(),
                            value: v.clone(),
                        },
                    ));
                }
            }
        }
    }
    for a in &desc.actions {
        if !names.insert(a.name.as_str()) {
            out.push(Diagnostic::error(a.loc, DiagnosticKind::Duplicate(a.name.clone())));
        }
    }

    let domains: HashMap<&str, &Domain> = desc
        .fluents
        .iter()
        .map(|f| (f.name.as_str(), &f.domain))
        .collect();

    for law in &desc.statics {
        let atoms: Vec<&Atom> = std::iter::once(&law.head).chain(&law.body).collect();
        check_law(&domains, &atoms, &law.params, law.loc, &mut out);
    }
    for law in &desc.dynamics {
        if desc.action_index(&law.action).is_none() {
            out.push(Diagnostic::error(
                law.loc,
                DiagnosticKind::UndeclaredAction(law.action.clone()),
            ));
        }
        let atoms: Vec<&Atom> = std::iter::once(&law.effect).chain(&law.conditions).collect();
        check_law(&domains, &atoms, &law.params, law.loc, &mut out);
    }

    out.sort_by_key(|d| d.location);
    out
}

fn check_law(
    domains: &HashMap<&str, &Domain>,
    atoms: &[&Atom],
    params: &[Param],
    loc: Location,
    out: &mut Vec<Diagnostic>,
) {
    let before = out.len();
    let mut seen = HashSet::new();
    for p in params {
        if !seen.insert(p.var.as_str()) {
            out.push(Diagnostic::error(p.loc, DiagnosticKind::Duplicate(p.var.clone())));
        }
        if p.lo > p.hi {
            out.push(Diagnostic::error(p.loc, DiagnosticKind::EmptyRange(p.var.clone())));
        }
    }
    for a in atoms {
        let Some(domain) = domains.get(a.fluent.as_str()) else {
            out.push(Diagnostic::error(
                a.loc,
                DiagnosticKind::UndeclaredFluent(a.fluent.clone()),
            ));
            continue;
        };
        match &a.value {
            ValueExpr::Const(v) if !domain.contains(v) => out.push(Diagnostic::error(
                a.loc,
                DiagnosticKind::ValueOutOfDomain {
                    fluent: a.fluent.clone(),
                    value: v.clone(),
                },
            )),
            ValueExpr::Const(_) => {}
            ValueExpr::Var(v) | ValueExpr::Offset { var: v, .. } => {
                if !params.iter().any(|p| &p.var == v) {
                    out.push(Diagnostic::error(
                        a.loc,
                        DiagnosticKind::UnboundVariable(v.clone()),
                    ));
                }
            }
        }
    }
    if out.len() == before && !params.is_empty() && !has_grounding(domains, atoms, params) {
        out.push(Diagnostic {
            severity: Severity::Warning,
            location: loc,
            kind: DiagnosticKind::VacuousLaw,
        });
    }
}

fn has_grounding(domains: &HashMap<&str, &Domain>, atoms: &[&Atom], params: &[Param]) -> bool {
    let mut binding: Vec<i64> = params.iter().map(|p| p.lo).collect();
    loop {
        let ok = atoms.iter().all(|a| {
            let value = match &a.value {
                ValueExpr::Const(v) => return domains[a.fluent.as_str()].contains(v),
                ValueExpr::Var(v) => lookup(params, &binding, v),
                ValueExpr::Offset { var, offset } => lookup(params, &binding, var) + offset,
            };
            domains[a.fluent.as_str()].contains(&Value::Int(value))
        });
        if ok {
            return true;
        }
        // odometer increment over the parameter ranges
        let mut i = 0;
        loop {
            if i == params.len() {
                return false;
            }
            if binding[i] < params[i].hi {
                binding[i] += 1;
                break;
            }
            binding[i] = params[i].lo;
            i += 1;
        }
    }
}

fn lookup(params: &[Param], binding: &[i64], var: &str) -> i64 {
    let i = params.iter().position(|p| p.var == var).expect("bound variable");
    binding[i]
}
