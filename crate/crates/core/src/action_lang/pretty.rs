use std::fmt::{self, Write};

use super::{ActionDescription, Atom, Domain, Param, Query, ValueExpr};

fn write_atom(f: &mut impl Write, a: &Atom) -> fmt::Result {
    write!(f, "{}=", a.fluent)?;
    match &a.value {
        ValueExpr::Const(v) => write!(f, "{v}"),
        ValueExpr::Var(v) => f.write_str(v),
        ValueExpr::Offset { var, offset } if *offset < 0 => write!(f, "{var}-{}", -offset),
        ValueExpr::Offset { var, offset } => write!(f, "{var}+{offset}"),
    }
}

fn write_atoms(f: &mut impl Write, atoms: &[Atom]) -> fmt::Result {
    for (i, a) in atoms.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write_atom(f, a)?;
    }
    Ok(())
}

fn write_params(f: &mut impl Write, params: &[Param]) -> fmt::Result {
    for (i, p) in params.iter().enumerate() {
        f.write_str(if i == 0 { " where " } else { ", " })?;
        write!(f, "{} in {}..{}", p.var, p.lo, p.hi)?;
    }
    Ok(())
}

pub(super) fn write_description(f: &mut fmt::Formatter<'_>, d: &ActionDescription) -> fmt::Result {
    for fl in &d.fluents {
        write!(f, "fluent {} : ", fl.name)?;
        match &fl.domain {
            Domain::Range { lo, hi } => write!(f, "{lo}..{hi}")?,
            Domain::Set(vs) => {
                f.write_str("{")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("}")?;
            }
        }
        f.write_str(".\n")?;
    }
    for a in &d.actions {
        writeln!(f, "action {}.", a.name)?;
    }
    for law in &d.statics {
        write_atom(f, &law.head)?;
        f.write_str(" if ")?;
        write_atoms(f, &law.body)?;
        write_params(f, &law.params)?;
        f.write_str(".\n")?;
    }
    for law in &d.dynamics {
        write!(f, "{} causes ", law.action)?;
        write_atom(f, &law.effect)?;
        if !law.conditions.is_empty() {
            f.write_str(" if ")?;
            write_atoms(f, &law.conditions)?;
        }
        write_params(f, &law.params)?;
        f.write_str(".\n")?;
    }
    Ok(())
}

pub(super) fn write_query(f: &mut fmt::Formatter<'_>, q: &Query) -> fmt::Result {
    for (kw, atoms) in [("init", &q.initial), ("goal", &q.goal)] {
        f.write_str(kw)?;
        for (i, a) in atoms.iter().enumerate() {
            f.write_str(if i == 0 { " " } else { ", " })?;
            write!(f, "{a}")?;
        }
        f.write_str(".\n")?;
    }
    Ok(())
}
