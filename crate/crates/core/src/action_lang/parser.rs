use super::lexer::{tokenize, Tok, Token};
use super::{
    ActionDecl, ActionDescription, Atom, Domain, DynamicLaw, FluentDecl, GroundAtom, Location,
    Param, ParseError, ParseErrorKind, Query, StaticLaw, Value, ValueExpr,
};

struct Cursor {
    tokens: Vec<Token>,
    pos: usize,
    /// Location reported when input ends mid-statement.
    end: Location,
}

impl Cursor {
    fn new(text: &str) -> Result<Self, ParseError> {
        let tokens = tokenize(text)?;
        let end = match text.lines().count() {
            0 => Location::new(1, 1),
            n => Location::new(n as u32, text.lines().last().map_or(0, |l| l.len()) as u32 + 1),
        };
        Ok(Self {
            tokens,
            pos: 0,
            end,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.tokens.get(self.pos + offset).map(|t| &t.tok)
    }

    fn loc(&self) -> Location {
        self.tokens.get(self.pos).map_or(self.end, |t| t.loc)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn is_done(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn malformed(&self, what: impl Into<String>) -> ParseError {
        let found = match self.peek() {
            Some(t) => format!("{}, found {}", what.into(), t.describe()),
            None => format!("{}, found end of input", what.into()),
        };
        ParseError::new(self.loc(), ParseErrorKind::Malformed(found))
    }

    fn expect(&mut self, tok: Tok) -> Result<Location, ParseError> {
        if self.peek() == Some(&tok) {
            Ok(self.next().unwrap().loc)
        } else {
            Err(self.malformed(format!("expected {}", tok.describe())))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Location), ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) if !is_keyword(s) => {
                let s = s.clone();
                let loc = self.next().unwrap().loc;
                Ok((s, loc))
            }
            _ => Err(self.malformed(format!("expected {what}"))),
        }
    }

    fn int(&mut self) -> Result<i64, ParseError> {
        let negative = self.eat(&Tok::Minus);
        match self.peek() {
            Some(Tok::Int(i)) => {
                let i = *i;
                self.pos += 1;
                Ok(if negative { -i } else { i })
            }
            _ => Err(self.malformed("expected an integer")),
        }
    }

    fn value(&mut self) -> Result<Value, ParseError> {
        match self.peek() {
            Some(Tok::Int(_)) | Some(Tok::Minus) => Ok(Value::Int(self.int()?)),
            Some(Tok::Ident(s)) if !is_keyword(s) => {
                let s = s.clone();
                self.pos += 1;
                Ok(Value::Sym(s))
            }
            _ => Err(self.malformed("expected a value")),
        }
    }
}

const KEYWORDS: &[&str] = &["fluent", "action", "causes", "if", "where", "in", "init", "goal"];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

pub(crate) fn parse_description(text: &str) -> Result<ActionDescription, ParseError> {
    let mut cur = Cursor::new(text)?;
    let mut desc = ActionDescription::default();

    while !cur.is_done() {
        let start = cur.loc();
        if cur.eat_keyword("fluent") {
            desc.fluents.push(fluent_decl(&mut cur, start)?);
        } else if cur.eat_keyword("action") {
            let (name, _) = cur.ident("an action name")?;
            cur.expect(Tok::Dot)?;
            desc.actions.push(ActionDecl { name, loc: start });
        } else if matches!(cur.peek_at(1), Some(Tok::Ident(kw)) if kw == "causes") {
            let (action, _) = cur.ident("an action name")?;
            cur.next();
            let effect = atom(&mut cur)?;
            let conditions = if cur.eat_keyword("if") {
                atom_list(&mut cur)?
            } else {
                Vec::new()
            };
            let params = where_clause(&mut cur)?;
            cur.expect(Tok::Dot)?;
            desc.dynamics.push(DynamicLaw {
                action,
                effect,
                conditions,
                params,
                loc: start,
            });
        } else if matches!(cur.peek(), Some(Tok::Ident(s)) if !is_keyword(s)) {
            let head = atom(&mut cur)?;
            if !cur.eat_keyword("if") {
                return Err(cur.malformed("expected `if` after the head of a static law"));
            }
            let body = atom_list(&mut cur)?;
            let params = where_clause(&mut cur)?;
            cur.expect(Tok::Dot)?;
            desc.statics.push(StaticLaw {
                head,
                body,
                params,
                loc: start,
            });
        } else {
            return Err(cur.malformed("expected a declaration or a law"));
        }
    }

    infer_params(&mut desc);
    Ok(desc)
}

fn fluent_decl(cur: &mut Cursor, loc: Location) -> Result<FluentDecl, ParseError> {
    let (name, _) = cur.ident("a fluent name")?;
    cur.expect(Tok::Colon)?;
    let domain = if cur.eat(&Tok::LBrace) {
        let mut values = vec![cur.value()?];
        while cur.eat(&Tok::Comma) {
            values.push(cur.value()?);
        }
        cur.expect(Tok::RBrace)?;
        Domain::Set(values)
    } else {
        let lo = cur.int()?;
        cur.expect(Tok::DotDot)?;
        let hi = cur.int()?;
        Domain::Range { lo, hi }
    };
    cur.expect(Tok::Dot)?;
    Ok(FluentDecl { name, domain, loc })
}

fn atom(cur: &mut Cursor) -> Result<Atom, ParseError> {
    let (fluent, loc) = cur.ident("a fluent name")?;
    cur.expect(Tok::Eq)?;
    let value = match cur.peek() {
        Some(Tok::Var(v)) => {
            let var = v.clone();
            cur.next();
            if cur.eat(&Tok::Plus) {
                let c = cur.int()?;
                ValueExpr::Offset { var, offset: c }
            } else if cur.eat(&Tok::Minus) {
                let c = cur.int()?;
                ValueExpr::Offset { var, offset: -c }
            } else {
                ValueExpr::Var(var)
            }
        }
        _ => ValueExpr::Const(cur.value()?),
    };
    Ok(Atom { fluent, value, loc })
}

fn atom_list(cur: &mut Cursor) -> Result<Vec<Atom>, ParseError> {
    let mut atoms = vec![atom(cur)?];
    while cur.eat(&Tok::Comma) {
        atoms.push(atom(cur)?);
    }
    Ok(atoms)
}

fn where_clause(cur: &mut Cursor) -> Result<Vec<Param>, ParseError> {
    let mut params = Vec::new();
    if !cur.eat_keyword("where") {
        return Ok(params);
    }
    loop {
        let loc = cur.loc();
        let var = match cur.next() {
            Some(Token {
                tok: Tok::Var(v), ..
            }) => v,
            _ => {
                cur.pos = cur.pos.saturating_sub(1);
                return Err(cur.malformed("expected a variable"));
            }
        };
        if !cur.eat_keyword("in") {
            return Err(cur.malformed("expected `in`"));
        }
        let lo = cur.int()?;
        cur.expect(Tok::DotDot)?;
        let hi = cur.int()?;
        params.push(Param { var, lo, hi, loc });
        if !cur.eat(&Tok::Comma) {
            break;
        }
    }
    Ok(params)
}

/// Give every variable that lacks a `where` binding the interval of a fluent
/// it is directly assigned to (`f = V`). Variables that cannot be inferred are
/// left unbound and reported by validation.
fn infer_params(desc: &mut ActionDescription) {
    let fluents = desc.fluents.clone();
    let range_of = |fluent: &str| {
        fluents.iter().find_map(|f| match (&f.name == fluent, &f.domain) {
            (true, Domain::Range { lo, hi }) => Some((*lo, *hi)),
            _ => None,
        })
    };
    let fill = |atoms: Vec<&Atom>, params: &mut Vec<Param>| {
        for a in &atoms {
            let Some(var) = a.value.var() else { continue };
            if params.iter().any(|p| p.var == var) {
                continue;
            }
            let inferred = atoms.iter().find_map(|b| match &b.value {
                ValueExpr::Var(v) if v == var => range_of(&b.fluent).map(|r| (r, b.loc)),
                _ => None,
            });
            if let Some(((lo, hi), loc)) = inferred {
                params.push(Param {
                    var: var.to_string(),
                    lo,
                    hi,
                    loc,
                });
            }
        }
    };
    for law in &mut desc.statics {
        let atoms: Vec<&Atom> = std::iter::once(&law.head).chain(&law.body).collect();
        let mut params = law.params.clone();
        fill(atoms, &mut params);
        law.params = params;
    }
    for law in &mut desc.dynamics {
        let atoms: Vec<&Atom> = std::iter::once(&law.effect).chain(&law.conditions).collect();
        let mut params = law.params.clone();
        fill(atoms, &mut params);
        law.params = params;
    }
}

pub(crate) fn parse_query(text: &str, desc: &ActionDescription) -> Result<Query, ParseError> {
    let mut cur = Cursor::new(text)?;
    let mut initial = None::<Vec<GroundAtom>>;
    let mut goal = None::<Vec<GroundAtom>>;

    while !cur.is_done() {
        let slot = if cur.eat_keyword("init") {
            &mut initial
        } else if cur.eat_keyword("goal") {
            &mut goal
        } else {
            return Err(cur.malformed("expected `init` or `goal`"));
        };
        let mut atoms = vec![ground_atom(&mut cur, desc)?];
        while cur.eat(&Tok::Comma) {
            atoms.push(ground_atom(&mut cur, desc)?);
        }
        cur.expect(Tok::Dot)?;
        slot.get_or_insert_with(Vec::new).extend(atoms);
    }

    let end = cur.end;
    let missing = |what: &str| {
        ParseError::new(
            end,
            ParseErrorKind::Malformed(format!("query has no `{what}` statement")),
        )
    };
    Ok(Query {
        initial: initial.ok_or_else(|| missing("init"))?,
        goal: goal.ok_or_else(|| missing("goal"))?,
    })
}

fn ground_atom(cur: &mut Cursor, desc: &ActionDescription) -> Result<GroundAtom, ParseError> {
    let (fluent, loc) = cur.ident("a fluent name")?;
    let decl = desc.fluent(&fluent).ok_or_else(|| {
        ParseError::new(loc, ParseErrorKind::UnknownIdentifier(fluent.clone()))
    })?;
    cur.expect(Tok::Eq)?;
    let value_loc = cur.loc();
    let value = cur.value()?;
    if !decl.domain.contains(&value) {
        return Err(ParseError::new(
            value_loc,
            ParseErrorKind::Invalid(format!(
                "value `{value}` is outside the domain of `{fluent}`"
            )),
        ));
    }
    Ok(GroundAtom { fluent, value, loc })
}
