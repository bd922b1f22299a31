//! Grounding and the deterministic transition semantics of an action
//! description: direct effects, static closure, then inertia.

use std::collections::HashMap;
use std::fmt;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action_lang::{
    validate, ActionDescription, Atom, Diagnostic, GroundAtom, Param, Severity, Value, ValueExpr,
};

/// Default cap on the number of ground laws produced by [`TransitionSystem::ground`].
pub const DEFAULT_GROUND_LAW_CAP: usize = 1_000_000;

/// Dense id of a declared action, in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionId(pub usize);

/// Dense id of a ground state, assigned on first interning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateId(pub u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// `fluent = value` with both sides as indices into the description.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Literal {
    pub fluent: usize,
    pub value: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LawKind {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundLaw {
    pub kind: LawKind,
    pub action: Option<ActionId>,
    pub effect: Literal,
    pub conditions: Vec<Literal>,
}

/// Total valuation: one value index per declared fluent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundState(Box<[u32]>);

impl GroundState {
    pub fn new(values: Vec<u32>) -> Self {
        Self(values.into_boxed_slice())
    }

    pub fn get(&self, fluent: usize) -> u32 {
        self.0[fluent]
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }
}

/// True iff every literal holds in `s`.
pub fn holds(s: &GroundState, conds: &[Literal]) -> bool {
    conds.iter().all(|l| s.0[l.fluent] == l.value)
}

fn holds_partial(v: &[Option<u32>], conds: &[Literal]) -> bool {
    conds.iter().all(|l| v[l.fluent] == Some(l.value))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransitionError {
    #[error("description does not validate: {0}")]
    Invalid(Diagnostic),
    #[error("grounding produced more than {cap} laws")]
    TooManyLaws { cap: usize },
    #[error("conflicting values derived for fluent `{0}`")]
    Inconsistent(String),
    #[error("fluent `{0}` has no value")]
    Underdetermined(String),
    #[error("unknown fluent `{0}`")]
    UnknownFluent(String),
    #[error("value `{value}` is outside the domain of `{fluent}`")]
    BadValue { fluent: String, value: Value },
}

/// Outcome of executing one action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Successor<S> {
    Next(S),
    /// No dynamic law for the action fires in this state.
    Inapplicable,
    /// Fired effects or derived statics disagree on some fluent.
    Inconsistent,
}

impl<S> Successor<S> {
    pub fn next(self) -> Option<S> {
        match self {
            Successor::Next(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Default)]
struct Codec {
    states: Vec<GroundState>,
    ids: HashMap<GroundState, StateId>,
    successors: HashMap<(StateId, ActionId), Successor<StateId>>,
}

/// Ground laws plus a lazily filled bijection between states and ids.
pub struct TransitionSystem {
    desc: ActionDescription,
    domains: Vec<Vec<Value>>,
    laws: Vec<GroundLaw>,
    statics: Vec<usize>,
    by_action: Vec<Vec<usize>>,
    codec: RwLock<Codec>,
}

impl fmt::Debug for TransitionSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransitionSystem")
            .field("fluents", &self.desc.fluents.len())
            .field("actions", &self.desc.actions.len())
            .field("laws", &self.laws.len())
            .field("states", &self.state_count())
            .finish()
    }
}

impl TransitionSystem {
    pub fn ground(desc: &ActionDescription) -> Result<Self, TransitionError> {
        Self::ground_with_cap(desc, DEFAULT_GROUND_LAW_CAP)
    }

    pub fn ground_with_cap(desc: &ActionDescription, cap: usize) -> Result<Self, TransitionError> {
        if let Some(d) = validate(desc)
            .into_iter()
            .find(|d| d.severity == Severity::Error)
        {
            return Err(TransitionError::Invalid(d));
        }
        let domains: Vec<Vec<Value>> = desc.fluents.iter().map(|f| f.domain.values()).collect();
        let mut g = Grounder {
            desc,
            domains: &domains,
            laws: Vec::new(),
            cap,
        };
        for law in &desc.statics {
            g.ground_law(LawKind::Static, None, &law.head, &law.body, &law.params)?;
        }
        for law in &desc.dynamics {
            let action = desc.action_index(&law.action).map(ActionId);
            g.ground_law(LawKind::Dynamic, action, &law.effect, &law.conditions, &law.params)?;
        }
        let laws = g.laws;
        let statics = (0..laws.len())
            .filter(|&i| laws[i].kind == LawKind::Static)
            .collect();
        let mut by_action = vec![Vec::new(); desc.actions.len()];
        for (i, law) in laws.iter().enumerate() {
            if let Some(a) = law.action {
                by_action[a.0].push(i);
            }
        }
        Ok(Self {
            desc: desc.clone(),
            domains,
            laws,
            statics,
            by_action,
            codec: RwLock::new(Codec::default()),
        })
    }

    pub fn description(&self) -> &ActionDescription {
        &self.desc
    }

    pub fn laws(&self) -> &[GroundLaw] {
        &self.laws
    }

    pub fn action_count(&self) -> usize {
        self.desc.actions.len()
    }

    pub fn actions(&self) -> impl Iterator<Item = ActionId> {
        (0..self.desc.actions.len()).map(ActionId)
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.desc.action_index(name).map(ActionId)
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        &self.desc.actions[a.0].name
    }

    pub fn fluent_index(&self, name: &str) -> Option<usize> {
        self.desc.fluents.iter().position(|f| f.name == name)
    }

    pub fn literal(&self, fluent: &str, value: &Value) -> Result<Literal, TransitionError> {
        let f = self
            .fluent_index(fluent)
            .ok_or_else(|| TransitionError::UnknownFluent(fluent.to_string()))?;
        let v = self.domains[f]
            .iter()
            .position(|x| x == value)
            .ok_or_else(|| TransitionError::BadValue {
                fluent: fluent.to_string(),
                value: value.clone(),
            })?;
        Ok(Literal {
            fluent: f,
            value: v as u32,
        })
    }

    pub fn literals(&self, atoms: &[GroundAtom]) -> Result<Vec<Literal>, TransitionError> {
        atoms
            .iter()
            .map(|a| self.literal(&a.fluent, &a.value))
            .collect()
    }

    /// Value of fluent `fluent` in `s`.
    pub fn value(&self, s: &GroundState, fluent: usize) -> &Value {
        &self.domains[fluent][s.get(fluent) as usize]
    }

    /// Least fixpoint of the static laws over a partial valuation. Assigned
    /// values are facts: a static law deriving a different value for one of
    /// them is a conflict. Fluents that remain unassigned make the result
    /// underdetermined.
    pub fn static_closure(&self, partial: &[Option<u32>]) -> Result<GroundState, TransitionError> {
        let mut v = partial.to_vec();
        let mut fixed: Vec<bool> = v.iter().map(Option::is_some).collect();
        self.close_partial(&mut v, &mut fixed)
            .map_err(|f| TransitionError::Inconsistent(self.desc.fluents[f].name.clone()))?;
        let total = v
            .iter()
            .enumerate()
            .map(|(i, x)| {
                x.ok_or_else(|| TransitionError::Underdetermined(self.desc.fluents[i].name.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GroundState::new(total))
    }

    /// Apply static laws until nothing changes. Fluents marked in `fixed` were
    /// caused this step and may not be overridden; unfixed assigned values are
    /// inertial defaults that a static law may replace once. Returns the index
    /// of a conflicting fluent on failure.
    fn close_partial(&self, v: &mut [Option<u32>], fixed: &mut [bool]) -> Result<(), usize> {
        let mut changed = true;
        while changed {
            changed = false;
            for &i in &self.statics {
                let law = &self.laws[i];
                if !holds_partial(v, &law.conditions) {
                    continue;
                }
                let Literal { fluent, value } = law.effect;
                match v[fluent] {
                    Some(x) if x == value => fixed[fluent] = true,
                    Some(_) if fixed[fluent] => return Err(fluent),
                    _ => {
                        v[fluent] = Some(value);
                        fixed[fluent] = true;
                        changed = true;
                    }
                }
            }
        }
        Ok(())
    }

    /// Total initial state from the `init` atoms of a query.
    pub fn initial_state(&self, atoms: &[GroundAtom]) -> Result<GroundState, TransitionError> {
        let mut partial = vec![None; self.desc.fluents.len()];
        for lit in self.literals(atoms)? {
            match partial[lit.fluent] {
                Some(x) if x != lit.value => {
                    return Err(TransitionError::Inconsistent(
                        self.desc.fluents[lit.fluent].name.clone(),
                    ))
                }
                _ => partial[lit.fluent] = Some(lit.value),
            }
        }
        self.static_closure(&partial)
    }

    /// Build a state from a complete `fluent -> value` listing.
    pub fn state_from_valuation(
        &self,
        valuation: &[(&str, Value)],
    ) -> Result<GroundState, TransitionError> {
        let atoms: Vec<GroundAtom> = valuation
            .iter()
            .map(|(f, v)| GroundAtom::new(*f, v.clone()))
            .collect();
        self.initial_state(&atoms)
    }

    pub fn successor(&self, s: &GroundState, a: ActionId) -> Successor<GroundState> {
        let n = s.0.len();
        let mut v: Vec<Option<u32>> = vec![None; n];
        let mut fixed = vec![false; n];
        let mut fired = false;
        for &i in self.by_action.get(a.0).map(Vec::as_slice).unwrap_or(&[]) {
            let law = &self.laws[i];
            if !holds(s, &law.conditions) {
                continue;
            }
            fired = true;
            let Literal { fluent, value } = law.effect;
            match v[fluent] {
                Some(x) if x != value => return Successor::Inconsistent,
                _ => {
                    v[fluent] = Some(value);
                    fixed[fluent] = true;
                }
            }
        }
        if !fired {
            return Successor::Inapplicable;
        }
        if self.close_partial(&mut v, &mut fixed).is_err() {
            return Successor::Inconsistent;
        }
        // inertia, then let static laws see the completed state
        for (f, x) in v.iter_mut().enumerate() {
            if x.is_none() {
                *x = Some(s.0[f]);
            }
        }
        if self.close_partial(&mut v, &mut fixed).is_err() {
            return Successor::Inconsistent;
        }
        Successor::Next(GroundState::new(v.into_iter().map(Option::unwrap).collect()))
    }

    /// Id for `s`, assigning the next free id on first sight.
    pub fn intern(&self, s: &GroundState) -> StateId {
        if let Some(&id) = self.codec.read().unwrap().ids.get(s) {
            return id;
        }
        let mut codec = self.codec.write().unwrap();
        if let Some(&id) = codec.ids.get(s) {
            return id;
        }
        let id = StateId(u32::try_from(codec.states.len()).expect("state id overflow"));
        codec.states.push(s.clone());
        codec.ids.insert(s.clone(), id);
        id
    }

    /// Id of `s` if it has been interned.
    pub fn lookup(&self, s: &GroundState) -> Option<StateId> {
        self.codec.read().unwrap().ids.get(s).copied()
    }

    /// The state behind an interned id.
    ///
    /// Panics if `id` was not produced by this system.
    pub fn state(&self, id: StateId) -> GroundState {
        self.codec.read().unwrap().states[id.index()].clone()
    }

    pub fn state_count(&self) -> usize {
        self.codec.read().unwrap().states.len()
    }

    /// Memoised [`successor`](Self::successor) on interned ids.
    pub fn successor_id(&self, s: StateId, a: ActionId) -> Successor<StateId> {
        if let Some(r) = self.codec.read().unwrap().successors.get(&(s, a)) {
            return r.clone();
        }
        let r = match self.successor(&self.state(s), a) {
            Successor::Next(n) => Successor::Next(self.intern(&n)),
            Successor::Inapplicable => Successor::Inapplicable,
            Successor::Inconsistent => Successor::Inconsistent,
        };
        self.codec
            .write()
            .unwrap()
            .successors
            .insert((s, a), r.clone());
        r
    }

    pub fn satisfies(&self, s: StateId, goal: &[Literal]) -> bool {
        let codec = self.codec.read().unwrap();
        holds(&codec.states[s.index()], goal)
    }

    /// `f1=v1, f2=v2, ...` rendering of a state.
    pub fn describe(&self, s: &GroundState) -> String {
        self.desc
            .fluents
            .iter()
            .enumerate()
            .map(|(i, f)| format!("{}={}", f.name, self.value(s, i)))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

struct Grounder<'a> {
    desc: &'a ActionDescription,
    domains: &'a [Vec<Value>],
    laws: Vec<GroundLaw>,
    cap: usize,
}

impl Grounder<'_> {
    fn ground_law(
        &mut self,
        kind: LawKind,
        action: Option<ActionId>,
        effect: &Atom,
        conditions: &[Atom],
        params: &[Param],
    ) -> Result<(), TransitionError> {
        let mut binding: Vec<i64> = params.iter().map(|p| p.lo).collect();
        loop {
            let lits: Option<Vec<Literal>> = std::iter::once(effect)
                .chain(conditions)
                .map(|a| self.ground_atom(a, params, &binding))
                .collect();
            if let Some(mut lits) = lits {
                let effect = lits.remove(0);
                if self.laws.len() >= self.cap {
                    return Err(TransitionError::TooManyLaws { cap: self.cap });
                }
                self.laws.push(GroundLaw {
                    kind,
                    action,
                    effect,
                    conditions: lits,
                });
            }
            let mut i = 0;
            loop {
                if i == params.len() {
                    return Ok(());
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

    /// `None` when the binding takes the value outside the fluent's domain.
    fn ground_atom(&self, a: &Atom, params: &[Param], binding: &[i64]) -> Option<Literal> {
        let bound = |var: &str| {
            let i = params.iter().position(|p| p.var == var)?;
            Some(binding[i])
        };
        let value = match &a.value {
            ValueExpr::Const(v) => v.clone(),
            ValueExpr::Var(v) => Value::Int(bound(v)?),
            ValueExpr::Offset { var, offset } => Value::Int(bound(var)?.checked_add(*offset)?),
        };
        let fluent = self.desc.fluents.iter().position(|f| f.name == a.fluent)?;
        let idx = self.domains[fluent].iter().position(|x| *x == value)?;
        Some(Literal {
            fluent,
            value: idx as u32,
        })
    }
}
