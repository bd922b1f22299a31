//! Independent reference computations shared by the integration tests and the
//! acceptance runner. None of these go through the planner or the learners.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use pacman_core::action_lang::{
    parse_domain, parse_query, ActionDescription, Atom, Param, Value, ValueExpr,
};
use pacman_core::envs::{EnvState, Environment};
use pacman_core::planner::Problem;
use pacman_core::transition::{ActionId, GroundState, Literal, StateId, Successor, TransitionSystem};

pub fn load(env: &dyn Environment) -> (ActionDescription, TransitionSystem, Problem) {
    let (domain, query) = env.bc_encoding();
    let desc = parse_domain(&domain).expect("encoding parses");
    let q = parse_query(&query, &desc).expect("query parses");
    let ts = TransitionSystem::ground(&desc).expect("encoding grounds");
    let problem = Problem::from_query(&ts, &q).expect("initial state is consistent");
    (desc, ts, problem)
}

/// Ground states reachable from `start` through `successor`, in BFS order.
pub fn reachable(ts: &TransitionSystem, start: &GroundState) -> Vec<GroundState> {
    let mut seen = BTreeSet::from([start.clone()]);
    let mut order = vec![start.clone()];
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(s) = queue.pop_front() {
        for a in ts.actions() {
            if let Successor::Next(n) = ts.successor(&s, a) {
                if seen.insert(n.clone()) {
                    order.push(n.clone());
                    queue.push_back(n);
                }
            }
        }
    }
    order
}

/// Fewest actions from `start` to a state satisfying `goal`.
pub fn bfs_len(ts: &TransitionSystem, start: &GroundState, goal: &[Literal]) -> Option<usize> {
    let sat = |s: &GroundState| goal.iter().all(|l| s.get(l.fluent) == l.value);
    let mut dist = BTreeMap::from([(start.clone(), 0usize)]);
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        if sat(&s) {
            return Some(d);
        }
        for a in ts.actions() {
            if let Successor::Next(n) = ts.successor(&s, a) {
                if !dist.contains_key(&n) {
                    dist.insert(n.clone(), d + 1);
                    queue.push_back(n);
                }
            }
        }
    }
    None
}

/// Environment states reachable from the start; terminal states are leaves.
pub fn env_states(env: &dyn Environment) -> Vec<EnvState> {
    let mut seen = BTreeSet::from([env.start()]);
    let mut queue = VecDeque::from([env.start()]);
    while let Some(s) = queue.pop_front() {
        if env.is_terminal(&s) {
            continue;
        }
        for a in 0..env.actions().len() {
            let n = env.transition(&s, ActionId(a)).next;
            if seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen.into_iter().collect()
}

pub fn env_state_id(ts: &TransitionSystem, env: &dyn Environment, s: &EnvState) -> StateId {
    ts.intern(&ts.state_from_valuation(&env.valuation(s)).expect("valuation is consistent"))
}

/// Compare the symbolic successor with the simulator on every reachable
/// non-terminal (state, action). An action the encoding does not allow must
/// leave the simulator where it was. Returns the mismatches as text.
pub fn encoding_mismatches(env: &dyn Environment) -> (usize, Vec<String>) {
    let (_, ts, _) = load(env);
    let mut checked = 0;
    let mut bad = Vec::new();
    for s in env_states(env).iter().filter(|s| !env.is_terminal(s)) {
        let id = env_state_id(&ts, env, s);
        for a in 0..env.actions().len() {
            checked += 1;
            let sim = env.transition(s, ActionId(a)).next;
            let sim_id = env_state_id(&ts, env, &sim);
            let ok = match ts.successor_id(id, ActionId(a)) {
                Successor::Next(n) => n == sim_id,
                Successor::Inapplicable => sim == *s,
                Successor::Inconsistent => false,
            };
            if !ok {
                bad.push(format!("{s:?} --{}--> {sim:?}", env.actions()[a]));
            }
        }
    }
    (checked, bad)
}

/// Expected undiscounted return of the uniform random policy over episodes
/// capped at `cap` steps, by backward induction on the remaining steps.
pub fn random_policy_return(env: &dyn Environment, cap: usize) -> f64 {
    let states = env_states(env);
    let n = env.actions().len() as f64;
    let mut v: HashMap<EnvState, f64> = states.iter().map(|s| (*s, 0.0)).collect();
    for _ in 0..cap {
        let mut next = HashMap::with_capacity(v.len());
        for s in &states {
            let value = if env.is_terminal(s) {
                0.0
            } else {
                (0..env.actions().len())
                    .map(|a| {
                        let o = env.transition(s, ActionId(a));
                        o.reward + if o.done { 0.0 } else { v[&o.next] }
                    })
                    .sum::<f64>()
                    / n
            };
            next.insert(*s, value);
        }
        v = next;
    }
    v[&env.start()]
}

/// Best undiscounted return from the start within `horizon` steps, by value
/// iteration over the deterministic simulator.
pub fn optimal_return(env: &dyn Environment, horizon: usize) -> f64 {
    let states = env_states(env);
    let mut v: HashMap<EnvState, f64> = states.iter().map(|s| (*s, f64::NEG_INFINITY)).collect();
    for s in &states {
        if env.is_terminal(s) {
            v.insert(*s, 0.0);
        }
    }
    for _ in 0..horizon {
        let mut next = v.clone();
        for s in states.iter().filter(|s| !env.is_terminal(s)) {
            let best = (0..env.actions().len())
                .map(|a| {
                    let o = env.transition(s, ActionId(a));
                    o.reward + if o.done { 0.0 } else { v[&o.next] }
                })
                .fold(f64::NEG_INFINITY, f64::max);
            next.insert(*s, best);
        }
        v = next;
    }
    v[&env.start()]
}

/// Direct interpretation of an action description on named valuations,
/// without grounding: laws are instantiated on the fly for each state.
pub struct Interpreter<'a> {
    pub desc: &'a ActionDescription,
}

pub type Valuation = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Next(Valuation),
    Inapplicable,
    Inconsistent,
}

impl<'a> Interpreter<'a> {
    fn bindings(params: &[Param]) -> Vec<HashMap<String, i64>> {
        let mut out = vec![HashMap::new()];
        for p in params {
            out = out
                .into_iter()
                .flat_map(|b| {
                    (p.lo..=p.hi).map(move |x| {
                        let mut b = b.clone();
                        b.insert(p.var.clone(), x);
                        b
                    })
                })
                .collect();
        }
        out
    }

    /// Value of an atom under a binding, or `None` if it leaves the domain.
    fn eval(&self, atom: &Atom, b: &HashMap<String, i64>) -> Option<Value> {
        let v = match &atom.value {
            ValueExpr::Const(v) => v.clone(),
            ValueExpr::Var(x) => Value::Int(b[x]),
            ValueExpr::Offset { var, offset } => Value::Int(b[var] + offset),
        };
        self.desc.fluent(&atom.fluent)?.domain.contains(&v).then_some(v)
    }

    /// Instances of `(head, body)` whose values all stay in their domains.
    fn instances(&self, head: &Atom, body: &[Atom], params: &[Param]) -> Vec<((String, Value), Vec<(String, Value)>)> {
        Self::bindings(params)
            .iter()
            .filter_map(|b| {
                let h = self.eval(head, b)?;
                let conds = body
                    .iter()
                    .map(|a| self.eval(a, b).map(|v| (a.fluent.clone(), v)))
                    .collect::<Option<Vec<_>>>()?;
                Some(((head.fluent.clone(), h), conds))
            })
            .collect()
    }

    /// Static closure where `caused` fluents cannot be overridden and other
    /// assigned fluents are defaults a static law may replace.
    fn close(&self, v: &mut BTreeMap<String, Value>, caused: &mut BTreeSet<String>) -> bool {
        let statics: Vec<_> = self
            .desc
            .statics
            .iter()
            .flat_map(|l| self.instances(&l.head, &l.body, &l.params))
            .collect();
        loop {
            let mut changed = false;
            for ((f, x), body) in &statics {
                if !body.iter().all(|(g, y)| v.get(g) == Some(y)) {
                    continue;
                }
                match v.get(f) {
                    Some(cur) if cur == x => {
                        caused.insert(f.clone());
                    }
                    Some(_) if caused.contains(f) => return false,
                    _ => {
                        v.insert(f.clone(), x.clone());
                        caused.insert(f.clone());
                        changed = true;
                    }
                }
            }
            if !changed {
                return true;
            }
        }
    }

    pub fn step(&self, s: &Valuation, action: &str) -> Step {
        let mut v = BTreeMap::new();
        let mut caused = BTreeSet::new();
        let mut fired = false;
        for law in self.desc.dynamics.iter().filter(|l| l.action == action) {
            for ((f, x), conds) in self.instances(&law.effect, &law.conditions, &law.params) {
                if !conds.iter().all(|(g, y)| s.get(g) == Some(y)) {
                    continue;
                }
                fired = true;
                if v.get(&f).is_some_and(|cur| *cur != x) {
                    return Step::Inconsistent;
                }
                caused.insert(f.clone());
                v.insert(f, x);
            }
        }
        if !fired {
            return Step::Inapplicable;
        }
        if !self.close(&mut v, &mut caused) {
            return Step::Inconsistent;
        }
        for (f, x) in s {
            v.entry(f.clone()).or_insert_with(|| x.clone());
        }
        if !self.close(&mut v, &mut caused) {
            return Step::Inconsistent;
        }
        Step::Next(v)
    }
}

pub fn to_valuation(ts: &TransitionSystem, s: &GroundState) -> Valuation {
    ts.description()
        .fluents
        .iter()
        .enumerate()
        .map(|(i, f)| (f.name.clone(), ts.value(s, i).clone()))
        .collect()
}

/// A problem from `from` to the full valuation of `to`, or to a single fluent
/// of it when `partial` is set.
pub fn problem_between(from: &GroundState, to: &GroundState, partial: Option<usize>) -> Problem {
    let goal = (0..to.values().len())
        .filter(|f| partial.is_none_or(|p| p == *f))
        .map(|f| Literal {
            fluent: f,
            value: to.get(f),
        })
        .collect();
    Problem {
        initial: from.clone(),
        goal,
    }
}
