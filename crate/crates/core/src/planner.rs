//! Sample-based planning: availability of each action in each state at each
//! timestamp is drawn from the current policy, and the plan is the shortest
//! path through the resulting time-expanded graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action_lang::Query;
use crate::rl::sample_action;
use crate::transition::{ActionId, GroundState, Literal, StateId, Successor, TransitionError, TransitionSystem};

/// Tolerance on the total probability mass reported by a policy.
const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlannerError {
    #[error("policy distribution for {state} sums to {sum}")]
    NotNormalized { state: StateId, sum: f64 },
    #[error("policy distribution for {state} has {got} entries, expected {expected}")]
    WrongArity {
        state: StateId,
        got: usize,
        expected: usize,
    },
    #[error("bad planning problem: {0}")]
    Problem(#[from] TransitionError),
    #[error("maxstamp must be at least 1")]
    ZeroMaxstamp,
}

/// Anything that can report an action distribution for a state.
pub trait PolicyEvaluator {
    fn probabilities(&self, s: StateId) -> Vec<f64>;
}

impl<F: Fn(StateId) -> Vec<f64>> PolicyEvaluator for F {
    fn probabilities(&self, s: StateId) -> Vec<f64> {
        self(s)
    }
}

/// Actions sampled as available, per state, for one timestamp.
pub type PoolSlice = BTreeMap<StateId, Vec<ActionId>>;

/// Source of per-timestamp availability facts.
pub trait Availability {
    /// Available actions for each of `states` at timestamp `t`. Called exactly
    /// once per timestamp in a solve.
    fn slice(
        &mut self,
        ts: &TransitionSystem,
        states: &BTreeSet<StateId>,
        t: u32,
    ) -> Result<PoolSlice, PlannerError>;
}

/// Every action is available everywhere.
#[derive(Debug, Clone, Copy, Default)]
pub struct FullAvailability;

impl Availability for FullAvailability {
    fn slice(
        &mut self,
        ts: &TransitionSystem,
        states: &BTreeSet<StateId>,
        _t: u32,
    ) -> Result<PoolSlice, PlannerError> {
        let all: Vec<ActionId> = ts.actions().collect();
        Ok(states.iter().map(|&s| (s, all.clone())).collect())
    }
}

/// Draws availability from a policy.
pub struct PolicySampler<'a, P: ?Sized, R> {
    pub policy: &'a P,
    pub rng: &'a mut R,
    pub samples_per_state: u32,
}

impl<P: PolicyEvaluator + ?Sized, R: Rng> Availability for PolicySampler<'_, P, R> {
    fn slice(
        &mut self,
        ts: &TransitionSystem,
        states: &BTreeSet<StateId>,
        t: u32,
    ) -> Result<PoolSlice, PlannerError> {
        sample_pool(ts, self.policy, states, t, self.samples_per_state, self.rng)
    }
}

/// A fixed table of availability facts keyed by `(timestamp, state)`.
/// States missing from the table have nothing available.
#[derive(Debug, Clone, Default)]
pub struct FixedPool {
    facts: BTreeMap<(u32, StateId), Vec<ActionId>>,
}

impl FixedPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, t: u32, s: StateId, a: ActionId) {
        self.facts.entry((t, s)).or_default().push(a);
    }
}

impl Availability for FixedPool {
    fn slice(
        &mut self,
        _ts: &TransitionSystem,
        states: &BTreeSet<StateId>,
        t: u32,
    ) -> Result<PoolSlice, PlannerError> {
        Ok(states
            .iter()
            .filter_map(|&s| self.facts.get(&(t, s)).map(|a| (s, a.clone())))
            .collect())
    }
}

/// Draw `samples_per_state` actions i.i.d. from the policy for each state.
/// Repeated draws of the same action collapse into one availability fact.
pub fn sample_pool<P: PolicyEvaluator + ?Sized, R: Rng>(
    ts: &TransitionSystem,
    policy: &P,
    states: &BTreeSet<StateId>,
    _t: u32,
    samples_per_state: u32,
    rng: &mut R,
) -> Result<PoolSlice, PlannerError> {
    let n = ts.action_count();
    let mut slice = PoolSlice::new();
    for &s in states {
        let probs = policy.probabilities(s);
        if probs.len() != n {
            return Err(PlannerError::WrongArity {
                state: s,
                got: probs.len(),
                expected: n,
            });
        }
        let sum: f64 = probs.iter().sum();
        if !sum.is_finite()
            || (sum - 1.0).abs() > NORMALIZATION_TOLERANCE
            || probs.iter().any(|p| *p < 0.0)
        {
            return Err(PlannerError::NotNormalized { state: s, sum });
        }
        let mut drawn: Vec<ActionId> = (0..samples_per_state.max(1))
            .map(|_| ActionId(sample_action(&probs, rng)))
            .collect();
        drawn.sort();
        drawn.dedup();
        slice.insert(s, drawn);
    }
    Ok(slice)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Deepest horizon tried. Under a near-uniform policy with one sample per
    /// state a plan of `n` actions over `m` actions needs about `n * m`
    /// timestamps, so this must sit well above that for the larger domains.
    pub maxstamp: u32,
    pub samples_per_state: u32,
    pub seed: u64,
    pub max_plan_actions: Option<u32>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            maxstamp: 200,
            samples_per_state: 1,
            seed: 0,
            max_plan_actions: None,
        }
    }
}

/// Initial state and goal resolved against a transition system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub initial: GroundState,
    pub goal: Vec<Literal>,
}

impl Problem {
    pub fn from_query(ts: &TransitionSystem, q: &Query) -> Result<Self, TransitionError> {
        Ok(Self {
            initial: ts.initial_state(&q.initial)?,
            goal: ts.literals(&q.goal)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    /// Timestamp at which the step starts; the first step is at 1.
    pub t: u32,
    pub state: StateId,
    /// `None` for an idle step.
    pub action: Option<ActionId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
    pub horizon: u32,
}

impl Plan {
    /// Action steps with idles removed, in order.
    pub fn plan_actions(&self) -> Vec<(StateId, ActionId)> {
        self.steps
            .iter()
            .filter_map(|s| s.action.map(|a| (s.state, a)))
            .collect()
    }

    pub fn action_count(&self) -> usize {
        self.steps.iter().filter(|s| s.action.is_some()).count()
    }

    /// One `t:<n> <action>|idle` line per step.
    pub fn to_text(&self, ts: &TransitionSystem) -> String {
        PlanText { plan: self, ts }.to_string()
    }
}

struct PlanText<'a> {
    plan: &'a Plan,
    ts: &'a TransitionSystem,
}

impl fmt::Display for PlanText<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for step in &self.plan.steps {
            match step.action {
                Some(a) => writeln!(f, "t:{} {}", step.t, self.ts.action_name(a))?,
                None => writeln!(f, "t:{} idle", step.t)?,
            }
        }
        Ok(())
    }
}

/// Parse the `t:<n> <action>|idle` form back into `(t, action)` pairs.
pub fn parse_plan_text(
    ts: &TransitionSystem,
    text: &str,
) -> Result<Vec<(u32, Option<ActionId>)>, String> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let (stamp, act) = line
                .trim()
                .split_once(' ')
                .ok_or_else(|| format!("bad plan line `{line}`"))?;
            let t = stamp
                .strip_prefix("t:")
                .and_then(|n| n.parse().ok())
                .ok_or_else(|| format!("bad timestamp in `{line}`"))?;
            let a = match act {
                "idle" => None,
                name => Some(
                    ts.action_id(name)
                        .ok_or_else(|| format!("unknown action `{name}`"))?,
                ),
            };
            Ok((t, a))
        })
        .collect()
}

/// Iterative deepening over horizons `k = 1..=maxstamp`. At each `k` the slice
/// for timestamp `k` is drawn for the states reachable at `k`; earlier slices
/// are kept. The first horizon at which the goal is reachable yields the plan
/// with the fewest action steps, ties broken towards earlier-declared actions
/// and then idling.
pub fn solve<A: Availability + ?Sized>(
    problem: &Problem,
    ts: &TransitionSystem,
    availability: &mut A,
    cfg: &PlannerConfig,
) -> Result<Option<Plan>, PlannerError> {
    if cfg.maxstamp == 0 {
        return Err(PlannerError::ZeroMaxstamp);
    }
    let start = ts.intern(&problem.initial);
    if ts.satisfies(start, &problem.goal) {
        return Ok(Some(Plan::default()));
    }

    // layers[i] = states reachable at timestamp i+1
    let mut layers: Vec<BTreeSet<StateId>> = vec![BTreeSet::from([start])];
    // slices[i] = availability at timestamp i+1, with dead moves removed
    let mut slices: Vec<BTreeMap<StateId, Vec<(ActionId, StateId)>>> = Vec::new();

    for k in 1..=cfg.maxstamp {
        let current = &layers[k as usize - 1];
        let raw = availability.slice(ts, current, k)?;
        let mut moves = BTreeMap::new();
        let mut next = current.clone();
        for (&s, acts) in &raw {
            let mut ms: Vec<(ActionId, StateId)> = acts
                .iter()
                .filter_map(|&a| match ts.successor_id(s, a) {
                    Successor::Next(n) => Some((a, n)),
                    _ => None,
                })
                .collect();
            ms.sort();
            ms.dedup();
            next.extend(ms.iter().map(|&(_, n)| n));
            moves.insert(s, ms);
        }
        slices.push(moves);
        layers.push(next);

        let last = &layers[k as usize];
        if !last.iter().any(|&s| ts.satisfies(s, &problem.goal)) {
            continue;
        }
        let plan = extract(ts, problem, &layers, &slices, start, k);
        match (plan, cfg.max_plan_actions) {
            (Some(p), Some(cap)) if p.action_count() > cap as usize => continue,
            (p, _) => return Ok(p),
        }
    }
    Ok(None)
}

/// Convenience wrapper drawing availability from `policy`.
pub fn solve_with_policy<P: PolicyEvaluator + ?Sized, R: Rng>(
    problem: &Problem,
    ts: &TransitionSystem,
    policy: &P,
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Result<Option<Plan>, PlannerError> {
    let mut sampler = PolicySampler {
        policy,
        rng,
        samples_per_state: cfg.samples_per_state,
    };
    solve(problem, ts, &mut sampler, cfg)
}

fn extract(
    ts: &TransitionSystem,
    problem: &Problem,
    layers: &[BTreeSet<StateId>],
    slices: &[BTreeMap<StateId, Vec<(ActionId, StateId)>>],
    start: StateId,
    k: u32,
) -> Option<Plan> {
    let k = k as usize;
    // cost[i][s]: fewest action steps from s at timestamp i+1 to the goal by k+1
    let mut cost: Vec<BTreeMap<StateId, u32>> = vec![BTreeMap::new(); k + 1];
    for &s in &layers[k] {
        if ts.satisfies(s, &problem.goal) {
            cost[k].insert(s, 0);
        }
    }
    for i in (0..k).rev() {
        let (head, tail) = cost.split_at_mut(i + 1);
        let (here, after) = (&mut head[i], &tail[0]);
        for &s in &layers[i] {
            let idle = after.get(&s).copied();
            let acts = slices[i]
                .get(&s)
                .into_iter()
                .flatten()
                .filter_map(|(_, n)| after.get(n).map(|c| c + 1));
            if let Some(best) = idle.into_iter().chain(acts).min() {
                here.insert(s, best);
            }
        }
    }

    let mut remaining = *cost[0].get(&start)?;
    let mut s = start;
    let mut steps = Vec::with_capacity(k);
    for i in 0..k {
        let after = &cost[i + 1];
        let chosen = slices[i]
            .get(&s)
            .into_iter()
            .flatten()
            .find(|(_, n)| remaining > 0 && after.get(n) == Some(&(remaining - 1)));
        let step = match chosen {
            Some(&(a, n)) => {
                let step = PlanStep {
                    t: i as u32 + 1,
                    state: s,
                    action: Some(a),
                };
                s = n;
                remaining -= 1;
                step
            }
            None => {
                debug_assert_eq!(after.get(&s), Some(&remaining));
                PlanStep {
                    t: i as u32 + 1,
                    state: s,
                    action: None,
                }
            }
        };
        steps.push(step);
    }
    Some(Plan {
        steps,
        horizon: k as u32,
    })
}
