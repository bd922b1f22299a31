use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{FeedbackValue, Sign};
use crate::envs::{EnvState, Environment};
use crate::transition::{ActionId, StateId, TransitionError, TransitionSystem};

/// Extra path cost for entering a cell the helpful teacher avoids. Large
/// enough that any hazard-free route is preferred.
const AVOID_PENALTY: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    None,
    Helpful,
    Misleading,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::None => "none",
            Scenario::Helpful => "helpful",
            Scenario::Misleading => "misleading",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Scenario::None),
            "helpful" => Ok(Scenario::Helpful),
            "misleading" => Ok(Scenario::Misleading),
            other => Err(format!(
                "unknown scenario `{other}` (expected none, helpful or misleading)"
            )),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("no preference recorded for ({0}, action {1})")]
    Unreachable(StateId, usize),
    #[error("scenario `none` has no oracle")]
    NoScenario,
    #[error("encoding rejected an environment state: {0}")]
    Encoding(#[from] TransitionError),
}

/// A simulated teacher: a fixed sign for every reachable non-terminal
/// (state, action) pair.
///
/// The helpful teacher approves exactly the actions that start a cheapest
/// route to termination, where each move costs 1 and entering an avoided cell
/// costs an extra [`AVOID_PENALTY`]. The misleading teacher approves the
/// actions starting a shortest route that ignores hazards, and also approves
/// every lure action (stepping into a red cell, picking up where the
/// passenger is not); everything else is disapproved.
#[derive(Debug, Clone)]
pub struct ScenarioOracle {
    scenario: Scenario,
    magnitude: f64,
    table: HashMap<(StateId, ActionId), Sign>,
}

impl ScenarioOracle {
    pub fn build(
        scenario: Scenario,
        env: &dyn Environment,
        ts: &TransitionSystem,
        magnitude: f64,
    ) -> Result<Self, OracleError> {
        if scenario == Scenario::None {
            return Err(OracleError::NoScenario);
        }
        let states = reachable_states(env);
        let actions: Vec<ActionId> = (0..env.actions().len()).map(ActionId).collect();
        let mut table = HashMap::new();
        let mut record = |s: &EnvState, a: ActionId, approve: bool| -> Result<(), OracleError> {
            let id = ts.intern(&ts.state_from_valuation(&env.valuation(s))?);
            let sign = if approve { Sign::Positive } else { Sign::Negative };
            table.insert((id, a), sign);
            Ok(())
        };
        // The misleading teacher does not know about the hazards.
        let penalty = if scenario == Scenario::Helpful { AVOID_PENALTY } else { 0 };
        let edge = |s: &EnvState, a: ActionId| {
            let next = env.transition(s, a).next;
            let extra = if next != *s && env.avoid(&next) { penalty } else { 0 };
            (next, 1 + extra)
        };
        let exit = |s: &EnvState| env.is_terminal(s).then_some(0);
        let cost = cost_to_go(env, &states, &actions, &edge, &exit);
        for s in states.iter().filter(|s| !env.is_terminal(s)) {
            for &a in &actions {
                let (next, c) = edge(s, a);
                let on_route = cost[s] != u64::MAX && c.saturating_add(cost[&next]) == cost[s];
                let approve = match scenario {
                    Scenario::Helpful => on_route,
                    _ => on_route || env.lure(s, a),
                };
                record(s, a, approve)?;
            }
        }
        Ok(Self {
            scenario,
            magnitude,
            table,
        })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn feedback(&self, s: StateId, a: ActionId) -> Result<FeedbackValue, OracleError> {
        self.table
            .get(&(s, a))
            .map(|&sign| FeedbackValue::new(sign, self.magnitude))
            .ok_or(OracleError::Unreachable(s, a.0))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

/// Every state reachable from the start; terminal states are not expanded.
pub(crate) fn reachable_states(env: &dyn Environment) -> BTreeSet<EnvState> {
    let start = env.start();
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        if env.is_terminal(&s) {
            continue;
        }
        for a in 0..env.actions().len() {
            let next = env.transition(&s, ActionId(a)).next;
            if seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    seen
}

/// Cheapest cost from each state to one where `exit` gives a cost, by
/// relaxation. Terminal states are never expanded.
fn cost_to_go(
    env: &dyn Environment,
    states: &BTreeSet<EnvState>,
    actions: &[ActionId],
    edge: &dyn Fn(&EnvState, ActionId) -> (EnvState, u64),
    exit: &dyn Fn(&EnvState) -> Option<u64>,
) -> BTreeMap<EnvState, u64> {
    let mut cost: BTreeMap<EnvState, u64> = states
        .iter()
        .map(|s| (*s, exit(s).unwrap_or(u64::MAX)))
        .collect();
    loop {
        let mut changed = false;
        for s in states.iter().filter(|s| !env.is_terminal(s)) {
            let best = actions
                .iter()
                .map(|&a| {
                    let (n, c) = edge(s, a);
                    c.saturating_add(cost[&n])
                })
                .min()
                .unwrap_or(u64::MAX);
            if best < cost[s] {
                cost.insert(*s, best);
                changed = true;
            }
        }
        if !changed {
            return cost;
        }
    }
}
