use super::{EnvState, Environment, Outcome};
use crate::action_lang::Value;
use crate::transition::ActionId;

const ACTIONS: [&str; 2] = ["moveleft", "moveright"];

const DOMAIN: &str = "\
% 3x1 horizontal gridworld
fluent loc : 1..3.
action moveleft.
action moveright.
moveleft causes loc=L-1 if loc=L.
moveright causes loc=L+1 if loc=L.
";

const QUERY: &str = "init loc=1.\ngoal loc=3.\n";

pub const STEP_REWARD: f64 = -1.0;
pub const GOAL_REWARD: f64 = 5.0;

/// Three cells in a row; start in cell 1, reach cell 3. Each move costs the
/// step reward except the one entering the goal.
#[derive(Debug, Clone, Default)]
pub struct Line;

impl Line {
    pub fn new() -> Self {
        Line
    }
}

impl Environment for Line {
    fn name(&self) -> &str {
        "line"
    }

    fn actions(&self) -> &[&'static str] {
        &ACTIONS
    }

    fn start(&self) -> EnvState {
        EnvState::Cell { row: 0, col: 1 }
    }

    fn transition(&self, s: &EnvState, a: ActionId) -> Outcome {
        let loc = s.pos().1;
        let next = match a.0 {
            0 if loc > 1 => loc - 1,
            1 if loc < 3 => loc + 1,
            _ => loc,
        };
        let done = next == 3;
        Outcome {
            next: EnvState::Cell { row: 0, col: next },
            reward: if done { GOAL_REWARD } else { STEP_REWARD },
            done,
        }
    }

    fn is_terminal(&self, s: &EnvState) -> bool {
        s.pos().1 == 3
    }

    fn valuation(&self, s: &EnvState) -> Vec<(&'static str, Value)> {
        vec![("loc", Value::Int(s.pos().1 as i64))]
    }

    fn bc_encoding(&self) -> (String, String) {
        (DOMAIN.to_string(), QUERY.to_string())
    }

    fn reward_set(&self) -> &[f64] {
        &[STEP_REWARD, GOAL_REWARD]
    }
}
