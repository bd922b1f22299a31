//! Deterministic gridworld simulators and their causal-law encodings.

mod fourrooms;
pub mod layout;
mod line;
mod taxi;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action_lang::Value;
use crate::transition::ActionId;

pub use fourrooms::FourRooms;
pub use layout::{Cell, Direction, Layout, LayoutError, Pos};
pub use line::Line;
pub use taxi::Taxi;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Passenger {
    Waiting,
    InTaxi,
    Delivered,
}

impl Passenger {
    pub fn symbol(self) -> &'static str {
        match self {
            Passenger::Waiting => "waiting",
            Passenger::InTaxi => "intaxi",
            Passenger::Delivered => "delivered",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EnvState {
    Cell {
        row: usize,
        col: usize,
    },
    Taxi {
        row: usize,
        col: usize,
        passenger: Passenger,
    },
}

impl EnvState {
    pub fn pos(&self) -> Pos {
        match *self {
            EnvState::Cell { row, col } | EnvState::Taxi { row, col, .. } => (row, col),
        }
    }
}

impl fmt::Display for EnvState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvState::Cell { row, col } => write!(f, "({row},{col})"),
            EnvState::Taxi {
                row,
                col,
                passenger,
            } => write!(f, "({row},{col},{})", passenger.symbol()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub next: EnvState,
    pub reward: f64,
    pub done: bool,
}

/// A deterministic episodic MDP with a matching causal-law encoding.
///
/// Action ids index [`actions`](Environment::actions) and coincide with the
/// declaration order in the encoding.
pub trait Environment: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn actions(&self) -> &[&'static str];
    fn start(&self) -> EnvState;
    /// Pure transition function. Must not be called on terminal states.
    fn transition(&self, s: &EnvState, a: ActionId) -> Outcome;
    fn is_terminal(&self, s: &EnvState) -> bool;
    /// The state as `fluent = value` pairs in the encoding's vocabulary.
    fn valuation(&self, s: &EnvState) -> Vec<(&'static str, Value)>;
    /// Domain text and query text for the planner.
    fn bc_encoding(&self) -> (String, String);
    /// Cells a careful teacher steers around.
    fn avoid(&self, _s: &EnvState) -> bool {
        false
    }
    /// Actions a misleading teacher encourages.
    fn lure(&self, _s: &EnvState, _a: ActionId) -> bool {
        false
    }
    fn layout(&self) -> Option<&Layout> {
        None
    }
    /// Every reward `transition` can return.
    fn reward_set(&self) -> &[f64];
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnvError {
    #[error("episode already finished")]
    Finished,
    #[error("action {0} out of range")]
    BadAction(usize),
}

/// Episode bookkeeping around an environment.
#[derive(Debug, Clone)]
pub struct Episode<'a> {
    env: &'a dyn Environment,
    state: EnvState,
    done: bool,
    steps: usize,
    ret: f64,
}

impl<'a> Episode<'a> {
    pub fn new(env: &'a dyn Environment) -> Self {
        Self {
            env,
            state: env.start(),
            done: false,
            steps: 0,
            ret: 0.0,
        }
    }

    pub fn reset(&mut self) -> EnvState {
        *self = Self::new(self.env);
        self.state
    }

    pub fn state(&self) -> EnvState {
        self.state
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn total_return(&self) -> f64 {
        self.ret
    }

    pub fn step(&mut self, a: ActionId) -> Result<Outcome, EnvError> {
        if self.done {
            return Err(EnvError::Finished);
        }
        if a.0 >= self.env.actions().len() {
            return Err(EnvError::BadAction(a.0));
        }
        let out = self.env.transition(&self.state, a);
        self.state = out.next;
        self.done = out.done;
        self.steps += 1;
        self.ret += out.reward;
        Ok(out)
    }
}

/// Which simulator to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    FourRooms,
    Taxi,
    Line,
}

impl DomainKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DomainKind::FourRooms => "fourrooms",
            DomainKind::Taxi => "taxi",
            DomainKind::Line => "line",
        }
    }

    /// The canonical instance shipped with the crate.
    pub fn build(self) -> Arc<dyn Environment> {
        match self {
            DomainKind::FourRooms => Arc::new(FourRooms::canonical()),
            DomainKind::Taxi => Arc::new(Taxi::canonical()),
            DomainKind::Line => Arc::new(Line::new()),
        }
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DomainKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fourrooms" => Ok(DomainKind::FourRooms),
            "taxi" => Ok(DomainKind::Taxi),
            "line" => Ok(DomainKind::Line),
            other => Err(format!(
                "unknown domain `{other}` (expected fourrooms, taxi or line)"
            )),
        }
    }
}

/// Move laws for every legal grid move, one law per maximal run of cells
/// sharing a row (east/west) or a column (north/south).
pub(crate) fn grid_move_laws(layout: &Layout, moves: &[(&str, Direction)]) -> String {
    let mut out = String::new();
    for &(name, d) in moves {
        let horizontal = matches!(d, Direction::East | Direction::West);
        let (outer, inner) = if horizontal {
            (layout.rows(), layout.cols())
        } else {
            (layout.cols(), layout.rows())
        };
        for o in 0..outer {
            let legal: Vec<usize> = (0..inner)
                .filter(|&i| {
                    let p = if horizontal { (o, i) } else { (i, o) };
                    layout.is_open(p) && layout.neighbor(p, d).is_some()
                })
                .collect();
            for (lo, hi) in runs(&legal) {
                let law = match d {
                    Direction::East => format!("col=C+1 if row={o}, col=C where C in {lo}..{hi}"),
                    Direction::West => format!("col=C-1 if row={o}, col=C where C in {lo}..{hi}"),
                    Direction::South => format!("row=R+1 if row=R, col={o} where R in {lo}..{hi}"),
                    Direction::North => format!("row=R-1 if row=R, col={o} where R in {lo}..{hi}"),
                };
                out.push_str(&format!("{name} causes {law}.\n"));
            }
        }
    }
    out
}

fn runs(sorted: &[usize]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for &x in sorted {
        match out.last_mut() {
            Some((_, hi)) if *hi + 1 == x => *hi = x,
            _ => out.push((x, x)),
        }
    }
    out
}
