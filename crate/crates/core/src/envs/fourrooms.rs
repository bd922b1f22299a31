use std::collections::BTreeSet;

use super::layout::{Cell, Direction, Layout, LayoutError, Pos};
use super::{grid_move_laws, EnvState, Environment, Outcome};
use crate::action_lang::Value;
use crate::transition::ActionId;

const CANONICAL: &str = include_str!("../../layouts/fourrooms.txt");

const ACTIONS: [&str; 4] = ["up", "down", "left", "right"];
const DIRECTIONS: [Direction; 4] = [
    Direction::North,
    Direction::South,
    Direction::West,
    Direction::East,
];

pub const STEP_REWARD: f64 = -1.0;
pub const GOAL_REWARD: f64 = 5.0;
pub const RED_REWARD: f64 = -10.0;

/// Navigation from a start cell to a goal cell across four rooms joined by
/// doors. Entering the goal ends the episode; entering a red cell costs
/// [`RED_REWARD`] instead of the step cost.
#[derive(Debug, Clone)]
pub struct FourRooms {
    layout: Layout,
    start: Pos,
    goal: Pos,
    red: BTreeSet<Pos>,
}

impl FourRooms {
    pub fn canonical() -> Self {
        Self::from_layout(Layout::parse(CANONICAL).expect("shipped layout parses"))
            .expect("shipped layout is valid")
    }

    pub fn from_layout(layout: Layout) -> Result<Self, LayoutError> {
        let start = layout.find_one(Cell::Start)?;
        let goal = layout.find_one(Cell::Goal)?;
        if !layout.reachable(start).contains(&goal) {
            return Err(LayoutError::Unreachable(
                "goal is not reachable from the start".into(),
            ));
        }
        let red = layout.find_all(Cell::Red).into_iter().collect();
        Ok(Self {
            layout,
            start,
            goal,
            red,
        })
    }

    pub fn start_pos(&self) -> Pos {
        self.start
    }

    pub fn goal_pos(&self) -> Pos {
        self.goal
    }

    pub fn red_cells(&self) -> &BTreeSet<Pos> {
        &self.red
    }

    fn cell_state((row, col): Pos) -> EnvState {
        EnvState::Cell { row, col }
    }
}

impl Environment for FourRooms {
    fn name(&self) -> &str {
        "fourrooms"
    }

    fn actions(&self) -> &[&'static str] {
        &ACTIONS
    }

    fn start(&self) -> EnvState {
        Self::cell_state(self.start)
    }

    fn transition(&self, s: &EnvState, a: ActionId) -> Outcome {
        let here = s.pos();
        let Some(next) = self.layout.neighbor(here, DIRECTIONS[a.0]) else {
            return Outcome {
                next: *s,
                reward: STEP_REWARD,
                done: false,
            };
        };
        let (reward, done) = if next == self.goal {
            (GOAL_REWARD, true)
        } else if self.red.contains(&next) {
            (RED_REWARD, false)
        } else {
            (STEP_REWARD, false)
        };
        Outcome {
            next: Self::cell_state(next),
            reward,
            done,
        }
    }

    fn is_terminal(&self, s: &EnvState) -> bool {
        s.pos() == self.goal
    }

    fn valuation(&self, s: &EnvState) -> Vec<(&'static str, Value)> {
        let (r, c) = s.pos();
        vec![("row", Value::Int(r as i64)), ("col", Value::Int(c as i64))]
    }

    fn bc_encoding(&self) -> (String, String) {
        let mut domain = format!(
            "% four rooms, generated from layout `{}` version {}\n\
             fluent row : 0..{}.\nfluent col : 0..{}.\n",
            self.layout.name,
            self.layout.version,
            self.layout.rows() - 1,
            self.layout.cols() - 1
        );
        for a in ACTIONS {
            domain.push_str(&format!("action {a}.\n"));
        }
        let moves: Vec<(&str, Direction)> = ACTIONS.into_iter().zip(DIRECTIONS).collect();
        domain.push_str(&grid_move_laws(&self.layout, &moves));
        let query = format!(
            "init row={}, col={}.\ngoal row={}, col={}.\n",
            self.start.0, self.start.1, self.goal.0, self.goal.1
        );
        (domain, query)
    }

    fn avoid(&self, s: &EnvState) -> bool {
        self.red.contains(&s.pos())
    }

    /// Stepping into a red cell.
    fn lure(&self, s: &EnvState, a: ActionId) -> bool {
        self.layout
            .neighbor(s.pos(), DIRECTIONS[a.0])
            .is_some_and(|n| self.red.contains(&n))
    }

    fn layout(&self) -> Option<&Layout> {
        Some(&self.layout)
    }

    fn reward_set(&self) -> &[f64] {
        &[STEP_REWARD, GOAL_REWARD, RED_REWARD]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action_lang::parse_domain;
    use crate::transition::TransitionSystem;
    use std::collections::{HashMap, VecDeque};

    fn bfs(env: &FourRooms, from: Pos) -> HashMap<Pos, usize> {
        let layout = env.layout().unwrap();
        let mut dist = HashMap::from([(from, 0)]);
        let mut q = VecDeque::from([from]);
        while let Some(p) = q.pop_front() {
            for d in DIRECTIONS {
                if let Some(n) = layout.neighbor(p, d) {
                    if !dist.contains_key(&n) {
                        dist.insert(n, dist[&p] + 1);
                        q.push_back(n);
                    }
                }
            }
        }
        dist
    }

    #[test]
    fn canonical_layout_shape() {
        let env = FourRooms::canonical();
        assert_eq!(env.start_pos(), (5, 2));
        assert_eq!(env.goal_pos(), (0, 9));
        let l = env.layout().unwrap();
        assert_eq!((l.rows(), l.cols()), (10, 10));
    }

    #[test]
    fn rooms_are_joined_only_by_four_doors() {
        let env = FourRooms::canonical();
        let l = env.layout().unwrap();
        let room = |(r, c): Pos| (r < 4) as u8 * 2 + (c < 4) as u8;
        let doors: Vec<Pos> = l
            .positions()
            .filter(|&p| l.is_open(p) && (p.0 == 4 || p.1 == 4))
            .collect();
        assert_eq!(doors, vec![(2, 4), (4, 1), (4, 7), (7, 4)]);
        // without the doors, the four quadrants are disconnected from each other
        for p in l.positions().filter(|&p| l.is_open(p) && !doors.contains(&p)) {
            for d in DIRECTIONS {
                if let Some(n) = l.neighbor(p, d) {
                    if !doors.contains(&n) {
                        assert_eq!(room(p), room(n), "{p:?} -> {n:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn safe_shortest_path_length_and_red_clearance() {
        let env = FourRooms::canonical();
        let from_start = bfs(&env, env.start_pos());
        let from_goal = bfs(&env, env.goal_pos());
        let len = from_start[&env.goal_pos()];
        assert_eq!(len, 14);
        // no red cell lies on or next to any shortest path
        let layout = env.layout().unwrap();
        for (&p, &d) in &from_start {
            if d + from_goal[&p] != len {
                continue;
            }
            assert!(!env.red_cells().contains(&p));
            for dir in DIRECTIONS {
                if let Some(n) = layout.neighbor(p, dir) {
                    assert!(!env.red_cells().contains(&n), "red {n:?} beside path cell {p:?}");
                }
            }
        }
    }

    #[test]
    fn rewards() {
        let env = FourRooms::canonical();
        let right = ActionId(3);
        let up = ActionId(0);
        let into_goal = env.transition(&EnvState::Cell { row: 0, col: 8 }, right);
        assert_eq!((into_goal.reward, into_goal.done), (5.0, true));
        let into_red = env.transition(&EnvState::Cell { row: 0, col: 0 }, right);
        assert_eq!((into_red.reward, into_red.done), (-10.0, false));
        assert_eq!(into_red.next, EnvState::Cell { row: 0, col: 1 });
        let blocked = env.transition(&EnvState::Cell { row: 0, col: 0 }, up);
        assert_eq!(blocked.next, EnvState::Cell { row: 0, col: 0 });
        assert_eq!(blocked.reward, -1.0);
        assert!(env.lure(&EnvState::Cell { row: 0, col: 0 }, right));
        assert!(!env.lure(&EnvState::Cell { row: 0, col: 0 }, up));
    }

    #[test]
    fn encoding_validates_and_blocks_walls() {
        let env = FourRooms::canonical();
        let (domain, _) = env.bc_encoding();
        let d = parse_domain(&domain).unwrap();
        assert!(crate::action_lang::validate(&d).is_empty());
        let ts = TransitionSystem::ground(&d).unwrap();
        // into the wall at (5,4) from (5,3)
        let s = ts
            .state_from_valuation(&env.valuation(&EnvState::Cell { row: 5, col: 3 }))
            .unwrap();
        assert!(ts.successor(&s, ActionId(3)).next().is_none());
    }
}
