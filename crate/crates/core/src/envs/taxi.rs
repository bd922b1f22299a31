use std::collections::BTreeSet;

use super::layout::{Cell, Direction, Layout, LayoutError, Pos};
use super::{grid_move_laws, EnvState, Environment, Outcome, Passenger};
use crate::action_lang::Value;
use crate::transition::ActionId;

const CANONICAL: &str = include_str!("../../layouts/taxi.txt");

const ACTIONS: [&str; 6] = ["north", "south", "east", "west", "pickup", "dropoff"];
const MOVES: [(&str, Direction); 4] = [
    ("north", Direction::North),
    ("south", Direction::South),
    ("east", Direction::East),
    ("west", Direction::West),
];
const PICKUP: usize = 4;
const DROPOFF: usize = 5;

pub const STEP_REWARD: f64 = -1.0;
pub const DROPOFF_REWARD: f64 = 20.0;
pub const IMPROPER_REWARD: f64 = -10.0;

/// Single-passenger taxi: drive to the passenger, pick up, drive to the
/// destination, drop off.
#[derive(Debug, Clone)]
pub struct Taxi {
    layout: Layout,
    start: Pos,
    passenger: Pos,
    destination: Pos,
    congested: BTreeSet<Pos>,
}

impl Taxi {
    pub fn canonical() -> Self {
        Self::from_layout(Layout::parse(CANONICAL).expect("shipped layout parses"))
            .expect("shipped layout is valid")
    }

    pub fn from_layout(layout: Layout) -> Result<Self, LayoutError> {
        let start = layout.find_one(Cell::Start)?;
        let passenger = layout.find_one(Cell::Passenger)?;
        let destination = layout.find_one(Cell::Destination)?;
        let reach = layout.reachable(start);
        if !reach.contains(&passenger) || !reach.contains(&destination) {
            return Err(LayoutError::Unreachable(
                "passenger and destination must be reachable from the start".into(),
            ));
        }
        let congested = layout.find_all(Cell::Congested).into_iter().collect();
        Ok(Self {
            layout,
            start,
            passenger,
            destination,
            congested,
        })
    }

    pub fn passenger_pos(&self) -> Pos {
        self.passenger
    }

    pub fn destination_pos(&self) -> Pos {
        self.destination
    }

    pub fn congested_cells(&self) -> &BTreeSet<Pos> {
        &self.congested
    }

    fn unpack(s: &EnvState) -> (Pos, Passenger) {
        match *s {
            EnvState::Taxi {
                row,
                col,
                passenger,
            } => ((row, col), passenger),
            EnvState::Cell { .. } => panic!("taxi given a plain cell state"),
        }
    }
}

impl Environment for Taxi {
    fn name(&self) -> &str {
        "taxi"
    }

    fn actions(&self) -> &[&'static str] {
        &ACTIONS
    }

    fn start(&self) -> EnvState {
        EnvState::Taxi {
            row: self.start.0,
            col: self.start.1,
            passenger: Passenger::Waiting,
        }
    }

    fn transition(&self, s: &EnvState, a: ActionId) -> Outcome {
        let (pos, status) = Self::unpack(s);
        let stay = |reward| Outcome {
            next: *s,
            reward,
            done: false,
        };
        match a.0 {
            PICKUP if pos == self.passenger && status == Passenger::Waiting => Outcome {
                next: EnvState::Taxi {
                    row: pos.0,
                    col: pos.1,
                    passenger: Passenger::InTaxi,
                },
                reward: STEP_REWARD,
                done: false,
            },
            DROPOFF if pos == self.destination && status == Passenger::InTaxi => Outcome {
                next: EnvState::Taxi {
                    row: pos.0,
                    col: pos.1,
                    passenger: Passenger::Delivered,
                },
                reward: DROPOFF_REWARD,
                done: true,
            },
            PICKUP | DROPOFF => stay(IMPROPER_REWARD),
            m => match self.layout.neighbor(pos, MOVES[m].1) {
                Some((row, col)) => Outcome {
                    next: EnvState::Taxi {
                        row,
                        col,
                        passenger: status,
                    },
                    reward: STEP_REWARD,
                    done: false,
                },
                None => stay(STEP_REWARD),
            },
        }
    }

    fn is_terminal(&self, s: &EnvState) -> bool {
        Self::unpack(s).1 == Passenger::Delivered
    }

    fn valuation(&self, s: &EnvState) -> Vec<(&'static str, Value)> {
        let ((r, c), p) = Self::unpack(s);
        vec![
            ("row", Value::Int(r as i64)),
            ("col", Value::Int(c as i64)),
            ("passenger", Value::sym(p.symbol())),
        ]
    }

    fn bc_encoding(&self) -> (String, String) {
        let mut domain = format!(
            "% taxi, generated from layout `{}` version {}\n\
             fluent row : 0..{}.\nfluent col : 0..{}.\n\
             fluent passenger : {{waiting, intaxi, delivered}}.\n",
            self.layout.name,
            self.layout.version,
            self.layout.rows() - 1,
            self.layout.cols() - 1
        );
        for a in ACTIONS {
            domain.push_str(&format!("action {a}.\n"));
        }
        domain.push_str(&grid_move_laws(&self.layout, &MOVES));
        let (pr, pc) = self.passenger;
        let (dr, dc) = self.destination;
        domain.push_str(&format!(
            "% the taxi must be where the passenger is\n\
             pickup causes passenger=intaxi if row={pr}, col={pc}, passenger=waiting.\n\
             dropoff causes passenger=delivered if row={dr}, col={dc}, passenger=intaxi.\n"
        ));
        let query = format!(
            "init row={}, col={}, passenger=waiting.\ngoal passenger=delivered.\n",
            self.start.0, self.start.1
        );
        (domain, query)
    }

    fn avoid(&self, s: &EnvState) -> bool {
        self.congested.contains(&s.pos())
    }

    /// Picking up somewhere other than the passenger's cell while they wait.
    fn lure(&self, s: &EnvState, a: ActionId) -> bool {
        let (pos, status) = Self::unpack(s);
        a.0 == PICKUP && status == Passenger::Waiting && pos != self.passenger
    }

    fn layout(&self) -> Option<&Layout> {
        Some(&self.layout)
    }

    fn reward_set(&self) -> &[f64] {
        &[STEP_REWARD, DROPOFF_REWARD, IMPROPER_REWARD]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action_lang::parse_domain;
    use crate::transition::TransitionSystem;

    fn at(row: usize, col: usize, passenger: Passenger) -> EnvState {
        EnvState::Taxi {
            row,
            col,
            passenger,
        }
    }

    #[test]
    fn pickup_and_dropoff_rewards() {
        let env = Taxi::canonical();
        let (pr, pc) = env.passenger_pos();
        let (dr, dc) = env.destination_pos();
        let pickup = ActionId(PICKUP);
        let dropoff = ActionId(DROPOFF);

        let ok = env.transition(&at(pr, pc, Passenger::Waiting), pickup);
        assert_eq!(ok.next, at(pr, pc, Passenger::InTaxi));
        assert_eq!(ok.reward, -1.0);

        let empty = env.transition(&at(2, 2, Passenger::Waiting), pickup);
        assert_eq!((empty.reward, empty.next), (-10.0, at(2, 2, Passenger::Waiting)));

        let twice = env.transition(&at(pr, pc, Passenger::InTaxi), pickup);
        assert_eq!(twice.reward, -10.0);

        let done = env.transition(&at(dr, dc, Passenger::InTaxi), dropoff);
        assert_eq!((done.reward, done.done), (20.0, true));

        let early = env.transition(&at(pr, pc, Passenger::InTaxi), dropoff);
        assert_eq!((early.reward, early.done), (-10.0, false));
    }

    #[test]
    fn walls_block_sideways_moves() {
        let env = Taxi::canonical();
        // wall between (0,1) and (0,2)
        let east = env.transition(&at(0, 1, Passenger::Waiting), ActionId(2));
        assert_eq!(east.next, at(0, 1, Passenger::Waiting));
        assert_eq!(east.reward, -1.0);
    }

    #[test]
    fn encoding_requires_taxi_at_passenger_for_pickup() {
        let env = Taxi::canonical();
        let (domain, _) = env.bc_encoding();
        let d = parse_domain(&domain).unwrap();
        assert!(crate::action_lang::validate(&d).is_empty());
        let ts = TransitionSystem::ground(&d).unwrap();
        let pickup = ts.action_id("pickup").unwrap();
        let fired: Vec<_> = ts.laws().iter().filter(|l| l.action == Some(pickup)).collect();
        assert_eq!(fired.len(), 1);
        let s = ts
            .state_from_valuation(&env.valuation(&at(2, 2, Passenger::Waiting)))
            .unwrap();
        assert!(ts.successor(&s, pickup).next().is_none());
    }

    #[test]
    fn lure_is_pickup_away_from_passenger() {
        let env = Taxi::canonical();
        assert!(env.lure(&at(2, 2, Passenger::Waiting), ActionId(PICKUP)));
        assert!(!env.lure(&at(0, 0, Passenger::Waiting), ActionId(PICKUP)));
        assert!(!env.lure(&at(2, 2, Passenger::InTaxi), ActionId(PICKUP)));
        assert!(env.avoid(&at(2, 3, Passenger::InTaxi)));
    }
}
