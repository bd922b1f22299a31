//! Tabular softmax actor and tabular critic.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planner::PolicyEvaluator;
use crate::transition::{ActionId, StateId};

pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_BETA: f64 = 0.05;
pub const DEFAULT_GAMMA: f64 = 0.95;

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalSource {
    Td,
    Human,
}

/// The quantity that scales a policy-gradient step: the TD error, or a human
/// feedback value used in its place.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvantageSignal {
    pub value: f64,
    pub source: SignalSource,
}

impl AdvantageSignal {
    pub fn td(value: f64) -> Self {
        Self {
            value,
            source: SignalSource::Td,
        }
    }

    pub fn human(value: f64) -> Self {
        Self {
            value,
            source: SignalSource::Human,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSample {
    pub s: StateId,
    pub a: ActionId,
    pub r: f64,
    pub s_next: StateId,
    pub done: bool,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint version {found} is not supported (expected {CHECKPOINT_VERSION})")]
    Version { found: u32 },
    #[error("checkpoint action count {found} does not match {expected}")]
    Shape { found: usize, expected: usize },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Softmax policy over a table of preferences θ[s, a]. Rows for states not yet
/// seen are implicitly zero, i.e. uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Actor {
    theta: Vec<Vec<f64>>,
    n_actions: usize,
    pub beta: f64,
}

impl Actor {
    pub fn new(n_actions: usize, beta: f64) -> Self {
        Self {
            theta: Vec::new(),
            n_actions,
            beta,
        }
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn row(&self, s: StateId) -> Option<&[f64]> {
        self.theta.get(s.index()).map(Vec::as_slice)
    }

    fn row_mut(&mut self, s: StateId) -> &mut Vec<f64> {
        let n = self.n_actions;
        if self.theta.len() <= s.index() {
            self.theta.resize_with(s.index() + 1, || vec![0.0; n]);
        }
        &mut self.theta[s.index()]
    }

    pub fn set_row(&mut self, s: StateId, row: &[f64]) {
        assert_eq!(row.len(), self.n_actions, "row length");
        self.row_mut(s).copy_from_slice(row);
    }

    pub fn policy_probs(&self, s: StateId) -> Vec<f64> {
        match self.row(s) {
            Some(row) => softmax(row),
            None => vec![1.0 / self.n_actions as f64; self.n_actions],
        }
    }

    /// θ[s, b] += β · signal · (1{a=b} − π(b|s)) for every action b.
    pub fn update(&mut self, s: StateId, a: ActionId, signal: AdvantageSignal) {
        let probs = self.policy_probs(s);
        let step = self.beta * signal.value;
        let row = self.row_mut(s);
        for (b, (theta, p)) in row.iter_mut().zip(probs).enumerate() {
            let indicator = if b == a.0 { 1.0 } else { 0.0 };
            *theta += step * (indicator - p);
        }
    }

    pub fn to_checkpoint(&self) -> String {
        serde_json::to_string(&Checkpoint {
            version: CHECKPOINT_VERSION,
            n_actions: self.n_actions,
            rate: self.beta,
            table: self.theta.clone(),
        })
        .expect("serialising plain numbers")
    }

    pub fn from_checkpoint(text: &str) -> Result<Self, CheckpointError> {
        let c: Checkpoint<Vec<Vec<f64>>> = serde_json::from_str(text)?;
        c.check()?;
        if let Some(bad) = c.table.iter().find(|r| r.len() != c.n_actions) {
            return Err(CheckpointError::Shape {
                found: bad.len(),
                expected: c.n_actions,
            });
        }
        Ok(Self {
            theta: c.table,
            n_actions: c.n_actions,
            beta: c.rate,
        })
    }
}

impl PolicyEvaluator for Actor {
    fn probabilities(&self, s: StateId) -> Vec<f64> {
        self.policy_probs(s)
    }
}

/// Max-shifted softmax.
pub fn softmax(row: &[f64]) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Tabular state-value function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Critic {
    x: Vec<f64>,
    pub alpha: f64,
    pub gamma: f64,
}

impl Critic {
    pub fn new(alpha: f64, gamma: f64) -> Self {
        Self {
            x: Vec::new(),
            alpha,
            gamma,
        }
    }

    pub fn value(&self, s: StateId) -> f64 {
        self.x.get(s.index()).copied().unwrap_or(0.0)
    }

    pub fn set_value(&mut self, s: StateId, v: f64) {
        if self.x.len() <= s.index() {
            self.x.resize(s.index() + 1, 0.0);
        }
        self.x[s.index()] = v;
    }

    /// δ = r + γ·V(s') − V(s), with the bootstrap dropped on terminal steps.
    pub fn td_error(&self, step: &StepSample) -> AdvantageSignal {
        let bootstrap = if step.done {
            0.0
        } else {
            self.gamma * self.value(step.s_next)
        };
        AdvantageSignal::td(step.r + bootstrap - self.value(step.s))
    }

    /// x[s] += α·δ.
    pub fn update(&mut self, s: StateId, delta: f64) {
        let v = self.value(s) + self.alpha * delta;
        self.set_value(s, v);
    }

    pub fn to_checkpoint(&self) -> String {
        serde_json::to_string(&Checkpoint {
            version: CHECKPOINT_VERSION,
            n_actions: 1,
            rate: self.alpha,
            table: (self.x.clone(), self.gamma),
        })
        .expect("serialising plain numbers")
    }

    pub fn from_checkpoint(text: &str) -> Result<Self, CheckpointError> {
        let c: Checkpoint<(Vec<f64>, f64)> = serde_json::from_str(text)?;
        c.check()?;
        Ok(Self {
            x: c.table.0,
            alpha: c.rate,
            gamma: c.table.1,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint<T> {
    version: u32,
    n_actions: usize,
    rate: f64,
    table: T,
}

impl<T> Checkpoint<T> {
    fn check(&self) -> Result<(), CheckpointError> {
        if self.version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version {
                found: self.version,
            });
        }
        Ok(())
    }
}

/// Draw an index distributed according to `probs`.
///
/// Panics if `probs` has no positive entry.
pub fn sample_action<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    WeightedIndex::new(probs)
        .expect("valid probability vector")
        .sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const S: StateId = StateId(0);
    const T: StateId = StateId(1);

    #[test]
    fn uniform_at_init() {
        let actor = Actor::new(4, DEFAULT_BETA);
        assert_eq!(actor.policy_probs(S), vec![0.25; 4]);
    }

    #[test]
    fn softmax_closed_form() {
        let p = softmax(&[2f64.ln(), 0.0]);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn td_error_examples() {
        let mut c = Critic::new(0.1, 0.9);
        let step = StepSample {
            s: S,
            a: ActionId(0),
            r: 1.0,
            s_next: T,
            done: false,
        };
        assert_eq!(c.td_error(&step).value, 1.0);

        c.set_value(S, 2.0);
        c.set_value(T, 2.0);
        let step = StepSample { r: 0.0, ..step };
        assert!((c.td_error(&step).value - (-0.2)).abs() < 1e-12);

        c.set_value(T, 100.0);
        let step = StepSample {
            r: 5.0,
            done: true,
            ..step
        };
        assert_eq!(c.td_error(&step).value, 5.0 - 2.0);
    }

    #[test]
    fn value_update_examples() {
        let mut c = Critic::new(0.1, 0.9);
        c.update(S, 1.0);
        assert!((c.value(S) - 0.1).abs() < 1e-15);
        let before = c.clone();
        c.update(S, 0.0);
        assert_eq!(c, before);
        assert_eq!(c.value(T), 0.0);
    }

    #[test]
    fn sequential_value_updates_sum() {
        let mut a = Critic::new(0.1, 0.9);
        a.update(S, 0.7);
        a.update(S, -0.3);
        let mut b = Critic::new(0.1, 0.9);
        b.update(S, 0.4);
        assert!((a.value(S) - b.value(S)).abs() < 1e-15);
    }

    #[test]
    fn policy_update_at_uniform() {
        let mut actor = Actor::new(2, 1.0);
        actor.update(S, ActionId(0), AdvantageSignal::td(1.0));
        let row = actor.row(S).unwrap();
        assert!((row[0] - 0.5).abs() < 1e-15);
        assert!((row[1] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_signal_is_a_no_op() {
        let mut actor = Actor::new(3, 0.5);
        actor.set_row(S, &[0.3, -1.0, 2.0]);
        let before = actor.clone();
        actor.update(S, ActionId(1), AdvantageSignal::td(0.0));
        assert_eq!(actor, before);
    }

    #[test]
    fn update_leaves_other_rows() {
        let mut actor = Actor::new(2, 0.5);
        actor.set_row(T, &[1.0, 2.0]);
        actor.update(S, ActionId(1), AdvantageSignal::td(1.0));
        assert_eq!(actor.row(T).unwrap(), &[1.0, 2.0]);
    }

    #[test]
    fn deterministic_distribution_always_picks_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            assert_eq!(sample_action(&[1.0, 0.0, 0.0], &mut rng), 0);
        }
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0usize; 4];
        let n = 40_000;
        for _ in 0..n {
            counts[sample_action(&[0.25; 4], &mut rng)] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| sample_action(&[0.1, 0.2, 0.7], &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
    }

    #[test]
    fn checkpoints_round_trip() {
        let mut actor = Actor::new(3, 0.05);
        actor.set_row(StateId(2), &[0.5, -0.25, 1.0]);
        assert_eq!(Actor::from_checkpoint(&actor.to_checkpoint()).unwrap(), actor);

        let mut critic = Critic::new(0.1, 0.95);
        critic.set_value(StateId(4), -3.5);
        assert_eq!(Critic::from_checkpoint(&critic.to_checkpoint()).unwrap(), critic);

        let bad = actor.to_checkpoint().replace("\"version\":1", "\"version\":9");
        assert!(matches!(
            Actor::from_checkpoint(&bad),
            Err(CheckpointError::Version { found: 9 })
        ));
    }

    fn log_pi(row: &[f64], a: usize) -> f64 {
        softmax(row)[a].ln()
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_differences(
            row in proptest::collection::vec(-5.0f64..5.0, 2..6),
            a_seed in 0usize..100,
        ) {
            let n = row.len();
            let a = a_seed % n;
            // analytic step with β·signal = 1 equals ∇ log π
            let mut actor = Actor::new(n, 1.0);
            actor.set_row(S, &row);
            actor.update(S, ActionId(a), AdvantageSignal::td(1.0));
            let updated = actor.row(S).unwrap();
            let h = 1e-5;
            for b in 0..n {
                let mut up = row.clone();
                let mut down = row.clone();
                up[b] += h;
                down[b] -= h;
                let numeric = (log_pi(&up, a) - log_pi(&down, a)) / (2.0 * h);
                prop_assert!((updated[b] - row[b] - numeric).abs() < 1e-6);
            }
        }

        #[test]
        fn softmax_is_normalised_for_large_preferences(
            row in proptest::collection::vec(-500.0f64..500.0, 1..8),
        ) {
            let p = softmax(&row);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|x| x.is_finite() && *x >= 0.0));
        }

        #[test]
        fn softmax_shift_invariance(
            row in proptest::collection::vec(-10.0f64..10.0, 1..6),
            c in -50.0f64..50.0,
        ) {
            let shifted: Vec<f64> = row.iter().map(|x| x + c).collect();
            for (p, q) in softmax(&row).iter().zip(softmax(&shifted)) {
                prop_assert!((p - q).abs() < 1e-12);
            }
        }

        #[test]
        fn human_and_td_signals_update_identically(v in -3.0f64..3.0, a in 0usize..3) {
            let mut x = Actor::new(3, 0.1);
            let mut y = x.clone();
            x.update(S, ActionId(a), AdvantageSignal::td(v));
            y.update(S, ActionId(a), AdvantageSignal::human(v));
            prop_assert_eq!(x, y);
        }

        #[test]
        fn positive_signal_raises_probability(
            row in proptest::collection::vec(-3.0f64..3.0, 2..5),
            a_seed in 0usize..100,
            v in 0.01f64..2.0,
        ) {
            let a = a_seed % row.len();
            let mut actor = Actor::new(row.len(), 0.1);
            actor.set_row(S, &row);
            let before = actor.policy_probs(S)[a];
            actor.update(S, ActionId(a), AdvantageSignal::td(v));
            prop_assert!(actor.policy_probs(S)[a] > before);
        }
    }
}
