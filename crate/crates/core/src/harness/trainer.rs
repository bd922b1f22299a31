//! One learner interacting with one environment, stepped explicitly so the
//! same code drives batch experiments and live sessions.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AgentKind, ExperimentConfig, HarnessError};
use crate::action_lang::{parse_domain, parse_query};
use crate::envs::{EnvState, Environment};
use crate::feedback::{FeedbackModel, FeedbackValue, Scenario, ScenarioOracle};
use crate::planner::{solve_with_policy, Plan, PlannerConfig, Problem};
use crate::rl::{sample_action, Actor, AdvantageSignal, Critic, StepSample};
use crate::transition::{ActionId, StateId, TransitionSystem};

/// Stream id of the feedback-noise generator; actions use the default stream.
const FEEDBACK_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    #[serde(rename = "return")]
    pub ret: f64,
    pub steps: usize,
    /// Action count of the executed plan; planner agents only.
    pub plan_length: Option<usize>,
    pub feedback_count: usize,
    /// The planner found no plan within its horizon; nothing was executed.
    pub no_plan: bool,
}

/// An executed step whose policy update has not been applied yet.
#[derive(Debug, Clone, PartialEq)]
pub struct PendingStep {
    /// Index of the step within the trainer's lifetime, starting at 0.
    pub index: u64,
    pub sample: StepSample,
    pub from: EnvState,
    pub to: EnvState,
    pub action: ActionId,
    pub reward: f64,
    /// TD error of the step; for Q-learning, the unshaped one.
    pub delta: f64,
}

#[derive(Debug, Clone, Default)]
struct EpisodeState {
    index: usize,
    env_state: Option<EnvState>,
    queue: VecDeque<(StateId, ActionId)>,
    plan_length: Option<usize>,
    no_plan: bool,
    done: bool,
    steps: usize,
    ret: f64,
    feedback_count: usize,
}

/// Tabular action values for the shaping baseline.
#[derive(Debug, Clone, Default)]
struct QTable {
    q: Vec<Vec<f64>>,
    n_actions: usize,
}

impl QTable {
    fn row(&mut self, s: StateId) -> &mut Vec<f64> {
        if self.q.len() <= s.index() {
            let n = self.n_actions;
            self.q.resize_with(s.index() + 1, || vec![0.0; n]);
        }
        &mut self.q[s.index()]
    }

    fn max(&mut self, s: StateId) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lowest-index action among the maximisers.
    fn greedy(&mut self, s: StateId) -> usize {
        let row = self.row(s);
        let mut best = 0;
        for (i, v) in row.iter().enumerate() {
            if *v > row[best] {
                best = i;
            }
        }
        best
    }
}

pub struct Trainer {
    env: Arc<dyn Environment>,
    ts: TransitionSystem,
    problem: Problem,
    agent: AgentKind,
    oracle: Option<ScenarioOracle>,
    model: FeedbackModel,
    planner: PlannerConfig,
    epsilon: f64,
    shaping_weight: f64,
    episode_cap: usize,
    actor: Actor,
    critic: Critic,
    q: QTable,
    rng: ChaCha8Rng,
    feedback_rng: ChaCha8Rng,
    episode: EpisodeState,
    episodes_started: usize,
    step_clock: u64,
}

impl Trainer {
    pub fn new(
        cfg: &ExperimentConfig,
        env: Arc<dyn Environment>,
        seed: u64,
    ) -> Result<Self, HarnessError> {
        cfg.validate()?;
        let (domain_text, query_text) = env.bc_encoding();
        let desc = parse_domain(&domain_text)?;
        let query = parse_query(&query_text, &desc)?;
        let ts = TransitionSystem::ground(&desc)?;
        let problem = Problem::from_query(&ts, &query)?;
        let oracle = match cfg.scenario {
            Scenario::None => None,
            s => Some(ScenarioOracle::build(
                s,
                env.as_ref(),
                &ts,
                cfg.hyper.feedback_magnitude,
            )?),
        };
        let n = env.actions().len();
        let mut feedback_rng = ChaCha8Rng::seed_from_u64(seed);
        feedback_rng.set_stream(FEEDBACK_STREAM);
        Ok(Self {
            ts,
            problem,
            agent: cfg.agent,
            oracle,
            model: cfg.noise.model(),
            planner: cfg.planner.clone(),
            epsilon: cfg.hyper.epsilon,
            shaping_weight: cfg.hyper.shaping_weight,
            episode_cap: cfg.hyper.episode_cap,
            actor: Actor::new(n, cfg.hyper.beta),
            critic: Critic::new(cfg.hyper.alpha, cfg.hyper.gamma),
            q: QTable {
                q: Vec::new(),
                n_actions: n,
            },
            rng: ChaCha8Rng::seed_from_u64(seed),
            feedback_rng,
            episode: EpisodeState {
                done: true,
                ..Default::default()
            },
            episodes_started: 0,
            step_clock: 0,
            env,
        })
    }

    pub fn env(&self) -> &dyn Environment {
        self.env.as_ref()
    }

    pub fn transition_system(&self) -> &TransitionSystem {
        &self.ts
    }

    pub fn actor(&self) -> &Actor {
        &self.actor
    }

    pub fn critic(&self) -> &Critic {
        &self.critic
    }

    pub fn agent(&self) -> AgentKind {
        self.agent
    }

    pub fn has_oracle(&self) -> bool {
        self.oracle.is_some()
    }

    /// Index of the current (or last) episode.
    pub fn episode_index(&self) -> usize {
        self.episode.index
    }

    pub fn current_state(&self) -> Option<EnvState> {
        self.episode.env_state
    }

    /// Action names still to be executed from the current plan.
    pub fn remaining_plan(&self) -> Vec<String> {
        self.episode
            .queue
            .iter()
            .map(|&(_, a)| self.env.actions()[a.0].to_string())
            .collect()
    }

    fn state_id(&self, s: &EnvState) -> Result<StateId, HarnessError> {
        Ok(self
            .ts
            .intern(&self.ts.state_from_valuation(&self.env.valuation(s))?))
    }

    /// Reset the environment and, for the planner agent, compute a plan with a
    /// snapshot of the current policy. Returns the plan, if any.
    pub fn begin_episode(&mut self) -> Result<Option<Plan>, HarnessError> {
        let start = self.env.start();
        self.episode = EpisodeState {
            index: self.episodes_started,
            env_state: Some(start),
            ..Default::default()
        };
        self.episodes_started += 1;
        if self.agent != AgentKind::Pacman {
            return Ok(None);
        }
        let snapshot = self.actor.clone();
        let plan = solve_with_policy(&self.problem, &self.ts, &snapshot, &self.planner, &mut self.rng)?;
        match &plan {
            Some(p) => {
                self.episode.queue = p.plan_actions().into();
                self.episode.plan_length = Some(self.episode.queue.len());
                self.episode.done = self.episode.queue.is_empty();
            }
            None => {
                self.episode.no_plan = true;
                self.episode.done = true;
            }
        }
        Ok(plan)
    }

    /// Execute the next action and update the critic. Returns `None` once the
    /// episode is over.
    pub fn step(&mut self) -> Result<Option<PendingStep>, HarnessError> {
        if self.episode.done {
            return Ok(None);
        }
        let from = self.episode.env_state.expect("episode begun");
        let s = self.state_id(&from)?;
        let (a, expected) = match self.agent {
            AgentKind::Pacman => {
                let (planned, a) = self.episode.queue.pop_front().expect("non-empty plan");
                if planned != s {
                    return Err(HarnessError::PlanDivergence {
                        episode: self.episode.index,
                        step: self.episode.steps,
                    });
                }
                (a, self.ts.successor_id(s, a).next())
            }
            AgentKind::AcFeedback => (ActionId(sample_action(&self.actor.policy_probs(s), &mut self.rng)), None),
            AgentKind::QShaping => {
                let a = if self.rng.gen::<f64>() < self.epsilon {
                    self.rng.gen_range(0..self.env.actions().len())
                } else {
                    self.q.greedy(s)
                };
                (ActionId(a), None)
            }
        };

        let out = self.env.transition(&from, a);
        let s_next = self.state_id(&out.next)?;
        if self.agent == AgentKind::Pacman && expected != Some(s_next) {
            return Err(HarnessError::PlanDivergence {
                episode: self.episode.index,
                step: self.episode.steps,
            });
        }
        let sample = StepSample {
            s,
            a,
            r: out.reward,
            s_next,
            done: out.done,
        };
        let delta = match self.agent {
            AgentKind::QShaping => {
                let bootstrap = if out.done { 0.0 } else { self.critic.gamma * self.q.max(s_next) };
                out.reward + bootstrap - self.q.row(s)[a.0]
            }
            _ => {
                let delta = self.critic.td_error(&sample).value;
                self.critic.update(s, delta);
                delta
            }
        };

        let ep = &mut self.episode;
        ep.env_state = Some(out.next);
        ep.steps += 1;
        ep.ret += out.reward;
        ep.done = out.done
            || match self.agent {
                AgentKind::Pacman => ep.queue.is_empty(),
                _ => ep.steps >= self.episode_cap,
            };
        let pending = PendingStep {
            index: self.step_clock,
            sample,
            from,
            to: out.next,
            action: a,
            reward: out.reward,
            delta,
        };
        self.step_clock += 1;
        Ok(Some(pending))
    }

    /// Simulated teacher's feedback on a step, after the noise model.
    pub fn oracle_feedback(&mut self, p: &PendingStep) -> Result<Option<FeedbackValue>, HarnessError> {
        let Some(oracle) = &self.oracle else {
            return Ok(None);
        };
        let f = oracle.feedback(p.sample.s, p.action)?;
        Ok(self.model.apply(f, &mut self.feedback_rng))
    }

    /// Apply the policy (or Q) update for a step, with feedback replacing the
    /// TD error when present.
    pub fn commit(&mut self, p: &PendingStep, feedback: Option<FeedbackValue>) {
        if feedback.is_some() {
            self.episode.feedback_count += 1;
        }
        let StepSample { s, a, .. } = p.sample;
        match self.agent {
            AgentKind::QShaping => {
                let shaped = feedback.map_or(0.0, |f| self.shaping_weight * f.value());
                let alpha = self.critic.alpha;
                self.q.row(s)[a.0] += alpha * (p.delta + shaped);
            }
            _ => {
                let signal = match feedback {
                    Some(f) => AdvantageSignal::human(f.value()),
                    None => AdvantageSignal::td(p.delta),
                };
                self.actor.update(s, a, signal);
            }
        }
    }

    pub fn episode_done(&self) -> bool {
        self.episode.done
    }

    pub fn episode_record(&self) -> EpisodeRecord {
        EpisodeRecord {
            episode: self.episode.index,
            ret: self.episode.ret,
            steps: self.episode.steps,
            plan_length: self.episode.plan_length,
            feedback_count: self.episode.feedback_count,
            no_plan: self.episode.no_plan,
        }
    }

    /// Run a whole episode with oracle feedback.
    pub fn run_episode(&mut self) -> Result<EpisodeRecord, HarnessError> {
        self.begin_episode()?;
        while let Some(p) = self.step()? {
            let f = self.oracle_feedback(&p)?;
            self.commit(&p, f);
        }
        Ok(self.episode_record())
    }
}
