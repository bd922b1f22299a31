//! A live session: one learner thread, its feedback channel and its event
//! stream.

use std::fs::File;
use std::path::Path;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use pacman_core::envs::DomainKind;
use pacman_core::feedback::{FeedbackValue, LiveChannel, NoiseRegime, Origin, Rejection, Scenario, Sign};
use pacman_core::harness::{AgentKind, ExperimentConfig, Trainer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hub::Hub;
use crate::protocol::{AppliedFeedback, Command, Event, Status, StepEvent};

pub const DEFAULT_GRACE: Duration = Duration::from_millis(300);
pub const DEFAULT_SPEED: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum SessionError {
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
    #[error("session has finished")]
    Finished,
    #[error("speed must be a positive number of steps per second")]
    BadSpeed,
}

/// Body of a session-creation request. Everything but the domain has a
/// default.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionRequest {
    pub domain: Option<String>,
    pub agent: Option<String>,
    pub scenario: Option<String>,
    pub noise: Option<String>,
    pub seed: u64,
    pub episodes: Option<usize>,
    pub speed: Option<f64>,
    /// Pause after each step before its update is applied. Defaults to 300 ms
    /// without an oracle and 0 with one.
    pub grace_ms: Option<u64>,
    /// `key = value` lines, as in an experiment config file.
    pub overrides: Option<String>,
}

/// A validated session request.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionConfig {
    pub experiment: ExperimentConfig,
    pub seed: u64,
    pub speed: f64,
    #[serde(rename = "grace_ms", serialize_with = "as_millis")]
    pub grace: Duration,
}

fn as_millis<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u64(d.as_millis() as u64)
}

fn parse<T: std::str::FromStr<Err = String>>(value: Option<&str>, default: T) -> Result<T, SessionError> {
    value.map_or(Ok(default), |v| v.parse().map_err(SessionError::InvalidConfig))
}

impl SessionRequest {
    pub fn validate(&self) -> Result<SessionConfig, SessionError> {
        let domain = self
            .domain
            .as_deref()
            .ok_or_else(|| SessionError::InvalidConfig("`domain` is required".into()))?;
        let mut experiment = ExperimentConfig {
            domain: domain.parse::<DomainKind>().map_err(SessionError::InvalidConfig)?,
            agent: parse(self.agent.as_deref(), AgentKind::Pacman)?,
            scenario: parse(self.scenario.as_deref(), Scenario::None)?,
            noise: parse(self.noise.as_deref(), NoiseRegime::Ideal)?,
            seeds: vec![self.seed],
            ..Default::default()
        };
        if let Some(text) = &self.overrides {
            experiment
                .apply_overrides(text)
                .map_err(|e| SessionError::InvalidConfig(e.to_string()))?;
            experiment.seeds = vec![self.seed];
        }
        if let Some(n) = self.episodes {
            experiment.episodes = n;
        }
        if experiment.agent == AgentKind::QShaping {
            return Err(SessionError::InvalidConfig(
                "live sessions run pacman or ac_feedback".into(),
            ));
        }
        experiment
            .validate()
            .map_err(|e| SessionError::InvalidConfig(e.to_string()))?;
        let speed = self.speed.unwrap_or(DEFAULT_SPEED);
        if !(speed > 0.0 && speed.is_finite()) {
            return Err(SessionError::BadSpeed);
        }
        let grace = match self.grace_ms {
            Some(ms) => Duration::from_millis(ms),
            None if experiment.scenario == Scenario::None => DEFAULT_GRACE,
            None => Duration::ZERO,
        };
        Ok(SessionConfig {
            experiment,
            seed: self.seed,
            speed,
            grace,
        })
    }
}

#[derive(Debug)]
struct ControlState {
    status: Status,
    speed: f64,
    stop: bool,
}

/// Pause/resume/stop requests shared between handlers and the learner.
#[derive(Debug)]
struct Control {
    state: Mutex<ControlState>,
    wake: Condvar,
}

impl Control {
    /// Block while paused. Returns false once a stop has been requested.
    fn wait_runnable(&self) -> bool {
        let st = self.state.lock().unwrap();
        let st = self
            .wake
            .wait_while(st, |s| s.status == Status::Paused && !s.stop)
            .unwrap();
        !st.stop
    }

    /// Sleep for `d`, waking early on stop.
    fn sleep(&self, d: Duration) {
        if d.is_zero() {
            return;
        }
        let st = self.state.lock().unwrap();
        let _ = self.wake.wait_timeout_while(st, d, |s| !s.stop).unwrap();
    }

    fn speed(&self) -> f64 {
        self.state.lock().unwrap().speed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionStatus {
    pub id: String,
    pub status: Status,
    pub speed: f64,
    /// Steps executed so far.
    pub steps: u64,
    /// Episodes finished so far.
    pub episodes: usize,
    pub next_seq: u64,
    pub config: SessionConfig,
}

pub struct Session {
    pub id: String,
    config: SessionConfig,
    control: Arc<Control>,
    channel: Arc<LiveChannel>,
    hub: Arc<Hub>,
    steps: Arc<AtomicU64>,
    episodes: Arc<AtomicUsize>,
    learner: Mutex<Option<JoinHandle<()>>>,
}

impl Session {
    /// Build the learner and start its thread, paused.
    pub fn start(
        id: String,
        config: SessionConfig,
        replay_capacity: usize,
        log_dir: Option<&Path>,
    ) -> Result<Arc<Self>, SessionError> {
        let env = config.experiment.domain.build();
        let trainer = Trainer::new(&config.experiment, env, config.seed)
            .map_err(|e| SessionError::InvalidConfig(e.to_string()))?;
        let log = match log_dir {
            Some(dir) => Some(
                File::create(dir.join(format!("{id}.jsonl")))
                    .map_err(|e| SessionError::InvalidConfig(format!("event log: {e}")))?,
            ),
            None => None,
        };
        let session = Arc::new(Self {
            id,
            control: Arc::new(Control {
                state: Mutex::new(ControlState {
                    status: Status::Paused,
                    speed: config.speed,
                    stop: false,
                }),
                wake: Condvar::new(),
            }),
            channel: Arc::new(LiveChannel::default()),
            hub: Arc::new(Hub::new(replay_capacity, log)),
            steps: Arc::new(AtomicU64::new(0)),
            episodes: Arc::new(AtomicUsize::new(0)),
            learner: Mutex::new(None),
            config,
        });
        session.hub.publish(Event::Status {
            status: Status::Paused,
        });
        let learner = Learner {
            trainer,
            control: session.control.clone(),
            channel: session.channel.clone(),
            hub: session.hub.clone(),
            steps: session.steps.clone(),
            episodes: session.episodes.clone(),
            grace: session.config.grace,
            max_episodes: session.config.experiment.episodes,
        };
        let handle = thread::Builder::new()
            .name(format!("learner-{}", session.id))
            .spawn(move || learner.run())
            .expect("spawning a learner thread");
        *session.learner.lock().unwrap() = Some(handle);
        Ok(session)
    }

    pub fn hub(&self) -> &Hub {
        &self.hub
    }

    pub fn status(&self) -> SessionStatus {
        let st = self.control.state.lock().unwrap();
        SessionStatus {
            id: self.id.clone(),
            status: st.status,
            speed: st.speed,
            steps: self.steps.load(Ordering::SeqCst),
            episodes: self.episodes.load(Ordering::SeqCst),
            next_seq: self.hub.next_seq(),
            config: self.config.clone(),
        }
    }

    pub fn control(&self, cmd: Command, value: Option<f64>) -> Result<(Status, f64), SessionError> {
        let mut st = self.control.state.lock().unwrap();
        if st.status == Status::Finished || st.stop {
            return Err(SessionError::Finished);
        }
        let changed = match cmd {
            Command::Pause => std::mem::replace(&mut st.status, Status::Paused) != Status::Paused,
            Command::Resume => std::mem::replace(&mut st.status, Status::Running) != Status::Running,
            Command::SetSpeed => {
                let v = value.ok_or(SessionError::BadSpeed)?;
                if !(v > 0.0 && v.is_finite()) {
                    return Err(SessionError::BadSpeed);
                }
                st.speed = v;
                false
            }
            Command::Stop => {
                st.stop = true;
                false
            }
        };
        let reply = (st.status, st.speed);
        let status = st.status;
        drop(st);
        self.control.wake.notify_all();
        if changed {
            self.hub.publish(Event::Status { status });
        }
        if cmd == Command::Stop {
            self.join();
            return Ok((Status::Finished, reply.1));
        }
        Ok(reply)
    }

    pub fn submit_feedback(&self, step: u64, sign: Sign) -> Result<(), Rejection> {
        let magnitude = self.config.experiment.hyper.feedback_magnitude;
        self.channel.submit(step, FeedbackValue::new(sign, magnitude))
    }

    /// Wait for the learner thread to exit.
    pub fn join(&self) {
        let handle = self.learner.lock().unwrap().take();
        if let Some(h) = handle {
            let _ = h.join();
        }
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        self.control.state.lock().unwrap().stop = true;
        self.control.wake.notify_all();
    }
}

struct Learner {
    trainer: Trainer,
    control: Arc<Control>,
    channel: Arc<LiveChannel>,
    hub: Arc<Hub>,
    steps: Arc<AtomicU64>,
    episodes: Arc<AtomicUsize>,
    grace: Duration,
    max_episodes: usize,
}

impl Learner {
    fn run(mut self) {
        let mut returns: Vec<f64> = Vec::new();
        let mut applied: Option<AppliedFeedback> = None;
        let mut in_episode = false;
        while self.control.wait_runnable() {
            if !in_episode {
                if returns.len() >= self.max_episodes {
                    break;
                }
                if self.trainer.begin_episode().is_err() {
                    break;
                }
                in_episode = true;
            }
            let started = Instant::now();
            match self.trainer.step() {
                Ok(Some(p)) => {
                    self.channel.executed(p.index);
                    let action = self.trainer.env().actions()[p.action.0].to_string();
                    self.hub.publish(Event::Step(StepEvent {
                        step: p.index,
                        episode: self.trainer.episode_index(),
                        state: p.from,
                        next_state: p.to,
                        action,
                        reward: p.reward,
                        delta: p.delta,
                        feedback: applied.take(),
                        plan: self.trainer.remaining_plan(),
                    }));
                    self.steps.store(p.index + 1, Ordering::SeqCst);
                    self.control.sleep(self.grace);
                    let (value, origin) = match self.channel.commit(p.index) {
                        Some(e) => (Some(e.value), Origin::Live),
                        None => match self.trainer.oracle_feedback(&p) {
                            Ok(v) => (v, Origin::Oracle),
                            Err(_) => break,
                        },
                    };
                    self.trainer.commit(&p, value);
                    applied = value.map(|v| AppliedFeedback::new(p.index, v, origin));
                    let period = Duration::from_secs_f64(1.0 / self.control.speed());
                    self.control.sleep(period.saturating_sub(started.elapsed()));
                }
                Ok(None) => {}
                Err(_) => break,
            }
            if self.trainer.episode_done() {
                in_episode = false;
                let r = self.trainer.episode_record();
                returns.push(r.ret);
                let n = returns.len() as f64;
                let mean = returns.iter().sum::<f64>() / n;
                let variance = returns.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                self.episodes.store(returns.len(), Ordering::SeqCst);
                self.hub.publish(Event::Summary {
                    episode: r.episode,
                    ret: r.ret,
                    steps: r.steps,
                    no_plan: r.no_plan,
                    mean,
                    variance,
                });
            }
        }
        self.channel.close();
        self.control.state.lock().unwrap().status = Status::Finished;
        self.control.wake.notify_all();
        self.hub.publish(Event::Status {
            status: Status::Finished,
        });
    }
}
