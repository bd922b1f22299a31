use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envs::DomainKind;
use crate::feedback::{NoiseRegime, Scenario};
use crate::planner::PlannerConfig;
use crate::rl::{DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_GAMMA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    /// Plans with the sampled planner and learns from executed plan steps.
    Pacman,
    /// Same updates, actions sampled from the policy every step.
    AcFeedback,
    /// Tabular Q-learning on the reward plus weighted feedback.
    QShaping,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Pacman => "pacman",
            AgentKind::AcFeedback => "ac_feedback",
            AgentKind::QShaping => "q_shaping",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pacman" => Ok(AgentKind::Pacman),
            "ac" | "ac_feedback" => Ok(AgentKind::AcFeedback),
            "qshape" | "q_shaping" => Ok(AgentKind::QShaping),
            other => Err(format!(
                "unknown agent `{other}` (expected pacman, ac or qshape)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Exploration rate of the Q-learning baseline.
    pub epsilon: f64,
    /// Weight of feedback added to the reward by the Q-learning baseline.
    pub shaping_weight: f64,
    pub feedback_magnitude: f64,
    /// Step cap for agents that do not plan.
    pub episode_cap: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            gamma: DEFAULT_GAMMA,
            epsilon: 0.1,
            shaping_weight: 1.0,
            feedback_magnitude: 1.0,
            episode_cap: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub domain: DomainKind,
    pub agent: AgentKind,
    pub scenario: Scenario,
    pub noise: NoiseRegime,
    pub episodes: usize,
    /// One run per seed.
    pub seeds: Vec<u64>,
    pub hyper: Hyperparams,
    pub planner: PlannerConfig,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            domain: DomainKind::FourRooms,
            agent: AgentKind::Pacman,
            scenario: Scenario::None,
            noise: NoiseRegime::Ideal,
            episodes: 500,
            seeds: seeds_from(0, 10),
            hyper: Hyperparams::default(),
            planner: PlannerConfig::default(),
            output: None,
        }
    }
}

/// `runs` consecutive seeds starting at `first`.
pub fn seeds_from(first: u64, runs: usize) -> Vec<u64> {
    (0..runs as u64).map(|i| first.wrapping_add(i)).collect()
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config file is not valid key/value text: {0}")]
    Syntax(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {reason}")]
    BadValue { key: String, reason: String },
}

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    pub fn runs(&self) -> usize {
        self.seeds.len()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let h = &self.hyper;
        if self.seeds.is_empty() {
            return Err(bad("runs", "at least one run is required"));
        }
        if !(h.alpha > 0.0 && h.alpha.is_finite()) {
            return Err(bad("alpha", "must be positive"));
        }
        if !(h.beta > 0.0 && h.beta.is_finite()) {
            return Err(bad("beta", "must be positive"));
        }
        if !(0.0..1.0).contains(&h.gamma) {
            return Err(bad("gamma", "must be in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&h.epsilon) {
            return Err(bad("epsilon", "must be in [0, 1]"));
        }
        if !h.shaping_weight.is_finite() || h.shaping_weight < 0.0 {
            return Err(bad("shaping_weight", "must be non-negative"));
        }
        if !(h.feedback_magnitude > 0.0 && h.feedback_magnitude.is_finite()) {
            return Err(bad("feedback_magnitude", "must be positive"));
        }
        if h.episode_cap == 0 {
            return Err(bad("episode_cap", "must be positive"));
        }
        if self.planner.maxstamp == 0 {
            return Err(bad("maxstamp", "must be at least 1"));
        }
        if self.planner.samples_per_state == 0 {
            return Err(bad("samples_per_state", "must be at least 1"));
        }
        if self.planner.max_plan_actions == Some(0) {
            return Err(bad("max_plan_actions", "must be positive"));
        }
        Ok(())
    }

    /// Apply `key = value` overrides. Unknown keys are errors.
    pub fn apply_overrides(&mut self, text: &str) -> Result<(), ConfigError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
        let mut runs = None;
        let mut seed = None;
        for (key, value) in &table {
            let float = || {
                value
                    .as_float()
                    .or_else(|| value.as_integer().map(|i| i as f64))
                    .ok_or_else(|| bad(key, "expected a number"))
            };
            let uint = || {
                value
                    .as_integer()
                    .and_then(|i| u64::try_from(i).ok())
                    .ok_or_else(|| bad(key, "expected a non-negative integer"))
            };
            let text = || value.as_str().ok_or_else(|| bad(key, "expected a string"));
            match key.as_str() {
                "alpha" => self.hyper.alpha = float()?,
                "beta" => self.hyper.beta = float()?,
                "gamma" => self.hyper.gamma = float()?,
                "epsilon" => self.hyper.epsilon = float()?,
                "shaping_weight" => self.hyper.shaping_weight = float()?,
                "feedback_magnitude" => self.hyper.feedback_magnitude = float()?,
                "episode_cap" => self.hyper.episode_cap = uint()? as usize,
                "maxstamp" => {
                    self.planner.maxstamp =
                        u32::try_from(uint()?).map_err(|_| bad(key, "too large"))?
                }
                "samples_per_state" => {
                    self.planner.samples_per_state =
                        u32::try_from(uint()?).map_err(|_| bad(key, "too large"))?
                }
                "max_plan_actions" => {
                    self.planner.max_plan_actions =
                        Some(u32::try_from(uint()?).map_err(|_| bad(key, "too large"))?)
                }
                "episodes" => self.episodes = uint()? as usize,
                "runs" => runs = Some(uint()? as usize),
                "seed" => seed = Some(uint()?),
                "domain" => self.domain = text()?.parse().map_err(|e| bad(key, e))?,
                "agent" => self.agent = text()?.parse().map_err(|e| bad(key, e))?,
                "scenario" => self.scenario = text()?.parse().map_err(|e| bad(key, e))?,
                "noise" => self.noise = text()?.parse().map_err(|e| bad(key, e))?,
                other => return Err(ConfigError::UnknownKey(other.to_string())),
            }
        }
        if runs.is_some() || seed.is_some() {
            let first = seed.unwrap_or_else(|| self.seeds.first().copied().unwrap_or(0));
            self.seeds = seeds_from(first, runs.unwrap_or(self.seeds.len()));
        }
        self.validate()
    }
}
