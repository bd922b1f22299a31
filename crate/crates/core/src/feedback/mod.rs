//! Human feedback: values, noise models, scenario oracles and the live channel.

mod live;
mod noise;
mod oracle;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use live::{LiveChannel, Rejection, DEFAULT_LIVE_CAPACITY};
pub use noise::{FeedbackModel, NoiseRegime};
pub use oracle::{OracleError, Scenario, ScenarioOracle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn flipped(self) -> Self {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;

    fn try_from(v: i8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Sign::Positive),
            -1 => Ok(Sign::Negative),
            other => Err(format!("feedback sign must be +1 or -1, got {other}")),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Positive => "+1",
            Sign::Negative => "-1",
        })
    }
}

/// A discrete feedback signal: a sign scaled by a positive magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackValue {
    pub sign: Sign,
    pub magnitude: f64,
}

impl FeedbackValue {
    pub fn new(sign: Sign, magnitude: f64) -> Self {
        debug_assert!(magnitude.is_finite() && magnitude > 0.0);
        Self { sign, magnitude }
    }

    pub fn unit(sign: Sign) -> Self {
        Self::new(sign, 1.0)
    }

    pub fn value(&self) -> f64 {
        self.sign.as_f64() * self.magnitude
    }

    pub fn flipped(self) -> Self {
        Self {
            sign: self.sign.flipped(),
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Oracle,
    Live,
}

/// Feedback addressed to one executed step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub step: u64,
    pub value: FeedbackValue,
    pub origin: Origin,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_serialises_as_integer() {
        assert_eq!(serde_json::to_string(&Sign::Negative).unwrap(), "-1");
        assert_eq!(serde_json::from_str::<Sign>("1").unwrap(), Sign::Positive);
        assert!(serde_json::from_str::<Sign>("0").is_err());
    }

    #[test]
    fn value_scales_sign() {
        let f = FeedbackValue::new(Sign::Negative, 2.5);
        assert_eq!(f.value(), -2.5);
        assert_eq!(f.flipped().value(), 2.5);
    }
}
