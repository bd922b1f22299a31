use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::FeedbackValue;

/// Feedback corruption: each signal is delivered with probability `p_give`
/// and, when delivered, has its sign reversed with probability `p_flip`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackModel {
    pub p_give: f64,
    pub p_flip: f64,
}

impl FeedbackModel {
    pub fn new(p_give: f64, p_flip: f64) -> Result<Self, String> {
        for (name, p) in [("p_give", p_give), ("p_flip", p_flip)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        Ok(Self { p_give, p_flip })
    }

    pub fn apply<R: Rng + ?Sized>(&self, f: FeedbackValue, rng: &mut R) -> Option<FeedbackValue> {
        if rng.gen::<f64>() >= self.p_give {
            return None;
        }
        if rng.gen::<f64>() < self.p_flip {
            Some(f.flipped())
        } else {
            Some(f)
        }
    }
}

/// The four named corruption settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseRegime {
    Ideal,
    Infrequent,
    Inconsistent,
    Both,
}

impl NoiseRegime {
    pub const ALL: [NoiseRegime; 4] = [
        NoiseRegime::Ideal,
        NoiseRegime::Infrequent,
        NoiseRegime::Inconsistent,
        NoiseRegime::Both,
    ];

    pub fn model(self) -> FeedbackModel {
        let (p_give, p_flip) = match self {
            NoiseRegime::Ideal => (1.0, 0.0),
            NoiseRegime::Infrequent => (0.5, 0.0),
            NoiseRegime::Inconsistent => (1.0, 0.3),
            NoiseRegime::Both => (0.5, 0.3),
        };
        FeedbackModel { p_give, p_flip }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseRegime::Ideal => "ideal",
            NoiseRegime::Infrequent => "infrequent",
            NoiseRegime::Inconsistent => "inconsistent",
            NoiseRegime::Both => "both",
        }
    }
}

impl fmt::Display for NoiseRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseRegime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| {
                format!("unknown noise regime `{s}` (expected ideal, infrequent, inconsistent or both)")
            })
    }
}
