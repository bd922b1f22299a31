//! JSON messages exchanged with teaching clients. Every message carries a
//! `v` field; unknown fields are ignored on input.

use pacman_core::envs::EnvState;
use pacman_core::feedback::{FeedbackValue, Origin, Sign};
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

fn version() -> u32 {
    PROTOCOL_VERSION
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Running,
    Paused,
    Finished,
}

/// Feedback that went into a policy update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppliedFeedback {
    /// Step whose update used the value.
    pub step: u64,
    pub sign: Sign,
    pub magnitude: f64,
    pub origin: Origin,
}

impl AppliedFeedback {
    pub fn new(step: u64, value: FeedbackValue, origin: Origin) -> Self {
        Self {
            step,
            sign: value.sign,
            magnitude: value.magnitude,
            origin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepEvent {
    pub step: u64,
    pub episode: usize,
    /// State the action was taken in.
    pub state: EnvState,
    pub next_state: EnvState,
    pub action: String,
    pub reward: f64,
    pub delta: f64,
    /// The update committed since the previous step event, if it used
    /// feedback.
    pub feedback: Option<AppliedFeedback>,
    /// Actions of the current plan still to be executed.
    pub plan: Vec<String>,
}

/// Messages published to every subscriber of a session, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Step(StepEvent),
    /// Emitted when an episode ends. `mean` and `variance` are over the
    /// returns of every episode finished so far in the session.
    Summary {
        episode: usize,
        #[serde(rename = "return")]
        ret: f64,
        steps: usize,
        no_plan: bool,
        mean: f64,
        variance: f64,
    },
    Status {
        status: Status,
    },
}

/// An event with its position in the session's stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    #[serde(default = "version")]
    pub v: u32,
    pub seq: u64,
    #[serde(flatten)]
    pub event: Event,
}

/// Everything the server sends over a stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ServerMessage {
    Event(Envelope),
    Reply(Reply),
}

/// Direct answers to one client, never broadcast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ReplyBody {
    /// Events `from..to` were dropped from the replay buffer before this
    /// client could read them.
    Gap { from: u64, to: u64 },
    FeedbackResult {
        step: u64,
        accepted: bool,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        reason: Option<String>,
    },
    ControlResult { status: Status, speed: f64 },
    Error { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    #[serde(default = "version")]
    pub v: u32,
    #[serde(flatten)]
    pub body: ReplyBody,
}

impl From<ReplyBody> for Reply {
    fn from(body: ReplyBody) -> Self {
        Self {
            v: PROTOCOL_VERSION,
            body,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Pause,
    Resume,
    SetSpeed,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRequest {
    pub step: u64,
    pub sign: Sign,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlRequest {
    pub cmd: Command,
    #[serde(default)]
    pub value: Option<f64>,
}

/// Messages a client may send over a stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientBody {
    Feedback(FeedbackRequest),
    Control(ControlRequest),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientMessage {
    #[serde(default = "version")]
    pub v: u32,
    #[serde(flatten)]
    pub body: ClientBody,
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn step_event_has_the_documented_shape() {
        let e = Envelope {
            v: 1,
            seq: 4,
            event: Event::Step(StepEvent {
                step: 3,
                episode: 0,
                state: EnvState::Cell { row: 1, col: 2 },
                next_state: EnvState::Cell { row: 1, col: 3 },
                action: "right".into(),
                reward: -1.0,
                delta: -0.5,
                feedback: None,
                plan: vec!["up".into()],
            }),
        };
        let v = serde_json::to_value(&e).unwrap();
        assert_eq!(v["type"], "step");
        assert_eq!(v["v"], 1);
        assert_eq!(v["step"], 3);
        assert_eq!(v["state"], json!({"kind": "cell", "row": 1, "col": 2}));
        assert_eq!(v["feedback"], json!(null));
        let back: Envelope = serde_json::from_value(v).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn client_messages_ignore_unknown_fields() {
        let m: ClientMessage =
            serde_json::from_str(r#"{"type":"feedback","step":7,"sign":-1,"note":"x"}"#).unwrap();
        assert_eq!(m.v, 1);
        assert_eq!(
            m.body,
            ClientBody::Feedback(FeedbackRequest {
                step: 7,
                sign: Sign::Negative
            })
        );
        let c: ClientMessage =
            serde_json::from_str(r#"{"v":1,"type":"control","cmd":"set_speed","value":2}"#)
                .unwrap();
        assert_eq!(
            c.body,
            ClientBody::Control(ControlRequest {
                cmd: Command::SetSpeed,
                value: Some(2.0)
            })
        );
    }

    #[test]
    fn zero_sign_is_rejected() {
        assert!(serde_json::from_str::<ClientMessage>(r#"{"type":"feedback","step":1,"sign":0}"#).is_err());
    }

    #[test]
    fn replies_are_tagged() {
        let r = Reply::from(ReplyBody::FeedbackResult {
            step: 2,
            accepted: false,
            reason: Some("stale".into()),
        });
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(
            v,
            json!({"v": 1, "type": "feedback_result", "step": 2, "accepted": false, "reason": "stale"})
        );
    }
}
