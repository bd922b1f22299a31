use std::collections::{BTreeSet, VecDeque};
use std::sync::Mutex;

use thiserror::Error;

use super::{FeedbackEvent, FeedbackValue, Origin};

pub const DEFAULT_LIVE_CAPACITY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum Rejection {
    #[error("step is outside the feedback window")]
    Stale,
    #[error("step already has feedback")]
    Duplicate,
    #[error("feedback queue is full")]
    Full,
    #[error("session is closed")]
    Closed,
}

impl Rejection {
    pub fn as_str(self) -> &'static str {
        match self {
            Rejection::Stale => "stale",
            Rejection::Duplicate => "duplicate",
            Rejection::Full => "full",
            Rejection::Closed => "closed",
        }
    }
}

#[derive(Debug, Default)]
struct State {
    latest: Option<u64>,
    committed: Option<u64>,
    given: BTreeSet<u64>,
    queue: VecDeque<FeedbackEvent>,
    closed: bool,
}

/// Bounded hand-off of live feedback from any number of submitters to the
/// single learner loop.
///
/// Feedback for a step is accepted while that step is the latest executed one,
/// or the one before it as long as the learner has not yet committed its
/// update. Each step accepts at most one event.
#[derive(Debug)]
pub struct LiveChannel {
    state: Mutex<State>,
    capacity: usize,
}

impl Default for LiveChannel {
    fn default() -> Self {
        Self::new(DEFAULT_LIVE_CAPACITY)
    }
}

impl LiveChannel {
    pub fn new(capacity: usize) -> Self {
        Self {
            state: Mutex::new(State::default()),
            capacity,
        }
    }

    pub fn submit(&self, step: u64, value: FeedbackValue) -> Result<(), Rejection> {
        let mut st = self.state.lock().unwrap();
        if st.closed {
            return Err(Rejection::Closed);
        }
        let latest = st.latest.ok_or(Rejection::Stale)?;
        let uncommitted = st.committed.is_none_or(|c| step > c);
        let in_window = step == latest || (step + 1 == latest && uncommitted);
        if !in_window || !uncommitted {
            return Err(Rejection::Stale);
        }
        if st.given.contains(&step) {
            return Err(Rejection::Duplicate);
        }
        if st.queue.len() >= self.capacity {
            return Err(Rejection::Full);
        }
        st.given.insert(step);
        st.queue.push_back(FeedbackEvent {
            step,
            value,
            origin: Origin::Live,
        });
        Ok(())
    }

    /// The learner executed `step`; it becomes the newest feedback target.
    pub fn executed(&self, step: u64) {
        let mut st = self.state.lock().unwrap();
        st.latest = Some(step);
        let floor = step.saturating_sub(1);
        st.given = st.given.split_off(&floor);
    }

    /// Remove and return the pending event for `step`, closing its window.
    pub fn commit(&self, step: u64) -> Option<FeedbackEvent> {
        let mut st = self.state.lock().unwrap();
        st.committed = Some(st.committed.map_or(step, |c| c.max(step)));
        let pos = st.queue.iter().position(|e| e.step == step)?;
        st.queue.remove(pos)
    }

    pub fn close(&self) {
        self.state.lock().unwrap().closed = true;
    }

    pub fn is_closed(&self) -> bool {
        self.state.lock().unwrap().closed
    }

    pub fn pending(&self) -> usize {
        self.state.lock().unwrap().queue.len()
    }
}
