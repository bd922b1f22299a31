//! Ordered fan-out of session events with a bounded replay buffer.

use std::collections::VecDeque;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::sync::Mutex;

use tokio::sync::watch;

use crate::protocol::{Envelope, Event, PROTOCOL_VERSION};

pub const DEFAULT_REPLAY_CAPACITY: usize = 1000;

#[derive(Debug, Default)]
struct Buffer {
    events: VecDeque<Envelope>,
    next: u64,
}

/// What a reader gets back from [`Hub::read_from`].
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    /// Sequence numbers the reader asked for that are no longer buffered.
    pub gap: Option<(u64, u64)>,
    pub events: Vec<Envelope>,
    /// Where the reader should continue.
    pub next: u64,
}

pub struct Hub {
    buffer: Mutex<Buffer>,
    capacity: usize,
    /// Carries the next sequence number; changes whenever an event lands.
    notify: watch::Sender<u64>,
    log: Option<Mutex<BufWriter<File>>>,
}

impl Hub {
    pub fn new(capacity: usize, log: Option<File>) -> Self {
        Self {
            buffer: Mutex::new(Buffer::default()),
            capacity: capacity.max(1),
            notify: watch::Sender::new(0),
            log: log.map(|f| Mutex::new(BufWriter::new(f))),
        }
    }

    pub fn publish(&self, event: Event) -> u64 {
        let mut buf = self.buffer.lock().unwrap();
        let seq = buf.next;
        let env = Envelope {
            v: PROTOCOL_VERSION,
            seq,
            event,
        };
        if let Some(log) = &self.log {
            // the log is best effort; a full disk must not stop the learner
            let _ = write_line(&mut log.lock().unwrap(), &env);
        }
        buf.events.push_back(env);
        while buf.events.len() > self.capacity {
            buf.events.pop_front();
        }
        buf.next = seq + 1;
        self.notify.send_replace(buf.next);
        seq
    }

    /// Buffered events with sequence number `from` or later.
    pub fn read_from(&self, from: u64) -> Batch {
        let buf = self.buffer.lock().unwrap();
        let oldest = buf.events.front().map_or(buf.next, |e| e.seq);
        let start = from.max(oldest);
        let gap = (from < oldest).then_some((from, oldest));
        let skip = (start - oldest) as usize;
        Batch {
            gap,
            events: buf.events.iter().skip(skip).cloned().collect(),
            next: buf.next.max(from),
        }
    }

    pub fn subscribe(&self) -> watch::Receiver<u64> {
        self.notify.subscribe()
    }

    pub fn next_seq(&self) -> u64 {
        self.buffer.lock().unwrap().next
    }
}

fn write_line(w: &mut BufWriter<File>, env: &Envelope) -> io::Result<()> {
    serde_json::to_writer(&mut *w, env)?;
    w.write_all(b"\n")?;
    w.flush()
}
