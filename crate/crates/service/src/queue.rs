//! Per-subscriber outbound queue.

use std::collections::VecDeque;
use std::sync::Mutex;

use tokio::sync::Notify;

use crate::protocol::{Outbound, WireMessage};

#[derive(Debug)]
struct Entry {
    droppable: bool,
    msg: WireMessage,
}

#[derive(Debug, Default)]
struct Inner {
    items: VecDeque<Entry>,
    next_seq: u64,
    dropped: u64,
    closed: bool,
}

/// Bounded queue between the control thread and one connection. When full,
/// the oldest telemetry message is dropped to make room. Snapshots, acks and
/// diagnostics are never dropped and may push the queue past its capacity.
///
/// Seqs are assigned on enqueue, so a dropped message leaves a visible gap.
#[derive(Debug)]
pub struct Delivery {
    session_id: String,
    capacity: usize,
    inner: Mutex<Inner>,
    notify: Notify,
}

impl Delivery {
    pub fn new(session_id: impl Into<String>, capacity: usize) -> Self {
        Self {
            session_id: session_id.into(),
            capacity: capacity.max(1),
            inner: Mutex::new(Inner {
                next_seq: 1,
                ..Default::default()
            }),
            notify: Notify::new(),
        }
    }

    /// Never blocks.
    pub fn push(&self, msg: Outbound, timestamp: f64) {
        let mut s = self.inner.lock().expect("queue lock");
        if s.closed {
            return;
        }
        let droppable = msg.droppable();
        if s.items.len() >= self.capacity {
            if let Some(i) = s.items.iter().position(|e| e.droppable) {
                s.items.remove(i);
                s.dropped += 1;
            } else if droppable {
                s.dropped += 1;
                return;
            }
        }
        let seq = s.next_seq;
        s.next_seq += 1;
        s.items.push_back(Entry {
            droppable,
            msg: msg.into_wire(&self.session_id, seq, timestamp),
        });
        drop(s);
        self.notify.notify_one();
    }

    /// Next message, or `None` once the queue is closed and drained.
    pub async fn next(&self) -> Option<WireMessage> {
        loop {
            {
                let mut s = self.inner.lock().expect("queue lock");
                if let Some(e) = s.items.pop_front() {
                    return Some(e.msg);
                }
                if s.closed {
                    return None;
                }
            }
            self.notify.notified().await;
        }
    }

    pub fn try_next(&self) -> Option<WireMessage> {
        self.inner.lock().expect("queue lock").items.pop_front().map(|e| e.msg)
    }

    pub fn close(&self) {
        self.inner.lock().expect("queue lock").closed = true;
        self.notify.notify_one();
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("queue lock").items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Telemetry messages dropped so far.
    pub fn dropped(&self) -> u64 {
        self.inner.lock().expect("queue lock").dropped
    }
}
