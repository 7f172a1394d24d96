//! Fan-out of session events to subscribers.
//!
//! Each subscriber has its own queue. A subscriber that falls behind never
//! blocks the session: when a snapshot is published while the newest queued
//! event is also a snapshot, the queued one is replaced. Nothing else is
//! dropped or reordered.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use shoal_core::control::EventMsg;
use tokio::sync::Notify;

#[derive(Default)]
struct Queue {
    events: VecDeque<EventMsg>,
    closed: bool,
}

#[derive(Default)]
pub struct Subscriber {
    queue: Mutex<Queue>,
    notify: Notify,
}

impl Subscriber {
    fn push(&self, event: EventMsg) {
        let mut q = self.queue.lock().expect("subscriber queue poisoned");
        let coalesce =
            matches!(event, EventMsg::Snapshot { .. }) && matches!(q.events.back(), Some(EventMsg::Snapshot { .. }));
        if coalesce {
            *q.events.back_mut().expect("checked non-empty") = event;
        } else {
            q.events.push_back(event);
        }
        drop(q);
        self.notify.notify_one();
    }

    fn close(&self) {
        self.queue.lock().expect("subscriber queue poisoned").closed = true;
        self.notify.notify_one();
    }

    /// Next event in publication order; `None` once the session is gone.
    pub async fn recv(&self) -> Option<EventMsg> {
        loop {
            {
                let mut q = self.queue.lock().expect("subscriber queue poisoned");
                if let Some(e) = q.events.pop_front() {
                    return Some(e);
                }
                if q.closed {
                    return None;
                }
            }
            self.notify.notified().await;
        }
    }

    pub fn pending(&self) -> usize {
        self.queue.lock().expect("subscriber queue poisoned").events.len()
    }
}

#[derive(Default)]
pub struct Hub {
    subscribers: Vec<Arc<Subscriber>>,
}

impl Hub {
    /// Registers a subscriber whose first event is `initial`.
    pub fn subscribe(&mut self, initial: EventMsg) -> Arc<Subscriber> {
        let sub = Arc::new(Subscriber::default());
        sub.push(initial);
        self.subscribers.push(sub.clone());
        sub
    }

    pub fn publish(&mut self, events: impl IntoIterator<Item = EventMsg>) {
        // Subscribers that hung up hold the only other reference.
        self.subscribers.retain(|s| Arc::strong_count(s) > 1);
        for e in events {
            for s in &self.subscribers {
                s.push(e.clone());
            }
        }
    }

    pub fn close(&mut self) {
        for s in self.subscribers.drain(..) {
            s.close();
        }
    }

    pub fn len(&self) -> usize {
        self.subscribers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subscribers.is_empty()
    }
}
