//! One task per session: the only code that touches the session.
//!
//! Commands, snapshot reads, and subscriptions arrive on a channel and are
//! handled strictly in order, interleaved with iterations while the session
//! is running. Every subscriber therefore sees the same event sequence.

use std::sync::Arc;
use std::time::Duration;

use shoal_core::control::{Ack, Command, CommandError, CommandLog, EventMsg, Session, Snapshot};
use tokio::sync::{mpsc, oneshot};

use crate::hub::{Hub, Subscriber};

enum Request {
    Command(Command, oneshot::Sender<Result<Ack, CommandError>>),
    Snapshot(oneshot::Sender<Snapshot>),
    Subscribe(oneshot::Sender<Arc<Subscriber>>),
    Log(oneshot::Sender<CommandLog>),
}

/// Cheap handle to a running session executor.
#[derive(Clone)]
pub struct SessionHandle {
    tx: mpsc::Sender<Request>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gone;

impl SessionHandle {
    /// Starts the executor. While running, one iteration runs per `interval`.
    pub fn spawn(session: Session, interval: Duration) -> Self {
        let (tx, rx) = mpsc::channel(64);
        tokio::spawn(run(session, rx, interval));
        Self { tx }
    }

    async fn call<T>(&self, make: impl FnOnce(oneshot::Sender<T>) -> Request) -> Result<T, Gone> {
        let (reply, rx) = oneshot::channel();
        self.tx.send(make(reply)).await.map_err(|_| Gone)?;
        rx.await.map_err(|_| Gone)
    }

    pub async fn command(&self, command: Command) -> Result<Result<Ack, CommandError>, Gone> {
        self.call(|r| Request::Command(command, r)).await
    }

    pub async fn snapshot(&self) -> Result<Snapshot, Gone> {
        self.call(Request::Snapshot).await
    }

    pub async fn subscribe(&self) -> Result<Arc<Subscriber>, Gone> {
        self.call(Request::Subscribe).await
    }

    pub async fn log(&self) -> Result<CommandLog, Gone> {
        self.call(Request::Log).await
    }
}

async fn run(mut session: Session, mut rx: mpsc::Receiver<Request>, interval: Duration) {
    let mut hub = Hub::default();
    let mut ticker = tokio::time::interval(interval);
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        tokio::select! {
            biased;
            request = rx.recv() => {
                let Some(request) = request else { break };
                handle(&mut session, &mut hub, request);
            }
            _ = ticker.tick(), if session.is_running() => {
                let events = session.tick();
                hub.publish(events);
            }
        }
    }
    hub.close();
    log::debug!("session {} executor stopped", session.id());
}

fn handle(session: &mut Session, hub: &mut Hub, request: Request) {
    match request {
        Request::Command(command, reply) => {
            let name = command.name();
            match session.apply(command) {
                Ok((ack, events)) => {
                    log::debug!("session {}: {name} at iteration {}", session.id(), ack.iteration);
                    hub.publish(events);
                    let _ = reply.send(Ok(ack));
                }
                Err(e) => {
                    log::info!("session {}: {name} rejected: {e}", session.id());
                    hub.publish([EventMsg::from(&e)]);
                    let _ = reply.send(Err(e));
                }
            }
        }
        Request::Snapshot(reply) => {
            let _ = reply.send(session.snapshot());
        }
        Request::Subscribe(reply) => {
            let sub = hub.subscribe(EventMsg::Snapshot {
                snapshot: Box::new(session.snapshot()),
            });
            let _ = reply.send(sub);
        }
        Request::Log(reply) => {
            let _ = reply.send(session.command_log());
        }
    }
}
