//! Fish-swarm grid job scheduling.
//!
//! - [`afsa`]: artificial fish swarm optimizer over box-bounded real vectors.
//! - [`dispatcher`]: keyword presence → integer plane coordinates.
//! - [`gridsim`]: discrete-event grid simulator with space- and time-shared resources.
//! - [`scheduling`]: swarm-driven job assignment (optimizer and canvas modes).
//! - [`config`]: the session config document.
//! - [`control`]: live sessions, steering commands, snapshots and the wire format.

pub mod afsa;
pub mod config;
pub mod control;
pub mod dispatcher;
pub mod gridsim;
pub mod rng;
pub mod scheduling;
