//! Discrete-event grid simulator.
//!
//! Users own jobs (gridlets) measured in millions of instructions. Resources
//! hold machines, machines hold processing elements rated in MIPS. Each
//! resource runs either a space-shared policy (one job per PE, FCFS) or a
//! time-shared policy (egalitarian processor sharing over the resource's
//! total rating).

mod engine;
mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispatcher::TaskCoordinates;
use crate::rng::{StreamTag, Substream};

pub use engine::{EventKind, GridSim, SimEvent};
pub use report::{ResourceAggregate, StatsReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least one resource")]
    NoResources,
    #[error("resource {resource:?} has no machines")]
    NoMachines { resource: String },
    #[error("resource {resource:?} machine {machine} has no processing elements")]
    NoPes { resource: String, machine: usize },
    #[error("resource {resource:?} machine {machine} pe {pe}: rating must be positive and finite, got {rating}")]
    BadRating {
        resource: String,
        machine: usize,
        pe: usize,
        rating: f64,
    },
    #[error("invalid policy {0:?}; expected space_shared or time_shared")]
    InvalidPolicy(String),
    #[error("job length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("job submit time must be non-negative and finite, got {0}")]
    BadSubmitTime(f64),
    #[error("job template needs exactly one of length_mi or length_range")]
    BadTemplate,
    #[error("job id {0} already submitted")]
    DuplicateJob(JobId),
    #[error("unknown resource {0}")]
    UnknownResource(ResourceId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JobId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub usize);

macro_rules! display_inner {
    ($($t:ty),*) => {$(
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    )*};
}
display_inner!(ResourceId, JobId, UserId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    SpaceShared,
    TimeShared,
}

impl Policy {
    pub fn as_str(self) -> &'static str {
        match self {
            Policy::SpaceShared => "space_shared",
            Policy::TimeShared => "time_shared",
        }
    }
}

impl FromStr for Policy {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "space_shared" => Ok(Policy::SpaceShared),
            "time_shared" => Ok(Policy::TimeShared),
            other => Err(GridError::InvalidPolicy(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeSpec {
    /// MIPS.
    pub rating: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineSpec {
    pub pes: Vec<PeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceSpec {
    pub id: ResourceId,
    pub name: String,
    pub machines: Vec<MachineSpec>,
    pub policy: Policy,
    pub plane_position: Option<TaskCoordinates>,
}

impl ResourceSpec {
    /// Single-machine resource with the given PE ratings.
    pub fn uniform(id: usize, policy: Policy, ratings: &[f64]) -> Self {
        Self {
            id: ResourceId(id),
            name: format!("r{id}"),
            machines: vec![MachineSpec {
                pes: ratings.iter().map(|&rating| PeSpec { rating }).collect(),
            }],
            policy,
            plane_position: None,
        }
    }

    pub fn total_rating(&self) -> f64 {
        self.pe_ratings().sum()
    }

    pub fn pe_count(&self) -> usize {
        self.machines.iter().map(|m| m.pes.len()).sum()
    }

    /// Ratings of every PE, machines in order.
    pub fn pe_ratings(&self) -> impl Iterator<Item = f64> + '_ {
        self.machines.iter().flat_map(|m| m.pes.iter().map(|p| p.rating))
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.machines.is_empty() {
            return Err(GridError::NoMachines {
                resource: self.name.clone(),
            });
        }
        for (m, machine) in self.machines.iter().enumerate() {
            if machine.pes.is_empty() {
                return Err(GridError::NoPes {
                    resource: self.name.clone(),
                    machine: m,
                });
            }
            for (p, pe) in machine.pes.iter().enumerate() {
                if !(pe.rating.is_finite() && pe.rating > 0.0) {
                    return Err(GridError::BadRating {
                        resource: self.name.clone(),
                        machine: m,
                        pe: p,
                        rating: pe.rating,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridUser {
    pub id: UserId,
    pub name: String,
    pub job_count: usize,
}

/// One job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gridlet {
    pub id: JobId,
    pub owner: UserId,
    /// Millions of instructions.
    pub length: f64,
    pub submit_time: f64,
    pub coordinates: Option<TaskCoordinates>,
}

impl Gridlet {
    pub fn new(id: u64, length: f64, submit_time: f64) -> Self {
        Self {
            id: JobId(id),
            owner: UserId(0),
            length,
            submit_time,
            coordinates: None,
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(GridError::BadLength(self.length));
        }
        if !(self.submit_time.is_finite() && self.submit_time >= 0.0) {
            return Err(GridError::BadSubmitTime(self.submit_time));
        }
        Ok(())
    }
}

/// Per-job result; times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobStats {
    pub job_id: JobId,
    pub resource_id: ResourceId,
    pub submit_time: f64,
    pub start_time: f64,
    pub finish_time: f64,
    pub waiting_time: f64,
    pub exec_time: f64,
}

// Grid section of the session config document.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserConfig {
    pub name: String,
    #[serde(default)]
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeConfig {
    pub rating: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineConfig {
    pub pes: Vec<PeConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceConfig {
    pub name: String,
    pub policy: String,
    pub machines: Vec<MachineConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plane_position: Option<TaskCoordinates>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobTemplate {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_mi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_range: Option<[f64; 2]>,
}

impl Default for JobTemplate {
    fn default() -> Self {
        Self {
            length_mi: Some(1000.0),
            length_range: None,
        }
    }
}

impl JobTemplate {
    pub fn validate(&self) -> Result<(), GridError> {
        match (self.length_mi, self.length_range) {
            (Some(l), None) => positive_length(l),
            (None, Some([lo, hi])) => {
                positive_length(lo)?;
                positive_length(hi)?;
                if lo > hi {
                    return Err(GridError::BadTemplate);
                }
                Ok(())
            }
            _ => Err(GridError::BadTemplate),
        }
    }

    pub fn draw(&self, rng: &mut Substream) -> f64 {
        match (self.length_mi, self.length_range) {
            (Some(l), _) => l,
            (None, Some([lo, hi])) => rng.uniform(lo, hi),
            (None, None) => JobTemplate::default().length_mi.unwrap_or(1000.0),
        }
    }
}

fn positive_length(l: f64) -> Result<(), GridError> {
    if l.is_finite() && l > 0.0 {
        Ok(())
    } else {
        Err(GridError::BadLength(l))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub users: Vec<UserConfig>,
    pub resources: Vec<ResourceConfig>,
    #[serde(default)]
    pub job_template: JobTemplate,
}

/// Validated grid: resource specs, users, and the configured jobs.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSetup {
    pub resources: Vec<ResourceSpec>,
    pub users: Vec<GridUser>,
    pub template: JobTemplate,
}

impl GridSetup {
    /// Configured jobs, ids numbered across users in order, all submitted at 0.
    pub fn gridlets(&self, seed: u64) -> Vec<Gridlet> {
        let mut rng = Substream::derive(seed, 0, 0, StreamTag::Jobs);
        let mut jobs = Vec::new();
        for user in &self.users {
            for _ in 0..user.job_count {
                jobs.push(Gridlet {
                    id: JobId(jobs.len() as u64),
                    owner: user.id,
                    length: self.template.draw(&mut rng),
                    submit_time: 0.0,
                    coordinates: None,
                });
            }
        }
        jobs
    }

    pub fn simulator(&self) -> GridSim {
        GridSim::new(self.resources.clone()).expect("validated resources")
    }
}

/// Validates a grid section and builds its resources and users.
pub fn build_grid(config: &GridConfig) -> Result<GridSetup, GridError> {
    if config.resources.is_empty() {
        return Err(GridError::NoResources);
    }
    config.job_template.validate()?;
    let mut resources = Vec::with_capacity(config.resources.len());
    for (i, rc) in config.resources.iter().enumerate() {
        let spec = ResourceSpec {
            id: ResourceId(i),
            name: rc.name.clone(),
            machines: rc
                .machines
                .iter()
                .map(|m| MachineSpec {
                    pes: m.pes.iter().map(|p| PeSpec { rating: p.rating }).collect(),
                })
                .collect(),
            policy: rc.policy.parse()?,
            plane_position: rc.plane_position,
        };
        spec.validate()?;
        resources.push(spec);
    }
    let users = config
        .users
        .iter()
        .enumerate()
        .map(|(i, u)| GridUser {
            id: UserId(i),
            name: u.name.clone(),
            job_count: u.jobs,
        })
        .collect();
    Ok(GridSetup {
        resources,
        users,
        template: config.job_template.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resource(name: &str, machines: usize, pes: usize, rating: f64) -> ResourceConfig {
        ResourceConfig {
            name: name.into(),
            policy: "space_shared".into(),
            machines: (0..machines)
                .map(|_| MachineConfig {
                    pes: (0..pes).map(|_| PeConfig { rating }).collect(),
                })
                .collect(),
            plane_position: None,
        }
    }

    fn config(resources: Vec<ResourceConfig>) -> GridConfig {
        GridConfig {
            users: vec![UserConfig {
                name: "u".into(),
                jobs: 2,
            }],
            resources,
            job_template: JobTemplate::default(),
        }
    }

    #[test]
    fn build_examples() {
        let g = build_grid(&config(vec![resource("a", 1, 1, 100.0)])).unwrap();
        assert_eq!(g.resources[0].total_rating(), 100.0);

        let g = build_grid(&config(vec![resource("a", 2, 2, 10.0), resource("b", 2, 2, 10.0)])).unwrap();
        let pes: usize = g.resources.iter().map(|r| r.pe_count()).sum();
        assert_eq!(pes, 8);

        let err = build_grid(&config(vec![resource("a", 1, 1, 0.0)])).unwrap_err();
        assert!(matches!(err, GridError::BadRating { .. }));
    }

    #[test]
    fn build_rejects_bad_shapes() {
        assert_eq!(build_grid(&config(vec![])).unwrap_err(), GridError::NoResources);
        let mut r = resource("a", 1, 1, 1.0);
        r.policy = "round_robin".into();
        assert_eq!(
            build_grid(&config(vec![r])).unwrap_err(),
            GridError::InvalidPolicy("round_robin".into())
        );
        assert!(matches!(
            build_grid(&config(vec![resource("a", 0, 1, 1.0)])),
            Err(GridError::NoMachines { .. })
        ));
        assert!(matches!(
            build_grid(&config(vec![resource("a", 1, 0, 1.0)])),
            Err(GridError::NoPes { .. })
        ));
    }

    #[test]
    fn template_draws() {
        let mut c = config(vec![resource("a", 1, 1, 1.0)]);
        c.job_template = JobTemplate {
            length_mi: None,
            length_range: Some([100.0, 1000.0]),
        };
        let g = build_grid(&c).unwrap();
        let jobs = g.gridlets(3);
        assert_eq!(jobs.len(), 2);
        assert!(jobs.iter().all(|j| (100.0..1000.0).contains(&j.length)));
        assert_eq!(jobs, g.gridlets(3));

        c.job_template = JobTemplate {
            length_mi: Some(5.0),
            length_range: Some([1.0, 2.0]),
        };
        assert_eq!(build_grid(&c).unwrap_err(), GridError::BadTemplate);
    }
}
