//! Fish-swarm job scheduling.
//!
//! Optimizer mode: each fish is a whole job→resource assignment. Position
//! coordinate `j` is floored onto a resource index for job `j`, and the
//! fitness is the analytic makespan of that assignment.
//!
//! Canvas mode ([`canvas`]): each fish carries one task and swims in the
//! dispatcher plane until it reaches a resource.

pub mod canvas;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::afsa::{self, Bounds, FnObjective, Objective, SwarmError, SwarmParams, SwarmState};
use crate::gridsim::{GridError, GridSim, Gridlet, JobStats, ResourceId, ResourceSpec, StatsReport};

/// Largest search space `brute_force_optimum` will enumerate.
pub const BRUTE_FORCE_LIMIT: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchedulingError {
    #[error("scheduling problem needs at least one job")]
    NoJobs,
    #[error("scheduling problem needs at least one resource")]
    NoResources,
    #[error("instance too large for exhaustive search: {resources}^{jobs} assignments exceed {BRUTE_FORCE_LIMIT}")]
    TooLarge { jobs: usize, resources: usize },
    #[error("resource {0:?} has no plane position")]
    MissingPlanePosition(String),
    #[error("assignment has {found} entries for {expected} jobs")]
    AssignmentLength { expected: usize, found: usize },
    #[error(transparent)]
    Swarm(#[from] SwarmError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleProblem {
    pub jobs: Vec<Gridlet>,
    pub resources: Vec<ResourceSpec>,
    ratings: Vec<f64>,
}

impl ScheduleProblem {
    pub fn new(jobs: Vec<Gridlet>, resources: Vec<ResourceSpec>) -> Result<Self, SchedulingError> {
        if jobs.is_empty() {
            return Err(SchedulingError::NoJobs);
        }
        if resources.is_empty() {
            return Err(SchedulingError::NoResources);
        }
        for r in &resources {
            r.validate()?;
        }
        for j in &jobs {
            j.validate()?;
        }
        let ratings = resources.iter().map(ResourceSpec::total_rating).collect();
        Ok(Self {
            jobs,
            resources,
            ratings,
        })
    }

    pub fn job_count(&self) -> usize {
        self.jobs.len()
    }

    pub fn resource_count(&self) -> usize {
        self.resources.len()
    }

    /// Search box for optimizer mode: `[0, M]` per job.
    pub fn bounds(&self) -> Vec<Bounds> {
        vec![Bounds::new(0.0, self.resource_count() as f64); self.job_count()]
    }
}

/// Resource index per job, in problem job order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(pub Vec<usize>);

impl Assignment {
    /// `job_id,resource_id` rows.
    pub fn to_csv(&self, problem: &ScheduleProblem) -> String {
        let mut out = String::from("job_id,resource_id\n");
        for (job, r) in problem.jobs.iter().zip(&self.0) {
            out.push_str(&format!("{},{}\n", job.id, problem.resources[*r].id));
        }
        out
    }
}

/// Floors each coordinate onto `{0, …, M−1}`; anything non-positive or NaN
/// maps to 0, anything at or above `M − 1` maps to `M − 1`.
pub fn decode(position: &[f64], resource_count: usize) -> Assignment {
    let top = resource_count.saturating_sub(1);
    Assignment(
        position
            .iter()
            .map(|&x| {
                if x > 0.0 {
                    (x.floor().min(top as f64)) as usize
                } else {
                    0
                }
            })
            .collect(),
    )
}

/// `max_r Σ_{j→r} length_j / total_rating_r`.
pub fn estimate_makespan(problem: &ScheduleProblem, assignment: &Assignment) -> f64 {
    let mut loads = vec![0.0; problem.resource_count()];
    for (job, &r) in problem.jobs.iter().zip(&assignment.0) {
        loads[r] += job.length;
    }
    loads
        .iter()
        .zip(&problem.ratings)
        .map(|(l, rating)| l / rating)
        .fold(0.0, f64::max)
}

fn check_assignment(problem: &ScheduleProblem, assignment: &Assignment) -> Result<(), SchedulingError> {
    if assignment.0.len() != problem.job_count() {
        return Err(SchedulingError::AssignmentLength {
            expected: problem.job_count(),
            found: assignment.0.len(),
        });
    }
    Ok(())
}

/// Exhaustive search; returns the lexicographically smallest optimum.
pub fn brute_force_optimum(problem: &ScheduleProblem) -> Result<(Assignment, f64), SchedulingError> {
    let (j, m) = (problem.job_count(), problem.resource_count());
    let too_large = SchedulingError::TooLarge { jobs: j, resources: m };
    let total = u32::try_from(j)
        .ok()
        .and_then(|exp| (m as u64).checked_pow(exp))
        .ok_or(too_large.clone())?;
    if total > BRUTE_FORCE_LIMIT {
        return Err(too_large);
    }
    let mut current = Assignment(vec![0; j]);
    let mut best = (current.clone(), estimate_makespan(problem, &current));
    // Odometer with job 0 most significant gives lexicographic order.
    'outer: loop {
        let mut pos = j;
        loop {
            if pos == 0 {
                break 'outer;
            }
            pos -= 1;
            current.0[pos] += 1;
            if current.0[pos] < m {
                break;
            }
            current.0[pos] = 0;
        }
        let value = estimate_makespan(problem, &current);
        if value < best.1 {
            best = (current.clone(), value);
        }
    }
    Ok(best)
}

/// Runs a job set under a fixed assignment and returns the per-job stats.
pub fn simulate(problem: &ScheduleProblem, assignment: &Assignment) -> Result<Vec<JobStats>, SchedulingError> {
    check_assignment(problem, assignment)?;
    let mut sim = GridSim::new(problem.resources.clone())?;
    for (job, &r) in problem.jobs.iter().zip(&assignment.0) {
        sim.submit(job.clone(), ResourceId(r))?;
    }
    Ok(sim.run_until_idle().to_vec())
}

/// Round-robin baseline: job `i` goes to resource `i mod M`.
pub fn round_robin(problem: &ScheduleProblem) -> Assignment {
    Assignment((0..problem.job_count()).map(|i| i % problem.resource_count()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub assignment: Assignment,
    pub makespan: f64,
    pub history: Vec<f64>,
}

/// Iterative optimizer-mode search, one swarm iteration per [`step`](Self::step).
#[derive(Debug, Clone)]
pub struct OptimizerRun {
    problem: ScheduleProblem,
    params: SwarmParams,
    state: SwarmState,
    history: Vec<f64>,
}

impl OptimizerRun {
    /// `params.bounds` is replaced by the problem's search box.
    pub fn new(problem: ScheduleProblem, mut params: SwarmParams, seed: u64) -> Result<Self, SchedulingError> {
        params.bounds = problem.bounds();
        let state = afsa::init_swarm(&params, &objective(&problem), seed)?;
        Ok(Self {
            problem,
            params,
            state,
            history: Vec::new(),
        })
    }

    pub fn problem(&self) -> &ScheduleProblem {
        &self.problem
    }

    pub fn params(&self) -> &SwarmParams {
        &self.params
    }

    pub fn swarm(&self) -> &SwarmState {
        &self.state
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }

    pub fn step(&mut self) {
        let obj = objective(&self.problem);
        afsa::step_iteration(&mut self.state, &self.params, &obj);
        self.history.push(self.state.best_fitness().unwrap_or(f64::INFINITY));
    }

    pub fn add_candidate(&mut self) -> afsa::FishId {
        let obj = objective(&self.problem);
        self.state.spawn_random(&self.params, &obj)
    }

    pub fn remove_candidate(&mut self, id: afsa::FishId) -> Option<afsa::ArtificialFish> {
        self.state.remove(id)
    }

    pub fn set_params(&mut self, mut params: SwarmParams) -> Result<(), SchedulingError> {
        params.bounds = self.problem.bounds();
        params.validate()?;
        self.params = params;
        Ok(())
    }

    /// Decoded bulletin best.
    pub fn best(&self) -> Option<(Assignment, f64)> {
        self.state.bulletin.as_ref().map(|b| {
            let a = decode(&b.position, self.problem.resource_count());
            let m = estimate_makespan(&self.problem, &a);
            (a, m)
        })
    }

    pub fn into_result(self) -> OptimizeResult {
        let (assignment, makespan) = self.best().expect("optimizer swarm is never empty at start");
        OptimizeResult {
            assignment,
            makespan,
            history: self.history,
        }
    }
}

fn objective(problem: &ScheduleProblem) -> impl Objective + '_ {
    FnObjective::new(problem.job_count(), move |x: &[f64]| {
        estimate_makespan(problem, &decode(x, problem.resource_count()))
    })
}

/// Runs the swarm for `params.max_iterations` iterations over the
/// assignment space and returns the decoded best.
pub fn optimize(problem: &ScheduleProblem, params: &SwarmParams, seed: u64) -> Result<OptimizeResult, SchedulingError> {
    let mut run = OptimizerRun::new(problem.clone(), params.clone(), seed)?;
    for _ in 0..params.max_iterations {
        run.step();
    }
    Ok(run.into_result())
}

/// Stats report for a problem under a fixed assignment.
pub fn report(problem: &ScheduleProblem, assignment: &Assignment) -> Result<StatsReport, SchedulingError> {
    Ok(StatsReport::new(&simulate(problem, assignment)?))
}
