//! Canvas mode: every fish carries one task and swims in the dispatcher
//! plane. Resources sit at fixed plane positions. A fish whose distance to a
//! resource drops below `epsilon` is dispatched there and its task enters the
//! grid simulator.
//!
//! The fitness surface is `min_r dist(p, r) · (1 + pending_MI_r / rating_r)`,
//! so fish drift toward close, lightly loaded resources. Loads are refreshed
//! from the simulator before every iteration, which makes the objective
//! time-varying; the swarm bulletin is reset each iteration accordingly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SchedulingError;
use crate::afsa::{self, distance, ArtificialFish, Bounds, FishId, Objective, SwarmParams, SwarmState};
use crate::gridsim::{GridSim, Gridlet, JobId, JobStats, ResourceId, ResourceSpec};

pub const DEFAULT_EPSILON: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FishState {
    Swimming,
    Dispatched,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanvasFish {
    pub fish: ArtificialFish,
    pub state: FishState,
    pub dispatched_to: Option<ResourceId>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Anchor {
    id: ResourceId,
    x: f64,
    y: f64,
    factor: f64,
}

/// Load-weighted distance field over the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct CanvasField {
    anchors: Vec<Anchor>,
}

impl CanvasField {
    /// `loads[i]` is the pending MI of `resources[i]`.
    pub fn new(resources: &[ResourceSpec], loads: &[f64]) -> Result<Self, SchedulingError> {
        let anchors = resources
            .iter()
            .zip(loads.iter().copied().chain(std::iter::repeat(0.0)))
            .map(|(r, load)| {
                let p = r
                    .plane_position
                    .ok_or_else(|| SchedulingError::MissingPlanePosition(r.name.clone()))?;
                Ok(Anchor {
                    id: r.id,
                    x: p.x as f64,
                    y: p.y as f64,
                    factor: 1.0 + load / r.total_rating(),
                })
            })
            .collect::<Result<_, SchedulingError>>()?;
        Ok(Self { anchors })
    }

    /// Objective value and the resource whose basin contains `p`.
    pub fn basin(&self, p: &[f64]) -> Option<(ResourceId, f64)> {
        self.anchors
            .iter()
            .map(|a| (a.id, distance(p, &[a.x, a.y]) * a.factor))
            .fold(None, |best, cur| match best {
                Some((_, v)) if v <= cur.1 => best,
                _ => Some(cur),
            })
    }
}

impl Objective for CanvasField {
    fn dimension(&self) -> usize {
        2
    }

    fn evaluate(&self, position: &[f64]) -> f64 {
        self.basin(position).map_or(0.0, |(_, v)| v)
    }
}

pub fn canvas_objective(position: &[f64], resources: &[ResourceSpec], loads: &[f64]) -> Result<f64, SchedulingError> {
    Ok(CanvasField::new(resources, loads)?.evaluate(position))
}

/// Nearest resource strictly within `epsilon` of a swimming fish; ties go to
/// the lower resource id.
pub fn dispatch_on_convergence(fish: &CanvasFish, resources: &[ResourceSpec], epsilon: f64) -> Option<ResourceId> {
    if fish.state != FishState::Swimming {
        return None;
    }
    resources
        .iter()
        .filter_map(|r| {
            let p = r.plane_position?;
            let d = distance(&fish.fish.position, &[p.x as f64, p.y as f64]);
            (d < epsilon).then_some((d, r.id))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
}

/// Plane bounds `[0, width] × [0, height]`.
pub fn plane_bounds(width: f64, height: f64) -> Vec<Bounds> {
    vec![Bounds::new(0.0, width), Bounds::new(0.0, height)]
}

#[derive(Debug, Clone)]
struct Task {
    gridlet: Gridlet,
    fish: FishId,
}

/// One canvas-mode run: swimming swarm, dispatched history, and the grid.
#[derive(Debug, Clone)]
pub struct CanvasRun {
    params: SwarmParams,
    epsilon: f64,
    tick: f64,
    swarm: SwarmState,
    settled: Vec<CanvasFish>,
    tasks: BTreeMap<JobId, Task>,
    sim: GridSim,
    resources: Vec<ResourceSpec>,
    completed_seen: usize,
}

impl CanvasRun {
    /// `params.bounds` must be the 2-D plane; every resource needs a plane position.
    pub fn new(
        params: SwarmParams,
        resources: Vec<ResourceSpec>,
        epsilon: f64,
        tick: f64,
        seed: u64,
    ) -> Result<Self, SchedulingError> {
        params.validate()?;
        if params.dimension() != 2 {
            return Err(afsa::SwarmError::DimensionMismatch {
                objective: 2,
                bounds: params.dimension(),
            }
            .into());
        }
        let sim = GridSim::new(resources.clone())?;
        let resources: Vec<ResourceSpec> = sim.resources().cloned().collect();
        CanvasField::new(&resources, &[])?;
        Ok(Self {
            params,
            epsilon,
            tick,
            swarm: SwarmState::empty(seed),
            settled: Vec::new(),
            tasks: BTreeMap::new(),
            sim,
            resources,
            completed_seen: 0,
        })
    }

    pub fn params(&self) -> &SwarmParams {
        &self.params
    }

    pub fn set_params(&mut self, params: SwarmParams) -> Result<(), SchedulingError> {
        params.validate()?;
        self.params = params;
        Ok(())
    }

    pub fn swarm(&self) -> &SwarmState {
        &self.swarm
    }

    pub fn sim(&self) -> &GridSim {
        &self.sim
    }

    pub fn resources(&self) -> &[ResourceSpec] {
        &self.resources
    }

    pub fn iteration(&self) -> u64 {
        self.swarm.iteration
    }

    pub fn next_job_id(&self) -> JobId {
        JobId(self.tasks.keys().next_back().map_or(0, |j| j.0 + 1))
    }

    pub fn task_of(&self, fish: FishId) -> Option<&Gridlet> {
        self.tasks.values().find(|t| t.fish == fish).map(|t| &t.gridlet)
    }

    fn field(&self) -> CanvasField {
        let loads: Vec<f64> = self.resources.iter().map(|r| self.sim.pending_mi(r.id)).collect();
        CanvasField::new(&self.resources, &loads).expect("plane positions checked at construction")
    }

    /// Adds a task-carrying fish; `position` is clamped into the plane, or
    /// drawn uniformly when absent.
    pub fn add_task(&mut self, gridlet: Gridlet, position: Option<[f64; 2]>) -> Result<FishId, SchedulingError> {
        gridlet.validate()?;
        if self.tasks.contains_key(&gridlet.id) {
            return Err(crate::gridsim::GridError::DuplicateJob(gridlet.id).into());
        }
        let field = self.field();
        let id = match position {
            Some(p) => self
                .swarm
                .spawn_at(p.to_vec(), Some(gridlet.id.0), &self.params, &field)?,
            None => {
                let id = self.swarm.spawn_random(&self.params, &field);
                let slot = self.swarm.fish.last_mut().expect("just spawned");
                slot.task_ref = Some(gridlet.id.0);
                id
            }
        };
        self.tasks.insert(gridlet.id, Task { gridlet, fish: id });
        Ok(id)
    }

    /// Removes a swimming fish together with its task. Settled fish stay.
    pub fn remove_fish(&mut self, id: FishId) -> Result<ArtificialFish, RemoveError> {
        if self.settled.iter().any(|c| c.fish.id == id) {
            return Err(RemoveError::Dispatched(id));
        }
        let fish = self.swarm.remove(id).ok_or(RemoveError::Unknown(id))?;
        if let Some(job) = fish.task_ref {
            self.tasks.remove(&JobId(job));
        }
        Ok(fish)
    }

    /// Every fish, swimming first then settled, each group in id order.
    pub fn fish(&self) -> Vec<CanvasFish> {
        let mut out: Vec<CanvasFish> = self
            .swarm
            .fish
            .iter()
            .map(|f| CanvasFish {
                fish: f.clone(),
                state: FishState::Swimming,
                dispatched_to: None,
            })
            .collect();
        let mut settled = self.settled.clone();
        settled.sort_by_key(|c| c.fish.id);
        out.extend(settled);
        out
    }

    pub fn swimming_count(&self) -> usize {
        self.swarm.fish.len()
    }

    pub fn dispatched_count(&self) -> usize {
        self.settled.len()
    }

    /// One interleaved iteration: refresh loads, move the swarm, dispatch
    /// converged fish, then advance the grid by one tick. Returns the jobs
    /// completed during the tick.
    pub fn step(&mut self) -> Vec<JobStats> {
        let field = self.field();
        self.swarm.reevaluate(&field);
        afsa::step_iteration(&mut self.swarm, &self.params, &field);

        let now = self.sim.clock();
        let ready: Vec<(FishId, ResourceId)> = self
            .swarm
            .fish
            .iter()
            .filter_map(|f| {
                let probe = CanvasFish {
                    fish: f.clone(),
                    state: FishState::Swimming,
                    dispatched_to: None,
                };
                dispatch_on_convergence(&probe, &self.resources, self.epsilon).map(|r| (f.id, r))
            })
            .collect();
        for (fish_id, resource) in ready {
            let fish = self.swarm.remove(fish_id).expect("ready fish is swimming");
            if let Some(job) = fish.task_ref.and_then(|j| self.tasks.get(&JobId(j))) {
                let mut gridlet = job.gridlet.clone();
                gridlet.submit_time = now;
                self.sim
                    .submit(gridlet, resource)
                    .expect("task ids are unique and resources valid");
            }
            self.settled.push(CanvasFish {
                fish,
                state: FishState::Dispatched,
                dispatched_to: Some(resource),
            });
        }

        self.sim.run_until(now + self.tick);
        let fresh = self.sim.completed()[self.completed_seen..].to_vec();
        self.completed_seen = self.sim.completed().len();
        for stats in &fresh {
            if let Some(c) = self
                .settled
                .iter_mut()
                .find(|c| c.fish.task_ref == Some(stats.job_id.0))
            {
                c.state = FishState::Completed;
            }
        }
        fresh
    }

    /// Finishes every job already in the grid; returns newly completed stats.
    pub fn drain(&mut self) -> Vec<JobStats> {
        self.sim.run_until_idle();
        let fresh = self.sim.completed()[self.completed_seen..].to_vec();
        self.completed_seen = self.sim.completed().len();
        for stats in &fresh {
            if let Some(c) = self
                .settled
                .iter_mut()
                .find(|c| c.fish.task_ref == Some(stats.job_id.0))
            {
                c.state = FishState::Completed;
            }
        }
        fresh
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RemoveError {
    #[error("unknown fish {0}")]
    Unknown(FishId),
    #[error("fish {0} is already dispatched")]
    Dispatched(FishId),
}
