use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use super::{GridError, Gridlet, JobId, JobStats, Policy, ResourceId, ResourceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    JobArrival {
        job: JobId,
        resource: ResourceId,
    },
    /// Under time sharing this is a projection; it is dropped if the
    /// resource was rescheduled after it was issued.
    JobCompletion {
        job: JobId,
        resource: ResourceId,
        generation: u64,
    },
    /// Runs the resource's allocation policy.
    Reschedule {
        resource: ResourceId,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
}

impl Eq for SimEvent {}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct WaitKey {
    submit: f64,
    job: JobId,
}

impl Eq for WaitKey {}

impl Ord for WaitKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.submit.total_cmp(&other.submit).then(self.job.cmp(&other.job))
    }
}

impl PartialOrd for WaitKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
struct JobRecord {
    gridlet: Gridlet,
    resource: ResourceId,
    start: Option<f64>,
    finished: bool,
    /// Time-shared only: MI still to execute as of `last_update`.
    remaining: f64,
    /// Space-shared only: PE index while running.
    pe: Option<usize>,
}

#[derive(Debug, Clone)]
struct ResourceRuntime {
    spec: ResourceSpec,
    ratings: Vec<f64>,
    total_rating: f64,
    pe_jobs: Vec<Option<JobId>>,
    waiting: BTreeSet<WaitKey>,
    residents: BTreeSet<JobId>,
    arrived: Vec<JobId>,
    last_update: f64,
    generation: u64,
    reschedule_pending: bool,
}

impl ResourceRuntime {
    fn running(&self) -> usize {
        match self.spec.policy {
            Policy::SpaceShared => self.pe_jobs.iter().filter(|j| j.is_some()).count(),
            Policy::TimeShared => self.residents.len(),
        }
    }
}

/// Finish tolerance for time-shared residents, relative to job length.
const FINISH_TOLERANCE: f64 = 1e-9;

/// Single-threaded grid simulation instance.
#[derive(Debug, Clone)]
pub struct GridSim {
    clock: f64,
    seq: u64,
    pending: BinaryHeap<Reverse<SimEvent>>,
    resources: Vec<ResourceRuntime>,
    jobs: BTreeMap<JobId, JobRecord>,
    completed: Vec<JobStats>,
}

impl GridSim {
    pub fn new(resources: Vec<ResourceSpec>) -> Result<Self, GridError> {
        if resources.is_empty() {
            return Err(GridError::NoResources);
        }
        let mut runtimes = Vec::with_capacity(resources.len());
        for (i, mut spec) in resources.into_iter().enumerate() {
            spec.validate()?;
            spec.id = ResourceId(i);
            let ratings: Vec<f64> = spec.pe_ratings().collect();
            runtimes.push(ResourceRuntime {
                total_rating: ratings.iter().sum(),
                pe_jobs: vec![None; ratings.len()],
                ratings,
                spec,
                waiting: BTreeSet::new(),
                residents: BTreeSet::new(),
                arrived: Vec::new(),
                last_update: 0.0,
                generation: 0,
                reschedule_pending: false,
            });
        }
        Ok(Self {
            clock: 0.0,
            seq: 0,
            pending: BinaryHeap::new(),
            resources: runtimes,
            jobs: BTreeMap::new(),
            completed: Vec::new(),
        })
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn resources(&self) -> impl Iterator<Item = &ResourceSpec> {
        self.resources.iter().map(|r| &r.spec)
    }

    pub fn resource(&self, id: ResourceId) -> Option<&ResourceSpec> {
        self.resources.get(id.0).map(|r| &r.spec)
    }

    pub fn resource_count(&self) -> usize {
        self.resources.len()
    }

    /// Completed jobs in completion order.
    pub fn completed(&self) -> &[JobStats] {
        &self.completed
    }

    pub fn submitted_count(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_idle(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn next_event_time(&self) -> Option<f64> {
        self.pending.peek().map(|Reverse(e)| e.time)
    }

    /// Jobs currently holding a PE (space-shared) or sharing the resource.
    pub fn running_count(&self, id: ResourceId) -> usize {
        self.resources.get(id.0).map_or(0, ResourceRuntime::running)
    }

    /// MI not yet executed for jobs arrived at or assigned to the resource.
    pub fn pending_mi(&self, id: ResourceId) -> f64 {
        let Some(r) = self.resources.get(id.0) else {
            return 0.0;
        };
        let mut total = 0.0;
        for rec in self.jobs.values() {
            if rec.resource != id || rec.finished {
                continue;
            }
            total += match (r.spec.policy, rec.start, rec.pe) {
                (Policy::SpaceShared, Some(start), Some(pe)) => {
                    (rec.gridlet.length - (self.clock - start) * r.ratings[pe]).max(0.0)
                }
                (Policy::TimeShared, Some(_), _) => {
                    let share = r.total_rating / r.residents.len().max(1) as f64;
                    (rec.remaining - (self.clock - r.last_update) * share).max(0.0)
                }
                _ => rec.gridlet.length,
            };
        }
        total
    }

    /// Enqueues the job's arrival at `max(clock, submit_time)`.
    pub fn submit(&mut self, job: Gridlet, resource: ResourceId) -> Result<(), GridError> {
        job.validate()?;
        if resource.0 >= self.resources.len() {
            return Err(GridError::UnknownResource(resource));
        }
        if self.jobs.contains_key(&job.id) {
            return Err(GridError::DuplicateJob(job.id));
        }
        let at = self.clock.max(job.submit_time);
        let id = job.id;
        self.jobs.insert(
            id,
            JobRecord {
                remaining: job.length,
                gridlet: job,
                resource,
                start: None,
                finished: false,
                pe: None,
            },
        );
        self.schedule(at, EventKind::JobArrival { job: id, resource });
        Ok(())
    }

    fn schedule(&mut self, time: f64, kind: EventKind) {
        let seq = self.seq;
        self.seq += 1;
        self.pending.push(Reverse(SimEvent { time, seq, kind }));
    }

    fn request_reschedule(&mut self, resource: ResourceId) {
        if !self.resources[resource.0].reschedule_pending {
            self.resources[resource.0].reschedule_pending = true;
            self.schedule(self.clock, EventKind::Reschedule { resource });
        }
    }

    /// Processes the earliest pending event. `None` means idle.
    pub fn step_event(&mut self) -> Option<SimEvent> {
        let Reverse(event) = self.pending.pop()?;
        debug_assert!(event.time >= self.clock, "event scheduled in the past");
        self.clock = event.time;
        match event.kind {
            EventKind::JobArrival { job, resource } => self.on_arrival(job, resource),
            EventKind::JobCompletion {
                job,
                resource,
                generation,
            } => self.on_completion(job, resource, generation),
            EventKind::Reschedule { resource } => self.on_reschedule(resource),
        }
        debug_assert!(self.capacity_respected());
        Some(event)
    }

    /// Space-shared resources never run more jobs than they have PEs.
    pub fn capacity_respected(&self) -> bool {
        self.resources
            .iter()
            .all(|r| r.running() <= r.ratings.len() || r.spec.policy == Policy::TimeShared)
    }

    pub fn run_until_idle(&mut self) -> &[JobStats] {
        while self.step_event().is_some() {}
        &self.completed
    }

    /// Processes every event at or before `time`, then sets the clock to `time`.
    pub fn run_until(&mut self, time: f64) {
        while self.next_event_time().is_some_and(|t| t <= time) {
            self.step_event();
        }
        if time > self.clock {
            self.clock = time;
        }
    }

    fn on_arrival(&mut self, job: JobId, resource: ResourceId) {
        let rec = &self.jobs[&job];
        let key = WaitKey {
            submit: rec.gridlet.submit_time,
            job,
        };
        let r = &mut self.resources[resource.0];
        match r.spec.policy {
            Policy::SpaceShared => {
                r.waiting.insert(key);
            }
            Policy::TimeShared => r.arrived.push(job),
        }
        self.request_reschedule(resource);
    }

    fn on_reschedule(&mut self, resource: ResourceId) {
        self.resources[resource.0].reschedule_pending = false;
        match self.resources[resource.0].spec.policy {
            Policy::SpaceShared => self.space_shared_dispatch(resource),
            Policy::TimeShared => self.time_shared_reschedule(resource),
        }
    }

    fn on_completion(&mut self, job: JobId, resource: ResourceId, generation: u64) {
        match self.resources[resource.0].spec.policy {
            Policy::SpaceShared => {
                let pe = self
                    .jobs
                    .get_mut(&job)
                    .and_then(|rec| rec.pe.take())
                    .expect("completion for running job");
                self.resources[resource.0].pe_jobs[pe] = None;
                self.record_finish(job);
                self.request_reschedule(resource);
            }
            Policy::TimeShared => {
                if generation == self.resources[resource.0].generation {
                    self.time_shared_reschedule(resource);
                }
            }
        }
    }

    /// FCFS by `(submit_time, job id)`; each job takes the fastest free PE.
    fn space_shared_dispatch(&mut self, resource: ResourceId) {
        loop {
            let r = &mut self.resources[resource.0];
            let Some(pe) = fastest_free(&r.ratings, &r.pe_jobs) else {
                break;
            };
            let Some(key) = r.waiting.pop_first() else {
                break;
            };
            r.pe_jobs[pe] = Some(key.job);
            let rating = r.ratings[pe];
            let rec = self.jobs.get_mut(&key.job).expect("waiting job exists");
            rec.start = Some(self.clock);
            rec.pe = Some(pe);
            let finish = self.clock + rec.gridlet.length / rating;
            self.schedule(
                finish,
                EventKind::JobCompletion {
                    job: key.job,
                    resource,
                    generation: 0,
                },
            );
        }
    }

    /// Processor sharing: advance residents, retire finished ones, admit
    /// arrivals, and project the next completion.
    fn time_shared_reschedule(&mut self, resource: ResourceId) {
        let now = self.clock;
        let r = &mut self.resources[resource.0];
        let elapsed = now - r.last_update;
        if !r.residents.is_empty() && elapsed > 0.0 {
            let share = r.total_rating / r.residents.len() as f64;
            for id in &r.residents {
                let rec = self.jobs.get_mut(id).expect("resident exists");
                rec.remaining -= elapsed * share;
            }
        }
        r.last_update = now;

        let finished: Vec<JobId> = r
            .residents
            .iter()
            .copied()
            .filter(|id| {
                let rec = &self.jobs[id];
                rec.remaining <= FINISH_TOLERANCE * rec.gridlet.length
            })
            .collect();
        for id in &finished {
            r.residents.remove(id);
        }
        for id in r.arrived.drain(..) {
            r.residents.insert(id);
            let rec = self.jobs.get_mut(&id).expect("arrived job exists");
            rec.start = Some(now);
        }
        r.generation += 1;
        let generation = r.generation;
        let next = if r.residents.is_empty() {
            None
        } else {
            let share = r.total_rating / r.residents.len() as f64;
            r.residents
                .iter()
                .map(|id| (self.jobs[id].remaining.max(0.0) / share, *id))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        };
        for id in finished {
            self.record_finish(id);
        }
        if let Some((dt, job)) = next {
            self.schedule(
                now + dt,
                EventKind::JobCompletion {
                    job,
                    resource,
                    generation,
                },
            );
        }
    }

    fn record_finish(&mut self, job: JobId) {
        let rec = self.jobs.get_mut(&job).expect("finished job exists");
        rec.finished = true;
        let start = rec.start.expect("finished job has started");
        let submit = rec.gridlet.submit_time;
        self.completed.push(JobStats {
            job_id: job,
            resource_id: rec.resource,
            submit_time: submit,
            start_time: start,
            finish_time: self.clock,
            waiting_time: start - submit,
            exec_time: self.clock - start,
        });
    }
}

fn fastest_free(ratings: &[f64], pe_jobs: &[Option<JobId>]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, slot) in pe_jobs.iter().enumerate() {
        if slot.is_none() && best.is_none_or(|b| ratings[i] > ratings[b]) {
            best = Some(i);
        }
    }
    best
}
