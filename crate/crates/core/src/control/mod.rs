//! Live sessions.
//!
//! A [`Session`] owns one swarm, one grid, and the scheduler tying them
//! together. It is driven by [`Command`]s and by [`Session::tick`] while
//! running, and reports progress as [`EventMsg`]s. Commands only ever take
//! effect between iterations, so `(config, seed, command log)` determines
//! every snapshot; see [`replay`].

mod replay;
pub mod wire;

use std::num::NonZeroU32;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::afsa::{Bulletin, FishId, VisionDraw};
use crate::config::{ConfigError, Mode, Plan, SessionConfig};
use crate::dispatcher::TaskCoordinates;
use crate::gridsim::{GridSim, Gridlet, JobId, JobStats, Policy, ResourceId, StatsReport};
use crate::rng::{StreamTag, Substream};
use crate::scheduling::canvas::{plane_bounds, CanvasRun, FishState, RemoveError};
use crate::scheduling::{Assignment, OptimizerRun, ScheduleProblem};

pub use replay::{replay, replay_with, CommandLog, LogEntry, ReplayError};

/// Number of most recent completed jobs carried in a snapshot.
pub const COMPLETED_TAIL: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(pub String);

impl std::fmt::Display for SessionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Partial swarm parameter update; absent fields keep their value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwarmOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub try_number: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vision_draw: Option<VisionDraw>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    Configure {
        config: Box<SessionConfig>,
    },
    Start,
    Pause,
    Step {
        n: NonZeroU32,
    },
    AddFish {
        task_name: String,
        keywords: Vec<String>,
        field: String,
    },
    RemoveFish {
        fish: FishId,
    },
    SetParams {
        params: SwarmOverrides,
    },
    SnapshotRequest,
    Reset,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Configure { .. } => "configure",
            Command::Start => "start",
            Command::Pause => "pause",
            Command::Step { .. } => "step",
            Command::AddFish { .. } => "add_fish",
            Command::RemoveFish { .. } => "remove_fish",
            Command::SetParams { .. } => "set_params",
            Command::SnapshotRequest => "snapshot_request",
            Command::Reset => "reset",
        }
    }

    pub fn step(n: u32) -> Option<Self> {
        NonZeroU32::new(n).map(|n| Command::Step { n })
    }
}

/// Externally tagged twin of [`Command`] used by the wire decoder.
#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum CommandBody {
    Configure {
        config: Box<SessionConfig>,
    },
    Start {},
    Pause {},
    Step {
        n: NonZeroU32,
    },
    AddFish {
        task_name: String,
        keywords: Vec<String>,
        field: String,
    },
    RemoveFish {
        fish: FishId,
    },
    SetParams {
        params: SwarmOverrides,
    },
    SnapshotRequest {},
    Reset {},
}

impl From<CommandBody> for Command {
    fn from(b: CommandBody) -> Self {
        match b {
            CommandBody::Configure { config } => Command::Configure { config },
            CommandBody::Start {} => Command::Start,
            CommandBody::Pause {} => Command::Pause,
            CommandBody::Step { n } => Command::Step { n },
            CommandBody::AddFish {
                task_name,
                keywords,
                field,
            } => Command::AddFish {
                task_name,
                keywords,
                field,
            },
            CommandBody::RemoveFish { fish } => Command::RemoveFish { fish },
            CommandBody::SetParams { params } => Command::SetParams { params },
            CommandBody::SnapshotRequest {} => Command::SnapshotRequest,
            CommandBody::Reset {} => Command::Reset,
        }
    }
}

impl wire::WireDecode for Command {
    fn from_object(map: serde_json::Map<String, serde_json::Value>) -> Result<Self, wire::WireError> {
        wire::tagged::<CommandBody>(map).map(Command::from)
    }
}

macro_rules! plain_wire {
    ($($t:ty),*) => {
        $(impl wire::WireDecode for $t {
            fn from_object(map: serde_json::Map<String, serde_json::Value>) -> Result<Self, wire::WireError> {
                wire::plain(map)
            }
        })*
    };
}

plain_wire!(Snapshot, CommandLog, SessionConfig);

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum EventBody {
    Snapshot { snapshot: Box<Snapshot> },
    JobCompleted { stats: JobStats },
    RunFinished { summary: RunSummary },
    Error { code: String, message: String },
}

impl wire::WireDecode for EventMsg {
    fn from_object(map: serde_json::Map<String, serde_json::Value>) -> Result<Self, wire::WireError> {
        Ok(match wire::tagged::<EventBody>(map)? {
            EventBody::Snapshot { snapshot } => EventMsg::Snapshot { snapshot },
            EventBody::JobCompleted { stats } => EventMsg::JobCompleted { stats },
            EventBody::RunFinished { summary } => EventMsg::RunFinished { summary },
            EventBody::Error { code, message } => EventMsg::Error { code, message },
        })
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum AckBody {
    Ack {
        command: String,
        iteration: u64,
        #[serde(default)]
        fish: Option<FishId>,
        #[serde(default)]
        position: Option<Vec<f64>>,
    },
}

impl wire::WireDecode for Ack {
    fn from_object(map: serde_json::Map<String, serde_json::Value>) -> Result<Self, wire::WireError> {
        let AckBody::Ack {
            command,
            iteration,
            fish,
            position,
        } = wire::tagged::<AckBody>(map)?;
        Ok(Ack {
            command,
            iteration,
            fish,
            position,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FishView {
    pub id: FishId,
    pub position: Vec<f64>,
    pub fitness: f64,
    pub task_ref: Option<u64>,
    pub state: FishState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispatched_to: Option<ResourceId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceView {
    pub id: ResourceId,
    pub name: String,
    pub plane_position: Option<TaskCoordinates>,
    pub policy: Policy,
    pub running: usize,
    pub queued_mi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub session: SessionId,
    pub mode: Mode,
    pub running: bool,
    pub iteration: u64,
    pub clock: f64,
    pub fish: Vec<FishView>,
    pub resources: Vec<ResourceView>,
    pub bulletin: Option<Bulletin>,
    /// Optimizer mode: decoded bulletin best.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_assignment: Option<Assignment>,
    /// Most recent completed jobs, oldest first.
    pub completed: Vec<JobStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    pub iterations: u64,
    pub best_fitness: Option<f64>,
    pub makespan: f64,
    pub jobs_completed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventMsg {
    Snapshot { snapshot: Box<Snapshot> },
    JobCompleted { stats: JobStats },
    RunFinished { summary: RunSummary },
    Error { code: String, message: String },
}

impl From<&CommandError> for EventMsg {
    fn from(e: &CommandError) -> Self {
        EventMsg::Error {
            code: e.code().to_string(),
            message: e.to_string(),
        }
    }
}

/// Reply to an accepted command.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename = "ack")]
pub struct Ack {
    pub command: String,
    pub iteration: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fish: Option<FishId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown fish {0}")]
    UnknownFish(FishId),
    #[error("fish {0} is dispatched and cannot be removed")]
    FishDispatched(FishId),
    #[error("{0}")]
    Dispatcher(String),
    #[error("{0}")]
    Invalid(String),
    #[error("run finished at iteration {0}; raise iterations or reset")]
    Finished(u64),
}

impl CommandError {
    pub fn code(&self) -> &'static str {
        match self {
            CommandError::Config(_) => "invalid_config",
            CommandError::UnknownFish(_) => "unknown_fish",
            CommandError::FishDispatched(_) => "fish_dispatched",
            CommandError::Dispatcher(_) => "dispatcher",
            CommandError::Invalid(_) => "invalid_command",
            CommandError::Finished(_) => "finished",
        }
    }
}

struct OptimizerEngine {
    run: OptimizerRun,
    /// Simulation of the best assignment, once the run has finished.
    outcome: Option<GridSim>,
}

struct CanvasEngine {
    run: CanvasRun,
    next_job: u64,
}

enum Engine {
    Optimizer(Box<OptimizerEngine>),
    Canvas(Box<CanvasEngine>),
}

/// One live session. Single writer; see the module docs.
pub struct Session {
    id: SessionId,
    explicit_seed: Option<u64>,
    base_dir: PathBuf,
    config: SessionConfig,
    plan: Plan,
    engine: Engine,
    running: bool,
    finished: bool,
    log: Vec<LogEntry>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("id", &self.id)
            .field("iteration", &self.iteration())
            .field("running", &self.running)
            .finish()
    }
}

impl Session {
    /// Builds a paused session at iteration 0. `base_dir` resolves relative
    /// dispatcher paths.
    pub fn create(
        id: SessionId,
        config: SessionConfig,
        seed: Option<u64>,
        base_dir: &Path,
    ) -> Result<Self, ConfigError> {
        let plan = config.validate(seed, base_dir)?;
        let engine = build_engine(&plan)?;
        Ok(Self {
            id,
            explicit_seed: seed,
            base_dir: base_dir.to_path_buf(),
            config,
            plan,
            engine,
            running: false,
            finished: false,
            log: Vec::new(),
        })
    }

    pub fn id(&self) -> &SessionId {
        &self.id
    }

    pub fn seed(&self) -> u64 {
        self.plan.seed
    }

    pub fn explicit_seed(&self) -> Option<u64> {
        self.explicit_seed
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn is_running(&self) -> bool {
        self.running
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn iteration(&self) -> u64 {
        match &self.engine {
            Engine::Optimizer(e) => e.run.swarm().iteration,
            Engine::Canvas(e) => e.run.iteration(),
        }
    }

    fn max_iterations(&self) -> u64 {
        self.plan.swarm.iterations as u64
    }

    /// Full command log with the session's creation inputs.
    pub fn command_log(&self) -> CommandLog {
        CommandLog {
            seed: self.explicit_seed,
            config: self.config.clone(),
            entries: self.log.clone(),
        }
    }

    /// Applies one command between iterations. Invalid commands change nothing.
    pub fn apply(&mut self, command: Command) -> Result<(Ack, Vec<EventMsg>), CommandError> {
        let at = self.iteration();
        let mut events = Vec::new();
        let mut ack = Ack {
            command: command.name().to_string(),
            iteration: at,
            fish: None,
            position: None,
        };
        match &command {
            Command::Configure { config } => {
                let plan = config.validate(self.explicit_seed, &self.base_dir)?;
                self.engine = build_engine(&plan)?;
                self.plan = plan;
                self.config = (**config).clone();
                self.running = false;
                self.finished = false;
                events.push(self.snapshot_event());
            }
            Command::Reset => {
                self.engine = build_engine(&self.plan)?;
                self.running = false;
                self.finished = false;
                events.push(self.snapshot_event());
            }
            Command::Start => {
                if self.iteration() >= self.max_iterations() {
                    return Err(CommandError::Finished(self.iteration()));
                }
                self.running = true;
            }
            Command::Pause => self.running = false,
            Command::Step { n } => {
                for _ in 0..n.get() {
                    events.extend(self.advance());
                }
            }
            Command::AddFish {
                task_name,
                keywords,
                field,
            } => {
                let (id, position) = self.add_fish(task_name, keywords, field)?;
                ack.fish = Some(id);
                ack.position = Some(position);
                events.push(self.snapshot_event());
            }
            Command::RemoveFish { fish } => {
                self.remove_fish(*fish)?;
                events.push(self.snapshot_event());
            }
            Command::SetParams { params } => {
                self.set_params(params)?;
                events.push(self.snapshot_event());
            }
            Command::SnapshotRequest => events.push(self.snapshot_event()),
        }
        if !matches!(command, Command::SnapshotRequest) {
            self.log.push(LogEntry { at, command });
        }
        Ok((ack, events))
    }

    /// Advances one iteration if running; stops at the iteration budget.
    pub fn tick(&mut self) -> Vec<EventMsg> {
        if !self.running {
            return Vec::new();
        }
        if self.iteration() >= self.max_iterations() {
            self.running = false;
            return Vec::new();
        }
        let events = self.advance();
        if self.iteration() >= self.max_iterations() {
            self.running = false;
        }
        events
    }

    fn advance(&mut self) -> Vec<EventMsg> {
        let mut events = Vec::new();
        match &mut self.engine {
            Engine::Optimizer(e) => e.run.step(),
            Engine::Canvas(e) => {
                for stats in e.run.step() {
                    events.push(EventMsg::JobCompleted { stats });
                }
            }
        }
        if !self.finished && self.iteration() >= self.max_iterations() {
            self.finished = true;
            self.running = false;
            events.extend(self.finish());
        }
        events.push(self.snapshot_event());
        events
    }

    /// Runs the grid to completion for the current outcome.
    fn finish(&mut self) -> Vec<EventMsg> {
        let mut events = Vec::new();
        let iterations = self.iteration();
        let (best_fitness, report) = match &mut self.engine {
            Engine::Optimizer(e) => {
                let Some((assignment, fitness)) = e.run.best() else {
                    return events;
                };
                let problem = e.run.problem();
                let mut sim = GridSim::new(problem.resources.clone()).expect("validated resources");
                for (job, r) in problem.jobs.iter().zip(&assignment.0) {
                    sim.submit(job.clone(), ResourceId(*r)).expect("fresh simulator");
                }
                sim.run_until_idle();
                for stats in sim.completed() {
                    events.push(EventMsg::JobCompleted { stats: stats.clone() });
                }
                let report = StatsReport::new(sim.completed());
                e.outcome = Some(sim);
                (Some(fitness), report)
            }
            Engine::Canvas(e) => {
                for stats in e.run.drain() {
                    events.push(EventMsg::JobCompleted { stats });
                }
                (e.run.swarm().best_fitness(), StatsReport::new(e.run.sim().completed()))
            }
        };
        events.push(EventMsg::RunFinished {
            summary: RunSummary {
                iterations,
                best_fitness,
                makespan: report.makespan(),
                jobs_completed: report.jobs.len(),
            },
        });
        events
    }

    fn add_fish(
        &mut self,
        task_name: &str,
        keywords: &[String],
        field: &str,
    ) -> Result<(FishId, Vec<f64>), CommandError> {
        match &mut self.engine {
            Engine::Optimizer(e) => {
                let id = e.run.add_candidate();
                let position = e.run.swarm().get(id).map(|f| f.position.clone()).unwrap_or_default();
                Ok((id, position))
            }
            Engine::Canvas(e) => {
                if self.plan.fields.is_empty() {
                    return Err(CommandError::Dispatcher("no dispatcher fields configured".into()));
                }
                let item = self
                    .plan
                    .fields
                    .make_item(task_name, field, keywords, self.plan.keyword_mode)
                    .map_err(|err| CommandError::Dispatcher(err.to_string()))?;
                let coords = self
                    .plan
                    .fields
                    .locate(&item)
                    .map_err(|err| CommandError::Dispatcher(err.to_string()))?;
                let id = e.next_job;
                let mut rng = Substream::derive(self.plan.seed, e.run.iteration(), id, StreamTag::Jobs);
                let gridlet = Gridlet {
                    id: JobId(id),
                    owner: crate::gridsim::UserId(0),
                    length: self.plan.grid.template.draw(&mut rng),
                    submit_time: 0.0,
                    coordinates: Some(coords),
                };
                let fish = e
                    .run
                    .add_task(gridlet, Some([coords.x as f64, coords.y as f64]))
                    .map_err(|err| CommandError::Invalid(err.to_string()))?;
                e.next_job += 1;
                let position = e.run.swarm().get(fish).map(|f| f.position.clone()).unwrap_or_default();
                Ok((fish, position))
            }
        }
    }

    fn remove_fish(&mut self, id: FishId) -> Result<(), CommandError> {
        match &mut self.engine {
            Engine::Optimizer(e) => e
                .run
                .remove_candidate(id)
                .map(|_| ())
                .ok_or(CommandError::UnknownFish(id)),
            Engine::Canvas(e) => e.run.remove_fish(id).map(|_| ()).map_err(|err| match err {
                RemoveError::Unknown(id) => CommandError::UnknownFish(id),
                RemoveError::Dispatched(id) => CommandError::FishDispatched(id),
            }),
        }
    }

    fn set_params(&mut self, o: &SwarmOverrides) -> Result<(), CommandError> {
        let mut swarm = self.plan.swarm.clone();
        if let Some(v) = o.visual {
            swarm.visual = v;
        }
        if let Some(v) = o.step {
            swarm.step = v;
        }
        if let Some(v) = o.try_number {
            swarm.try_number = v;
        }
        if let Some(v) = o.delta {
            swarm.delta = v;
        }
        if let Some(v) = o.population {
            swarm.population = v;
        }
        if let Some(v) = o.iterations {
            swarm.iterations = v;
        }
        if let Some(v) = o.vision_draw {
            swarm.vision_draw = v;
        }
        let result = match &mut self.engine {
            Engine::Optimizer(e) => e.run.set_params(swarm.params(Vec::new())),
            Engine::Canvas(e) => {
                let bounds = e.run.params().bounds.clone();
                e.run.set_params(swarm.params(bounds))
            }
        };
        result.map_err(|err| CommandError::Invalid(err.to_string()))?;
        self.plan.swarm = swarm.clone();
        self.config.swarm = swarm;
        if self.iteration() < self.max_iterations() {
            self.finished = false;
        }
        Ok(())
    }

    fn snapshot_event(&self) -> EventMsg {
        EventMsg::Snapshot {
            snapshot: Box::new(self.snapshot()),
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        let (fish, bulletin, best_assignment, sim) = match &self.engine {
            Engine::Optimizer(e) => {
                let fish = e
                    .run
                    .swarm()
                    .fish
                    .iter()
                    .map(|f| FishView {
                        id: f.id,
                        position: f.position.clone(),
                        fitness: f.fitness,
                        task_ref: f.task_ref,
                        state: FishState::Swimming,
                        dispatched_to: None,
                    })
                    .collect();
                (
                    fish,
                    e.run.swarm().bulletin.clone(),
                    e.run.best().map(|(a, _)| a),
                    e.outcome.as_ref(),
                )
            }
            Engine::Canvas(e) => {
                let fish = e
                    .run
                    .fish()
                    .into_iter()
                    .map(|c| FishView {
                        id: c.fish.id,
                        position: c.fish.position,
                        fitness: c.fish.fitness,
                        task_ref: c.fish.task_ref,
                        state: c.state,
                        dispatched_to: c.dispatched_to,
                    })
                    .collect();
                (fish, e.run.swarm().bulletin.clone(), None, Some(e.run.sim()))
            }
        };
        let resources = self
            .plan
            .grid
            .resources
            .iter()
            .map(|r| ResourceView {
                id: r.id,
                name: r.name.clone(),
                plane_position: r.plane_position,
                policy: r.policy,
                running: sim.map_or(0, |s| s.running_count(r.id)),
                queued_mi: sim.map_or(0.0, |s| s.pending_mi(r.id)),
            })
            .collect();
        let completed = sim.map_or_else(Vec::new, |s| {
            let all = s.completed();
            all[all.len().saturating_sub(COMPLETED_TAIL)..].to_vec()
        });
        Snapshot {
            session: self.id.clone(),
            mode: self.plan.mode,
            running: self.running,
            iteration: self.iteration(),
            clock: sim.map_or(0.0, GridSim::clock),
            fish,
            resources,
            bulletin,
            best_assignment,
            completed,
        }
    }

    /// Stats report over every job completed so far.
    pub fn stats_report(&self) -> StatsReport {
        match &self.engine {
            Engine::Optimizer(e) => e
                .outcome
                .as_ref()
                .map(|s| StatsReport::new(s.completed()))
                .unwrap_or_default(),
            Engine::Canvas(e) => StatsReport::new(e.run.sim().completed()),
        }
    }

    /// Bulletin fitness, if any fish has been evaluated.
    pub fn best_fitness(&self) -> Option<f64> {
        match &self.engine {
            Engine::Optimizer(e) => e.run.swarm().best_fitness(),
            Engine::Canvas(e) => e.run.swarm().best_fitness(),
        }
    }

    /// Optimizer mode: the scheduling problem and per-iteration history.
    pub fn optimizer(&self) -> Option<(&ScheduleProblem, &[f64])> {
        match &self.engine {
            Engine::Optimizer(e) => Some((e.run.problem(), e.run.history())),
            Engine::Canvas(_) => None,
        }
    }
}

fn build_engine(plan: &Plan) -> Result<Engine, ConfigError> {
    let gridlets = plan.grid.gridlets(plan.seed);
    match plan.mode {
        Mode::Optimizer => {
            let problem = ScheduleProblem::new(gridlets, plan.grid.resources.clone())
                .map_err(|e| ConfigError::single("grid", e.to_string()))?;
            let run = OptimizerRun::new(problem, plan.swarm.params(Vec::new()), plan.seed)
                .map_err(|e| ConfigError::single("swarm", e.to_string()))?;
            Ok(Engine::Optimizer(Box::new(OptimizerEngine { run, outcome: None })))
        }
        Mode::Canvas => {
            let params = plan.swarm.params(plane_bounds(plan.plane.width, plan.plane.height));
            let mut run = CanvasRun::new(params, plan.grid.resources.clone(), plan.epsilon, plan.tick, plan.seed)
                .map_err(|e| ConfigError::single("scheduling", e.to_string()))?;
            let mut next_job = 0;
            for g in gridlets {
                next_job = g.id.0 + 1;
                run.add_task(g, None)
                    .map_err(|e| ConfigError::single("grid", e.to_string()))?;
            }
            for (item, coords) in &plan.items {
                let mut rng = Substream::derive(plan.seed, 0, next_job, StreamTag::Jobs);
                let g = Gridlet {
                    id: JobId(next_job),
                    owner: crate::gridsim::UserId(0),
                    length: plan.grid.template.draw(&mut rng),
                    submit_time: 0.0,
                    coordinates: Some(*coords),
                };
                run.add_task(g, Some([coords.x as f64, coords.y as f64]))
                    .map_err(|e| ConfigError::single("dispatcher", format!("{}: {e}", item.name)))?;
                next_job += 1;
            }
            Ok(Engine::Canvas(Box::new(CanvasEngine { run, next_job })))
        }
    }
}
