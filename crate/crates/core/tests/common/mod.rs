//! Wire catalog shared by the golden and acceptance tests: one value per
//! command and event variant, plus where their golden documents live.

use std::path::PathBuf;

use shoal_core::afsa::{Bulletin, FishId, VisionDraw};
use shoal_core::config::{minimal, Mode};
use shoal_core::control::{Command, EventMsg, FishView, ResourceView, RunSummary, SessionId, Snapshot, SwarmOverrides};
use shoal_core::dispatcher::TaskCoordinates;
use shoal_core::gridsim::{JobId, JobStats, Policy, ResourceId};
use shoal_core::scheduling::canvas::FishState;

pub fn stats() -> JobStats {
    JobStats {
        job_id: JobId(0),
        resource_id: ResourceId(1),
        submit_time: 0.0,
        start_time: 2.5,
        finish_time: 12.5,
        waiting_time: 2.5,
        exec_time: 10.0,
    }
}

pub fn snapshot() -> Snapshot {
    Snapshot {
        session: SessionId("s1".into()),
        mode: Mode::Canvas,
        running: true,
        iteration: 4,
        clock: 4.0,
        fish: vec![
            FishView {
                id: FishId(3),
                position: vec![7.0, 5.0],
                fitness: 0.75,
                task_ref: Some(6),
                state: FishState::Swimming,
                dispatched_to: None,
            },
            FishView {
                id: FishId(0),
                position: vec![24.0, 8.0],
                fitness: 0.0,
                task_ref: Some(0),
                state: FishState::Dispatched,
                dispatched_to: Some(ResourceId(1)),
            },
        ],
        resources: vec![ResourceView {
            id: ResourceId(1),
            name: "south".into(),
            plane_position: Some(TaskCoordinates { x: 24, y: 8 }),
            policy: Policy::TimeShared,
            running: 1,
            queued_mi: 150.0,
        }],
        bulletin: Some(Bulletin {
            position: vec![24.0, 8.0],
            fitness: 0.0,
        }),
        best_assignment: None,
        completed: vec![stats()],
    }
}

pub fn commands() -> Vec<(&'static str, Command)> {
    vec![
        (
            "command_configure",
            Command::Configure {
                config: Box::new(minimal(1, 5)),
            },
        ),
        ("command_start", Command::Start),
        ("command_pause", Command::Pause),
        ("command_step", Command::step(3).unwrap()),
        (
            "command_add_fish",
            Command::AddFish {
                task_name: "t1".into(),
                keywords: ["a", "b", "c", "f", "h"].map(String::from).to_vec(),
                field: "Math".into(),
            },
        ),
        ("command_remove_fish", Command::RemoveFish { fish: FishId(4) }),
        (
            "command_set_params",
            Command::SetParams {
                params: SwarmOverrides {
                    visual: Some(2.5),
                    delta: Some(0.618),
                    vision_draw: Some(VisionDraw::Literal),
                    ..Default::default()
                },
            },
        ),
        ("command_snapshot_request", Command::SnapshotRequest),
        ("command_reset", Command::Reset),
    ]
}

pub fn events() -> Vec<(&'static str, EventMsg)> {
    vec![
        (
            "event_snapshot",
            EventMsg::Snapshot {
                snapshot: Box::new(snapshot()),
            },
        ),
        ("event_job_completed", EventMsg::JobCompleted { stats: stats() }),
        (
            "event_run_finished",
            EventMsg::RunFinished {
                summary: RunSummary {
                    iterations: 100,
                    best_fitness: Some(12.5),
                    makespan: 12.5,
                    jobs_completed: 1,
                },
            },
        ),
        (
            "event_error",
            EventMsg::Error {
                code: "unknown_fish".into(),
                message: "unknown fish 9".into(),
            },
        ),
    ]
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.json"))
}
