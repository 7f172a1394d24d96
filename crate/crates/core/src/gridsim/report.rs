use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{JobStats, ResourceId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceAggregate {
    pub resource_id: ResourceId,
    pub jobs: usize,
    /// Length of the union of the resource's `[start, finish]` intervals.
    pub busy_time: f64,
    /// `max finish − min submit` over the resource's jobs.
    pub makespan: f64,
}

/// Per-job rows sorted by job id plus per-resource aggregates.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StatsReport {
    pub jobs: Vec<JobStats>,
    pub resources: Vec<ResourceAggregate>,
}

impl StatsReport {
    pub fn new(stats: &[JobStats]) -> Self {
        let mut jobs = stats.to_vec();
        jobs.sort_by_key(|j| j.job_id);

        let mut by_resource: BTreeMap<ResourceId, Vec<&JobStats>> = BTreeMap::new();
        for j in &jobs {
            by_resource.entry(j.resource_id).or_default().push(j);
        }
        let resources = by_resource
            .into_iter()
            .map(|(resource_id, rows)| ResourceAggregate {
                resource_id,
                jobs: rows.len(),
                busy_time: union_length(rows.iter().map(|j| (j.start_time, j.finish_time))),
                makespan: rows.iter().map(|j| j.finish_time).fold(f64::NEG_INFINITY, f64::max)
                    - rows.iter().map(|j| j.submit_time).fold(f64::INFINITY, f64::min),
            })
            .collect();
        Self { jobs, resources }
    }

    /// Largest resource makespan, 0 when no job ran.
    pub fn makespan(&self) -> f64 {
        self.resources.iter().map(|r| r.makespan).fold(0.0, f64::max)
    }

    pub fn jobs_csv(&self) -> String {
        let mut out = String::from("job_id,resource,submit,start,finish,waiting,exec\n");
        for j in &self.jobs {
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
                j.job_id, j.resource_id, j.submit_time, j.start_time, j.finish_time, j.waiting_time, j.exec_time
            );
        }
        out
    }

    pub fn resources_csv(&self) -> String {
        let mut out = String::from("resource,jobs,busy_time,makespan\n");
        for r in &self.resources {
            let _ = writeln!(out, "{},{},{:.6},{:.6}", r.resource_id, r.jobs, r.busy_time, r.makespan);
        }
        out
    }
}

fn union_length(intervals: impl Iterator<Item = (f64, f64)>) -> f64 {
    let mut v: Vec<(f64, f64)> = intervals.collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut current: Option<(f64, f64)> = None;
    for (s, e) in v {
        current = match current {
            Some((cs, ce)) if s <= ce => Some((cs, ce.max(e))),
            Some((cs, ce)) => {
                total += ce - cs;
                Some((s, e))
            }
            None => Some((s, e)),
        };
    }
    if let Some((cs, ce)) = current {
        total += ce - cs;
    }
    total
}
