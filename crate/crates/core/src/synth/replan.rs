use super::enumerate::attach_data_paths;
use super::plan::{AccelConfig, Location, PlacementPlan, PlanEvaluation, Tier};
use super::select::violations;
use crate::dsl::{parse_place, DirectiveKind, PerfConstraint, PlaceTarget, TaskGraph};
use crate::simkernel::{secs, SimTime};
use crate::workloads::{OutputSize, Workload, WorkloadProfile};
use crate::world::{Replanner, WindowStats};

pub const REPLAN_INTERVAL_S: f64 = 10.0;
pub const REPLAN_COOLDOWN_S: f64 = 30.0;

fn output_bytes(p: &WorkloadProfile, task: &str, frame_bytes: u64) -> u64 {
    match p.tasks.get(task).map(|t| &t.output) {
        Some(OutputSize::Frame) => frame_bytes,
        Some(OutputSize::Fixed(b)) | Some(OutputSize::PerTarget(b)) => *b,
        None => 0,
    }
}

fn pinned_to_cloud(g: &TaskGraph, task: &str) -> bool {
    g.directives_of(DirectiveKind::Place, task)
        .filter_map(|d| d.payload.get("location"))
        .filter_map(|l| parse_place(l))
        .any(|p| p == PlaceTarget::Cloud)
}

/// Window metrics in the shape constraints are checked against.
pub fn window_evaluation(plan_id: u64, w: &WindowStats) -> PlanEvaluation {
    PlanEvaluation {
        plan_id,
        predicted_p50_latency: w.p50_ms,
        predicted_p99_latency: w.p99_ms,
        mean_battery_drain: 0.0,
        peak_bandwidth: 0.0,
        cloud_cost: w.cloud_function_seconds,
        throughput: w.throughput,
    }
}

/// New plan when the trailing window violates a constraint: the cloud task
/// receiving the most data per instance moves to the edge. `None` when the
/// window is within bounds or nothing can move.
pub fn replan(
    g: &TaskGraph,
    profile: &WorkloadProfile,
    frame_bytes: u64,
    accel: AccelConfig,
    current: &PlacementPlan,
    window: &WindowStats,
    constraints: &[PerfConstraint],
) -> Option<PlacementPlan> {
    if window.jobs == 0 || violations(&window_evaluation(current.plan_id, window), constraints).is_empty() {
        return None;
    }
    let n = g.tasks.len();
    let heaviest = g
        .tasks
        .iter()
        .enumerate()
        .filter(|(_, t)| current.location(&t.name).kind == Tier::Cloud && !pinned_to_cloud(g, &t.name))
        .map(|(i, t)| {
            let inbound: u64 = t.parents.iter().map(|p| output_bytes(profile, p, frame_bytes)).sum();
            (inbound, std::cmp::Reverse(i))
        })
        .max()?;
    let idx = heaviest.1 .0;
    let mut next = current.clone();
    next.assignment.insert(g.tasks[idx].name.clone(), Location::edge());
    next.plan_id |= 1 << (n - 1 - idx);
    Some(attach_data_paths(next, g, accel))
}

/// Replanning at fixed intervals with a cooldown after every change.
pub struct ConstraintReplanner {
    graph: TaskGraph,
    profile: WorkloadProfile,
    frame_bytes: u64,
    accel: AccelConfig,
    pub interval_s: f64,
    pub cooldown_s: f64,
    last_change: Option<SimTime>,
}

impl ConstraintReplanner {
    pub fn new(w: &Workload, frame_bytes: u64, accel: AccelConfig) -> Self {
        Self {
            graph: w.graph.clone(),
            profile: w.profile.clone(),
            frame_bytes,
            accel,
            interval_s: REPLAN_INTERVAL_S,
            cooldown_s: REPLAN_COOLDOWN_S,
            last_change: None,
        }
    }
}

impl Replanner for ConstraintReplanner {
    fn interval_s(&self) -> f64 {
        self.interval_s
    }

    fn replan(&mut self, now: SimTime, current: &PlacementPlan, window: &WindowStats) -> Option<PlacementPlan> {
        if let Some(t) = self.last_change {
            if now.as_micros() < t.as_micros() + secs(self.cooldown_s) {
                return None;
            }
        }
        let plan = replan(&self.graph, &self.profile, self.frame_bytes, self.accel, current, window, &self.graph.constraints)?;
        self.last_change = Some(now);
        Some(plan)
    }
}
