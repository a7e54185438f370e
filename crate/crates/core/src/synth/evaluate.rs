use rayon::prelude::*;

use super::enumerate::{attach_data_paths, enumerate_plans};
use super::plan::{PlacementPlan, PlanEvaluation};
use super::select::{select_plan, NoFeasiblePlan};
use crate::modes::{build_setup, ExecutionMode, RunError};
use crate::simkernel::MetricsReport;
use crate::workloads::{Goal, ScenarioConfig, Workload};
use crate::world::{simulate, Faults};

/// Profiling variant of a scenario: a capped swarm for a fixed horizon,
/// without faults or replanning.
pub fn profiling_scenario(sc: &ScenarioConfig) -> ScenarioConfig {
    ScenarioConfig {
        devices: sc.devices.min(sc.profile_devices).max(1),
        goal: Some(Goal::Duration {
            seconds: sc.profile_horizon_s,
        }),
        faults: Faults::default(),
        replan: false,
        ..sc.clone()
    }
}

pub fn evaluation_from_report(plan_id: u64, r: &MetricsReport) -> PlanEvaluation {
    PlanEvaluation {
        plan_id,
        predicted_p50_latency: r.job_latency.p50_ms,
        predicted_p99_latency: r.job_latency.p99_ms.max(r.job_latency.p50_ms),
        mean_battery_drain: r.mean_battery_drain.max(0.0),
        peak_bandwidth: r.peak_bandwidth_mbps,
        cloud_cost: r.cloud_function_seconds,
        throughput: if r.completion_time_s > 0.0 {
            r.counters.jobs_completed as f64 / r.completion_time_s
        } else {
            0.0
        },
    }
}

/// Profiles one plan on the scenario's swarm. Deterministic in `seed`.
pub fn evaluate_plan(
    plan: &PlacementPlan,
    w: &Workload,
    sc: &ScenarioConfig,
    mode: &dyn ExecutionMode,
    seed: u64,
) -> Result<PlanEvaluation, RunError> {
    let prof = profiling_scenario(sc);
    let setup = build_setup(w, &prof, mode, plan.clone(), seed)?;
    let report = simulate(setup, None)?;
    Ok(evaluation_from_report(plan.plan_id, &report))
}

/// Enumerated plans, their evaluations and the selection outcome.
#[derive(Clone, Debug)]
pub struct Synthesis {
    /// Plans with data paths attached, in enumeration order.
    pub plans: Vec<PlacementPlan>,
    pub evals: Vec<PlanEvaluation>,
    pub selected: Result<u64, NoFeasiblePlan>,
}

/// Enumerates, profiles in parallel and selects a plan.
pub fn synthesize(
    w: &Workload,
    sc: &ScenarioConfig,
    mode: &dyn ExecutionMode,
    seed: u64,
    prune: bool,
) -> Result<Synthesis, RunError> {
    let accel = sc.accel.unwrap_or_else(|| mode.accel());
    let plans: Vec<PlacementPlan> = enumerate_plans(&w.graph, prune)?
        .into_iter()
        .map(|p| attach_data_paths(p, &w.graph, accel))
        .collect();
    let evals = plans
        .par_iter()
        .map(|p| evaluate_plan(p, w, sc, mode, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let selected = select_plan(&evals, &w.graph.constraints);
    Ok(Synthesis { plans, evals, selected })
}
