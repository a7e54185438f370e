use std::cmp::Ordering;

use serde::Serialize;

use super::plan::PlanEvaluation;
use crate::dsl::{Metric, PerfConstraint};

pub fn metric_value(e: &PlanEvaluation, m: Metric) -> f64 {
    match m {
        Metric::ExecTime => e.predicted_p50_latency,
        Metric::Latency => e.predicted_p99_latency,
        Metric::Throughput => e.throughput,
        Metric::Cost => e.cloud_cost,
    }
}

pub fn violations(e: &PlanEvaluation, constraints: &[PerfConstraint]) -> Vec<PerfConstraint> {
    constraints.iter().filter(|c| !c.is_met_by(metric_value(e, c.metric))).cloned().collect()
}

/// Lexicographic objective: p99 latency, battery drain, cloud cost, plan id.
pub fn objective_cmp(a: &PlanEvaluation, b: &PlanEvaluation) -> Ordering {
    a.predicted_p99_latency
        .total_cmp(&b.predicted_p99_latency)
        .then(a.mean_battery_drain.total_cmp(&b.mean_battery_drain))
        .then(a.cloud_cost.total_cmp(&b.cloud_cost))
        .then(a.plan_id.cmp(&b.plan_id))
}

/// Relative distance from meeting every constraint; 0 when feasible.
fn shortfall(e: &PlanEvaluation, constraints: &[PerfConstraint]) -> f64 {
    constraints
        .iter()
        .map(|c| {
            let v = metric_value(e, c.metric);
            let b = c.canonical_bound();
            if c.is_met_by(v) {
                0.0
            } else {
                (v - b).abs() / b.abs().max(1e-12)
            }
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoFeasiblePlan {
    pub nearest_plan_id: u64,
    pub violated: Vec<PerfConstraint>,
}

impl std::fmt::Display for NoFeasiblePlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let list: Vec<String> = self.violated.iter().map(|c| format!("{:?} {:?} {}", c.metric, c.direction, c.canonical_bound())).collect();
        write!(f, "no feasible plan; nearest miss is plan {} violating {}", self.nearest_plan_id, list.join(", "))
    }
}

/// Pick the best plan meeting all constraints.
pub fn select_plan(evals: &[PlanEvaluation], constraints: &[PerfConstraint]) -> Result<u64, NoFeasiblePlan> {
    assert!(!evals.is_empty(), "select_plan needs at least one evaluation");
    if let Some(best) = evals.iter().filter(|e| violations(e, constraints).is_empty()).min_by(|a, b| objective_cmp(a, b)) {
        return Ok(best.plan_id);
    }
    let nearest = evals
        .iter()
        .min_by(|a, b| shortfall(a, constraints).total_cmp(&shortfall(b, constraints)).then(objective_cmp(a, b)))
        .expect("nonempty");
    Err(NoFeasiblePlan {
        nearest_plan_id: nearest.plan_id,
        violated: violations(nearest, constraints),
    })
}
