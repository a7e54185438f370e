//! Placement plan enumeration, data-path attachment and plan selection.

mod enumerate;
mod evaluate;
mod plan;
mod replan;
mod select;

pub use enumerate::{attach_data_paths, enumerate_plans, plan_is_consistent, SynthError, MAX_FREE_TASKS};
pub use evaluate::{evaluate_plan, evaluation_from_report, profiling_scenario, synthesize, Synthesis};
pub use plan::*;
pub use replan::{replan, window_evaluation, ConstraintReplanner, REPLAN_COOLDOWN_S, REPLAN_INTERVAL_S};
pub use select::{metric_value, objective_cmp, select_plan, violations, NoFeasiblePlan};

#[cfg(test)]
mod tests;
