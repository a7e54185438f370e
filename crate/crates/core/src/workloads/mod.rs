//! Workload profiles S1 to S10 and the two field scenarios, plus arrival
//! schedules.

mod arrivals;
mod load;
mod profile;
mod scenario;

pub use arrivals::{generate_arrivals, Arrival};
pub use load::{compile, dsl_source, load_profile, load_workload, parse_profile, Workload, WorkloadError, PROFILE_DIR_ENV, WORKLOAD_IDS};
pub use profile::{AfterRoute, ArrivalPattern, EmitRule, Goal, OutputSize, TaskProfile, WorkloadProfile};
pub use scenario::{PlanOverride, ScenarioConfig};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::DirectiveKind;

    #[test]
    fn every_builtin_compiles() {
        for id in WORKLOAD_IDS {
            let w = load_workload(id).unwrap_or_else(|e| panic!("{id}: {e}"));
            assert_eq!(w.profile.id, id);
        }
    }

    #[test]
    fn unknown_workload() {
        assert!(matches!(load_profile("S99"), Err(WorkloadError::UnknownWorkload(_))));
    }

    #[test]
    fn scenario_b_matches_listing() {
        let w = load_workload("ScenarioB").unwrap();
        assert_eq!(w.graph.tasks.len(), 5);
        assert_eq!(w.graph.edges().len(), 4);
        assert_eq!(w.graph.directive_count(), 7);
        assert!(w.profile.task("faceRecognition").fanout > 1);
        assert!(w.graph.is_synchronized("deduplication"));
    }

    #[test]
    fn obstacle_avoidance_is_pinned_to_edge() {
        let w = load_workload("S4").unwrap();
        assert!(w.graph.has_directive(DirectiveKind::Place, "obstacleAvoidance"));
    }

    #[test]
    fn compute_heavy_profiles_are_slower_on_edge() {
        for id in ["S1", "S2", "S5", "S8", "S9", "S10"] {
            let w = load_workload(id).unwrap();
            for t in w.profile.tasks.values() {
                assert!(t.edge.mean_ms() >= t.cloud.mean_ms(), "{id}");
            }
        }
        for id in ["S3", "S7"] {
            let w = load_workload(id).unwrap();
            for t in w.profile.tasks.values() {
                let (e, c) = (t.edge.mean_ms(), t.cloud.mean_ms());
                assert!(e <= 1.5 * c.max(1e-9) || c == 0.0, "{id}: comparable tiers");
            }
        }
    }
}
