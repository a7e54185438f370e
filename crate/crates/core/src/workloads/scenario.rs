use serde::{Deserialize, Serialize};

use super::profile::{ArrivalPattern, Goal};
use crate::cloudsim::ClusterConfig;
use crate::edgesim::FieldConfig;
use crate::netsim::TopologyConfig;
use crate::synth::{AccelConfig, PlacementPlan};
use crate::world::Faults;

/// Which plan a run uses. `Mode` defers to the execution mode.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanOverride {
    #[default]
    Mode,
    AllCloud,
    AllEdge,
    Fixed(PlacementPlan),
}

/// One simulated experiment, minus the execution mode and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub workload: String,
    pub devices: usize,
    pub fps: Option<f64>,
    pub frame_bytes: Option<u64>,
    /// Overrides the mode's acceleration flags.
    pub accel: Option<AccelConfig>,
    pub keepalive_s: Option<f64>,
    pub arrival: Option<ArrivalPattern>,
    pub goal: Option<Goal>,
    pub field: Option<FieldConfig>,
    pub plan: PlanOverride,
    /// Overrides the mode's straggler mitigation and probation.
    pub stragglers: Option<bool>,
    pub replan: bool,
    pub cluster: ClusterConfig,
    pub topology: TopologyConfig,
    pub faults: Faults,
    /// Devices used when profiling candidate plans.
    pub profile_devices: usize,
    pub profile_horizon_s: f64,
    pub wall_clock_cap_s: Option<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            workload: "ScenarioA".into(),
            devices: 16,
            fps: None,
            frame_bytes: None,
            accel: None,
            keepalive_s: None,
            arrival: None,
            goal: None,
            field: None,
            plan: PlanOverride::Mode,
            stragglers: None,
            replan: false,
            cluster: ClusterConfig::default(),
            topology: TopologyConfig::default(),
            faults: Faults::default(),
            profile_devices: 16,
            profile_horizon_s: 60.0,
            wall_clock_cap_s: Some(600.0),
        }
    }
}

impl ScenarioConfig {
    pub fn for_workload(id: &str) -> Self {
        Self {
            workload: id.to_string(),
            ..Self::default()
        }
    }
}
