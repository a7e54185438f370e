use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::edgesim::{FieldConfig, TargetKind};
use crate::simkernel::{DistSpec, SimError};

/// Whether a finished task instance passes data on to its children.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmitRule {
    #[default]
    Always,
    /// Emits when the frame shows at least one target, or spuriously with
    /// probability `false_positive`.
    OnTargets { false_positive: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputSize {
    /// The captured frame (or sensor reading) itself.
    Frame,
    Fixed(u64),
    /// Bytes per visible target.
    PerTarget(u64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskProfile {
    /// Service time on one cloud core.
    pub cloud: DistSpec,
    /// Service time on one edge core.
    pub edge: DistSpec,
    pub output: OutputSize,
    /// Cloud sub-invocations per instance; each does 1/fanout of the work.
    #[serde(default = "one")]
    pub fanout: usize,
    /// Software dependency set id.
    #[serde(default)]
    pub deps: u32,
    #[serde(default)]
    pub emit: EmitRule,
    /// Leaf task whose result must reach the device (route adjustments).
    #[serde(default)]
    pub return_to_device: bool,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalPattern {
    /// One job per captured frame.
    PerFrame,
    /// One job per `seconds` of frames, carrying all of them.
    PerBatch { seconds: f64 },
    Periodic { period_s: f64 },
    Poisson { mean_gap_s: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Goal {
    /// Every target found and every cell covered.
    AllTargets,
    Duration { seconds: f64 },
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AfterRoute {
    #[default]
    Hover,
    /// Sweep the region again (moving targets).
    Resweep,
}

/// Service-time and data-size profile for one workload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadProfile {
    pub id: String,
    #[serde(default)]
    pub description: String,
    /// DSL program, a file name under the scenarios directory.
    pub dsl: String,
    pub arrival: ArrivalPattern,
    /// Job input size for non-frame arrivals; frames use the device's frame size.
    #[serde(default)]
    pub input_bytes: Option<u64>,
    pub goal: Goal,
    /// Task whose completion counts a target as found.
    #[serde(default)]
    pub goal_task: Option<String>,
    #[serde(default)]
    pub after_route: AfterRoute,
    #[serde(default)]
    pub field: FieldConfig,
    #[serde(default = "drone")]
    pub device_class: String,
    #[serde(default = "mission_cap")]
    pub mission_cap_s: f64,
    pub tasks: BTreeMap<String, TaskProfile>,
}

fn drone() -> String {
    "drone".into()
}

fn mission_cap() -> f64 {
    1800.0
}

impl WorkloadProfile {
    pub fn task(&self, name: &str) -> &TaskProfile {
        &self.tasks[name]
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(format!("profile {}: {m}", self.id)));
        for (name, t) in &self.tasks {
            t.cloud.validate()?;
            t.edge.validate()?;
            if t.fanout == 0 {
                return bad(format!("task {name} has fanout 0"));
            }
            if let EmitRule::OnTargets { false_positive } = t.emit {
                if !(0.0..=1.0).contains(&false_positive) {
                    return bad(format!("task {name}: false-positive rate outside [0, 1]"));
                }
            }
        }
        match self.arrival {
            ArrivalPattern::PerBatch { seconds: x }
            | ArrivalPattern::Periodic { period_s: x }
            | ArrivalPattern::Poisson { mean_gap_s: x }
                if x <= 0.0 =>
            {
                return bad("arrival interval must be positive".into())
            }
            _ => {}
        }
        if let Some(g) = &self.goal_task {
            if !self.tasks.contains_key(g) {
                return bad(format!("goal task {g} has no profile"));
            }
        }
        if self.goal == Goal::AllTargets && self.field.target_kind == TargetKind::Person && self.after_route == AfterRoute::Hover {
            return bad("moving targets need after_route = resweep".into());
        }
        self.field.validate()
    }
}
