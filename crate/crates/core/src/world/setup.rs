use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::cloudsim::{ClusterConfig, NodeSelector};
use crate::edgesim::{DeviceClass, FieldConfig};
use crate::netsim::{RpcKind, TopologyConfig};
use crate::simkernel::SimTime;
use crate::synth::PlacementPlan;
use crate::workloads::{ArrivalPattern, Workload};

/// Runtime policies layered on top of a placement plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecOptions {
    /// RPC path for cloud-edge and device-device transfers.
    pub rpc: RpcKind,
    pub colocate: bool,
    pub stragglers: bool,
    pub probation: bool,
}

impl Default for ExecOptions {
    fn default() -> Self {
        Self {
            rpc: RpcKind::Accelerated,
            colocate: true,
            stragglers: true,
            probation: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Faults {
    /// `(device, seconds)`: the device dies at that instant, right after any
    /// heartbeat due at the same instant.
    pub kills: Vec<(usize, f64)>,
    /// `(seconds, factor)`: wireless capacity multiplied by `factor`.
    pub capacity_changes: Vec<(f64, f64)>,
}

/// Trailing-window view of a running simulation, for replanning.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WindowStats {
    pub window_s: f64,
    pub jobs: usize,
    pub p50_ms: f64,
    pub p99_ms: f64,
    pub throughput: f64,
    pub cloud_function_seconds: f64,
}

/// Hook consulted at fixed intervals; returning a plan switches new jobs to it.
pub trait Replanner: Send {
    fn interval_s(&self) -> f64;
    fn replan(&mut self, now: SimTime, current: &PlacementPlan, window: &WindowStats) -> Option<PlacementPlan>;
}

/// Everything one simulation run needs.
pub struct SimSetup {
    pub workload: Workload,
    /// Plan with data paths attached.
    pub plan: PlacementPlan,
    pub exec: ExecOptions,
    pub devices: usize,
    pub class: DeviceClass,
    pub field: FieldConfig,
    /// Already scaled to the swarm size.
    pub cluster: ClusterConfig,
    pub topology: TopologyConfig,
    pub selector: Box<dyn NodeSelector>,
    pub faults: Faults,
    pub arrival: ArrivalPattern,
    pub seed: u64,
    pub replanner: Option<Box<dyn Replanner>>,
    pub wall_clock_cap: Option<Duration>,
    /// Written into the report for reproducibility.
    pub config_hash: String,
}
