//! Execution modes: how a scenario maps onto a placement plan and runtime
//! policies. Modes are looked up by name from a small registry.

use std::io::Write;
use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cloudsim::selector_by_name;
use crate::dsl::TaskGraph;
use crate::edgesim::DeviceClass;
use crate::netsim::RpcKind;
use crate::simkernel::{MetricsReport, SimError};
use crate::synth::{
    attach_data_paths, synthesize, AccelConfig, ConstraintReplanner, Location, NoFeasiblePlan, PlacementPlan, SynthError,
};
use crate::workloads::{load_workload, PlanOverride, ScenarioConfig, Workload, WorkloadError};
use crate::world::{simulate, ExecOptions, SimSetup};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{0}")]
    NoFeasiblePlan(NoFeasiblePlan),
    #[error("unknown execution mode '{0}'")]
    UnknownMode(String),
    #[error("unknown node selector '{0}'")]
    UnknownSelector(String),
    #[error("unknown device class '{0}'")]
    UnknownDeviceClass(String),
}

/// A system configuration under comparison.
pub trait ExecutionMode: Send + Sync {
    fn name(&self) -> &'static str;
    fn accel(&self) -> AccelConfig;
    fn exec(&self, accel: AccelConfig) -> ExecOptions;
    /// Placement used when the scenario does not override it.
    fn plan(&self, w: &Workload, sc: &ScenarioConfig, seed: u64) -> Result<PlacementPlan, RunError>;
}

fn rpc_for(accel: AccelConfig) -> RpcKind {
    if accel.network_accel {
        RpcKind::Accelerated
    } else {
        RpcKind::Baseline
    }
}

/// Sensor sources on the devices, everything else in the cloud.
pub fn all_cloud_plan(g: &TaskGraph) -> PlacementPlan {
    fixed_plan(g, |t| g.tasks[t].is_source())
}

pub fn all_edge_plan(g: &TaskGraph) -> PlacementPlan {
    fixed_plan(g, |_| true)
}

fn fixed_plan(g: &TaskGraph, edge: impl Fn(usize) -> bool) -> PlacementPlan {
    let n = g.tasks.len();
    let mut mask = 0u64;
    let assignment = g
        .tasks
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let loc = if edge(i) {
                mask |= 1 << (n - 1 - i);
                Location::edge()
            } else {
                Location::cloud()
            };
            (t.name.clone(), loc)
        })
        .collect();
    PlacementPlan {
        plan_id: mask,
        assignment,
        edge_paths: Vec::new(),
    }
}

/// Everything but the sensors in a serverless cloud with stock data paths.
pub struct Centralized;

impl ExecutionMode for Centralized {
    fn name(&self) -> &'static str {
        "centralized"
    }

    fn accel(&self) -> AccelConfig {
        AccelConfig::NONE
    }

    fn exec(&self, accel: AccelConfig) -> ExecOptions {
        ExecOptions {
            rpc: rpc_for(accel),
            colocate: false,
            stragglers: false,
            probation: false,
        }
    }

    fn plan(&self, w: &Workload, _: &ScenarioConfig, _: u64) -> Result<PlacementPlan, RunError> {
        Ok(all_cloud_plan(&w.graph))
    }
}

/// Every task on the devices, coordinating peer to peer.
pub struct Distributed;

impl ExecutionMode for Distributed {
    fn name(&self) -> &'static str {
        "distributed"
    }

    fn accel(&self) -> AccelConfig {
        AccelConfig::NONE
    }

    fn exec(&self, accel: AccelConfig) -> ExecOptions {
        ExecOptions {
            rpc: rpc_for(accel),
            colocate: false,
            stragglers: false,
            probation: false,
        }
    }

    fn plan(&self, w: &Workload, _: &ScenarioConfig, _: u64) -> Result<PlacementPlan, RunError> {
        Ok(all_edge_plan(&w.graph))
    }
}

/// Synthesized hybrid plan with accelerated data paths and the cloud
/// scheduler's co-location and straggler policies.
pub struct HiveMind;

impl ExecutionMode for HiveMind {
    fn name(&self) -> &'static str {
        "hivemind"
    }

    fn accel(&self) -> AccelConfig {
        AccelConfig::ALL
    }

    fn exec(&self, accel: AccelConfig) -> ExecOptions {
        ExecOptions {
            rpc: rpc_for(accel),
            colocate: true,
            stragglers: true,
            probation: true,
        }
    }

    fn plan(&self, w: &Workload, sc: &ScenarioConfig, seed: u64) -> Result<PlacementPlan, RunError> {
        let s = synthesize(w, sc, self, seed, true)?;
        let id = match s.selected {
            Ok(id) => id,
            // unattended runs fall back to the nearest miss
            Err(miss) => miss.nearest_plan_id,
        };
        Ok(s.plans.into_iter().find(|p| p.plan_id == id).expect("selected plan was enumerated"))
    }
}

/// Names accepted by [`mode_by_name`].
pub const MODES: &[&str] = &["hivemind", "centralized", "distributed"];

pub fn mode_by_name(name: &str) -> Option<Box<dyn ExecutionMode>> {
    match name {
        "hivemind" => Some(Box::new(HiveMind)),
        "centralized" => Some(Box::new(Centralized)),
        "distributed" => Some(Box::new(Distributed)),
        _ => None,
    }
}

/// The plan a run uses: the scenario override if any, else the mode's.
pub fn resolve_plan(w: &Workload, sc: &ScenarioConfig, mode: &dyn ExecutionMode, seed: u64) -> Result<PlacementPlan, RunError> {
    match &sc.plan {
        PlanOverride::Mode => mode.plan(w, sc, seed),
        PlanOverride::AllCloud => Ok(all_cloud_plan(&w.graph)),
        PlanOverride::AllEdge => Ok(all_edge_plan(&w.graph)),
        PlanOverride::Fixed(p) => Ok(p.clone()),
    }
}

#[derive(Serialize)]
struct HashInput<'a> {
    scenario: &'a ScenarioConfig,
    mode: &'a str,
    plan: &'a PlacementPlan,
}

/// Assembles a simulation for `plan` under `mode`.
pub fn build_setup(
    w: &Workload,
    sc: &ScenarioConfig,
    mode: &dyn ExecutionMode,
    plan: PlacementPlan,
    seed: u64,
) -> Result<SimSetup, RunError> {
    let mut workload = w.clone();
    if let Some(goal) = &sc.goal {
        workload.profile.goal = goal.clone();
    }
    let accel = sc.accel.unwrap_or_else(|| mode.accel());
    let plan = attach_data_paths(plan, &w.graph, accel);
    let mut exec = mode.exec(accel);
    if let Some(on) = sc.stragglers {
        exec.stragglers = on;
        exec.probation = on;
    }
    let mut class = DeviceClass::by_name(&w.profile.device_class)
        .ok_or_else(|| RunError::UnknownDeviceClass(w.profile.device_class.clone()))?;
    if let Some(fps) = sc.fps {
        class.fps = fps;
    }
    if let Some(b) = sc.frame_bytes {
        class.frame_bytes = b;
    }
    let mut cluster = sc.cluster.clone();
    if let Some(k) = sc.keepalive_s {
        cluster.keepalive_s = k;
    }
    let cluster = cluster.scaled_for(sc.devices);
    let selector = selector_by_name(&cluster.node_selector).ok_or_else(|| RunError::UnknownSelector(cluster.node_selector.clone()))?;
    let replanner = sc.replan.then(|| {
        Box::new(ConstraintReplanner::new(&workload, class.frame_bytes, accel)) as Box<dyn crate::world::Replanner>
    });
    let hash = Sha256::digest(
        serde_json::to_vec(&HashInput {
            scenario: sc,
            mode: mode.name(),
            plan: &plan,
        })
        .expect("config serializes"),
    );
    Ok(SimSetup {
        arrival: sc.arrival.clone().unwrap_or_else(|| workload.profile.arrival.clone()),
        field: sc.field.clone().unwrap_or_else(|| workload.profile.field.clone()),
        workload,
        plan,
        exec,
        devices: sc.devices,
        class,
        cluster,
        topology: sc.topology.clone(),
        selector,
        faults: sc.faults.clone(),
        seed,
        replanner,
        wall_clock_cap: sc.wall_clock_cap_s.map(Duration::from_secs_f64),
        config_hash: hex::encode(hash),
    })
}

/// Loads the workload, resolves the plan and runs one simulation.
pub fn run_scenario(
    sc: &ScenarioConfig,
    mode_name: &str,
    seed: u64,
    trace: Option<&mut dyn Write>,
) -> Result<MetricsReport, RunError> {
    let mode = mode_by_name(mode_name).ok_or_else(|| RunError::UnknownMode(mode_name.to_string()))?;
    let w = load_workload(&sc.workload)?;
    let plan = resolve_plan(&w, sc, mode.as_ref(), seed)?;
    let setup = build_setup(&w, sc, mode.as_ref(), plan, seed)?;
    Ok(simulate(setup, trace)?)
}
