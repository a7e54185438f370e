//! The integrated swarm world: devices, network and serverless cluster driven
//! by one event queue under a placement plan.

mod cloud;
mod edge;
mod jobs;
mod net;
mod report;
mod setup;
#[cfg(test)]
mod tests;

use std::collections::{BTreeMap, VecDeque};
use std::io::Write;

pub use setup::{ExecOptions, Faults, Replanner, SimSetup, WindowStats};

use crate::cloudsim::{Admission, ClusterConfig, ClusterState, ContainerId, JobLatencyTracker, NodeSelector, ProbationTracker};
use crate::dsl::{DirectiveKind, TaskGraph};
use crate::edgesim::{Cell, CellRect, CoverageMap, DeviceClass, EdgeDevice, FieldModel};
use crate::netsim::{Deadline, HeartbeatMonitor, Network};
use crate::simkernel::{
    run, secs, stream_id_for, ComponentId, Counters, EventQueue, MetricsReport, Model, RngStream, RunLimits, SampleSet,
    ServiceStation, SimError, SimEvent, SimTime,
};
use crate::synth::{PlacementPlan, Tier};
use crate::workloads::{ArrivalPattern, TaskProfile, Workload};

type JobId = usize;
type InvId = usize;

#[derive(Clone, Debug)]
pub enum Ev {
    FrameTick { device: usize },
    Arrival { device: usize },
    HeartbeatSend { device: usize },
    HeartbeatRecv { device: usize },
    HeartbeatDeadline(Deadline),
    Kill { device: usize },
    CapacityChange { factor: f64 },
    LinkCheck { link: usize, generation: u64 },
    HopArrive { transfer: usize },
    EdgeDone { device: usize, token: u64 },
    ControllerDone { token: u64 },
    StoreDone { token: u64 },
    SyncArrive { job: JobId, task: usize },
    SyncDone { task: usize, token: u64 },
    ContainerReady { inv: InvId },
    InputsReady { inv: InvId },
    ExecDone { inv: InvId },
    StragglerCheck { inv: InvId },
    ContainerExpire { container: ContainerId, generation: u64 },
    ReplanTick,
    MetricsTick,
    MissionEnd,
}

/// Static per-task facts derived from the graph and profile.
#[derive(Clone, Debug)]
struct TaskMeta {
    name: String,
    prof: TaskProfile,
    /// Parents inside the same job class.
    parents: Vec<usize>,
    children: Vec<usize>,
    sync: bool,
    isolate: bool,
    persist: bool,
    pinned_node: Option<usize>,
    /// Runs once per device before flight rather than per frame.
    preflight: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum JobKind {
    Frame,
    Preflight,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
enum St {
    /// Not part of this job.
    #[default]
    Absent,
    Waiting,
    Running,
    /// Result travelling back to the device.
    Returning,
    Done,
    Skipped,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Where {
    Device(usize),
    Cloud,
}

#[derive(Clone, Debug, Default)]
struct Inst {
    st: St,
    parents_left: u32,
    emitting_parents: u32,
    inputs_left: u32,
    /// Network and cold-start time on the critical path to the latest input.
    net_us: u64,
    cold_us: u64,
    ready_at: SimTime,
    emitted: bool,
    out_bytes: u64,
    ran_on: Option<Where>,
    subs_left: u32,
    /// Largest cold start among the cloud sub-invocations.
    sub_cold_us: u64,
    container: Option<ContainerId>,
    replicas_left: u32,
    /// Bytes that arrived from emitting parents.
    in_bytes: u64,
}

#[derive(Clone, Debug)]
struct Job {
    kind: JobKind,
    device: usize,
    captured: SimTime,
    /// Cell the frame was taken over.
    cell: Cell,
    targets: Vec<usize>,
    input_bytes: u64,
    plan: usize,
    insts: Vec<Inst>,
    unresolved: usize,
    crit_net_us: u64,
    crit_cold_us: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Dest {
    /// Input for an instance (from a parent or the device itself).
    Input { job: JobId, task: usize },
    /// Broadcast input for a replica of a synchronized edge task.
    Replica { job: JobId, task: usize, device: usize },
    /// Result of a cloud leaf on its way to the device.
    Return { job: JobId, task: usize },
}

#[derive(Clone, Debug)]
struct Transfer {
    hops: Vec<usize>,
    next: usize,
    bytes: u64,
    created: SimTime,
    rpc_us: u64,
    dest: Dest,
    /// Critical-path totals carried from the sender.
    net_us: u64,
    cold_us: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum InvSt {
    Pending,
    Starting,
    Fetching,
    Running,
    Done,
    Cancelled,
}

#[derive(Clone, Debug)]
struct Invocation {
    slot: usize,
    speculative: bool,
    twin: Option<InvId>,
    exclude: Option<usize>,
    node: usize,
    container: Option<ContainerId>,
    st: InvSt,
    admitted: bool,
    admission_released: bool,
    cold_us: u64,
    started_at: SimTime,
    exec_start: SimTime,
    exec_us: u64,
    fetch_left: u32,
}

/// One logical sub-invocation of a cloud task instance; duplicates share it.
#[derive(Clone, Debug)]
struct Slot {
    job: JobId,
    task: usize,
    consumed: bool,
}

#[derive(Copy, Clone, Debug)]
struct EdgeWork {
    job: JobId,
    task: usize,
    replica: bool,
    service_us: u64,
}

#[derive(Copy, Clone, Debug)]
enum StoreWork {
    Read { inv: InvId },
    Write { job: JobId, task: usize },
    Persist,
}

struct SyncStation {
    station: ServiceStation<(JobId, usize)>,
    ready_at: Option<SimTime>,
}

struct DeviceState {
    dev: EdgeDevice,
    station: ServiceStation<EdgeWork>,
    rng: RngStream,
    flying: bool,
    capturing: bool,
    route_done: bool,
    next_hb: SimTime,
    last_hb_sent: SimTime,
    died_at: Option<SimTime>,
    batch_frames: u32,
    batch_targets: Vec<usize>,
    arrival_rng: RngStream,
    jobs: Vec<JobId>,
}

/// The simulated world. Implements [`Model`].
pub struct World {
    workload: Workload,
    tasks: Vec<TaskMeta>,
    topo: Vec<usize>,
    goal_task: Option<usize>,
    plans: Vec<PlacementPlan>,
    /// Per plan, per task location.
    locs: Vec<Vec<crate::synth::Location>>,
    exec: ExecOptions,
    class: DeviceClass,
    arrival: ArrivalPattern,
    n: usize,

    field: FieldModel,
    regions: Vec<CellRect>,
    coverage: CoverageMap,
    devices: Vec<DeviceState>,
    monitor: HeartbeatMonitor,
    declared: Vec<bool>,

    net: Network,
    transfers: Vec<Option<Transfer>>,
    free_transfers: Vec<usize>,

    cfg: ClusterConfig,
    cluster: ClusterState,
    selector: Box<dyn NodeSelector>,
    controller: ServiceStation<(JobId, usize)>,
    store: ServiceStation<StoreWork>,
    admission: Admission<InvId>,
    core_wait: VecDeque<InvId>,
    tracker: JobLatencyTracker,
    probation: ProbationTracker,
    invs: Vec<Invocation>,
    slots: Vec<Slot>,
    sync: BTreeMap<usize, SyncStation>,

    jobs: Vec<Option<Box<Job>>>,
    frame_jobs_live: u64,

    rng_cloud: RngStream,
    rng_cold: RngStream,
    rng_emit: RngStream,
    rng_hb: RngStream,

    replanner: Option<Box<dyn Replanner>>,
    window: Vec<(SimTime, f64)>,
    window_cost: f64,

    mission_over: bool,
    mission_end: Option<SimTime>,
    mission_infeasible: bool,
    found: Vec<bool>,

    counters: Counters,
    latency: SampleSet,
    task_latency: BTreeMap<String, SampleSet>,
    /// `(latency_ms, net_ms, cold_ms)` per completed frame job.
    breakdown: Vec<(f64, f64, f64)>,
    battery: Vec<crate::simkernel::TimeSeries>,
    cloud_us: f64,
    detections: Vec<crate::simkernel::FailureDetection>,
    seed: u64,
    config_hash: String,
}

const CLOUD: ComponentId = ComponentId(u32::MAX - 2);
const NETWORK: ComponentId = ComponentId(u32::MAX - 1);
const CONTROL: ComponentId = ComponentId(u32::MAX);

fn dev_id(d: usize) -> ComponentId {
    ComponentId(d as u32)
}

fn build_tasks(w: &Workload, nodes: usize) -> Result<(Vec<TaskMeta>, Vec<usize>), SimError> {
    let g: &TaskGraph = &w.graph;
    let topo = g.topo_order().ok_or_else(|| SimError::Config("task graph has a cycle".into()))?;
    let idx = |name: &str| g.task_index(name).expect("validated graph");
    let n = g.tasks.len();
    // Frame jobs cover everything reachable from the sources.
    let mut in_frame = vec![false; n];
    for &t in &topo {
        let def = &g.tasks[t];
        if def.is_source() || def.parents.iter().any(|p| in_frame[idx(p)]) {
            in_frame[t] = true;
        }
    }
    if !in_frame.iter().any(|x| *x) {
        return Err(SimError::Config("task graph has no source task".into()));
    }
    let mut metas = Vec::with_capacity(n);
    for (t, def) in g.tasks.iter().enumerate() {
        let prof = w
            .profile
            .tasks
            .get(&def.name)
            .cloned()
            .ok_or_else(|| SimError::Config(format!("task {} has no profile", def.name)))?;
        let parents = def.parents.iter().map(|p| idx(p)).filter(|&p| in_frame[p] == in_frame[t]).collect();
        let children = def.children.iter().map(|c| idx(c)).filter(|&c| in_frame[c] == in_frame[t]).collect();
        let pinned_node = g
            .directives_of(DirectiveKind::Schedule, &def.name)
            .find_map(|d| d.payload.get("node").and_then(|v| v.trim_start_matches('n').parse::<usize>().ok()))
            .filter(|&k| k < nodes);
        metas.push(TaskMeta {
            name: def.name.clone(),
            prof,
            parents,
            children,
            sync: def.sync_condition().is_some() || g.is_synchronized(&def.name),
            isolate: g.has_directive(DirectiveKind::Isolate, &def.name),
            persist: g.has_directive(DirectiveKind::Persist, &def.name),
            pinned_node,
            preflight: !in_frame[t],
        });
    }
    Ok((metas, topo))
}

impl World {
    pub fn new(s: SimSetup) -> Result<Self, SimError> {
        s.cluster.validate()?;
        s.topology.validate()?;
        s.class.validate()?;
        s.workload.profile.validate()?;
        if s.devices == 0 {
            return Err(SimError::Config("at least one device is required".into()));
        }
        let (tasks, topo) = build_tasks(&s.workload, s.cluster.nodes)?;
        for t in &tasks {
            if !s.plan.assignment.contains_key(&t.name) {
                return Err(SimError::Config(format!("plan does not place task {}", t.name)));
            }
        }
        let goal_task = s.workload.profile.goal_task.as_ref().and_then(|g| tasks.iter().position(|t| &t.name == g));
        let n = s.devices;
        let seed = s.seed;
        let field = FieldModel::generate(&s.field, n, seed)?;
        let regions = crate::edgesim::partition_field(&field.grid, n);
        let coverage = CoverageMap::new(field.grid.clone(), &regions);
        let mut devices = Vec::with_capacity(n);
        for (d, reg) in regions.iter().enumerate() {
            let start = reg.cells().find(|c| field.grid.is_free(*c)).unwrap_or((reg.c0, reg.r0));
            let dev = EdgeDevice::new(d, s.class.clone(), field.center(start));
            devices.push(DeviceState {
                dev,
                station: ServiceStation::new(format!("device{d}"), s.class.cores),
                rng: RngStream::new(seed, stream_id_for(&format!("edge.{d}"))),
                flying: false,
                capturing: true,
                route_done: false,
                next_hb: SimTime::ZERO,
                last_hb_sent: SimTime::ZERO,
                died_at: None,
                batch_frames: 0,
                batch_targets: Vec::new(),
                arrival_rng: RngStream::new(seed, stream_id_for(&format!("arrivals.{d}"))),
                jobs: Vec::new(),
            });
        }
        let net = Network::new(s.topology.clone(), n);
        let monitor = HeartbeatMonitor::new(n, secs(s.topology.heartbeat_timeout_s), SimTime::ZERO);
        let cfg = s.cluster.clone();
        let plan_locs = tasks.iter().map(|t| s.plan.location(&t.name).clone()).collect();
        let targets_total = field.targets.len();
        Ok(Self {
            goal_task,
            topo,
            plans: vec![s.plan],
            locs: vec![plan_locs],
            exec: s.exec,
            class: s.class,
            arrival: s.arrival,
            n,
            regions,
            coverage,
            devices,
            monitor,
            declared: vec![false; n],
            net,
            transfers: Vec::new(),
            free_transfers: Vec::new(),
            cluster: ClusterState::new(&cfg),
            selector: s.selector,
            controller: ServiceStation::new("controller", cfg.controller_servers),
            store: ServiceStation::new("store", cfg.store.servers),
            admission: Admission::new(cfg.user_concurrency_cap, cfg.controller_queue_cap),
            core_wait: VecDeque::new(),
            tracker: JobLatencyTracker::new(cfg.straggler.clone()),
            probation: ProbationTracker::new(cfg.probation.clone(), cfg.nodes),
            invs: Vec::new(),
            slots: Vec::new(),
            sync: BTreeMap::new(),
            cfg,
            jobs: Vec::new(),
            frame_jobs_live: 0,
            rng_cloud: RngStream::new(seed, stream_id_for("cloud.exec")),
            rng_cold: RngStream::new(seed, stream_id_for("cloud.cold")),
            rng_emit: RngStream::new(seed, stream_id_for("emit")),
            rng_hb: RngStream::new(seed, stream_id_for("heartbeat")),
            replanner: s.replanner,
            window: Vec::new(),
            window_cost: 0.0,
            mission_over: false,
            mission_end: None,
            mission_infeasible: false,
            found: vec![false; targets_total],
            counters: Counters::default(),
            latency: SampleSet::new(RngStream::new(seed, stream_id_for("metrics.latency"))),
            task_latency: BTreeMap::new(),
            breakdown: Vec::new(),
            battery: vec![Default::default(); n],
            cloud_us: 0.0,
            detections: Vec::new(),
            seed,
            config_hash: s.config_hash,
            field,
            tasks,
            workload: s.workload,
        })
    }

    /// Tier of `task` for a job of `device` under plan `plan`.
    fn tier(&self, plan: usize, task: usize, device: usize) -> Tier {
        if self.tasks[task].sync && self.locs[plan][task].kind == Tier::Edge {
            return Tier::Edge;
        }
        self.locs[plan][task].tier_for_device(device)
    }

    fn current_plan(&self) -> usize {
        self.plans.len() - 1
    }

    fn seed_events(&mut self, q: &mut EventQueue<Ev>, faults: &Faults) {
        for d in 0..self.n {
            self.start_preflight(d, q);
            q.push(SimTime::ZERO, dev_id(d), Ev::HeartbeatSend { device: d });
        }
        for &(d, t) in &faults.kills {
            if d < self.n {
                q.push(SimTime::from_secs(t), dev_id(d), Ev::Kill { device: d });
            }
        }
        for &(t, f) in &faults.capacity_changes {
            q.push(SimTime::from_secs(t), NETWORK, Ev::CapacityChange { factor: f });
        }
        q.push(SimTime::ZERO, CONTROL, Ev::MetricsTick);
        if let Some(r) = &self.replanner {
            q.push(SimTime::from_secs(r.interval_s()), CONTROL, Ev::ReplanTick);
        }
        let cap = match self.workload.profile.goal {
            crate::workloads::Goal::Duration { seconds } => seconds.min(self.workload.profile.mission_cap_s),
            crate::workloads::Goal::AllTargets => self.workload.profile.mission_cap_s,
        };
        q.push(SimTime::from_secs(cap), CONTROL, Ev::MissionEnd);
    }

    /// Ends the mission once coverage and the goal are satisfied.
    fn check_mission(&mut self, q: &mut EventQueue<Ev>) {
        if self.mission_over {
            return;
        }
        let goal_met = match self.workload.profile.goal {
            crate::workloads::Goal::AllTargets => self.found.iter().all(|f| *f),
            crate::workloads::Goal::Duration { .. } => false,
        };
        let all_dead = self.devices.iter().all(|d| !d.dev.alive);
        if (goal_met && self.coverage.complete()) || all_dead {
            self.end_mission(q);
        }
    }

    fn end_mission(&mut self, q: &mut EventQueue<Ev>) {
        if !self.mission_over {
            self.mission_over = true;
            self.mission_end = Some(q.now());
            self.sample_battery(q.now());
        }
    }

    fn sample_battery(&mut self, now: SimTime) {
        for (d, s) in self.devices.iter().enumerate() {
            self.battery[d].push(now.as_secs(), s.dev.battery);
        }
    }

    fn on_metrics_tick(&mut self, q: &mut EventQueue<Ev>) {
        if self.mission_over {
            return;
        }
        self.sample_battery(q.now());
        q.push(q.now() + secs(1.0), CONTROL, Ev::MetricsTick);
    }
}

impl Model for World {
    type Event = Ev;

    fn handle(&mut self, ev: SimEvent<Ev>, q: &mut EventQueue<Ev>) {
        match ev.payload {
            Ev::FrameTick { device } => self.on_frame_tick(device, q),
            Ev::Arrival { device } => self.on_arrival(device, q),
            Ev::HeartbeatSend { device } => self.on_heartbeat_send(device, q),
            Ev::HeartbeatRecv { device } => self.on_heartbeat_recv(device, q),
            Ev::HeartbeatDeadline(d) => self.on_deadline(d, q),
            Ev::Kill { device } => self.on_kill(device, q),
            Ev::CapacityChange { factor } => self.on_capacity_change(factor, q),
            Ev::LinkCheck { link, generation } => self.on_link_check(link, generation, q),
            Ev::HopArrive { transfer } => self.on_hop_arrive(transfer, q),
            Ev::EdgeDone { device, token } => self.on_edge_done(device, token, q),
            Ev::ControllerDone { token } => self.on_controller_done(token, q),
            Ev::StoreDone { token } => self.on_store_done(token, q),
            Ev::SyncArrive { job, task } => self.sync_arrive(job, task, q),
            Ev::SyncDone { task, token } => self.on_sync_done(task, token, q),
            Ev::ContainerReady { inv } => self.on_container_ready(inv, q),
            Ev::InputsReady { inv } => self.on_inputs_ready(inv, q),
            Ev::ExecDone { inv } => self.on_exec_done(inv, q),
            Ev::StragglerCheck { inv } => self.on_straggler_check(inv, q),
            Ev::ContainerExpire { container, generation } => self.on_container_expire(container, generation, q),
            Ev::ReplanTick => self.on_replan_tick(q),
            Ev::MetricsTick => self.on_metrics_tick(q),
            Ev::MissionEnd => self.end_mission(q),
        }
    }

    fn event_kind(e: &Ev) -> &'static str {
        match e {
            Ev::FrameTick { .. } => "frame_tick",
            Ev::Arrival { .. } => "arrival",
            Ev::HeartbeatSend { .. } => "heartbeat_send",
            Ev::HeartbeatRecv { .. } => "heartbeat_recv",
            Ev::HeartbeatDeadline(_) => "heartbeat_deadline",
            Ev::Kill { .. } => "kill",
            Ev::CapacityChange { .. } => "capacity_change",
            Ev::LinkCheck { .. } => "link_check",
            Ev::HopArrive { .. } => "hop_arrive",
            Ev::EdgeDone { .. } => "edge_done",
            Ev::ControllerDone { .. } => "controller_done",
            Ev::StoreDone { .. } => "store_done",
            Ev::SyncArrive { .. } => "sync_arrive",
            Ev::SyncDone { .. } => "sync_done",
            Ev::ContainerReady { .. } => "container_ready",
            Ev::InputsReady { .. } => "inputs_ready",
            Ev::ExecDone { .. } => "exec_done",
            Ev::StragglerCheck { .. } => "straggler_check",
            Ev::ContainerExpire { .. } => "container_expire",
            Ev::ReplanTick => "replan_tick",
            Ev::MetricsTick => "metrics_tick",
            Ev::MissionEnd => "mission_end",
        }
    }

    fn event_digest(e: &Ev) -> u64 {
        match *e {
            Ev::FrameTick { device }
            | Ev::Arrival { device }
            | Ev::HeartbeatSend { device }
            | Ev::HeartbeatRecv { device }
            | Ev::Kill { device } => device as u64,
            Ev::EdgeDone { device, token } => ((device as u64) << 32) ^ token,
            Ev::LinkCheck { link, generation } => ((link as u64) << 40) ^ generation,
            Ev::HopArrive { transfer } => transfer as u64,
            Ev::ControllerDone { token } | Ev::StoreDone { token } => token,
            Ev::SyncArrive { job, task } => ((job as u64) << 8) ^ task as u64,
            Ev::SyncDone { task, token } => ((task as u64) << 48) ^ token,
            Ev::ContainerReady { inv }
            | Ev::InputsReady { inv }
            | Ev::ExecDone { inv }
            | Ev::StragglerCheck { inv } => inv as u64,
            Ev::ContainerExpire { container, generation } => ((container as u64) << 24) ^ generation,
            Ev::HeartbeatDeadline(d) => ((d.device as u64) << 32) ^ d.generation,
            Ev::CapacityChange { factor } => factor.to_bits(),
            Ev::ReplanTick | Ev::MetricsTick | Ev::MissionEnd => 0,
        }
    }

    fn component_name(&self, id: ComponentId) -> String {
        match id {
            CLOUD => "cloud".into(),
            NETWORK => "network".into(),
            CONTROL => "control".into(),
            ComponentId(d) => format!("d{d}"),
        }
    }
}

/// Runs one simulation to completion and returns its report. The optional
/// trace receives one JSON line per event.
pub fn simulate(setup: SimSetup, trace: Option<&mut dyn Write>) -> Result<MetricsReport, SimError> {
    let faults = setup.faults.clone();
    let wall = setup.wall_clock_cap;
    let mut world = World::new(setup)?;
    let mut q = EventQueue::new();
    world.seed_events(&mut q, &faults);
    let limits = RunLimits {
        wall_clock_cap: wall,
        ..RunLimits::default()
    };
    let outcome = run(&mut world, &mut q, &limits, trace)?;
    Ok(world.report(&outcome))
}
