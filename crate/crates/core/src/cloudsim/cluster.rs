use std::collections::BTreeMap;

use serde::Serialize;

use super::config::ClusterConfig;
use crate::simkernel::{Micros, SimTime};

pub type ContainerId = usize;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ContainerState {
    Instantiating,
    Busy,
    Idle,
    Terminated,
}

#[derive(Clone, Debug, Serialize)]
pub struct ServerNode {
    pub id: usize,
    pub logical_cores: u32,
    pub cores_in_use: u32,
    pub memory_mb: u64,
    pub probation_until: Option<SimTime>,
    /// Execution-time multiplier (1.0 for a healthy node).
    pub slowdown: f64,
    core_owner: Vec<Option<ContainerId>>,
}

impl ServerNode {
    pub fn utilization(&self) -> f64 {
        self.cores_in_use as f64 / self.logical_cores as f64
    }

    pub fn on_probation(&self, now: SimTime) -> bool {
        self.probation_until.is_some_and(|t| now < t)
    }

    pub fn has_free_core(&self) -> bool {
        self.cores_in_use < self.logical_cores
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ContainerInst {
    pub id: ContainerId,
    pub node_id: usize,
    pub task_type: String,
    pub deps: u32,
    pub state: ContainerState,
    pub idle_since: Option<SimTime>,
    pub pinned_core: u32,
    /// Output of the last task instance run here: (instance id, bytes).
    pub resident_output: Option<(u64, u64)>,
    /// Dedicated containers (Isolate) are never reused.
    pub dedicated: bool,
    /// Bumped whenever the container goes idle; expiry events carry it.
    pub idle_generation: u64,
}

/// Nodes and containers of the serverless cluster.
#[derive(Clone, Debug)]
pub struct ClusterState {
    pub nodes: Vec<ServerNode>,
    pub containers: Vec<ContainerInst>,
    pub keepalive: Micros,
    idle_stacks: BTreeMap<(String, u32), Vec<(ContainerId, u64)>>,
    live: usize,
}

impl ClusterState {
    pub fn new(cfg: &ClusterConfig) -> Self {
        let nodes = (0..cfg.nodes)
            .map(|id| ServerNode {
                id,
                logical_cores: cfg.cores_per_node,
                cores_in_use: 0,
                memory_mb: cfg.memory_mb,
                probation_until: None,
                slowdown: cfg.slow_nodes.iter().find(|(n, _)| *n == id).map_or(1.0, |(_, f)| *f),
                core_owner: vec![None; cfg.cores_per_node as usize],
            })
            .collect();
        Self {
            nodes,
            containers: Vec::new(),
            keepalive: crate::simkernel::secs(cfg.keepalive_s),
            idle_stacks: BTreeMap::new(),
            live: 0,
        }
    }

    pub fn total_cores(&self) -> u64 {
        self.nodes.iter().map(|n| n.logical_cores as u64).sum()
    }

    pub fn cores_in_use(&self) -> u64 {
        self.nodes.iter().map(|n| n.cores_in_use as u64).sum()
    }

    pub fn live_containers(&self) -> usize {
        self.live
    }

    /// Create a container pinned to a free core of `node`.
    pub fn instantiate(&mut self, node: usize, task_type: &str, deps: u32, dedicated: bool) -> ContainerId {
        let id = self.containers.len();
        let n = &mut self.nodes[node];
        let core = n.core_owner.iter().position(Option::is_none).expect("instantiate on a node without a free core");
        assert!(n.core_owner[core].is_none(), "logical core already hosts a container");
        n.core_owner[core] = Some(id);
        n.cores_in_use += 1;
        debug_assert!(n.cores_in_use <= n.logical_cores);
        self.containers.push(ContainerInst {
            id,
            node_id: node,
            task_type: task_type.to_string(),
            deps,
            state: ContainerState::Instantiating,
            idle_since: None,
            pinned_core: core as u32,
            resident_output: None,
            dedicated,
            idle_generation: 0,
        });
        self.live += 1;
        id
    }

    fn transition(&mut self, id: ContainerId, to: ContainerState) {
        let c = &mut self.containers[id];
        let ok = matches!(
            (c.state, to),
            (ContainerState::Instantiating, ContainerState::Busy)
                | (ContainerState::Busy, ContainerState::Idle)
                | (ContainerState::Idle, ContainerState::Busy)
                | (ContainerState::Idle, ContainerState::Terminated)
                | (ContainerState::Busy, ContainerState::Terminated)
        );
        assert!(ok, "illegal container transition {:?} -> {to:?}", c.state);
        c.state = to;
    }

    /// Instantiation finished; the container starts serving.
    pub fn ready(&mut self, id: ContainerId) {
        self.transition(id, ContainerState::Busy);
    }

    /// Reuse an idle container for `task_type`.
    pub fn claim(&mut self, id: ContainerId, task_type: &str) {
        self.transition(id, ContainerState::Busy);
        let c = &mut self.containers[id];
        c.idle_since = None;
        c.task_type = task_type.to_string();
    }

    /// Finish serving. Returns the idle generation to stamp the expiry event
    /// with, or `None` when the container was terminated (dedicated).
    pub fn release(&mut self, id: ContainerId, now: SimTime) -> Option<u64> {
        if self.containers[id].dedicated {
            self.terminate(id);
            return None;
        }
        self.transition(id, ContainerState::Idle);
        let c = &mut self.containers[id];
        c.idle_since = Some(now);
        c.idle_generation += 1;
        let key = (c.task_type.clone(), c.deps);
        let entry = (id, c.idle_generation);
        self.idle_stacks.entry(key).or_default().push(entry);
        Some(entry.1)
    }

    pub fn terminate(&mut self, id: ContainerId) {
        self.transition(id, ContainerState::Terminated);
        let c = &self.containers[id];
        let (node, core) = (c.node_id, c.pinned_core as usize);
        let n = &mut self.nodes[node];
        assert_eq!(n.core_owner[core], Some(id), "core ownership out of sync");
        n.core_owner[core] = None;
        n.cores_in_use -= 1;
        self.live -= 1;
    }

    /// Terminate a container whose expiry event fired, if it is still idle
    /// from the same idle period.
    pub fn expire(&mut self, id: ContainerId, generation: u64) -> bool {
        let c = &self.containers[id];
        if c.state == ContainerState::Idle && c.idle_generation == generation {
            self.terminate(id);
            true
        } else {
            false
        }
    }

    /// Terminate every idle container idle for longer than the keep-alive window.
    pub fn tick_keepalive(&mut self, now: SimTime) -> Vec<ContainerId> {
        let due: Vec<ContainerId> = self
            .containers
            .iter()
            .filter(|c| c.state == ContainerState::Idle && c.idle_since.is_some_and(|t| now - t > self.keepalive))
            .map(|c| c.id)
            .collect();
        for &id in &due {
            self.terminate(id);
        }
        due
    }

    /// Most recently idled compatible container, skipping stale entries.
    pub fn find_warm(&mut self, task_type: &str, deps: u32, node_ok: impl Fn(usize) -> bool) -> Option<ContainerId> {
        let stack = self.idle_stacks.get_mut(&(task_type.to_string(), deps))?;
        let mut skipped = Vec::new();
        let mut found = None;
        while let Some((id, gen)) = stack.pop() {
            let c = &self.containers[id];
            if c.state != ContainerState::Idle || c.idle_generation != gen || c.task_type != task_type {
                continue;
            }
            if node_ok(c.node_id) {
                found = Some(id);
                break;
            }
            skipped.push((id, gen));
        }
        stack.extend(skipped.into_iter().rev());
        found
    }

    /// Oldest idle container on an eligible node, for eviction.
    pub fn oldest_idle(&self, node_ok: impl Fn(usize) -> bool) -> Option<ContainerId> {
        self.containers
            .iter()
            .filter(|c| c.state == ContainerState::Idle && node_ok(c.node_id))
            .min_by_key(|c| (c.idle_since, c.id))
            .map(|c| c.id)
    }

    /// Checks that every core hosts at most one live container and counters agree.
    pub fn check_core_exclusivity(&self) -> bool {
        for n in &self.nodes {
            let used = n.core_owner.iter().filter(|o| o.is_some()).count() as u32;
            if used != n.cores_in_use {
                return false;
            }
            for (core, owner) in n.core_owner.iter().enumerate() {
                if let Some(id) = owner {
                    let c = &self.containers[*id];
                    if c.state == ContainerState::Terminated || c.node_id != n.id || c.pinned_core as usize != core {
                        return false;
                    }
                }
            }
        }
        true
    }
}
