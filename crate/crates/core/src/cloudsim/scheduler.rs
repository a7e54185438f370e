use super::cluster::{ClusterState, ContainerId, ContainerState};
use super::selector::NodeSelector;
use crate::simkernel::SimTime;

/// What the scheduler needs to know about one cloud invocation.
#[derive(Clone, Debug)]
pub struct InvocationRequest<'a> {
    pub task_type: &'a str,
    /// Software dependency set id; reuse requires equality.
    pub deps: u32,
    /// Container that ran the parent instance, when it ran in the cloud.
    pub parent_container: Option<ContainerId>,
    pub colocate: bool,
    /// Isolate directive: dedicated container, never reused.
    pub isolate: bool,
    /// Schedule directive pin to a node.
    pub pinned_node: Option<usize>,
    /// Node to avoid (speculative duplicates).
    pub exclude_node: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decision {
    ReuseParent(ContainerId),
    Warm(ContainerId),
    Cold { node: usize },
    ColdAfterEvict { node: usize, evict: ContainerId },
    /// No core available; the invocation waits in the controller queue.
    Wait,
}

impl Decision {
    pub fn is_cold(&self) -> bool {
        matches!(self, Decision::Cold { .. } | Decision::ColdAfterEvict { .. })
    }
}

fn node_eligible(cluster: &ClusterState, req: &InvocationRequest, node: usize, now: Option<SimTime>) -> bool {
    if req.exclude_node == Some(node) || req.pinned_node.is_some_and(|p| p != node) {
        return false;
    }
    now.is_none_or(|t| !cluster.nodes[node].on_probation(t))
}

/// Choose where an invocation runs. Only the idle lists are touched; the
/// caller applies the decision. Nodes on probation are skipped unless no
/// other node could ever host the invocation.
pub fn schedule_invocation(
    req: &InvocationRequest,
    cluster: &mut ClusterState,
    selector: &mut dyn NodeSelector,
    now: SimTime,
) -> Decision {
    let any_healthy = (0..cluster.nodes.len()).any(|n| node_eligible(cluster, req, n, Some(now)));
    let probe = if any_healthy { Some(now) } else { None };
    decide(req, cluster, selector, probe)
}

fn decide(req: &InvocationRequest, cluster: &mut ClusterState, selector: &mut dyn NodeSelector, now: Option<SimTime>) -> Decision {
    if !req.isolate && req.colocate {
        if let Some(pid) = req.parent_container {
            let p = &cluster.containers[pid];
            if p.state == ContainerState::Idle && p.deps == req.deps && !p.dedicated && node_eligible(cluster, req, p.node_id, now) {
                return Decision::ReuseParent(pid);
            }
        }
    }
    if !req.isolate {
        let snapshot = &*cluster;
        let ok: Vec<bool> = (0..snapshot.nodes.len()).map(|n| node_eligible(snapshot, req, n, now)).collect();
        if let Some(id) = cluster.find_warm(req.task_type, req.deps, |n| ok[n]) {
            return Decision::Warm(id);
        }
    }
    let with_core: Vec<usize> = (0..cluster.nodes.len())
        .filter(|&n| node_eligible(cluster, req, n, now) && cluster.nodes[n].has_free_core())
        .collect();
    if !with_core.is_empty() {
        return Decision::Cold {
            node: selector.select(cluster, &with_core),
        };
    }
    match cluster.oldest_idle(|n| node_eligible(cluster, req, n, now)) {
        Some(evict) => Decision::ColdAfterEvict {
            node: cluster.containers[evict].node_id,
            evict,
        },
        None => Decision::Wait,
    }
}
