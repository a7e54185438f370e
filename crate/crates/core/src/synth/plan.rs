use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dsl::PlaceTarget;

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tier {
    Cloud,
    Edge,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeScope {
    All,
    Devices(Vec<String>),
}

/// Where a task runs. `edge_scope` is present iff the tier is Edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub kind: Tier,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_scope: Option<EdgeScope>,
}

impl Location {
    pub fn cloud() -> Self {
        Location {
            kind: Tier::Cloud,
            edge_scope: None,
        }
    }

    pub fn edge() -> Self {
        Location {
            kind: Tier::Edge,
            edge_scope: Some(EdgeScope::All),
        }
    }

    pub fn from_place(p: &PlaceTarget) -> Self {
        match p {
            PlaceTarget::Cloud => Location::cloud(),
            PlaceTarget::EdgeAll => Location::edge(),
            PlaceTarget::EdgeDevices(ids) => Location {
                kind: Tier::Edge,
                edge_scope: Some(EdgeScope::Devices(ids.clone())),
            },
        }
    }

    pub fn is_edge(&self) -> bool {
        self.kind == Tier::Edge
    }

    pub fn is_well_formed(&self) -> bool {
        self.edge_scope.is_some() == self.is_edge()
    }

    /// Tier used by `device` (index into the swarm). Devices outside an
    /// explicit edge scope run the task in the cloud.
    pub fn tier_for_device(&self, device: usize) -> Tier {
        match (&self.kind, &self.edge_scope) {
            (Tier::Edge, Some(EdgeScope::Devices(ids))) => {
                if ids.iter().any(|d| device_matches(d, device)) {
                    Tier::Edge
                } else {
                    Tier::Cloud
                }
            }
            (k, _) => *k,
        }
    }
}

/// Device ids in an edge scope are either bare indices (`3`) or `d3`.
pub fn device_matches(id: &str, device: usize) -> bool {
    let s = id.strip_prefix('d').unwrap_or(id);
    s.parse::<usize>().is_ok_and(|n| n == device)
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.kind, &self.edge_scope) {
            (Tier::Cloud, _) => f.write_str("Cloud"),
            (Tier::Edge, Some(EdgeScope::Devices(ids))) => write!(f, "Edge:{}", ids.join(",")),
            (Tier::Edge, _) => f.write_str("Edge"),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DataPathKind {
    RpcCloudEdge,
    RpcAccelerated,
    StoreExchange,
    RemoteMemory,
    SameContainer,
    OnDeviceLocal,
}

impl DataPathKind {
    /// Whether this path may carry data from a `from` task to a `to` task.
    pub fn legal_between(self, from: Tier, to: Tier) -> bool {
        use DataPathKind::*;
        match self {
            RpcCloudEdge | RpcAccelerated => from != to,
            StoreExchange | RemoteMemory | SameContainer => from == Tier::Cloud && to == Tier::Cloud,
            OnDeviceLocal => from == Tier::Edge && to == Tier::Edge,
        }
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccelConfig {
    pub network_accel: bool,
    pub remote_mem: bool,
}

impl AccelConfig {
    pub const NONE: AccelConfig = AccelConfig {
        network_accel: false,
        remote_mem: false,
    };
    pub const ALL: AccelConfig = AccelConfig {
        network_accel: true,
        remote_mem: true,
    };

    /// Parses the `--accel` flag values none, net, mem and all.
    pub fn parse(s: &str) -> Option<AccelConfig> {
        Some(match s {
            "none" => AccelConfig::NONE,
            "net" => AccelConfig {
                network_accel: true,
                remote_mem: false,
            },
            "mem" => AccelConfig {
                network_accel: false,
                remote_mem: true,
            },
            "all" => AccelConfig::ALL,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgePath {
    pub parent: String,
    pub child: String,
    pub path: DataPathKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementPlan {
    pub plan_id: u64,
    pub assignment: BTreeMap<String, Location>,
    #[serde(default)]
    pub edge_paths: Vec<EdgePath>,
}

impl PlacementPlan {
    pub fn location(&self, task: &str) -> &Location {
        &self.assignment[task]
    }

    pub fn path(&self, parent: &str, child: &str) -> Option<DataPathKind> {
        self.edge_paths.iter().find(|e| e.parent == parent && e.child == child).map(|e| e.path)
    }

    /// Compact label such as `A=E,B=C` in the given task order.
    pub fn label(&self, order: &[String]) -> String {
        order
            .iter()
            .map(|t| {
                let c = if self.assignment[t].is_edge() { 'E' } else { 'C' };
                format!("{t}={c}")
            })
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanEvaluation {
    pub plan_id: u64,
    pub predicted_p50_latency: f64,
    pub predicted_p99_latency: f64,
    pub mean_battery_drain: f64,
    pub peak_bandwidth: f64,
    pub cloud_cost: f64,
    /// Jobs per second over the profiling run, for throughput constraints.
    #[serde(default)]
    pub throughput: f64,
}
