//! Network model: processor-sharing links, RPC paths and heartbeat-based
//! failure detection.

mod heartbeat;
mod link;
mod rpc;
mod topology;

pub use heartbeat::{Deadline, HeartbeatMonitor};
pub use link::{idle_transfer_us, LinkKind, PsLink};
pub use rpc::{rpc_capacity_check, NicQueue, RpcKind, RpcPathModel};
pub use topology::{Endpoint, Network, TopologyConfig};
