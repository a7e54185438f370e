//! Serverless cluster model: containers, scheduling, stragglers and probation.

mod cluster;
mod config;
mod controller;
mod exchange;
mod scheduler;
mod selector;
mod straggler;

pub use cluster::{ClusterState, ContainerId, ContainerInst, ContainerState, ServerNode};
pub use config::{ClusterConfig, ProbationConfig, StoreConfig, StragglerConfig};
pub use controller::{Admission, Admit};
pub use exchange::{exchange_data, ExchangeCost};
pub use scheduler::{schedule_invocation, Decision, InvocationRequest};
pub use selector::{selector_by_name, LeastUtilized, NodeSelector, RoundRobin, SELECTORS};
pub use straggler::{detect_stragglers, InFlight, JobLatencyTracker, ProbationChange, ProbationTracker, RespawnAction};
