//! Deterministic discrete-event simulation kernel: virtual clock, ordered
//! event queue, per-component random streams, queueing stations and metric
//! accumulation.

mod dist;
mod engine;
pub mod mm1;
mod metrics;
mod queue;
mod rng;
mod station;
mod time;

pub use dist::{lognormal_params, sample, DistSpec};
pub use engine::{run, Model, RunLimits, RunOutcome, StopReason};
pub use metrics::{
    percentile, percentile_sorted, Counters, FailureDetection, LatencySummary, MetricsReport, SampleSet, TimeSeries,
    EXACT_SAMPLE_LIMIT, METRICS_SCHEMA_VERSION, RESERVOIR_SIZE,
};
pub use queue::{ComponentId, EventQueue, SimEvent};
pub use rng::{stream_id_for, RngStream};
pub use station::{ServiceStation, StationStats, Started};
pub use time::{ceil_ns, millis, secs, Micros, SimTime, MICROS_PER_MS, MICROS_PER_SEC};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("livelock: {events} events at {at} without clock progress")]
    Livelock { at: SimTime, events: u64 },
    #[error("wall-clock cap exceeded at simulated {sim_time} after {events} events")]
    WallClockExceeded { sim_time: SimTime, events: u64 },
    #[error("trace i/o: {0}")]
    Io(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}
