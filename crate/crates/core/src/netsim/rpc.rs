use serde::{Deserialize, Serialize};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RpcKind {
    Baseline,
    Accelerated,
}

/// Per-request cost and single-core throughput of an RPC stack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RpcPathModel {
    pub kind: RpcKind,
    pub overhead_us: f64,
    pub max_rate_per_core: f64,
}

impl RpcPathModel {
    pub fn baseline() -> Self {
        Self {
            kind: RpcKind::Baseline,
            overhead_us: 40.0,
            max_rate_per_core: 1.0e6,
        }
    }

    pub fn accelerated() -> Self {
        Self {
            kind: RpcKind::Accelerated,
            overhead_us: 2.1,
            max_rate_per_core: 12.4e6,
        }
    }

    pub fn overhead_ns(&self) -> f64 {
        self.overhead_us * 1e3
    }
}

/// Whether `rate` requests/s fit within the path's capacity on `cores`.
pub fn rpc_capacity_check(path: &RpcPathModel, rate: f64, cores: u32) -> bool {
    rate <= path.max_rate_per_core * cores as f64
}

/// Fluid FIFO model of the NIC's RPC processor, in nanoseconds.
#[derive(Clone, Debug)]
pub struct NicQueue {
    service_ns: f64,
    free_at_ns: f64,
    pub max_backlog_ns: f64,
}

impl NicQueue {
    pub fn new(path: &RpcPathModel, cores: u32) -> Self {
        Self {
            service_ns: 1e9 / (path.max_rate_per_core * cores as f64),
            free_at_ns: 0.0,
            max_backlog_ns: 0.0,
        }
    }

    /// Admit one request at `now_ns`; returns its queueing delay in ns.
    pub fn admit(&mut self, now_ns: f64) -> f64 {
        let start = self.free_at_ns.max(now_ns);
        let wait = start - now_ns;
        self.free_at_ns = start + self.service_ns;
        self.max_backlog_ns = self.max_backlog_ns.max(wait);
        wait
    }

    /// Offer a constant-rate stream for `duration_s`; returns the final backlog in ns.
    pub fn offer(&mut self, rate: f64, duration_s: f64) -> f64 {
        if rate <= 0.0 {
            return 0.0;
        }
        let gap = 1e9 / rate;
        let n = (rate * duration_s).round() as u64;
        let mut last = 0.0;
        for i in 0..n {
            last = self.admit(i as f64 * gap);
        }
        last
    }
}
