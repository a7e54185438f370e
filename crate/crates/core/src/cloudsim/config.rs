use serde::{Deserialize, Serialize};

use crate::simkernel::{DistSpec, SimError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StoreConfig {
    pub servers: usize,
    pub base_ms: f64,
    /// Store throughput per request, MB/s.
    pub mb_per_s: f64,
}

impl Default for StoreConfig {
    fn default() -> Self {
        Self {
            servers: 8,
            base_ms: 2.0,
            mb_per_s: 200.0,
        }
    }
}

impl StoreConfig {
    pub fn request_us(&self, bytes: u64) -> f64 {
        self.base_ms * 1e3 + bytes as f64 / (self.mb_per_s * 1e6) * 1e6
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StragglerConfig {
    pub enabled: bool,
    /// Running time percentile beyond which an invocation is a straggler.
    pub percentile: f64,
    pub min_samples: usize,
    /// Sliding window of recent completions per task type.
    pub window: usize,
    /// Threshold recomputation cadence, in completions.
    pub recompute_every: usize,
}

impl Default for StragglerConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            percentile: 0.9,
            min_samples: 20,
            window: 200,
            recompute_every: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbationConfig {
    pub enabled: bool,
    pub stragglers: usize,
    pub window_s: f64,
    pub duration_s: f64,
}

impl Default for ProbationConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            stragglers: 5,
            window_s: 60.0,
            duration_s: 180.0,
        }
    }
}

/// Serverless cluster parameters (the cluster config file).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    pub nodes: usize,
    pub cores_per_node: u32,
    pub memory_mb: u64,
    pub keepalive_s: f64,
    pub cold_start: DistSpec,
    pub controller_overhead_ms: f64,
    pub controller_servers: usize,
    pub user_concurrency_cap: usize,
    pub controller_queue_cap: usize,
    pub store: StoreConfig,
    pub straggler: StragglerConfig,
    pub probation: ProbationConfig,
    /// Place children in their parent's container when compatible.
    pub colocate: bool,
    pub node_selector: String,
    pub same_container_us: f64,
    pub remote_memory_base_us: f64,
    pub remote_memory_gbps: f64,
    /// Execution-time multipliers for degraded nodes, `(node, factor)`.
    pub slow_nodes: Vec<(usize, f64)>,
    /// Node and controller counts are multiplied by devices / reference_devices
    /// when the swarm is larger than the reference.
    pub scale_with_devices: bool,
    pub reference_devices: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            nodes: 12,
            cores_per_node: 40,
            memory_mb: 192 * 1024,
            keepalive_s: 15.0,
            cold_start: DistSpec::lognormal_ms(30.0, 120.0),
            controller_overhead_ms: 1.0,
            controller_servers: 16,
            user_concurrency_cap: 1000,
            controller_queue_cap: 100_000,
            store: StoreConfig::default(),
            straggler: StragglerConfig::default(),
            probation: ProbationConfig::default(),
            colocate: true,
            node_selector: "least-utilized".to_string(),
            same_container_us: 10.0,
            remote_memory_base_us: 2.1,
            remote_memory_gbps: 40.0,
            slow_nodes: Vec::new(),
            scale_with_devices: true,
            reference_devices: 16,
        }
    }
}

impl ClusterConfig {
    pub const KEEPALIVE_RANGE_S: (f64, f64) = (10.0, 30.0);

    /// Checks parameters. Keep-alive 0 (disabled) is accepted as a degenerate
    /// configuration; otherwise the window must lie in [10 s, 30 s].
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if self.nodes == 0 || self.cores_per_node == 0 {
            return bad("cluster needs at least one node and one core".into());
        }
        let (lo, hi) = Self::KEEPALIVE_RANGE_S;
        if self.keepalive_s != 0.0 && !(lo..=hi).contains(&self.keepalive_s) {
            return bad(format!("keep-alive {}s outside [{lo}, {hi}]s", self.keepalive_s));
        }
        self.cold_start.validate()?;
        if self.controller_servers == 0 || self.store.servers == 0 {
            return bad("controller and store need at least one server".into());
        }
        if !(0.0 < self.straggler.percentile && self.straggler.percentile < 1.0) {
            return bad("straggler percentile must be in (0, 1)".into());
        }
        if self.user_concurrency_cap == 0 {
            return bad("concurrency cap must be positive".into());
        }
        for &(n, f) in &self.slow_nodes {
            if n >= self.nodes || f <= 0.0 {
                return bad(format!("bad slow node entry ({n}, {f})"));
            }
        }
        Ok(())
    }

    pub fn scale_factor(&self, devices: usize) -> f64 {
        if self.scale_with_devices && devices > self.reference_devices {
            devices as f64 / self.reference_devices as f64
        } else {
            1.0
        }
    }

    /// Copy with node and controller counts scaled to the swarm size.
    pub fn scaled_for(&self, devices: usize) -> ClusterConfig {
        let k = self.scale_factor(devices);
        let mut c = self.clone();
        c.nodes = (self.nodes as f64 * k).ceil() as usize;
        c.controller_servers = (self.controller_servers as f64 * k).ceil() as usize;
        c.store.servers = (self.store.servers as f64 * k).ceil() as usize;
        c.user_concurrency_cap = (self.user_concurrency_cap as f64 * k).ceil() as usize;
        c
    }
}
