use serde::{Deserialize, Serialize};

use super::link::{LinkKind, PsLink};
use super::rpc::{RpcKind, RpcPathModel};
use crate::simkernel::{ceil_ns, Micros, SimError, SimTime};

/// Network topology parameters (the topology config file).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TopologyConfig {
    pub routers: usize,
    pub router_mbps: f64,
    pub wireless_base_latency_us: Micros,
    pub tor_gbps: f64,
    pub nic_gbps: f64,
    pub wired_base_latency_us: Micros,
    pub rpc_baseline: RpcPathModel,
    pub rpc_accelerated: RpcPathModel,
    pub rpc_cores: u32,
    pub heartbeat_period_s: f64,
    pub heartbeat_timeout_s: f64,
    pub heartbeat_bytes: u64,
    pub heartbeat_loss: f64,
    /// Link capacities are multiplied by devices / reference_devices when
    /// the swarm is larger than the reference.
    pub scale_with_devices: bool,
    pub reference_devices: usize,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            routers: 2,
            router_mbps: 867.0,
            wireless_base_latency_us: 2_000,
            tor_gbps: 40.0,
            nic_gbps: 10.0,
            wired_base_latency_us: 0,
            rpc_baseline: RpcPathModel::baseline(),
            rpc_accelerated: RpcPathModel::accelerated(),
            rpc_cores: 1,
            heartbeat_period_s: 1.0,
            heartbeat_timeout_s: 3.0,
            heartbeat_bytes: 64,
            heartbeat_loss: 0.0,
            scale_with_devices: true,
            reference_devices: 16,
        }
    }
}

impl TopologyConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        if self.routers == 0 {
            return bad("at least one router is required");
        }
        if !(self.router_mbps > 0.0 && self.tor_gbps > 0.0 && self.nic_gbps > 0.0) {
            return bad("link capacities must be positive");
        }
        if self.rpc_accelerated.overhead_us >= self.rpc_baseline.overhead_us {
            return bad("accelerated RPC overhead must be below the baseline");
        }
        if !(self.heartbeat_period_s > 0.0 && self.heartbeat_timeout_s > 0.0) {
            return bad("heartbeat period and timeout must be positive");
        }
        if !(0.0..1.0).contains(&self.heartbeat_loss) {
            return bad("heartbeat loss must be in [0, 1)");
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

    pub fn rpc(&self, kind: RpcKind) -> &RpcPathModel {
        match kind {
            RpcKind::Baseline => &self.rpc_baseline,
            RpcKind::Accelerated => &self.rpc_accelerated,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Endpoint {
    Device(usize),
    Cloud,
}

/// The instantiated links: one wireless medium per router, the ToR switch and
/// the gateway NIC.
#[derive(Clone, Debug)]
pub struct Network {
    pub cfg: TopologyConfig,
    pub links: Vec<PsLink>,
    routers: Vec<usize>,
    tor: usize,
    nic: usize,
}

impl Network {
    pub fn new(cfg: TopologyConfig, devices: usize) -> Self {
        let k = cfg.scale_factor(devices);
        let mut links = Vec::new();
        let mut routers = Vec::new();
        for r in 0..cfg.routers {
            routers.push(links.len());
            links.push(PsLink::new(
                links.len(),
                format!("router{r}"),
                LinkKind::Wireless,
                cfg.router_mbps * 1e6 * k,
                cfg.wireless_base_latency_us,
            ));
        }
        let tor = links.len();
        links.push(PsLink::new(tor, "tor", LinkKind::Wired, cfg.tor_gbps * 1e9 * k, cfg.wired_base_latency_us));
        let nic = links.len();
        links.push(PsLink::new(nic, "nic", LinkKind::Wired, cfg.nic_gbps * 1e9 * k, cfg.wired_base_latency_us));
        Self {
            cfg,
            links,
            routers,
            tor,
            nic,
        }
    }

    /// Devices are spread over routers round-robin.
    pub fn router_of(&self, device: usize) -> usize {
        self.routers[device % self.routers.len()]
    }

    pub fn wireless_links(&self) -> &[usize] {
        &self.routers
    }

    /// Store-and-forward hop sequence between two endpoints. Device-to-device
    /// traffic crosses the wireless medium twice.
    pub fn route(&self, src: Endpoint, dst: Endpoint) -> Vec<usize> {
        match (src, dst) {
            (Endpoint::Device(a), Endpoint::Cloud) => vec![self.router_of(a), self.tor, self.nic],
            (Endpoint::Cloud, Endpoint::Device(b)) => vec![self.nic, self.tor, self.router_of(b)],
            (Endpoint::Device(a), Endpoint::Device(b)) if a == b => vec![],
            (Endpoint::Device(a), Endpoint::Device(b)) => vec![self.router_of(a), self.router_of(b)],
            (Endpoint::Cloud, Endpoint::Cloud) => vec![self.tor],
        }
    }

    /// Latency of a transfer on idle links: per-hop base latency, per-request
    /// RPC overhead and serialization at each hop.
    pub fn idle_latency_us(&self, hops: &[usize], bytes: u64, rpc: Option<&RpcPathModel>) -> Micros {
        let mut ns = rpc.map_or(0.0, |r| r.overhead_ns());
        for &h in hops {
            let l = &self.links[h];
            ns += l.base_latency as f64 * 1e3 + bytes as f64 * 8.0 / l.capacity_bps * 1e9;
        }
        ceil_ns(ns)
    }

    pub fn start_flow(&mut self, now: SimTime, link: usize, flow: u64, bytes: u64) -> (SimTime, u64) {
        let l = &mut self.links[link];
        l.start(now, flow, bytes);
        (l.next_departure().expect("flow just started"), l.generation)
    }

    /// Handle a departure check. Returns finished flows and the next check, or
    /// `None` when the check is stale.
    pub fn on_check(&mut self, now: SimTime, link: usize, generation: u64) -> Option<(Vec<u64>, Option<(SimTime, u64)>)> {
        let l = &mut self.links[link];
        if l.generation != generation {
            return None;
        }
        let done = l.complete_due(now);
        let next = l.next_departure().map(|t| (t, l.generation));
        Some((done, next))
    }

    pub fn scale_wireless(&mut self, now: SimTime, factor: f64) -> Vec<(usize, SimTime, u64)> {
        let mut out = Vec::new();
        for &r in &self.routers {
            let l = &mut self.links[r];
            l.scale_capacity(now, factor);
            if let Some(t) = l.next_departure() {
                out.push((r, t, l.generation));
            }
        }
        out
    }

    /// Aggregate wireless throughput per one-second bin, Mbps.
    pub fn wireless_series(&self) -> Vec<(u64, f64)> {
        let mut agg = std::collections::BTreeMap::new();
        for &r in &self.routers {
            for (k, m) in self.links[r].bins_mbps() {
                *agg.entry(k).or_insert(0.0) += m;
            }
        }
        agg.into_iter().collect()
    }

    pub fn wireless_bytes(&self) -> f64 {
        self.routers.iter().map(|&r| self.links[r].bytes_total()).sum()
    }

    pub fn wireless_capacity_bps(&self) -> f64 {
        self.routers.iter().map(|&r| self.links[r].capacity_bps).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accelerated_wired_64b() {
        let net = Network::new(TopologyConfig::default(), 16);
        let hops = net.route(Endpoint::Cloud, Endpoint::Cloud);
        let acc = net.idle_latency_us(&hops, 64, Some(&RpcPathModel::accelerated()));
        assert_eq!(acc, 3, "2.1us plus ~13ns serialization rounds up to 3us");
        let base = net.idle_latency_us(&hops, 64, Some(&RpcPathModel::baseline()));
        assert!(base > acc);
    }

    #[test]
    fn frame_over_one_wireless_hop() {
        let net = Network::new(TopologyConfig::default(), 16);
        let r = net.router_of(0);
        let t = net.idle_latency_us(&[r], 2_000_000, None);
        let expect = 2e6 * 8.0 / 867e6 * 1e6 + 2_000.0;
        assert!((t as f64 - expect).abs() <= 1.0, "{t} vs {expect}");
    }

    #[test]
    fn device_to_device_crosses_medium_twice() {
        let net = Network::new(TopologyConfig::default(), 4);
        assert_eq!(net.route(Endpoint::Device(0), Endpoint::Device(2)).len(), 2);
        assert_eq!(net.route(Endpoint::Device(0), Endpoint::Device(0)).len(), 0);
        assert_eq!(net.route(Endpoint::Device(1), Endpoint::Cloud)[0], net.router_of(1));
    }

    #[test]
    fn capacity_scales_past_reference() {
        let small = Network::new(TopologyConfig::default(), 16);
        let big = Network::new(TopologyConfig::default(), 160);
        assert!((big.wireless_capacity_bps() / small.wireless_capacity_bps() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn config_round_trips_json() {
        let c = TopologyConfig::default();
        let s = serde_json::to_string(&c).unwrap();
        let back: TopologyConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        let partial: TopologyConfig = serde_json::from_str(r#"{"routers": 4}"#).unwrap();
        assert_eq!(partial.routers, 4);
        assert_eq!(partial.router_mbps, 867.0);
    }
}
