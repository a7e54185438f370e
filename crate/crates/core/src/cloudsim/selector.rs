use super::cluster::ClusterState;

/// Picks the node for a cold start among eligible candidates.
pub trait NodeSelector: Send {
    fn name(&self) -> &'static str;

    /// `candidates` is nonempty and sorted by node id.
    fn select(&mut self, cluster: &ClusterState, candidates: &[usize]) -> usize;
}

#[derive(Debug, Default)]
pub struct LeastUtilized;

impl NodeSelector for LeastUtilized {
    fn name(&self) -> &'static str {
        "least-utilized"
    }

    fn select(&mut self, cluster: &ClusterState, candidates: &[usize]) -> usize {
        *candidates
            .iter()
            .min_by(|a, b| {
                let (ua, ub) = (cluster.nodes[**a].utilization(), cluster.nodes[**b].utilization());
                ua.total_cmp(&ub).then(a.cmp(b))
            })
            .expect("no candidates")
    }
}

#[derive(Debug, Default)]
pub struct RoundRobin {
    next: usize,
}

impl NodeSelector for RoundRobin {
    fn name(&self) -> &'static str {
        "round-robin"
    }

    fn select(&mut self, cluster: &ClusterState, candidates: &[usize]) -> usize {
        let n = cluster.nodes.len();
        let pick = candidates
            .iter()
            .copied()
            .min_by_key(|&c| (c + n - self.next % n) % n)
            .expect("no candidates");
        self.next = pick + 1;
        pick
    }
}

/// Names accepted by [`selector_by_name`].
pub const SELECTORS: &[&str] = &["least-utilized", "round-robin"];

/// Builds a node selector from its registered name.
pub fn selector_by_name(name: &str) -> Option<Box<dyn NodeSelector>> {
    match name {
        "least-utilized" => Some(Box::new(LeastUtilized)),
        "round-robin" => Some(Box::<RoundRobin>::default()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloudsim::ClusterConfig;

    #[test]
    fn round_robin_cycles_and_skips() {
        let cfg = ClusterConfig {
            nodes: 4,
            cores_per_node: 2,
            ..ClusterConfig::default()
        };
        let c = ClusterState::new(&cfg);
        let mut rr = RoundRobin::default();
        let all = [0, 1, 2, 3];
        let picks: Vec<usize> = (0..6).map(|_| rr.select(&c, &all)).collect();
        assert_eq!(picks, vec![0, 1, 2, 3, 0, 1]);
        assert_eq!(rr.select(&c, &[0, 3]), 3);
        assert_eq!(rr.select(&c, &[0, 3]), 0);
    }

    #[test]
    fn least_utilized_prefers_empty_node() {
        let cfg = ClusterConfig {
            nodes: 3,
            cores_per_node: 2,
            ..ClusterConfig::default()
        };
        let mut c = ClusterState::new(&cfg);
        c.instantiate(0, "f", 0, false);
        c.instantiate(2, "f", 0, false);
        assert_eq!(LeastUtilized.select(&c, &[0, 1, 2]), 1);
        assert_eq!(LeastUtilized.select(&c, &[0, 2]), 0);
    }

    #[test]
    fn registry_names_round_trip() {
        for name in SELECTORS {
            assert_eq!(selector_by_name(name).unwrap().name(), *name);
        }
        assert!(selector_by_name("random").is_none());
    }
}
