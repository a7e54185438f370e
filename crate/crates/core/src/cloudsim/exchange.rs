use super::config::ClusterConfig;
use crate::synth::DataPathKind;

/// Cost of moving a parent's output to its child inside the cloud.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum ExchangeCost {
    /// Fixed latency in microseconds, no network events.
    Direct(f64),
    /// A write then a read through the store station, each taking
    /// `request_us` of service when uncontended.
    Store { request_us: f64 },
}

impl ExchangeCost {
    /// Latency when nothing else contends for the path.
    pub fn uncontended_us(&self) -> f64 {
        match *self {
            ExchangeCost::Direct(us) => us,
            ExchangeCost::Store { request_us } => 2.0 * request_us,
        }
    }
}

pub fn exchange_data(bytes: u64, path: DataPathKind, cfg: &ClusterConfig) -> ExchangeCost {
    match path {
        DataPathKind::SameContainer => ExchangeCost::Direct(cfg.same_container_us),
        DataPathKind::RemoteMemory => {
            ExchangeCost::Direct(cfg.remote_memory_base_us + bytes as f64 * 8.0 / (cfg.remote_memory_gbps * 1e9) * 1e6)
        }
        DataPathKind::StoreExchange => ExchangeCost::Store {
            request_us: cfg.store.request_us(bytes),
        },
        other => panic!("{other:?} is not an intra-cloud path"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn remote_memory_small_message_is_base_dominated() {
        let c = exchange_data(64, DataPathKind::RemoteMemory, &ClusterConfig::default()).uncontended_us();
        assert!((c - 2.1).abs() < 0.05, "{c}");
    }

    #[test]
    fn store_slower_than_remote_memory_for_1mb() {
        let cfg = ClusterConfig::default();
        let store = exchange_data(1 << 20, DataPathKind::StoreExchange, &cfg).uncontended_us();
        let rm = exchange_data(1 << 20, DataPathKind::RemoteMemory, &cfg).uncontended_us();
        // Independent arithmetic: 2 × (2 ms + 1 MiB / 200 MB/s), and 2.1 µs + 8 Mib / 40 Gb/s.
        assert!((store - 2.0 * (2_000.0 + 1_048_576.0 / 200.0)).abs() < 1e-6);
        assert!((rm - (2.1 + 1_048_576.0 * 8.0 / 40_000.0)).abs() < 1e-6);
        assert!(store > rm);
    }

    #[test]
    fn same_container_is_constant() {
        let cfg = ClusterConfig::default();
        assert_eq!(exchange_data(1, DataPathKind::SameContainer, &cfg), exchange_data(1 << 30, DataPathKind::SameContainer, &cfg));
    }
}
