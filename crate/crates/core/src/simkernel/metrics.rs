use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rng::RngStream;
use super::station::StationStats;

pub const METRICS_SCHEMA_VERSION: u32 = 1;

/// Samples kept exactly up to this count.
pub const EXACT_SAMPLE_LIMIT: usize = 10_000_000;
/// Reservoir size once the exact limit is exceeded.
pub const RESERVOIR_SIZE: usize = 1_000_000;

/// Sample store for percentile estimation: exact up to
/// [`EXACT_SAMPLE_LIMIT`], then downsampled to a uniform reservoir.
#[derive(Clone, Debug)]
pub struct SampleSet {
    values: Vec<f64>,
    seen: u64,
    exact_limit: usize,
    reservoir_size: usize,
    rng: RngStream,
}

impl SampleSet {
    pub fn new(rng: RngStream) -> Self {
        Self::with_limits(rng, EXACT_SAMPLE_LIMIT, RESERVOIR_SIZE)
    }

    pub fn with_limits(rng: RngStream, exact_limit: usize, reservoir_size: usize) -> Self {
        assert!(reservoir_size <= exact_limit);
        Self {
            values: Vec::new(),
            seen: 0,
            exact_limit,
            reservoir_size,
            rng,
        }
    }

    pub fn push(&mut self, v: f64) {
        self.seen += 1;
        if self.values.len() < self.exact_limit && self.seen as usize == self.values.len() + 1 {
            self.values.push(v);
            return;
        }
        if self.values.len() > self.reservoir_size {
            // Crossing the exact limit: thin to a uniform reservoir.
            let rng = self.rng.rng();
            for i in (1..self.values.len()).rev() {
                let j = rng.random_range(0..=i);
                self.values.swap(i, j);
            }
            self.values.truncate(self.reservoir_size);
        }
        let j = self.rng.rng().random_range(0..self.seen);
        if (j as usize) < self.values.len() {
            self.values[j as usize] = v;
        }
    }

    pub fn count(&self) -> u64 {
        self.seen
    }

    pub fn is_exact(&self) -> bool {
        self.seen as usize == self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn summary(&self) -> LatencySummary {
        LatencySummary::from_values(&self.values, self.seen)
    }
}

/// Nearest-rank percentile over an unsorted slice. Returns 0 for empty input.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    percentile_sorted(&v, q)
}

pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub count: u64,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p90_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

impl LatencySummary {
    /// `values` in milliseconds.
    pub fn from_values(values: &[f64], count: u64) -> Self {
        if values.is_empty() {
            return LatencySummary {
                count,
                ..Default::default()
            };
        }
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.total_cmp(b));
        LatencySummary {
            count,
            mean_ms: v.iter().sum::<f64>() / v.len() as f64,
            p50_ms: percentile_sorted(&v, 0.50),
            p90_ms: percentile_sorted(&v, 0.90),
            p99_ms: percentile_sorted(&v, 0.99),
            max_ms: *v.last().unwrap(),
        }
    }
}

/// A time-ordered `(seconds, value)` series.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries(pub Vec<(f64, f64)>);

impl TimeSeries {
    pub fn push(&mut self, t: f64, v: f64) {
        debug_assert!(self.0.last().is_none_or(|(lt, _)| *lt <= t), "time series out of order");
        self.0.push((t, v));
    }

    pub fn max_value(&self) -> f64 {
        self.0.iter().map(|(_, v)| *v).fold(0.0, f64::max)
    }

    pub fn last_value(&self) -> Option<f64> {
        self.0.last().map(|(_, v)| *v)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    pub jobs_injected: u64,
    pub jobs_completed: u64,
    pub jobs_failed: u64,
    pub jobs_in_flight: u64,
    pub invocations: u64,
    pub cold_starts: u64,
    pub warm_starts: u64,
    pub parent_container_reuse: u64,
    pub controller_queued: u64,
    pub rejected_no_capacity: u64,
    pub stragglers_respawned: u64,
    pub speculative_wins: u64,
    pub results_consumed: u64,
    pub duplicate_results_discarded: u64,
    pub probations: u64,
    pub device_failures: u64,
    pub failures_detected: u64,
    pub rejoins: u64,
    pub replans: u64,
    pub containers_terminated: u64,
    pub frames_captured: u64,
    pub unreachable_cells: u64,
}

/// Aggregated outcome of one simulation run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub seed: u64,
    pub config_hash: String,
    pub trace_hash: String,
    /// End-to-end latency of per-frame jobs.
    pub job_latency: LatencySummary,
    /// Per task type execution latency (ready to result).
    pub task_latency: BTreeMap<String, LatencySummary>,
    /// Battery percentage over time, per device.
    pub battery: BTreeMap<String, TimeSeries>,
    /// Mbps over one-second windows, per link.
    pub bandwidth: BTreeMap<String, TimeSeries>,
    /// Aggregate wireless throughput over one-second windows.
    pub wireless_bandwidth: TimeSeries,
    pub counters: Counters,
    pub stations: BTreeMap<String, StationStats>,
    pub completion_time_s: f64,
    pub mission_complete: bool,
    pub mission_infeasible: bool,
    pub coverage_fraction: f64,
    pub targets_found: usize,
    pub targets_total: usize,
    pub mean_battery_drain: f64,
    pub peak_bandwidth_mbps: f64,
    /// Wireless bytes over the mission duration, Mbps.
    pub mean_bandwidth_mbps: f64,
    pub cloud_function_seconds: f64,
    pub network_share_of_median: f64,
    pub cold_start_share_of_median: f64,
    pub cold_start_fraction: f64,
    pub failure_detections: Vec<FailureDetection>,
    pub saturated_links: Vec<String>,
    pub events_processed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureDetection {
    pub device: String,
    pub died_at_s: f64,
    pub last_heartbeat_sent_s: f64,
    pub declared_at_s: f64,
    /// Cells handed to each surviving device.
    pub reassigned: BTreeMap<String, usize>,
    /// Every receiving device's original region borders the failed one's.
    pub region_adjacent: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(|x| x as f64).collect();
        assert_eq!(percentile(&v, 0.5), 50.0);
        assert_eq!(percentile(&v, 0.99), 99.0);
        assert_eq!(percentile(&v, 1.0), 100.0);
        assert_eq!(percentile(&[], 0.5), 0.0);
    }

    #[test]
    fn reservoir_kicks_in_past_exact_limit() {
        let mut s = SampleSet::with_limits(RngStream::new(1, 1), 1_000, 100);
        for i in 0..1_000 {
            s.push(i as f64);
        }
        assert!(s.is_exact());
        for i in 1_000..5_000 {
            s.push(i as f64);
        }
        assert!(!s.is_exact());
        assert_eq!(s.values().len(), 100);
        assert_eq!(s.count(), 5_000);
        // Uniform reservoir: the mean should be near the population mean.
        let mean = s.values().iter().sum::<f64>() / 100.0;
        assert!((mean - 2_500.0).abs() < 600.0, "mean {mean}");
    }
}
