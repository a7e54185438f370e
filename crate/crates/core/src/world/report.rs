use super::*;
use crate::simkernel::{percentile, RunOutcome, TimeSeries, METRICS_SCHEMA_VERSION};
use crate::workloads::Goal;

/// A link counts as saturated when more than half of its mission bins run
/// at or above this fraction of capacity.
const SATURATION: f64 = 0.95;

impl World {
    pub(super) fn report(&self, outcome: &RunOutcome) -> MetricsReport {
        let end = self.mission_end.unwrap_or(outcome.final_time);
        let end_s = end.as_secs();
        let mut counters = self.counters.clone();
        counters.jobs_in_flight = self.frame_jobs_live;

        let battery: BTreeMap<String, TimeSeries> =
            self.battery.iter().enumerate().map(|(d, s)| (format!("d{d}"), s.clone())).collect();
        let mut bandwidth = BTreeMap::new();
        let mut saturated = Vec::new();
        let last_bin = (end_s.ceil() as u64).max(1);
        for l in &self.net.links {
            let series = l.throughput_series();
            if series.0.is_empty() {
                continue;
            }
            let cap = l.capacity_bps / 1e6;
            let hot = l.bins_mbps().filter(|&(k, m)| k < last_bin && m >= SATURATION * cap).count();
            if hot as u64 * 2 > last_bin {
                saturated.push(l.name.clone());
            }
            bandwidth.insert(l.name.clone(), series);
        }
        let wireless = TimeSeries(self.net.wireless_series().into_iter().map(|(k, m)| (k as f64, m)).collect());
        // bins overlapping the mission; later bins only drain leftover transfers
        let in_mission: Vec<(f64, f64)> = wireless.0.iter().copied().filter(|&(k, _)| k < end_s).collect();
        let peak = in_mission.iter().map(|p| p.1).fold(0.0, f64::max);
        let served_mbit: f64 = in_mission.iter().map(|&(k, m)| m * (end_s - k).min(1.0)).sum();

        let mut stations = BTreeMap::new();
        let t = outcome.final_time;
        stations.insert("controller".to_string(), self.controller.stats(t));
        stations.insert("store".to_string(), self.store.stats(t));
        for (task, s) in &self.sync {
            stations.insert(format!("sync.{}", self.tasks[*task].name), s.station.stats(t));
        }
        for (d, s) in self.devices.iter().enumerate() {
            stations.insert(format!("device{d}"), s.station.stats(t));
        }

        let goal_met = match self.workload.profile.goal {
            Goal::AllTargets => self.found.iter().all(|f| *f),
            Goal::Duration { .. } => true,
        };
        let mission_complete = self.coverage.complete() && goal_met && !self.mission_infeasible;

        let initial = self.class.battery_pct;
        let drains: Vec<f64> =
            self.devices.iter().enumerate().map(|(d, s)| initial - self.battery[d].last_value().unwrap_or(s.dev.battery)).collect();
        let mean_battery_drain = drains.iter().sum::<f64>() / drains.len() as f64;

        let (net_share, cold_share) = self.median_band_shares();
        let cold = counters.cold_starts as f64;
        let warm = counters.warm_starts as f64;

        MetricsReport {
            schema_version: METRICS_SCHEMA_VERSION,
            seed: self.seed,
            config_hash: self.config_hash.clone(),
            trace_hash: outcome.trace_hash.clone(),
            job_latency: self.latency.summary(),
            task_latency: self.task_latency.iter().map(|(k, v)| (k.clone(), v.summary())).collect(),
            battery,
            bandwidth,
            peak_bandwidth_mbps: peak,
            wireless_bandwidth: wireless,
            counters,
            stations,
            completion_time_s: end_s,
            mission_complete,
            mission_infeasible: self.mission_infeasible,
            coverage_fraction: self.coverage.coverage_fraction(),
            targets_found: self.found.iter().filter(|f| **f).count(),
            targets_total: self.found.len(),
            mean_battery_drain,
            mean_bandwidth_mbps: if end_s > 0.0 { served_mbit / end_s } else { 0.0 },
            cloud_function_seconds: self.cloud_us / 1e6,
            network_share_of_median: net_share,
            cold_start_share_of_median: cold_share,
            cold_start_fraction: if cold + warm > 0.0 { cold / (cold + warm) } else { 0.0 },
            failure_detections: self.detections.clone(),
            saturated_links: saturated,
            events_processed: outcome.events_processed,
        }
    }

    /// Mean network and cold-start shares over jobs whose latency lies in
    /// the 45th to 55th percentile band.
    fn median_band_shares(&self) -> (f64, f64) {
        if self.breakdown.is_empty() {
            return (0.0, 0.0);
        }
        let lat: Vec<f64> = self.breakdown.iter().map(|b| b.0).collect();
        let lo = percentile(&lat, 0.45);
        let hi = percentile(&lat, 0.55);
        let (mut n, mut net, mut cold) = (0.0, 0.0, 0.0);
        for &(l, nm, cm) in &self.breakdown {
            if l >= lo && l <= hi && l > 0.0 {
                n += 1.0;
                net += (nm / l).min(1.0);
                cold += (cm / l).min(1.0);
            }
        }
        if n == 0.0 {
            (0.0, 0.0)
        } else {
            (net / n, cold / n)
        }
    }
}
