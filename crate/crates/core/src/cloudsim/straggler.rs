use std::collections::{BTreeMap, VecDeque};

use super::config::{ProbationConfig, StragglerConfig};
use crate::simkernel::{percentile, secs, Micros, SimTime};

#[derive(Clone, Debug, Default)]
struct TypeStats {
    samples: VecDeque<f64>,
    since_recompute: usize,
    threshold_us: Option<f64>,
}

/// Per task type running-time samples and the straggler threshold derived
/// from them.
#[derive(Clone, Debug)]
pub struct JobLatencyTracker {
    cfg: StragglerConfig,
    per_type: BTreeMap<String, TypeStats>,
}

impl JobLatencyTracker {
    pub fn new(cfg: StragglerConfig) -> Self {
        Self {
            cfg,
            per_type: BTreeMap::new(),
        }
    }

    /// Record a completed non-speculative invocation's running time.
    pub fn record(&mut self, task_type: &str, duration: Micros) {
        let cfg = &self.cfg;
        let s = self.per_type.entry(task_type.to_string()).or_default();
        s.samples.push_back(duration as f64);
        if s.samples.len() > cfg.window {
            s.samples.pop_front();
        }
        s.since_recompute += 1;
        let warm = s.samples.len() >= cfg.min_samples;
        if warm && (s.threshold_us.is_none() || s.since_recompute >= cfg.recompute_every) {
            let v: Vec<f64> = s.samples.iter().copied().collect();
            s.threshold_us = Some(percentile(&v, cfg.percentile));
            s.since_recompute = 0;
        }
    }

    pub fn samples(&self, task_type: &str) -> usize {
        self.per_type.get(task_type).map_or(0, |s| s.samples.len())
    }

    /// Current threshold, `None` until enough samples exist.
    pub fn threshold(&self, task_type: &str) -> Option<Micros> {
        let s = self.per_type.get(task_type)?;
        if s.samples.len() < self.cfg.min_samples {
            return None;
        }
        s.threshold_us.map(|t| t.ceil() as Micros)
    }
}

#[derive(Clone, Debug)]
pub struct InFlight<'a> {
    pub instance: u64,
    pub task_type: &'a str,
    pub node: usize,
    pub start: SimTime,
    pub speculative: bool,
    /// A duplicate already exists for this instance.
    pub has_duplicate: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RespawnAction {
    pub instance: u64,
    pub exclude_node: usize,
}

/// Invocations running longer than their type's threshold get one
/// speculative duplicate on a different node.
pub fn detect_stragglers(tracker: &JobLatencyTracker, in_flight: &[InFlight], now: SimTime) -> Vec<RespawnAction> {
    in_flight
        .iter()
        .filter(|f| !f.speculative && !f.has_duplicate)
        .filter(|f| tracker.threshold(f.task_type).is_some_and(|t| now.saturating_since(f.start) > t))
        .map(|f| RespawnAction {
            instance: f.instance,
            exclude_node: f.node,
        })
        .collect()
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct ProbationChange {
    pub node: usize,
    pub until: SimTime,
}

/// Recent straggler timestamps per node.
#[derive(Clone, Debug)]
pub struct ProbationTracker {
    cfg: ProbationConfig,
    events: Vec<VecDeque<SimTime>>,
}

impl ProbationTracker {
    pub fn new(cfg: ProbationConfig, nodes: usize) -> Self {
        Self {
            cfg,
            events: vec![VecDeque::new(); nodes],
        }
    }

    /// Note a straggler on `node` and decide whether it goes on probation.
    pub fn update_probation(&mut self, node: usize, now: SimTime) -> Option<ProbationChange> {
        if !self.cfg.enabled {
            return None;
        }
        let window: Micros = secs(self.cfg.window_s);
        let q = &mut self.events[node];
        q.push_back(now);
        while q.front().is_some_and(|t| now - *t > window) {
            q.pop_front();
        }
        if q.len() >= self.cfg.stragglers {
            q.clear();
            return Some(ProbationChange {
                node,
                until: now + secs(self.cfg.duration_s),
            });
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simkernel::millis;

    fn tracker() -> JobLatencyTracker {
        JobLatencyTracker::new(StragglerConfig::default())
    }

    fn flight(start: SimTime) -> InFlight<'static> {
        InFlight {
            instance: 7,
            task_type: "f",
            node: 2,
            start,
            speculative: false,
            has_duplicate: false,
        }
    }

    #[test]
    fn warmup_guard() {
        let mut t = tracker();
        for _ in 0..19 {
            t.record("f", millis(100.0));
        }
        assert_eq!(t.threshold("f"), None);
        assert!(detect_stragglers(&t, &[flight(SimTime(0))], SimTime(secs(100.0))).is_empty());
        t.record("f", millis(100.0));
        assert_eq!(t.threshold("f"), Some(millis(100.0)));
    }

    #[test]
    fn one_and_a_half_p90_spawns_one_duplicate() {
        let mut t = tracker();
        for i in 1..=100 {
            t.record("f", millis(i as f64));
        }
        let p90 = t.threshold("f").unwrap();
        assert_eq!(p90, millis(90.0));
        let now = SimTime(p90 * 3 / 2);
        let acts = detect_stragglers(&t, &[flight(SimTime(0))], now);
        assert_eq!(acts, vec![RespawnAction { instance: 7, exclude_node: 2 }]);
        let mut dup = flight(SimTime(0));
        dup.has_duplicate = true;
        let mut spec = flight(SimTime(0));
        spec.speculative = true;
        assert!(detect_stragglers(&t, &[dup, spec], now).is_empty());
    }

    #[test]
    fn threshold_recomputed_on_cadence() {
        let mut t = tracker();
        for _ in 0..20 {
            t.record("f", 1_000);
        }
        assert_eq!(t.threshold("f"), Some(1_000));
        for _ in 0..9 {
            t.record("f", 1_000_000);
        }
        assert_eq!(t.threshold("f"), Some(1_000));
        t.record("f", 1_000_000);
        assert_eq!(t.threshold("f"), Some(1_000_000));
    }

    #[test]
    fn probation_boundary() {
        let mut p = ProbationTracker::new(ProbationConfig::default(), 2);
        for i in 0..4 {
            assert_eq!(p.update_probation(0, SimTime(secs(i as f64 * 10.0))), None);
        }
        let ch = p.update_probation(0, SimTime(secs(50.0))).unwrap();
        assert_eq!(ch.until, SimTime(secs(230.0)));
        // Spread beyond the window: never five within 60 s.
        for i in 0..10 {
            assert_eq!(p.update_probation(1, SimTime(secs(i as f64 * 16.0))), None);
        }
    }
}
