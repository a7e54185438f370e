use proptest::prelude::*;

use super::*;
use crate::modes::{build_setup, mode_by_name, resolve_plan, run_scenario};
use crate::simkernel::{run, RunLimits};
use crate::workloads::{load_workload, ScenarioConfig};

/// Delegates to the world and checks cluster invariants after every event.
struct Checked {
    world: World,
    violations: usize,
}

impl Model for Checked {
    type Event = Ev;

    fn handle(&mut self, ev: SimEvent<Ev>, q: &mut EventQueue<Ev>) {
        self.world.handle(ev, q);
        if !self.world.cluster.check_core_exclusivity() {
            self.violations += 1;
        }
    }

    fn event_kind(ev: &Ev) -> &'static str {
        World::event_kind(ev)
    }
}

fn scenario(workload: &str, devices: usize) -> ScenarioConfig {
    ScenarioConfig {
        devices,
        ..ScenarioConfig::for_workload(workload)
    }
}

fn checked_run(sc: &ScenarioConfig, mode: &str, seed: u64) -> Checked {
    let mode = mode_by_name(mode).unwrap();
    let w = load_workload(&sc.workload).unwrap();
    let plan = resolve_plan(&w, sc, mode.as_ref(), seed).unwrap();
    let setup = build_setup(&w, sc, mode.as_ref(), plan, seed).unwrap();
    let faults = setup.faults.clone();
    let mut m = Checked {
        world: World::new(setup).unwrap(),
        violations: 0,
    };
    let mut q = EventQueue::new();
    m.world.seed_events(&mut q, &faults);
    run(&mut m, &mut q, &RunLimits::default(), None).unwrap();
    m
}

fn conserved(r: &MetricsReport) -> bool {
    let c = &r.counters;
    c.jobs_injected == c.jobs_completed + c.jobs_failed + c.jobs_in_flight
}

#[test]
fn same_seed_same_report() {
    let sc = scenario("ScenarioA", 4);
    for mode in ["centralized", "distributed", "hivemind"] {
        let a = run_scenario(&sc, mode, 3, None).unwrap();
        let b = run_scenario(&sc, mode, 3, None).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap(), "{mode}");
        let c = run_scenario(&sc, mode, 4, None).unwrap();
        assert_ne!(a.trace_hash, c.trace_hash, "{mode}");
    }
}

#[test]
fn trace_output_matches_hash_run() {
    let sc = scenario("S1", 2);
    let mut buf = Vec::new();
    let a = run_scenario(&sc, "centralized", 5, Some(&mut buf)).unwrap();
    let b = run_scenario(&sc, "centralized", 5, None).unwrap();
    assert_eq!(a.trace_hash, b.trace_hash);
    assert!(!buf.is_empty());
}

#[test]
fn cores_never_shared() {
    for (wl, mode) in [("ScenarioA", "centralized"), ("S9", "hivemind"), ("S6", "centralized")] {
        let m = checked_run(&scenario(wl, 4), mode, 1);
        assert_eq!(m.violations, 0, "{wl} {mode}");
        assert!(m.world.counters.invocations > 0);
    }
}

#[test]
fn every_completed_slot_consumed_once() {
    let mut sc = scenario("S1", 8);
    sc.stragglers = Some(true);
    let m = checked_run(&sc, "hivemind", 2);
    assert!(m.world.slots.iter().all(|s| s.consumed));
    let c = &m.world.counters;
    assert_eq!(c.results_consumed as usize, m.world.slots.len());
    assert!(c.duplicate_results_discarded <= c.stragglers_respawned);
}

#[test]
fn littles_law_on_every_station() {
    for mode in ["centralized", "distributed", "hivemind"] {
        let r = run_scenario(&scenario("ScenarioA", 16), mode, 1, None).unwrap();
        for (name, s) in &r.stations {
            assert!(s.littles_law_error() < 0.10, "{mode} {name}: {s:?}");
        }
    }
}

#[test]
fn killed_device_is_detected_and_covered_for() {
    let mut sc = scenario("ScenarioA", 16);
    sc.faults.kills.push((5, 20.0));
    let r = run_scenario(&sc, "distributed", 1, None).unwrap();
    assert_eq!(r.failure_detections.len(), 1);
    let d = &r.failure_detections[0];
    let lag = d.declared_at_s - d.died_at_s;
    assert!(lag > 3.0 && lag <= 4.0 + 0.01, "{lag}");
    assert!(d.region_adjacent);
    assert!(r.mission_complete);
    assert_eq!(r.coverage_fraction, 1.0);
    assert!(conserved(&r));
}

#[test]
fn bandwidth_mean_never_exceeds_peak() {
    for mode in ["centralized", "hivemind"] {
        let r = run_scenario(&scenario("ScenarioA", 8), mode, 1, None).unwrap();
        assert!(r.mean_bandwidth_mbps <= r.peak_bandwidth_mbps + 1e-9, "{mode}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn jobs_are_conserved(
        seed in 0u64..1000,
        devices in 1usize..6,
        wl in prop::sample::select(vec!["S1", "S6", "S9", "ScenarioA"]),
        mode in prop::sample::select(vec!["centralized", "distributed", "hivemind"]),
        kill in prop::option::of(1.0f64..30.0),
    ) {
        let mut sc = scenario(wl, devices);
        sc.profile_devices = 2;
        sc.profile_horizon_s = 20.0;
        if let Some(t) = kill {
            sc.faults.kills.push((0, t));
        }
        let r = run_scenario(&sc, mode, seed, None).unwrap();
        prop_assert!(conserved(&r), "{:?}", r.counters);
        prop_assert!(r.counters.results_consumed >= r.counters.speculative_wins);
    }
}
