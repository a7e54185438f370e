use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::dsl::{
    parse_program, parse_unchecked, random_graph, DirectiveKind, Direction, ManagementDirective, Metric, PerfConstraint, TaskGraph, Unit,
};

const CHAIN: &str = "TaskGraph(list=['a','b'])\n\
    Task(a,None,raw,'c')\n\
    Task(b,raw,out,'c',parentTask=['a'])\n";

/// Brute force over all bitmasks; bit (n-1-i) set means task i on the edge.
fn oracle_masks(g: &TaskGraph, prune: bool) -> Vec<u64> {
    let n = g.tasks.len();
    (0u64..1 << n)
        .filter(|mask| {
            g.tasks.iter().enumerate().all(|(i, t)| {
                let edge = mask >> (n - 1 - i) & 1 == 1;
                let place = g
                    .directives
                    .iter()
                    .filter(|d| d.kind == DirectiveKind::Place && d.subject == t.name)
                    .filter_map(|d| d.payload.get("location"))
                    .next_back();
                if let Some(loc) = place {
                    if edge != loc.starts_with("Edge") {
                        return false;
                    }
                }
                !(prune && (t.data_in.is_none() || t.task_args.get("actuation").is_some_and(|v| v == "true")) && !edge)
            })
        })
        .collect()
}

#[test]
fn two_task_chain() {
    let g = parse_program(CHAIN).unwrap();
    let pruned = enumerate_plans(&g, true).unwrap();
    assert_eq!(pruned.len(), 2);
    assert!(pruned.iter().all(|p| p.location("a").is_edge()));
    assert_eq!(enumerate_plans(&g, false).unwrap().len(), 4);
}

#[test]
fn fully_constrained_single_task() {
    let g = parse_program("TaskGraph(list=['t'])\nTask(t,x,y,'c')\nPlace(t,'Cloud')\n").unwrap();
    let plans = enumerate_plans(&g, true).unwrap();
    assert_eq!(plans.len(), 1);
    assert_eq!(plans[0].location("t"), &Location::cloud());
}

#[test]
fn conflicting_place_on_source() {
    let (g, _) = parse_unchecked("TaskGraph(list=['s'])\nTask(s,None,y,'c')\nPlace(s,'Cloud')\n").unwrap();
    assert!(matches!(enumerate_plans(&g, true), Err(SynthError::ConstraintConflict { .. })));
    assert_eq!(enumerate_plans(&g, false).unwrap().len(), 1);
}

#[test]
fn search_space_limit() {
    let mut src = String::from("TaskGraph(list=[");
    let names: Vec<String> = (0..17).map(|i| format!("'t{i}'")).collect();
    src.push_str(&names.join(","));
    src.push_str("])\n");
    for i in 0..17 {
        src.push_str(&format!("Task(t{i},x,y,'c')\n"));
    }
    let g = parse_program(&src).unwrap();
    assert_eq!(enumerate_plans(&g, true).unwrap_err(), SynthError::SearchSpaceTooLarge { free: 17 });
}

#[test]
fn data_paths_follow_tiers() {
    let g = parse_program(&format!("{CHAIN}Task(c,out,z,'c',parentTask=['b'])\n").replace("['a','b']", "['a','b','c']")).unwrap();
    let plans = enumerate_plans(&g, true).unwrap();
    let all_cloud_tail = plans.iter().find(|p| !p.location("b").is_edge() && !p.location("c").is_edge()).unwrap();
    let p = attach_data_paths(all_cloud_tail.clone(), &g, AccelConfig::ALL);
    assert_eq!(p.path("b", "c"), Some(DataPathKind::RemoteMemory));
    assert_eq!(p.path("a", "b"), Some(DataPathKind::RpcAccelerated));
    let p = attach_data_paths(all_cloud_tail.clone(), &g, AccelConfig::NONE);
    assert_eq!(p.path("b", "c"), Some(DataPathKind::StoreExchange));
    assert_eq!(p.path("a", "b"), Some(DataPathKind::RpcCloudEdge));
    let all_edge = plans.iter().find(|p| p.assignment.values().all(|l| l.is_edge())).unwrap();
    for accel in [AccelConfig::NONE, AccelConfig::ALL] {
        let p = attach_data_paths(all_edge.clone(), &g, accel);
        assert!(p.edge_paths.iter().all(|e| e.path == DataPathKind::OnDeviceLocal));
        assert!(plan_is_consistent(&p, &g));
    }
}

fn eval(id: u64, p50: f64, p99: f64, bat: f64, cost: f64) -> PlanEvaluation {
    PlanEvaluation {
        plan_id: id,
        predicted_p50_latency: p50,
        predicted_p99_latency: p99,
        mean_battery_drain: bat,
        peak_bandwidth: 0.0,
        cloud_cost: cost,
        throughput: 0.0,
    }
}

fn bound(metric: Metric, v: f64, unit: Unit) -> PerfConstraint {
    PerfConstraint {
        metric,
        bound: v,
        unit,
        direction: Direction::Upper,
    }
}

#[test]
fn selection_examples() {
    let a = eval(0, 10.0, 50.0, 5.0, 1.0);
    assert_eq!(select_plan(std::slice::from_ref(&a), &[]), Ok(0));
    let b = eval(1, 5.0, 20.0, 5.0, 1.0);
    let lat = bound(Metric::Latency, 30.0, Unit::Millis);
    assert_eq!(select_plan(&[a.clone(), b.clone()], std::slice::from_ref(&lat)), Ok(1));
    let tight = bound(Metric::Latency, 1.0, Unit::Micros);
    let err = select_plan(&[a, b], &[tight]).unwrap_err();
    assert_eq!(err.nearest_plan_id, 1);
    assert_eq!(err.violated.len(), 1);
}

/// Filter then sort, written independently of `select_plan`.
fn select_oracle(evals: &[PlanEvaluation], lat_ms: f64, cost: f64) -> Option<u64> {
    let mut ok: Vec<&PlanEvaluation> = evals.iter().filter(|e| e.predicted_p99_latency <= lat_ms && e.cloud_cost <= cost).collect();
    ok.sort_by(|a, b| {
        (a.predicted_p99_latency, a.mean_battery_drain, a.cloud_cost, a.plan_id)
            .partial_cmp(&(b.predicted_p99_latency, b.mean_battery_drain, b.cloud_cost, b.plan_id))
            .unwrap()
    });
    ok.first().map(|e| e.plan_id)
}

fn with_actuators(g: &mut TaskGraph, rng: &mut ChaCha8Rng) {
    let cloud_placed: Vec<String> = g
        .directives
        .iter()
        .filter(|d| d.kind == DirectiveKind::Place && d.payload.get("location").is_some_and(|l| l == "Cloud"))
        .map(|d| d.subject.clone())
        .collect();
    for t in &mut g.tasks {
        if !cloud_placed.contains(&t.name) && rng.random_bool(0.15) {
            t.task_args.insert("actuation".into(), "true".into());
        }
    }
}

proptest! {
    #[test]
    fn enumeration_matches_bitmask_oracle(seed in any::<u64>(), prune in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = random_graph(&mut rng, 12);
        with_actuators(&mut g, &mut rng);
        let plans = enumerate_plans(&g, prune).unwrap();
        let ids: Vec<u64> = plans.iter().map(|p| p.plan_id).collect();
        prop_assert_eq!(&ids, &oracle_masks(&g, prune));
        let n = g.tasks.len();
        for p in &plans {
            for (i, t) in g.tasks.iter().enumerate() {
                prop_assert_eq!(p.location(&t.name).is_edge(), p.plan_id >> (n - 1 - i) & 1 == 1);
            }
            prop_assert!(plan_is_consistent(&attach_data_paths(p.clone(), &g, AccelConfig::ALL), &g));
        }
    }

    #[test]
    fn extra_place_never_adds_plans(seed in any::<u64>(), pick in any::<usize>(), cloud in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, 10);
        prop_assume!(!g.tasks.is_empty());
        let t = &g.tasks[pick % g.tasks.len()];
        prop_assume!(!g.has_directive(DirectiveKind::Place, &t.name));
        let before = enumerate_plans(&g, true).unwrap().len();
        let mut h = g.clone();
        let loc = if cloud && !t.is_source() { "Cloud" } else { "Edge:all" };
        h.directives.push(ManagementDirective::new(DirectiveKind::Place, t.name.clone()).with("location", loc));
        let after = enumerate_plans(&h, true).unwrap().len();
        prop_assert!(after <= before);
    }

    #[test]
    fn selection_matches_oracle_and_ignores_order(
        vals in proptest::collection::vec((1u32..50, 1u32..50, 0u32..10, 0u32..10), 8),
        lat in 1.0f64..60.0,
        cost in 0.0f64..10.0,
        perm_seed in any::<u64>(),
    ) {
        let evals: Vec<PlanEvaluation> = vals
            .iter()
            .enumerate()
            .map(|(i, (a, b, c, d))| eval(i as u64, *a as f64, (*a + *b) as f64, *c as f64, *d as f64))
            .collect();
        let cons = [bound(Metric::Latency, lat, Unit::Millis), bound(Metric::Cost, cost, Unit::FunctionSeconds)];
        let got = select_plan(&evals, &cons).ok();
        prop_assert_eq!(got, select_oracle(&evals, lat, cost));
        let mut shuffled = evals.clone();
        use rand::seq::SliceRandom;
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
        prop_assert_eq!(select_plan(&shuffled, &cons), select_plan(&evals, &cons));
    }
}
