use rand::Rng;

use super::types::*;

/// Random valid program with up to `max_tasks` tasks. Used by property tests
/// and the acceptance harness.
pub fn random_graph<R: Rng>(rng: &mut R, max_tasks: usize) -> TaskGraph {
    let n = rng.random_range(0..=max_tasks);
    let mut g = TaskGraph::default();
    for i in 0..n {
        let mut t = TaskDef::new(format!("t{i}"));
        t.data_out = if rng.random_bool(0.9) { Some(format!("k{i}")) } else { None };
        t.code_ref = format!("code/{i}.py");
        for a in 0..rng.random_range(0..3) {
            let v = match rng.random_range(0..3) {
                0 => format!("{}", rng.random_range(0..100)),
                1 => "round robin".to_string(),
                _ => "it's \"quoted\"".to_string(),
            };
            t.task_args.insert(format!("arg{a}"), v);
        }
        g.listed.push(t.name.clone());
        g.tasks.push(t);
    }
    for j in 0..n {
        for i in 0..j {
            if rng.random_bool(0.25) {
                let (ni, nj) = (g.tasks[i].name.clone(), g.tasks[j].name.clone());
                g.tasks[i].children.push(nj);
                g.tasks[j].parents.push(ni);
            }
        }
    }
    for j in 0..n {
        let kinds: Vec<Option<String>> = g.tasks[j]
            .parents
            .iter()
            .map(|p| g.task(p).unwrap().data_out.clone())
            .collect();
        g.tasks[j].data_in = match kinds.iter().flatten().next() {
            Some(k) => Some(k.clone()),
            None if kinds.is_empty() && rng.random_bool(0.5) => Some("external".to_string()),
            None => None,
        };
    }
    if n >= 2 {
        let mut used = Vec::new();
        for _ in 0..rng.random_range(0..4) {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a == b || used.contains(&(a.min(b), a.max(b))) {
                continue;
            }
            used.push((a.min(b), a.max(b)));
            let kind = [OrderingKind::Parallel, OrderingKind::Overlap, OrderingKind::Serial][rng.random_range(0..3)];
            g.orderings.push(OrderingDirective::new(kind, format!("t{a}"), format!("t{b}")));
        }
    }
    for i in 0..n {
        let name = format!("t{i}");
        if rng.random_bool(0.15) {
            g.tasks[i].task_args.insert("sync".into(), "all".into());
            g.orderings.push(OrderingDirective::new(OrderingKind::Synchronize, name.clone(), "all"));
        }
        if rng.random_bool(0.3) {
            let loc = if g.tasks[i].is_source() || rng.random_bool(0.5) {
                "Edge:all".to_string()
            } else if rng.random_bool(0.5) {
                "Cloud".to_string()
            } else {
                "Edge:d0,d3".to_string()
            };
            g.directives.push(ManagementDirective::new(DirectiveKind::Place, name.clone()).with("location", &loc));
        }
        if rng.random_bool(0.2) {
            let scope = ["Global", "Local", "Off"][rng.random_range(0..3)];
            g.directives.push(ManagementDirective::new(DirectiveKind::Learn, name.clone()).with("scope", scope));
        }
        if rng.random_bool(0.2) {
            g.directives.push(ManagementDirective::new(DirectiveKind::Persist, name.clone()));
        }
        if rng.random_bool(0.1) {
            g.directives.push(ManagementDirective::new(DirectiveKind::Isolate, name.clone()));
        }
        if rng.random_bool(0.1) {
            g.directives.push(
                ManagementDirective::new(DirectiveKind::Schedule, name.clone())
                    .with("priority", &rng.random_range(0..5).to_string()),
            );
        }
    }
    for (metric, unit) in [(Metric::Latency, Unit::Millis), (Metric::Cost, Unit::FunctionSeconds), (Metric::Throughput, Unit::ReqPerSec)] {
        if rng.random_bool(0.3) {
            let bound = if rng.random_bool(0.5) {
                rng.random_range(1..1000) as f64
            } else {
                rng.random_range(0.01..100.0)
            };
            g.constraints.push(PerfConstraint {
                metric,
                bound,
                unit,
                direction: metric.default_direction(),
            });
        }
    }
    g
}
