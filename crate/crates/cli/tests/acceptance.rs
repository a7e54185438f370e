//! Acceptance checks, one verdict line per criterion. Runs without the
//! libtest harness so the lines always reach the terminal.

use std::collections::{BTreeSet, BinaryHeap};
use std::cmp::Reverse;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hivesim::dsl::{parse_program, random_graph, render_program, DirectiveKind, TaskGraph};
use hivesim::edgesim::{astar, partition_field, path_len, plan_route, Cell, Grid};
use hivesim::modes::{all_cloud_plan, run_scenario};
use hivesim::netsim::{Endpoint, Network, RpcKind, TopologyConfig};
use hivesim::simkernel::MetricsReport;
use hivesim::synth::enumerate_plans;
use hivesim::workloads::{load_workload, ArrivalPattern, Goal, ScenarioConfig};
use hivesim_cli::main_with;

type Verdict = Result<String, String>;

fn repo(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel).display().to_string()
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv: Vec<&str> = std::iter::once("hivesim").chain(args.iter().copied()).collect();
    let code = main_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

// ---- AC1: DSL fidelity

fn ac1() -> Verdict {
    let (code, out, err) = cli(&["check", &repo("scenarios/scenario_b.hive")]);
    ensure(code == 0, format!("check exit {code}: {out}{err}"))?;
    ensure(out.contains("5 tasks, 4 edges, 7 directives"), format!("summary: {out}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..1000 {
        let g = random_graph(&mut rng, 12);
        let back = parse_program(&render_program(&g)).map_err(|e| format!("graph {i}: {e}"))?;
        ensure(back == g, format!("graph {i} did not round-trip"))?;
    }
    Ok("listing: 5 tasks, 4 edges, 7 directives; 1000/1000 round-trips".into())
}

// ---- AC2: placement enumeration

/// Independent bitmask filter: Place pins, sensors and actuators on the edge.
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
                if place.is_some_and(|loc| edge != loc.starts_with("Edge")) {
                    return false;
                }
                let sensor = t.data_in.is_none();
                let actuator = t.task_args.get("actuation").is_some_and(|v| v == "true");
                !(prune && (sensor || actuator) && !edge)
            })
        })
        .collect()
}

fn ac2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..1000 {
        let mut g = random_graph(&mut rng, 12);
        let cloud_pinned: BTreeSet<String> = g
            .directives
            .iter()
            .filter(|d| d.kind == DirectiveKind::Place && d.payload.get("location").is_some_and(|l| l == "Cloud"))
            .map(|d| d.subject.clone())
            .collect();
        for t in &mut g.tasks {
            if !cloud_pinned.contains(&t.name) && rng.random_bool(0.15) {
                t.task_args.insert("actuation".into(), "true".into());
            }
        }
        let prune = i % 2 == 0;
        let ids: Vec<u64> = enumerate_plans(&g, prune).map_err(|e| e.to_string())?.iter().map(|p| p.plan_id).collect();
        ensure(ids == oracle_masks(&g, prune), format!("graph {i} (prune {prune}) differs from oracle"))?;
    }
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s1");
    let (code, _, err) = cli(&["synth", "S1", "--no-prune", "--out", out.to_str().unwrap()]);
    ensure(code == 0, format!("synth exit {code}: {err}"))?;
    let plans: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("plans.json")).unwrap()).unwrap();
    let n = plans["plans"].as_array().map_or(0, Vec::len);
    ensure(n == 4, format!("2-task chain gave {n} plans"))?;
    Ok("1000/1000 graphs match the bitmask oracle; 2-task chain gives 4 plans unpruned".into())
}

// ---- AC3: queueing oracle

fn ac3() -> Verdict {
    let (code, out, err) = cli(&["oracle", "--mu", "1", "--arrivals", "1000000", "--tolerance", "0.05", "--little", "ScenarioA", "--little-tolerance", "0.10"]);
    let mm1: Vec<&str> = out.lines().filter(|l| l.contains(" mm1 ")).collect();
    let little = out.lines().filter(|l| l.contains(" little ")).count();
    ensure(code == 0, format!("oracle exit {code}: {out}{err}"))?;
    ensure(mm1.len() == 3 && little > 0, format!("unexpected report: {out}"))?;
    let errs: Vec<String> = mm1
        .iter()
        .filter_map(|l| l.split_whitespace().find(|w| w.starts_with("rel_err=")).map(|w| w[8..].to_string()))
        .collect();
    Ok(format!("M/M/1 rel. errors at rho 0.5/0.8/0.9: {}; Little's law holds on {little} stations", errs.join("/")))
}

// ---- AC4: path planning

fn dijkstra(g: &Grid, s: Cell, t: Cell) -> Option<usize> {
    let mut dist = vec![usize::MAX; g.len()];
    let mut heap = BinaryHeap::new();
    dist[g.idx(s)] = 0;
    heap.push(Reverse((0usize, s)));
    while let Some(Reverse((d, c))) = heap.pop() {
        if c == t {
            return Some(d);
        }
        if d > dist[g.idx(c)] {
            continue;
        }
        for n in g.neighbors(c) {
            if g.is_free(n) && d + 1 < dist[g.idx(n)] {
                dist[g.idx(n)] = d + 1;
                heap.push(Reverse((d + 1, n)));
            }
        }
    }
    None
}

fn random_free(g: &Grid, rng: &mut ChaCha8Rng) -> Option<Cell> {
    (0..200).map(|_| (rng.random_range(0..g.cols), rng.random_range(0..g.rows))).find(|&c| g.is_free(c))
}

fn ac4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut legs = 0;
    for i in 0..200 {
        let (cols, rows) = (rng.random_range(2..=50), rng.random_range(2..=50));
        let mut g = Grid::new(cols, rows);
        let density = rng.random_range(0.0..0.35);
        for c in 0..cols {
            for r in 0..rows {
                if rng.random_bool(density) {
                    g.block((c, r));
                }
            }
        }
        for _ in 0..5 {
            let (Some(s), Some(t)) = (random_free(&g, &mut rng), random_free(&g, &mut rng)) else {
                continue;
            };
            let got = astar(&g, s, t);
            let got_len = got.as_deref().map(path_len);
            let want = dijkstra(&g, s, t);
            ensure(got_len == want, format!("grid {i}: A* {got_len:?} vs Dijkstra {want:?}"))?;
            if let Some(p) = got {
                let valid = p.windows(2).all(|w| w[0].0.abs_diff(w[1].0) + w[0].1.abs_diff(w[1].1) == 1) && p.iter().all(|&c| g.is_free(c));
                ensure(valid, format!("grid {i}: A* path is not a free 4-connected walk"))?;
            }
            legs += 1;
        }
    }
    let mut fields = 0;
    for cols in [1usize, 3, 8, 17, 50] {
        for rows in [1usize, 4, 9, 50] {
            for devices in [1usize, 2, 5, 16] {
                let g = Grid::new(cols, rows);
                let mut seen = vec![0u32; g.len()];
                for reg in partition_field(&g, devices) {
                    let cells: Vec<Cell> = reg.cells().collect();
                    if cells.is_empty() {
                        continue;
                    }
                    let route = plan_route(&g, cells[0], &cells);
                    ensure(route.unreachable.is_empty(), "unreachable cell on an open field")?;
                    for c in route.visits {
                        seen[g.idx(c)] += 1;
                    }
                }
                ensure(seen.iter().all(|&v| v == 1), format!("{cols}x{rows}/{devices}: coverage not exactly once"))?;
                fields += 1;
            }
        }
    }
    Ok(format!("{legs} A* legs equal Dijkstra; {fields} open fields covered exactly once"))
}

// ---- AC5: keep-alive

fn keepalive_run(ka: f64) -> Result<MetricsReport, String> {
    let mut sc = ScenarioConfig::for_workload("S1");
    sc.devices = 1;
    sc.arrival = Some(ArrivalPattern::Poisson { mean_gap_s: 5.0 });
    sc.goal = Some(Goal::Duration { seconds: 1200.0 });
    sc.keepalive_s = Some(ka);
    run_scenario(&sc, "centralized", 1, None).map_err(|e| e.to_string())
}

fn ac5() -> Verdict {
    let warm = keepalive_run(15.0)?;
    let cold = keepalive_run(0.0)?;
    let detail = format!(
        "cold fraction {:.3} (keep-alive 15s) vs {:.3} (0s); all-cold share of median {:.3}",
        warm.cold_start_fraction, cold.cold_start_fraction, cold.cold_start_share_of_median
    );
    ensure(warm.cold_start_fraction < 0.10, detail.clone())?;
    ensure(cold.cold_start_fraction > 0.90, detail.clone())?;
    ensure((0.07..=0.45).contains(&cold.cold_start_share_of_median), detail.clone())?;
    Ok(detail)
}

// ---- AC6: stragglers

fn ac6() -> Verdict {
    let w = load_workload("S1").map_err(|e| e.to_string())?;
    let plan = all_cloud_plan(&w.graph);
    let per_job: u64 = w
        .graph
        .tasks
        .iter()
        .filter(|t| !plan.location(&t.name).is_edge())
        .map(|t| w.profile.task(&t.name).fanout.max(1) as u64)
        .sum();
    let run = |on: bool| {
        let mut sc = ScenarioConfig::for_workload("S1");
        sc.goal = Some(Goal::Duration { seconds: 300.0 });
        sc.cluster.nodes = 5;
        sc.cluster.node_selector = "round-robin".into();
        sc.cluster.slow_nodes = vec![(0, 10.0)];
        sc.frame_bytes = Some(200_000);
        sc.stragglers = Some(on);
        run_scenario(&sc, "centralized", 1, None).map_err(|e| e.to_string())
    };
    let off = run(false)?;
    let on = run(true)?;
    let cut = 1.0 - on.job_latency.p99_ms / off.job_latency.p99_ms;
    let detail = format!("p99 {:.1} -> {:.1} ms ({:.0}% lower)", off.job_latency.p99_ms, on.job_latency.p99_ms, cut * 100.0);
    ensure(cut >= 0.30, detail.clone())?;
    for r in [&off, &on] {
        let c = &r.counters;
        ensure(
            c.results_consumed == c.jobs_completed * per_job && c.jobs_failed == 0,
            format!("consumed {} for {} jobs x {per_job} instances", c.results_consumed, c.jobs_completed),
        )?;
    }
    Ok(format!("{detail}; one result consumed per instance, {} duplicates discarded", on.counters.duplicate_results_discarded))
}

// ---- AC7: fault tolerance

fn ac7() -> Verdict {
    let mut sc = ScenarioConfig::for_workload("ScenarioA");
    let base = run_scenario(&sc, "hivemind", 1, None).map_err(|e| e.to_string())?;
    let mid = (base.completion_time_s / 2.0).floor();
    let victim = 3;
    sc.faults.kills.push((victim, mid));
    let r = run_scenario(&sc, "hivemind", 1, None).map_err(|e| e.to_string())?;
    let topo = TopologyConfig::default();
    let net = Network::new(topo.clone(), sc.devices);
    let hops = net.route(Endpoint::Device(victim), Endpoint::Cloud);
    let delay_s = net.idle_latency_us(&hops, topo.heartbeat_bytes, Some(topo.rpc(RpcKind::Accelerated))) as f64 / 1e6;
    let d = r.failure_detections.first().ok_or("no failure declared")?;
    let lag = d.declared_at_s - d.died_at_s;
    let lo = topo.heartbeat_timeout_s;
    let hi = topo.heartbeat_timeout_s + topo.heartbeat_period_s + delay_s;
    let detail = format!(
        "declared {lag:.4}s after death (window ({lo}, {hi:.4}]); {} cells to {:?}; coverage {:.3}",
        d.reassigned.values().sum::<usize>(),
        d.reassigned.keys().collect::<Vec<_>>(),
        r.coverage_fraction
    );
    ensure(lag > lo && lag <= hi, detail.clone())?;
    ensure(!d.reassigned.is_empty() && d.region_adjacent, detail.clone())?;
    ensure(r.mission_complete && r.coverage_fraction == 1.0, detail.clone())?;
    Ok(detail)
}

// ---- AC8: directional comparison

fn ac8() -> Verdict {
    let mut lines = Vec::new();
    for wl in ["ScenarioA", "ScenarioB"] {
        let mean = |mode: &str| -> Result<(f64, f64, f64), String> {
            let mut acc = (0.0, 0.0, 0.0);
            for seed in 1..=5 {
                let r = run_scenario(&ScenarioConfig::for_workload(wl), mode, seed, None).map_err(|e| e.to_string())?;
                acc.0 += r.job_latency.p99_ms / 5.0;
                acc.1 += r.mean_battery_drain / 5.0;
                acc.2 += r.peak_bandwidth_mbps / 5.0;
            }
            Ok(acc)
        };
        let h = mean("hivemind")?;
        let c = mean("centralized")?;
        let d = mean("distributed")?;
        let summary = format!(
            "{wl} p99 {:.0}/{:.0}/{:.0} ms, battery {:.2}/{:.2}/{:.2}%, peak {:.1}/{:.1}/{:.1} Mbps (hivemind/centralized/distributed)",
            h.0, c.0, d.0, h.1, c.1, d.1, h.2, c.2, d.2
        );
        let wins = h.0 < c.0 && h.0 < d.0 && h.1 < c.1 && h.1 < d.1 && h.2 < c.2 && h.2 < d.2;
        ensure(wins, summary.clone())?;
        lines.push(summary);
    }
    Ok(lines.join("; "))
}

// ---- AC9: scalability

fn ac9() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let (code, _, err) = cli(&["run", "ScenarioA", "--mode", "hivemind,centralized", "--devices", "16,100,1000", "--seed", "1", "--out", out.to_str().unwrap()]);
    ensure(code == 0, format!("run exit {code}: {err}"))?;
    let mut rdr = csv::Reader::from_path(out.join("summary.csv")).map_err(|e| e.to_string())?;
    let hdr = rdr.headers().unwrap().clone();
    let col = |name: &str| hdr.iter().position(|h| h == name).unwrap();
    let (mode_c, dev_c, bw_c) = (col("mode"), col("devices"), col("mean_bandwidth_mbps"));
    let mut bw = std::collections::BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        bw.insert((rec[mode_c].to_string(), rec[dev_c].parse::<usize>().unwrap()), rec[bw_c].parse::<f64>().unwrap());
    }
    let growth = |mode: &str, n: usize| bw[&(mode.to_string(), n)] / bw[&(mode.to_string(), 16)];
    let mut detail = Vec::new();
    for n in [100usize, 1000] {
        let scale = n as f64 / 16.0;
        let (h, c) = (growth("hivemind", n), growth("centralized", n));
        detail.push(format!("x{scale:.2} devices: hivemind x{h:.2}, centralized x{c:.2}"));
        ensure(h < scale && c >= 0.9 * scale, detail.join("; "))?;
    }
    Ok(detail.join("; "))
}

// ---- AC10: determinism

fn ac10() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let (code, _, err) = cli(&["run", "ScenarioB", "--devices", "8", "--seed", seed, "--out", out.to_str().unwrap()]);
        (code, err, out)
    };
    let (c1, e1, a) = run("a", "1");
    let (c2, e2, b) = run("b", "1");
    let (c3, e3, c) = run("c", "2");
    ensure(c1 == 0 && c2 == 0 && c3 == 0, format!("run failed: {e1}{e2}{e3}"))?;
    let mut files = 0;
    for entry in std::fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        let x = std::fs::read(a.join(&name)).unwrap();
        let y = std::fs::read(b.join(&name)).map_err(|e| e.to_string())?;
        ensure(x == y, format!("{name:?} differs between identical runs"))?;
        files += 1;
    }
    let mut differ = 0;
    for mode in ["hivemind", "centralized", "distributed"] {
        let load = |dir: &Path, seed: u64| -> MetricsReport {
            serde_json::from_slice(&std::fs::read(dir.join(format!("{mode}_n8_s{seed}.json"))).unwrap()).unwrap()
        };
        let (r1, r2) = (load(&a, 1), load(&c, 2));
        ensure(r1.trace_hash != r2.trace_hash, format!("{mode}: trace hash equal across seeds"))?;
        differ += 1;
    }
    Ok(format!("{files} files byte-identical across repeats; trace hashes differ across seeds in {differ}/3 modes"))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict, Duration); 10] = [
        ("AC1 DSL fidelity", ac1, Duration::from_secs(10)),
        ("AC2 placement enumeration", ac2, Duration::from_secs(60)),
        ("AC3 queueing oracle", ac3, Duration::from_secs(120)),
        ("AC4 path planning", ac4, Duration::from_secs(60)),
        ("AC5 keep-alive A/B", ac5, Duration::from_secs(60)),
        ("AC6 straggler A/B", ac6, Duration::from_secs(60)),
        ("AC7 fault tolerance", ac7, Duration::from_secs(60)),
        ("AC8 directional comparison", ac8, Duration::from_secs(300)),
        ("AC9 scalability", ac9, Duration::from_secs(300)),
        ("AC10 determinism", ac10, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let t = Instant::now();
        let mut res = check();
        let took = t.elapsed();
        if res.is_ok() && took > limit {
            res = Err(format!("took {took:.1?}, limit {limit:?}"));
        }
        match res {
            Ok(d) => println!("PASS {name} [{:.1}s]: {d}", took.as_secs_f64()),
            Err(d) => {
                failed += 1;
                println!("FAIL {name} [{:.1}s]: {d}", took.as_secs_f64());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
