use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use hivesim::modes::mode_by_name;
use hivesim::synth::{synthesize, violations, PlacementPlan, PlanEvaluation};
use hivesim::workloads::load_workload;

use crate::scenario::{load_scenario, Overrides};
use crate::{exit, CommonArgs, CLI_SCHEMA_VERSION};

#[derive(Clone, Debug, Args)]
pub struct SynthArgs {
    /// Workload id or scenario JSON file.
    pub scenario: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Mode whose data paths and policies are used while profiling.
    #[arg(long, default_value = "hivemind")]
    pub mode: String,
    #[arg(long)]
    pub devices: Option<usize>,
    /// Keep plans the meaningfulness rules would drop.
    #[arg(long = "no-prune")]
    pub no_prune: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Serialize)]
struct PlanRow<'a> {
    plan: &'a PlacementPlan,
    evaluation: &'a PlanEvaluation,
    feasible: bool,
}

#[derive(Serialize)]
struct NearestMiss {
    plan_id: u64,
    violated: Vec<String>,
}

#[derive(Serialize)]
struct PlansFile<'a> {
    schema_version: u32,
    workload: &'a str,
    seed: u64,
    pruned: bool,
    plans: Vec<PlanRow<'a>>,
    selected: Option<u64>,
    nearest_miss: Option<NearestMiss>,
}

#[derive(Serialize)]
struct EvalRow {
    plan_id: u64,
    assignment: String,
    p50_ms: f64,
    p99_ms: f64,
    battery_drain_pct: f64,
    peak_bandwidth_mbps: f64,
    cloud_cost_s: f64,
    throughput_jobs_per_s: f64,
    feasible: bool,
    selected: bool,
}

fn assignment(p: &PlacementPlan) -> String {
    p.assignment.iter().map(|(t, l)| format!("{t}={l}")).collect::<Vec<_>>().join(";")
}

fn io_fail(err: &mut dyn Write, path: &Path, e: impl std::fmt::Display) -> i32 {
    let _ = writeln!(err, "error: I/O error writing {}: {e}", path.display());
    exit::IO
}

/// Writes `plans.json` and `evals.csv`. Exit 3 when no plan meets the
/// constraints; the files are still written and name the nearest miss.
pub fn cmd_synth(a: &SynthArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut sc = match load_scenario(&a.scenario) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            return e.code;
        }
    };
    Overrides::from_common(&a.common, a.devices).apply(&mut sc);
    let Some(mode) = mode_by_name(&a.mode) else {
        let _ = writeln!(err, "error: unknown mode '{}'", a.mode);
        return exit::FAILURE;
    };
    let w = match load_workload(&sc.workload) {
        Ok(w) => w,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit::FAILURE;
        }
    };
    let s = match synthesize(&w, &sc, mode.as_ref(), a.seed, !a.no_prune) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit::FAILURE;
        }
    };
    let constraints = &w.graph.constraints;
    let selected = s.selected.as_ref().ok().copied();
    let dir = a.common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = std::fs::create_dir_all(&dir) {
        return io_fail(err, &dir, e);
    }

    let file = PlansFile {
        schema_version: CLI_SCHEMA_VERSION,
        workload: &sc.workload,
        seed: a.seed,
        pruned: !a.no_prune,
        plans: s
            .plans
            .iter()
            .zip(&s.evals)
            .map(|(plan, evaluation)| PlanRow {
                plan,
                evaluation,
                feasible: violations(evaluation, constraints).is_empty(),
            })
            .collect(),
        selected,
        nearest_miss: s.selected.as_ref().err().map(|m| NearestMiss {
            plan_id: m.nearest_plan_id,
            violated: m.violated.iter().map(|c| format!("{:?} {:?} {}", c.metric, c.direction, c.canonical_bound())).collect(),
        }),
    };
    let json_path = dir.join("plans.json");
    let json = serde_json::to_vec_pretty(&file).expect("plans serialize");
    if let Err(e) = std::fs::write(&json_path, json) {
        return io_fail(err, &json_path, e);
    }

    let csv_path = dir.join("evals.csv");
    let written = (|| -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_path(&csv_path)?;
        for (p, e) in s.plans.iter().zip(&s.evals) {
            wtr.serialize(EvalRow {
                plan_id: p.plan_id,
                assignment: assignment(p),
                p50_ms: e.predicted_p50_latency,
                p99_ms: e.predicted_p99_latency,
                battery_drain_pct: e.mean_battery_drain,
                peak_bandwidth_mbps: e.peak_bandwidth,
                cloud_cost_s: e.cloud_cost,
                throughput_jobs_per_s: e.throughput,
                feasible: violations(e, constraints).is_empty(),
                selected: selected == Some(p.plan_id),
            })?;
        }
        wtr.flush()?;
        Ok(())
    })();
    if let Err(e) = written {
        return io_fail(err, &csv_path, e);
    }

    let _ = writeln!(out, "{}: {} plans evaluated", sc.workload, s.plans.len());
    match &s.selected {
        Ok(id) => {
            let p = s.plans.iter().find(|p| p.plan_id == *id).expect("selected plan listed");
            let _ = writeln!(out, "selected plan {id}: {}", assignment(p));
            exit::OK
        }
        Err(miss) => {
            let _ = writeln!(err, "error: {miss}");
            exit::NO_FEASIBLE_PLAN
        }
    }
}
