use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use hivesim::modes::{run_scenario, MODES};
use hivesim::simkernel::MetricsReport;
use hivesim::workloads::ScenarioConfig;

use crate::scenario::{load_scenario, LoadError, Overrides};
use crate::{exit, CommonArgs, CLI_SCHEMA_VERSION};

#[derive(Clone, Debug, Args)]
pub struct RunArgs {
    /// Workload id, scenario JSON, or experiment JSON (an object with a
    /// `scenario` key).
    pub spec: String,
    /// Modes to run, comma separated. Defaults to all three.
    #[arg(long, value_delimiter = ',')]
    pub mode: Vec<String>,
    /// Seeds, comma separated. Defaults to 1.
    #[arg(long, value_delimiter = ',')]
    pub seed: Vec<u64>,
    /// Device counts to sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub devices: Vec<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Sweep axes; an empty axis keeps the scenario's value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    pub devices: Vec<usize>,
    pub fps: Vec<f64>,
    pub frame_bytes: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Workload id or scenario JSON path, relative to the spec file.
    pub scenario: String,
    #[serde(default)]
    pub modes: Vec<String>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn is_experiment(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "json")
        && std::fs::read_to_string(path)
            .ok()
            .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
            .is_some_and(|v| v.get("scenario").is_some())
}

fn load_experiment(a: &RunArgs) -> Result<(ScenarioConfig, ExperimentSpec), LoadError> {
    let path = Path::new(&a.spec);
    let mut spec = if is_experiment(path) {
        let text = std::fs::read_to_string(path).map_err(|e| LoadError {
            code: exit::IO,
            message: format!("I/O error reading {}: {e}", a.spec),
        })?;
        let mut spec: ExperimentSpec = serde_json::from_str(&text).map_err(|e| LoadError {
            code: exit::FAILURE,
            message: format!("{}: {e}", a.spec),
        })?;
        let rel = path.parent().unwrap_or(Path::new("")).join(&spec.scenario);
        if rel.is_file() {
            spec.scenario = rel.display().to_string();
        }
        spec
    } else {
        ExperimentSpec {
            scenario: a.spec.clone(),
            modes: Vec::new(),
            seeds: Vec::new(),
            sweep: Sweep::default(),
            out: None,
        }
    };
    let mut sc = load_scenario(&spec.scenario)?;
    Overrides::from_common(&a.common, None).apply(&mut sc);
    if !a.mode.is_empty() {
        spec.modes = a.mode.clone();
    }
    if spec.modes.is_empty() {
        spec.modes = MODES.iter().map(|m| m.to_string()).collect();
    }
    if !a.seed.is_empty() {
        spec.seeds = a.seed.clone();
    }
    if spec.seeds.is_empty() {
        spec.seeds = vec![1];
    }
    if !a.devices.is_empty() {
        spec.sweep.devices = a.devices.clone();
    }
    if let Some(f) = a.common.fps {
        spec.sweep.fps = vec![f];
    }
    if let Some(b) = a.common.frame_bytes {
        spec.sweep.frame_bytes = vec![b];
    }
    if a.common.out.is_some() {
        spec.out = a.common.out.clone();
    }
    Ok((sc, spec))
}

/// One simulation of the experiment.
#[derive(Clone, Debug)]
struct RunPoint {
    id: String,
    mode: String,
    seed: u64,
    scenario: ScenarioConfig,
}

fn axis<T: Copy>(v: &[T]) -> Vec<Option<T>> {
    if v.is_empty() {
        vec![None]
    } else {
        v.iter().copied().map(Some).collect()
    }
}

fn points(base: &ScenarioConfig, spec: &ExperimentSpec) -> Vec<RunPoint> {
    let mut out = Vec::new();
    for n in axis(&spec.sweep.devices) {
        for fps in axis(&spec.sweep.fps) {
            for fb in axis(&spec.sweep.frame_bytes) {
                let mut sc = base.clone();
                if let Some(n) = n {
                    sc.devices = n;
                }
                sc.fps = fps.or(sc.fps);
                sc.frame_bytes = fb.or(sc.frame_bytes);
                for mode in &spec.modes {
                    for &seed in &spec.seeds {
                        let mut id = format!("{mode}_n{}", sc.devices);
                        if let Some(f) = sc.fps {
                            id.push_str(&format!("_fps{f}"));
                        }
                        if let Some(b) = sc.frame_bytes {
                            id.push_str(&format!("_fb{b}"));
                        }
                        id.push_str(&format!("_s{seed}"));
                        out.push(RunPoint {
                            id,
                            mode: mode.clone(),
                            seed,
                            scenario: sc.clone(),
                        });
                    }
                }
            }
        }
    }
    out
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    schema_version: u32,
    run_id: &'a str,
    workload: &'a str,
    mode: &'a str,
    devices: usize,
    fps: Option<f64>,
    frame_bytes: Option<u64>,
    seed: u64,
    jobs_completed: u64,
    p50_ms: f64,
    p99_ms: f64,
    mean_battery_drain_pct: f64,
    peak_bandwidth_mbps: f64,
    mean_bandwidth_mbps: f64,
    completion_time_s: f64,
    mission_complete: bool,
    config_hash: &'a str,
    trace_hash: &'a str,
}

#[derive(Serialize)]
struct ComparisonRow<'a> {
    workload: &'a str,
    devices: usize,
    fps: Option<f64>,
    frame_bytes: Option<u64>,
    mode: &'a str,
    seeds: usize,
    p50_ms: f64,
    p99_ms: f64,
    mean_battery_drain_pct: f64,
    peak_bandwidth_mbps: f64,
    mean_bandwidth_mbps: f64,
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every (sweep point, mode, seed) in parallel. Writes one metrics
/// JSON per run plus `summary.csv` (per run) and `comparison.csv` (seed
/// means per sweep point and mode).
pub fn cmd_run(a: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (base, spec) = match load_experiment(a) {
        Ok(x) => x,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            return e.code;
        }
    };
    let dir = spec.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = std::fs::create_dir_all(&dir) {
        let _ = writeln!(err, "error: I/O error creating {}: {e}", dir.display());
        return exit::IO;
    }
    let pts = points(&base, &spec);
    let results: Vec<_> = pts.par_iter().map(|p| run_scenario(&p.scenario, &p.mode, p.seed, None)).collect();

    let mut code = exit::OK;
    let mut done: Vec<(&RunPoint, MetricsReport)> = Vec::new();
    for (p, r) in pts.iter().zip(results) {
        match r {
            Ok(rep) => done.push((p, rep)),
            Err(e) => {
                let _ = writeln!(err, "error: run {}: {e}", p.id);
                code = exit::FAILURE;
            }
        }
    }
    for (p, rep) in &done {
        let path = dir.join(format!("{}.json", p.id));
        let bytes = serde_json::to_vec_pretty(rep).expect("report serializes");
        if let Err(e) = std::fs::write(&path, bytes) {
            let _ = writeln!(err, "error: I/O error writing {}: {e}", path.display());
            return exit::IO;
        }
    }

    let summary: Vec<SummaryRow> = done
        .iter()
        .map(|(p, r)| SummaryRow {
            schema_version: CLI_SCHEMA_VERSION,
            run_id: &p.id,
            workload: &p.scenario.workload,
            mode: &p.mode,
            devices: p.scenario.devices,
            fps: p.scenario.fps,
            frame_bytes: p.scenario.frame_bytes,
            seed: p.seed,
            jobs_completed: r.counters.jobs_completed,
            p50_ms: r.job_latency.p50_ms,
            p99_ms: r.job_latency.p99_ms,
            mean_battery_drain_pct: r.mean_battery_drain,
            peak_bandwidth_mbps: r.peak_bandwidth_mbps,
            mean_bandwidth_mbps: r.mean_bandwidth_mbps,
            completion_time_s: r.completion_time_s,
            mission_complete: r.mission_complete,
            config_hash: &r.config_hash,
            trace_hash: &r.trace_hash,
        })
        .collect();

    // seed means, keyed so the output order does not depend on run order
    let mut groups: BTreeMap<(usize, u64, u64, usize), Vec<&SummaryRow>> = BTreeMap::new();
    for row in &summary {
        let m = spec.modes.iter().position(|m| m == row.mode).unwrap_or(usize::MAX);
        let key = (row.devices, row.fps.map_or(0, f64::to_bits), row.frame_bytes.unwrap_or(0), m);
        groups.entry(key).or_default().push(row);
    }
    let comparison: Vec<ComparisonRow> = groups
        .values()
        .map(|rows| {
            let n = rows.len() as f64;
            let mean = |f: fn(&SummaryRow) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
            ComparisonRow {
                workload: rows[0].workload,
                devices: rows[0].devices,
                fps: rows[0].fps,
                frame_bytes: rows[0].frame_bytes,
                mode: rows[0].mode,
                seeds: rows.len(),
                p50_ms: mean(|r| r.p50_ms),
                p99_ms: mean(|r| r.p99_ms),
                mean_battery_drain_pct: mean(|r| r.mean_battery_drain_pct),
                peak_bandwidth_mbps: mean(|r| r.peak_bandwidth_mbps),
                mean_bandwidth_mbps: mean(|r| r.mean_bandwidth_mbps),
            }
        })
        .collect();
    for (name, res) in [
        ("summary.csv", write_csv(&dir.join("summary.csv"), &summary)),
        ("comparison.csv", write_csv(&dir.join("comparison.csv"), &comparison)),
    ] {
        if let Err(e) = res {
            let _ = writeln!(err, "error: I/O error writing {}: {e}", dir.join(name).display());
            return exit::IO;
        }
    }

    let _ = writeln!(out, "{:<12} {:>7} {:>10} {:>10} {:>10} {:>12}", "mode", "devices", "p50_ms", "p99_ms", "battery%", "peak_mbps");
    for c in &comparison {
        let _ = writeln!(
            out,
            "{:<12} {:>7} {:>10.1} {:>10.1} {:>10.2} {:>12.1}",
            c.mode, c.devices, c.p50_ms, c.p99_ms, c.mean_battery_drain_pct, c.peak_bandwidth_mbps
        );
    }
    let _ = writeln!(out, "{} runs written to {}", done.len(), dir.display());
    code
}
