use std::io::Write;

use clap::Args;

use hivesim::modes::run_scenario;
use hivesim::simkernel::mm1::{mm1_mean_sojourn, simulate, PoissonQueueConfig};
use hivesim::workloads::ScenarioConfig;

use crate::exit;

#[derive(Clone, Debug, Args)]
pub struct OracleArgs {
    /// Arrival rate per second. Without it the standard loads 0.5, 0.8 and
    /// 0.9 of `mu` are checked.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub arrivals: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Relative tolerance on the mean sojourn time.
    #[arg(long, default_value_t = 0.05)]
    pub tolerance: f64,
    /// Workload whose stations are checked against Little's law.
    #[arg(long)]
    pub little: Option<String>,
    #[arg(long = "little-tolerance", default_value_t = 0.10)]
    pub little_tolerance: f64,
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Prints measured against analytic values; exit 1 on any breach.
pub fn cmd_oracle(a: &OracleArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let lambdas: Vec<f64> = match a.lambda {
        Some(l) => vec![l],
        None => [0.5, 0.8, 0.9].iter().map(|r| r * a.mu).collect(),
    };
    let mut ok_all = true;
    for lambda in lambdas {
        let r = match simulate(&PoissonQueueConfig::mm1(lambda, a.mu, a.arrivals, a.seed)) {
            Ok(r) => r,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return exit::FAILURE;
            }
        };
        let (ok, analytic, rel) = if lambda <= 0.0 {
            // an empty system has nothing to measure
            (r.completed == 0 && r.station.in_system == 0, 0.0, 0.0)
        } else {
            match mm1_mean_sojourn(lambda, a.mu) {
                Some(w) => {
                    let rel = (r.mean_sojourn_s - w).abs() / w;
                    (rel <= a.tolerance, w, rel)
                }
                None => (false, f64::INFINITY, f64::INFINITY),
            }
        };
        ok_all &= ok;
        let _ = writeln!(
            out,
            "{} mm1 lambda={lambda} mu={} arrivals={} measured={:.4}s analytic={:.4}s rel_err={:.4} tol={}",
            verdict(ok),
            a.mu,
            r.completed,
            r.mean_sojourn_s,
            analytic,
            rel,
            a.tolerance
        );
    }
    if let Some(wl) = &a.little {
        let sc = ScenarioConfig::for_workload(wl);
        match run_scenario(&sc, "hivemind", a.seed, None) {
            Ok(rep) => {
                for (name, s) in &rep.stations {
                    let e = s.littles_law_error();
                    let ok = e <= a.little_tolerance;
                    ok_all &= ok;
                    let _ = writeln!(
                        out,
                        "{} little {wl}/{name} L={:.4} lambda_w={:.4} rel_err={:.4} tol={}",
                        verdict(ok),
                        s.mean_in_system,
                        s.arrival_rate * s.mean_sojourn_s,
                        e,
                        a.little_tolerance
                    );
                }
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return exit::FAILURE;
            }
        }
    }
    if ok_all {
        exit::OK
    } else {
        exit::FAILURE
    }
}
