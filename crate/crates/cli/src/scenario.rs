use std::path::Path;

use hivesim::workloads::{load_workload, ScenarioConfig, WorkloadError};

use crate::CommonArgs;

/// Per-run scenario overrides from the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub devices: Option<usize>,
    pub fps: Option<f64>,
    pub frame_bytes: Option<u64>,
    pub keepalive_s: Option<f64>,
    pub accel: Option<hivesim::synth::AccelConfig>,
}

impl Overrides {
    pub fn from_common(c: &CommonArgs, devices: Option<usize>) -> Self {
        Self {
            devices,
            fps: c.fps,
            frame_bytes: c.frame_bytes,
            keepalive_s: c.keepalive_s,
            accel: c.accel.map(|a| a.config()),
        }
    }

    pub fn apply(&self, sc: &mut ScenarioConfig) {
        if let Some(n) = self.devices {
            sc.devices = n;
        }
        if let Some(f) = self.fps {
            sc.fps = Some(f);
        }
        if let Some(b) = self.frame_bytes {
            sc.frame_bytes = Some(b);
        }
        if let Some(k) = self.keepalive_s {
            sc.keepalive_s = Some(k);
        }
        if let Some(a) = self.accel {
            sc.accel = Some(a);
        }
    }
}

/// Error from resolving a scenario argument, with the exit code to use.
#[derive(Debug)]
pub struct LoadError {
    pub code: i32,
    pub message: String,
}

/// A scenario JSON file, or a workload id with default settings.
pub fn load_scenario(arg: &str) -> Result<ScenarioConfig, LoadError> {
    let p = Path::new(arg);
    let sc = if p.extension().is_some_and(|e| e == "json") || p.is_file() {
        let text = std::fs::read_to_string(p).map_err(|e| LoadError {
            code: crate::exit::IO,
            message: format!("I/O error reading {arg}: {e}"),
        })?;
        serde_json::from_str(&text).map_err(|e| LoadError {
            code: crate::exit::FAILURE,
            message: format!("{arg}: {e}"),
        })?
    } else {
        ScenarioConfig::for_workload(arg)
    };
    load_workload(&sc.workload).map_err(|e| LoadError {
        code: match e {
            WorkloadError::Io { .. } => crate::exit::IO,
            _ => crate::exit::FAILURE,
        },
        message: e.to_string(),
    })?;
    Ok(sc)
}
