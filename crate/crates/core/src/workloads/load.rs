use std::path::{Path, PathBuf};

use thiserror::Error;

use super::profile::WorkloadProfile;
use crate::dsl::{parse_program, DslError, TaskGraph};
use crate::simkernel::SimError;

pub const PROFILE_DIR_ENV: &str = "HIVESIM_PROFILE_DIR";

pub const WORKLOAD_IDS: [&str; 12] = [
    "S1", "S2", "S3", "S4", "S5", "S6", "S7", "S8", "S9", "S10", "ScenarioA", "ScenarioB",
];

macro_rules! builtin {
    ($($name:literal),*) => {
        &[$(($name, include_str!(concat!("../../../../profiles/", $name, ".json")))),*]
    };
}

const BUILTIN_PROFILES: &[(&str, &str)] = builtin!(
    "S1", "S2", "S3", "S4", "S5", "S6", "S7", "S8", "S9", "S10", "ScenarioA", "ScenarioB"
);

macro_rules! scenarios {
    ($($name:literal),*) => {
        &[$(($name, include_str!(concat!("../../../../scenarios/", $name)))),*]
    };
}

const BUILTIN_DSL: &[(&str, &str)] = scenarios!(
    "s1.hive", "s2.hive", "s3.hive", "s4.hive", "s5.hive", "s6.hive", "s7.hive", "s8.hive", "s9.hive",
    "s10.hive", "scenario_a.hive", "scenario_b.hive"
);

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("unknown workload '{0}'")]
    UnknownWorkload(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("profile {id}: {message}")]
    BadProfile { id: String, message: String },
    #[error("{0}")]
    Dsl(String),
}

impl From<SimError> for WorkloadError {
    fn from(e: SimError) -> Self {
        WorkloadError::BadProfile {
            id: String::new(),
            message: e.to_string(),
        }
    }
}

/// A profile together with its compiled task graph.
#[derive(Clone, Debug)]
pub struct Workload {
    pub profile: WorkloadProfile,
    pub graph: TaskGraph,
    pub dsl_source: String,
}

fn read(path: &Path) -> Result<String, WorkloadError> {
    std::fs::read_to_string(path).map_err(|e| WorkloadError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn profile_dir() -> Option<PathBuf> {
    std::env::var_os(PROFILE_DIR_ENV).map(PathBuf::from)
}

/// Built-in profile JSON, or `<HIVESIM_PROFILE_DIR>/<id>.json` when the
/// variable is set.
pub fn load_profile(id: &str) -> Result<WorkloadProfile, WorkloadError> {
    let text = match profile_dir() {
        Some(dir) => {
            let p = dir.join(format!("{id}.json"));
            if !p.exists() {
                return Err(WorkloadError::UnknownWorkload(id.to_string()));
            }
            read(&p)?
        }
        None => BUILTIN_PROFILES
            .iter()
            .find(|(n, _)| *n == id)
            .map(|(_, t)| t.to_string())
            .ok_or_else(|| WorkloadError::UnknownWorkload(id.to_string()))?,
    };
    parse_profile(id, &text)
}

pub fn parse_profile(id: &str, text: &str) -> Result<WorkloadProfile, WorkloadError> {
    let p: WorkloadProfile = serde_json::from_str(text).map_err(|e| WorkloadError::BadProfile {
        id: id.to_string(),
        message: e.to_string(),
    })?;
    p.validate().map_err(|e| WorkloadError::BadProfile {
        id: id.to_string(),
        message: e.to_string(),
    })?;
    Ok(p)
}

/// Source text of a DSL program named by a profile. Looks in the profile
/// directory first, then among the built-in scenarios.
pub fn dsl_source(name: &str) -> Result<String, WorkloadError> {
    if let Some(dir) = profile_dir() {
        for cand in [dir.join(name), dir.join("..").join("scenarios").join(name)] {
            if cand.exists() {
                return read(&cand);
            }
        }
    }
    if let Some((_, t)) = BUILTIN_DSL.iter().find(|(n, _)| *n == name) {
        return Ok(t.to_string());
    }
    let p = Path::new(name);
    if p.exists() {
        return read(p);
    }
    Err(WorkloadError::Io {
        path: name.to_string(),
        message: "DSL program not found".into(),
    })
}

/// Compile a profile's DSL program and check that every task has a profile.
pub fn compile(profile: WorkloadProfile) -> Result<Workload, WorkloadError> {
    let src = dsl_source(&profile.dsl)?;
    let graph = parse_program(&src).map_err(|e: DslError| WorkloadError::Dsl(e.located(&profile.dsl)))?;
    for t in &graph.tasks {
        if !profile.tasks.contains_key(&t.name) {
            return Err(WorkloadError::BadProfile {
                id: profile.id.clone(),
                message: format!("task '{}' has no service profile", t.name),
            });
        }
    }
    Ok(Workload {
        profile,
        graph,
        dsl_source: src,
    })
}

pub fn load_workload(id: &str) -> Result<Workload, WorkloadError> {
    compile(load_profile(id)?)
}
