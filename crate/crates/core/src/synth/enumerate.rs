use thiserror::Error;

use super::plan::{AccelConfig, DataPathKind, EdgePath, Location, PlacementPlan, Tier};
use crate::dsl::{parse_place, DirectiveKind, PlaceTarget, TaskGraph};

/// Largest number of free tasks explored exhaustively.
pub const MAX_FREE_TASKS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("constraint conflict on task '{task}': {reason}")]
    ConstraintConflict { task: String, reason: String },
    #[error("{free} tasks left unconstrained; at most {MAX_FREE_TASKS} can be explored exhaustively, add Place directives")]
    SearchSpaceTooLarge { free: usize },
    #[error("simulation failed: {0}")]
    Simulation(String),
}

/// Fixed location for a task from Place directives and, when `prune` is set,
/// the meaningfulness rules (sources and actuators stay on the edge).
fn forced(g: &TaskGraph, task: usize, prune: bool) -> Result<Option<Location>, SynthError> {
    let t = &g.tasks[task];
    let placed = g
        .directives_of(DirectiveKind::Place, &t.name)
        .filter_map(|d| d.payload.get("location"))
        .filter_map(|l| parse_place(l))
        .last();
    let must_edge = prune && (t.is_source() || t.is_actuation());
    match placed {
        Some(PlaceTarget::Cloud) if must_edge => Err(SynthError::ConstraintConflict {
            task: t.name.clone(),
            reason: if t.is_source() {
                "Place(Cloud) on a sensor source task".into()
            } else {
                "Place(Cloud) on an actuation task".into()
            },
        }),
        Some(p) => Ok(Some(Location::from_place(&p))),
        None if must_edge => Ok(Some(Location::edge())),
        None => Ok(None),
    }
}

/// Every meaningful cloud/edge assignment, ordered by binary counting over
/// tasks in declaration order with Cloud = 0 and the first task as the most
/// significant bit. A plan's id is its bitmask.
pub fn enumerate_plans(g: &TaskGraph, prune: bool) -> Result<Vec<PlacementPlan>, SynthError> {
    let n = g.tasks.len();
    let mut fixed: Vec<Option<Location>> = Vec::with_capacity(n);
    for i in 0..n {
        fixed.push(forced(g, i, prune)?);
    }
    let free: Vec<usize> = (0..n).filter(|i| fixed[*i].is_none()).collect();
    if free.len() > MAX_FREE_TASKS {
        return Err(SynthError::SearchSpaceTooLarge { free: free.len() });
    }
    let bit = |i: usize| 1u64 << (n - 1 - i);
    let base: u64 = (0..n)
        .filter(|i| fixed[*i].as_ref().is_some_and(|l| l.is_edge()))
        .map(bit)
        .sum();
    let mut plans = Vec::with_capacity(1 << free.len());
    for combo in 0u64..(1u64 << free.len()) {
        // Walk free tasks from least to most significant so `combo` counts in mask order.
        let mut mask = base;
        for (k, &i) in free.iter().rev().enumerate() {
            if combo >> k & 1 == 1 {
                mask |= bit(i);
            }
        }
        let assignment = (0..n)
            .map(|i| {
                let loc = fixed[i].clone().unwrap_or_else(|| {
                    if mask & bit(i) != 0 {
                        Location::edge()
                    } else {
                        Location::cloud()
                    }
                });
                (g.tasks[i].name.clone(), loc)
            })
            .collect();
        plans.push(PlacementPlan {
            plan_id: mask,
            assignment,
            edge_paths: Vec::new(),
        });
    }
    Ok(plans)
}

/// Give every dependency edge its data-path kind. Same-container reuse is a
/// runtime decision and never assigned here.
pub fn attach_data_paths(mut plan: PlacementPlan, g: &TaskGraph, accel: AccelConfig) -> PlacementPlan {
    plan.edge_paths = g
        .edges()
        .into_iter()
        .map(|(p, c)| {
            let (a, b) = (plan.assignment[&p].kind, plan.assignment[&c].kind);
            let path = match (a, b) {
                (Tier::Edge, Tier::Edge) => DataPathKind::OnDeviceLocal,
                (Tier::Cloud, Tier::Cloud) if accel.remote_mem => DataPathKind::RemoteMemory,
                (Tier::Cloud, Tier::Cloud) => DataPathKind::StoreExchange,
                _ if accel.network_accel => DataPathKind::RpcAccelerated,
                _ => DataPathKind::RpcCloudEdge,
            };
            EdgePath { parent: p, child: c, path }
        })
        .collect();
    plan
}

/// Checks the plan invariants against a graph.
pub fn plan_is_consistent(plan: &PlacementPlan, g: &TaskGraph) -> bool {
    if plan.assignment.len() != g.tasks.len() || g.tasks.iter().any(|t| !plan.assignment.contains_key(&t.name)) {
        return false;
    }
    if plan.assignment.values().any(|l| !l.is_well_formed()) {
        return false;
    }
    for (i, t) in g.tasks.iter().enumerate() {
        if let Ok(Some(l)) = forced(g, i, false) {
            if plan.assignment[&t.name] != l {
                return false;
            }
        }
    }
    plan.edge_paths.iter().all(|e| {
        let (a, b) = (&plan.assignment[&e.parent], &plan.assignment[&e.child]);
        e.path.legal_between(a.kind, b.kind)
    })
}
