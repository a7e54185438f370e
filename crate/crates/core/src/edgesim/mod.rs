//! Edge devices: field model, region partitioning, coverage routing, battery
//! and failure repartitioning.

mod coverage;
mod device;
mod field;
mod grid;
mod route;

pub use coverage::{CoverageMap, MissionInfeasible};
pub use device::{drain_battery, Activity, DeviceClass, EdgeDevice, StepOutcome};
pub use field::{factor_grid, partition_field, FieldConfig, FieldModel, Target, TargetKind};
pub use grid::{astar, manhattan, path_len, Cell, CellRect, Grid};
pub use route::{boustrophedon, plan_route, Route};
