use rand::Rng;
use serde::{Deserialize, Serialize};

use super::grid::{Cell, CellRect, Grid};
use crate::simkernel::{stream_id_for, RngStream, SimError};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Item,
    Person,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldConfig {
    /// Camera footprint, which is also the coverage cell size.
    pub cell_w_m: f64,
    pub cell_h_m: f64,
    /// Cells per device region when the field is sized from the swarm.
    pub region_cols: usize,
    pub region_rows: usize,
    /// Explicit field size in cells; overrides swarm-based sizing.
    pub cols: Option<usize>,
    pub rows: Option<usize>,
    pub obstacles: Vec<CellRect>,
    pub target_kind: TargetKind,
    pub target_count: usize,
    /// Minimum distance of a target from its cell's border, in meters.
    pub target_margin_m: f64,
    pub person_max_speed_mps: f64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            cell_w_m: 6.7,
            cell_h_m: 8.75,
            region_cols: 6,
            region_rows: 5,
            cols: None,
            rows: None,
            obstacles: Vec::new(),
            target_kind: TargetKind::Item,
            target_count: 15,
            target_margin_m: 0.5,
            person_max_speed_mps: 1.5,
        }
    }
}

/// Splits `n` into `rows × cols` with `rows` the largest divisor not above √n.
/// Primes become a single row of strips.
pub fn factor_grid(n: usize) -> (usize, usize) {
    let n = n.max(1);
    let mut rows = 1;
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            rows = d;
        }
        d += 1;
    }
    (rows, n / rows)
}

impl FieldConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.cell_w_m <= 0.0 || self.cell_h_m <= 0.0 || self.region_cols == 0 || self.region_rows == 0 {
            return Err(SimError::Config("cell and region sizes must be positive".into()));
        }
        if self.cols == Some(0) || self.rows == Some(0) {
            return Err(SimError::Config("field must have at least one cell".into()));
        }
        if 2.0 * self.target_margin_m >= self.cell_w_m.min(self.cell_h_m) {
            return Err(SimError::Config("target margin leaves no room inside a cell".into()));
        }
        Ok(())
    }

    pub fn dims_for(&self, devices: usize) -> (usize, usize) {
        let (r, c) = factor_grid(devices);
        (
            self.cols.unwrap_or(c * self.region_cols),
            self.rows.unwrap_or(r * self.region_rows),
        )
    }
}

#[derive(Clone, Debug)]
enum Motion {
    Static,
    /// Random waypoint: straight legs at a per-leg speed, no pauses.
    Waypoint {
        from: (f64, f64),
        to: (f64, f64),
        t0: f64,
        t1: f64,
        rng: RngStream,
    },
}

#[derive(Clone, Debug)]
pub struct Target {
    pub id: usize,
    pub kind: TargetKind,
    pos: (f64, f64),
    motion: Motion,
}

impl Target {
    /// Position at simulated time `t` (seconds). Queries must be
    /// nondecreasing in `t` for moving targets.
    pub fn position_at(&mut self, t: f64, bounds: (f64, f64), max_speed: f64) -> (f64, f64) {
        match &mut self.motion {
            Motion::Static => self.pos,
            Motion::Waypoint { from, to, t0, t1, rng } => {
                while t >= *t1 {
                    *from = *to;
                    *t0 = *t1;
                    let r = rng.rng();
                    *to = (r.random_range(0.0..bounds.0), r.random_range(0.0..bounds.1));
                    let speed = r.random_range(0.3 * max_speed..=max_speed);
                    let d = ((to.0 - from.0).powi(2) + (to.1 - from.1).powi(2)).sqrt();
                    *t1 = *t0 + (d / speed).max(1e-3);
                }
                let f = ((t - *t0) / (*t1 - *t0)).clamp(0.0, 1.0);
                self.pos = (from.0 + f * (to.0 - from.0), from.1 + f * (to.1 - from.1));
                self.pos
            }
        }
    }
}

/// The surveyed area: coverage grid, obstacles and targets.
#[derive(Clone, Debug)]
pub struct FieldModel {
    pub cfg: FieldConfig,
    pub grid: Grid,
    pub targets: Vec<Target>,
}

impl FieldModel {
    pub fn generate(cfg: &FieldConfig, devices: usize, seed: u64) -> Result<Self, SimError> {
        cfg.validate()?;
        let (cols, rows) = cfg.dims_for(devices);
        let grid = Grid::with_obstacles(cols, rows, &cfg.obstacles);
        if grid.free_cells() == 0 {
            return Err(SimError::Config("field has no free cells".into()));
        }
        let mut rng = RngStream::new(seed, stream_id_for("field.targets"));
        let (w, h) = (cfg.cell_w_m, cfg.cell_h_m);
        let m = cfg.target_margin_m;
        let mut targets = Vec::with_capacity(cfg.target_count);
        for id in 0..cfg.target_count {
            let r = rng.rng();
            let cell = loop {
                let c = (r.random_range(0..cols), r.random_range(0..rows));
                if grid.is_free(c) {
                    break c;
                }
            };
            let pos = (
                cell.0 as f64 * w + r.random_range(m..w - m),
                cell.1 as f64 * h + r.random_range(m..h - m),
            );
            let motion = match cfg.target_kind {
                TargetKind::Item => Motion::Static,
                TargetKind::Person => Motion::Waypoint {
                    from: pos,
                    to: pos,
                    t0: 0.0,
                    t1: 0.0,
                    rng: RngStream::new(seed, stream_id_for(&format!("field.person.{id}"))),
                },
            };
            targets.push(Target {
                id,
                kind: cfg.target_kind,
                pos,
                motion,
            });
        }
        Ok(FieldModel {
            cfg: cfg.clone(),
            grid,
            targets,
        })
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.grid.cols as f64 * self.cfg.cell_w_m, self.grid.rows as f64 * self.cfg.cell_h_m)
    }

    pub fn center(&self, (c, r): Cell) -> (f64, f64) {
        ((c as f64 + 0.5) * self.cfg.cell_w_m, (r as f64 + 0.5) * self.cfg.cell_h_m)
    }

    pub fn cell_at(&self, (x, y): (f64, f64)) -> Cell {
        let c = ((x / self.cfg.cell_w_m).floor().max(0.0) as usize).min(self.grid.cols - 1);
        let r = ((y / self.cfg.cell_h_m).floor().max(0.0) as usize).min(self.grid.rows - 1);
        (c, r)
    }

    /// Ids of targets inside the footprint centered at `pos` at time `t`.
    pub fn visible(&mut self, pos: (f64, f64), t: f64) -> Vec<usize> {
        let bounds = self.bounds();
        let (hw, hh) = (self.cfg.cell_w_m / 2.0, self.cfg.cell_h_m / 2.0);
        let vmax = self.cfg.person_max_speed_mps;
        let mut out = Vec::new();
        for tg in &mut self.targets {
            let p = tg.position_at(t, bounds, vmax);
            if (p.0 - pos.0).abs() <= hw && (p.1 - pos.1).abs() <= hh {
                out.push(tg.id);
            }
        }
        out
    }
}

/// Balanced split of `0..n` into `k` contiguous ranges.
fn split(n: usize, k: usize) -> Vec<(usize, usize)> {
    (0..k).map(|i| (i * n / k, (i + 1) * n / k)).collect()
}

/// Divide the field into one rectangle per alive device, row-major. The
/// larger factor goes along the longer axis.
pub fn partition_field(grid: &Grid, devices: usize) -> Vec<CellRect> {
    assert!(devices >= 1, "partition needs at least one device");
    let (a, b) = factor_grid(devices);
    let (pr, pc) = if grid.cols >= grid.rows { (a, b) } else { (b, a) };
    let mut out = Vec::with_capacity(devices);
    for (r0, r1) in split(grid.rows, pr) {
        for (c0, c1) in split(grid.cols, pc) {
            out.push(CellRect { c0, r0, c1, r1 });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorization() {
        assert_eq!(factor_grid(16), (4, 4));
        assert_eq!(factor_grid(5), (1, 5));
        assert_eq!(factor_grid(1000), (25, 40));
        assert_eq!(factor_grid(1), (1, 1));
    }

    fn area_oracle(regions: &[CellRect], cols: usize, rows: usize, n: usize) {
        assert_eq!(regions.len(), n);
        let total: usize = regions.iter().map(|r| r.area()).sum();
        assert_eq!(total, cols * rows);
        let mut seen = vec![0u8; cols * rows];
        for r in regions {
            for (c, rr) in r.cells() {
                seen[rr * cols + c] += 1;
            }
        }
        assert!(seen.iter().all(|&s| s == 1), "regions must tile the field");
        let ideal = (cols * rows) as f64 / n as f64;
        for r in regions {
            assert!((r.area() as f64 - ideal).abs() <= 0.05 * ideal, "area {} vs {ideal}", r.area());
        }
    }

    #[test]
    fn sixteen_devices_four_by_four() {
        let cfg = FieldConfig::default();
        let (c, r) = cfg.dims_for(16);
        let regions = partition_field(&Grid::new(c, r), 16);
        area_oracle(&regions, c, r, 16);
        assert!(regions.iter().all(|x| x.c1 - x.c0 == 6 && x.r1 - x.r0 == 5));
    }

    #[test]
    fn five_devices_strips_and_single_device() {
        let cfg = FieldConfig::default();
        let (c, r) = cfg.dims_for(5);
        let regions = partition_field(&Grid::new(c, r), 5);
        area_oracle(&regions, c, r, 5);
        assert!(regions.iter().all(|x| x.r0 == 0 && x.r1 == r));
        // Same field, fewer alive devices still tiles.
        area_oracle(&partition_field(&Grid::new(c, r), 1), c, r, 1);
    }

    #[test]
    fn targets_respect_margin_and_bounds() {
        let cfg = FieldConfig {
            target_count: 200,
            ..FieldConfig::default()
        };
        let f = FieldModel::generate(&cfg, 16, 3).unwrap();
        for t in &f.targets {
            let (x, y) = t.pos;
            let fx = x / cfg.cell_w_m - (x / cfg.cell_w_m).floor();
            let fy = y / cfg.cell_h_m - (y / cfg.cell_h_m).floor();
            assert!(fx * cfg.cell_w_m >= 0.5 && (1.0 - fx) * cfg.cell_w_m >= 0.5);
            assert!(fy * cfg.cell_h_m >= 0.5 && (1.0 - fy) * cfg.cell_h_m >= 0.5);
        }
    }

    #[test]
    fn people_move_within_bounds_at_bounded_speed() {
        let cfg = FieldConfig {
            target_kind: TargetKind::Person,
            target_count: 25,
            ..FieldConfig::default()
        };
        let mut f = FieldModel::generate(&cfg, 16, 9).unwrap();
        let b = f.bounds();
        let mut last: Vec<(f64, f64)> = f.targets.iter_mut().map(|t| t.position_at(0.0, b, 1.5)).collect();
        for step in 1..600 {
            let t = step as f64 * 0.5;
            for (i, tg) in f.targets.iter_mut().enumerate() {
                let p = tg.position_at(t, b, 1.5);
                assert!(p.0 >= 0.0 && p.0 <= b.0 && p.1 >= 0.0 && p.1 <= b.1);
                let d = ((p.0 - last[i].0).powi(2) + (p.1 - last[i].1).powi(2)).sqrt();
                assert!(d <= 1.5 * 0.5 + 1e-9, "moved {d} m in 0.5 s");
                last[i] = p;
            }
        }
    }

    #[test]
    fn footprint_visibility() {
        let cfg = FieldConfig {
            target_count: 1,
            ..FieldConfig::default()
        };
        let mut f = FieldModel::generate(&cfg, 1, 1).unwrap();
        let p = f.targets[0].pos;
        assert_eq!(f.visible(p, 0.0), vec![0]);
        let cell = f.cell_at(p);
        assert_eq!(f.visible(f.center(cell), 0.0), vec![0]);
        assert!(f.visible((p.0 + 3.4, p.1), 0.0).is_empty());
    }
}
