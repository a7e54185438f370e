use std::collections::BTreeSet;

use thiserror::Error;

use super::grid::{manhattan, Cell, CellRect, Grid};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("mission infeasible: no eligible neighbor can take over device {device}'s {cells} uncovered cells")]
pub struct MissionInfeasible {
    pub device: usize,
    pub cells: usize,
}

/// Cell ownership and coverage state for the whole field.
#[derive(Clone, Debug)]
pub struct CoverageMap {
    pub grid: Grid,
    owner: Vec<Option<usize>>,
    covered: Vec<bool>,
    visits: Vec<u32>,
}

impl CoverageMap {
    /// Assign every free cell of each region to its device.
    pub fn new(grid: Grid, regions: &[CellRect]) -> Self {
        let n = grid.len();
        let mut owner = vec![None; n];
        for (dev, reg) in regions.iter().enumerate() {
            for c in reg.cells() {
                if grid.is_free(c) {
                    owner[grid.idx(c)] = Some(dev);
                }
            }
        }
        Self {
            grid,
            owner,
            covered: vec![false; n],
            visits: vec![0; n],
        }
    }

    pub fn owner(&self, c: Cell) -> Option<usize> {
        self.owner[self.grid.idx(c)]
    }

    pub fn is_covered(&self, c: Cell) -> bool {
        self.covered[self.grid.idx(c)]
    }

    /// Mark `c` covered if `dev` owns it and it is not covered yet.
    pub fn cover(&mut self, c: Cell, dev: usize) -> bool {
        let i = self.grid.idx(c);
        if self.owner[i] == Some(dev) && !self.covered[i] {
            self.covered[i] = true;
            self.visits[i] += 1;
            true
        } else {
            false
        }
    }

    /// Mark a covered cell as needing another pass.
    pub fn reopen(&mut self, c: Cell) {
        let i = self.grid.idx(c);
        if self.owner[i].is_some() {
            self.covered[i] = false;
        }
    }

    /// Drop a cell nobody can reach; it no longer counts toward coverage.
    pub fn drop_cell(&mut self, c: Cell) {
        let i = self.grid.idx(c);
        self.owner[i] = None;
    }

    pub fn cells_of(&self, dev: usize) -> Vec<Cell> {
        (0..self.owner.len()).filter(|&i| self.owner[i] == Some(dev)).map(|i| self.grid.cell(i)).collect()
    }

    pub fn uncovered_of(&self, dev: usize) -> Vec<Cell> {
        (0..self.owner.len())
            .filter(|&i| self.owner[i] == Some(dev) && !self.covered[i])
            .map(|i| self.grid.cell(i))
            .collect()
    }

    fn assigned(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.owner.len()).filter(|&i| self.owner[i].is_some())
    }

    pub fn coverage_fraction(&self) -> f64 {
        let total = self.assigned().count();
        if total == 0 {
            return 1.0;
        }
        self.assigned().filter(|&i| self.covered[i]).count() as f64 / total as f64
    }

    pub fn complete(&self) -> bool {
        self.assigned().all(|i| self.covered[i])
    }

    /// Every assigned cell covered exactly once.
    pub fn covered_exactly_once(&self) -> bool {
        self.assigned().all(|i| self.visits[i] == 1)
    }

    /// Devices owning a cell 4-adjacent to one of `dev`'s cells.
    pub fn neighbors_of(&self, dev: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let (cols, rows) = (self.grid.cols, self.grid.rows);
        for (c, r) in self.cells_of(dev) {
            let cand = [(c.wrapping_sub(1), r), (c + 1, r), (c, r.wrapping_sub(1)), (c, r + 1)];
            for (nc, nr) in cand {
                if nc < cols && nr < rows {
                    if let Some(o) = self.owner[self.grid.idx((nc, nr))] {
                        if o != dev {
                            out.insert(o);
                        }
                    }
                }
            }
        }
        out
    }

    /// Split `failed`'s uncovered cells among its eligible neighbors, with
    /// quotas differing by at most one cell. Each neighbor grows from its
    /// own territory, taking the nearest remaining cell in turn. Returns the
    /// cells each neighbor gained.
    pub fn repartition_on_failure(
        &mut self,
        failed: usize,
        eligible: impl Fn(usize) -> bool,
    ) -> Result<Vec<(usize, Vec<Cell>)>, MissionInfeasible> {
        let mut pending = self.uncovered_of(failed);
        if pending.is_empty() {
            return Ok(Vec::new());
        }
        let takers: Vec<usize> = self.neighbors_of(failed).into_iter().filter(|d| eligible(*d)).collect();
        if takers.is_empty() {
            return Err(MissionInfeasible {
                device: failed,
                cells: pending.len(),
            });
        }
        let k = takers.len();
        let base = pending.len() / k;
        let extra = pending.len() % k;
        let mut quota: Vec<usize> = (0..k).map(|i| base + usize::from(i < extra)).collect();
        let mut territory: Vec<Vec<Cell>> = takers.iter().map(|d| self.cells_of(*d)).collect();
        let mut gained: Vec<Vec<Cell>> = vec![Vec::new(); k];
        while !pending.is_empty() {
            for i in 0..k {
                if quota[i] == 0 || pending.is_empty() {
                    continue;
                }
                let dist = |c: &Cell| territory[i].iter().map(|t| manhattan(*t, *c)).min().unwrap_or(usize::MAX);
                let (j, _) = pending
                    .iter()
                    .enumerate()
                    .min_by_key(|(_, c)| (dist(c), **c))
                    .expect("nonempty");
                let cell = pending.swap_remove(j);
                quota[i] -= 1;
                territory[i].push(cell);
                gained[i].push(cell);
            }
        }
        for (i, cells) in gained.iter().enumerate() {
            for &c in cells {
                let idx = self.grid.idx(c);
                self.owner[idx] = Some(takers[i]);
            }
        }
        Ok(takers.into_iter().zip(gained).filter(|(_, g)| !g.is_empty()).collect())
    }

    /// A rejoining device takes back the uncovered cells of its original
    /// region. Returns `(previous owner, cells)` pairs.
    pub fn reclaim_on_rejoin(&mut self, dev: usize, region: &CellRect) -> Vec<(usize, Vec<Cell>)> {
        let mut moved: Vec<(usize, Vec<Cell>)> = Vec::new();
        for c in region.cells() {
            let i = self.grid.idx(c);
            match self.owner[i] {
                Some(o) if o != dev && !self.covered[i] => {
                    self.owner[i] = Some(dev);
                    match moved.iter_mut().find(|(p, _)| *p == o) {
                        Some((_, v)) => v.push(c),
                        None => moved.push((o, vec![c])),
                    }
                }
                _ => {}
            }
        }
        moved
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edgesim::partition_field;
    use proptest::prelude::*;

    fn two_by_two() -> CoverageMap {
        let g = Grid::new(12, 10);
        let regions = partition_field(&g, 4);
        CoverageMap::new(g, &regions)
    }

    #[test]
    fn split_between_adjacent_neighbors() {
        let mut m = two_by_two();
        let before = m.uncovered_of(0).len();
        assert_eq!(before, 30);
        let gained = m.repartition_on_failure(0, |_| true).unwrap();
        // Region 0 touches regions 1 and 2 but not 3 (diagonal).
        let devs: Vec<usize> = gained.iter().map(|(d, _)| *d).collect();
        assert_eq!(devs, vec![1, 2]);
        assert_eq!(gained[0].1.len(), 15);
        assert_eq!(gained[1].1.len(), 15);
        assert!(m.uncovered_of(0).is_empty());
    }

    #[test]
    fn fully_covered_region_needs_no_reassignment() {
        let mut m = two_by_two();
        for c in m.cells_of(0) {
            m.cover(c, 0);
        }
        assert!(m.repartition_on_failure(0, |_| true).unwrap().is_empty());
    }

    #[test]
    fn no_eligible_neighbor_is_infeasible() {
        let mut m = two_by_two();
        let err = m.repartition_on_failure(0, |_| false).unwrap_err();
        assert_eq!(err.cells, 30);
    }

    #[test]
    fn rejoin_takes_back_uncovered_cells() {
        let g = Grid::new(12, 10);
        let regions = partition_field(&g, 4);
        let mut m = CoverageMap::new(g, &regions);
        let first = m.cells_of(0)[0];
        m.cover(first, 0);
        m.repartition_on_failure(0, |_| true).unwrap();
        let back = m.reclaim_on_rejoin(0, &regions[0]);
        assert_eq!(back.iter().map(|(_, c)| c.len()).sum::<usize>(), 29);
        assert_eq!(m.uncovered_of(0).len(), 29);
    }

    proptest! {
        #[test]
        fn repartition_preserves_uncovered_set(n in 2usize..12, covered_frac in 0.0f64..1.0, failed_pick in 0usize..100, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = Grid::new(6 * n, 5);
            let regions = partition_field(&g, n);
            let mut m = CoverageMap::new(g, &regions);
            for d in 0..n {
                for c in m.cells_of(d) {
                    if rng.random_bool(covered_frac) {
                        m.cover(c, d);
                    }
                }
            }
            let failed = failed_pick % n;
            let all_uncovered: BTreeSet<Cell> = (0..n).flat_map(|d| m.uncovered_of(d)).collect();
            let lost = m.uncovered_of(failed).len();
            let k = m.neighbors_of(failed).len();
            let gained = m.repartition_on_failure(failed, |_| true).unwrap();
            let after: Vec<Cell> = (0..n).filter(|d| *d != failed).flat_map(|d| m.uncovered_of(d)).collect();
            let after_set: BTreeSet<Cell> = after.iter().copied().collect();
            prop_assert_eq!(after.len(), after_set.len());
            prop_assert_eq!(after_set, all_uncovered);
            if lost > 0 {
                let sizes: Vec<usize> = gained.iter().map(|(_, c)| c.len()).collect();
                prop_assert!(sizes.iter().all(|s| *s == lost / k || *s == lost / k + 1));
                prop_assert_eq!(sizes.iter().sum::<usize>(), lost);
            }
        }
    }
}
