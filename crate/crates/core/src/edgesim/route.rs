use std::collections::BTreeMap;

use super::grid::{astar, manhattan, Cell, Grid};

/// Coverage route: the cells to cover in order plus the full cell-by-cell
/// path (starting at the start cell) that visits them.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Route {
    pub visits: Vec<Cell>,
    pub path: Vec<Cell>,
    /// Cells dropped because obstacles cut them off from the start.
    pub unreachable: Vec<Cell>,
}

impl Route {
    /// Length in cell steps.
    pub fn steps(&self) -> usize {
        self.path.len().saturating_sub(1)
    }
}

/// Serpentine ordering of an arbitrary cell set: row by row, alternating
/// direction. Among the four sweep orientations the one whose first cell is
/// closest to `start` wins.
pub fn boustrophedon(cells: &[Cell], start: Cell) -> Vec<Cell> {
    if cells.is_empty() {
        return Vec::new();
    }
    let mut rows: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(c, r) in cells {
        rows.entry(r).or_default().push(c);
    }
    for cs in rows.values_mut() {
        cs.sort_unstable();
        cs.dedup();
    }
    let sweep = |bottom_up: bool, left_first: bool| -> Vec<Cell> {
        let mut out = Vec::with_capacity(cells.len());
        let order: Vec<(&usize, &Vec<usize>)> =
            if bottom_up { rows.iter().rev().collect() } else { rows.iter().collect() };
        for (i, (r, cs)) in order.into_iter().enumerate() {
            let ltr = (i % 2 == 0) == left_first;
            if ltr {
                out.extend(cs.iter().map(|c| (*c, *r)));
            } else {
                out.extend(cs.iter().rev().map(|c| (*c, *r)));
            }
        }
        out
    };
    [(false, true), (false, false), (true, true), (true, false)]
        .into_iter()
        .map(|(b, l)| sweep(b, l))
        .min_by_key(|s| manhattan(start, s[0]))
        .expect("four sweeps")
}

/// Plan a coverage route from `start` over `cells`, joining consecutive
/// visits with A* legs on the field grid.
pub fn plan_route(grid: &Grid, start: Cell, cells: &[Cell]) -> Route {
    let order = boustrophedon(cells, start);
    let mut route = Route {
        path: vec![start],
        ..Route::default()
    };
    let mut cur = start;
    for cell in order {
        if !grid.is_free(cell) {
            route.unreachable.push(cell);
            continue;
        }
        match astar(grid, cur, cell) {
            Some(leg) => {
                route.path.extend_from_slice(&leg[1..]);
                route.visits.push(cell);
                cur = cell;
            }
            None => route.unreachable.push(cell),
        }
    }
    route
}
