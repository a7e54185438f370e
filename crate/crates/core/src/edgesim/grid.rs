use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

/// Grid cell as `(col, row)`.
pub type Cell = (usize, usize);

/// Axis-aligned block of cells, `[c0, c1) × [r0, r1)`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRect {
    pub c0: usize,
    pub r0: usize,
    pub c1: usize,
    pub r1: usize,
}

impl CellRect {
    pub fn contains(&self, (c, r): Cell) -> bool {
        (self.c0..self.c1).contains(&c) && (self.r0..self.r1).contains(&r)
    }

    pub fn area(&self) -> usize {
        (self.c1 - self.c0) * (self.r1 - self.r0)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (self.r0..self.r1).flat_map(move |r| (self.c0..self.c1).map(move |c| (c, r)))
    }

    /// True when the two rectangles share a boundary segment of positive length.
    pub fn adjacent(&self, o: &CellRect) -> bool {
        let overlap_r = self.r0.max(o.r0) < self.r1.min(o.r1);
        let overlap_c = self.c0.max(o.c0) < self.c1.min(o.c1);
        ((self.c1 == o.c0 || o.c1 == self.c0) && overlap_r) || ((self.r1 == o.r0 || o.r1 == self.r0) && overlap_c)
    }
}

/// Occupancy grid of coverage cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid {
    pub cols: usize,
    pub rows: usize,
    blocked: Vec<bool>,
}

impl Grid {
    pub fn new(cols: usize, rows: usize) -> Self {
        Self {
            cols,
            rows,
            blocked: vec![false; cols * rows],
        }
    }

    pub fn with_obstacles(cols: usize, rows: usize, obstacles: &[CellRect]) -> Self {
        let mut g = Grid::new(cols, rows);
        for o in obstacles {
            for (c, r) in o.cells() {
                if c < cols && r < rows {
                    g.block((c, r));
                }
            }
        }
        g
    }

    pub fn idx(&self, (c, r): Cell) -> usize {
        r * self.cols + c
    }

    pub fn cell(&self, i: usize) -> Cell {
        (i % self.cols, i / self.cols)
    }

    pub fn len(&self) -> usize {
        self.cols * self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn block(&mut self, c: Cell) {
        let i = self.idx(c);
        self.blocked[i] = true;
    }

    pub fn is_free(&self, c: Cell) -> bool {
        c.0 < self.cols && c.1 < self.rows && !self.blocked[self.idx(c)]
    }

    pub fn free_cells(&self) -> usize {
        self.blocked.iter().filter(|b| !**b).count()
    }

    pub fn neighbors(&self, (c, r): Cell) -> impl Iterator<Item = Cell> + '_ {
        let cand = [
            (c.wrapping_sub(1), r),
            (c + 1, r),
            (c, r.wrapping_sub(1)),
            (c, r + 1),
        ];
        cand.into_iter().filter(move |n| self.is_free(*n))
    }
}

pub fn manhattan(a: Cell, b: Cell) -> usize {
    a.0.abs_diff(b.0) + a.1.abs_diff(b.1)
}

/// Shortest 4-connected path from `start` to `goal` (both included) with unit
/// step cost. `None` when the goal is unreachable or either end is blocked.
pub fn astar(grid: &Grid, start: Cell, goal: Cell) -> Option<Vec<Cell>> {
    if !grid.is_free(start) || !grid.is_free(goal) {
        return None;
    }
    let n = grid.len();
    let mut g = vec![usize::MAX; n];
    let mut came = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let s = grid.idx(start);
    g[s] = 0;
    open.push(Reverse((manhattan(start, goal), 0usize, s)));
    while let Some(Reverse((_, _, i))) = open.pop() {
        if closed[i] {
            continue;
        }
        closed[i] = true;
        let cur = grid.cell(i);
        if cur == goal {
            let mut path = vec![cur];
            let mut k = i;
            while k != s {
                k = came[k];
                path.push(grid.cell(k));
            }
            path.reverse();
            return Some(path);
        }
        for nb in grid.neighbors(cur) {
            let j = grid.idx(nb);
            let cand = g[i] + 1;
            if cand < g[j] {
                g[j] = cand;
                came[j] = i;
                let h = manhattan(nb, goal);
                open.push(Reverse((cand + h, h, j)));
            }
        }
    }
    None
}

/// Number of steps in a path returned by [`astar`].
pub fn path_len(path: &[Cell]) -> usize {
    path.len().saturating_sub(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Plain Dijkstra with a linear-scan frontier; shares nothing with `astar`.
    fn dijkstra(grid: &Grid, s: Cell, t: Cell) -> Option<usize> {
        if !grid.is_free(s) || !grid.is_free(t) {
            return None;
        }
        let mut dist = vec![vec![usize::MAX; grid.cols]; grid.rows];
        let mut done = vec![vec![false; grid.cols]; grid.rows];
        dist[s.1][s.0] = 0;
        loop {
            let mut best: Option<(usize, Cell)> = None;
            for r in 0..grid.rows {
                for c in 0..grid.cols {
                    if !done[r][c] && dist[r][c] != usize::MAX && best.is_none_or(|(d, _)| dist[r][c] < d) {
                        best = Some((dist[r][c], (c, r)));
                    }
                }
            }
            let (d, (c, r)) = best?;
            if (c, r) == t {
                return Some(d);
            }
            done[r][c] = true;
            let steps: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
            for (dc, dr) in steps {
                let (nc, nr) = (c as i64 + dc, r as i64 + dr);
                if nc < 0 || nr < 0 || nc as usize >= grid.cols || nr as usize >= grid.rows {
                    continue;
                }
                let (nc, nr) = (nc as usize, nr as usize);
                if grid.is_free((nc, nr)) && d + 1 < dist[nr][nc] {
                    dist[nr][nc] = d + 1;
                }
            }
        }
    }

    #[test]
    fn detour_around_wall() {
        let mut g = Grid::new(5, 5);
        for r in 0..4 {
            g.block((2, r));
        }
        let p = astar(&g, (0, 0), (4, 0)).unwrap();
        assert_eq!(path_len(&p), 12);
        assert_eq!(dijkstra(&g, (0, 0), (4, 0)), Some(12));
        for w in p.windows(2) {
            assert_eq!(manhattan(w[0], w[1]), 1);
            assert!(g.is_free(w[1]));
        }
    }

    #[test]
    fn disconnected_goal() {
        let mut g = Grid::new(3, 3);
        for r in 0..3 {
            g.block((1, r));
        }
        assert_eq!(astar(&g, (0, 0), (2, 2)), None);
        assert_eq!(astar(&g, (0, 1), (0, 1)), Some(vec![(0, 1)]));
    }

    #[test]
    fn rect_adjacency() {
        let a = CellRect { c0: 0, r0: 0, c1: 2, r1: 2 };
        let b = CellRect { c0: 2, r0: 1, c1: 4, r1: 3 };
        let diag = CellRect { c0: 2, r0: 2, c1: 4, r1: 4 };
        assert!(a.adjacent(&b) && b.adjacent(&a));
        assert!(!a.adjacent(&diag));
    }

    fn arb_grid() -> impl Strategy<Value = (Grid, Cell, Cell)> {
        (2usize..=50, 2usize..=50, 0.0f64..0.4, any::<u64>()).prop_map(|(cols, rows, density, seed)| {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut g = Grid::new(cols, rows);
            for r in 0..rows {
                for c in 0..cols {
                    if rng.random_bool(density) {
                        g.block((c, r));
                    }
                }
            }
            let s = (rng.random_range(0..cols), rng.random_range(0..rows));
            let t = (rng.random_range(0..cols), rng.random_range(0..rows));
            (g, s, t)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn astar_matches_dijkstra((g, s, t) in arb_grid()) {
            let a = astar(&g, s, t).map(|p| path_len(&p));
            prop_assert_eq!(a, dijkstra(&g, s, t));
        }
    }
}
