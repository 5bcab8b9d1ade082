use nalgebra::Vector2;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{NavError, OccupancyGrid};

/// Travel-cost field in grid-distance units. Obstacle and unreachable
/// cells hold infinity; the goal cell holds zero.
#[derive(Clone, Debug)]
pub struct CostMap {
    pub cost: Vec<f64>,
    pub nx: usize,
    pub ny: usize,
    pub resolution: f64,
    pub origin: Vector2<f64>,
    pub goal_cell: (usize, usize),
}

impl CostMap {
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.cost[self.idx(ix, iy)]
    }

    pub fn cell_of(&self, p: &Vector2<f64>) -> Option<(usize, usize)> {
        let fx = (p.x - self.origin.x) / self.resolution;
        let fy = (p.y - self.origin.y) / self.resolution;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (ix, iy) = (fx as usize, fy as usize);
        (ix < self.nx && iy < self.ny).then_some((ix, iy))
    }

    /// Bilinear interpolation at a world position, infinity if any
    /// supporting cell is infinite or the position leaves the grid.
    pub fn sample(&self, p: &Vector2<f64>) -> f64 {
        let fx = (p.x - self.origin.x) / self.resolution - 0.5;
        let fy = (p.y - self.origin.y) / self.resolution - 0.5;
        if fx < 0.0 || fy < 0.0 || fx >= (self.nx - 1) as f64 || fy >= (self.ny - 1) as f64 {
            return f64::INFINITY;
        }
        let (ix, iy) = (fx as usize, fy as usize);
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let c00 = self.at(ix, iy);
        let c10 = self.at(ix + 1, iy);
        let c01 = self.at(ix, iy + 1);
        let c11 = self.at(ix + 1, iy + 1);
        if !(c00.is_finite() && c10.is_finite() && c01.is_finite() && c11.is_finite()) {
            return f64::INFINITY;
        }
        c00 * (1.0 - tx) * (1.0 - ty)
            + c10 * tx * (1.0 - ty)
            + c01 * (1.0 - tx) * ty
            + c11 * tx * ty
    }
}

struct HeapEntry {
    cost: f64,
    idx: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cost == other.cost && self.idx == other.idx
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // Reversed so the BinaryHeap pops the smallest cost first; ties break
    // on the cell index for determinism.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

/// First-order upwind quadratic update from the accepted axis minima.
fn eikonal_update(a: f64, b: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if !lo.is_finite() {
        return f64::INFINITY;
    }
    if hi - lo >= 1.0 || !hi.is_finite() {
        lo + 1.0
    } else {
        let d = lo - hi;
        (lo + hi + (2.0 - d * d).sqrt()) / 2.0
    }
}

/// Unit-speed Eikonal solve by min-heap fast marching from the goal.
pub fn fmm_costmap(occ: &OccupancyGrid, goal: &Vector2<f64>) -> Result<CostMap, NavError> {
    let goal_cell = occ.cell_of(goal).ok_or(NavError::GoalOutside)?;
    if occ.is_occupied(goal_cell.0, goal_cell.1) {
        return Err(NavError::GoalBlocked);
    }
    let n = occ.occupied.len();
    let mut cost = vec![f64::INFINITY; n];
    let mut accepted = vec![false; n];
    let goal_idx = occ.idx(goal_cell.0, goal_cell.1);
    cost[goal_idx] = 0.0;

    let mut heap = BinaryHeap::new();
    heap.push(HeapEntry {
        cost: 0.0,
        idx: goal_idx,
    });

    while let Some(HeapEntry { idx, .. }) = heap.pop() {
        if accepted[idx] {
            continue;
        }
        accepted[idx] = true;
        let (ix, iy) = (idx % occ.nx, idx / occ.nx);
        for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
            let jx = ix as i64 + dx;
            let jy = iy as i64 + dy;
            if jx < 0 || jy < 0 || jx >= occ.nx as i64 || jy >= occ.ny as i64 {
                continue;
            }
            let jdx = occ.idx(jx as usize, jy as usize);
            if accepted[jdx] || occ.occupied[jdx] {
                continue;
            }
            let axis_min = |p: i64, q: i64| -> f64 {
                let mut best = f64::INFINITY;
                for (cx, cy) in [(jx + p, jy + q), (jx - p, jy - q)] {
                    if cx < 0 || cy < 0 || cx >= occ.nx as i64 || cy >= occ.ny as i64 {
                        continue;
                    }
                    let c = occ.idx(cx as usize, cy as usize);
                    if accepted[c] {
                        best = best.min(cost[c]);
                    }
                }
                best
            };
            let u = eikonal_update(axis_min(1, 0), axis_min(0, 1));
            if u < cost[jdx] {
                cost[jdx] = u;
                heap.push(HeapEntry { cost: u, idx: jdx });
            }
        }
    }

    Ok(CostMap {
        cost,
        nx: occ.nx,
        ny: occ.ny,
        resolution: occ.resolution,
        origin: occ.origin,
        goal_cell,
    })
}

/// Follows the steepest-descent 8-neighbor from a cell until the goal (or
/// until no strictly smaller neighbor exists). Returns the visited cells
/// including the start.
pub fn descend_path(map: &CostMap, from: (usize, usize)) -> Vec<(usize, usize)> {
    let mut path = vec![from];
    let mut cur = from;
    let cap = map.nx * map.ny;
    while cur != map.goal_cell && path.len() <= cap {
        let (ix, iy) = cur;
        let here = map.at(ix, iy);
        let mut best = (here, cur);
        for dx in -1i64..=1 {
            for dy in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let jx = ix as i64 + dx;
                let jy = iy as i64 + dy;
                if jx < 0 || jy < 0 || jx >= map.nx as i64 || jy >= map.ny as i64 {
                    continue;
                }
                let c = map.at(jx as usize, jy as usize);
                if c < best.0 {
                    best = (c, (jx as usize, jy as usize));
                }
            }
        }
        if best.1 == cur {
            break;
        }
        cur = best.1;
        path.push(cur);
    }
    path
}
