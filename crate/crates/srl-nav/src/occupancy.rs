use nalgebra::Vector2;

use crate::HeightGrid;

/// Binary occupancy grid derived from a height grid. Unknown cells are
/// treated as free but remembered in the `unknown` mask.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid {
    pub occupied: Vec<bool>,
    pub unknown: Vec<bool>,
    pub nx: usize,
    pub ny: usize,
    pub resolution: f64,
    pub origin: Vector2<f64>,
}

impl OccupancyGrid {
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn is_occupied(&self, ix: usize, iy: usize) -> bool {
        self.occupied[self.idx(ix, iy)]
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

    pub fn cell_center(&self, ix: usize, iy: usize) -> Vector2<f64> {
        Vector2::new(
            self.origin.x + (ix as f64 + 0.5) * self.resolution,
            self.origin.y + (iy as f64 + 0.5) * self.resolution,
        )
    }

    /// Nearest cell to `p` when clamped into the grid bounds.
    pub fn clamped_cell_of(&self, p: &Vector2<f64>) -> (usize, usize) {
        let fx = ((p.x - self.origin.x) / self.resolution).floor();
        let fy = ((p.y - self.origin.y) / self.resolution).floor();
        let ix = (fx.max(0.0) as usize).min(self.nx - 1);
        let iy = (fy.max(0.0) as usize).min(self.ny - 1);
        (ix, iy)
    }
}

/// Thresholds a height grid into occupancy: a cell is an obstacle iff its
/// sampled height exceeds `h_max`.
pub fn build_occupancy(bev: &HeightGrid, h_max: f64) -> OccupancyGrid {
    assert!(h_max > 0.0, "h_max must be positive");
    let mut occupied = vec![false; bev.cells.len()];
    let mut unknown = vec![false; bev.cells.len()];
    for (i, c) in bev.cells.iter().enumerate() {
        match c {
            Some(h) => occupied[i] = *h > h_max,
            None => unknown[i] = true,
        }
    }
    OccupancyGrid {
        occupied,
        unknown,
        nx: bev.nx,
        ny: bev.ny,
        resolution: bev.resolution,
        origin: bev.origin,
    }
}

/// Breadth-first search for the free cell closest to `start` (itself
/// included). Returns `None` when the whole grid is occupied.
pub fn nearest_free_cell(occ: &OccupancyGrid, start: (usize, usize)) -> Option<(usize, usize)> {
    if !occ.is_occupied(start.0, start.1) {
        return Some(start);
    }
    let mut visited = vec![false; occ.occupied.len()];
    let mut queue = std::collections::VecDeque::new();
    visited[occ.idx(start.0, start.1)] = true;
    queue.push_back(start);
    while let Some((ix, iy)) = queue.pop_front() {
        for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
            let nx = ix as i64 + dx;
            let ny = iy as i64 + dy;
            if nx < 0 || ny < 0 || nx >= occ.nx as i64 || ny >= occ.ny as i64 {
                continue;
            }
            let cell = (nx as usize, ny as usize);
            let idx = occ.idx(cell.0, cell.1);
            if visited[idx] {
                continue;
            }
            if !occ.occupied[idx] {
                return Some(cell);
            }
            visited[idx] = true;
            queue.push_back(cell);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{build_bev, Roi};
    use nalgebra::Vector3;

    #[test]
    fn height_thresholding() {
        let roi = Roi {
            min: Vector2::new(0.0, 0.0),
            max: Vector2::new(2.0, 1.0),
        };
        let pts = [Vector3::new(0.5, 0.5, 0.5), Vector3::new(1.5, 0.5, 0.0)];
        let bev = build_bev(&pts, &roi, 1.0);
        let occ = build_occupancy(&bev, 0.3);
        assert!(occ.is_occupied(0, 0)); // 0.5 > 0.3
        assert!(!occ.is_occupied(1, 0)); // ground
    }

    #[test]
    fn unknown_cells_are_free_but_flagged() {
        let roi = Roi {
            min: Vector2::new(0.0, 0.0),
            max: Vector2::new(1.0, 1.0),
        };
        let bev = build_bev(&[], &roi, 1.0);
        let occ = build_occupancy(&bev, 0.3);
        assert!(!occ.is_occupied(0, 0));
        assert!(occ.unknown[0]);
    }

    #[test]
    fn occupancy_is_deterministic() {
        let roi = Roi {
            min: Vector2::new(0.0, 0.0),
            max: Vector2::new(3.0, 3.0),
        };
        let pts: Vec<Vector3<f64>> = (0..50)
            .map(|k| {
                let x = (k as f64 * 0.37).rem_euclid(3.0);
                let y = (k as f64 * 0.73).rem_euclid(3.0);
                Vector3::new(x, y, (k as f64 * 0.11).sin().abs())
            })
            .collect();
        let a = build_occupancy(&build_bev(&pts, &roi, 0.25), 0.3);
        let b = build_occupancy(&build_bev(&pts, &roi, 0.25), 0.3);
        assert_eq!(a, b);
    }

    #[test]
    fn nearest_free_cell_escapes_obstacles() {
        let roi = Roi {
            min: Vector2::new(0.0, 0.0),
            max: Vector2::new(3.0, 1.0),
        };
        let pts = [
            Vector3::new(0.5, 0.5, 1.0),
            Vector3::new(1.5, 0.5, 1.0),
            Vector3::new(2.5, 0.5, 0.0),
        ];
        let occ = build_occupancy(&build_bev(&pts, &roi, 1.0), 0.3);
        assert_eq!(nearest_free_cell(&occ, (0, 0)), Some((2, 0)));
    }
}
