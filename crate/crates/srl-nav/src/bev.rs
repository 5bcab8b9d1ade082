use nalgebra::{Vector2, Vector3};

/// Axis-aligned region of interest in world coordinates.
#[derive(Clone, Copy, Debug)]
pub struct Roi {
    pub min: Vector2<f64>,
    pub max: Vector2<f64>,
}

impl Roi {
    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        p.x >= self.min.x && p.x < self.max.x && p.y >= self.min.y && p.y < self.max.y
    }
}

/// Bird's-eye-view height grid; cells without any sample stay unknown.
#[derive(Clone, Debug)]
pub struct HeightGrid {
    pub cells: Vec<Option<f64>>,
    pub nx: usize,
    pub ny: usize,
    pub resolution: f64,
    /// World position of cell (0, 0)'s corner.
    pub origin: Vector2<f64>,
}

impl HeightGrid {
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
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

    pub fn height(&self, ix: usize, iy: usize) -> Option<f64> {
        self.cells[self.idx(ix, iy)]
    }
}

/// Bins a point cloud into a max-height grid over the region of interest.
/// Points outside the region are discarded; cells nothing fell into are
/// unknown.
pub fn build_bev(points: &[Vector3<f64>], roi: &Roi, resolution: f64) -> HeightGrid {
    assert!(resolution > 0.0, "resolution must be positive");
    let nx = (((roi.max.x - roi.min.x) / resolution).ceil() as usize).max(1);
    let ny = (((roi.max.y - roi.min.y) / resolution).ceil() as usize).max(1);
    let mut grid = HeightGrid {
        cells: vec![None; nx * ny],
        nx,
        ny,
        resolution,
        origin: roi.min,
    };
    for p in points {
        let xy = Vector2::new(p.x, p.y);
        if !roi.contains(&xy) {
            continue;
        }
        if let Some((ix, iy)) = grid.cell_of(&xy) {
            let idx = grid.idx(ix, iy);
            grid.cells[idx] = Some(match grid.cells[idx] {
                Some(h) => h.max(p.z),
                None => p.z,
            });
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roi0() -> Roi {
        Roi {
            min: Vector2::new(0.0, 0.0),
            max: Vector2::new(5.0, 5.0),
        }
    }

    #[test]
    fn single_point_bins_to_expected_cell() {
        let g = build_bev(&[Vector3::new(1.0, 2.0, 0.5)], &roi0(), 0.5);
        assert_eq!(g.height(2, 4), Some(0.5));
    }

    #[test]
    fn max_aggregation_within_cell() {
        let pts = [Vector3::new(1.1, 1.1, 0.2), Vector3::new(1.2, 1.2, 0.7)];
        let g = build_bev(&pts, &roi0(), 0.5);
        assert_eq!(g.height(2, 2), Some(0.7));
    }

    #[test]
    fn point_outside_roi_is_discarded() {
        let g = build_bev(&[Vector3::new(9.0, 9.0, 1.0)], &roi0(), 0.5);
        assert!(g.cells.iter().all(Option::is_none));
    }

    #[test]
    fn empty_cloud_gives_all_unknown() {
        let g = build_bev(&[], &roi0(), 0.5);
        assert!(g.cells.iter().all(Option::is_none));
    }
}
