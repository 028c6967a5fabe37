//! Planar range sensor: ray casting over the estimate and the ground truth.

use crate::geom::Point2;
use crate::grid::{Cell, OccupancyGrid};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorParams {
    /// Full horizontal field of view, radians.
    pub fov: f64,
    pub range: f64,
    pub rays: usize,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self {
            fov: 90f64.to_radians(),
            range: 3.0,
            rays: 181,
        }
    }
}

impl SensorParams {
    pub fn ray_angles(&self, yaw: f64) -> impl Iterator<Item = f64> + '_ {
        let n = self.rays.max(1);
        let half = self.fov / 2.0;
        (0..n).map(move |i| {
            if n == 1 {
                yaw
            } else {
                yaw - half + self.fov * i as f64 / (n - 1) as f64
            }
        })
    }
}

/// Cells crossed by the segment from `from` along `angle` for `range`
/// meters, in order, starting with the cell containing `from`. Stops at the
/// grid edge.
pub fn trace_ray(grid: &OccupancyGrid, from: Point2, angle: f64, range: f64, mut visit: impl FnMut(usize, usize) -> bool) {
    let res = grid.resolution();
    let o = grid.origin();
    let (gx, gy) = ((from.x - o.x) / res, (from.y - o.y) / res);
    let (mut ix, mut iy) = (gx.floor() as i64, gy.floor() as i64);
    let (dx, dy) = (angle.cos(), angle.sin());
    let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
    let t_delta_x = if dx != 0.0 { res / dx.abs() } else { f64::INFINITY };
    let t_delta_y = if dy != 0.0 { res / dy.abs() } else { f64::INFINITY };
    let mut t_max_x = if dx > 0.0 {
        ((ix + 1) as f64 - gx) * res / dx
    } else if dx < 0.0 {
        (gx - ix as f64) * res / -dx
    } else {
        f64::INFINITY
    };
    let mut t_max_y = if dy > 0.0 {
        ((iy + 1) as f64 - gy) * res / dy
    } else if dy < 0.0 {
        (gy - iy as f64) * res / -dy
    } else {
        f64::INFINITY
    };
    let mut t = 0.0;
    while t <= range {
        if !grid.in_bounds(ix, iy) || !visit(ix as usize, iy as usize) {
            return;
        }
        if t_max_x < t_max_y {
            t = t_max_x;
            t_max_x += t_delta_x;
            ix += step_x;
        } else {
            t = t_max_y;
            t_max_y += t_delta_y;
            iy += step_y;
        }
    }
}

/// One scan of the ground truth into the estimate. Cells along each ray
/// become Free until the first truly occupied cell, which becomes Occupied.
/// Returns the indices of cells that were Unknown before.
pub fn sense(estimate: &mut OccupancyGrid, truth: &OccupancyGrid, sensor: &SensorParams, pos: Point2, yaw: f64) -> Vec<usize> {
    let mut fresh = Vec::new();
    for a in sensor.ray_angles(yaw) {
        trace_ray(truth, pos, a, sensor.range, |ix, iy| {
            let c = truth.get(ix, iy);
            if estimate.get(ix, iy) == Cell::Unknown {
                estimate.set(ix, iy, c);
                fresh.push(estimate.index(ix, iy));
            }
            c != Cell::Occupied
        });
    }
    fresh
}

/// What a pose would see on the current estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct View {
    /// Distinct cells reached by unoccluded rays.
    pub visible: u32,
    pub unknown: u32,
    /// Unknown cells 8-adjacent to a known Occupied cell.
    pub surface: u32,
}

/// Predicts a view on the estimate: rays pass Free and Unknown cells and
/// stop at known Occupied ones, which count as visible.
pub struct ViewEvaluator {
    stamp: Vec<u32>,
    epoch: u32,
}

impl ViewEvaluator {
    pub fn new(grid: &OccupancyGrid) -> Self {
        Self {
            stamp: vec![0; grid.len()],
            epoch: 0,
        }
    }

    pub fn evaluate(&mut self, estimate: &OccupancyGrid, sensor: &SensorParams, pos: Point2, yaw: f64) -> View {
        if self.stamp.len() != estimate.len() {
            self.stamp = vec![0; estimate.len()];
            self.epoch = 0;
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        let mut view = View::default();
        for a in sensor.ray_angles(yaw) {
            trace_ray(estimate, pos, a, sensor.range, |ix, iy| {
                let i = estimate.index(ix, iy);
                let c = estimate.get(ix, iy);
                if self.stamp[i] != epoch {
                    self.stamp[i] = epoch;
                    view.visible += 1;
                    if c == Cell::Unknown {
                        view.unknown += 1;
                        if touches_occupied(estimate, ix, iy) {
                            view.surface += 1;
                        }
                    }
                }
                c != Cell::Occupied
            });
        }
        view
    }
}

pub fn touches_occupied(grid: &OccupancyGrid, ix: usize, iy: usize) -> bool {
    for dy in -1i64..=1 {
        for dx in -1i64..=1 {
            if dx == 0 && dy == 0 {
                continue;
            }
            let (x, y) = (ix as i64 + dx, iy as i64 + dy);
            if grid.in_bounds(x, y) && grid.get(x as usize, y as usize) == Cell::Occupied {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Aabb;
    use std::f64::consts::FRAC_PI_2;

    fn walled_truth() -> OccupancyGrid {
        let mut g = OccupancyGrid::with_extent(8.0, 8.0, 0.1, Cell::Free);
        g.fill_rect(Aabb::new(Point2::new(3.0, 0.0), Point2::new(3.2, 8.0)), Cell::Occupied);
        g
    }

    #[test]
    fn ray_visits_cells_in_order() {
        let g = OccupancyGrid::with_extent(2.0, 2.0, 0.1, Cell::Free);
        let mut cells = Vec::new();
        trace_ray(&g, Point2::new(0.05, 0.05), 0.0, 0.5, |ix, iy| {
            cells.push((ix, iy));
            true
        });
        assert_eq!(cells, (0..=5).map(|i| (i, 0)).collect::<Vec<_>>());
    }

    #[test]
    fn occlusion_keeps_the_far_side_unknown() {
        let truth = walled_truth();
        let mut est = OccupancyGrid::with_extent(8.0, 8.0, 0.1, Cell::Unknown);
        let pos = Point2::new(2.0, 4.0);
        sense(&mut est, &truth, &SensorParams::default(), pos, 0.0);
        assert_eq!(est.at(Point2::new(2.5, 4.0)), Some(Cell::Free));
        assert_eq!(est.at(Point2::new(3.05, 4.0)), Some(Cell::Occupied));
        assert_eq!(est.at(Point2::new(3.15, 4.0)), Some(Cell::Unknown));
        assert_eq!(est.at(Point2::new(4.0, 4.0)), Some(Cell::Unknown));
        // behind the robot
        assert_eq!(est.at(Point2::new(1.0, 4.0)), Some(Cell::Unknown));
    }

    #[test]
    fn sensing_is_idempotent() {
        let truth = walled_truth();
        let mut est = OccupancyGrid::with_extent(8.0, 8.0, 0.1, Cell::Unknown);
        let s = SensorParams::default();
        let first = sense(&mut est, &truth, &s, Point2::new(2.0, 4.0), 0.3);
        let snapshot = est.clone();
        let second = sense(&mut est, &truth, &s, Point2::new(2.0, 4.0), 0.3);
        assert!(!first.is_empty());
        assert!(second.is_empty());
        assert_eq!(est, snapshot);
    }

    #[test]
    fn scan_fits_in_the_sector() {
        let truth = OccupancyGrid::with_extent(10.0, 10.0, 0.1, Cell::Free);
        let mut est = OccupancyGrid::with_extent(10.0, 10.0, 0.1, Cell::Unknown);
        let s = SensorParams::default();
        let seen = sense(&mut est, &truth, &s, Point2::new(5.0, 5.0), 0.7);
        // quarter disc of radius 3 m at 0.1 m cells, plus a band of cells
        // cut by the boundary
        let sector = (std::f64::consts::PI * 9.0 / 4.0) / 0.01;
        let band = (3.0 * 2.0 + 3.0 * FRAC_PI_2) / 0.1 * 2.0;
        assert!((seen.len() as f64) <= sector + band, "{} cells", seen.len());
        assert!(seen.len() as f64 > 0.8 * sector);
    }

    #[test]
    fn known_world_has_no_gain() {
        let est = walled_truth();
        let mut ev = ViewEvaluator::new(&est);
        let v = ev.evaluate(&est, &SensorParams::default(), Point2::new(2.0, 4.0), 0.0);
        assert!(v.visible > 0);
        assert_eq!((v.unknown, v.surface), (0, 0));
    }

    #[test]
    fn surface_needs_a_wall_end_in_view() {
        // known wall along y = 4 from x = 0 to 4; everything else beyond
        // x = 4 unknown
        let mut est = OccupancyGrid::with_extent(8.0, 8.0, 0.1, Cell::Free);
        est.fill_rect(Aabb::new(Point2::new(4.0, 0.0), Point2::new(8.0, 8.0)), Cell::Unknown);
        est.fill_rect(Aabb::new(Point2::new(0.0, 3.9), Point2::new(4.0, 4.1)), Cell::Occupied);
        let mut ev = ViewEvaluator::new(&est);
        let s = SensorParams::default();
        // looking at the wall end from below
        let toward = ev.evaluate(&est, &s, Point2::new(3.0, 2.5), 0.9);
        assert!(toward.surface > 0);
        // looking away, west
        let away = ev.evaluate(&est, &s, Point2::new(3.0, 2.5), std::f64::consts::PI);
        assert_eq!(away.surface, 0);
        for v in [toward, away] {
            assert!(v.surface <= v.unknown && v.unknown <= v.visible);
        }
    }
}
