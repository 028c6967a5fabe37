//! Clearance of a disc robot against blocked grid cells.

use crate::geom::Point2;
use crate::grid::{Cell, OccupancyGrid};
use std::f64::consts::SQRT_2;

/// Distance from a disc robot to the nearest blocked cell, derived from an
/// occupancy grid snapshot. Unknown cells and everything outside the grid
/// are blocked.
#[derive(Debug, Clone)]
pub struct ClearanceField {
    width: usize,
    height: usize,
    origin: Point2,
    resolution: f64,
    blocked: Vec<bool>,
    edt: Vec<f64>,
    robot_radius: f64,
    horizon: f64,
}

impl ClearanceField {
    /// `horizon` bounds the exact search: clearances beyond it are reported
    /// as some value that is still `> horizon` and never above the truth.
    pub fn new(grid: &OccupancyGrid, robot_radius: f64, horizon: f64) -> Self {
        let blocked = grid.cells().iter().map(|&c| c != Cell::Free).collect();
        Self {
            width: grid.width(),
            height: grid.height(),
            origin: grid.origin(),
            resolution: grid.resolution(),
            blocked,
            edt: grid.distance_transform(|c| c != Cell::Free),
            robot_radius,
            horizon,
        }
    }

    pub fn robot_radius(&self) -> f64 {
        self.robot_radius
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    fn coords(&self, p: Point2) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / self.resolution).floor() as i64,
            ((p.y - self.origin.y) / self.resolution).floor() as i64,
        )
    }

    fn is_blocked(&self, ix: i64, iy: i64) -> bool {
        if ix < 0 || iy < 0 || ix as usize >= self.width || iy as usize >= self.height {
            return true;
        }
        self.blocked[iy as usize * self.width + ix as usize]
    }

    fn square_distance(&self, p: Point2, ix: i64, iy: i64) -> f64 {
        let x0 = self.origin.x + ix as f64 * self.resolution;
        let y0 = self.origin.y + iy as f64 * self.resolution;
        let dx = (x0 - p.x).max(0.0).max(p.x - (x0 + self.resolution));
        let dy = (y0 - p.y).max(0.0).max(p.y - (y0 + self.resolution));
        dx.hypot(dy)
    }

    fn boundary_distance(&self, p: Point2) -> f64 {
        let x1 = self.origin.x + self.width as f64 * self.resolution;
        let y1 = self.origin.y + self.height as f64 * self.resolution;
        (p.x - self.origin.x)
            .min(x1 - p.x)
            .min(p.y - self.origin.y)
            .min(y1 - p.y)
            .max(0.0)
    }

    /// Exact distance from `p` to the blocked set, searched within `limit`.
    /// Returns a lower bound greater than `limit` when nothing is closer.
    fn obstacle_distance_within(&self, p: Point2, limit: f64) -> f64 {
        let (cx, cy) = self.coords(p);
        if self.is_blocked(cx, cy) {
            return 0.0;
        }
        // p sits within res/sqrt2 of its cell center, and every blocked square
        // within res/sqrt2 of its own center
        let d_center = self.edt[cy as usize * self.width + cx as usize];
        let lower = (d_center - SQRT_2 * self.resolution).max(0.0);
        if lower > limit {
            return lower;
        }
        let upper = d_center + SQRT_2 * self.resolution;
        let reach = upper.min(limit) + 2.0 * self.resolution;
        let mut best = self.boundary_distance(p);
        let span = (reach / self.resolution).ceil() as i64;
        for iy in (cy - span).max(0)..=(cy + span).min(self.height as i64 - 1) {
            for ix in (cx - span).max(0)..=(cx + span).min(self.width as i64 - 1) {
                if self.blocked[iy as usize * self.width + ix as usize] {
                    let d = self.square_distance(p, ix, iy);
                    if d < best {
                        best = d;
                    }
                }
            }
        }
        if best > limit {
            // nothing within the limit; anything beyond was not searched
            lower.max(limit.next_up())
        } else {
            best
        }
    }

    /// Distance to the nearest blocked point, exact up to the horizon.
    pub fn obstacle_distance(&self, p: Point2) -> f64 {
        self.obstacle_distance_within(p, self.horizon + self.robot_radius)
    }

    /// Signed clearance `xi(p)`: obstacle distance minus the robot radius.
    pub fn clearance(&self, p: Point2) -> f64 {
        self.obstacle_distance(p) - self.robot_radius
    }

    /// `xi(p) > 0`, with a cheap exit when the transform already decides it.
    pub fn is_free(&self, p: Point2) -> bool {
        self.obstacle_distance_within(p, self.robot_radius) > self.robot_radius
    }

    /// Straight segment check by sampling every half cell.
    pub fn segment_free_dense(&self, a: Point2, b: Point2) -> bool {
        let len = a.distance(b);
        let step = self.resolution / 2.0;
        let n = (len / step).ceil().max(1.0) as usize;
        (0..=n).all(|i| self.is_free(a.lerp(b, i as f64 / n as f64)))
    }

    /// Cheap clearance lower bound from the transform alone.
    pub fn clearance_lower_bound(&self, p: Point2) -> f64 {
        let (cx, cy) = self.coords(p);
        if self.is_blocked(cx, cy) {
            return -self.robot_radius;
        }
        let d = self.edt[cy as usize * self.width + cx as usize];
        (d - SQRT_2 * self.resolution).max(0.0) - self.robot_radius
    }

    /// Same verdict as `segment_free_dense`, skipping samples that a
    /// clearance bound already covers.
    pub fn segment_free(&self, a: Point2, b: Point2) -> bool {
        let len = a.distance(b);
        let step = self.resolution / 2.0;
        let n = (len / step).ceil().max(1.0) as usize;
        let mut i = 0;
        while i <= n {
            let p = a.lerp(b, i as f64 / n as f64);
            let lb = self.clearance_lower_bound(p);
            if lb > 0.0 {
                // every sample strictly closer than lb is free
                let skip = (lb / (len / n as f64)).ceil().min((n + 1) as f64) as usize;
                i += skip.max(1);
                continue;
            }
            if !self.is_free(p) {
                return false;
            }
            i += 1;
        }
        true
    }

    /// Adjacency shortcut with eta = 1: a translating disc sweeps exactly
    /// the segment, so `|a - b| < max(xi(a), xi(b))` proves the segment free.
    pub fn shortcut(&self, a: Point2, xi_a: f64, b: Point2, xi_b: f64) -> bool {
        a.distance(b) < xi_a.max(xi_b)
    }

    /// Straight-line connection test with the shortcut first.
    pub fn edge_free(&self, a: Point2, xi_a: f64, b: Point2, xi_b: f64) -> bool {
        self.shortcut(a, xi_a, b, xi_b) || self.segment_free(a, b)
    }

    pub fn polyline_free(&self, points: &[Point2]) -> bool {
        points.windows(2).all(|w| self.segment_free(w[0], w[1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn room() -> OccupancyGrid {
        let mut g = OccupancyGrid::with_extent(10.0, 10.0, 0.1, Cell::Free);
        // vertical wall x in [5, 5.2), y in [0, 6)
        for iy in 0..60 {
            g.set(50, iy, Cell::Occupied);
            g.set(51, iy, Cell::Occupied);
        }
        g
    }

    fn brute(g: &OccupancyGrid, p: Point2) -> f64 {
        let mut best = p.x.min(10.0 - p.x).min(p.y).min(10.0 - p.y);
        for iy in 0..g.height() {
            for ix in 0..g.width() {
                if g.get(ix, iy) != Cell::Free {
                    best = best.min(g.distance_to_cell(p, ix as i64, iy as i64));
                }
            }
        }
        best
    }

    #[test]
    fn exact_within_horizon() {
        let g = room();
        let f = ClearanceField::new(&g, 0.3, 20.0);
        for p in [
            Point2::new(4.55, 3.0),
            Point2::new(2.0, 7.77),
            Point2::new(5.1, 6.5),
            Point2::new(8.3, 1.1),
            Point2::new(0.31, 0.31),
        ] {
            assert!((f.obstacle_distance(p) - brute(&g, p)).abs() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn horizon_gives_lower_bound() {
        let g = room();
        let f = ClearanceField::new(&g, 0.3, 0.5);
        let p = Point2::new(2.5, 5.0);
        let d = f.obstacle_distance(p);
        assert!(d > 0.8 && d <= brute(&g, p) + 1e-12);
    }

    #[test]
    fn shortcut_fires_without_interpolation() {
        let g = OccupancyGrid::with_extent(30.0, 30.0, 0.1, Cell::Free);
        let f = ClearanceField::new(&g, 0.3, 20.0);
        let a = Point2::new(15.0, 15.0);
        let xi = f.clearance(a);
        assert!((xi - 14.7).abs() < 1e-9);
        assert!(f.shortcut(a, 10.0, Point2::new(17.0, 15.0), 0.0));
    }

    #[test]
    fn segment_through_wall_rejected() {
        let g = room();
        let f = ClearanceField::new(&g, 0.3, 3.0);
        let a = Point2::new(4.0, 3.0);
        let b = Point2::new(6.2, 3.0);
        assert!(f.is_free(a) && f.is_free(b));
        assert!(!f.edge_free(a, f.clearance(a), b, f.clearance(b)));
        let c = Point2::new(4.0, 8.0);
        assert!(f.edge_free(c, f.clearance(c), Point2::new(6.2, 8.0), f.clearance(Point2::new(6.2, 8.0))));
    }

    #[test]
    fn unknown_counts_as_blocked() {
        let mut g = OccupancyGrid::with_extent(4.0, 4.0, 0.1, Cell::Unknown);
        g.fill_disc(Point2::new(2.0, 2.0), 1.0, Cell::Free);
        let f = ClearanceField::new(&g, 0.3, 3.0);
        assert!(f.is_free(Point2::new(2.0, 2.0)));
        assert!(!f.is_free(Point2::new(2.9, 2.0)));
    }
}
