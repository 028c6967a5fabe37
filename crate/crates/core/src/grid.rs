//! Occupancy grids and the Euclidean distance transform.

use crate::geom::{Aabb, Point2};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Cell {
    Unknown = 0,
    Free = 1,
    Occupied = 2,
}

/// Row-major grid of square cells; cell `(ix, iy)` covers
/// `origin + [ix, ix+1) * res` by `origin + [iy, iy+1) * res`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    origin: Point2,
    resolution: f64,
    width: usize,
    height: usize,
    cells: Vec<Cell>,
}

impl OccupancyGrid {
    pub fn new(origin: Point2, resolution: f64, width: usize, height: usize, fill: Cell) -> Self {
        assert!(resolution > 0.0, "resolution must be positive");
        Self {
            origin,
            resolution,
            width,
            height,
            cells: vec![fill; width * height],
        }
    }

    /// Grid covering `[0, w] x [0, h]` meters.
    pub fn with_extent(w: f64, h: f64, resolution: f64, fill: Cell) -> Self {
        let nx = (w / resolution).round() as usize;
        let ny = (h / resolution).round() as usize;
        Self::new(Point2::default(), resolution, nx, ny, fill)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::new(
            self.origin,
            Point2::new(
                self.origin.x + self.width as f64 * self.resolution,
                self.origin.y + self.height as f64 * self.resolution,
            ),
        )
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.width + ix
    }

    #[inline]
    pub fn in_bounds(&self, ix: i64, iy: i64) -> bool {
        ix >= 0 && iy >= 0 && (ix as usize) < self.width && (iy as usize) < self.height
    }

    /// Integer coordinates of the cell containing `p`, possibly out of range.
    #[inline]
    pub fn cell_coords(&self, p: Point2) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / self.resolution).floor() as i64,
            ((p.y - self.origin.y) / self.resolution).floor() as i64,
        )
    }

    pub fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        let (ix, iy) = self.cell_coords(p);
        self.in_bounds(ix, iy).then_some((ix as usize, iy as usize))
    }

    pub fn center(&self, ix: usize, iy: usize) -> Point2 {
        Point2::new(
            self.origin.x + (ix as f64 + 0.5) * self.resolution,
            self.origin.y + (iy as f64 + 0.5) * self.resolution,
        )
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> Cell {
        self.cells[self.index(ix, iy)]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iy: usize, cell: Cell) {
        let i = self.index(ix, iy);
        self.cells[i] = cell;
    }

    /// Cell under `p`; `None` outside the grid.
    pub fn at(&self, p: Point2) -> Option<Cell> {
        self.cell_of(p).map(|(ix, iy)| self.get(ix, iy))
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn count(&self, cell: Cell) -> usize {
        self.cells.iter().filter(|&&c| c == cell).count()
    }

    /// Sets every cell whose center lies in `area`.
    pub fn fill_rect(&mut self, area: Aabb, cell: Cell) {
        for iy in 0..self.height {
            for ix in 0..self.width {
                if area.contains(self.center(ix, iy)) {
                    self.set(ix, iy, cell);
                }
            }
        }
    }

    /// Sets every cell whose center lies within `radius` of `c`.
    pub fn fill_disc(&mut self, c: Point2, radius: f64, cell: Cell) {
        let r2 = radius * radius;
        for iy in 0..self.height {
            for ix in 0..self.width {
                if self.center(ix, iy).distance_sq(c) <= r2 {
                    self.set(ix, iy, cell);
                }
            }
        }
    }

    /// Euclidean distance from point `p` to the square of cell `(ix, iy)`.
    pub fn distance_to_cell(&self, p: Point2, ix: i64, iy: i64) -> f64 {
        let x0 = self.origin.x + ix as f64 * self.resolution;
        let y0 = self.origin.y + iy as f64 * self.resolution;
        let dx = (x0 - p.x).max(0.0).max(p.x - (x0 + self.resolution));
        let dy = (y0 - p.y).max(0.0).max(p.y - (y0 + self.resolution));
        dx.hypot(dy)
    }

    /// Plain PGM (P2): free 255, occupied 0, unknown 128; top row is max y.
    pub fn to_pgm(&self) -> String {
        let mut out = format!("P2\n{} {}\n255\n", self.width, self.height);
        for iy in (0..self.height).rev() {
            let row: Vec<&str> = (0..self.width)
                .map(|ix| match self.get(ix, iy) {
                    Cell::Free => "255",
                    Cell::Occupied => "0",
                    Cell::Unknown => "128",
                })
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    /// Distance in meters from every cell center to the nearest blocked
    /// cell center, with everything outside the grid counting as blocked.
    pub fn distance_transform(&self, blocked: impl Fn(Cell) -> bool) -> Vec<f64> {
        let (w, h) = (self.width + 2, self.height + 2);
        let mut f = vec![f64::INFINITY; w * h];
        for y in 0..h {
            for x in 0..w {
                let inside = x >= 1 && y >= 1 && x <= self.width && y <= self.height;
                if !inside || blocked(self.get(x - 1, y - 1)) {
                    f[y * w + x] = 0.0;
                }
            }
        }
        edt_2d(&mut f, w, h);
        let mut out = Vec::with_capacity(self.cells.len());
        for iy in 0..self.height {
            for ix in 0..self.width {
                out.push(f[(iy + 1) * w + ix + 1].sqrt() * self.resolution);
            }
        }
        out
    }
}

/// In-place squared EDT over a `w x h` array of 0 / inf seeds.
fn edt_2d(f: &mut [f64], w: usize, h: usize) {
    let n = w.max(h);
    let mut line = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    for x in 0..w {
        for y in 0..h {
            line[y] = f[y * w + x];
        }
        edt_1d(&line[..h], &mut out[..h], &mut v, &mut z);
        for y in 0..h {
            f[y * w + x] = out[y];
        }
    }
    for y in 0..h {
        line[..w].copy_from_slice(&f[y * w..(y + 1) * w]);
        edt_1d(&line[..w], &mut out[..w], &mut v, &mut z);
        f[y * w..(y + 1) * w].copy_from_slice(&out[..w]);
    }
}

// lower envelope of parabolas (Felzenszwalb & Huttenlocher)
fn edt_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let seeds: Vec<usize> = (0..n).filter(|&q| f[q].is_finite()).collect();
    if seeds.is_empty() {
        d.fill(f64::INFINITY);
        return;
    }
    let mut k = 0usize;
    v[0] = seeds[0];
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for &q in &seeds[1..] {
        let fq = f[q] + (q * q) as f64;
        let intersect = |p: usize| (fq - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
        let mut s = intersect(v[k]);
        // z[0] is -inf so this stops at k == 0
        while s <= z[k] {
            k -= 1;
            s = intersect(v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, dq) in d.iter_mut().enumerate().take(n) {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let diff = q as f64 - p as f64;
        *dq = diff * diff + f[p];
    }
}
