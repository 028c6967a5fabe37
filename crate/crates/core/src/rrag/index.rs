use crate::geom::Point2;
use std::collections::HashMap;

/// Nearest-neighbor index over planar points: a uniform bucket grid.
#[derive(Debug, Clone)]
pub struct PointIndex {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<(usize, Point2)>>,
    lo: (i64, i64),
    hi: (i64, i64),
    len: usize,
}

impl PointIndex {
    /// `cell` should be about the usual query radius.
    pub fn new(cell: f64) -> Self {
        assert!(cell > 0.0, "bucket size must be positive");
        Self {
            cell,
            buckets: HashMap::new(),
            lo: (i64::MAX, i64::MAX),
            hi: (i64::MIN, i64::MIN),
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn key(&self, p: Point2) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    pub fn insert(&mut self, p: Point2, id: usize) {
        let k = self.key(p);
        self.lo = (self.lo.0.min(k.0), self.lo.1.min(k.1));
        self.hi = (self.hi.0.max(k.0), self.hi.1.max(k.1));
        self.buckets.entry(k).or_default().push((id, p));
        self.len += 1;
    }

    pub fn remove(&mut self, p: Point2, id: usize) {
        let k = self.key(p);
        if let Some(b) = self.buckets.get_mut(&k) {
            let before = b.len();
            b.retain(|&(i, _)| i != id);
            self.len -= before - b.len();
        }
    }

    /// Closest id and its distance; ties go to the lower id.
    pub fn nearest(&self, p: Point2) -> Option<(usize, f64)> {
        if self.len == 0 {
            return None;
        }
        let (cx, cy) = self.key(p);
        let reach = (cx - self.lo.0)
            .abs()
            .max((self.hi.0 - cx).abs())
            .max((cy - self.lo.1).abs())
            .max((self.hi.1 - cy).abs());
        let mut best: Option<(f64, usize)> = None;
        for r in 0..=reach {
            for (kx, ky) in ring(cx, cy, r) {
                if let Some(b) = self.buckets.get(&(kx, ky)) {
                    for &(id, q) in b {
                        let d = q.distance_sq(p);
                        if best.is_none_or(|(bd, bi)| d < bd || (d == bd && id < bi)) {
                            best = Some((d, id));
                        }
                    }
                }
            }
            // anything in ring r + 1 is at least r cells away
            if let Some((d, _)) = best {
                let bound = r as f64 * self.cell;
                if d < bound * bound {
                    break;
                }
            }
        }
        best.map(|(d, id)| (id, d.sqrt()))
    }

    /// Ids within `radius` (inclusive), ascending.
    pub fn within(&self, p: Point2, radius: f64) -> Vec<usize> {
        let r2 = radius * radius;
        let lo = self.key(Point2::new(p.x - radius, p.y - radius));
        let hi = self.key(Point2::new(p.x + radius, p.y + radius));
        let mut ids = Vec::new();
        for kx in lo.0..=hi.0 {
            for ky in lo.1..=hi.1 {
                if let Some(b) = self.buckets.get(&(kx, ky)) {
                    ids.extend(b.iter().filter(|(_, q)| q.distance_sq(p) <= r2).map(|&(i, _)| i));
                }
            }
        }
        ids.sort_unstable();
        ids
    }
}

fn ring(cx: i64, cy: i64, r: i64) -> Vec<(i64, i64)> {
    if r == 0 {
        return vec![(cx, cy)];
    }
    let mut out = Vec::with_capacity(8 * r as usize);
    for dx in -r..=r {
        out.push((cx + dx, cy - r));
        out.push((cx + dx, cy + r));
    }
    for dy in -r + 1..r {
        out.push((cx - r, cy + dy));
        out.push((cx + r, cy + dy));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn matches_linear_scan(
            pts in proptest::collection::vec((-20.0f64..20.0, -20.0f64..20.0), 1..60),
            q in (-30.0f64..30.0, -30.0f64..30.0),
            r in 0.0f64..8.0,
        ) {
            let mut idx = PointIndex::new(1.5);
            let pts: Vec<Point2> = pts.into_iter().map(|(x, y)| Point2::new(x, y)).collect();
            for (i, &p) in pts.iter().enumerate() {
                idx.insert(p, i);
            }
            // drop every third point again
            for (i, &p) in pts.iter().enumerate().filter(|(i, _)| i % 3 == 2) {
                idx.remove(p, i);
            }
            let live: Vec<usize> = (0..pts.len()).filter(|i| i % 3 != 2).collect();
            let q = Point2::new(q.0, q.1);
            let brute = live.iter().map(|&i| (pts[i].distance_sq(q), i)).min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            prop_assert_eq!(idx.nearest(q).map(|(i, _)| i), brute.map(|(_, i)| i));
            let within: Vec<usize> = live.iter().copied().filter(|&i| pts[i].distance_sq(q) <= r * r).collect();
            prop_assert_eq!(idx.within(q, r), within);
        }
    }

    #[test]
    fn duplicates_are_fine() {
        let mut idx = PointIndex::new(1.0);
        for i in 0..100 {
            idx.insert(Point2::new(1.0, 1.0), i);
        }
        assert_eq!(idx.nearest(Point2::new(0.0, 0.0)).unwrap().0, 0);
        assert_eq!(idx.within(Point2::new(1.0, 1.0), 0.0).len(), 100);
    }
}
