//! Procedural worlds: ground-truth occupancy, collectible points, start pose.

use crate::geom::{Aabb, Point2};
use crate::grid::{Cell, OccupancyGrid};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const RESOLUTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    PointCollection,
    Exploration,
    Surface,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::PointCollection => "point_collection",
            Task::Exploration => "exploration",
            Task::Surface => "surface",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "point_collection" | "points" => Ok(Task::PointCollection),
            "exploration" => Ok(Task::Exploration),
            "surface" => Ok(Task::Surface),
            other => Err(format!("unknown task '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Template {
    /// A `cols x rows` block of rooms with one doorway in every shared wall
    /// and a few box obstacles.
    Rooms {
        width: f64,
        height: f64,
        cols: usize,
        rows: usize,
        door_width: f64,
        obstacles: usize,
    },
    /// Two rooms joined by an L-shaped corridor.
    LCorridor { corridor_width: f64 },
}

impl Default for Template {
    fn default() -> Self {
        Template::Rooms {
            width: 20.0,
            height: 14.0,
            cols: 3,
            rows: 2,
            door_width: 1.2,
            obstacles: 10,
        }
    }
}

fn default_points() -> usize {
    40
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSpec {
    #[serde(default)]
    pub template: Template,
    pub task: Task,
    pub seed: u64,
    #[serde(default = "default_points")]
    pub points: usize,
}

impl WorldSpec {
    pub fn new(task: Task, seed: u64) -> Self {
        Self {
            template: Template::default(),
            task,
            seed,
            points: default_points(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollectiblePoint {
    pub position: Point2,
    pub gain: f64,
}

/// Ground truth for one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub truth: OccupancyGrid,
    pub points: Vec<CollectiblePoint>,
    pub start: Point2,
    pub start_yaw: f64,
}

impl World {
    pub fn generate(spec: &WorldSpec) -> World {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let (truth, start) = match &spec.template {
            Template::Rooms {
                width,
                height,
                cols,
                rows,
                door_width,
                obstacles,
            } => rooms(*width, *height, *cols, *rows, *door_width, *obstacles, &mut rng),
            Template::LCorridor { corridor_width } => (l_corridor(*corridor_width), Point2::new(2.5, 2.5)),
        };
        let points = scatter_points(&truth, spec.points, start, &mut rng);
        World {
            truth,
            points,
            start,
            start_yaw: 0.0,
        }
    }

    pub fn total_point_gain(&self) -> f64 {
        self.points.iter().map(|p| p.gain).sum()
    }
}

fn carve(g: &mut OccupancyGrid, area: Aabb) {
    g.fill_rect(area, Cell::Free);
}

fn rooms(
    width: f64,
    height: f64,
    cols: usize,
    rows: usize,
    door: f64,
    obstacles: usize,
    rng: &mut ChaCha8Rng,
) -> (OccupancyGrid, Point2) {
    let wall = 0.2;
    let mut g = OccupancyGrid::with_extent(width, height, RESOLUTION, Cell::Occupied);
    let (cw, ch) = ((width - wall) / cols as f64, (height - wall) / rows as f64);
    let room = |c: usize, r: usize| {
        Aabb::new(
            Point2::new(wall + c as f64 * cw, wall + r as f64 * ch),
            Point2::new((c + 1) as f64 * cw, (r + 1) as f64 * ch),
        )
    };
    for r in 0..rows {
        for c in 0..cols {
            carve(&mut g, room(c, r));
        }
    }
    let mut doors = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let a = room(c, r);
            if c + 1 < cols {
                let y = rng.gen_range(a.min.y + 0.3..a.max.y - door - 0.3);
                let d = Aabb::new(Point2::new(a.max.x - 0.05, y), Point2::new(a.max.x + wall + 0.05, y + door));
                carve(&mut g, d);
                doors.push(d);
            }
            if r + 1 < rows {
                let x = rng.gen_range(a.min.x + 0.3..a.max.x - door - 0.3);
                let d = Aabb::new(Point2::new(x, a.max.y - 0.05), Point2::new(x + door, a.max.y + wall + 0.05));
                carve(&mut g, d);
                doors.push(d);
            }
        }
    }
    let start_room = room(0, 0);
    let start = Point2::new(start_room.min.x + 1.2, start_room.min.y + 1.2);
    let mut placed = 0;
    let mut tries = 0;
    while placed < obstacles && tries < 1000 {
        tries += 1;
        let (w, h) = (rng.gen_range(0.3..1.0), rng.gen_range(0.3..1.0));
        let c = Point2::new(rng.gen_range(0.0..width), rng.gen_range(0.0..height));
        let b = Aabb::new(c, c + Point2::new(w, h));
        let clear = Aabb::new(b.min - Point2::new(1.0, 1.0), b.max + Point2::new(1.0, 1.0));
        let near_door = doors.iter().any(|d| {
            let i = clear.intersect(d);
            i.width() > 0.0 && i.height() > 0.0
        });
        if near_door || clear.contains(start) {
            continue;
        }
        g.fill_rect(b, Cell::Occupied);
        placed += 1;
    }
    (g, start)
}

/// Room A `[0.5, 4.5]^2`, room B `[5.3, 9.3] x [3.8, 7.8]`, and an L
/// corridor of the given width leaving A to the right and turning up into B.
pub fn l_corridor(width: f64) -> OccupancyGrid {
    let mut g = OccupancyGrid::with_extent(10.0, 8.5, RESOLUTION, Cell::Occupied);
    carve(&mut g, Aabb::new(Point2::new(0.5, 0.5), Point2::new(4.5, 4.5)));
    carve(&mut g, Aabb::new(Point2::new(5.3, 3.8), Point2::new(9.3, 7.8)));
    let y0 = 2.6;
    let x1 = 5.3 + width;
    carve(&mut g, Aabb::new(Point2::new(4.5, y0), Point2::new(x1, y0 + width)));
    carve(&mut g, Aabb::new(Point2::new(5.3, y0), Point2::new(x1, 3.8)));
    g
}

fn scatter_points(truth: &OccupancyGrid, count: usize, start: Point2, rng: &mut ChaCha8Rng) -> Vec<CollectiblePoint> {
    let free: Vec<(usize, usize)> = (0..truth.height())
        .flat_map(|iy| (0..truth.width()).map(move |ix| (ix, iy)))
        .filter(|&(ix, iy)| truth.get(ix, iy) == Cell::Free)
        .collect();
    let mut out = Vec::with_capacity(count);
    let mut guard = 0;
    while out.len() < count && !free.is_empty() && guard < count * 100 {
        guard += 1;
        let (ix, iy) = free[rng.gen_range(0..free.len())];
        let c = truth.center(ix, iy);
        // nothing for free at the start
        if c.distance(start) < 1.5 {
            continue;
        }
        let gain = rng.gen_range(0..=10) as f64;
        out.push(CollectiblePoint { position: c, gain });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rrag::ClearanceField;

    #[test]
    fn generation_is_deterministic() {
        let spec = WorldSpec::new(Task::PointCollection, 5);
        assert_eq!(World::generate(&spec), World::generate(&spec));
        let other = WorldSpec::new(Task::PointCollection, 6);
        assert_ne!(World::generate(&spec).truth, World::generate(&other).truth);
    }

    #[test]
    fn start_is_free_and_points_valid() {
        for seed in 0..10 {
            let w = World::generate(&WorldSpec::new(Task::PointCollection, seed));
            let f = ClearanceField::new(&w.truth, 0.3, 2.0);
            assert!(f.clearance(w.start) > 0.5, "seed {seed}");
            assert_eq!(w.points.len(), 40);
            for p in &w.points {
                assert!((0.0..=10.0).contains(&p.gain));
                assert_eq!(w.truth.at(p.position), Some(Cell::Free));
            }
        }
    }

    #[test]
    fn spec_json_round_trip() {
        let mut spec = WorldSpec::new(Task::Surface, 3);
        spec.template = Template::LCorridor { corridor_width: 0.7 };
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"kind\":\"l_corridor\""));
        assert_eq!(serde_json::from_str::<WorldSpec>(&text).unwrap(), spec);
    }

    #[test]
    fn corridor_is_narrow() {
        let g = l_corridor(0.7);
        let f = ClearanceField::new(&g, 0.3, 2.0);
        // only a 0.1 m band of centers fits the corridor
        assert!(f.is_free(Point2::new(5.0, 2.95)));
        assert!(!f.is_free(Point2::new(5.0, 2.85)));
        assert!(!f.is_free(Point2::new(5.0, 3.05)));
    }
}
