//! Synthetic lattice graphs and radius-limited online perception.

use crate::geom::Point2;
use crate::graph::{PlanGraph, VertexId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("extent must be positive, got {0}")]
    BadExtent(f64),
    #[error("lattice spacing must be positive and at most the extent, got {0}")]
    BadSpacing(f64),
    #[error("cluster count must be at least 1")]
    NoClusters,
    #[error("cluster radius {radius} does not fit inside a {extent} m square")]
    ClusterTooLarge { radius: f64, extent: f64 },
    #[error("gain range [{0}, {1}] is not a nonnegative interval")]
    BadGainRange(f64, f64),
    #[error("perception radius must be nonnegative and finite, got {0}")]
    BadRadius(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainMode {
    Scattered,
    Clustered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Connectivity {
    Four,
    Eight,
}

fn default_gain_range() -> (f64, f64) {
    (0.0, 100.0)
}

fn default_cluster_count() -> usize {
    8
}

fn default_spacing() -> f64 {
    1.0
}

fn default_connectivity() -> Connectivity {
    Connectivity::Eight
}

/// Square lattice with random vertex gains. The start vertex `v0` sits at
/// the origin and ids run row-major: `id = row * side + col`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridGraphSpec {
    /// Side length in meters.
    pub extent: f64,
    pub gain_mode: GainMode,
    pub seed: u64,
    #[serde(default = "default_gain_range")]
    pub gain_range: (f64, f64),
    #[serde(default = "default_cluster_count")]
    pub cluster_count: usize,
    /// Defaults to a tenth of the extent.
    #[serde(default)]
    pub cluster_radius: Option<f64>,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    #[serde(default = "default_connectivity")]
    pub connectivity: Connectivity,
}

impl GridGraphSpec {
    pub fn new(extent: f64, gain_mode: GainMode, seed: u64) -> Self {
        Self {
            extent,
            gain_mode,
            seed,
            gain_range: default_gain_range(),
            cluster_count: default_cluster_count(),
            cluster_radius: None,
            spacing: default_spacing(),
            connectivity: default_connectivity(),
        }
    }

    pub fn side(&self) -> usize {
        (self.extent / self.spacing + 1e-9).floor() as usize + 1
    }

    pub fn cluster_radius(&self) -> f64 {
        self.cluster_radius.unwrap_or(self.extent / 10.0)
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if !(self.extent > 0.0 && self.extent.is_finite()) {
            return Err(EnvError::BadExtent(self.extent));
        }
        if !(self.spacing > 0.0 && self.spacing <= self.extent) {
            return Err(EnvError::BadSpacing(self.spacing));
        }
        let (lo, hi) = self.gain_range;
        if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
            return Err(EnvError::BadGainRange(lo, hi));
        }
        if self.gain_mode == GainMode::Clustered {
            if self.cluster_count == 0 {
                return Err(EnvError::NoClusters);
            }
            let r = self.cluster_radius();
            if !(r > 0.0 && 2.0 * r <= self.extent) {
                return Err(EnvError::ClusterTooLarge {
                    radius: r,
                    extent: self.extent,
                });
            }
        }
        Ok(())
    }
}

/// Disc centers used by a clustered spec, in the order they were drawn.
pub fn cluster_centers(spec: &GridGraphSpec, rng: &mut ChaCha8Rng) -> Vec<Point2> {
    let r = spec.cluster_radius();
    let mut out = Vec::with_capacity(spec.cluster_count);
    while out.len() < spec.cluster_count {
        let c = Point2::new(rng.gen_range(0.0..=spec.extent), rng.gen_range(0.0..=spec.extent));
        if c.x >= r && c.y >= r && c.x <= spec.extent - r && c.y <= spec.extent - r {
            out.push(c);
        }
    }
    out
}

pub fn generate_grid(spec: &GridGraphSpec) -> Result<PlanGraph, EnvError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let side = spec.side();
    let (lo, hi) = spec.gain_range;
    let draw = |rng: &mut ChaCha8Rng| if hi > lo { rng.gen_range(lo..=hi) } else { lo };

    let centers = match spec.gain_mode {
        GainMode::Clustered => cluster_centers(spec, &mut rng),
        GainMode::Scattered => Vec::new(),
    };
    let r = spec.cluster_radius();

    let mut g = PlanGraph::with_capacity(side * side);
    for row in 0..side {
        for col in 0..side {
            let p = Point2::new(col as f64 * spec.spacing, row as f64 * spec.spacing);
            let gain = match spec.gain_mode {
                GainMode::Scattered => draw(&mut rng),
                GainMode::Clustered => {
                    if centers.iter().any(|c| c.distance(p) <= r) {
                        draw(&mut rng)
                    } else {
                        0.0
                    }
                }
            };
            g.add_vertex(p, gain, None).expect("generated gains are valid");
        }
    }

    let id = |row: usize, col: usize| VertexId::from(row * side + col);
    let mut offsets: Vec<(isize, isize, f64)> = vec![(0, 1, 1.0), (1, 0, 1.0)];
    if spec.connectivity == Connectivity::Eight {
        offsets.push((1, 1, SQRT_2));
        offsets.push((1, -1, SQRT_2));
    }
    for row in 0..side {
        for col in 0..side {
            for &(dr, dc, unit) in &offsets {
                let (r2, c2) = (row as isize + dr, col as isize + dc);
                if r2 < 0 || c2 < 0 || r2 >= side as isize || c2 >= side as isize {
                    continue;
                }
                g.add_symmetric_edge(id(row, col), id(r2 as usize, c2 as usize), unit * spec.spacing)
                    .expect("lattice edges are unique");
            }
        }
    }
    Ok(g)
}

pub const DEFAULT_FRONTIER_FRACTION: f64 = 0.8;

/// What the robot knows of a hidden graph after observing from each vertex
/// it has visited.
#[derive(Debug, Clone)]
pub struct PerceptionState<'g> {
    truth: &'g PlanGraph,
    radius: f64,
    frontier_fraction: f64,
    discovered: Vec<bool>,
    visited: Vec<VertexId>,
}

impl<'g> PerceptionState<'g> {
    pub fn new(truth: &'g PlanGraph, radius: f64, frontier_fraction: f64) -> Result<Self, EnvError> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(EnvError::BadRadius(radius));
        }
        Ok(Self {
            truth,
            radius,
            frontier_fraction,
            discovered: vec![false; truth.vertex_count()],
            visited: Vec::new(),
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Reveals every vertex within the perception radius of `at`.
    pub fn observe(&mut self, at: VertexId) {
        let here = self.truth.position(at);
        let r2 = self.radius * self.radius;
        for v in self.truth.vertex_ids() {
            if !self.discovered[v.index()] && self.truth.position(v).distance_sq(here) <= r2 {
                self.discovered[v.index()] = true;
            }
        }
        self.discovered[at.index()] = true;
        self.visited.push(at);
    }

    pub fn is_discovered(&self, v: VertexId) -> bool {
        self.discovered[v.index()]
    }

    pub fn discovered_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.truth.vertex_ids().filter(|v| self.discovered[v.index()])
    }

    pub fn discovered_count(&self) -> usize {
        self.discovered.iter().filter(|&&d| d).count()
    }

    pub fn visited(&self) -> &[VertexId] {
        &self.visited
    }

    /// Discovered vertices far from everything visited that still border
    /// undiscovered territory.
    ///
    /// The second condition keeps a fully revealed graph frontier-free.
    pub fn frontier_vertices(&self) -> Vec<VertexId> {
        let limit = self.frontier_fraction * self.radius;
        let visited: Vec<Point2> = self.visited.iter().map(|&v| self.truth.position(v)).collect();
        self.discovered_vertices()
            .filter(|&v| {
                let p = self.truth.position(v);
                visited.iter().all(|q| q.distance(p) > limit)
                    && self
                        .truth
                        .out_edges(v)
                        .iter()
                        .any(|e| !self.discovered[e.target.index()])
            })
            .collect()
    }

    /// The induced subgraph on discovered vertices with frontier flags set.
    ///
    /// Local ids follow true ids in increasing order. `gains` overrides the
    /// true gains (the executor zeroes collected ones).
    pub fn discovered_subgraph(&self, gains: &[f64]) -> DiscoveredGraph {
        let mut local = vec![None; self.truth.vertex_count()];
        let mut to_true = Vec::new();
        let mut graph = PlanGraph::with_capacity(self.discovered_count());
        for v in self.discovered_vertices() {
            let vx = self.truth.vertex(v);
            let id = graph
                .add_vertex(vx.position, gains[v.index()], vx.yaw)
                .expect("gains come from a valid graph");
            local[v.index()] = Some(id);
            to_true.push(v);
        }
        for &v in &to_true {
            let a = local[v.index()].unwrap();
            for e in self.truth.out_edges(v) {
                if let Some(b) = local[e.target.index()] {
                    graph.add_edge(a, b, e.cost).expect("restriction of a valid graph");
                }
            }
        }
        for f in self.frontier_vertices() {
            graph.set_frontier(local[f.index()].unwrap(), true);
        }
        DiscoveredGraph { graph, to_true, local }
    }
}

/// A discovered subgraph and its id mapping back to the true graph.
#[derive(Debug, Clone)]
pub struct DiscoveredGraph {
    pub graph: PlanGraph,
    pub to_true: Vec<VertexId>,
    local: Vec<Option<VertexId>>,
}

impl DiscoveredGraph {
    pub fn local_id(&self, v: VertexId) -> Option<VertexId> {
        self.local[v.index()]
    }

    pub fn true_id(&self, local: VertexId) -> VertexId {
        self.to_true[local.index()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_sizes_and_costs() {
        let g = generate_grid(&GridGraphSpec::new(25.0, GainMode::Scattered, 1)).unwrap();
        assert_eq!(g.vertex_count(), 676);
        assert_eq!(g.position(VertexId(0)), Point2::new(0.0, 0.0));
        assert_eq!(g.edge_cost(VertexId(0), VertexId(1)), Some(1.0));
        assert_eq!(g.edge_cost(VertexId(0), VertexId(26)), Some(1.0));
        assert_eq!(g.edge_cost(VertexId(0), VertexId(27)), Some(SQRT_2));
        assert!(g.is_symmetric());
        // 2 * (2 n (n-1) + 2 (n-1)^2) directed edges
        assert_eq!(g.edge_count(), 2 * (2 * 26 * 25 + 2 * 25 * 25));
        assert!(g.vertex_ids().all(|v| (0.0..=100.0).contains(&g.gain(v))));

        let big = generate_grid(&GridGraphSpec::new(50.0, GainMode::Clustered, 3)).unwrap();
        assert_eq!(big.vertex_count(), 51 * 51);
    }

    #[test]
    fn same_seed_same_bytes() {
        for mode in [GainMode::Scattered, GainMode::Clustered] {
            let a = generate_grid(&GridGraphSpec::new(25.0, mode, 9)).unwrap().to_json();
            let b = generate_grid(&GridGraphSpec::new(25.0, mode, 9)).unwrap().to_json();
            let c = generate_grid(&GridGraphSpec::new(25.0, mode, 10)).unwrap().to_json();
            assert_eq!(a, b);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn clusters_stay_inside_and_carry_all_gain() {
        let spec = GridGraphSpec::new(25.0, GainMode::Clustered, 4);
        let g = generate_grid(&spec).unwrap();
        let centers = cluster_centers(&spec, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(centers.len(), 8);
        for c in &centers {
            assert!(c.x >= 2.5 && c.x <= 22.5 && c.y >= 2.5 && c.y <= 22.5);
        }
        for v in g.vertex_ids() {
            if g.gain(v) > 0.0 {
                assert!(centers.iter().any(|c| c.distance(g.position(v)) <= 2.5));
            }
        }
    }

    #[test]
    fn perception_radius_examples() {
        let g = generate_grid(&GridGraphSpec::new(25.0, GainMode::Scattered, 1)).unwrap();
        let mut s = PerceptionState::new(&g, 0.0, DEFAULT_FRONTIER_FRACTION).unwrap();
        s.observe(VertexId(0));
        assert_eq!(s.discovered_count(), 1);

        let center = VertexId::from(12 * 26 + 12);
        let mut s = PerceptionState::new(&g, 5.0, DEFAULT_FRONTIER_FRACTION).unwrap();
        s.observe(center);
        assert_eq!(s.discovered_count(), 81);

        let mut s = PerceptionState::new(&g, 25.0 * SQRT_2, DEFAULT_FRONTIER_FRACTION).unwrap();
        s.observe(VertexId(0));
        assert_eq!(s.discovered_count(), 676);
        assert!(s.frontier_vertices().is_empty());
    }

    #[test]
    fn first_observation_frontiers_are_in_the_outer_ring() {
        let g = generate_grid(&GridGraphSpec::new(25.0, GainMode::Scattered, 1)).unwrap();
        let mut s = PerceptionState::new(&g, 5.0, DEFAULT_FRONTIER_FRACTION).unwrap();
        let center = VertexId::from(12 * 26 + 12);
        s.observe(center);
        let here = g.position(center);
        let frontier = s.frontier_vertices();
        assert!(!frontier.is_empty());
        for v in s.discovered_vertices() {
            let d = g.position(v).distance(here);
            assert_eq!(frontier.contains(&v), d > 4.0 && d <= 5.0, "{v} at {d}");
        }
    }

    #[test]
    fn full_reveal_reproduces_truth() {
        let g = generate_grid(&GridGraphSpec::new(25.0, GainMode::Clustered, 2)).unwrap();
        let mut s = PerceptionState::new(&g, 100.0, DEFAULT_FRONTIER_FRACTION).unwrap();
        s.observe(VertexId(0));
        let gains: Vec<f64> = g.vertex_ids().map(|v| g.gain(v)).collect();
        let d = s.discovered_subgraph(&gains);
        assert_eq!(d.graph.to_json(), g.to_json());
    }
}
