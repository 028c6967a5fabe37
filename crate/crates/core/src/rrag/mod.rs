//! Incremental annulus roadmaps: the graph (RRAG) and the two trees (RRAT,
//! RRAT*), built over the free space of an occupancy grid.

mod clearance;
mod fls;
mod index;

pub use clearance::ClearanceField;
pub use fls::{fls, polyline_length, FlsParams};
pub use index::PointIndex;

use crate::geom::{angle_diff, wrap_angle, yaw_of_index, Aabb, Point2};
use crate::graph::{GraphError, PlanGraph, VertexId};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RragError {
    #[error("need 0 < l_min <= l_max, got l_min={l_min}, l_max={l_max}")]
    Lengths { l_min: f64, l_max: f64 },
    #[error("yaw count must be at least 1")]
    NoYaws,
    #[error("n_sample must be positive")]
    NoSamples,
    #[error("motion limits must be positive")]
    Motion,
    #[error("cluster {0} does not exist")]
    UnknownCluster(usize),
    #[error("no link from cluster {from} to cluster {to}")]
    NoLink { from: usize, to: usize },
    #[error("position {0:?} is not collision-free")]
    Blocked(Point2),
    #[error("roadmap already has a root")]
    HasRoot,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusParams {
    pub l_min: f64,
    pub l_max: f64,
    pub n_sample: usize,
    pub n_new: usize,
    pub yaw_count: u32,
}

impl AnnulusParams {
    pub fn new(l_min: f64, l_max: f64) -> Self {
        Self {
            l_min,
            l_max,
            n_sample: 20,
            n_new: 50,
            yaw_count: 8,
        }
    }

    pub fn validate(&self) -> Result<(), RragError> {
        if !(self.l_min > 0.0 && self.l_min <= self.l_max && self.l_max.is_finite()) {
            return Err(RragError::Lengths {
                l_min: self.l_min,
                l_max: self.l_max,
            });
        }
        if self.yaw_count == 0 {
            return Err(RragError::NoYaws);
        }
        if self.n_sample == 0 {
            return Err(RragError::NoSamples);
        }
        Ok(())
    }

    /// `l_max >= 2 l_min`, the condition for guaranteed connectivity.
    pub fn thick_enough(&self) -> bool {
        self.l_max >= 2.0 * self.l_min
    }

    /// Packing bound on inter-cluster out-degree in the plane.
    pub fn degree_bound(&self) -> f64 {
        4.0 * (self.l_max / self.l_min).powi(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    Rrag,
    Rrat,
    RratStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostMetric {
    /// Seconds along the rotate-translate-rotate schedule.
    Time,
    /// The same schedule scaled by `v_max`, in meters.
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub metric: CostMetric,
    pub v_max: f64,
    pub omega_max: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            metric: CostMetric::Time,
            v_max: 0.5,
            omega_max: 1.6,
        }
    }
}

impl CostModel {
    fn scale(&self, seconds: f64) -> f64 {
        match self.metric {
            CostMetric::Time => seconds,
            CostMetric::Distance => seconds * self.v_max,
        }
    }

    pub fn turn(&self, angle: f64) -> f64 {
        self.scale(angle.abs() / self.omega_max)
    }

    pub fn travel(&self, length: f64) -> f64 {
        self.scale(length / self.v_max)
    }

    /// Cost of following `points` starting at yaw `from_yaw` and ending at
    /// `to_yaw`: turn, drive, turn at every corner, final turn.
    pub fn polyline(&self, points: &[Point2], from_yaw: f64, to_yaw: f64) -> f64 {
        let mut heading = from_yaw;
        let mut total = 0.0;
        for w in points.windows(2) {
            let h = (w[1] - w[0]).heading();
            total += self.turn(angle_diff(heading, h)) + self.travel(w[0].distance(w[1]));
            heading = h;
        }
        total + self.turn(angle_diff(heading, to_yaw))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub position: Point2,
    /// Clearance at insertion time, refreshed by updates.
    pub clearance: f64,
    pub temporary: bool,
}

/// Directed connection between clusters, straight or bent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub to: usize,
    /// Interior waypoints; empty for straight links.
    pub via: Vec<Point2>,
    pub length: f64,
}

impl Link {
    pub fn is_straight(&self) -> bool {
        self.via.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildStats {
    pub draws: u64,
    pub shortcut_hits: u64,
    pub interpolations: u64,
    pub fls_calls: u64,
    pub fls_successes: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExpandReport {
    pub added: usize,
    pub links_added: usize,
}

/// An annulus roadmap over cluster positions. Yaw members are implicit and
/// only materialized by [`Roadmap::snapshot`].
#[derive(Debug, Clone)]
pub struct Roadmap {
    construction: Construction,
    params: AnnulusParams,
    cost: CostModel,
    fls: Option<FlsParams>,
    bounds: Aabb,
    clusters: Vec<Option<Cluster>>,
    out: Vec<Vec<Link>>,
    parent: Vec<Option<usize>>,
    cost_to_come: Vec<f64>,
    selected_yaw: Vec<u32>,
    root: Option<usize>,
    index: PointIndex,
    stats: BuildStats,
}

impl Roadmap {
    pub fn new(construction: Construction, params: AnnulusParams, cost: CostModel, bounds: Aabb) -> Result<Self, RragError> {
        params.validate()?;
        if !(cost.v_max > 0.0 && cost.omega_max > 0.0) {
            return Err(RragError::Motion);
        }
        Ok(Self {
            construction,
            params,
            cost,
            fls: None,
            bounds,
            clusters: Vec::new(),
            out: Vec::new(),
            parent: Vec::new(),
            cost_to_come: Vec::new(),
            selected_yaw: Vec::new(),
            root: None,
            index: PointIndex::new(params.l_max),
            stats: BuildStats::default(),
        })
    }

    pub fn with_fls(mut self, fls: FlsParams) -> Self {
        self.fls = Some(fls);
        self
    }

    pub fn set_fls(&mut self, fls: Option<FlsParams>) {
        self.fls = fls;
    }

    pub fn construction(&self) -> Construction {
        self.construction
    }

    pub fn params(&self) -> &AnnulusParams {
        &self.params
    }

    pub fn cost_model(&self) -> &CostModel {
        &self.cost
    }

    pub fn stats(&self) -> BuildStats {
        self.stats
    }

    pub fn root(&self) -> Option<usize> {
        self.root
    }

    fn is_tree(&self) -> bool {
        self.construction != Construction::Rrag
    }

    pub fn cluster(&self, c: usize) -> Option<&Cluster> {
        self.clusters.get(c).and_then(Option::as_ref)
    }

    pub fn position(&self, c: usize) -> Point2 {
        self.clusters[c].as_ref().expect("live cluster").position
    }

    /// Ids of live clusters, ascending.
    pub fn cluster_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.clusters
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.as_ref().map(|_| i))
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.iter().filter(|c| c.is_some()).count()
    }

    pub fn links(&self, c: usize) -> &[Link] {
        &self.out[c]
    }

    pub fn link(&self, from: usize, to: usize) -> Option<&Link> {
        self.out.get(from)?.iter().find(|l| l.to == to)
    }

    pub fn link_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    /// Every directed link as `(from, to)`, sorted.
    pub fn link_pairs(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<(usize, usize)> = self
            .out
            .iter()
            .enumerate()
            .flat_map(|(a, ls)| ls.iter().map(move |l| (a, l.to)))
            .collect();
        v.sort_unstable();
        v
    }

    pub fn out_degree(&self, c: usize) -> usize {
        self.out[c].len()
    }

    pub fn parent(&self, c: usize) -> Option<usize> {
        self.parent.get(c).copied().flatten()
    }

    pub fn cost_to_come(&self, c: usize) -> f64 {
        self.cost_to_come[c]
    }

    pub fn selected_yaw(&self, c: usize) -> u32 {
        self.selected_yaw[c]
    }

    fn link_cost(&self, from: usize, link: &Link) -> f64 {
        self.cost.travel(link.length) + self.cost.turn(interior_turn(self.position(from), link, self.position(link.to)))
    }

    pub fn polyline(&self, from: usize, link: &Link) -> Vec<Point2> {
        let mut pts = Vec::with_capacity(link.via.len() + 2);
        pts.push(self.position(from));
        pts.extend_from_slice(&link.via);
        pts.push(self.position(link.to));
        pts
    }

    fn push_cluster(&mut self, position: Point2, clearance: f64, temporary: bool) -> usize {
        let id = self.clusters.len();
        self.clusters.push(Some(Cluster {
            position,
            clearance,
            temporary,
        }));
        self.out.push(Vec::new());
        self.parent.push(None);
        self.cost_to_come.push(0.0);
        self.selected_yaw.push(0);
        if !temporary {
            self.index.insert(position, id);
        }
        id
    }

    fn push_link(&mut self, from: usize, to: usize, via: Vec<Point2>) {
        debug_assert!(self.link(from, to).is_none());
        let mut pts = vec![self.position(from)];
        pts.extend_from_slice(&via);
        pts.push(self.position(to));
        let length = polyline_length(&pts);
        self.out[from].push(Link { to, via, length });
    }

    fn drop_link(&mut self, from: usize, to: usize) -> Option<Link> {
        let i = self.out[from].iter().position(|l| l.to == to)?;
        Some(self.out[from].remove(i))
    }

    /// Places the first cluster. Trees root here.
    pub fn insert_root(&mut self, position: Point2, field: &ClearanceField) -> Result<usize, RragError> {
        if self.root.is_some() || self.cluster_count() > 0 {
            return Err(RragError::HasRoot);
        }
        if !field.is_free(position) {
            return Err(RragError::Blocked(position));
        }
        let id = self.push_cluster(position, field.clearance(position), false);
        self.root = Some(id);
        Ok(id)
    }

    /// Adds an isolated graph cluster at `position`, respecting `l_min`
    /// packing. Used to seed separate regions.
    pub fn insert_seed(&mut self, position: Point2, field: &ClearanceField) -> Result<usize, RragError> {
        if self.is_tree() && self.root.is_some() {
            return Err(RragError::HasRoot);
        }
        if !field.is_free(position) {
            return Err(RragError::Blocked(position));
        }
        if let Some((_, d)) = self.index.nearest(position) {
            if d < self.params.l_min {
                return Err(RragError::Blocked(position));
            }
        }
        let id = self.push_cluster(position, field.clearance(position), false);
        if self.root.is_none() {
            self.root = Some(id);
        }
        Ok(id)
    }

    /// Node sampling: up to `n_sample` draws, rejecting draws closer than
    /// `l_min` to the nearest cluster and pulling far draws in to `l_min`.
    pub fn sample_free(&mut self, field: &ClearanceField, rng: &mut ChaCha8Rng) -> Option<Point2> {
        for _ in 0..self.params.n_sample {
            self.stats.draws += 1;
            let draw = Point2::new(
                rng.gen_range(self.bounds.min.x..=self.bounds.max.x),
                rng.gen_range(self.bounds.min.y..=self.bounds.max.y),
            );
            if let Some(p) = self.place_draw(draw) {
                if field.is_free(p) {
                    return Some(p);
                }
            }
        }
        None
    }

    /// Distance rules for one draw: `None` if too close to the nearest
    /// cluster, pulled in to `l_min` from it if beyond `l_max`. An empty
    /// roadmap accepts the draw as is.
    pub fn place_draw(&self, p: Point2) -> Option<Point2> {
        let Some((near, d)) = self.index.nearest(p) else {
            return Some(p);
        };
        if d < self.params.l_min {
            return None;
        }
        if d > self.params.l_max {
            let q = self.position(near);
            return Some(q + (p - q) * (self.params.l_min / d));
        }
        Some(p)
    }

    /// Straight connection test, counting which path decided it.
    fn straight_free(&mut self, a: Point2, xi_a: f64, b: Point2, xi_b: f64, field: &ClearanceField) -> bool {
        if field.shortcut(a, xi_a, b, xi_b) {
            self.stats.shortcut_hits += 1;
            true
        } else {
            self.stats.interpolations += 1;
            field.segment_free(a, b)
        }
    }

    /// A collision-free route from `a` to `b`: `Some(vec![])` when straight,
    /// interior waypoints when the fallback planner found one.
    fn route(
        &mut self,
        a: Point2,
        xi_a: f64,
        b: Point2,
        xi_b: f64,
        field: &ClearanceField,
        rng: &mut ChaCha8Rng,
    ) -> Option<Vec<Point2>> {
        if self.straight_free(a, xi_a, b, xi_b, field) {
            return Some(Vec::new());
        }
        let params = self.fls?;
        self.stats.fls_calls += 1;
        let path = fls(a, b, field, self.params.l_max, &params, rng)?;
        self.stats.fls_successes += 1;
        Some(path[1..path.len() - 1].to_vec())
    }

    /// One expansion round of `n_new` draws.
    pub fn expand(&mut self, field: &ClearanceField, rng: &mut ChaCha8Rng) -> ExpandReport {
        let mut report = ExpandReport::default();
        if self.cluster_count() == 0 {
            return report;
        }
        for _ in 0..self.params.n_new {
            let Some(p) = self.sample_free(field, rng) else {
                continue;
            };
            let before = self.link_count();
            let added = match self.construction {
                Construction::Rrag => self.add_graph_node(p, field, rng),
                Construction::Rrat => self.add_tree_node(p, field, rng),
                Construction::RratStar => self.add_star_node(p, field, rng),
            };
            if added {
                report.added += 1;
                report.links_added += self.link_count() - before;
            }
        }
        report
    }

    /// Runs rounds until one adds nothing, or `max_rounds` is reached.
    pub fn saturate(&mut self, field: &ClearanceField, rng: &mut ChaCha8Rng, max_rounds: usize) -> usize {
        let mut rounds = 0;
        while rounds < max_rounds {
            rounds += 1;
            if self.expand(field, rng).added == 0 {
                break;
            }
        }
        rounds
    }

    fn nearest_cluster(&self, p: Point2) -> usize {
        self.index.nearest(p).expect("non-empty roadmap").0
    }

    fn near_clusters(&self, p: Point2) -> Vec<usize> {
        self.index.within(p, self.params.l_max)
    }

    fn add_graph_node(&mut self, p: Point2, field: &ClearanceField, rng: &mut ChaCha8Rng) -> bool {
        let xi = field.clearance(p);
        let nearest = self.nearest_cluster(p);
        let (q, xi_q) = {
            let c = self.cluster(nearest).expect("live");
            (c.position, c.clearance)
        };
        let Some(first) = self.route(q, xi_q, p, xi, field, rng) else {
            return false;
        };
        let near = self.near_clusters(p);
        let id = self.push_cluster(p, xi, false);
        for n in near {
            let (np, xi_n) = {
                let c = self.cluster(n).expect("live");
                (c.position, c.clearance)
            };
            let forward = if n == nearest {
                Some(first.clone())
            } else {
                self.route(np, xi_n, p, xi, field, rng)
            };
            // a free polyline is free both ways
            if let Some(via) = forward {
                let mut back = via.clone();
                back.reverse();
                self.push_link(n, id, via);
                self.push_link(id, n, back);
            }
        }
        true
    }

    fn add_tree_node(&mut self, p: Point2, field: &ClearanceField, rng: &mut ChaCha8Rng) -> bool {
        let xi = field.clearance(p);
        let nearest = self.nearest_cluster(p);
        let (q, xi_q) = {
            let c = self.cluster(nearest).expect("live");
            (c.position, c.clearance)
        };
        let Some(via) = self.route(q, xi_q, p, xi, field, rng) else {
            return false;
        };
        let id = self.push_cluster(p, xi, false);
        self.push_link(nearest, id, via);
        self.parent[id] = Some(nearest);
        let link_cost = self.link_cost(nearest, self.link(nearest, id).expect("just added"));
        self.cost_to_come[id] = self.cost_to_come[nearest] + link_cost;
        true
    }

    fn add_star_node(&mut self, p: Point2, field: &ClearanceField, rng: &mut ChaCha8Rng) -> bool {
        let xi = field.clearance(p);
        let nearest = self.nearest_cluster(p);
        let (q, xi_q) = {
            let c = self.cluster(nearest).expect("live");
            (c.position, c.clearance)
        };
        let Some(first) = self.route(q, xi_q, p, xi, field, rng) else {
            return false;
        };
        let tmp = |from: Point2, via: &[Point2], to: Point2| {
            let mut pts = vec![from];
            pts.extend_from_slice(via);
            pts.push(to);
            pts
        };
        let seg_cost = |m: &Roadmap, pts: &[Point2]| {
            let link = Link {
                to: 0,
                via: pts[1..pts.len() - 1].to_vec(),
                length: polyline_length(pts),
            };
            m.cost.travel(link.length) + m.cost.turn(interior_turn(pts[0], &link, pts[pts.len() - 1]))
        };
        let mut best_parent = nearest;
        let mut best_via = first.clone();
        let mut best_cost = self.cost_to_come[nearest] + seg_cost(self, &tmp(q, &first, p));
        let near = self.near_clusters(p);
        let mut routes: Vec<(usize, Option<Vec<Point2>>)> = Vec::with_capacity(near.len());
        for &n in &near {
            let (np, xi_n) = {
                let c = self.cluster(n).expect("live");
                (c.position, c.clearance)
            };
            let via = if n == nearest {
                Some(first.clone())
            } else {
                self.route(np, xi_n, p, xi, field, rng)
            };
            if let Some(v) = &via {
                let c = self.cost_to_come[n] + seg_cost(self, &tmp(np, v, p));
                if c < best_cost {
                    best_cost = c;
                    best_parent = n;
                    best_via = v.clone();
                }
            }
            routes.push((n, via));
        }
        let id = self.push_cluster(p, xi, false);
        self.push_link(best_parent, id, best_via);
        self.parent[id] = Some(best_parent);
        self.cost_to_come[id] = best_cost;
        for (n, via) in routes {
            let Some(mut back) = via else { continue };
            if Some(n) == self.root || n == best_parent {
                continue;
            }
            back.reverse();
            let np = self.position(n);
            let c = best_cost + seg_cost(self, &tmp(p, &back, np));
            if c < self.cost_to_come[n] {
                self.set_parent(n, id, back);
            }
        }
        true
    }

    /// Replaces the incoming tree link of `child` and propagates costs.
    fn set_parent(&mut self, child: usize, parent: usize, via: Vec<Point2>) {
        if let Some(old) = self.parent[child] {
            self.drop_link(old, child);
        }
        self.push_link(parent, child, via);
        self.parent[child] = Some(parent);
        self.refresh_costs_from(child);
    }

    fn children(&self, c: usize) -> Vec<usize> {
        self.out[c].iter().map(|l| l.to).collect()
    }

    fn refresh_costs_from(&mut self, start: usize) {
        let mut stack = vec![start];
        while let Some(c) = stack.pop() {
            if let Some(p) = self.parent[c] {
                let link = self.link(p, c).expect("tree link").clone();
                self.cost_to_come[c] = self.cost_to_come[p] + self.link_cost(p, &link);
            } else {
                self.cost_to_come[c] = 0.0;
            }
            stack.extend(self.children(c));
        }
    }

    /// Tree invariants: one root, every other live cluster has exactly one
    /// incoming link from its recorded parent, costs match tree paths, and
    /// every cluster reaches the root.
    pub fn check_tree(&self) -> bool {
        let Some(root) = self.root else {
            return self.cluster_count() == 0;
        };
        let mut incoming = vec![0usize; self.clusters.len()];
        for (a, ls) in self.out.iter().enumerate() {
            for l in ls {
                incoming[l.to] += 1;
                if self.parent[l.to] != Some(a) {
                    return false;
                }
            }
        }
        for c in self.cluster_ids() {
            if c == root {
                if incoming[c] != 0 || self.parent[c].is_some() || self.cost_to_come[c] != 0.0 {
                    return false;
                }
                continue;
            }
            if incoming[c] != 1 {
                return false;
            }
            let p = self.parent[c].expect("counted one incoming link");
            let link = self.link(p, c).expect("parent link");
            let expected = self.cost_to_come[p] + self.link_cost(p, link);
            if (expected - self.cost_to_come[c]).abs() > 1e-9 * expected.max(1.0) {
                return false;
            }
            // walking up must end at the root within |V| steps
            let mut cur = c;
            let mut steps = 0;
            while let Some(up) = self.parent[cur] {
                cur = up;
                steps += 1;
                if steps > self.clusters.len() {
                    return false;
                }
            }
            if cur != root {
                return false;
            }
        }
        true
    }

    fn remove_subtree(&mut self, c: usize) -> usize {
        let mut removed = 0;
        let mut stack = vec![c];
        while let Some(n) = stack.pop() {
            stack.extend(self.children(n));
            self.out[n].clear();
            if let Some(cl) = self.clusters[n].take() {
                if !cl.temporary {
                    self.index.remove(cl.position, n);
                }
                removed += 1;
            }
            self.parent[n] = None;
        }
        removed
    }

    /// Keeps only the branch of the root through `child`; returns how many
    /// clusters were dropped.
    pub fn prune_root_except(&mut self, child: usize) -> Result<usize, RragError> {
        let root = self.root.ok_or(RragError::UnknownCluster(child))?;
        if self.parent(child) != Some(root) {
            return Err(RragError::NoLink { from: root, to: child });
        }
        let mut removed = 0;
        for c in self.children(root) {
            if c != child {
                self.drop_link(root, c);
                removed += self.remove_subtree(c);
            }
        }
        Ok(removed)
    }

    /// Makes `new_root` the root: the old root-to-`new_root` chain is
    /// reversed, then every cluster is rewired through cheaper neighbors.
    pub fn reroot(&mut self, new_root: usize, field: &ClearanceField) -> Result<(), RragError> {
        if self.cluster(new_root).is_none() {
            return Err(RragError::UnknownCluster(new_root));
        }
        let mut chain = vec![new_root];
        while let Some(p) = self.parent[*chain.last().expect("non-empty")] {
            chain.push(p);
        }
        // chain = new_root, parent, ..., old root
        for w in chain.windows(2) {
            let (child, parent) = (w[0], w[1]);
            let mut link = self.drop_link(parent, child).expect("tree link");
            link.via.reverse();
            let via = link.via;
            self.push_link(child, parent, via);
            self.parent[parent] = Some(child);
        }
        self.parent[new_root] = None;
        self.root = Some(new_root);
        self.refresh_costs_from(new_root);
        if self.construction == Construction::RratStar {
            self.rewire_all(field);
        }
        Ok(())
    }

    fn rewire_all(&mut self, field: &ClearanceField) {
        let ids: Vec<usize> = self.cluster_ids().collect();
        for _pass in 0..4 {
            let mut changed = false;
            for &u in &ids {
                if self.cluster(u).is_none() {
                    continue;
                }
                let (pu, xi_u) = {
                    let c = self.cluster(u).expect("live");
                    (c.position, c.clearance)
                };
                for v in self.near_clusters(pu) {
                    if v == u || Some(v) == self.root || self.parent[v] == Some(u) {
                        continue;
                    }
                    let (pv, xi_v) = {
                        let c = self.cluster(v).expect("live");
                        (c.position, c.clearance)
                    };
                    let straight = Link {
                        to: v,
                        via: Vec::new(),
                        length: pu.distance(pv),
                    };
                    let c = self.cost_to_come[u] + self.link_cost(u, &straight);
                    if c + 1e-12 < self.cost_to_come[v] && self.straight_free(pu, xi_u, pv, xi_v, field) {
                        self.set_parent(v, u, Vec::new());
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// Picks each cluster's best-gain yaw (lowest index on ties), as trees
    /// keep one orientation per position.
    pub fn select_yaws(&mut self, gain: impl Fn(usize, u32) -> f64) {
        let k = self.params.yaw_count;
        for c in 0..self.clusters.len() {
            if self.clusters[c].is_none() {
                continue;
            }
            let mut best = (f64::NEG_INFINITY, 0);
            for y in 0..k {
                let g = gain(c, y);
                if g > best.0 {
                    best = (g, y);
                }
            }
            self.selected_yaw[c] = best.1;
        }
    }

    /// Refreshes clearances of clusters within `radius` of `center` and
    /// drops links there that are no longer free. Returns dropped links.
    pub fn revalidate(&mut self, center: Point2, radius: f64, field: &ClearanceField) -> usize {
        let r2 = radius * radius;
        let local: Vec<usize> = self
            .cluster_ids()
            .filter(|&c| self.position(c).distance_sq(center) <= r2)
            .collect();
        for &c in &local {
            let p = self.position(c);
            let xi = field.clearance(p);
            self.clusters[c].as_mut().expect("live").clearance = xi;
        }
        let mut dropped = Vec::new();
        for a in self.cluster_ids().collect::<Vec<_>>() {
            let pa = self.position(a);
            for l in &self.out[a] {
                let pb = self.position(l.to);
                if pa.distance_sq(center) > r2 && pb.distance_sq(center) > r2 {
                    continue;
                }
                let ok = if l.is_straight() {
                    let xa = self.clusters[a].as_ref().expect("live").clearance;
                    let xb = self.clusters[l.to].as_ref().expect("live").clearance;
                    field.edge_free(pa, xa, pb, xb)
                } else {
                    field.polyline_free(&self.polyline(a, l))
                };
                if !ok {
                    dropped.push((a, l.to));
                }
            }
        }
        for &(a, b) in &dropped {
            self.drop_link(a, b);
            if self.is_tree() && self.parent[b] == Some(a) {
                self.parent[b] = None;
                self.remove_subtree(b);
            }
        }
        dropped.len()
    }

    /// Splits the robot's current link at `position` with a temporary
    /// cluster: `from -> tmp` and `tmp -> to` follow the original route,
    /// the original link stays, and outgoing straight links to clusters
    /// within `l_max` are attempted.
    pub fn insert_intermediate(
        &mut self,
        from: usize,
        to: usize,
        position: Point2,
        field: &ClearanceField,
    ) -> Result<usize, RragError> {
        let link = self.link(from, to).ok_or(RragError::NoLink { from, to })?.clone();
        let pts = self.polyline(from, &link);
        let (head, tail) = split_polyline(&pts, position);
        let xi = field.clearance(position);
        let id = self.push_cluster(position, xi, true);
        self.push_link(from, id, head[1..head.len() - 1].to_vec());
        self.push_link(id, to, tail[1..tail.len() - 1].to_vec());
        for n in self.near_clusters(position) {
            if n == to {
                continue;
            }
            let c = self.cluster(n).expect("live");
            let (pn, xn) = (c.position, c.clearance);
            if pn.distance(position) > 0.0 && self.straight_free(position, xi, pn, xn, field) {
                self.push_link(id, n, Vec::new());
            }
        }
        Ok(id)
    }

    /// Deletes a cluster and every link touching it.
    pub fn remove_cluster(&mut self, c: usize) -> Result<(), RragError> {
        let cl = self.clusters.get_mut(c).and_then(Option::take).ok_or(RragError::UnknownCluster(c))?;
        if !cl.temporary {
            self.index.remove(cl.position, c);
        }
        self.out[c].clear();
        for ls in &mut self.out {
            ls.retain(|l| l.to != c);
        }
        self.parent[c] = None;
        Ok(())
    }

    /// Union-find components over live, non-temporary clusters, ignoring
    /// link direction.
    pub fn component_count(&self) -> usize {
        let n = self.clusters.len();
        let mut uf: Vec<usize> = (0..n).collect();
        fn find(uf: &mut [usize], mut x: usize) -> usize {
            while uf[x] != x {
                uf[x] = uf[uf[x]];
                x = uf[x];
            }
            x
        }
        for (a, ls) in self.out.iter().enumerate() {
            for l in ls {
                let (ra, rb) = (find(&mut uf, a), find(&mut uf, l.to));
                if ra != rb {
                    uf[ra] = rb;
                }
            }
        }
        let live: Vec<usize> = self
            .cluster_ids()
            .filter(|&c| !self.clusters[c].as_ref().expect("live").temporary)
            .collect();
        let mut roots: Vec<usize> = live.into_iter().map(|c| find(&mut uf, c)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    /// Smallest pairwise distance between live, non-temporary clusters.
    pub fn min_separation(&self) -> f64 {
        let pts: Vec<Point2> = self
            .cluster_ids()
            .filter(|&c| !self.clusters[c].as_ref().expect("live").temporary)
            .map(|c| self.position(c))
            .collect();
        let mut best = f64::INFINITY;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                best = best.min(pts[i].distance(pts[j]));
            }
        }
        best
    }

    /// Plan graph over yaw members. The graph keeps every yaw of every
    /// cluster; trees keep only the selected yaw.
    pub fn snapshot(
        &self,
        gain: impl Fn(usize, u32) -> f64,
        frontier: impl Fn(usize, u32) -> bool,
    ) -> Result<Snapshot, RragError> {
        let k = self.params.yaw_count;
        let mut graph = PlanGraph::new();
        let mut members = Vec::new();
        let mut first_vertex = vec![u32::MAX; self.clusters.len()];
        for c in self.cluster_ids() {
            let pos = self.position(c);
            first_vertex[c] = members.len() as u32;
            let yaws: Vec<u32> = if self.is_tree() {
                vec![self.selected_yaw[c]]
            } else {
                (0..k).collect()
            };
            for y in yaws {
                let v = graph.add_vertex(pos, gain(c, y).max(0.0), Some(y))?;
                graph.set_frontier(v, frontier(c, y));
                members.push((c, y));
            }
        }
        let vertex = |c: usize, y: u32| -> VertexId {
            if self.is_tree() {
                VertexId(first_vertex[c])
            } else {
                VertexId(first_vertex[c] + y)
            }
        };
        if !self.is_tree() && k > 1 {
            let step = self.cost.turn(TAU / k as f64);
            for c in self.cluster_ids() {
                for y in 0..k {
                    let next = (y + 1) % k;
                    if k == 2 && y == 1 {
                        break;
                    }
                    graph.add_symmetric_edge(vertex(c, y), vertex(c, next), step)?;
                }
            }
        }
        for a in self.cluster_ids() {
            for l in &self.out[a] {
                let pts = self.polyline(a, l);
                let depart = (pts[1] - pts[0]).heading();
                let arrive = (pts[pts.len() - 1] - pts[pts.len() - 2]).heading();
                let (ya, yb) = if self.is_tree() {
                    (self.selected_yaw[a], self.selected_yaw[l.to])
                } else {
                    (aligned_yaw(depart, k), aligned_yaw(arrive, k))
                };
                let cost = self.cost.polyline(&pts, yaw_of_index(ya, k), yaw_of_index(yb, k));
                graph.add_edge(vertex(a, ya), vertex(l.to, yb), cost)?;
            }
        }
        Ok(Snapshot {
            graph,
            members,
            first_vertex,
            tree: self.is_tree(),
        })
    }
}

/// Planning view of a roadmap with the vertex-to-cluster mapping.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub graph: PlanGraph,
    /// `(cluster, yaw index)` for every vertex.
    pub members: Vec<(usize, u32)>,
    first_vertex: Vec<u32>,
    tree: bool,
}

impl Snapshot {
    pub fn member(&self, v: VertexId) -> (usize, u32) {
        self.members[v.index()]
    }

    /// Vertex for a cluster and yaw; trees answer with their single member.
    pub fn vertex(&self, cluster: usize, yaw: u32) -> Option<VertexId> {
        let first = *self.first_vertex.get(cluster)?;
        if first == u32::MAX {
            return None;
        }
        Some(if self.tree { VertexId(first) } else { VertexId(first + yaw) })
    }
}

/// Yaw index whose heading is closest to `heading`; lower index on ties.
pub fn aligned_yaw(heading: f64, k: u32) -> u32 {
    let mut best = (f64::INFINITY, 0);
    for y in 0..k {
        let d = angle_diff(yaw_of_index(y, k), heading);
        if d < best.0 - 1e-12 {
            best = (d, y);
        }
    }
    best.1
}

/// Total heading change at the interior corners of a link.
fn interior_turn(from: Point2, link: &Link, to: Point2) -> f64 {
    if link.via.is_empty() {
        return 0.0;
    }
    let mut pts = Vec::with_capacity(link.via.len() + 2);
    pts.push(from);
    pts.extend_from_slice(&link.via);
    pts.push(to);
    pts.windows(3)
        .map(|w| angle_diff((w[1] - w[0]).heading(), (w[2] - w[1]).heading()))
        .sum()
}

/// Splits a polyline at the point on it closest to `at`.
fn split_polyline(pts: &[Point2], at: Point2) -> (Vec<Point2>, Vec<Point2>) {
    let mut best = (f64::INFINITY, 0usize, at);
    for (i, w) in pts.windows(2).enumerate() {
        let d = w[1] - w[0];
        let len2 = d.x * d.x + d.y * d.y;
        let t = if len2 > 0.0 {
            (((at - w[0]).x * d.x + (at - w[0]).y * d.y) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let q = w[0].lerp(w[1], t);
        let dist = q.distance(at);
        if dist < best.0 {
            best = (dist, i, q);
        }
    }
    let (_, seg, q) = best;
    let mut head = pts[..=seg].to_vec();
    head.push(q);
    let mut tail = vec![q];
    tail.extend_from_slice(&pts[seg + 1..]);
    // splitting at a corner would repeat it
    head.dedup();
    tail.dedup();
    (head, tail)
}

/// Builds the annulus graph over a fixed point set with every straight
/// connection allowed: an edge joins two points iff their distance lies in
/// `[l_min, l_max]`. Returns adjacency lists.
pub fn annulus_graph(points: &[Point2], l_min: f64, l_max: f64) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); points.len()];
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = points[i].distance(points[j]);
            if d >= l_min && d <= l_max {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    adj
}

/// Connected components of an undirected adjacency list.
pub fn components(adj: &[Vec<usize>]) -> usize {
    let mut seen = vec![false; adj.len()];
    let mut count = 0;
    for s in 0..adj.len() {
        if seen[s] {
            continue;
        }
        count += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    count
}

/// Normalized yaw of a heading, for callers mapping poses to members.
pub fn nearest_member_yaw(yaw: f64, k: u32) -> u32 {
    aligned_yaw(wrap_angle(yaw), k)
}

#[cfg(test)]
mod tests;
