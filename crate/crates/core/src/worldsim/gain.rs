//! Task gains on top of the sensor model, and the set-union point model.

use super::sensor::View;
use super::world::Task;
use crate::geom::Point2;
use crate::graph::{PlanGraph, VertexId};
use crate::planners::GainModel;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierParams {
    pub min_unknown_ratio: f64,
    pub min_visible_ratio: f64,
}

impl Default for FrontierParams {
    fn default() -> Self {
        Self {
            min_unknown_ratio: 0.8,
            min_visible_ratio: 0.6,
        }
    }
}

impl FrontierParams {
    /// `history_max` is the largest visible count ever seen at this pose,
    /// the current one included.
    pub fn is_frontier(&self, view: View, history_max: u32) -> bool {
        if view.visible == 0 || history_max == 0 {
            return false;
        }
        view.unknown as f64 / view.visible as f64 >= self.min_unknown_ratio
            && view.visible as f64 / history_max as f64 >= self.min_visible_ratio
    }
}

/// Gain of a view for the visibility tasks; zero for point collection,
/// whose gain does not depend on what is visible.
pub fn view_gain(task: Task, view: View) -> f64 {
    match task {
        Task::PointCollection => 0.0,
        Task::Exploration => view.unknown as f64,
        Task::Surface => view.surface as f64,
    }
}

/// Sum of `gains[i]` over `ids`.
pub fn point_sum(ids: &[u32], gains: &[f64]) -> f64 {
    ids.iter().map(|&i| gains[i as usize]).sum()
}

/// Point ids within `l_col` of `at`, ascending, among `candidates`.
pub fn points_near(at: Point2, l_col: f64, candidates: &[(u32, Point2)]) -> Vec<u32> {
    let r2 = l_col * l_col;
    candidates
        .iter()
        .filter(|(_, p)| p.distance_sq(at) <= r2)
        .map(|&(i, _)| i)
        .collect()
}

/// Point collection over a plan graph: a path earns each point in the
/// union of its vertices' neighborhoods once.
#[derive(Debug, Clone)]
pub struct PointGain {
    /// Neighborhood of each vertex, sorted point ids.
    near: Vec<Vec<u32>>,
    /// Vertices sharing a position share a group and a neighborhood.
    group: Vec<u32>,
    gains: Vec<f64>,
}

impl PointGain {
    pub fn new(near: Vec<Vec<u32>>, group: Vec<u32>, gains: Vec<f64>) -> Self {
        assert_eq!(near.len(), group.len());
        Self { near, group, gains }
    }

    pub fn node_gain(&self, v: VertexId) -> f64 {
        point_sum(&self.near[v.index()], &self.gains)
    }

    /// Union value of a whole vertex sequence, by direct set computation.
    pub fn path_value(&self, path: &[VertexId]) -> f64 {
        let mut ids: Vec<u32> = path.iter().flat_map(|v| self.near[v.index()].iter().copied()).collect();
        ids.sort_unstable();
        ids.dedup();
        point_sum(&ids, &self.gains)
    }
}

impl GainModel for PointGain {
    fn start_gain(&self, _graph: &PlanGraph, start: VertexId) -> f64 {
        self.node_gain(start)
    }

    fn marginal(&self, _graph: &PlanGraph, path: &[VertexId], to: VertexId) -> f64 {
        let mine = &self.near[to.index()];
        if mine.is_empty() {
            return 0.0;
        }
        let g = self.group[to.index()];
        let mut covered = vec![false; mine.len()];
        for &u in path {
            if self.group[u.index()] == g {
                return 0.0;
            }
            let theirs = &self.near[u.index()];
            if theirs.is_empty() {
                continue;
            }
            for (k, z) in mine.iter().enumerate() {
                if !covered[k] && theirs.binary_search(z).is_ok() {
                    covered[k] = true;
                }
            }
        }
        mine.iter()
            .zip(&covered)
            .filter(|(_, &c)| !c)
            .map(|(&z, _)| self.gains[z as usize])
            .sum()
    }
}
