//! Directed weighted planning graphs, paths over them, and the path
//! preference relation shared by every planner.
//!
//! A [`PlanGraph`] is a simple directed graph: every vertex carries a
//! position, a non-negative gain and an optional yaw index; every edge
//! carries a strictly positive cost. Adjacency lists are kept sorted by
//! target id so iteration order (and therefore every planner built on
//! top) is deterministic.
//!
//! A [`Path`] caches its cost (sum over the edge sequence, repeats
//! included) and its gain (sum over the *set* of visited vertices).

use crate::geom::Point2;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::path::Path as FsPath;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("vertex {0} does not exist")]
    UnknownVertex(VertexId),
    #[error("edge {from}->{to} has non-positive or non-finite cost {cost}")]
    InvalidCost {
        from: VertexId,
        to: VertexId,
        cost: f64,
    },
    #[error("vertex gain {0} is negative or not finite")]
    InvalidGain(f64),
    #[error("self-loop on vertex {0}")]
    SelfLoop(VertexId),
    #[error("duplicate edge {from}->{to}")]
    DuplicateEdge { from: VertexId, to: VertexId },
    #[error("no edge {from}->{to}")]
    MissingEdge { from: VertexId, to: VertexId },
    #[error("empty vertex sequence")]
    EmptyPath,
    #[error("cannot append edge {from}->{to} to a path ending at {last}")]
    ConcatenationMismatch {
        last: VertexId,
        from: VertexId,
        to: VertexId,
    },
    #[error("serialized graph is inconsistent: {0}")]
    Malformed(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = GraphError> = std::result::Result<T, E>;

/// Dense vertex index, stable for the lifetime of its graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl VertexId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for VertexId {
    fn from(i: usize) -> Self {
        VertexId(i as u32)
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub position: Point2,
    pub gain: f64,
    pub yaw: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub target: VertexId,
    pub cost: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlanGraph {
    vertices: Vec<Vertex>,
    frontier: Vec<bool>,
    adjacency: Vec<Vec<Edge>>,
    edge_count: usize,
}

impl PlanGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(vertices: usize) -> Self {
        Self {
            vertices: Vec::with_capacity(vertices),
            frontier: Vec::with_capacity(vertices),
            adjacency: Vec::with_capacity(vertices),
            edge_count: 0,
        }
    }

    pub fn add_vertex(&mut self, position: Point2, gain: f64, yaw: Option<u32>) -> Result<VertexId> {
        check_gain(gain)?;
        let id = VertexId::from(self.vertices.len());
        self.vertices.push(Vertex { position, gain, yaw });
        self.frontier.push(false);
        self.adjacency.push(Vec::new());
        Ok(id)
    }

    /// Inserts a directed edge, keeping the adjacency list sorted.
    pub fn add_edge(&mut self, from: VertexId, to: VertexId, cost: f64) -> Result<()> {
        self.check_vertex(from)?;
        self.check_vertex(to)?;
        if from == to {
            return Err(GraphError::SelfLoop(from));
        }
        if !(cost > 0.0 && cost.is_finite()) {
            return Err(GraphError::InvalidCost { from, to, cost });
        }
        let list = &mut self.adjacency[from.index()];
        match list.binary_search_by_key(&to, |e| e.target) {
            Ok(_) => Err(GraphError::DuplicateEdge { from, to }),
            Err(pos) => {
                list.insert(pos, Edge { target: to, cost });
                self.edge_count += 1;
                Ok(())
            }
        }
    }

    /// Adds `a -> b` and `b -> a` with the same cost.
    pub fn add_symmetric_edge(&mut self, a: VertexId, b: VertexId, cost: f64) -> Result<()> {
        self.add_edge(a, b, cost)?;
        self.add_edge(b, a, cost)
    }

    /// Removes a directed edge, returning its cost if it existed.
    pub fn remove_edge(&mut self, from: VertexId, to: VertexId) -> Option<f64> {
        let list = self.adjacency.get_mut(from.index())?;
        let pos = list.binary_search_by_key(&to, |e| e.target).ok()?;
        self.edge_count -= 1;
        Some(list.remove(pos).cost)
    }

    pub fn edge_cost(&self, from: VertexId, to: VertexId) -> Option<f64> {
        let list = self.adjacency.get(from.index())?;
        list.binary_search_by_key(&to, |e| e.target)
            .ok()
            .map(|i| list[i].cost)
    }

    pub fn has_edge(&self, from: VertexId, to: VertexId) -> bool {
        self.edge_cost(from, to).is_some()
    }

    pub fn out_edges(&self, v: VertexId) -> &[Edge] {
        &self.adjacency[v.index()]
    }

    /// Every directed edge as `(from, to, cost)`, in id order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, list)| {
            list.iter()
                .map(move |e| (VertexId::from(i), e.target, e.cost))
        })
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> + ExactSizeIterator {
        (0..self.vertices.len()).map(VertexId::from)
    }

    pub fn vertex(&self, v: VertexId) -> &Vertex {
        &self.vertices[v.index()]
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v.index() < self.vertices.len()
    }

    pub fn position(&self, v: VertexId) -> Point2 {
        self.vertices[v.index()].position
    }

    pub fn gain(&self, v: VertexId) -> f64 {
        self.vertices[v.index()].gain
    }

    pub fn set_gain(&mut self, v: VertexId, gain: f64) -> Result<()> {
        self.check_vertex(v)?;
        check_gain(gain)?;
        self.vertices[v.index()].gain = gain;
        Ok(())
    }

    pub fn is_frontier(&self, v: VertexId) -> bool {
        self.frontier[v.index()]
    }

    pub fn set_frontier(&mut self, v: VertexId, frontier: bool) {
        self.frontier[v.index()] = frontier;
    }

    pub fn frontier_flags(&self) -> &[bool] {
        &self.frontier
    }

    pub fn clear_frontiers(&mut self) {
        self.frontier.iter_mut().for_each(|f| *f = false);
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// True when every edge has a reverse edge of identical cost.
    pub fn is_symmetric(&self) -> bool {
        self.edges()
            .all(|(a, b, c)| self.edge_cost(b, a) == Some(c))
    }

    fn check_vertex(&self, v: VertexId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(GraphError::UnknownVertex(v))
        }
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            vertices: self
                .vertices
                .iter()
                .enumerate()
                .map(|(i, v)| VertexRecord {
                    id: i as u32,
                    x: v.position.x,
                    y: v.position.y,
                    yaw: v.yaw,
                    gain: v.gain,
                    frontier: self.frontier[i],
                })
                .collect(),
            edges: self
                .edges()
                .map(|(from, to, cost)| EdgeRecord {
                    from: from.0,
                    to: to.0,
                    cost,
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &GraphDocument) -> Result<Self> {
        let mut graph = PlanGraph::with_capacity(doc.vertices.len());
        for (i, v) in doc.vertices.iter().enumerate() {
            if v.id as usize != i {
                return Err(GraphError::Malformed(format!(
                    "vertex ids must be dense and ordered, found {} at position {i}",
                    v.id
                )));
            }
            let id = graph.add_vertex(Point2::new(v.x, v.y), v.gain, v.yaw)?;
            graph.set_frontier(id, v.frontier);
        }
        for e in &doc.edges {
            graph.add_edge(VertexId(e.from), VertexId(e.to), e.cost)?;
        }
        Ok(graph)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("graph documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GraphDocument = serde_json::from_str(text)?;
        Self::from_document(&doc)
    }

    pub fn save(&self, path: impl AsRef<FsPath>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn check_gain(gain: f64) -> Result<()> {
    if gain >= 0.0 && gain.is_finite() {
        Ok(())
    } else {
        Err(GraphError::InvalidGain(gain))
    }
}

/// On-disk graph layout: `{vertices:[{id,x,y,yaw,gain,frontier}], edges:[{from,to,cost}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexRecord {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub yaw: Option<u32>,
    pub gain: f64,
    pub frontier: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub from: u32,
    pub to: u32,
    pub cost: f64,
}

/// A walk through a [`PlanGraph`] with cached cost and set-based gain.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    vertices: Vec<VertexId>,
    cost: f64,
    gain: f64,
}

impl Path {
    /// The bare path `(start)`; its gain is the start vertex's own gain.
    pub fn single(graph: &PlanGraph, start: VertexId) -> Result<Path> {
        graph.check_vertex(start)?;
        Ok(Path {
            vertices: vec![start],
            cost: 0.0,
            gain: graph.gain(start),
        })
    }

    /// Builds a path from scratch, validating every edge.
    pub fn from_vertices(graph: &PlanGraph, vertices: &[VertexId]) -> Result<Path> {
        let cost = path_cost(graph, vertices)?;
        let gain = path_gain(graph, vertices)?;
        Ok(Path {
            vertices: vertices.to_vec(),
            cost,
            gain,
        })
    }

    /// Builds a path whose cost and gain were computed elsewhere.
    pub(crate) fn from_parts(vertices: Vec<VertexId>, cost: f64, gain: f64) -> Path {
        Path {
            vertices,
            cost,
            gain,
        }
    }

    /// `self + (last, to)` with additive set gain.
    pub fn extend(&self, graph: &PlanGraph, to: VertexId) -> Result<Path> {
        let marginal = if self.contains(to) { 0.0 } else { graph.gain(to) };
        self.extend_with_gain(graph, to, marginal)
    }

    /// Like [`Path::extend`] but with a caller-supplied gain increment, for
    /// gain functions that are not a plain sum over vertices.
    pub fn extend_with_gain(&self, graph: &PlanGraph, to: VertexId, marginal: f64) -> Result<Path> {
        let from = self.last();
        let cost = graph
            .edge_cost(from, to)
            .ok_or(GraphError::MissingEdge { from, to })?;
        let mut vertices = Vec::with_capacity(self.vertices.len() + 1);
        vertices.extend_from_slice(&self.vertices);
        vertices.push(to);
        Ok(Path {
            vertices,
            cost: self.cost + cost,
            gain: self.gain + marginal,
        })
    }

    /// Concatenates an explicit edge, checking that it starts at our end.
    pub fn extend_edge(&self, graph: &PlanGraph, edge: (VertexId, VertexId)) -> Result<Path> {
        if edge.0 != self.last() {
            return Err(GraphError::ConcatenationMismatch {
                last: self.last(),
                from: edge.0,
                to: edge.1,
            });
        }
        self.extend(graph, edge.1)
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<VertexId> {
        self.vertices
    }

    pub fn first(&self) -> VertexId {
        self.vertices[0]
    }

    pub fn last(&self) -> VertexId {
        *self.vertices.last().expect("paths are never empty")
    }

    /// Number of edges.
    pub fn edge_len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_bare(&self) -> bool {
        self.vertices.len() == 1
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn ratio(&self) -> f64 {
        ratio(self.gain, self.cost)
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.vertices.contains(&v)
    }

    /// Whether the directed edge `from -> to` already occurs in the path.
    pub fn traversed(&self, from: VertexId, to: VertexId) -> bool {
        self.vertices.windows(2).any(|w| w[0] == from && w[1] == to)
    }

    pub fn traversed_edges(&self) -> BTreeSet<(VertexId, VertexId)> {
        self.vertices.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// No directed edge occurs twice.
    pub fn is_trail(&self) -> bool {
        self.traversed_edges().len() == self.edge_len()
    }

    pub fn edge_pairs(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }
}

/// Gain-to-cost ratio. A zero-cost path has ratio `+inf` when it has gain
/// and `0` otherwise.
pub fn ratio(gain: f64, cost: f64) -> f64 {
    if cost > 0.0 {
        gain / cost
    } else if gain > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Sum of edge costs along the sequence, repeats included.
pub fn path_cost(graph: &PlanGraph, vertices: &[VertexId]) -> Result<f64> {
    let (&first, _) = vertices.split_first().ok_or(GraphError::EmptyPath)?;
    graph.check_vertex(first)?;
    vertices.windows(2).try_fold(0.0, |acc, w| {
        graph
            .edge_cost(w[0], w[1])
            .map(|c| acc + c)
            .ok_or(GraphError::MissingEdge {
                from: w[0],
                to: w[1],
            })
    })
}

/// Sum of vertex gains over the set of visited vertices, accumulated in
/// first-visit order.
pub fn path_gain(graph: &PlanGraph, vertices: &[VertexId]) -> Result<f64> {
    if vertices.is_empty() {
        return Err(GraphError::EmptyPath);
    }
    let mut seen = BTreeSet::new();
    let mut gain = 0.0;
    for &v in vertices {
        graph.check_vertex(v)?;
        if seen.insert(v) {
            gain += graph.gain(v);
        }
    }
    Ok(gain)
}

/// Outcome of comparing two paths under the preference relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preference {
    First,
    Second,
    Equivalent,
}

/// Orders paths by ratio, then gain, then (lower) cost.
/// `Ordering::Greater` means the first argument is preferred.
pub fn preference_order(a_gain: f64, a_cost: f64, b_gain: f64, b_cost: f64) -> Ordering {
    let ra = ratio(a_gain, a_cost);
    let rb = ratio(b_gain, b_cost);
    ra.total_cmp(&rb)
        .then(a_gain.total_cmp(&b_gain))
        .then(b_cost.total_cmp(&a_cost))
}

pub fn compare_preference(p1: &Path, p2: &Path) -> Preference {
    match preference_order(p1.gain, p1.cost, p2.gain, p2.cost) {
        Ordering::Greater => Preference::First,
        Ordering::Less => Preference::Second,
        Ordering::Equal => Preference::Equivalent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(gains: &[f64], costs: &[f64]) -> PlanGraph {
        let mut g = PlanGraph::new();
        for (i, &gain) in gains.iter().enumerate() {
            g.add_vertex(Point2::new(i as f64, 0.0), gain, None).unwrap();
        }
        for (i, &c) in costs.iter().enumerate() {
            g.add_symmetric_edge(VertexId::from(i), VertexId::from(i + 1), c)
                .unwrap();
        }
        g
    }

    fn ids(v: &[u32]) -> Vec<VertexId> {
        v.iter().map(|&i| VertexId(i)).collect()
    }

    #[test]
    fn cost_examples() {
        let g = line(&[7.0, 0.0, 0.0], &[1.5, 2.5]);
        assert_eq!(path_cost(&g, &ids(&[0])).unwrap(), 0.0);
        assert_eq!(path_cost(&g, &ids(&[0, 1, 2])).unwrap(), 4.0);
        let g = line(&[0.0, 0.0], &[3.0]);
        assert_eq!(path_cost(&g, &ids(&[0, 1, 0])).unwrap(), 6.0);
    }

    #[test]
    fn cost_rejects_missing_edge() {
        let g = line(&[0.0, 0.0, 0.0], &[1.0, 1.0]);
        assert!(matches!(
            path_cost(&g, &ids(&[0, 2])),
            Err(GraphError::MissingEdge { .. })
        ));
        assert!(matches!(path_cost(&g, &[]), Err(GraphError::EmptyPath)));
    }

    #[test]
    fn gain_uses_set_semantics() {
        let g = line(&[7.0], &[]);
        assert_eq!(path_gain(&g, &ids(&[0])).unwrap(), 7.0);
        let g = line(&[5.0, 3.0], &[1.0]);
        assert_eq!(path_gain(&g, &ids(&[0, 1, 0])).unwrap(), 8.0);
    }

    #[test]
    fn preference_follows_ratio_gain_cost() {
        // ratio 2 vs 1
        assert_eq!(preference_order(4.0, 2.0, 4.0, 4.0), Ordering::Greater);
        // same ratio, gain 10 vs 8
        assert_eq!(preference_order(10.0, 5.0, 8.0, 4.0), Ordering::Greater);
        // same ratio and gain, cost 4 vs 5 cannot happen with finite ratios
        // unless gain is zero
        assert_eq!(preference_order(0.0, 4.0, 0.0, 5.0), Ordering::Greater);
        assert_eq!(preference_order(3.0, 1.0, 3.0, 1.0), Ordering::Equal);
    }

    #[test]
    fn extend_updates_cached_fields() {
        let g = line(&[1.0, 2.0], &[3.0]);
        let p = Path::single(&g, VertexId(0)).unwrap();
        let p = p.extend_edge(&g, (VertexId(0), VertexId(1))).unwrap();
        assert_eq!(p.vertices(), &ids(&[0, 1])[..]);
        assert_eq!((p.cost(), p.gain()), (3.0, 3.0));
        assert!(p.traversed(VertexId(0), VertexId(1)));
        assert!(!p.traversed(VertexId(1), VertexId(0)));
        let back = p.extend(&g, VertexId(0)).unwrap();
        assert_eq!((back.cost(), back.gain()), (6.0, 3.0));
        assert!(matches!(
            p.extend_edge(&g, (VertexId(0), VertexId(1))),
            Err(GraphError::ConcatenationMismatch { .. })
        ));
    }

    #[test]
    fn graph_rejects_invalid_edges() {
        let mut g = line(&[0.0, 0.0], &[1.0]);
        assert!(matches!(
            g.add_edge(VertexId(0), VertexId(0), 1.0),
            Err(GraphError::SelfLoop(_))
        ));
        assert!(matches!(
            g.add_edge(VertexId(0), VertexId(1), 1.0),
            Err(GraphError::DuplicateEdge { .. })
        ));
        let v = g.add_vertex(Point2::default(), 0.0, None).unwrap();
        assert!(matches!(
            g.add_edge(VertexId(0), v, 0.0),
            Err(GraphError::InvalidCost { .. })
        ));
        assert!(g.add_vertex(Point2::default(), -1.0, None).is_err());
    }

    #[test]
    fn adjacency_is_sorted() {
        let mut g = PlanGraph::new();
        for i in 0..5 {
            g.add_vertex(Point2::new(i as f64, 0.0), 0.0, None).unwrap();
        }
        for t in [4u32, 1, 3, 2] {
            g.add_edge(VertexId(0), VertexId(t), 1.0).unwrap();
        }
        let targets: Vec<u32> = g.out_edges(VertexId(0)).iter().map(|e| e.target.0).collect();
        assert_eq!(targets, vec![1, 2, 3, 4]);
        assert_eq!(g.remove_edge(VertexId(0), VertexId(3)), Some(1.0));
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let mut g = line(&[0.1 + 0.2, 1.0 / 3.0], &[std::f64::consts::SQRT_2]);
        g.set_frontier(VertexId(1), true);
        let back = PlanGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(back, g);
    }
}
