//! Single-source and all-pairs shortest paths.

use crate::graph::{PlanGraph, VertexId};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Distances and predecessors from one source. Unreachable vertices have
/// infinite distance and no predecessor.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPathTree {
    pub source: VertexId,
    pub dist: Vec<f64>,
    pub pred: Vec<Option<VertexId>>,
}

impl ShortestPathTree {
    pub fn reachable(&self, v: VertexId) -> bool {
        self.dist[v.index()].is_finite()
    }

    /// Vertex sequence from the source to `target`.
    pub fn path_to(&self, target: VertexId) -> Option<Vec<VertexId>> {
        if !self.reachable(target) {
            return None;
        }
        let mut out = vec![target];
        let mut cur = target;
        while let Some(p) = self.pred[cur.index()] {
            out.push(p);
            cur = p;
        }
        out.reverse();
        debug_assert_eq!(out[0], self.source);
        Some(out)
    }
}

/// Bellman-Ford over all edges, stopping once a round changes nothing.
pub fn bellman_ford(graph: &PlanGraph, source: VertexId) -> ShortestPathTree {
    let n = graph.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    dist[source.index()] = 0.0;
    for _ in 1..n.max(2) {
        let mut changed = false;
        for u in graph.vertex_ids() {
            let du = dist[u.index()];
            if !du.is_finite() {
                continue;
            }
            for e in graph.out_edges(u) {
                let cand = du + e.cost;
                if cand < dist[e.target.index()] {
                    dist[e.target.index()] = cand;
                    pred[e.target.index()] = Some(u);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    ShortestPathTree { source, dist, pred }
}

#[derive(PartialEq)]
struct Queued(f64, VertexId);

impl Eq for Queued {}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn dijkstra(graph: &PlanGraph, source: VertexId) -> ShortestPathTree {
    let n = graph.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source.index()] = 0.0;
    heap.push(Queued(0.0, source));
    while let Some(Queued(d, u)) = heap.pop() {
        if done[u.index()] {
            continue;
        }
        done[u.index()] = true;
        for e in graph.out_edges(u) {
            let cand = d + e.cost;
            let t = e.target.index();
            if cand < dist[t] {
                dist[t] = cand;
                pred[t] = Some(u);
                heap.push(Queued(cand, e.target));
            }
        }
    }
    ShortestPathTree { source, dist, pred }
}

/// Dense all-pairs distances.
pub fn floyd_warshall(graph: &PlanGraph) -> Vec<Vec<f64>> {
    let n = graph.vertex_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (u, v, c) in graph.edges() {
        let cell = &mut d[u.index()][v.index()];
        *cell = cell.min(c);
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[i][k];
            if !dik.is_finite() {
                continue;
            }
            for j in 0..n {
                let cand = dik + d[k][j];
                if cand < d[i][j] {
                    d[i][j] = cand;
                }
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point2;
    use proptest::prelude::*;

    fn random_graph(n: usize, edges: &[(usize, usize, f64)]) -> PlanGraph {
        let mut g = PlanGraph::new();
        for i in 0..n {
            g.add_vertex(Point2::new(i as f64, 0.0), 0.0, None).unwrap();
        }
        for &(a, b, c) in edges {
            let (a, b) = (a % n, b % n);
            if a != b && !g.has_edge(VertexId::from(a), VertexId::from(b)) {
                g.add_edge(VertexId::from(a), VertexId::from(b), c).unwrap();
            }
        }
        g
    }

    #[test]
    fn path_reconstruction() {
        let g = random_graph(4, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 5.0), (2, 3, 1.0)]);
        let t = dijkstra(&g, VertexId(0));
        assert_eq!(t.dist[3], 3.0);
        assert_eq!(
            t.path_to(VertexId(3)).unwrap(),
            vec![VertexId(0), VertexId(1), VertexId(2), VertexId(3)]
        );
        let back = dijkstra(&g, VertexId(3));
        assert!(back.path_to(VertexId(0)).is_none());
    }

    proptest! {
        #[test]
        fn three_methods_agree(
            n in 2usize..12,
            edges in prop::collection::vec((0usize..12, 0usize..12, 0.1f64..5.0), 0..40),
        ) {
            let g = random_graph(n, &edges);
            let fw = floyd_warshall(&g);
            for s in g.vertex_ids() {
                let dj = dijkstra(&g, s);
                let bf = bellman_ford(&g, s);
                for t in 0..n {
                    let f = fw[s.index()][t];
                    for d in [dj.dist[t], bf.dist[t]] {
                        if f.is_finite() {
                            prop_assert!((d - f).abs() < 1e-9);
                        } else {
                            prop_assert!(d.is_infinite());
                        }
                    }
                    if let Some(p) = dj.path_to(VertexId::from(t)) {
                        let c = crate::graph::path_cost(&g, &p).unwrap();
                        prop_assert!((c - dj.dist[t]).abs() < 1e-9);
                    }
                }
            }
        }
    }
}
