use super::{check_start, AdditiveGain, GainModel, PlanError, PlanResult};
use crate::criteria::CriterionContext;
use crate::graph::{Path, PlanGraph, VertexId};
use std::time::Instant;

/// Largest graph (in directed edges) the oracle will enumerate.
pub const ORACLE_MAX_EDGES: usize = 24;

/// Exhaustive depth-first search over every trail from `start` within
/// budget. Ground truth for small graphs.
pub fn oracle_trails(graph: &PlanGraph, start: VertexId, ctx: &CriterionContext<'_>) -> Result<PlanResult, PlanError> {
    oracle_trails_with(graph, start, ctx, &AdditiveGain)
}

pub fn oracle_trails_with<M: GainModel + ?Sized>(
    graph: &PlanGraph,
    start: VertexId,
    ctx: &CriterionContext<'_>,
    model: &M,
) -> Result<PlanResult, PlanError> {
    let t0 = Instant::now();
    check_start(graph, start, ctx)?;
    if graph.edge_count() > ORACLE_MAX_EDGES {
        return Err(PlanError::OracleTooLarge {
            edges: graph.edge_count(),
            limit: ORACLE_MAX_EDGES,
        });
    }
    let mut offsets = Vec::with_capacity(graph.vertex_count());
    let mut acc = 0usize;
    for v in graph.vertex_ids() {
        offsets.push(acc);
        acc += graph.out_edges(v).len();
    }

    let start_gain = model.start_gain(graph, start);
    let mut search = Dfs {
        graph,
        ctx,
        model,
        offsets,
        walk: vec![start],
        best: Path::from_parts(vec![start], 0.0, start_gain),
        best_q: 0.0,
        visited: 0,
    };
    search.best_q = ctx.quality(&search.best);
    search.descend(0, 0.0, start_gain);
    Ok(PlanResult {
        best_path: search.best,
        paths_expanded: search.visited,
        wall_time: t0.elapsed(),
    })
}

struct Dfs<'a, 'c, M: ?Sized> {
    graph: &'a PlanGraph,
    ctx: &'a CriterionContext<'c>,
    model: &'a M,
    offsets: Vec<usize>,
    walk: Vec<VertexId>,
    best: Path,
    best_q: f64,
    visited: u64,
}

impl<M: GainModel + ?Sized> Dfs<'_, '_, M> {
    fn descend(&mut self, used: u32, cost: f64, gain: f64) {
        let from = *self.walk.last().unwrap();
        let base = self.offsets[from.index()];
        for (k, e) in self.graph.out_edges(from).iter().enumerate() {
            let bit = 1u32 << (base + k);
            if used & bit != 0 {
                continue;
            }
            let c = cost + e.cost;
            if !self.ctx.affordable(c) {
                continue;
            }
            let g = gain + self.model.marginal(self.graph, &self.walk, e.target);
            self.visited += 1;
            self.walk.push(e.target);
            let q = self.ctx.score(e.target, g, c);
            if q > self.best_q {
                self.best_q = q;
                self.best = Path::from_parts(self.walk.clone(), c, g);
            }
            self.descend(used | bit, c, g);
            self.walk.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::Criterion;
    use crate::geom::Point2;

    fn star() -> PlanGraph {
        let mut g = PlanGraph::new();
        let hub = g.add_vertex(Point2::default(), 0.0, None).unwrap();
        for k in 0..3 {
            let leaf = g.add_vertex(Point2::from_polar(1.0, k as f64), 10.0, None).unwrap();
            g.add_symmetric_edge(hub, leaf, 1.0).unwrap();
        }
        g
    }

    #[test]
    fn star_requires_revisiting_hub() {
        let g = star();
        let ctx = CriterionContext::for_graph(Criterion::PathGain, 6.0, &g).unwrap();
        let r = oracle_trails(&g, VertexId(0), &ctx).unwrap();
        assert_eq!(r.best_path.gain(), 30.0);
        let hub_visits = r.best_path.vertices().iter().filter(|&&v| v == VertexId(0)).count();
        assert!(hub_visits >= 3);
        assert!(r.best_path.is_trail());
    }

    #[test]
    fn tiny_budget_gives_bare_path() {
        let g = star();
        let ctx = CriterionContext::for_graph(Criterion::PathGain, 0.9, &g).unwrap();
        let r = oracle_trails(&g, VertexId(0), &ctx).unwrap();
        assert!(r.best_path.is_bare());
        assert_eq!(r.paths_expanded, 0);
    }

    #[test]
    fn refuses_large_graphs() {
        let mut g = PlanGraph::new();
        for i in 0..14 {
            g.add_vertex(Point2::new(i as f64, 0.0), 1.0, None).unwrap();
        }
        for i in 1..14u32 {
            g.add_symmetric_edge(VertexId(i - 1), VertexId(i), 1.0).unwrap();
        }
        let ctx = CriterionContext::for_graph(Criterion::PathGain, 3.0, &g).unwrap();
        assert!(matches!(
            oracle_trails(&g, VertexId(0), &ctx),
            Err(PlanError::OracleTooLarge { edges: 26, .. })
        ));
    }
}
