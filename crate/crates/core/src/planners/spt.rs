use super::shortest::bellman_ford;
use super::{check_start, evaluate_path, AdditiveGain, GainModel, PlanError, PlanResult, SptParams};
use crate::criteria::CriterionContext;
use crate::graph::{Path, PlanGraph, VertexId};
use std::time::Instant;

/// Best root-to-vertex path of the shortest-path tree from `start`.
///
/// Only vertices with `g(v) >= g_thr`, or frontier vertices, are
/// candidates. With `alpha = 1` the threshold is the minimum gain, so every
/// reachable vertex qualifies.
pub fn spt_plan(graph: &PlanGraph, start: VertexId, params: SptParams, ctx: &CriterionContext<'_>) -> Result<PlanResult, PlanError> {
    spt_plan_with(graph, start, params, ctx, &AdditiveGain)
}

pub fn spt_plan_with<M: GainModel + ?Sized>(
    graph: &PlanGraph,
    start: VertexId,
    params: SptParams,
    ctx: &CriterionContext<'_>,
    model: &M,
) -> Result<PlanResult, PlanError> {
    let t0 = Instant::now();
    params.validate()?;
    check_start(graph, start, ctx)?;
    let tree = bellman_ford(graph, start);
    let thr = params.threshold(graph);

    let mut best = Path::from_parts(vec![start], 0.0, model.start_gain(graph, start));
    let mut best_q = ctx.quality(&best);
    let mut evaluated = 0u64;
    for v in graph.vertex_ids() {
        if v == start || !tree.reachable(v) || !ctx.affordable(tree.dist[v.index()]) {
            continue;
        }
        if graph.gain(v) < thr && !ctx.is_frontier(v) {
            continue;
        }
        let route = tree.path_to(v).expect("reachable");
        let path = evaluate_path(graph, &route, model)?;
        evaluated += 1;
        let q = ctx.quality(&path);
        if q > best_q {
            best_q = q;
            best = path;
        }
    }
    Ok(PlanResult {
        best_path: best,
        paths_expanded: evaluated,
        wall_time: t0.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::Criterion;
    use crate::geom::Point2;
    use crate::planners::{oracle_trails, ThresholdParams};

    #[test]
    fn alpha_one_admits_everything() {
        let mut g = PlanGraph::new();
        for gain in [3.0, 1.0, 7.0] {
            g.add_vertex(Point2::default(), gain, None).unwrap();
        }
        let p = ThresholdParams::new(1.0).unwrap();
        assert_eq!(p.threshold(&g), 1.0);
        assert_eq!(ThresholdParams::new(0.0).unwrap().threshold(&g), 7.0);
    }

    #[test]
    fn diamond_detour_beats_tree() {
        // s -a- t is the shortest route to t; the rich b route is dominated in the tree.
        let mut g = PlanGraph::new();
        let s = g.add_vertex(Point2::new(0.0, 0.0), 0.0, None).unwrap();
        let a = g.add_vertex(Point2::new(1.0, 1.0), 0.0, None).unwrap();
        let b = g.add_vertex(Point2::new(1.0, -1.0), 0.0, None).unwrap();
        let t = g.add_vertex(Point2::new(2.0, 0.0), 10.0, None).unwrap();
        let c = g.add_vertex(Point2::new(1.5, -1.5), 8.0, None).unwrap();
        g.add_symmetric_edge(s, a, 1.0).unwrap();
        g.add_symmetric_edge(a, t, 1.0).unwrap();
        g.add_symmetric_edge(s, b, 1.0).unwrap();
        g.add_symmetric_edge(b, c, 0.6).unwrap();
        g.add_symmetric_edge(c, t, 0.6).unwrap();
        let ctx = CriterionContext::for_graph(Criterion::PathGain, 2.2, &g).unwrap();
        let spt = spt_plan(&g, s, ThresholdParams::new(1.0).unwrap(), &ctx).unwrap();
        let oracle = oracle_trails(&g, s, &ctx).unwrap();
        assert_eq!(oracle.best_path.gain(), 18.0);
        assert!(spt.best_path.gain() < oracle.best_path.gain());
    }
}
