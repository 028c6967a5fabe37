use super::shortest::{dijkstra, ShortestPathTree};
use super::{check_start, evaluate_path, AdditiveGain, GainModel, PlanError, PlanResult, TspParams};
use crate::criteria::CriterionContext;
use crate::graph::{Path, PlanGraph, VertexId};
use std::time::Instant;

/// Open tour from `start` over frontier vertices and vertices with
/// `g(v) > g_thr`, expanded into shortest paths and cut at the budget.
///
/// The criterion only supplies the budget and frontier flags; the tour
/// itself ignores it.
pub fn tsp_plan(graph: &PlanGraph, start: VertexId, params: TspParams, ctx: &CriterionContext<'_>) -> Result<PlanResult, PlanError> {
    tsp_plan_with(graph, start, params, ctx, &AdditiveGain)
}

pub fn tsp_plan_with<M: GainModel + ?Sized>(
    graph: &PlanGraph,
    start: VertexId,
    params: TspParams,
    ctx: &CriterionContext<'_>,
    model: &M,
) -> Result<PlanResult, PlanError> {
    let t0 = Instant::now();
    params.validate()?;
    check_start(graph, start, ctx)?;
    let thr = params.threshold(graph);
    let bare = Path::from_parts(vec![start], 0.0, model.start_gain(graph, start));

    let root = dijkstra(graph, start);
    let mut nodes = vec![start];
    nodes.extend(
        graph
            .vertex_ids()
            .filter(|&v| v != start && (ctx.is_frontier(v) || graph.gain(v) > thr) && root.reachable(v)),
    );
    if nodes.len() == 1 {
        return Ok(PlanResult {
            best_path: bare,
            paths_expanded: 0,
            wall_time: t0.elapsed(),
        });
    }

    let trees: Vec<ShortestPathTree> = std::iter::once(root)
        .chain(nodes[1..].iter().map(|&v| dijkstra(graph, v)))
        .collect();
    let dist: Vec<Vec<f64>> = trees
        .iter()
        .map(|t| nodes.iter().map(|v| t.dist[v.index()]).collect())
        .collect();

    let (tour, evaluations) = open_tour(&dist);

    // concatenate legs, stopping before the first edge that breaks the budget
    let mut walk = vec![start];
    let mut cost = 0.0;
    'legs: for pair in tour.windows(2) {
        let leg = trees[pair[0]]
            .path_to(nodes[pair[1]])
            .expect("tour only visits mutually reachable vertices");
        for step in leg.windows(2) {
            let c = graph.edge_cost(step[0], step[1]).expect("tree edge");
            if !ctx.affordable(cost + c) {
                break 'legs;
            }
            cost += c;
            walk.push(step[1]);
        }
    }
    let best = evaluate_path(graph, &walk, model)?;
    Ok(PlanResult {
        best_path: best,
        paths_expanded: evaluations,
        wall_time: t0.elapsed(),
    })
}

/// Nearest-neighbour open tour from index 0, improved by 2-opt. Returns
/// the visiting order and the number of 2-opt moves evaluated.
///
/// Unreachable pairs are infinitely far, so the tour may strand nodes
/// that cannot be reached from its current end; those are dropped.
pub(crate) fn open_tour(dist: &[Vec<f64>]) -> (Vec<usize>, u64) {
    let n = dist.len();
    let mut tour = vec![0usize];
    let mut used = vec![false; n];
    used[0] = true;
    for _ in 1..n {
        let cur = *tour.last().unwrap();
        let next = (0..n)
            .filter(|&j| !used[j] && dist[cur][j].is_finite())
            .min_by(|&a, &b| dist[cur][a].total_cmp(&dist[cur][b]).then(a.cmp(&b)));
        match next {
            Some(j) => {
                used[j] = true;
                tour.push(j);
            }
            None => break,
        }
    }

    let symmetric = (0..n).all(|i| (0..n).all(|j| dist[i][j] == dist[j][i]));
    let cap = 10 * (n as u64) * (n as u64);
    let mut evaluations = 0u64;
    let m = tour.len();
    let mut improved = true;
    'outer: while improved {
        improved = false;
        // tour[0] stays fixed; reverse tour[i..=k]
        for i in 1..m {
            for k in (i + 1)..m {
                if evaluations >= cap {
                    break 'outer;
                }
                evaluations += 1;
                let delta = if symmetric {
                    let a = tour[i - 1];
                    let b = tour[i];
                    let c = tour[k];
                    let before = dist[a][b] + if k + 1 < m { dist[c][tour[k + 1]] } else { 0.0 };
                    let after = dist[a][c] + if k + 1 < m { dist[b][tour[k + 1]] } else { 0.0 };
                    after - before
                } else {
                    let mut cand = tour.clone();
                    cand[i..=k].reverse();
                    tour_length(dist, &cand) - tour_length(dist, &tour)
                };
                if delta < -1e-12 {
                    let mut cand = tour.clone();
                    cand[i..=k].reverse();
                    // infinite legs make the symmetric delta meaningless
                    if tour_length(dist, &cand).is_finite() {
                        tour = cand;
                        improved = true;
                    }
                }
            }
        }
    }
    (tour, evaluations)
}

pub(crate) fn tour_length(dist: &[Vec<f64>], tour: &[usize]) -> f64 {
    tour.windows(2).map(|w| dist[w[0]][w[1]]).sum()
}
