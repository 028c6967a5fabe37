//! The three selection criteria on a small star graph with one far
//! frontier leaf, plus the argmax equivalence on the candidates the
//! exhaustive search considered.
//!
//! cargo run --example criteria_on_a_star

use ippbeam::criteria::argmax_equivalence_check;
use ippbeam::planners::oracle_trails;
use ippbeam::{Criterion, CriterionContext, Path, PlanGraph, Point2, VertexId};

fn main() -> anyhow::Result<()> {
    // hub 0, cheap leaves 1..3, an expensive frontier leaf 4
    let mut g = PlanGraph::new();
    g.add_vertex(Point2::new(0.0, 0.0), 0.0, None)?;
    for (i, (x, y, gain)) in [(1.0, 0.0, 4.0), (0.0, 1.0, 3.0), (-1.0, 0.0, 2.0), (0.0, -4.0, 12.0)]
        .into_iter()
        .enumerate()
    {
        let v = g.add_vertex(Point2::new(x, y), gain, None)?;
        let cost = if i == 3 { 4.0 } else { 1.0 };
        g.add_symmetric_edge(VertexId(0), v, cost)?;
    }
    g.set_frontier(VertexId(4), true);

    for budget in [4.0, 8.0, 30.0] {
        for c in Criterion::ALL {
            let ctx = CriterionContext::for_graph(c, budget, &g)?;
            let best = oracle_trails(&g, VertexId(0), &ctx)?.best_path;
            println!(
                "C={budget:<4} {c:>13}: {:?}  gain {} cost {} quality {:.2}",
                best.vertices().iter().map(|v| v.0).collect::<Vec<_>>(),
                best.gain(),
                best.cost(),
                ctx.quality(&best)
            );
        }
    }

    let walks: Vec<Path> = [vec![0, 1], vec![0, 1, 0, 2], vec![0, 4], vec![0, 1, 0, 2, 0, 3]]
        .iter()
        .map(|w| Path::from_vertices(&g, &w.iter().map(|&i| VertexId(i)).collect::<Vec<_>>()))
        .collect::<Result<_, _>>()?;
    println!("same maximizers under both extrapolations: {}", argmax_equivalence_check(&walks, 20.0)?);
    Ok(())
}
