//! Plan once on a generated lattice with every planner and print what each
//! one collects.
//!
//! cargo run --example plan_on_grid -- [extent] [budget] [seed]

use ippbeam::envs::{generate_grid, GainMode, GridGraphSpec};
use ippbeam::planners::{BeamParams, PlannerSpec, ThresholdParams};
use ippbeam::{Criterion, CriterionContext, VertexId};

fn main() -> anyhow::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let extent = args.first().copied().unwrap_or(25.0);
    let budget = args.get(1).copied().unwrap_or(50.0);
    let seed = args.get(2).copied().unwrap_or(1.0) as u64;

    let mut graph = generate_grid(&GridGraphSpec::new(extent, GainMode::Scattered, seed))?;
    // already collected; a gainful bare start would have infinite ratio
    graph.set_gain(VertexId(0), 0.0)?;
    println!("{} vertices, {} directed edges, budget {budget}", graph.vertex_count(), graph.edge_count());

    let planners = [
        PlannerSpec::Nbs(BeamParams::new(1, 100)?),
        PlannerSpec::Nbs(BeamParams::new(10, 100)?),
        PlannerSpec::Dbs(BeamParams::new(1, 100)?),
        PlannerSpec::Dbs(BeamParams::new(100, 100)?),
        PlannerSpec::Spt(ThresholdParams::new(1.0)?),
        PlannerSpec::Tsp(ThresholdParams::new(0.5)?),
    ];
    for criterion in Criterion::ALL {
        let ctx = CriterionContext::for_graph(criterion, budget, &graph)?;
        for p in &planners {
            let r = p.plan(&graph, VertexId(0), &ctx)?;
            println!(
                "{criterion:>13} {:<18} gain {:>8.1}  cost {:>6.2}  edges {:>3}  expanded {:>9}  {:>8.3} s",
                p.to_string(),
                r.best_path.gain(),
                r.best_path.cost(),
                r.best_path.edge_len(),
                r.paths_expanded,
                r.wall_time.as_secs_f64()
            );
        }
    }
    Ok(())
}
