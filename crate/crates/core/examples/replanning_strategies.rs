//! One a-priori episode per replanning strategy and criterion on the same
//! lattice. Ratio needs replanning, so it skips no_replan.
//!
//! cargo run --example replanning_strategies -- [seed]

use ippbeam::envs::{generate_grid, GainMode, GridGraphSpec};
use ippbeam::executor::{run_episode, EpisodeConfig, ReplanStrategy, Setting};
use ippbeam::planners::{BeamParams, PlannerSpec};
use ippbeam::{Criterion, VertexId};

fn main() -> anyhow::Result<()> {
    let seed = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(1);
    let graph = generate_grid(&GridGraphSpec::new(25.0, GainMode::Scattered, seed))?;
    for criterion in Criterion::ALL {
        for strategy in ReplanStrategy::ALL {
            let config = EpisodeConfig {
                planner: PlannerSpec::Nbs(BeamParams::new(1, 100)?),
                criterion,
                strategy,
                budget: 50.0,
                setting: Setting::APriori,
            };
            if config.validate().is_err() {
                continue;
            }
            let r = run_episode(&graph, VertexId(0), &config)?;
            println!(
                "{criterion:>13} {strategy:<10} gain {:>8.1}  cost {:>5.2}  plans {:>3}  steps {:>3}",
                r.collected_gain,
                r.cost_used,
                r.plans,
                r.trace.len()
            );
        }
    }
    Ok(())
}
