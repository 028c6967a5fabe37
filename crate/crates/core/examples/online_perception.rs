//! Online perception: the robot only knows vertices within a radius of
//! where it has been, and vertices just outside that radius are frontiers.
//! Prints how the discovered graph grows along one episode.
//!
//! cargo run --example online_perception -- [radius] [seed]

use ippbeam::envs::{generate_grid, GainMode, GridGraphSpec, DEFAULT_FRONTIER_FRACTION};
use ippbeam::executor::{run_episode, EpisodeConfig, ReplanStrategy, Setting};
use ippbeam::planners::{BeamParams, PlannerSpec};
use ippbeam::{Criterion, VertexId};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let radius: f64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(5.0);
    let seed: u64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(1);
    let graph = generate_grid(&GridGraphSpec::new(25.0, GainMode::Scattered, seed))?;
    let setting = Setting::Online {
        radius,
        frontier_fraction: DEFAULT_FRONTIER_FRACTION,
    };
    for (criterion, strategy) in [
        (Criterion::ExpectedGain, ReplanStrategy::EveryNode),
        (Criterion::PathGain, ReplanStrategy::AtGoal),
        (Criterion::PathRatio, ReplanStrategy::EveryNode),
    ] {
        let config = EpisodeConfig {
            planner: PlannerSpec::Nbs(BeamParams::new(1, 100)?),
            criterion,
            strategy,
            budget: 50.0,
            setting,
        };
        let r = run_episode(&graph, VertexId(0), &config)?;
        println!("{criterion} / {strategy}: gain {:.1} over {} steps", r.collected_gain, r.trace.len());
        for s in r.trace.iter().step_by(10) {
            let p = graph.position(s.vertex);
            println!("  at ({:>4.1}, {:>4.1})  left {:>5.2}  gain {:>8.1}", p.x, p.y, s.remaining_budget, s.collected_gain);
        }
    }
    Ok(())
}
