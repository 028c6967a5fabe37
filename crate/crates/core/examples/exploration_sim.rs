//! Volumetric exploration and surface coverage in one world, printing the
//! revealed-cell curve once per simulated 10 s.
//!
//! cargo run --release --example exploration_sim -- [seed] [budget]

use ippbeam::planners::{BeamParams, PlannerSpec};
use ippbeam::worldsim::{run_sim_episode, SimConfig, Task, WorldSpec};
use ippbeam::Criterion;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(2);
    let budget: f64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(120.0);
    let cfg = SimConfig::new(PlannerSpec::Nbs(BeamParams::new(1, 100)?), Criterion::ExpectedGain, budget);
    for task in [Task::Exploration, Task::Surface] {
        let r = run_sim_episode(&WorldSpec::new(task, seed), &cfg)?;
        println!(
            "{}: gain {:.0}, {} cells revealed, {} occupied found, {} clusters, {} views, min clearance {:.2} m",
            task.name(),
            r.realized_gain,
            r.cells_revealed,
            r.occupied_found,
            r.clusters,
            r.views_evaluated,
            r.min_clearance
        );
        let per = (10.0 / cfg.robot.dt).round() as usize;
        for s in r.steps.iter().skip(per - 1).step_by(per) {
            println!("  t {:>5.1}  ({:>5.2}, {:>5.2})  gain {:>6.0}  unknown {}", s.t, s.x, s.y, s.gain, s.unknown);
        }
    }
    Ok(())
}
