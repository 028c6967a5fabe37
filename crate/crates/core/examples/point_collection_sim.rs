//! Point collection in a procedurally generated room world: NBS against
//! the baselines over a handful of seeds.
//!
//! cargo run --release --example point_collection_sim -- [seeds] [budget]

use ippbeam::planners::{BeamParams, PlannerSpec, ThresholdParams};
use ippbeam::worldsim::{run_sim_episode, SimConfig, Task, WorldSpec};
use ippbeam::Criterion;
use rayon::prelude::*;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(4);
    let budget: f64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(120.0);
    let planners = [
        PlannerSpec::Nbs(BeamParams::new(1, 100)?),
        PlannerSpec::Dbs(BeamParams::new(100, 100)?),
        PlannerSpec::Spt(ThresholdParams::new(1.0)?),
        PlannerSpec::Tsp(ThresholdParams::new(0.5)?),
    ];
    for p in planners {
        let cfg = SimConfig::new(p, Criterion::ExpectedGain, budget);
        let runs = (0..seeds)
            .into_par_iter()
            .map(|s| run_sim_episode(&WorldSpec::new(Task::PointCollection, s), &cfg))
            .collect::<Result<Vec<_>, _>>()?;
        let gains: Vec<f64> = runs.iter().map(|r| r.realized_gain).collect();
        let avail: f64 = runs.iter().map(|r| r.available_gain).sum::<f64>() / seeds as f64;
        let fallback = runs.iter().flat_map(|r| &r.plans).filter(|p| p.fallback).count();
        let plans: usize = runs.iter().map(|r| r.plans.len()).sum();
        println!(
            "{:<18} mean gain {:>6.1} of {avail:.0}  per seed {gains:?}  exploring plans {fallback}/{plans}",
            p.to_string(),
            gains.iter().sum::<f64>() / seeds as f64
        );
    }
    Ok(())
}
