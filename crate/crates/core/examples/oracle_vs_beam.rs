//! Beam search against the exhaustive trail oracle on random small graphs.
//! A beam wide enough to keep every partial path matches the oracle; narrow
//! beams may not.
//!
//! cargo run --example oracle_vs_beam -- [graphs]

use ippbeam::planners::{oracle_trails, BeamParams, PlannerSpec};
use ippbeam::verify::random_symmetric_graph;
use ippbeam::{Criterion, CriterionContext, VertexId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let graphs: usize = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(10);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut hits = [0usize; 3];
    for i in 0..graphs {
        let g = random_symmetric_graph(&mut rng, 8, 12);
        let ctx = CriterionContext::for_graph(Criterion::ExpectedGain, 12.0, &g)?;
        let oracle = ctx.quality(&oracle_trails(&g, VertexId(0), &ctx)?.best_path);
        let mut line = format!("graph {i:>2}: oracle {oracle:>7.2}");
        for (k, b) in [1, 10, 100_000].into_iter().enumerate() {
            let nbs = PlannerSpec::Nbs(BeamParams::new(b, g.edge_count())?);
            let r = nbs.plan(&g, VertexId(0), &ctx)?;
            let q = ctx.quality(&r.best_path);
            hits[k] += (q == oracle) as usize;
            line += &format!("  nbs(B={b}) {q:>7.2} [{} paths]", r.paths_expanded);
        }
        println!("{line}");
    }
    println!("oracle matched: B=1 {}/{graphs}, B=10 {}/{graphs}, B=1e5 {}/{graphs}", hits[0], hits[1], hits[2]);
    Ok(())
}
