//! Grow the three annulus roadmap variants over a room world and report
//! size, connectivity, degree and how often the clearance shortcut saved
//! a dense collision check.
//!
//! cargo run --example annulus_roadmap -- [seed]

use ippbeam::rrag::{AnnulusParams, ClearanceField, Construction, CostModel, FlsParams, Roadmap};
use ippbeam::worldsim::{Task, World, WorldSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let seed = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(3);
    let world = World::generate(&WorldSpec::new(Task::Exploration, seed));
    // the whole truth is known here; the simulator grows maps incrementally
    let field = ClearanceField::new(&world.truth, 0.3, 3.0);
    let params = AnnulusParams::new(1.0, 2.0);
    for construction in [Construction::Rrag, Construction::Rrat, Construction::RratStar] {
        let mut m = Roadmap::new(construction, params, CostModel::default(), world.truth.bounds())?
            .with_fls(FlsParams::default());
        m.insert_root(world.start, &field)?;
        let rounds = m.saturate(&field, &mut ChaCha8Rng::seed_from_u64(seed), 300);
        let peak = m.cluster_ids().map(|c| m.out_degree(c)).max().unwrap_or(0);
        let s = m.stats();
        println!(
            "{construction:?}: {} clusters, {} links, {} component(s) after {rounds} rounds; max degree {peak} (bound {:.0})",
            m.cluster_count(),
            m.link_count(),
            m.component_count(),
            params.degree_bound()
        );
        println!(
            "  draws {}  shortcut hits {}  dense checks {}  bent links {}/{}",
            s.draws, s.shortcut_hits, s.interpolations, s.fls_successes, s.fls_calls
        );
        let snap = m.snapshot(|_, _| 1.0, |_, _| false)?;
        println!("  plan graph: {} vertices, {} edges", snap.graph.vertex_count(), snap.graph.edge_count());
    }
    Ok(())
}
