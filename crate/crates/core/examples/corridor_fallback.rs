//! Two rooms joined by a narrow L corridor. Straight annulus links cannot
//! bend around the corner; the fallback local search can.
//!
//! cargo run --example corridor_fallback -- [width]

use ippbeam::rrag::{polyline_length, AnnulusParams, ClearanceField, Construction, CostModel, FlsParams, Roadmap};
use ippbeam::worldsim::l_corridor;
use ippbeam::Point2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let width: f64 = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(0.7);
    let grid = l_corridor(width);
    let field = ClearanceField::new(&grid, 0.3, 3.0);
    let params = AnnulusParams::new(1.0, 2.0);
    for seed in 0..5 {
        let mut line = format!("seed {seed}:");
        for fls in [false, true] {
            let mut m = Roadmap::new(Construction::Rrag, params, CostModel::default(), grid.bounds())?;
            if fls {
                m.set_fls(Some(FlsParams::default()));
            }
            m.insert_seed(Point2::new(2.5, 2.5), &field)?;
            m.insert_seed(Point2::new(7.3, 5.8), &field)?;
            m.saturate(&field, &mut ChaCha8Rng::seed_from_u64(seed), 100);
            let bent: Vec<f64> = m
                .cluster_ids()
                .flat_map(|c| m.links(c).iter().filter(|l| !l.is_straight()).map(move |l| (c, l)).collect::<Vec<_>>())
                .map(|(c, l)| polyline_length(&m.polyline(c, l)))
                .collect();
            line += &format!(
                "  {} fallback: {} components, {} bent links",
                if fls { "with" } else { "without" },
                m.component_count(),
                bent.len()
            );
        }
        println!("{line}");
    }
    Ok(())
}
