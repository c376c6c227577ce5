//! Weights on the unit-volume Cassini solid, applied to the shifted Gaussian
//! in both sliver modes.
//!
//! cargo run --release --example cassini_f2 -- 2000

use volquad::assembly::WeightConfig;
use volquad::harness::integrands::IntegrandKind;
use volquad::harness::studies::{Mesh, Target};
use volquad::levelset::CassiniSolid;
use volquad::sliver::SliverMode;

fn main() -> volquad::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2000);
    let surface = CassiniSolid::calibrated(0.8)?;
    let mesh = Mesh::generate(&surface, n, 1)?;
    let target = Target::new(IntegrandKind::F2, &surface, 5, 1)?;
    println!(
        "N = {}, {} tets, reference {:.12}",
        mesh.len(),
        mesh.tess.len(),
        target.reference
    );
    for mode in [SliverMode::Known, SliverMode::Unknown] {
        for m in [2, 3] {
            let cfg = WeightConfig {
                mode,
                ..WeightConfig::with_degree(m)
            };
            let w = mesh.weights(&cfg, &surface)?;
            let volume: f64 = w.weights.iter().sum();
            println!(
                "{mode:>7} m={m}: volume error {:.2e}, max f2 error {:.2e}",
                (volume - 1.0).abs(),
                target.max_error(&mesh.nodes, &w)?
            );
        }
    }
    Ok(())
}
