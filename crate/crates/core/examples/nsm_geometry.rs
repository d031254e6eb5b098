//! Normalized second moment of the classical lattices, estimated by Monte
//! Carlo over their Voronoi cells.
//!
//!     cargo run --release --example nsm_geometry [samples]

use lvqlab::lattice::{nsm_monte_carlo, NamedLattice};

fn main() -> lvqlab::Result<()> {
    let samples: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(200_000);
    let lattices = [
        ("Z1", NamedLattice::zn(1)?),
        ("A2", NamedLattice::a2()),
        ("D4", NamedLattice::dn(4)?),
        ("E8", NamedLattice::e8()),
    ];
    println!("{:<4} {:>9} {:>9}  {:>8}", "", "G", "std err", "vs cube");
    for (i, (name, lattice)) in lattices.iter().enumerate() {
        let est = nsm_monte_carlo(lattice, samples, i as u64)?;
        let gain_db = 10.0 * (1.0 / 12.0 / est.nsm).log10();
        println!(
            "{name:<4} {:>9.6} {:>9.6}  {gain_db:>6.3} dB",
            est.nsm, est.std_err
        );
    }
    Ok(())
}
