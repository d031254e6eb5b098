//! Babai rounding against the exact nearest-point search on E8.
//!
//! Rounding in the coordinates of a generator is cheap but only finds the
//! nearest point when the generator is orthogonal. On E8 it misses often, and
//! the excess distortion is what a learned basis has to overcome.

use lvqlab::lattice::{brute_force_nearest, e8_generator, nearest_point_e8};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> lvqlab::Result<()> {
    let basis = e8_generator();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let trials = 2000;
    let (mut misses, mut babai_err, mut exact_err) = (0, 0.0, 0.0);
    for _ in 0..trials {
        let y: Vec<f64> = (0..8).map(|_| rng.random_range(-3.0..3.0)).collect();
        let exact = nearest_point_e8(&y)?;
        let babai = basis.babai_round(&y)?;
        if babai.embedding != exact.embedding {
            misses += 1;
        }
        babai_err += babai.distance_squared(&y);
        exact_err += exact.distance_squared(&y);
    }
    // the exhaustive search agrees with the fast decoder
    let y = [0.3, -1.2, 0.45, 2.0, -0.7, 0.1, 0.9, -0.25];
    assert_eq!(
        brute_force_nearest(&basis, &y, 2)?.embedding,
        nearest_point_e8(&y)?.embedding
    );

    println!("babai missed the nearest point in {misses}/{trials} trials");
    println!(
        "mean squared error per dim: babai {:.4}, exact {:.4}",
        babai_err / (8.0 * trials as f64),
        exact_err / (8.0 * trials as f64)
    );
    Ok(())
}
