//! Range-codes integers drawn from the integrated-Gaussian model and compares
//! the payload with the ideal code length.

use lvqlab::entropy::{decode, encode, pmf_discrete, Bitstream, EntropyParams, SymbolLayout};
use lvqlab::lattice::LatticeBasis;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> lvqlab::Result<()> {
    let scales = [0.3, 1.0, 2.5, 6.0];
    let count = 20_000;
    let params = EntropyParams::new(scales.to_vec(), vec![0.0; 4], 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let symbols: Vec<i64> = (0..4 * count)
        .map(|i| {
            let x: f64 = Normal::new(0.0, scales[i % 4]).unwrap().sample(&mut rng);
            x.round_ties_even() as i64
        })
        .collect();

    let stream = encode(
        &symbols,
        &params,
        &LatticeBasis::identity(4),
        1.0,
        SymbolLayout::Independent,
    )?;
    let bytes = stream.to_bytes();
    let back = decode(
        &Bitstream::from_bytes(&bytes)?,
        &params,
        1.0,
        count,
        SymbolLayout::Independent,
    )?;
    assert_eq!(back, symbols);

    let ideal: f64 = symbols
        .iter()
        .enumerate()
        .map(|(i, &k)| -pmf_discrete(k, 0.0, scales[i % 4], 1.0).log2())
        .sum();
    let bits = stream.payload_bits() as f64;
    println!("{} symbols, {} bytes on disk", symbols.len(), bytes.len());
    println!(
        "payload {bits} bits, ideal {ideal:.0} bits, overhead {:.3}%",
        100.0 * (bits / ideal - 1.0)
    );
    Ok(())
}
