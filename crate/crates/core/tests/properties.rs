//! Property-based checks of structural invariants.

use lvqlab::adaptive::{
    cayley_orthogonal, materialize, quantize_coords, reconstruct, skew_len, BasisParams,
};
use lvqlab::entropy::{self, EntropyParams, SymbolLayout};
use lvqlab::lattice::{cell_volume, nearest_point_e8, LatticeBasis};
use lvqlab::pipeline::{bd_rate, RDCurve, RDPoint};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn coeffs(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, len)
}

fn params(n: usize) -> impl Strategy<Value = BasisParams> {
    (
        coeffs(skew_len(n)),
        coeffs(skew_len(n)),
        prop::collection::vec(-1.5f64..1.5, n),
    )
        .prop_map(move |(u, v, t)| BasisParams {
            dim: n,
            skew_u: u,
            skew_v: v,
            log_sigma: t,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cayley_is_orthogonal(n in 1usize..9, seed in any::<u64>()) {
        let mut state = seed;
        let a: Vec<f64> = (0..skew_len(n))
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) * 8.0 - 4.0
            })
            .collect();
        let q = cayley_orthogonal(n, &a).unwrap();
        let err = (q.transpose() * &q - DMatrix::identity(n, n)).amax();
        prop_assert!(err <= 1e-10);
    }

    #[test]
    fn basis_inverse_and_volume(p in (2usize..9).prop_flat_map(params)) {
        let n = p.dim;
        let b = materialize(&p).unwrap();
        let err = (b.matrix() * b.inverse() - DMatrix::identity(n, n)).amax();
        prop_assert!(err <= 1e-10, "{err}");
        let want: f64 = p.log_sigma.iter().map(|t| t.exp()).product();
        prop_assert!((cell_volume(&b) / want - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn zero_basis_is_scalar_quantization(
        f in prop::collection::vec(-50.0f64..50.0, 6),
        mu in prop::collection::vec(-2.0f64..2.0, 6),
        q in 0.01f64..3.0,
    ) {
        let basis = materialize(&BasisParams::identity(6)).unwrap();
        let e = EntropyParams::new(vec![1.0; 6], mu.clone(), q).unwrap();
        let u = quantize_coords(&basis, &e, &f, 1.0).unwrap();
        let r = reconstruct(&basis, &e, &u, 1.0);
        for j in 0..6 {
            let k = ((f[j] - mu[j]) / q).round_ties_even();
            prop_assert_eq!(u[j], k as i64);
            prop_assert_eq!(r[j].to_bits(), (k * q + mu[j]).to_bits());
        }
    }

    #[test]
    fn codec_round_trips(
        n in 1usize..6,
        sigma in prop::collection::vec(1e-6f64..50.0, 5),
        step in 0.05f64..4.0,
        raw in prop::collection::vec(-200i64..200, 0..120),
    ) {
        let e = EntropyParams::new(sigma[..n].to_vec(), vec![0.0; n], 1.0).unwrap();
        let symbols = &raw[..raw.len() / n * n];
        let s = entropy::encode(symbols, &e, &LatticeBasis::identity(n), step, SymbolLayout::Independent).unwrap();
        let back = entropy::decode(&s, &e, step, symbols.len() / n, SymbolLayout::Independent).unwrap();
        prop_assert_eq!(back, symbols.to_vec());
        let bytes = s.to_bytes();
        prop_assert_eq!(entropy::Bitstream::from_bytes(&bytes).unwrap(), s);
    }

    #[test]
    fn e8_codec_round_trips(
        ys in prop::collection::vec(prop::collection::vec(-20.0f64..20.0, 8), 0..30),
        sigma in prop::collection::vec(0.01f64..20.0, 8),
    ) {
        let mut symbols = Vec::new();
        for y in &ys {
            symbols.extend(nearest_point_e8(y).unwrap().embedding.iter().map(|z| (2.0 * z) as i64));
        }
        let e = EntropyParams::new(sigma, vec![0.0; 8], 1.0).unwrap();
        let basis = LatticeBasis::identity(8);
        let s = entropy::encode(&symbols, &e, &basis, 1.0, SymbolLayout::E8Cosets).unwrap();
        let back = entropy::decode(&s, &e, 1.0, ys.len(), SymbolLayout::E8Cosets).unwrap();
        prop_assert_eq!(back, symbols);
    }

    #[test]
    fn bd_rate_scaling_is_exact(
        factor in 0.3f64..3.0,
        base in prop::collection::vec((1.0f64..100.0, 0.5f64..3.0), 4..8),
    ) {
        let mut bits = 5.0;
        let mut psnr = 20.0;
        let mut anchor = Vec::new();
        for (db, grow) in base {
            bits *= 1.0 + grow;
            psnr += db / 10.0 + 0.2;
            anchor.push(RDPoint { lambda: 0.0, target: 0, bits_per_vector: bits, mse: 1.0, psnr_db: psnr });
        }
        let test: Vec<RDPoint> = anchor
            .iter()
            .map(|p| RDPoint { bits_per_vector: p.bits_per_vector * factor, ..*p })
            .collect();
        let pct = bd_rate(&RDCurve::new(anchor), &RDCurve::new(test)).unwrap();
        prop_assert!((pct - 100.0 * (factor - 1.0)).abs() < 1e-6, "{pct}");
    }
}
