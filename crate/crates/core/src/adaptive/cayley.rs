use nalgebra::DMatrix;

use crate::{Error, Result};

/// Number of free coefficients in an `n×n` skew-symmetric matrix.
pub fn skew_len(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Skew-symmetric `S` with `S[i,j] = a`, `S[j,i] = -a` for the strict upper
/// triangle `i < j`, filled row by row.
pub fn skew_matrix(n: usize, coeffs: &[f64]) -> Result<DMatrix<f64>> {
    if coeffs.len() != skew_len(n) {
        return Err(Error::DimensionMismatch {
            expected: skew_len(n),
            got: coeffs.len(),
        });
    }
    let mut s = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            s[(i, j)] = coeffs[k];
            s[(j, i)] = -coeffs[k];
            k += 1;
        }
    }
    Ok(s)
}

/// Cayley transform `Q = (I - S)(I + S)⁻¹`, together with `(I + S)⁻¹`
/// (needed for the backward pass).
pub(crate) fn cayley_with_resolvent(
    n: usize,
    coeffs: &[f64],
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let s = skew_matrix(n, coeffs)?;
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("skew coefficient".into()));
    }
    let eye = DMatrix::<f64>::identity(n, n);
    // I + S is never singular for skew S, so the solve only fails on overflow.
    let resolvent = (&eye + &s)
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::NonFinite("Cayley resolvent".into()))?;
    let q = (&eye - &s) * &resolvent;
    Ok((q, resolvent))
}

/// The rotation `Q = (I - S)(I + S)⁻¹` (orthogonal, `det Q = +1`).
pub fn cayley_orthogonal(n: usize, coeffs: &[f64]) -> Result<DMatrix<f64>> {
    cayley_with_resolvent(n, coeffs).map(|(q, _)| q)
}

/// Pulls a gradient on `Q` back to the skew coefficients, using
/// `dQ = -(I+S)⁻¹ dS (I+Q)`.
pub(crate) fn cayley_backward(
    q: &DMatrix<f64>,
    resolvent: &DMatrix<f64>,
    grad_q: &DMatrix<f64>,
) -> Vec<f64> {
    let n = q.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let grad_s = -(resolvent.transpose() * grad_q * (&eye + q).transpose());
    let mut out = Vec::with_capacity(skew_len(n));
    for i in 0..n {
        for j in i + 1..n {
            out.push(grad_s[(i, j)] - grad_s[(j, i)]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_is_identity() {
        let q = cayley_orthogonal(5, &[0.0; 10]).unwrap();
        assert_eq!(q, DMatrix::identity(5, 5));
    }

    #[test]
    fn quarter_turn() {
        let q = cayley_orthogonal(2, &[1.0]).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!((q - want).amax() < 1e-15);
    }

    #[test]
    fn random_is_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let a: Vec<f64> = (0..28).map(|_| rng.random_range(-2.0..2.0)).collect();
            let q = cayley_orthogonal(8, &a).unwrap();
            let err = (q.transpose() * &q - DMatrix::identity(8, 8)).amax();
            assert!(err < 1e-10, "{err}");
            assert!((q.determinant() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 4;
        let a: Vec<f64> = (0..skew_len(n))
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let w = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let objective = |a: &[f64]| cayley_orthogonal(n, a).unwrap().component_mul(&w).sum();
        let (q, m) = cayley_with_resolvent(n, &a).unwrap();
        let grad = cayley_backward(&q, &m, &w);
        for k in 0..a.len() {
            let h = 1e-6;
            let mut hi = a.clone();
            let mut lo = a.clone();
            hi[k] += h;
            lo[k] -= h;
            let fd = (objective(&hi) - objective(&lo)) / (2.0 * h);
            assert!((fd - grad[k]).abs() < 1e-8, "{k}: {fd} vs {}", grad[k]);
        }
    }

    #[test]
    fn wrong_length_rejected() {
        assert!(cayley_orthogonal(3, &[0.0; 2]).is_err());
        assert_eq!(cayley_orthogonal(1, &[]).unwrap(), DMatrix::identity(1, 1));
    }
}
