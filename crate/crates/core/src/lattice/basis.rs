use nalgebra::{DMatrix, DVector};

use super::Quantizer;
use crate::{round_half_even, Error, Result};

/// Smallest admissible `|det B|`.
pub const DET_EPSILON: f64 = 1e-9;

/// Largest admissible deviation of `B·B⁻¹` from the identity.
const INVERSE_TOLERANCE: f64 = 1e-8;

/// An invertible `n×n` generator matrix with its inverse cached.
///
/// Columns are the basis vectors `b_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeBasis {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    det: f64,
}

/// A lattice point: integer coordinates `u` and the embedding `z = B·u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint {
    pub coords: Vec<i64>,
    pub embedding: Vec<f64>,
}

impl LatticePoint {
    pub fn distance_squared(&self, y: &[f64]) -> f64 {
        self.embedding
            .iter()
            .zip(y)
            .map(|(z, y)| (z - y) * (z - y))
            .sum()
    }
}

/// Builds a basis from a square matrix, rejecting non-finite or near-singular input.
pub fn make_basis(matrix: DMatrix<f64>) -> Result<LatticeBasis> {
    LatticeBasis::new(matrix)
}

/// `|det B|`, the volume of one lattice cell.
pub fn cell_volume(basis: &LatticeBasis) -> f64 {
    basis.det.abs()
}

impl LatticeBasis {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        if matrix.nrows() == 0 {
            return Err(Error::BadSpec("basis dimension must be positive".into()));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("basis matrix entry".into()));
        }
        let lu = matrix.clone().lu();
        let det = lu.determinant();
        if !(det.abs() > DET_EPSILON) {
            return Err(Error::SingularBasis { det });
        }
        let inverse = lu.try_inverse().ok_or(Error::SingularBasis { det })?;
        Self::checked(matrix, inverse, det)
    }

    /// Builds a basis whose inverse is already known in closed form.
    pub fn with_inverse(matrix: DMatrix<f64>, inverse: DMatrix<f64>, det: f64) -> Result<Self> {
        if !matrix.is_square() || matrix.shape() != inverse.shape() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: inverse.nrows(),
            });
        }
        if matrix.iter().chain(inverse.iter()).any(|v| !v.is_finite()) || !det.is_finite() {
            return Err(Error::NonFinite("basis matrix entry".into()));
        }
        if !(det.abs() > DET_EPSILON) {
            return Err(Error::SingularBasis { det });
        }
        Self::checked(matrix, inverse, det)
    }

    fn checked(matrix: DMatrix<f64>, inverse: DMatrix<f64>, det: f64) -> Result<Self> {
        let n = matrix.nrows();
        let residual = (&matrix * &inverse - DMatrix::identity(n, n)).amax();
        if !(residual <= INVERSE_TOLERANCE) {
            return Err(Error::SingularBasis { det });
        }
        Ok(Self {
            matrix,
            inverse,
            det,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: DMatrix::identity(n, n),
            inverse: DMatrix::identity(n, n),
            det: 1.0,
        }
    }

    pub fn from_row_major(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                out.push(self.matrix[(r, c)]);
            }
        }
        out
    }

    /// `B·u` for integer coordinates.
    pub fn embed(&self, coords: &[i64]) -> Vec<f64> {
        let u = DVector::from_iterator(coords.len(), coords.iter().map(|&c| c as f64));
        (&self.matrix * u).iter().copied().collect()
    }

    /// `B⁻¹·y`, the coordinates of `y` in this basis.
    pub fn coordinates(&self, y: &[f64]) -> Vec<f64> {
        (&self.inverse * DVector::from_column_slice(y))
            .iter()
            .copied()
            .collect()
    }

    /// Babai rounding: `u = round(B⁻¹y)` (ties to even), `z = B·u`.
    pub fn babai_round(&self, y: &[f64]) -> Result<LatticePoint> {
        self.check_len(y)?;
        let coords: Vec<i64> = self
            .coordinates(y)
            .into_iter()
            .map(|t| round_half_even(t) as i64)
            .collect();
        let embedding = self.embed(&coords);
        Ok(LatticePoint { coords, embedding })
    }

    pub(crate) fn check_len(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        Ok(())
    }
}

impl Quantizer for LatticeBasis {
    fn dim(&self) -> usize {
        LatticeBasis::dim(self)
    }

    fn basis(&self) -> &LatticeBasis {
        self
    }

    fn quantize(&self, y: &[f64]) -> Result<LatticePoint> {
        self.babai_round(y)
    }
}
