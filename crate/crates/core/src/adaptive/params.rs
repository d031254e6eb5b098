use nalgebra::DMatrix;
use rand::Rng;

use super::cayley::{cayley_with_resolvent, skew_len};
use crate::lattice::LatticeBasis;
use crate::{Error, Result};

/// `B = U·diag(exp θ)·Vᵀ` with `U`, `V` given by Cayley rotations of the two
/// skew generators.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisParams {
    pub dim: usize,
    pub skew_u: Vec<f64>,
    pub skew_v: Vec<f64>,
    pub log_sigma: Vec<f64>,
}

impl BasisParams {
    /// All zeros, i.e. `B = I`.
    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            skew_u: vec![0.0; skew_len(dim)],
            skew_v: vec![0.0; skew_len(dim)],
            log_sigma: vec![0.0; dim],
        }
    }

    /// Coefficients drawn uniformly from `[-spread, spread)`.
    pub fn random<R: Rng>(dim: usize, spread: f64, rng: &mut R) -> Self {
        let mut draw =
            |k: usize| -> Vec<f64> { (0..k).map(|_| rng.random_range(-spread..spread)).collect() };
        Self {
            dim,
            skew_u: draw(skew_len(dim)),
            skew_v: draw(skew_len(dim)),
            log_sigma: draw(dim),
        }
    }

    /// Total number of scalars.
    pub fn len(&self) -> usize {
        2 * skew_len(self.dim) + self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }

    /// `skew_u ‖ skew_v ‖ log_sigma`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        out.extend(&self.skew_u);
        out.extend(&self.skew_v);
        out.extend(&self.log_sigma);
        out
    }

    pub fn from_flat(dim: usize, flat: &[f64]) -> Result<Self> {
        let k = skew_len(dim);
        if flat.len() != 2 * k + dim {
            return Err(Error::DimensionMismatch {
                expected: 2 * k + dim,
                got: flat.len(),
            });
        }
        Ok(Self {
            dim,
            skew_u: flat[..k].to_vec(),
            skew_v: flat[k..2 * k].to_vec(),
            log_sigma: flat[2 * k..].to_vec(),
        })
    }

    fn check(&self) -> Result<()> {
        let k = skew_len(self.dim);
        if self.dim == 0 {
            return Err(Error::BadSpec("basis dimension must be positive".into()));
        }
        for (got, want) in [
            (self.skew_u.len(), k),
            (self.skew_v.len(), k),
            (self.log_sigma.len(), self.dim),
        ] {
            if got != want {
                return Err(Error::DimensionMismatch {
                    expected: want,
                    got,
                });
            }
        }
        if self.to_flat().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("basis parameter".into()));
        }
        Ok(())
    }
}

/// Materialized factors, kept around for the backward pass.
pub(crate) struct Factors {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub resolvent_u: DMatrix<f64>,
    pub resolvent_v: DMatrix<f64>,
    pub scales: Vec<f64>,
    pub basis: LatticeBasis,
}

impl Factors {
    pub fn new(params: &BasisParams) -> Result<Self> {
        params.check()?;
        let n = params.dim;
        let (u, resolvent_u) = cayley_with_resolvent(n, &params.skew_u)?;
        let (v, resolvent_v) = cayley_with_resolvent(n, &params.skew_v)?;
        let scales: Vec<f64> = params.log_sigma.iter().map(|t| t.exp()).collect();
        let mut us = u.clone();
        let mut vs = v.clone();
        for (j, &s) in scales.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
            vs.column_mut(j).scale_mut(1.0 / s);
        }
        let matrix = &us * v.transpose();
        let inverse = &vs * u.transpose();
        let det = scales.iter().product();
        let basis = LatticeBasis::with_inverse(matrix, inverse, det)?;
        Ok(Self {
            u,
            v,
            resolvent_u,
            resolvent_v,
            scales,
            basis,
        })
    }
}

/// `B = cayley(skew_u)·diag(exp θ)·cayley(skew_v)ᵀ`, with the inverse built
/// as `V·diag(exp -θ)·Uᵀ`.
pub fn materialize(params: &BasisParams) -> Result<LatticeBasis> {
    Factors::new(params).map(|f| f.basis)
}
