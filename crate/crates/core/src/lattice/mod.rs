//! Lattices, their quantizers, and Voronoi-cell geometry.
//!
//! A lattice is every integer combination `z = B·u` of the columns of an
//! invertible basis `B`. Arbitrary (learned) bases are quantized with Babai
//! rounding `B·round(B⁻¹y)`; the classical lattices `Zn`, `Dn`, `E8` and `A2`
//! additionally have exact fast nearest-point algorithms. The exhaustive
//! search in [`brute_force_nearest`] exists to check both.

mod basis;
mod brute;
mod named;
mod nsm;

pub use basis::{cell_volume, make_basis, LatticeBasis, LatticePoint, DET_EPSILON};
pub use brute::{brute_force_nearest, MAX_CANDIDATES};
pub(crate) use named::nearest_e8_embedding;
pub use named::{
    e8_generator, nearest_point_a2, nearest_point_dn, nearest_point_e8, nearest_point_zn,
    LatticeKind, NamedLattice,
};
pub use nsm::{nsm_monte_carlo, NsmEstimate};

use crate::Result;

/// Anything that maps a point of `Rⁿ` to a lattice point.
pub trait Quantizer: Sync {
    fn dim(&self) -> usize;

    /// The generator whose columns define the lattice and its cell volume.
    fn basis(&self) -> &LatticeBasis;

    fn quantize(&self, y: &[f64]) -> Result<LatticePoint>;
}
