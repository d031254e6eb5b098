//! Lattice vector quantization with a learned basis.
//!
//! The crate is organized bottom-up:
//!
//! - [`lattice`]: lattice bases, Babai rounding, exact nearest-point
//!   quantizers for `Zn`, `Dn`, `E8` and `A2`, and normalized-second-moment
//!   estimation.
//! - [`adaptive`]: the learnable `B = U Σ Vᵀ` parameterization (Cayley
//!   rotations, log singular values), the noisy training forward pass with
//!   hand-written gradients, and an Adam optimizer.
//! - [`entropy`]: the integrated-Gaussian probability model and a
//!   deterministic range coder that turns lattice coordinates into bytes.
//! - [`rate_control`]: gain vectors that let one model serve several rates.
//! - [`pipeline`]: vector sources, training, bitstream-backed evaluation,
//!   λ sweeps, BD-rate, and the on-disk formats.
//! - [`cli`]: the `lvqlab` command line.
//!
//! Basis vectors are matrix **columns** throughout: a lattice point is
//! `z = B·u` for integer `u`. Matrices crossing module boundaries as flat
//! slices are row-major `f64`.

pub mod adaptive;
pub mod cli;
pub mod entropy;
mod error;
pub mod lattice;
pub mod pipeline;
pub mod rate_control;
mod wire;

pub use error::{Error, Result};

/// Round half to even, the single tie-breaking rule used by every quantizer.
#[inline]
pub fn round_half_even(x: f64) -> f64 {
    x.round_ties_even()
}
