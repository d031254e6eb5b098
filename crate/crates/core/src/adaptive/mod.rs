//! The learnable basis `B = U·diag(exp θ)·Vᵀ`, its noisy training surrogate,
//! hand-written gradients, and Adam.
//!
//! `U` and `V` are Cayley rotations `(I - S)(I + S)⁻¹` of skew-symmetric
//! generators, so every parameter vector gives an invertible basis and all
//! zeros gives `B = I` (plain scalar quantization).

mod adam;
mod cayley;
mod params;
mod train;

pub use adam::Adam;
pub use cayley::{cayley_orthogonal, skew_len, skew_matrix};
pub use params::{materialize, BasisParams};
pub use train::{
    backward, forward_train, quantize_coords, reconstruct, ForwardOutput, NoiseKind,
    ParamGradients, TrainingBatch,
};
