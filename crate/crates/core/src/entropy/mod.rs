//! Integrated-Gaussian probability model and range coding of lattice
//! coordinates.

mod codec;
pub mod gaussian;
mod params;
mod pmf;
pub mod range_coder;
mod symbol;

pub use codec::{
    decode, encode, model_cost_bits, Bitstream, StreamHeader, SymbolLayout, STREAM_MAGIC,
    STREAM_VERSION,
};
pub use params::EntropyParams;
pub use pmf::{estimate_entropy, pmf_discrete, rate_relaxed, rate_term, MASS_FLOOR, SIGMA_MIN};
pub use symbol::{FrequencyTable, SymbolModel};
