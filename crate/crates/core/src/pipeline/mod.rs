//! Sources, training, bitstream-backed evaluation, λ sweeps and BD-rate.

mod bdrate;
mod eval;
mod model;
mod source;
mod train;

pub use bdrate::bd_rate;
pub use eval::{evaluate, evaluate_all, sweep, sweep_models, RDCurve, RDPoint, CSV_HEADER};
pub use model::{QuantizerKind, TrainedModel, MODEL_MAGIC, MODEL_VERSION};
pub use source::{
    gen_source, read_vectors, vectors_from_bytes, vectors_to_bytes, write_vectors, SourceSpec,
    VectorSource, VECTOR_MAGIC, VECTOR_VERSION,
};
pub use train::{train, train_traced, TrainConfig, TrainOutcome};
