//! Scalar codebook quantization of subspace weights, straight-through
//! training, and the entropy-coding bit count used in place of an MI estimate.

mod codebook;
mod train;

pub use codebook::{bit_bound, ceil_log2, quantization_bound_bits, quantize, Codebook, Precision, QuantizedWeights};
pub use train::{train_quantized, CollapseEvent, QuantTrainConfig, QuantizedTraining};
