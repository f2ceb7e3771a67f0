//! The LytNetV2 network: graph description, weight loading, execution, and
//! the parameter / multiply-accumulate cost model.

pub mod block;
pub mod cost;
pub mod net;
pub mod spec;
pub mod weights;

pub use block::{bottleneck_forward, squeeze_excite, BottleneckBlock, SqueezeExcite};
pub use cost::{count_params_and_macs, separable_speedup, CostReport, LayerCost};
pub use net::{LayerTrace, Model, Prediction};
pub use spec::{
    build_default_spec, DataShape, LayerKind, LayerSpec, NetworkSpec, Nonlin, SpecError,
    INPUT_SHAPE, NUM_CLASSES, NUM_COORDS, SE_REDUCTION,
};
pub use weights::{
    encode_weights, load_weights, parse_weights, save_weights, validate_weights, weight_slots,
    ModelWeights, SlotSpec, WeightFormatError, WeightHeader, WeightTensor, WeightValidation,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("spec: {0}")]
    Spec(#[from] SpecError),
    #[error("layer {row} ({label}): {source}")]
    Layer {
        row: usize,
        label: String,
        source: crate::tensor::TensorError,
    },
    #[error(transparent)]
    Tensor(#[from] crate::tensor::TensorError),
    #[error("squeeze-excite {part}: expected {expected} values, got {got}")]
    SqueezeExciteShape {
        part: String,
        expected: usize,
        got: usize,
    },
    #[error("bottleneck wiring: {detail}")]
    BlockWiring { detail: String },
    #[error("input shape {got} does not match the network input {expected}")]
    InputShape { expected: String, got: String },
    #[error("weights do not match the spec: {0}")]
    InvalidWeights(WeightValidation),
    #[error("weight format: {0}")]
    Format(#[from] WeightFormatError),
}
