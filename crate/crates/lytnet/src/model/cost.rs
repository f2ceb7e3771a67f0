//! Parameter and multiply-accumulate accounting for a network spec.
//!
//! Conventions (see `docs/architecture.md`): a standard convolution over an
//! output map of `h x w` costs `h * w * k^2 * d_i * d_j` MACs; the depthwise
//! plus pointwise pair inside a bottleneck costs `h * w * d_i * (k^2 + d_j)`,
//! which is `k^2 * d_j / (k^2 + d_j)` times cheaper. Parameter counts include
//! the folded per-channel scale/shift on every convolution (2 per output
//! channel) and biases on squeeze-excite and fully connected layers; pooling
//! rows carry nothing.

use crate::model::spec::{DataShape, LayerKind, NetworkSpec, SE_REDUCTION};

/// Cost ratio of a standard convolution over the equivalent depthwise
/// separable pair: `k^2 * d_j / (k^2 + d_j)`.
pub fn separable_speedup(k: usize, d_j: usize) -> f64 {
    let k2 = (k * k) as f64;
    let dj = d_j as f64;
    k2 * dj / (k2 + dj)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerCost {
    pub row: usize,
    pub operator: &'static str,
    pub input: DataShape,
    pub output: DataShape,
    pub params: u64,
    pub macs: u64,
    /// For bottleneck rows: how much cheaper the separable pair is than a
    /// standard convolution of the same kernel and output width.
    pub separable_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub layers: Vec<LayerCost>,
    pub total_params: u64,
    pub total_macs: u64,
}

fn conv_params(c_in: u64, c_out: u64, k: u64) -> u64 {
    // weights + folded scale/shift
    k * k * c_in * c_out + 2 * c_out
}

/// Per-layer and total parameter and MAC counts for `spec`.
///
/// Panics if the spec does not validate; validate first.
pub fn count_params_and_macs(spec: &NetworkSpec) -> CostReport {
    let inputs = spec.layer_inputs().expect("spec must validate");
    let outputs = spec.shape_chain().expect("spec must validate");
    let mut layers = Vec::with_capacity(spec.layers.len());
    let mut total_params = 0u64;
    let mut total_macs = 0u64;

    for (idx, layer) in spec.layers.iter().enumerate() {
        let row = idx + 1;
        let input = inputs[idx];
        let output = outputs[idx];
        let (ci, hi, wi) = match input {
            DataShape::Map {
                channels,
                height,
                width,
            } => (channels as u64, height as u64, width as u64),
            DataShape::Flat(n) => (n as u64, 1, 1),
        };
        let (co, ho, wo) = match output {
            DataShape::Map {
                channels,
                height,
                width,
            } => (channels as u64, height as u64, width as u64),
            DataShape::Flat(n) => (n as u64, 1, 1),
        };

        let (params, macs, ratio) = match layer.kind {
            LayerKind::Conv2d => {
                let k = layer.kernel as u64;
                (
                    conv_params(ci, co, k),
                    ho * wo * k * k * ci * co,
                    None,
                )
            }
            LayerKind::Bottleneck => {
                let k = layer.kernel as u64;
                let e = layer.expansion as u64;
                let mut params = conv_params(ci, e, 1)  // expand 1x1
                    + (k * k * e + 2 * e)               // depthwise
                    + conv_params(e, co, 1); // project 1x1
                // expand runs at input resolution; the separable pair at
                // output resolution: h*w*e*(k^2 + c)
                let mut macs = hi * wi * ci * e + ho * wo * e * (k * k + co);
                if layer.use_se {
                    let reduced = e / SE_REDUCTION as u64;
                    params += e * reduced + reduced + reduced * e + e;
                    macs += 2 * e * reduced + ho * wo * e;
                }
                (params, macs, Some(separable_speedup(layer.kernel, layer.out_channels)))
            }
            LayerKind::FullyConnected => (ci * co + co, ci * co, None),
            LayerKind::MaxPool | LayerKind::AvgPool => (0, 0, None),
        };

        total_params += params;
        total_macs += macs;
        layers.push(LayerCost {
            row,
            operator: layer.kind.name(),
            input,
            output,
            params,
            macs,
            separable_ratio: ratio,
        });
    }

    CostReport {
        layers,
        total_params,
        total_macs,
    }
}
