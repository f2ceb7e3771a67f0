//! Full-network oracle: executes the default graph layer by layer using only
//! the naive reference operators and hand-stepped squeeze-excite, then checks
//! the production forward pass against it.
//!
//! This path deliberately avoids `Model`, `BottleneckBlock`, `conv2d`, and
//! `depthwise_conv2d`: convolutions go through `naive_conv2d` (depthwise as
//! per-channel single-channel convolutions), gating is spelled out with the
//! scalar activations.

use lytnet::model::{
    build_default_spec, DataShape, LayerKind, ModelWeights, Model, NetworkSpec, Nonlin,
    WeightHeader,
};
use lytnet::tensor::{
    self, fully_connected, global_avgpool, maxpool2x2, naive_conv2d, ConvParams, Tensor,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn apply_nonlin(t: &Tensor, nl: Nonlin) -> Tensor {
    match nl {
        Nonlin::Relu => tensor::relu(t),
        Nonlin::HardSwish => tensor::hard_swish(t),
    }
}

fn get_data<'a>(weights: &'a ModelWeights, name: &str) -> &'a [f32] {
    &weights
        .get(name)
        .unwrap_or_else(|| panic!("missing {name}"))
        .data
}

fn per_channel(weights: &ModelWeights, name: &str, channels: usize, default: f32) -> Vec<f32> {
    weights
        .get(name)
        .map(|t| t.data.clone())
        .unwrap_or_else(|| vec![default; channels])
}

fn naive_standard(
    weights: &ModelWeights,
    prefix: &str,
    input: &Tensor,
    c_out: usize,
    k: usize,
    s: usize,
) -> Tensor {
    let params = ConvParams::standard(
        input.channels(),
        c_out,
        k,
        s,
        get_data(weights, &format!("{prefix}.weight")).to_vec(),
    )
    .unwrap()
    .with_bias(per_channel(weights, &format!("{prefix}.bias"), c_out, 0.0))
    .with_scale_shift(
        per_channel(weights, &format!("{prefix}.scale"), c_out, 1.0),
        per_channel(weights, &format!("{prefix}.shift"), c_out, 0.0),
    );
    naive_conv2d(input, &params).unwrap()
}

/// Depthwise via the textbook primitive: one single-channel standard
/// convolution per channel, stitched back together.
fn naive_depthwise(
    weights: &ModelWeights,
    prefix: &str,
    input: &Tensor,
    k: usize,
    s: usize,
) -> Tensor {
    let channels = input.channels();
    let w = get_data(weights, &format!("{prefix}.weight"));
    let bias = per_channel(weights, &format!("{prefix}.bias"), channels, 0.0);
    let scale = per_channel(weights, &format!("{prefix}.scale"), channels, 1.0);
    let shift = per_channel(weights, &format!("{prefix}.shift"), channels, 0.0);

    let (_, h, width) = input.shape();
    let mut out: Option<(usize, usize, Vec<f32>)> = None;
    for c in 0..channels {
        let single = Tensor::from_vec(1, h, width, input.channel(c).to_vec()).unwrap();
        let params = ConvParams::standard(1, 1, k, s, w[c * k * k..(c + 1) * k * k].to_vec())
            .unwrap()
            .with_bias(vec![bias[c]])
            .with_scale_shift(vec![scale[c]], vec![shift[c]]);
        let filtered = naive_conv2d(&single, &params).unwrap();
        let (_, oh, ow) = filtered.shape();
        let entry = out.get_or_insert_with(|| (oh, ow, Vec::with_capacity(channels * oh * ow)));
        entry.2.extend_from_slice(filtered.data());
    }
    let (oh, ow, data) = out.unwrap();
    Tensor::from_vec(channels, oh, ow, data).unwrap()
}

fn naive_squeeze_excite(weights: &ModelWeights, prefix: &str, input: &Tensor) -> Tensor {
    let channels = input.channels();
    let reduce_w = get_data(weights, &format!("{prefix}.se_reduce.weight"));
    let reduced = reduce_w.len() / channels;
    let reduce_b = per_channel(weights, &format!("{prefix}.se_reduce.bias"), reduced, 0.0);
    let expand_w = get_data(weights, &format!("{prefix}.se_expand.weight"));
    let expand_b = per_channel(weights, &format!("{prefix}.se_expand.bias"), channels, 0.0);

    let pooled = global_avgpool(input);
    let squeezed: Vec<f32> = fully_connected(pooled.data(), reduce_w, &reduce_b)
        .unwrap()
        .iter()
        .map(|&v| tensor::relu_scalar(v))
        .collect();
    let gate: Vec<f32> = fully_connected(&squeezed, expand_w, &expand_b)
        .unwrap()
        .iter()
        .map(|&v| tensor::hard_sigmoid_scalar(v))
        .collect();

    let (c, h, w) = input.shape();
    let mut data = Vec::with_capacity(c * h * w);
    for (ch, &g) in gate.iter().enumerate() {
        data.extend(input.channel(ch).iter().map(|&v| v * g));
    }
    Tensor::from_vec(c, h, w, data).unwrap()
}

fn naive_forward(
    spec: &NetworkSpec,
    weights: &ModelWeights,
    input: &Tensor,
) -> ([f32; 5], [f32; 4], Vec<DataShape>) {
    // input normalization from the header
    let mean = weights.header.mean.unwrap_or([0.0; 3]);
    let std = weights.header.std.unwrap_or([1.0; 3]);
    let (c, h, w) = input.shape();
    let mut data = Vec::with_capacity(c * h * w);
    for ch in 0..c {
        data.extend(input.channel(ch).iter().map(|&v| (v - mean[ch]) / std[ch]));
    }
    let mut current = Tensor::from_vec(c, h, w, data).unwrap();

    let mut shapes = Vec::new();
    let mut head: Option<Vec<f32>> = None;
    for (idx, layer) in spec.layers.iter().enumerate() {
        let row = idx + 1;
        match layer.kind {
            LayerKind::Conv2d => {
                let out = naive_standard(
                    weights,
                    &format!("layer{row}"),
                    &current,
                    layer.out_channels,
                    layer.kernel,
                    layer.stride,
                );
                current = apply_nonlin(&out, layer.nonlin.unwrap());
            }
            LayerKind::MaxPool => {
                current = maxpool2x2(&current).unwrap();
            }
            LayerKind::Bottleneck => {
                let prefix = format!("layer{row}");
                let nl = layer.nonlin.unwrap();
                let in_channels = current.channels();
                let expanded = apply_nonlin(
                    &naive_standard(
                        weights,
                        &format!("{prefix}.expand"),
                        &current,
                        layer.expansion,
                        1,
                        1,
                    ),
                    nl,
                );
                let filtered = apply_nonlin(
                    &naive_depthwise(
                        weights,
                        &format!("{prefix}.dw"),
                        &expanded,
                        layer.kernel,
                        layer.stride,
                    ),
                    nl,
                );
                let gated = if layer.use_se {
                    naive_squeeze_excite(weights, &prefix, &filtered)
                } else {
                    filtered
                };
                let projected = naive_standard(
                    weights,
                    &format!("{prefix}.project"),
                    &gated,
                    layer.out_channels,
                    1,
                    1,
                );
                current = if layer.stride == 1 && in_channels == layer.out_channels {
                    let (pc, ph, pw) = projected.shape();
                    let sum: Vec<f32> = projected
                        .data()
                        .iter()
                        .zip(current.data().iter())
                        .map(|(&a, &b)| a + b)
                        .collect();
                    Tensor::from_vec(pc, ph, pw, sum).unwrap()
                } else {
                    projected
                };
            }
            LayerKind::AvgPool => {
                current = global_avgpool(&current);
            }
            LayerKind::FullyConnected => {
                let w = get_data(weights, &format!("layer{row}.weight"));
                let b = per_channel(
                    weights,
                    &format!("layer{row}.bias"),
                    layer.out_channels,
                    0.0,
                );
                head = Some(fully_connected(current.data(), w, &b).unwrap());
            }
        }
        shapes.push(match &head {
            Some(v) => DataShape::Flat(v.len()),
            None => {
                let (c, h, w) = current.shape();
                DataShape::Map {
                    channels: c,
                    height: h,
                    width: w,
                }
            }
        });
    }
    let head = head.unwrap();
    let mut logits = [0.0f32; 5];
    logits.copy_from_slice(&head[..5]);
    let mut coords = [0.0f32; 4];
    coords.copy_from_slice(&head[5..]);
    (logits, coords, shapes)
}

#[test]
fn production_forward_matches_the_naive_operator_composition() {
    let spec = build_default_spec();
    let mut weights = ModelWeights::random(&spec, 20250809);
    weights.header = WeightHeader {
        class_order: Vec::new(),
        mean: Some([0.45, 0.45, 0.45]),
        std: Some([0.25, 0.25, 0.25]),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(555);
    let input = {
        let n = 3 * 576 * 768;
        let data: Vec<f32> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        Tensor::from_vec(3, 576, 768, data).unwrap()
    };

    let model = Model::new(spec.clone(), &weights).unwrap();
    let (prediction, traces) = model.forward_traced(&input).unwrap();
    let (logits, coords, naive_shapes) = naive_forward(&spec, &weights, &input);

    let traced_shapes: Vec<DataShape> = traces.iter().map(|t| t.output).collect();
    assert_eq!(traced_shapes, naive_shapes);
    assert_eq!(traced_shapes, spec.shape_chain().unwrap());

    for (i, (a, b)) in prediction.logits.iter().zip(logits.iter()).enumerate() {
        let tolerance = 1e-4 * b.abs().max(1.0);
        assert!((a - b).abs() <= tolerance, "logit {i}: {a} vs {b}");
    }
    for (i, (a, b)) in prediction.coords.iter().zip(coords.iter()).enumerate() {
        let tolerance = 1e-4 * b.abs().max(1.0);
        assert!((a - b).abs() <= tolerance, "coord {i}: {a} vs {b}");
    }
}
