//! Compiling weights against a spec and running the forward pass.

use crate::classes::LightClass;
use crate::model::block::{bottleneck_forward, BottleneckBlock, SqueezeExcite};
use crate::model::spec::{DataShape, LayerKind, NetworkSpec, Nonlin, SE_REDUCTION};
use crate::model::weights::{validate_weights, ModelWeights, WeightTensor};
use crate::model::ModelError;
use crate::tensor::{self, ConvParams, Tensor, TensorError};

/// The two-headed network output: raw class logits plus normalized midline
/// coordinates `[x_s, y_s, x_e, y_e]`.
///
/// Logit order is the model's class order (canonical unless the weight file
/// header says otherwise). Coordinates are regression outputs: nominally in
/// `[0, 1]` but unclamped here — consumers clamp where it matters.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub logits: [f32; 5],
    pub coords: [f32; 4],
}

impl Prediction {
    /// Softmax over the logits, in the model's slot order.
    pub fn probabilities(&self) -> [f32; 5] {
        let p = tensor::softmax(&self.logits).expect("five logits");
        [p[0], p[1], p[2], p[3], p[4]]
    }
}

/// Shape observed after one layer during a traced forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    pub row: usize,
    pub label: String,
    pub output: DataShape,
}

enum RuntimeLayer {
    Conv { params: ConvParams, nonlin: Nonlin },
    MaxPool,
    Bneck(Box<BottleneckBlock>),
    AvgPool,
    Fc { weights: Vec<f32>, bias: Vec<f32> },
}

/// A validated, executable network: spec plus compiled weights.
///
/// Immutable after construction; `forward` takes `&self` and may be called
/// concurrently from many threads over one weight set.
pub struct Model {
    spec: NetworkSpec,
    layers: Vec<RuntimeLayer>,
    class_order: [LightClass; 5],
    mean: Option<[f32; 3]>,
    std: Option<[f32; 3]>,
}

struct SlotReader<'a> {
    weights: &'a ModelWeights,
}

impl<'a> SlotReader<'a> {
    fn tensor(&self, name: &str) -> &'a WeightTensor {
        // validation ran first, so required slots are present
        self.weights
            .get(name)
            .unwrap_or_else(|| panic!("validated weights are missing {name}"))
    }

    fn required(&self, name: &str) -> Vec<f32> {
        self.tensor(name).data.clone()
    }

    fn per_channel(&self, name: &str, channels: usize, default: f32) -> Vec<f32> {
        match self.weights.get(name) {
            Some(t) => t.data.clone(),
            None => vec![default; channels],
        }
    }

    fn conv(
        &self,
        prefix: &str,
        c_in: usize,
        c_out: usize,
        kernel: usize,
        stride: usize,
    ) -> Result<ConvParams, TensorError> {
        Ok(ConvParams::standard(
            c_in,
            c_out,
            kernel,
            stride,
            self.required(&format!("{prefix}.weight")),
        )?
        .with_bias(self.per_channel(&format!("{prefix}.bias"), c_out, 0.0))
        .with_scale_shift(
            self.per_channel(&format!("{prefix}.scale"), c_out, 1.0),
            self.per_channel(&format!("{prefix}.shift"), c_out, 0.0),
        ))
    }

    fn depthwise(
        &self,
        prefix: &str,
        channels: usize,
        kernel: usize,
        stride: usize,
    ) -> Result<ConvParams, TensorError> {
        Ok(ConvParams::depthwise(
            channels,
            kernel,
            stride,
            self.required(&format!("{prefix}.weight")),
        )?
        .with_bias(self.per_channel(&format!("{prefix}.bias"), channels, 0.0))
        .with_scale_shift(
            self.per_channel(&format!("{prefix}.scale"), channels, 1.0),
            self.per_channel(&format!("{prefix}.shift"), channels, 0.0),
        ))
    }
}

impl Model {
    /// Validates `weights` against `spec` and compiles the runtime graph.
    pub fn new(spec: NetworkSpec, weights: &ModelWeights) -> Result<Model, ModelError> {
        spec.validate()?;
        let report = validate_weights(weights, &spec);
        if !report.is_ok() {
            return Err(ModelError::InvalidWeights(report));
        }
        let class_order = weights.header.resolve_class_order()?;
        let reader = SlotReader { weights };
        let inputs = spec.layer_inputs()?;

        let mut layers = Vec::with_capacity(spec.layers.len());
        for (idx, layer) in spec.layers.iter().enumerate() {
            let row = idx + 1;
            let c_in = match inputs[idx] {
                DataShape::Map { channels, .. } => channels,
                DataShape::Flat(n) => n,
            };
            let wrap = |source: TensorError| ModelError::Layer {
                row,
                label: layer.kind.name().to_string(),
                source,
            };
            let runtime = match layer.kind {
                LayerKind::Conv2d => RuntimeLayer::Conv {
                    params: reader
                        .conv(
                            &format!("layer{row}"),
                            c_in,
                            layer.out_channels,
                            layer.kernel,
                            layer.stride,
                        )
                        .map_err(wrap)?,
                    nonlin: layer.nonlin.unwrap_or(Nonlin::Relu),
                },
                LayerKind::MaxPool => RuntimeLayer::MaxPool,
                LayerKind::Bottleneck => {
                    let e = layer.expansion;
                    let prefix = format!("layer{row}");
                    let expand = reader
                        .conv(&format!("{prefix}.expand"), c_in, e, 1, 1)
                        .map_err(wrap)?;
                    let depthwise = reader
                        .depthwise(&format!("{prefix}.dw"), e, layer.kernel, layer.stride)
                        .map_err(wrap)?;
                    let se = if layer.use_se {
                        let reduced = e / SE_REDUCTION;
                        Some(SqueezeExcite::new(
                            e,
                            reduced,
                            reader.required(&format!("{prefix}.se_reduce.weight")),
                            reader.per_channel(
                                &format!("{prefix}.se_reduce.bias"),
                                reduced,
                                0.0,
                            ),
                            reader.required(&format!("{prefix}.se_expand.weight")),
                            reader.per_channel(&format!("{prefix}.se_expand.bias"), e, 0.0),
                        )?)
                    } else {
                        None
                    };
                    let project = reader
                        .conv(&format!("{prefix}.project"), e, layer.out_channels, 1, 1)
                        .map_err(wrap)?;
                    RuntimeLayer::Bneck(Box::new(BottleneckBlock::new(
                        expand,
                        depthwise,
                        se,
                        project,
                        layer.nonlin.unwrap_or(Nonlin::Relu),
                    )?))
                }
                LayerKind::AvgPool => RuntimeLayer::AvgPool,
                LayerKind::FullyConnected => RuntimeLayer::Fc {
                    weights: reader.required(&format!("layer{row}.weight")),
                    bias: reader.per_channel(
                        &format!("layer{row}.bias"),
                        layer.out_channels,
                        0.0,
                    ),
                },
            };
            layers.push(runtime);
        }
        Ok(Model {
            spec,
            layers,
            class_order,
            mean: weights.header.mean,
            std: weights.header.std,
        })
    }

    /// Convenience: default spec plus loaded weights.
    pub fn from_weights(weights: &ModelWeights) -> Result<Model, ModelError> {
        Model::new(crate::model::spec::build_default_spec(), weights)
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    /// Logit slot order as classes.
    pub fn class_order(&self) -> [LightClass; 5] {
        self.class_order
    }

    /// Probabilities reordered into canonical class order, plus the argmax.
    pub fn classify(&self, prediction: &Prediction) -> (LightClass, [f32; 5]) {
        let raw = prediction.probabilities();
        let mut canonical = [0.0f32; 5];
        for (slot, class) in self.class_order.iter().enumerate() {
            canonical[class.index()] = raw[slot];
        }
        let mut best = 0;
        for i in 1..5 {
            if canonical[i] > canonical[best] {
                best = i;
            }
        }
        (LightClass::from_index(best).unwrap(), canonical)
    }

    fn normalize(&self, input: &Tensor) -> Tensor {
        if self.mean.is_none() && self.std.is_none() {
            return input.clone();
        }
        let mean = self.mean.unwrap_or([0.0; 3]);
        let std = self.std.unwrap_or([1.0; 3]);
        let (c, h, w) = input.shape();
        let mut data = Vec::with_capacity(c * h * w);
        for ch in 0..c {
            let m = mean[ch];
            let s = std[ch];
            data.extend(input.channel(ch).iter().map(|&v| (v - m) / s));
        }
        Tensor::from_vec(c, h, w, data).expect("normalization keeps the shape")
    }

    pub fn forward(&self, input: &Tensor) -> Result<Prediction, ModelError> {
        self.run(input, None)
    }

    /// Forward pass that also records every layer's output shape.
    pub fn forward_traced(
        &self,
        input: &Tensor,
    ) -> Result<(Prediction, Vec<LayerTrace>), ModelError> {
        let mut traces = Vec::with_capacity(self.layers.len());
        let prediction = self.run(input, Some(&mut traces))?;
        Ok((prediction, traces))
    }

    fn run(
        &self,
        input: &Tensor,
        mut traces: Option<&mut Vec<LayerTrace>>,
    ) -> Result<Prediction, ModelError> {
        let (c, h, w) = input.shape();
        if (c, h, w) != self.spec.input {
            return Err(ModelError::InputShape {
                expected: format!(
                    "{}x{}x{}",
                    self.spec.input.0, self.spec.input.1, self.spec.input.2
                ),
                got: format!("{c}x{h}x{w}"),
            });
        }
        let mut current = self.normalize(input);
        let mut flat: Option<Vec<f32>> = None;
        for (idx, layer) in self.layers.iter().enumerate() {
            let row = idx + 1;
            let label = self.spec.layers[idx].kind.name();
            let wrap = |source: TensorError| ModelError::Layer {
                row,
                label: label.to_string(),
                source,
            };
            match layer {
                RuntimeLayer::Conv { params, nonlin } => {
                    let out = tensor::conv2d(&current, params).map_err(wrap)?;
                    current = match nonlin {
                        Nonlin::Relu => tensor::relu(&out),
                        Nonlin::HardSwish => tensor::hard_swish(&out),
                    };
                }
                RuntimeLayer::MaxPool => {
                    current = tensor::maxpool2x2(&current).map_err(wrap)?;
                }
                RuntimeLayer::Bneck(block) => {
                    current = bottleneck_forward(&current, block)?;
                }
                RuntimeLayer::AvgPool => {
                    current = tensor::global_avgpool(&current);
                }
                RuntimeLayer::Fc { weights, bias } => {
                    let out = tensor::fully_connected(current.data(), weights, bias)
                        .map_err(wrap)?;
                    flat = Some(out);
                }
            }
            if let Some(traces) = traces.as_deref_mut() {
                let output = match &flat {
                    Some(v) => DataShape::Flat(v.len()),
                    None => {
                        let (c, h, w) = current.shape();
                        DataShape::map(c, h, w)
                    }
                };
                traces.push(LayerTrace {
                    row,
                    label: label.to_string(),
                    output,
                });
            }
        }
        let head = flat.ok_or_else(|| ModelError::Layer {
            row: self.layers.len(),
            label: "fc".to_string(),
            source: TensorError::Empty("network head"),
        })?;
        let nc = self.spec.num_classes;
        let total = nc + self.spec.num_coords;
        if head.len() != total {
            return Err(ModelError::Layer {
                row: self.layers.len(),
                label: "fc".to_string(),
                source: TensorError::LengthMismatch {
                    expected: total,
                    got: head.len(),
                },
            });
        }
        let mut logits = [0.0f32; 5];
        logits.copy_from_slice(&head[..nc]);
        let mut coords = [0.0f32; 4];
        coords.copy_from_slice(&head[nc..]);
        Ok(Prediction { logits, coords })
    }
}
