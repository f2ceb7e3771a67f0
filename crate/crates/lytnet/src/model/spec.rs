//! Declarative description of the network graph.
//!
//! The default spec is the published LytNetV2 layer table. One correction is
//! applied: the table lists the first bottleneck's input as a 384-wide map,
//! but that row follows a stride-2 maxpool on a 384-wide map, so it actually
//! operates at 192x144 — the only reading under which the shape chain reaches
//! the final 12x9 map. See `docs/architecture.md`.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("layer {row}: kernel size {k} not in {{1, 3, 5}}")]
    BadKernel { row: usize, k: usize },
    #[error("layer {row}: stride {s} not in {{1, 2}}")]
    BadStride { row: usize, s: usize },
    #[error("layer {row}: expansion {e} smaller than output channels {c}")]
    ExpansionTooSmall { row: usize, e: usize, c: usize },
    #[error("layer {row}: squeeze-excite requires expansion divisible by {r}, got {e}")]
    SqueezeExciteDims { row: usize, e: usize, r: usize },
    #[error("layer {row}: maxpool requires even spatial dims, got {h}x{w}")]
    MaxPoolOddInput { row: usize, h: usize, w: usize },
    #[error("layer {row}: {kind} cannot follow a flattened output")]
    AfterFlatten { row: usize, kind: &'static str },
    #[error("spec has no layers")]
    Empty,
}

/// Squeeze-excite reduction ratio (MobileNetV3 convention).
pub const SE_REDUCTION: usize = 4;

/// Network input shape: `(channels, height, width)`.
pub const INPUT_SHAPE: (usize, usize, usize) = (3, 576, 768);

/// Classification head width (number of light classes).
pub const NUM_CLASSES: usize = 5;

/// Regression head width (midline start/end coordinates).
pub const NUM_COORDS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv2d,
    MaxPool,
    Bottleneck,
    AvgPool,
    FullyConnected,
}

impl LayerKind {
    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Conv2d => "conv2d",
            LayerKind::MaxPool => "maxpool",
            LayerKind::Bottleneck => "bneck",
            LayerKind::AvgPool => "avgpool",
            LayerKind::FullyConnected => "fc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nonlin {
    Relu,
    HardSwish,
}

impl Nonlin {
    pub fn name(self) -> &'static str {
        match self {
            Nonlin::Relu => "RE",
            Nonlin::HardSwish => "HS",
        }
    }
}

/// One row of the network table.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    /// Kernel size; 2 for the maxpool row, unused for avgpool/fc.
    pub kernel: usize,
    /// Bottleneck expansion width; 0 elsewhere.
    pub expansion: usize,
    /// Output channels; for the fc row this is the total head width.
    pub out_channels: usize,
    pub use_se: bool,
    pub nonlin: Option<Nonlin>,
    pub stride: usize,
}

impl LayerSpec {
    pub fn conv(kernel: usize, out_channels: usize, nonlin: Nonlin, stride: usize) -> LayerSpec {
        LayerSpec {
            kind: LayerKind::Conv2d,
            kernel,
            expansion: 0,
            out_channels,
            use_se: false,
            nonlin: Some(nonlin),
            stride,
        }
    }

    pub fn maxpool() -> LayerSpec {
        LayerSpec {
            kind: LayerKind::MaxPool,
            kernel: 2,
            expansion: 0,
            out_channels: 0,
            use_se: false,
            nonlin: None,
            stride: 2,
        }
    }

    pub fn bneck(
        kernel: usize,
        expansion: usize,
        out_channels: usize,
        use_se: bool,
        nonlin: Nonlin,
        stride: usize,
    ) -> LayerSpec {
        LayerSpec {
            kind: LayerKind::Bottleneck,
            kernel,
            expansion,
            out_channels,
            use_se,
            nonlin: Some(nonlin),
            stride,
        }
    }

    pub fn avgpool() -> LayerSpec {
        LayerSpec {
            kind: LayerKind::AvgPool,
            kernel: 0,
            expansion: 0,
            out_channels: 0,
            use_se: false,
            nonlin: None,
            stride: 1,
        }
    }

    pub fn fully_connected(out: usize) -> LayerSpec {
        LayerSpec {
            kind: LayerKind::FullyConnected,
            kernel: 0,
            expansion: 0,
            out_channels: out,
            use_se: false,
            nonlin: None,
            stride: 1,
        }
    }
}

/// Shape flowing between layers: a feature map or a flattened vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataShape {
    Map { channels: usize, height: usize, width: usize },
    Flat(usize),
}

impl DataShape {
    pub fn map(channels: usize, height: usize, width: usize) -> DataShape {
        DataShape::Map {
            channels,
            height,
            width,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            DataShape::Map {
                channels,
                height,
                width,
            } => format!("{channels}x{height}x{width}"),
            DataShape::Flat(n) => format!("{n}"),
        }
    }
}

/// The whole graph plus its input shape and head widths.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub layers: Vec<LayerSpec>,
    pub input: (usize, usize, usize),
    pub num_classes: usize,
    pub num_coords: usize,
}

/// Spatial output size of a same-padded convolution: `ceil(n / stride)`.
fn ceil_div(n: usize, stride: usize) -> usize {
    n.div_ceil(stride)
}

impl NetworkSpec {
    /// Validates every row and returns the post-layer shape chain.
    pub fn shape_chain(&self) -> Result<Vec<DataShape>, SpecError> {
        if self.layers.is_empty() {
            return Err(SpecError::Empty);
        }
        let mut shapes = Vec::with_capacity(self.layers.len());
        let mut current = DataShape::map(self.input.0, self.input.1, self.input.2);
        for (idx, layer) in self.layers.iter().enumerate() {
            let row = idx + 1;
            current = next_shape(row, layer, current)?;
            shapes.push(current);
        }
        Ok(shapes)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        self.shape_chain().map(|_| ())
    }

    /// Input shape of each row (the shape the previous row produced).
    pub fn layer_inputs(&self) -> Result<Vec<DataShape>, SpecError> {
        let chain = self.shape_chain()?;
        let mut inputs = Vec::with_capacity(chain.len());
        inputs.push(DataShape::map(self.input.0, self.input.1, self.input.2));
        inputs.extend(chain[..chain.len() - 1].iter().copied());
        Ok(inputs)
    }

    pub fn stride_two_stages(&self) -> usize {
        self.layers.iter().filter(|l| l.stride == 2).count()
    }
}

fn next_shape(row: usize, layer: &LayerSpec, input: DataShape) -> Result<DataShape, SpecError> {
    let (c, h, w) = match input {
        DataShape::Map {
            channels,
            height,
            width,
        } => (channels, height, width),
        DataShape::Flat(n) => {
            // only the fc head may consume a flattened vector
            if layer.kind != LayerKind::FullyConnected {
                return Err(SpecError::AfterFlatten {
                    row,
                    kind: layer.kind.name(),
                });
            }
            let _ = n;
            (n, 1, 1)
        }
    };
    match layer.kind {
        LayerKind::Conv2d | LayerKind::Bottleneck => {
            if !matches!(layer.kernel, 1 | 3 | 5) {
                return Err(SpecError::BadKernel {
                    row,
                    k: layer.kernel,
                });
            }
            if !matches!(layer.stride, 1 | 2) {
                return Err(SpecError::BadStride {
                    row,
                    s: layer.stride,
                });
            }
            if layer.kind == LayerKind::Bottleneck {
                if layer.expansion < layer.out_channels {
                    return Err(SpecError::ExpansionTooSmall {
                        row,
                        e: layer.expansion,
                        c: layer.out_channels,
                    });
                }
                if layer.use_se && !layer.expansion.is_multiple_of(SE_REDUCTION) {
                    return Err(SpecError::SqueezeExciteDims {
                        row,
                        e: layer.expansion,
                        r: SE_REDUCTION,
                    });
                }
            }
            Ok(DataShape::map(
                layer.out_channels,
                ceil_div(h, layer.stride),
                ceil_div(w, layer.stride),
            ))
        }
        LayerKind::MaxPool => {
            if h % 2 != 0 || w % 2 != 0 {
                return Err(SpecError::MaxPoolOddInput { row, h, w });
            }
            Ok(DataShape::map(c, h / 2, w / 2))
        }
        LayerKind::AvgPool => Ok(DataShape::map(c, 1, 1)),
        LayerKind::FullyConnected => Ok(DataShape::Flat(layer.out_channels)),
    }
}

/// The 17-row LytNetV2 graph for a `(3, 576, 768)` input.
pub fn build_default_spec() -> NetworkSpec {
    use Nonlin::{HardSwish as HS, Relu as RE};
    let layers = vec![
        LayerSpec::conv(3, 16, HS, 2),            // 1
        LayerSpec::maxpool(),                     // 2
        LayerSpec::bneck(3, 16, 16, false, RE, 1), // 3 (operates at 192x144, see module docs)
        LayerSpec::bneck(3, 64, 24, false, RE, 2), // 4
        LayerSpec::bneck(3, 72, 24, false, RE, 1), // 5
        LayerSpec::bneck(5, 72, 40, true, RE, 2), // 6
        LayerSpec::bneck(5, 120, 40, true, RE, 1), // 7
        LayerSpec::bneck(3, 240, 80, false, HS, 2), // 8
        LayerSpec::bneck(3, 200, 80, false, HS, 1), // 9
        LayerSpec::bneck(3, 480, 112, true, HS, 1), // 10
        LayerSpec::bneck(5, 672, 160, true, HS, 2), // 11
        LayerSpec::bneck(5, 960, 160, true, HS, 1), // 12
        LayerSpec::bneck(3, 960, 320, false, RE, 1), // 13
        LayerSpec::conv(1, 960, HS, 1),           // 14
        LayerSpec::avgpool(),                     // 15
        LayerSpec::conv(1, 1280, HS, 1),          // 16
        LayerSpec::fully_connected(NUM_CLASSES + NUM_COORDS), // 17
    ];
    NetworkSpec {
        layers,
        input: INPUT_SHAPE,
        num_classes: NUM_CLASSES,
        num_coords: NUM_COORDS,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_validates() {
        build_default_spec().validate().unwrap();
    }

    #[test]
    fn default_spec_rows_match_the_table() {
        let spec = build_default_spec();
        assert_eq!(spec.layers.len(), 17);

        let row1 = &spec.layers[0];
        assert_eq!(row1.kind, LayerKind::Conv2d);
        assert_eq!(row1.kernel, 3);
        assert_eq!(row1.out_channels, 16);
        assert_eq!(row1.nonlin, Some(Nonlin::HardSwish));
        assert_eq!(row1.stride, 2);

        let row11 = &spec.layers[10];
        assert_eq!(row11.kind, LayerKind::Bottleneck);
        assert_eq!(row11.kernel, 5);
        assert_eq!(row11.expansion, 672);
        assert_eq!(row11.out_channels, 160);
        assert!(row11.use_se);
        assert_eq!(row11.nonlin, Some(Nonlin::HardSwish));
        assert_eq!(row11.stride, 2);
    }

    #[test]
    fn six_stride_two_stages_take_768_to_12() {
        let spec = build_default_spec();
        assert_eq!(spec.stride_two_stages(), 6);
        assert_eq!(768 >> 6, 12);
    }

    #[test]
    fn shape_chain_reaches_the_final_map() {
        let spec = build_default_spec();
        let chain = spec.shape_chain().unwrap();

        // widths halve at each stride-2 stage, heights stay 3/4 of widths
        let widths: Vec<usize> = chain
            .iter()
            .filter_map(|s| match s {
                DataShape::Map { width, .. } => Some(*width),
                DataShape::Flat(_) => None,
            })
            .collect();
        let mut distinct: Vec<usize> = widths.clone();
        distinct.dedup();
        assert_eq!(distinct, vec![384, 192, 96, 48, 24, 12, 1]);
        for shape in &chain {
            if let DataShape::Map { height, width, .. } = shape {
                if *width > 1 {
                    assert_eq!(*height * 4, *width * 3, "height must be 3/4 of width");
                }
            }
        }

        // pre-avgpool map and head
        assert_eq!(chain[13], DataShape::map(960, 9, 12));
        assert_eq!(chain[14], DataShape::map(960, 1, 1));
        assert_eq!(chain[15], DataShape::map(1280, 1, 1));
        assert_eq!(chain[16], DataShape::Flat(9));
    }

    #[test]
    fn first_bottleneck_operates_on_the_pooled_map() {
        let spec = build_default_spec();
        let inputs = spec.layer_inputs().unwrap();
        // row 3 input is the 192x144 map the maxpool produced
        assert_eq!(inputs[2], DataShape::map(16, 144, 192));
    }

    #[test]
    fn invalid_rows_are_rejected() {
        let mut spec = build_default_spec();
        spec.layers[3].kernel = 4;
        assert!(matches!(
            spec.validate(),
            Err(SpecError::BadKernel { row: 4, k: 4 })
        ));

        let mut spec = build_default_spec();
        spec.layers[3].expansion = 8;
        assert!(matches!(
            spec.validate(),
            Err(SpecError::ExpansionTooSmall { row: 4, .. })
        ));

        let mut spec = build_default_spec();
        spec.layers[5].expansion = 70; // not divisible by 4
        assert!(matches!(
            spec.validate(),
            Err(SpecError::SqueezeExciteDims { row: 6, .. })
        ));
    }
}
