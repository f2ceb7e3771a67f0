//! Bottleneck blocks and squeeze-excite gating.
//!
//! A bottleneck is expand (1x1) -> depthwise (k x k, stride s) -> optional
//! squeeze-excite -> linear project (1x1), with a residual connection exactly
//! when stride is 1 and input and output channel counts match.

use crate::model::spec::Nonlin;
use crate::model::ModelError;
use crate::tensor::{
    self, depthwise_conv2d, fully_connected, global_avgpool, ConvParams, Tensor,
};

/// Channel-attention gate computed from globally pooled features.
///
/// Gate values come out of a hard sigmoid, so they lie in `[0, 1]` and the
/// per-channel magnitude of the output never exceeds the input's.
#[derive(Debug, Clone, PartialEq)]
pub struct SqueezeExcite {
    pub channels: usize,
    pub reduced: usize,
    /// `[reduced][channels]` row-major.
    pub reduce_weights: Vec<f32>,
    pub reduce_bias: Vec<f32>,
    /// `[channels][reduced]` row-major.
    pub expand_weights: Vec<f32>,
    pub expand_bias: Vec<f32>,
}

impl SqueezeExcite {
    pub fn new(
        channels: usize,
        reduced: usize,
        reduce_weights: Vec<f32>,
        reduce_bias: Vec<f32>,
        expand_weights: Vec<f32>,
        expand_bias: Vec<f32>,
    ) -> Result<SqueezeExcite, ModelError> {
        let check = |name: &str, got: usize, expected: usize| {
            if got != expected {
                Err(ModelError::SqueezeExciteShape {
                    part: name.to_string(),
                    expected,
                    got,
                })
            } else {
                Ok(())
            }
        };
        check("reduce_weights", reduce_weights.len(), reduced * channels)?;
        check("reduce_bias", reduce_bias.len(), reduced)?;
        check("expand_weights", expand_weights.len(), channels * reduced)?;
        check("expand_bias", expand_bias.len(), channels)?;
        Ok(SqueezeExcite {
            channels,
            reduced,
            reduce_weights,
            reduce_bias,
            expand_weights,
            expand_bias,
        })
    }

    /// The per-channel gate for a given input, in `[0, 1]`.
    pub fn gate(&self, input: &Tensor) -> Result<Vec<f32>, ModelError> {
        if input.channels() != self.channels {
            return Err(ModelError::SqueezeExciteShape {
                part: "input channels".to_string(),
                expected: self.channels,
                got: input.channels(),
            });
        }
        let pooled = global_avgpool(input);
        let squeezed = fully_connected(pooled.data(), &self.reduce_weights, &self.reduce_bias)?;
        let squeezed: Vec<f32> = squeezed.iter().map(|&v| tensor::relu_scalar(v)).collect();
        let expanded = fully_connected(&squeezed, &self.expand_weights, &self.expand_bias)?;
        Ok(expanded
            .iter()
            .map(|&v| tensor::hard_sigmoid_scalar(v))
            .collect())
    }
}

/// Scales every channel of `input` by its squeeze-excite gate.
pub fn squeeze_excite(input: &Tensor, se: &SqueezeExcite) -> Result<Tensor, ModelError> {
    let gate = se.gate(input)?;
    let (c, h, w) = input.shape();
    let mut out = Vec::with_capacity(c * h * w);
    for (ch, &g) in gate.iter().enumerate() {
        out.extend(input.channel(ch).iter().map(|&v| v * g));
    }
    Ok(Tensor::from_vec(c, h, w, out).expect("gated tensor keeps its shape"))
}

/// Fully parameterized bottleneck block.
#[derive(Debug, Clone, PartialEq)]
pub struct BottleneckBlock {
    pub expand: ConvParams,
    pub depthwise: ConvParams,
    pub se: Option<SqueezeExcite>,
    pub project: ConvParams,
    pub nonlin: Nonlin,
    pub residual: bool,
}

impl BottleneckBlock {
    /// Assembles a block and decides the residual flag from its geometry.
    pub fn new(
        expand: ConvParams,
        depthwise: ConvParams,
        se: Option<SqueezeExcite>,
        project: ConvParams,
        nonlin: Nonlin,
    ) -> Result<BottleneckBlock, ModelError> {
        let expansion = expand.out_channels;
        if depthwise.in_channels != expansion || depthwise.out_channels != expansion {
            return Err(ModelError::BlockWiring {
                detail: format!(
                    "depthwise runs on {} channels but expansion is {expansion}",
                    depthwise.in_channels
                ),
            });
        }
        if project.in_channels != expansion {
            return Err(ModelError::BlockWiring {
                detail: format!(
                    "projection consumes {} channels but expansion is {expansion}",
                    project.in_channels
                ),
            });
        }
        if let Some(se) = &se {
            if se.channels != expansion {
                return Err(ModelError::BlockWiring {
                    detail: format!(
                        "squeeze-excite gates {} channels but expansion is {expansion}",
                        se.channels
                    ),
                });
            }
        }
        let residual =
            depthwise.stride == 1 && expand.in_channels == project.out_channels;
        Ok(BottleneckBlock {
            expand,
            depthwise,
            se,
            project,
            nonlin,
            residual,
        })
    }

    pub fn in_channels(&self) -> usize {
        self.expand.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.project.out_channels
    }

    pub fn stride(&self) -> usize {
        self.depthwise.stride
    }
}

fn apply_nonlin(t: &Tensor, nl: Nonlin) -> Tensor {
    match nl {
        Nonlin::Relu => tensor::relu(t),
        Nonlin::HardSwish => tensor::hard_swish(t),
    }
}

/// Runs one bottleneck block: expand -> depthwise -> (SE) -> project, adding
/// the input back when the residual flag is set.
pub fn bottleneck_forward(input: &Tensor, block: &BottleneckBlock) -> Result<Tensor, ModelError> {
    if input.channels() != block.in_channels() {
        return Err(ModelError::BlockWiring {
            detail: format!(
                "block expects {} input channels, tensor has {}",
                block.in_channels(),
                input.channels()
            ),
        });
    }
    let expanded = apply_nonlin(&tensor::conv2d(input, &block.expand)?, block.nonlin);
    let filtered = apply_nonlin(
        &depthwise_conv2d(&expanded, &block.depthwise)?,
        block.nonlin,
    );
    let gated = match &block.se {
        Some(se) => squeeze_excite(&filtered, se)?,
        None => filtered,
    };
    let projected = tensor::conv2d(&gated, &block.project)?;
    if !block.residual {
        return Ok(projected);
    }
    let (c, h, w) = projected.shape();
    let sum: Vec<f32> = projected
        .data()
        .iter()
        .zip(input.data().iter())
        .map(|(&a, &b)| a + b)
        .collect();
    Tensor::from_vec(c, h, w, sum).map_err(ModelError::from)
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)] // oracle code reads better index-style
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize, lo: f32, hi: f32) -> Vec<f32> {
        (0..n).map(|_| rng.random_range(lo..hi)).collect()
    }

    fn random_block(
        rng: &mut ChaCha8Rng,
        c_in: usize,
        e: usize,
        c_out: usize,
        k: usize,
        s: usize,
        with_se: bool,
    ) -> BottleneckBlock {
        let expand = ConvParams::standard(c_in, e, 1, 1, random_vec(rng, c_in * e, -0.4, 0.4))
            .unwrap()
            .with_scale_shift(
                random_vec(rng, e, 0.8, 1.2),
                random_vec(rng, e, -0.1, 0.1),
            );
        let depthwise =
            ConvParams::depthwise(e, k, s, random_vec(rng, e * k * k, -0.4, 0.4)).unwrap();
        let se = with_se.then(|| {
            let reduced = e / 4;
            SqueezeExcite::new(
                e,
                reduced,
                random_vec(rng, reduced * e, -0.4, 0.4),
                random_vec(rng, reduced, -0.1, 0.1),
                random_vec(rng, e * reduced, -0.4, 0.4),
                random_vec(rng, e, -0.1, 0.1),
            )
            .unwrap()
        });
        let project = ConvParams::standard(e, c_out, 1, 1, random_vec(rng, e * c_out, -0.4, 0.4))
            .unwrap();
        BottleneckBlock::new(expand, depthwise, se, project, Nonlin::Relu).unwrap()
    }

    fn random_tensor(rng: &mut ChaCha8Rng, c: usize, h: usize, w: usize) -> Tensor {
        Tensor::from_vec(c, h, w, random_vec(rng, c * h * w, -1.0, 1.0)).unwrap()
    }

    #[test]
    fn zero_block_is_residual_passthrough() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let input = random_tensor(&mut rng, 8, 6, 6);
        let expand = ConvParams::standard(8, 16, 1, 1, vec![0.0; 8 * 16]).unwrap();
        let depthwise = ConvParams::depthwise(16, 3, 1, vec![0.0; 16 * 9]).unwrap();
        let project = ConvParams::standard(16, 8, 1, 1, vec![0.0; 16 * 8]).unwrap();
        let block =
            BottleneckBlock::new(expand, depthwise, None, project, Nonlin::Relu).unwrap();
        assert!(block.residual);
        let out = bottleneck_forward(&input, &block).unwrap();
        assert_eq!(out.data(), input.data());
    }

    #[test]
    fn stride_two_block_has_no_residual_and_halves_spatial_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let block = random_block(&mut rng, 8, 16, 8, 3, 2, false);
        assert!(!block.residual);
        let input = random_tensor(&mut rng, 8, 6, 10);
        let out = bottleneck_forward(&input, &block).unwrap();
        assert_eq!(out.shape(), (8, 3, 5));
    }

    #[test]
    fn residual_rule_follows_geometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // stride 1 but channel change: no residual
        let block = random_block(&mut rng, 8, 16, 12, 3, 1, false);
        assert!(!block.residual);
        // stride 1, same channels: residual
        let block = random_block(&mut rng, 8, 16, 8, 3, 1, false);
        assert!(block.residual);
    }

    #[test]
    fn block_matches_hand_composed_pipeline() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let block = random_block(&mut rng, 6, 24, 6, 5, 1, true);
        let input = random_tensor(&mut rng, 6, 8, 8);

        let out = bottleneck_forward(&input, &block).unwrap();

        // step-by-step composition through the public operators
        let x = tensor::relu(&tensor::conv2d(&input, &block.expand).unwrap());
        let x = tensor::relu(&depthwise_conv2d(&x, &block.depthwise).unwrap());
        let x = squeeze_excite(&x, block.se.as_ref().unwrap()).unwrap();
        let x = tensor::conv2d(&x, &block.project).unwrap();
        let expected: Vec<f32> = x
            .data()
            .iter()
            .zip(input.data().iter())
            .map(|(&a, &b)| a + b)
            .collect();

        for (a, b) in out.data().iter().zip(expected.iter()) {
            assert!((a - b).abs() <= 1e-5 * b.abs().max(1.0));
        }
    }

    #[test]
    fn se_saturation_forces_gate_to_the_rails() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let input = random_tensor(&mut rng, 4, 3, 3);

        // all-zero weights, expand bias +3 -> pre-sigmoid exactly +3 -> gate 1
        let open = SqueezeExcite::new(
            4,
            2,
            vec![0.0; 8],
            vec![0.0; 2],
            vec![0.0; 8],
            vec![3.0; 4],
        )
        .unwrap();
        let out = squeeze_excite(&input, &open).unwrap();
        assert_eq!(out.data(), input.data());

        // expand bias -3 -> gate 0
        let closed = SqueezeExcite::new(
            4,
            2,
            vec![0.0; 8],
            vec![0.0; 2],
            vec![0.0; 8],
            vec![-3.0; 4],
        )
        .unwrap();
        let out = squeeze_excite(&input, &closed).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn se_matches_step_by_step_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let channels = 8;
        let reduced = 2;
        let se = SqueezeExcite::new(
            channels,
            reduced,
            random_vec(&mut rng, reduced * channels, -0.5, 0.5),
            random_vec(&mut rng, reduced, -0.2, 0.2),
            random_vec(&mut rng, channels * reduced, -0.5, 0.5),
            random_vec(&mut rng, channels, -0.2, 0.2),
        )
        .unwrap();
        let input = random_tensor(&mut rng, channels, 4, 4);
        let out = squeeze_excite(&input, &se).unwrap();

        for c in 0..channels {
            // hand-computed gate
            let means: Vec<f64> = (0..channels)
                .map(|ch| {
                    input.channel(ch).iter().map(|&v| v as f64).sum::<f64>() / 16.0
                })
                .collect();
            let mut hidden = vec![0.0f64; reduced];
            for r in 0..reduced {
                let mut acc = se.reduce_bias[r] as f64;
                for ch in 0..channels {
                    acc += se.reduce_weights[r * channels + ch] as f64 * means[ch];
                }
                hidden[r] = acc.max(0.0);
            }
            let mut pre = se.expand_bias[c] as f64;
            for r in 0..reduced {
                pre += se.expand_weights[c * reduced + r] as f64 * hidden[r];
            }
            let gate = ((pre + 3.0).clamp(0.0, 6.0)) / 6.0;
            for (y, x) in (0..4).flat_map(|y| (0..4).map(move |x| (y, x))) {
                let expected = input.get(c, y, x) as f64 * gate;
                assert!(
                    (out.get(c, y, x) as f64 - expected).abs() < 1e-6,
                    "channel {c}"
                );
            }
        }
    }

    #[test]
    fn se_gate_bounds_the_output_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let se = SqueezeExcite::new(
                4,
                2,
                random_vec(&mut rng, 8, -2.0, 2.0),
                random_vec(&mut rng, 2, -2.0, 2.0),
                random_vec(&mut rng, 8, -2.0, 2.0),
                random_vec(&mut rng, 4, -2.0, 2.0),
            )
            .unwrap();
            let input = random_tensor(&mut rng, 4, 3, 5);
            let gate = se.gate(&input).unwrap();
            assert!(gate.iter().all(|&g| (0.0..=1.0).contains(&g)));
            let out = squeeze_excite(&input, &se).unwrap();
            for c in 0..4 {
                let max_in = input.channel(c).iter().fold(0.0f32, |m, v| m.max(v.abs()));
                let max_out = out.channel(c).iter().fold(0.0f32, |m, v| m.max(v.abs()));
                assert!(max_out <= max_in + 1e-6);
            }
        }
    }

    #[test]
    fn mismatched_wiring_is_rejected() {
        let expand = ConvParams::standard(8, 16, 1, 1, vec![0.0; 8 * 16]).unwrap();
        let depthwise = ConvParams::depthwise(12, 3, 1, vec![0.0; 12 * 9]).unwrap();
        let project = ConvParams::standard(16, 8, 1, 1, vec![0.0; 16 * 8]).unwrap();
        assert!(matches!(
            BottleneckBlock::new(expand, depthwise, None, project, Nonlin::Relu),
            Err(ModelError::BlockWiring { .. })
        ));
    }
}
