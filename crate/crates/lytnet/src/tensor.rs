//! Dense rank-3 tensors and the neural operators needed to execute the
//! network: convolutions, pooling, activations, and affine maps.
//!
//! Layout is channel-major (`[channel][row][column]`), storage is `f32`, and
//! every reduction accumulates in `f64` in a fixed order, so results are
//! deterministic and independent of how callers schedule work.
//! [`naive_conv2d`] is the textbook reference implementation; the optimized
//! [`conv2d`] / [`depthwise_conv2d`] paths are validated against it in tests
//! and must agree within 1e-5 relative.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("invalid shape {channels}x{height}x{width}: all dimensions must be at least 1")]
    InvalidShape {
        channels: usize,
        height: usize,
        width: usize,
    },
    #[error("data length {got} does not match shape {channels}x{height}x{width}")]
    DataLength {
        channels: usize,
        height: usize,
        width: usize,
        got: usize,
    },
    #[error("channel mismatch: operator expects {expected} input channels, tensor has {got}")]
    ChannelMismatch { expected: usize, got: usize },
    #[error("depthwise convolution requires out_channels == in_channels, got {out} != {inp}")]
    DepthwiseChannels { inp: usize, out: usize },
    #[error("weight block has {got} elements, expected {expected}")]
    WeightCount { expected: usize, got: usize },
    #[error("per-channel vector has length {got}, expected {expected}")]
    PerChannelLength { expected: usize, got: usize },
    #[error("stride must be 1 or 2, got {0}")]
    BadStride(usize),
    #[error("kernel {kh}x{kw} with padding {padding} does not fit input {height}x{width}")]
    KernelTooLarge {
        kh: usize,
        kw: usize,
        padding: usize,
        height: usize,
        width: usize,
    },
    #[error("maxpool2x2 requires even spatial dimensions, got {height}x{width}")]
    OddDimensions { height: usize, width: usize },
    #[error("input length {got} does not match weight columns {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("empty input to {0}")]
    Empty(&'static str),
}

/// Dense rank-3 array in `(channels, height, width)` order.
///
/// Data is flat, channel-major then row-major. All dimensions are at least 1
/// and every element is finite; constructors and operators enforce both.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Tensor {
    /// Zero-filled tensor.
    pub fn zeros(channels: usize, height: usize, width: usize) -> Result<Tensor, TensorError> {
        check_shape(channels, height, width)?;
        Ok(Tensor {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        })
    }

    pub fn from_vec(
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<f32>,
    ) -> Result<Tensor, TensorError> {
        check_shape(channels, height, width)?;
        if data.len() != channels * height * width {
            return Err(TensorError::DataLength {
                channels,
                height,
                width,
                got: data.len(),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(TensorError::NonFinite("tensor construction"));
        }
        Ok(Tensor {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        debug_assert!(c < self.channels && y < self.height && x < self.width);
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, value: f32) {
        debug_assert!(c < self.channels && y < self.height && x < self.width);
        self.data[(c * self.height + y) * self.width + x] = value;
    }

    /// Contiguous slice holding one channel plane.
    pub fn channel(&self, c: usize) -> &[f32] {
        let plane = self.height * self.width;
        &self.data[c * plane..(c + 1) * plane]
    }

    /// Contiguous slice holding one row of one channel.
    #[inline]
    pub fn row(&self, c: usize, y: usize) -> &[f32] {
        let start = (c * self.height + y) * self.width;
        &self.data[start..start + self.width]
    }

    /// Elementwise map. The result must stay finite.
    pub fn map(&self, f: impl Fn(f32) -> f32) -> Tensor {
        Tensor {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    fn from_parts(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Tensor {
        debug_assert_eq!(data.len(), channels * height * width);
        Tensor {
            channels,
            height,
            width,
            data,
        }
    }
}

fn check_shape(channels: usize, height: usize, width: usize) -> Result<(), TensorError> {
    if channels == 0 || height == 0 || width == 0 {
        return Err(TensorError::InvalidShape {
            channels,
            height,
            width,
        });
    }
    Ok(())
}

/// Parameters of a 2-D convolution, normalization folded in.
///
/// Weight layout for a standard convolution is
/// `[out_channel][in_channel][ky][kx]`; for a depthwise convolution there is
/// one filter per channel, laid out `[channel][ky][kx]`. Each output element
/// is `scale[oc] * (dot + bias[oc]) + shift[oc]` with the dot product
/// accumulated over `(in_channel, ky, kx)` in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    pub kernel: (usize, usize),
    pub stride: usize,
    pub padding: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
    pub scale: Vec<f32>,
    pub shift: Vec<f32>,
}

impl ConvParams {
    /// Standard convolution with "same" padding (`pad = k / 2`), so output
    /// spatial size is `ceil(input / stride)`.
    pub fn standard(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        weights: Vec<f32>,
    ) -> Result<ConvParams, TensorError> {
        let params = ConvParams {
            kernel: (kernel, kernel),
            stride,
            padding: kernel / 2,
            in_channels,
            out_channels,
            weights,
            bias: vec![0.0; out_channels],
            scale: vec![1.0; out_channels],
            shift: vec![0.0; out_channels],
        };
        params.validate(false)?;
        Ok(params)
    }

    /// Depthwise convolution: one `k x k` filter per channel, "same" padding.
    pub fn depthwise(
        channels: usize,
        kernel: usize,
        stride: usize,
        weights: Vec<f32>,
    ) -> Result<ConvParams, TensorError> {
        let params = ConvParams {
            kernel: (kernel, kernel),
            stride,
            padding: kernel / 2,
            in_channels: channels,
            out_channels: channels,
            weights,
            bias: vec![0.0; channels],
            scale: vec![1.0; channels],
            shift: vec![0.0; channels],
        };
        params.validate(true)?;
        Ok(params)
    }

    pub fn with_bias(mut self, bias: Vec<f32>) -> ConvParams {
        self.bias = bias;
        self
    }

    pub fn with_scale_shift(mut self, scale: Vec<f32>, shift: Vec<f32>) -> ConvParams {
        self.scale = scale;
        self.shift = shift;
        self
    }

    fn expected_weight_count(&self, depthwise: bool) -> usize {
        let (kh, kw) = self.kernel;
        if depthwise {
            self.out_channels * kh * kw
        } else {
            self.in_channels * self.out_channels * kh * kw
        }
    }

    fn validate(&self, depthwise: bool) -> Result<(), TensorError> {
        if self.stride != 1 && self.stride != 2 {
            return Err(TensorError::BadStride(self.stride));
        }
        if depthwise && self.in_channels != self.out_channels {
            return Err(TensorError::DepthwiseChannels {
                inp: self.in_channels,
                out: self.out_channels,
            });
        }
        let expected = self.expected_weight_count(depthwise);
        if self.weights.len() != expected {
            return Err(TensorError::WeightCount {
                expected,
                got: self.weights.len(),
            });
        }
        for (vec, expected) in [
            (&self.bias, self.out_channels),
            (&self.scale, self.out_channels),
            (&self.shift, self.out_channels),
        ] {
            if vec.len() != expected {
                return Err(TensorError::PerChannelLength {
                    expected,
                    got: vec.len(),
                });
            }
        }
        let finite = self.weights.iter().all(|v| v.is_finite())
            && self.bias.iter().all(|v| v.is_finite())
            && self.scale.iter().all(|v| v.is_finite())
            && self.shift.iter().all(|v| v.is_finite());
        if !finite {
            return Err(TensorError::NonFinite("convolution parameters"));
        }
        Ok(())
    }

    fn output_size(&self, height: usize, width: usize) -> Result<(usize, usize), TensorError> {
        let (kh, kw) = self.kernel;
        if height + 2 * self.padding < kh || width + 2 * self.padding < kw {
            return Err(TensorError::KernelTooLarge {
                kh,
                kw,
                padding: self.padding,
                height,
                width,
            });
        }
        let oh = (height + 2 * self.padding - kh) / self.stride + 1;
        let ow = (width + 2 * self.padding - kw) / self.stride + 1;
        Ok((oh, ow))
    }
}

fn check_conv_input(input: &Tensor, params: &ConvParams) -> Result<(), TensorError> {
    if input.channels() != params.in_channels {
        return Err(TensorError::ChannelMismatch {
            expected: params.in_channels,
            got: input.channels(),
        });
    }
    Ok(())
}

#[inline]
fn finish_channel(acc: f64, bias: f32, scale: f32, shift: f32) -> f32 {
    (scale as f64 * (acc + bias as f64) + shift as f64) as f32
}

/// Standard 2-D convolution.
///
/// Zero padding, per-channel bias then folded scale/shift. Accumulation runs
/// over `(in_channel, ky, kx)` per output element, hoisted so the inner loop
/// walks contiguous input rows.
pub fn conv2d(input: &Tensor, params: &ConvParams) -> Result<Tensor, TensorError> {
    check_conv_input(input, params)?;
    params.validate(false)?;
    let (c_in, h, w) = input.shape();
    let (kh, kw) = params.kernel;
    let (oh, ow) = params.output_size(h, w)?;
    let stride = params.stride;
    let pad = params.padding as isize;

    let mut out = vec![0.0f32; params.out_channels * oh * ow];
    let mut acc_row = vec![0.0f64; ow];
    for oc in 0..params.out_channels {
        let w_oc = &params.weights[oc * c_in * kh * kw..(oc + 1) * c_in * kh * kw];
        for oy in 0..oh {
            acc_row.iter_mut().for_each(|a| *a = 0.0);
            for ic in 0..c_in {
                let w_ic = &w_oc[ic * kh * kw..(ic + 1) * kh * kw];
                for ky in 0..kh {
                    let iy = (oy * stride + ky) as isize - pad;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let row = input.row(ic, iy as usize);
                    for kx in 0..kw {
                        let weight = w_ic[ky * kw + kx] as f64;
                        if weight == 0.0 {
                            continue;
                        }
                        // valid ox range: 0 <= ox*stride + kx - pad < w
                        let off = kx as isize - pad;
                        let lo = if off < 0 {
                            ((-off) as usize).div_ceil(stride)
                        } else {
                            0
                        };
                        let hi_excl = {
                            let max_ix = w as isize - 1 - off;
                            if max_ix < 0 {
                                0
                            } else {
                                (max_ix as usize / stride + 1).min(ow)
                            }
                        };
                        if lo >= hi_excl {
                            continue;
                        }
                        let first_ix = ((lo * stride) as isize + off) as usize;
                        for (acc, &x) in acc_row[lo..hi_excl]
                            .iter_mut()
                            .zip(row[first_ix..].iter().step_by(stride))
                        {
                            *acc += weight * x as f64;
                        }
                    }
                }
            }
            let dst = &mut out[(oc * oh + oy) * ow..(oc * oh + oy + 1) * ow];
            for (d, &acc) in dst.iter_mut().zip(acc_row.iter()) {
                *d = finish_channel(acc, params.bias[oc], params.scale[oc], params.shift[oc]);
            }
        }
    }
    if !out.iter().all(|v| v.is_finite()) {
        return Err(TensorError::NonFinite("conv2d output"));
    }
    Ok(Tensor::from_parts(params.out_channels, oh, ow, out))
}

/// Depthwise 2-D convolution: channel `i` of the output depends only on
/// channel `i` of the input.
pub fn depthwise_conv2d(input: &Tensor, params: &ConvParams) -> Result<Tensor, TensorError> {
    check_conv_input(input, params)?;
    params.validate(true)?;
    let (channels, h, w) = input.shape();
    let (kh, kw) = params.kernel;
    let (oh, ow) = params.output_size(h, w)?;
    let stride = params.stride;
    let pad = params.padding as isize;

    let mut out = vec![0.0f32; channels * oh * ow];
    let mut acc_row = vec![0.0f64; ow];
    for c in 0..channels {
        let w_c = &params.weights[c * kh * kw..(c + 1) * kh * kw];
        for oy in 0..oh {
            acc_row.iter_mut().for_each(|a| *a = 0.0);
            for ky in 0..kh {
                let iy = (oy * stride + ky) as isize - pad;
                if iy < 0 || iy >= h as isize {
                    continue;
                }
                let row = input.row(c, iy as usize);
                for kx in 0..kw {
                    let weight = w_c[ky * kw + kx] as f64;
                    if weight == 0.0 {
                        continue;
                    }
                    let off = kx as isize - pad;
                    let lo = if off < 0 {
                        ((-off) as usize).div_ceil(stride)
                    } else {
                        0
                    };
                    let hi_excl = {
                        let max_ix = w as isize - 1 - off;
                        if max_ix < 0 {
                            0
                        } else {
                            (max_ix as usize / stride + 1).min(ow)
                        }
                    };
                    if lo >= hi_excl {
                        continue;
                    }
                    let first_ix = ((lo * stride) as isize + off) as usize;
                    for (acc, &x) in acc_row[lo..hi_excl]
                        .iter_mut()
                        .zip(row[first_ix..].iter().step_by(stride))
                    {
                        *acc += weight * x as f64;
                    }
                }
            }
            let dst = &mut out[(c * oh + oy) * ow..(c * oh + oy + 1) * ow];
            for (d, &acc) in dst.iter_mut().zip(acc_row.iter()) {
                *d = finish_channel(acc, params.bias[c], params.scale[c], params.shift[c]);
            }
        }
    }
    if !out.iter().all(|v| v.is_finite()) {
        return Err(TensorError::NonFinite("depthwise_conv2d output"));
    }
    Ok(Tensor::from_parts(channels, oh, ow, out))
}

/// Textbook triple-loop convolution, kept as the reference oracle.
///
/// Same contract as [`conv2d`]; per-element bounds checks, no hoisting.
pub fn naive_conv2d(input: &Tensor, params: &ConvParams) -> Result<Tensor, TensorError> {
    check_conv_input(input, params)?;
    params.validate(false)?;
    let (c_in, h, w) = input.shape();
    let (kh, kw) = params.kernel;
    let (oh, ow) = params.output_size(h, w)?;
    let stride = params.stride;
    let pad = params.padding as isize;

    let mut out = vec![0.0f32; params.out_channels * oh * ow];
    for oc in 0..params.out_channels {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = 0.0f64;
                for ic in 0..c_in {
                    for ky in 0..kh {
                        for kx in 0..kw {
                            let iy = (oy * stride + ky) as isize - pad;
                            let ix = (ox * stride + kx) as isize - pad;
                            if iy < 0 || iy >= h as isize || ix < 0 || ix >= w as isize {
                                continue;
                            }
                            let weight =
                                params.weights[((oc * c_in + ic) * kh + ky) * kw + kx];
                            acc += weight as f64
                                * input.get(ic, iy as usize, ix as usize) as f64;
                        }
                    }
                }
                out[(oc * oh + oy) * ow + ox] =
                    finish_channel(acc, params.bias[oc], params.scale[oc], params.shift[oc]);
            }
        }
    }
    if !out.iter().all(|v| v.is_finite()) {
        return Err(TensorError::NonFinite("naive_conv2d output"));
    }
    Ok(Tensor::from_parts(params.out_channels, oh, ow, out))
}

/// 2x2 max pooling with stride 2. Spatial dimensions must be even.
pub fn maxpool2x2(input: &Tensor) -> Result<Tensor, TensorError> {
    let (c, h, w) = input.shape();
    if h % 2 != 0 || w % 2 != 0 {
        return Err(TensorError::OddDimensions {
            height: h,
            width: w,
        });
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = vec![0.0f32; c * oh * ow];
    for ch in 0..c {
        for oy in 0..oh {
            let top = input.row(ch, 2 * oy);
            let bottom = input.row(ch, 2 * oy + 1);
            let dst = &mut out[(ch * oh + oy) * ow..(ch * oh + oy + 1) * ow];
            for (ox, d) in dst.iter_mut().enumerate() {
                let x = 2 * ox;
                *d = top[x].max(top[x + 1]).max(bottom[x]).max(bottom[x + 1]);
            }
        }
    }
    Ok(Tensor::from_parts(c, oh, ow, out))
}

/// Global average pooling: collapses each channel plane to its spatial mean.
pub fn global_avgpool(input: &Tensor) -> Tensor {
    let (c, h, w) = input.shape();
    let count = (h * w) as f64;
    let mut out = Vec::with_capacity(c);
    for ch in 0..c {
        let sum: f64 = input.channel(ch).iter().map(|&v| v as f64).sum();
        out.push((sum / count) as f32);
    }
    Tensor::from_parts(c, 1, 1, out)
}

#[inline]
pub fn relu_scalar(x: f32) -> f32 {
    x.max(0.0)
}

#[inline]
pub fn relu6_scalar(x: f32) -> f32 {
    x.clamp(0.0, 6.0)
}

/// `x * relu6(x + 3) / 6`
#[inline]
pub fn hard_swish_scalar(x: f32) -> f32 {
    x * relu6_scalar(x + 3.0) / 6.0
}

/// `relu6(x + 3) / 6`, a piecewise-linear sigmoid in [0, 1].
#[inline]
pub fn hard_sigmoid_scalar(x: f32) -> f32 {
    relu6_scalar(x + 3.0) / 6.0
}

pub fn relu(input: &Tensor) -> Tensor {
    input.map(relu_scalar)
}

pub fn relu6(input: &Tensor) -> Tensor {
    input.map(relu6_scalar)
}

pub fn hard_swish(input: &Tensor) -> Tensor {
    input.map(hard_swish_scalar)
}

pub fn hard_sigmoid(input: &Tensor) -> Tensor {
    input.map(hard_sigmoid_scalar)
}

/// Affine map: `out[o] = sum_i weights[o * in + i] * input[i] + bias[o]`.
///
/// Weights are row-major `[out][in]`; the output length is `bias.len()`.
pub fn fully_connected(
    input: &[f32],
    weights: &[f32],
    bias: &[f32],
) -> Result<Vec<f32>, TensorError> {
    let out_dim = bias.len();
    if out_dim == 0 || input.is_empty() {
        return Err(TensorError::Empty("fully_connected"));
    }
    if weights.len() != out_dim * input.len() {
        return Err(TensorError::LengthMismatch {
            expected: out_dim * input.len(),
            got: weights.len(),
        });
    }
    let mut out = Vec::with_capacity(out_dim);
    for o in 0..out_dim {
        let row = &weights[o * input.len()..(o + 1) * input.len()];
        let mut acc = 0.0f64;
        for (&w, &x) in row.iter().zip(input.iter()) {
            acc += w as f64 * x as f64;
        }
        let v = (acc + bias[o] as f64) as f32;
        if !v.is_finite() {
            return Err(TensorError::NonFinite("fully_connected output"));
        }
        out.push(v);
    }
    Ok(out)
}

/// Numerically stable softmax (max subtraction, `f64` internals).
pub fn softmax(logits: &[f32]) -> Result<Vec<f32>, TensorError> {
    if logits.is_empty() {
        return Err(TensorError::Empty("softmax"));
    }
    let max = logits.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v as f64));
    let exps: Vec<f64> = logits.iter().map(|&v| (v as f64 - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.iter().map(|&e| (e / sum) as f32).collect())
}
