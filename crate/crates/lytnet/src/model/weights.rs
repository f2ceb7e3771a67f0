//! The `.lyt2` weight file format and weight validation.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "LYT2" | u32 version = 1 | u32 tensor_count
//! u32 header_len | header_len bytes of UTF-8 JSON
//! tensor_count times:
//!   u16 name_len | name bytes | u8 dtype (0 = f32) | u8 ndim
//!   u32 dims[ndim] | product(dims) f32 values
//! ```
//!
//! Trailing bytes after the last tensor are a format error; a loader failure
//! never returns partial weights. The header JSON carries the logit class
//! order and optional per-channel input normalization; absent fields mean
//! "identity". Tensor names follow `layer{row}.{part}` — see
//! `docs/formats.md` for the full slot table.

use crate::classes::LightClass;
use crate::model::spec::{LayerKind, NetworkSpec, SE_REDUCTION};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"LYT2";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum WeightFormatError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic {0:02x?}, expected \"LYT2\"")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}, expected {VERSION}")]
    BadVersion(u32),
    #[error("unsupported dtype {dtype} for tensor {name:?} (only f32 = 0)")]
    BadDtype { name: String, dtype: u8 },
    #[error("file truncated while reading {0}")]
    Truncated(&'static str),
    #[error("{extra} trailing bytes after the last tensor")]
    TrailingBytes { extra: usize },
    #[error("tensor name is not valid UTF-8")]
    BadName,
    #[error("tensor {name:?} dimension product overflows")]
    Overflow { name: String },
    #[error("header JSON: {0}")]
    HeaderJson(String),
    #[error("header class_order must be a permutation of the five classes, got {0:?}")]
    BadClassOrder(Vec<String>),
    #[error("header std contains a zero entry")]
    ZeroStd,
    #[error("duplicate tensor name {0:?}")]
    DuplicateName(String),
}

/// Header metadata stored as JSON inside the weight file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightHeader {
    /// Logit order of the classification head. Empty means canonical.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub class_order: Vec<String>,
    /// Per-channel mean subtracted from the [0,1] input. Absent = 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<[f32; 3]>,
    /// Per-channel divisor applied after mean subtraction. Absent = 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<[f32; 3]>,
}

impl WeightHeader {
    /// Resolves the logit order to canonical classes, validating names.
    pub fn resolve_class_order(&self) -> Result<[LightClass; 5], WeightFormatError> {
        if self.class_order.is_empty() {
            return Ok(LightClass::ALL);
        }
        let mut order = [LightClass::Red; 5];
        let mut seen = [false; 5];
        if self.class_order.len() != 5 {
            return Err(WeightFormatError::BadClassOrder(self.class_order.clone()));
        }
        for (slot, name) in self.class_order.iter().enumerate() {
            match LightClass::from_name(name) {
                Some(class) if !seen[class.index()] => {
                    seen[class.index()] = true;
                    order[slot] = class;
                }
                _ => return Err(WeightFormatError::BadClassOrder(self.class_order.clone())),
            }
        }
        Ok(order)
    }
}

/// One named tensor from a weight file.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

/// A parsed weight file: header plus named tensors in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    pub header: WeightHeader,
    tensors: Vec<WeightTensor>,
    index: HashMap<String, usize>,
}

impl ModelWeights {
    pub fn new(header: WeightHeader, tensors: Vec<WeightTensor>) -> Result<Self, WeightFormatError> {
        let mut index = HashMap::with_capacity(tensors.len());
        for (i, t) in tensors.iter().enumerate() {
            if index.insert(t.name.clone(), i).is_some() {
                return Err(WeightFormatError::DuplicateName(t.name.clone()));
            }
        }
        Ok(ModelWeights {
            header,
            tensors,
            index,
        })
    }

    pub fn empty() -> Self {
        ModelWeights {
            header: WeightHeader::default(),
            tensors: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn tensors(&self) -> &[WeightTensor] {
        &self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&WeightTensor> {
        self.index.get(name).map(|&i| &self.tensors[i])
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Deterministic small random weights for every slot of `spec`.
    ///
    /// Weight magnitudes shrink with fan-in so activations stay bounded
    /// through the full graph; scales hover around 1 and shifts/biases around
    /// 0. Useful for tests and benchmarks, not for actual detection.
    pub fn random(spec: &NetworkSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tensors = Vec::new();
        for slot in weight_slots(spec) {
            let n: usize = slot.dims.iter().product();
            let data: Vec<f32> = match slot.role {
                SlotRole::Weight => {
                    let fan_in = slot.fan_in.max(1) as f32;
                    let bound = (3.0 / fan_in).sqrt();
                    (0..n).map(|_| rng.random_range(-bound..bound)).collect()
                }
                SlotRole::Bias | SlotRole::Shift => {
                    (0..n).map(|_| rng.random_range(-0.05..0.05)).collect()
                }
                SlotRole::Scale => (0..n).map(|_| rng.random_range(0.95..1.05)).collect(),
            };
            tensors.push(WeightTensor {
                name: slot.name,
                dims: slot.dims,
                data,
            });
        }
        ModelWeights::new(WeightHeader::default(), tensors).expect("slot names are unique")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotRole {
    Weight,
    Bias,
    Scale,
    Shift,
}

/// An expected tensor slot derived from a network spec.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotSpec {
    pub name: String,
    pub dims: Vec<usize>,
    pub required: bool,
    pub role: SlotRole,
    pub fan_in: usize,
}

fn conv_slots(out: &mut Vec<SlotSpec>, prefix: &str, c_out: usize, c_in: usize, k: usize) {
    out.push(SlotSpec {
        name: format!("{prefix}.weight"),
        dims: vec![c_out, c_in, k, k],
        required: true,
        role: SlotRole::Weight,
        fan_in: c_in * k * k,
    });
    for (part, role) in [
        ("bias", SlotRole::Bias),
        ("scale", SlotRole::Scale),
        ("shift", SlotRole::Shift),
    ] {
        out.push(SlotSpec {
            name: format!("{prefix}.{part}"),
            dims: vec![c_out],
            required: false,
            role,
            fan_in: 0,
        });
    }
}

fn depthwise_slots(out: &mut Vec<SlotSpec>, prefix: &str, channels: usize, k: usize) {
    out.push(SlotSpec {
        name: format!("{prefix}.weight"),
        dims: vec![channels, 1, k, k],
        required: true,
        role: SlotRole::Weight,
        fan_in: k * k,
    });
    for (part, role) in [
        ("bias", SlotRole::Bias),
        ("scale", SlotRole::Scale),
        ("shift", SlotRole::Shift),
    ] {
        out.push(SlotSpec {
            name: format!("{prefix}.{part}"),
            dims: vec![channels],
            required: false,
            role,
            fan_in: 0,
        });
    }
}

/// Every tensor slot the spec defines, in canonical file order.
///
/// Naming: `layer{row}.{part}` with rows 1-based. Plain conv and fc rows use
/// `weight`/`bias`/`scale`/`shift` directly; bottleneck rows nest their parts
/// as `expand`, `dw`, `se_reduce`, `se_expand`, `project`. Weights are
/// required; bias/scale/shift are optional and default to identity.
pub fn weight_slots(spec: &NetworkSpec) -> Vec<SlotSpec> {
    let mut slots = Vec::new();
    let inputs = spec
        .layer_inputs()
        .expect("spec must validate before weights can be enumerated");
    for (idx, layer) in spec.layers.iter().enumerate() {
        let row = idx + 1;
        let c_in = match inputs[idx] {
            crate::model::spec::DataShape::Map { channels, .. } => channels,
            crate::model::spec::DataShape::Flat(n) => n,
        };
        match layer.kind {
            LayerKind::Conv2d => {
                conv_slots(
                    &mut slots,
                    &format!("layer{row}"),
                    layer.out_channels,
                    c_in,
                    layer.kernel,
                );
            }
            LayerKind::Bottleneck => {
                let e = layer.expansion;
                let prefix = format!("layer{row}");
                conv_slots(&mut slots, &format!("{prefix}.expand"), e, c_in, 1);
                depthwise_slots(&mut slots, &format!("{prefix}.dw"), e, layer.kernel);
                if layer.use_se {
                    let reduced = e / SE_REDUCTION;
                    slots.push(SlotSpec {
                        name: format!("{prefix}.se_reduce.weight"),
                        dims: vec![reduced, e],
                        required: true,
                        role: SlotRole::Weight,
                        fan_in: e,
                    });
                    slots.push(SlotSpec {
                        name: format!("{prefix}.se_reduce.bias"),
                        dims: vec![reduced],
                        required: false,
                        role: SlotRole::Bias,
                        fan_in: 0,
                    });
                    slots.push(SlotSpec {
                        name: format!("{prefix}.se_expand.weight"),
                        dims: vec![e, reduced],
                        required: true,
                        role: SlotRole::Weight,
                        fan_in: reduced,
                    });
                    slots.push(SlotSpec {
                        name: format!("{prefix}.se_expand.bias"),
                        dims: vec![e],
                        required: false,
                        role: SlotRole::Bias,
                        fan_in: 0,
                    });
                }
                conv_slots(
                    &mut slots,
                    &format!("{prefix}.project"),
                    layer.out_channels,
                    e,
                    1,
                );
            }
            LayerKind::FullyConnected => {
                slots.push(SlotSpec {
                    name: format!("layer{row}.weight"),
                    dims: vec![layer.out_channels, c_in],
                    required: true,
                    role: SlotRole::Weight,
                    fan_in: c_in,
                });
                slots.push(SlotSpec {
                    name: format!("layer{row}.bias"),
                    dims: vec![layer.out_channels],
                    required: false,
                    role: SlotRole::Bias,
                    fan_in: 0,
                });
            }
            LayerKind::MaxPool | LayerKind::AvgPool => {}
        }
    }
    slots
}

/// Outcome of matching a weight set against a spec's slot table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightValidation {
    /// Required slots with no tensor in the file.
    pub missing: Vec<String>,
    /// File tensors that match no slot.
    pub dangling: Vec<String>,
    /// Tensors whose dims disagree with their slot.
    pub mismatched: Vec<ShapeMismatch>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeMismatch {
    pub name: String,
    pub expected: Vec<usize>,
    pub got: Vec<usize>,
}

impl WeightValidation {
    pub fn is_ok(&self) -> bool {
        self.missing.is_empty() && self.dangling.is_empty() && self.mismatched.is_empty()
    }
}

impl fmt::Display for WeightValidation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "weights match the spec");
        }
        let mut parts = Vec::new();
        if !self.missing.is_empty() {
            parts.push(format!("missing: {}", self.missing.join(", ")));
        }
        if !self.dangling.is_empty() {
            parts.push(format!("dangling: {}", self.dangling.join(", ")));
        }
        if !self.mismatched.is_empty() {
            let detail: Vec<String> = self
                .mismatched
                .iter()
                .map(|m| format!("{} expected {:?} got {:?}", m.name, m.expected, m.got))
                .collect();
            parts.push(format!("shape mismatches: {}", detail.join("; ")));
        }
        write!(f, "{}", parts.join("; "))
    }
}

/// Matches every tensor by name to a spec slot and reports the differences.
pub fn validate_weights(weights: &ModelWeights, spec: &NetworkSpec) -> WeightValidation {
    let slots = weight_slots(spec);
    let mut report = WeightValidation::default();
    let mut known: HashMap<&str, &SlotSpec> = HashMap::with_capacity(slots.len());
    for slot in &slots {
        known.insert(slot.name.as_str(), slot);
    }
    for slot in &slots {
        match weights.get(&slot.name) {
            Some(tensor) => {
                if tensor.dims != slot.dims {
                    report.mismatched.push(ShapeMismatch {
                        name: slot.name.clone(),
                        expected: slot.dims.clone(),
                        got: tensor.dims.clone(),
                    });
                }
            }
            None => {
                if slot.required {
                    report.missing.push(slot.name.clone());
                }
            }
        }
    }
    for tensor in weights.tensors() {
        if !known.contains_key(tensor.name.as_str()) {
            report.dangling.push(tensor.name.clone());
        }
    }
    report
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], WeightFormatError> {
        if self.buf.len() - self.pos < n {
            return Err(WeightFormatError::Truncated(what));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u16(&mut self, what: &'static str) -> Result<u16, WeightFormatError> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, WeightFormatError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u8(&mut self, what: &'static str) -> Result<u8, WeightFormatError> {
        Ok(self.take(1, what)?[0])
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

/// Parses a weight file from raw bytes.
pub fn parse_weights(bytes: &[u8]) -> Result<ModelWeights, WeightFormatError> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    let magic = cur.take(4, "magic")?;
    if magic != MAGIC {
        return Err(WeightFormatError::BadMagic([
            magic[0], magic[1], magic[2], magic[3],
        ]));
    }
    let version = cur.u32("version")?;
    if version != VERSION {
        return Err(WeightFormatError::BadVersion(version));
    }
    let tensor_count = cur.u32("tensor count")? as usize;
    let header_len = cur.u32("header length")? as usize;
    let header_bytes = cur.take(header_len, "header JSON")?;
    let header: WeightHeader = serde_json::from_slice(header_bytes)
        .map_err(|e| WeightFormatError::HeaderJson(e.to_string()))?;
    header.resolve_class_order()?;
    if let Some(std) = &header.std {
        if std.contains(&0.0) {
            return Err(WeightFormatError::ZeroStd);
        }
    }

    let mut tensors = Vec::with_capacity(tensor_count.min(1024));
    for _ in 0..tensor_count {
        let name_len = cur.u16("tensor name length")? as usize;
        let name_bytes = cur.take(name_len, "tensor name")?;
        let name = std::str::from_utf8(name_bytes)
            .map_err(|_| WeightFormatError::BadName)?
            .to_string();
        let dtype = cur.u8("dtype")?;
        if dtype != 0 {
            return Err(WeightFormatError::BadDtype { name, dtype });
        }
        let ndim = cur.u8("ndim")? as usize;
        let mut dims = Vec::with_capacity(ndim);
        let mut elements: usize = 1;
        for _ in 0..ndim {
            let d = cur.u32("dims")? as usize;
            elements = elements
                .checked_mul(d)
                .ok_or_else(|| WeightFormatError::Overflow { name: name.clone() })?;
            dims.push(d);
        }
        let byte_len = elements
            .checked_mul(4)
            .ok_or_else(|| WeightFormatError::Overflow { name: name.clone() })?;
        let raw = cur.take(byte_len, "tensor data")?;
        let mut data = Vec::with_capacity(elements);
        for chunk in raw.chunks_exact(4) {
            data.push(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]));
        }
        tensors.push(WeightTensor { name, dims, data });
    }
    if cur.remaining() != 0 {
        return Err(WeightFormatError::TrailingBytes {
            extra: cur.remaining(),
        });
    }
    ModelWeights::new(header, tensors)
}

/// Reads and parses a `.lyt2` file.
pub fn load_weights(path: &Path) -> Result<ModelWeights, WeightFormatError> {
    let bytes = std::fs::read(path)?;
    parse_weights(&bytes)
}

/// Serializes weights to the `.lyt2` byte layout.
pub fn encode_weights(weights: &ModelWeights) -> Vec<u8> {
    let header_json = serde_json::to_vec(&weights.header).expect("header serializes");
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(weights.len() as u32).to_le_bytes());
    out.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    out.extend_from_slice(&header_json);
    for tensor in weights.tensors() {
        out.extend_from_slice(&(tensor.name.len() as u16).to_le_bytes());
        out.extend_from_slice(tensor.name.as_bytes());
        out.push(0); // dtype f32
        out.push(tensor.dims.len() as u8);
        for &d in &tensor.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in &tensor.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Writes a `.lyt2` file.
pub fn save_weights(path: &Path, weights: &ModelWeights) -> Result<(), WeightFormatError> {
    std::fs::write(path, encode_weights(weights))?;
    Ok(())
}
