//! Labeled-sample IO: CSV label files and binary PPM images.
//!
//! A label file is a CSV with header `path,class,xs,ys,xe,ye`; image paths
//! resolve relative to the label file's directory. Images are 8-bit binary
//! PPM (P6) decoded to `(3, H, W)` tensors in `[0, 1]`.

pub mod augment;
pub mod ppm;

pub use augment::{
    bilinear_resize, color_jitter, horizontal_flip, random_crop, JitterConfig,
};
pub use ppm::{load_image, save_ppm};

use crate::classes::LightClass;
use crate::tensor::Tensor;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {detail}")]
    MalformedRow {
        path: PathBuf,
        line: u64,
        detail: String,
    },
    #[error("{path}: {detail}")]
    BadLabelFile { path: PathBuf, detail: String },
    #[error("ppm format: {0}")]
    PpmFormat(String),
    #[error("crop target {target_w}x{target_h} exceeds source {source_w}x{source_h}")]
    CropTooLarge {
        source_w: usize,
        source_h: usize,
        target_w: usize,
        target_h: usize,
    },
    #[error("jitter ranges must be nonnegative, got {0}")]
    NegativeRange(f64),
    #[error(transparent)]
    Tensor(#[from] crate::tensor::TensorError),
}

/// An image with its class and normalized midline coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: Tensor,
    pub class: LightClass,
    /// `[x_s, y_s, x_e, y_e]` in `[0, 1]` of image width/height.
    pub coords: [f64; 4],
}

/// One row of a label file.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRecord {
    pub path: PathBuf,
    pub class: LightClass,
    pub coords: [f64; 4],
}

/// A parsed label file; `base_dir` anchors relative image paths.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelFile {
    pub base_dir: PathBuf,
    pub records: Vec<LabelRecord>,
}

impl LabelFile {
    pub fn resolve(&self, record: &LabelRecord) -> PathBuf {
        if record.path.is_absolute() {
            record.path.clone()
        } else {
            self.base_dir.join(&record.path)
        }
    }
}

const EXPECTED_HEADER: [&str; 6] = ["path", "class", "xs", "ys", "xe", "ye"];

/// Reads a label CSV. Every malformed row is reported with its line number;
/// duplicate paths and unknown classes are rejected.
pub fn load_labels(path: &Path) -> Result<LabelFile, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => DataError::Io {
                path: path.to_path_buf(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => DataError::BadLabelFile {
                path: path.to_path_buf(),
                detail: e.to_string(),
            },
        })?;

    let headers = reader
        .headers()
        .map_err(|e| DataError::BadLabelFile {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?
        .clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != EXPECTED_HEADER {
        return Err(DataError::BadLabelFile {
            path: path.to_path_buf(),
            detail: format!(
                "header must be `{}`, got `{}`",
                EXPECTED_HEADER.join(","),
                got.join(",")
            ),
        });
    }

    let malformed = |line: u64, detail: String| DataError::MalformedRow {
        path: path.to_path_buf(),
        line,
        detail,
    };

    let mut records = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for result in reader.records() {
        let record = result.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            malformed(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 6 {
            return Err(malformed(line, format!("expected 6 fields, got {}", record.len())));
        }
        let image_path = PathBuf::from(&record[0]);
        if record[0].is_empty() {
            return Err(malformed(line, "empty image path".to_string()));
        }
        if !seen.insert(image_path.clone()) {
            return Err(malformed(line, format!("duplicate path {:?}", &record[0])));
        }
        let class = LightClass::from_name(&record[1])
            .ok_or_else(|| malformed(line, format!("unknown class {:?}", &record[1])))?;
        let mut coords = [0.0f64; 4];
        for (i, field) in record.iter().skip(2).enumerate() {
            let value: f64 = field
                .parse()
                .map_err(|_| malformed(line, format!("bad coordinate {field:?}")))?;
            if !(0.0..=1.0).contains(&value) {
                return Err(malformed(
                    line,
                    format!("coordinate {value} outside [0, 1]"),
                ));
            }
            coords[i] = value;
        }
        records.push(LabelRecord {
            path: image_path,
            class,
            coords,
        });
    }

    let base_dir = path
        .parent()
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(LabelFile { base_dir, records })
}
