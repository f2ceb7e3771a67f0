//! Shared fixtures for CLI tests: toy weights, images, labels, and streams
//! built once per test binary.

// the cli and acceptance binaries each use a different subset of this module
#![allow(dead_code)]

use lytnet::data::save_ppm;
use lytnet::model::{build_default_spec, save_weights, ModelWeights};
use lytnet::tensor::Tensor;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

pub fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_lytnet")
}

pub struct Fixtures {
    #[allow(dead_code)]
    dir: tempfile::TempDir,
    pub weights: PathBuf,
    pub images: Vec<PathBuf>,
    pub labels: PathBuf,
}

static FIXTURES: OnceLock<Fixtures> = OnceLock::new();

/// A deterministic non-constant test image.
pub fn patterned_image(seed: u32, h: usize, w: usize) -> Tensor {
    let data: Vec<f32> = (0..3 * h * w)
        .map(|i| (((i as u32).wrapping_mul(2654435761).wrapping_add(seed) >> 8) % 256) as f32 / 255.0)
        .collect();
    Tensor::from_vec(3, h, w, data).unwrap()
}

pub fn fixtures() -> &'static Fixtures {
    FIXTURES.get_or_init(|| {
        let dir = tempfile::tempdir().expect("tempdir");
        let root = dir.path();

        let spec = build_default_spec();
        let weights_path = root.join("toy.lyt2");
        save_weights(&weights_path, &ModelWeights::random(&spec, 42)).expect("write weights");

        let mut images = Vec::new();
        for i in 0..3u32 {
            let path = root.join(format!("frame{i}.ppm"));
            save_ppm(&path, &patterned_image(i, 576, 768)).expect("write ppm");
            images.push(path);
        }

        let labels = root.join("labels.csv");
        let mut csv = String::from("path,class,xs,ys,xe,ye\n");
        for (i, image) in images.iter().enumerate() {
            let name = image.file_name().unwrap().to_str().unwrap();
            let class = ["red", "green", "none"][i];
            let ye = 0.1 * (i + 1) as f64;
            csv.push_str(&format!("{name},{class},0.4,0.9,0.6,{ye}\n"));
        }
        std::fs::write(&labels, csv).expect("write labels");

        Fixtures {
            dir,
            weights: weights_path,
            images,
            labels,
        }
    })
}

pub fn run_cli(args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn stdout_str(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

pub fn stderr_str(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).to_string()
}

pub fn write_stream(dir: &Path, name: &str, lines: &[String]) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, lines.join("\n") + "\n").expect("write stream");
    path
}

/// Probability-frame stream line.
pub fn probs_line(t_ms: u64, probs: [f64; 5], coords: [f64; 4]) -> String {
    serde_json::json!({
        "t_ms": t_ms,
        "probs": probs,
        "coords": coords,
    })
    .to_string()
}

pub const RED: [f64; 5] = [1.0, 0.0, 0.0, 0.0, 0.0];
pub const GREEN: [f64; 5] = [0.0, 1.0, 0.0, 0.0, 0.0];
pub const NONE: [f64; 5] = [0.0, 0.0, 0.0, 0.0, 1.0];
pub const CENTERED: [f64; 4] = [0.5, 0.9, 0.5, 0.1];
pub const FAR_LEFT: [f64; 4] = [0.1, 0.9, 0.1, 0.1];
