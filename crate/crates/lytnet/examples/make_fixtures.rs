//! Generates desk-scale fixtures: seeded toy weights, a patterned image, a
//! one-row label file, and a small replay stream.
//!
//! ```sh
//! cargo run -p lytnet --example make_fixtures -- out/
//! ```

use lytnet::data::save_ppm;
use lytnet::model::{build_default_spec, save_weights, ModelWeights};
use lytnet::tensor::Tensor;
use std::path::Path;

fn main() {
    let dir = std::env::args().nth(1).expect("usage: make_fixtures <dir>");
    let dir = Path::new(&dir);
    std::fs::create_dir_all(dir).unwrap();

    let spec = build_default_spec();
    save_weights(&dir.join("toy.lyt2"), &ModelWeights::random(&spec, 42)).unwrap();

    let data: Vec<f32> = (0..3 * 576 * 768)
        .map(|i| ((i * 31) % 251) as f32 / 250.0)
        .collect();
    let image = Tensor::from_vec(3, 576, 768, data).unwrap();
    save_ppm(&dir.join("frame.ppm"), &image).unwrap();

    std::fs::write(
        dir.join("labels.csv"),
        "path,class,xs,ys,xe,ye\nframe.ppm,red,0.45,0.9,0.55,0.1\n",
    )
    .unwrap();

    let mut stream = String::new();
    for i in 0..8 {
        stream.push_str(&format!(
            "{{\"t_ms\":{},\"probs\":[1.0,0,0,0,0],\"coords\":[0.5,0.9,0.5,0.1]}}\n",
            i * 61
        ));
    }
    stream.push_str("{\"t_ms\":600,\"image\":\"frame.ppm\"}\n");
    std::fs::write(dir.join("stream.jsonl"), stream).unwrap();
    println!("fixtures in {}", dir.display());
}
