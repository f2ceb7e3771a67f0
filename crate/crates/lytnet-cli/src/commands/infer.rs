use crate::commands::{load_input_image, load_model, parallel_map, round6};
use crate::errors::CliError;
use crate::InferArgs;
use lytnet::model::Model;
use serde_json::json;
use std::path::Path;

fn infer_one(model: &Model, path: &Path, resize: bool, as_json: bool) -> Result<String, CliError> {
    let image = load_input_image(path, resize)?;
    let prediction = model
        .forward(&image)
        .map_err(|e| CliError::image(format!("{}: {e}", path.display())))?;
    let (class, probs) = model.classify(&prediction);
    let probs: Vec<f64> = probs.iter().map(|&p| round6(p as f64)).collect();
    let coords: Vec<f64> = prediction.coords.iter().map(|&c| round6(c as f64)).collect();
    if as_json {
        let value = json!({
            "path": path.display().to_string(),
            "class": class.name(),
            "probs": probs,
            "coords": coords,
        });
        Ok(value.to_string())
    } else {
        let fmt = |values: &[f64]| {
            values
                .iter()
                .map(|v| format!("{v:.6}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        Ok(format!(
            "{} class={} probs=[{}] coords=[{}]",
            path.display(),
            class.name(),
            fmt(&probs),
            fmt(&coords)
        ))
    }
}

pub fn run(args: InferArgs) -> Result<(), CliError> {
    let model = load_model(&args.weights)?;
    let lines = parallel_map(&args.images, args.workers, |path| {
        infer_one(&model, path, args.resize, args.json)
    })?;
    for line in lines {
        println!("{line}");
    }
    Ok(())
}
