pub mod eval;
pub mod infer;
pub mod inspect;
pub mod replay;

use crate::errors::CliError;
use lytnet::data::{bilinear_resize, load_image};
use lytnet::model::{load_weights, Model, INPUT_SHAPE};
use lytnet::tensor::Tensor;
use std::path::Path;

/// Loads a weight file and compiles it against the default spec.
pub fn load_model(path: &Path) -> Result<Model, CliError> {
    let weights =
        load_weights(path).map_err(|e| CliError::weights(format!("{}: {e}", path.display())))?;
    Model::from_weights(&weights)
        .map_err(|e| CliError::weights(format!("{}: {e}", path.display())))
}

/// Loads one PPM and coerces it to the network input size.
pub fn load_input_image(path: &Path, resize: bool) -> Result<Tensor, CliError> {
    let image =
        load_image(path).map_err(|e| CliError::image(format!("{}: {e}", path.display())))?;
    let (c, h, w) = image.shape();
    let (ec, eh, ew) = INPUT_SHAPE;
    if (c, h, w) == (ec, eh, ew) {
        return Ok(image);
    }
    if !resize {
        return Err(CliError::image(format!(
            "{}: image is {w}x{h}, expected {ew}x{eh} (use --resize)",
            path.display()
        )));
    }
    bilinear_resize(&image, ew, eh)
        .map_err(|e| CliError::image(format!("{}: {e}", path.display())))
}

/// Runs `job` over `items` on `workers` threads, preserving input order.
pub fn parallel_map<T, R, F>(items: &[T], workers: usize, job: F) -> Result<Vec<R>, CliError>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R, CliError> + Sync,
{
    if workers == 0 {
        return Err(CliError::other("--workers must be at least 1"));
    }
    let results: Vec<Result<R, CliError>> = if workers == 1 {
        items.iter().map(&job).collect()
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::other(format!("worker pool: {e}")))?;
        pool.install(|| items.par_iter().map(&job).collect())
    };
    // first failure in input order wins, so parallelism cannot change output
    results.into_iter().collect()
}

/// Rounds to six decimals for stable, compact numeric output.
pub fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}
