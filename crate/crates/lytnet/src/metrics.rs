//! Loss and evaluation metrics.
//!
//! The combined loss blends cross-entropy over the five classes with
//! mean-squared error over the four midline coordinates. Midline quality is
//! measured three ways: the angle between predicted and true direction
//! vectors, and the Euclidean start/endpoint distances in normalized units.
//! [`eval_report`] aggregates a labeled run into accuracy, a 5x5 confusion
//! matrix, and per-class precision/recall/F1.
//!
//! Everything here is `f64`; network outputs are widened at the boundary.

use crate::classes::LightClass;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("probabilities must be {expected} values summing to 1, got {detail}")]
    BadDistribution { expected: usize, detail: String },
    #[error("lambda must lie in [0, 1], got {0}")]
    BadLambda(f64),
    #[error("direction vector is zero; angle is undefined")]
    UndefinedDirection,
    #[error("prediction and truth lists differ in length: {preds} vs {truths}")]
    LengthMismatch { preds: usize, truths: usize },
    #[error("evaluation needs at least one sample")]
    EmptyEvaluation,
}

/// Probability floor applied before the logarithm in cross-entropy.
pub const PROB_FLOOR: f64 = 1e-12;

/// Loss blend weight. The published training run used 0.4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub lambda: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig { lambda: 0.4 }
    }
}

fn check_distribution(probs: &[f64]) -> Result<(), MetricsError> {
    let bad = |detail: String| MetricsError::BadDistribution {
        expected: LightClass::COUNT,
        detail,
    };
    if probs.len() != LightClass::COUNT {
        return Err(bad(format!("{} values", probs.len())));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(bad("negative or non-finite entry".to_string()));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(bad(format!("sum {sum}")));
    }
    Ok(())
}

/// Cross-entropy of the true class: `-ln p(truth)`, floored at
/// [`PROB_FLOOR`] so certainty-zero predictions stay finite.
pub fn cross_entropy(probs: &[f64], truth: LightClass) -> Result<f64, MetricsError> {
    check_distribution(probs)?;
    Ok(-(probs[truth.index()].max(PROB_FLOOR)).ln())
}

/// Mean squared error over the four coordinates.
pub fn mse(pred: &[f64; 4], truth: &[f64; 4]) -> f64 {
    let sum: f64 = pred
        .iter()
        .zip(truth.iter())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    sum / 4.0
}

/// Blended loss: `lambda * cross_entropy + (1 - lambda) * mse`.
pub fn combined_loss(
    probs: &[f64],
    coords: &[f64; 4],
    truth_class: LightClass,
    truth_coords: &[f64; 4],
    config: &LossConfig,
) -> Result<f64, MetricsError> {
    if !(0.0..=1.0).contains(&config.lambda) || !config.lambda.is_finite() {
        return Err(MetricsError::BadLambda(config.lambda));
    }
    let ce = cross_entropy(probs, truth_class)?;
    let reg = mse(coords, truth_coords);
    Ok(config.lambda * ce + (1.0 - config.lambda) * reg)
}

/// Midline direction: endpoint minus startpoint in normalized coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionVector {
    pub dx: f64,
    pub dy: f64,
}

/// Direction of a `[x_s, y_s, x_e, y_e]` midline, or `None` when degenerate.
pub fn direction(coords: &[f64; 4]) -> Option<DirectionVector> {
    let dx = coords[2] - coords[0];
    let dy = coords[3] - coords[1];
    if dx == 0.0 && dy == 0.0 {
        return None;
    }
    Some(DirectionVector { dx, dy })
}

/// Unsigned angle between the predicted and true midline directions, in
/// degrees within `[0, 180]`.
///
/// Computed as `atan2(|cross|, dot)`, which equals the arccos of the
/// normalized dot product but cannot leave the domain, so collinear-but-
/// rounded vectors never produce NaN and exact cases come out exact.
pub fn angle_error(pred_coords: &[f64; 4], truth_coords: &[f64; 4]) -> Result<f64, MetricsError> {
    let p = direction(pred_coords).ok_or(MetricsError::UndefinedDirection)?;
    let t = direction(truth_coords).ok_or(MetricsError::UndefinedDirection)?;
    let dot = p.dx * t.dx + p.dy * t.dy;
    let cross = p.dx * t.dy - p.dy * t.dx;
    Ok(cross.abs().atan2(dot).to_degrees())
}

/// Euclidean distances between predicted and true start points and end
/// points, in normalized units.
pub fn endpoint_errors(pred: &[f64; 4], truth: &[f64; 4]) -> (f64, f64) {
    let start = ((pred[0] - truth[0]).powi(2) + (pred[1] - truth[1]).powi(2)).sqrt();
    let end = ((pred[2] - truth[2]).powi(2) + (pred[3] - truth[3]).powi(2)).sqrt();
    (start, end)
}

/// Evaluation protocol used on three-class datasets: countdown predictions
/// collapse to `none`; red, green, and none pass through.
pub fn ptlr_remap(class: LightClass) -> LightClass {
    match class {
        LightClass::CountdownGreen | LightClass::CountdownBlank => LightClass::None,
        other => other,
    }
}

/// A classified network output ready for scoring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifiedPrediction {
    pub class: LightClass,
    pub coords: [f64; 4],
}

/// Ground-truth annotation for one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalTruth {
    pub class: LightClass,
    pub coords: [f64; 4],
}

/// Per-class precision / recall / F1.
///
/// `precision` is undefined (serialized as `null`) when the class was never
/// predicted, `recall` when it never occurs in the truth; `f1` needs both.
/// Undefined values are excluded from the macro averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub class: LightClass,
    pub support: u64,
    pub predicted: u64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

/// Aggregated evaluation results. Field names are frozen; see
/// `docs/formats.md`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub samples: u64,
    pub accuracy: f64,
    /// `confusion[truth][predicted]`, canonical class order.
    pub confusion: [[u64; 5]; 5],
    pub per_class: Vec<ClassScores>,
    pub macro_precision: Option<f64>,
    pub macro_recall: Option<f64>,
    pub macro_f1: Option<f64>,
    /// Means over the samples where both midline directions are defined.
    pub mean_angle_error_deg: Option<f64>,
    pub mean_startpoint_error: Option<f64>,
    pub mean_endpoint_error: Option<f64>,
    pub direction_samples: u64,
}

fn mean_of(defined: impl Iterator<Item = f64>) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0u64;
    for v in defined {
        sum += v;
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

/// Scores a labeled run.
pub fn eval_report(
    preds: &[ClassifiedPrediction],
    truths: &[EvalTruth],
) -> Result<EvalReport, MetricsError> {
    if preds.len() != truths.len() {
        return Err(MetricsError::LengthMismatch {
            preds: preds.len(),
            truths: truths.len(),
        });
    }
    if preds.is_empty() {
        return Err(MetricsError::EmptyEvaluation);
    }

    let mut confusion = [[0u64; 5]; 5];
    for (pred, truth) in preds.iter().zip(truths.iter()) {
        confusion[truth.class.index()][pred.class.index()] += 1;
    }
    let samples = preds.len() as u64;
    let correct: u64 = (0..5).map(|i| confusion[i][i]).sum();
    let accuracy = correct as f64 / samples as f64;

    let mut per_class = Vec::with_capacity(5);
    for class in LightClass::ALL {
        let i = class.index();
        let support: u64 = confusion[i].iter().sum();
        let predicted: u64 = (0..5).map(|t| confusion[t][i]).sum();
        let tp = confusion[i][i];
        let precision = (predicted > 0).then(|| tp as f64 / predicted as f64);
        let recall = (support > 0).then(|| tp as f64 / support as f64);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            (Some(_), Some(_)) => Some(0.0),
            _ => None,
        };
        per_class.push(ClassScores {
            class,
            support,
            predicted,
            precision,
            recall,
            f1,
        });
    }

    let macro_precision = mean_of(per_class.iter().filter_map(|c| c.precision));
    let macro_recall = mean_of(per_class.iter().filter_map(|c| c.recall));
    let macro_f1 = mean_of(per_class.iter().filter_map(|c| c.f1));

    let mut angle_sum = 0.0;
    let mut start_sum = 0.0;
    let mut end_sum = 0.0;
    let mut direction_samples = 0u64;
    for (pred, truth) in preds.iter().zip(truths.iter()) {
        if direction(&pred.coords).is_some() && direction(&truth.coords).is_some() {
            angle_sum += angle_error(&pred.coords, &truth.coords)
                .expect("both directions are defined");
            let (s, e) = endpoint_errors(&pred.coords, &truth.coords);
            start_sum += s;
            end_sum += e;
            direction_samples += 1;
        }
    }
    let over = |sum: f64| (direction_samples > 0).then(|| sum / direction_samples as f64);

    Ok(EvalReport {
        samples,
        accuracy,
        confusion,
        per_class,
        macro_precision,
        macro_recall,
        macro_f1,
        mean_angle_error_deg: over(angle_sum),
        mean_startpoint_error: over(start_sum),
        mean_endpoint_error: over(end_sum),
        direction_samples,
    })
}
