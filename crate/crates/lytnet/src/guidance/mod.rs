//! Crossing guidance: turns per-frame network outputs into positioning,
//! orientation, and traffic-light announcements.
//!
//! Guidance runs in three stages. First the user is positioned on the
//! crossing midline: with image width `w` and the ground-projected startpoint
//! at `x_int`, they are told to move left when `x_int > (w-1)/2 + 0.085*w`
//! and right when `x_int < (w-1)/2 - 0.085*w`. Once positioned, they are
//! rotated until the midline direction is within 10 degrees of camera
//! forward. Only then are light modes announced, from class probabilities
//! averaged over the last five frames and thresholded at 0.8, with the two
//! countdown classes merged into one mode.
//!
//! Notification cadence: an instruction of the same kind repeats no sooner
//! than every 2 s, the same light mode no sooner than every 3 s, and a mode
//! change is announced immediately (subject to the per-mode spacing).

pub mod engine;
pub mod homography;

pub use engine::{GuidanceEngine, GuidanceState, Stage};
pub use homography::{to_ground, Homography};

use crate::classes::LightMode;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GuidanceError {
    #[error("homography is singular (det {det})")]
    SingularHomography { det: f64 },
    #[error("point ({x}, {y}) maps to projective w = {w}; at or beyond the horizon")]
    DegeneratePoint { x: f64, y: f64, w: f64 },
    #[error("midline direction is zero on the ground plane")]
    UndefinedDirection,
    #[error("non-monotonic timestamp: {got} ms after {last} ms")]
    NonMonotonicTimestamp { last: u64, got: u64 },
    #[error("frame probabilities are not a distribution: {detail}")]
    BadProbabilities { detail: String },
    #[error("bad config: {0}")]
    BadConfig(String),
}

/// Default half-width of the acceptable positioning band, as a fraction of
/// image width.
pub const DEFAULT_POSITION_BAND: f64 = 0.085;
/// Default half-width of the acceptable orientation band, degrees.
pub const DEFAULT_ANGLE_BAND_DEG: f64 = 10.0;
/// Default smoothed-probability threshold for announcing a light mode.
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.8;
/// Default smoothing window, frames.
pub const DEFAULT_WINDOW: usize = 5;
/// Default minimum spacing between identical instructions, milliseconds.
pub const DEFAULT_RENOTIFY_MS: u64 = 2000;
/// Default minimum spacing between identical light announcements,
/// milliseconds.
pub const DEFAULT_LIGHT_REPEAT_MS: u64 = 3000;
/// Frame period assumed for streams without timestamps (~16.4 fps).
pub const DEFAULT_FRAME_PERIOD_MS: u64 = 61;

/// Engine tuning knobs plus the calibration homography.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceConfig {
    pub homography: Homography,
    pub position_band: f64,
    pub angle_band_deg: f64,
    pub confidence_threshold: f64,
    pub window: usize,
    pub renotify_ms: u64,
    pub light_repeat_ms: u64,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        GuidanceConfig {
            homography: Homography::identity(),
            position_band: DEFAULT_POSITION_BAND,
            angle_band_deg: DEFAULT_ANGLE_BAND_DEG,
            confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD,
            window: DEFAULT_WINDOW,
            renotify_ms: DEFAULT_RENOTIFY_MS,
            light_repeat_ms: DEFAULT_LIGHT_REPEAT_MS,
        }
    }
}

/// JSON form of [`GuidanceConfig`]; every key is optional.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    homography: Option<[f64; 9]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    position_band: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angle_band_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    confidence_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    renotify_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    light_repeat_ms: Option<u64>,
}

impl GuidanceConfig {
    pub fn from_json(json: &str) -> Result<GuidanceConfig, GuidanceError> {
        let file: ConfigFile =
            serde_json::from_str(json).map_err(|e| GuidanceError::BadConfig(e.to_string()))?;
        let mut config = GuidanceConfig::default();
        if let Some(m) = file.homography {
            config.homography = Homography::new(m)?;
        }
        if let Some(v) = file.position_band {
            config.position_band = v;
        }
        if let Some(v) = file.angle_band_deg {
            config.angle_band_deg = v;
        }
        if let Some(v) = file.confidence_threshold {
            config.confidence_threshold = v;
        }
        if let Some(v) = file.window {
            config.window = v;
        }
        if let Some(v) = file.renotify_ms {
            config.renotify_ms = v;
        }
        if let Some(v) = file.light_repeat_ms {
            config.light_repeat_ms = v;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        let file = ConfigFile {
            homography: Some(*self.homography.matrix()),
            position_band: Some(self.position_band),
            angle_band_deg: Some(self.angle_band_deg),
            confidence_threshold: Some(self.confidence_threshold),
            window: Some(self.window),
            renotify_ms: Some(self.renotify_ms),
            light_repeat_ms: Some(self.light_repeat_ms),
        };
        serde_json::to_string_pretty(&file).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), GuidanceError> {
        if !(self.position_band.is_finite() && self.position_band >= 0.0) {
            return Err(GuidanceError::BadConfig(format!(
                "position_band must be a nonnegative real, got {}",
                self.position_band
            )));
        }
        if !(self.angle_band_deg.is_finite() && self.angle_band_deg >= 0.0) {
            return Err(GuidanceError::BadConfig(format!(
                "angle_band_deg must be a nonnegative real, got {}",
                self.angle_band_deg
            )));
        }
        if !(self.confidence_threshold.is_finite() && (0.0..=1.0).contains(&self.confidence_threshold))
        {
            return Err(GuidanceError::BadConfig(format!(
                "confidence_threshold must lie in [0, 1], got {}",
                self.confidence_threshold
            )));
        }
        if self.window == 0 {
            return Err(GuidanceError::BadConfig("window must be at least 1".into()));
        }
        Ok(())
    }
}

/// One frame of input to the engine.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameObservation {
    pub timestamp_ms: u64,
    /// Class probabilities in canonical order; must sum to 1 within 1e-6.
    pub probs: [f64; 5],
    /// Normalized midline `[x_s, y_s, x_e, y_e]`; clamped to [0,1] before use.
    pub coords: [f64; 4],
    pub image_width_px: u32,
    pub image_height_px: u32,
}

impl FrameObservation {
    pub fn new(
        timestamp_ms: u64,
        probs: [f64; 5],
        coords: [f64; 4],
        image_width_px: u32,
        image_height_px: u32,
    ) -> Result<FrameObservation, GuidanceError> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(GuidanceError::BadProbabilities {
                detail: "negative or non-finite entry".into(),
            });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(GuidanceError::BadProbabilities {
                detail: format!("sum {sum}"),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GuidanceError::BadProbabilities {
                detail: "non-finite coordinate".into(),
            });
        }
        if image_width_px == 0 || image_height_px == 0 {
            return Err(GuidanceError::BadConfig("image dimensions must be nonzero".into()));
        }
        Ok(FrameObservation {
            timestamp_ms,
            probs,
            coords,
            image_width_px,
            image_height_px,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositionInstruction {
    MoveLeft,
    MoveRight,
    InRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrientationInstruction {
    RotateLeft,
    RotateRight,
    InRange,
}

/// Positioning test against the midline band.
///
/// `x_int` is the ground-plane x of the startpoint in image-pixel units; the
/// image midline sits at `(w-1)/2`. Inequalities are strict: the boundary is
/// in range.
pub fn position_instruction(x_int: f64, image_width: f64, band: f64) -> PositionInstruction {
    let mid = (image_width - 1.0) / 2.0;
    let margin = image_width * band;
    if x_int > mid + margin {
        PositionInstruction::MoveLeft
    } else if x_int < mid - margin {
        PositionInstruction::MoveRight
    } else {
        PositionInstruction::InRange
    }
}

/// Orientation test: rotate left below `-band`, right above `+band`,
/// strict on both sides.
pub fn orientation_instruction(delta_theta_deg: f64, band_deg: f64) -> OrientationInstruction {
    if delta_theta_deg < -band_deg {
        OrientationInstruction::RotateLeft
    } else if delta_theta_deg > band_deg {
        OrientationInstruction::RotateRight
    } else {
        OrientationInstruction::InRange
    }
}

/// Result of averaging the probability window into a merged light mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothedMode {
    pub mode: LightMode,
    /// Averaged probability mass of the winning mode.
    pub confidence: f64,
    /// Number of frames that went into the average.
    pub frames: usize,
}

impl SmoothedMode {
    /// A mode may be announced only from a full window at high confidence.
    pub fn actionable(&self, config: &GuidanceConfig) -> bool {
        self.frames >= config.window && self.confidence >= config.confidence_threshold
    }
}

/// Averages per-frame class probabilities and merges the countdown classes.
///
/// Returns the argmax of the merged four-mode masses (first mode wins ties in
/// the order red, green, countdown, none) together with its averaged mass.
/// The window must be nonempty.
pub fn smoothed_light_mode(window: &[[f64; 5]]) -> SmoothedMode {
    assert!(!window.is_empty(), "smoothing window must be nonempty");
    let n = window.len() as f64;
    let mut mean = [0.0f64; 5];
    for frame in window {
        for (m, p) in mean.iter_mut().zip(frame.iter()) {
            *m += p;
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let merged = [
        mean[0],           // red
        mean[1],           // green
        mean[2] + mean[3], // countdown
        mean[4],           // none
    ];
    let mut best = 0;
    for i in 1..4 {
        if merged[i] > merged[best] {
            best = i;
        }
    }
    SmoothedMode {
        mode: LightMode::ALL[best],
        confidence: merged[best],
        frames: window.len(),
    }
}

/// Converts a normalized coordinate pair to pixel coordinates, clamping into
/// the frame. `0.5` lands exactly on the image midline `(w-1)/2`.
pub fn pixel_point(nx: f64, ny: f64, width_px: u32, height_px: u32) -> (f64, f64) {
    (
        nx.clamp(0.0, 1.0) * (width_px as f64 - 1.0),
        ny.clamp(0.0, 1.0) * (height_px as f64 - 1.0),
    )
}

/// Ground-plane x of the midline startpoint, in image-pixel units.
pub fn ground_startpoint_x(
    coords: &[f64; 4],
    h: &Homography,
    width_px: u32,
    height_px: u32,
) -> Result<f64, GuidanceError> {
    let start = pixel_point(coords[0], coords[1], width_px, height_px);
    let (gx, _) = to_ground(start, h)?;
    Ok(gx)
}

/// Signed angle between the ground-projected midline direction and camera
/// forward, in degrees. Positive means the crossing line tilts right of
/// forward.
///
/// Camera forward is the image's vertical centerline (bottom to top) mapped
/// through the homography.
pub fn delta_theta(
    coords: &[f64; 4],
    h: &Homography,
    width_px: u32,
    height_px: u32,
) -> Result<f64, GuidanceError> {
    let start = pixel_point(coords[0], coords[1], width_px, height_px);
    let end = pixel_point(coords[2], coords[3], width_px, height_px);
    let g_start = to_ground(start, h)?;
    let g_end = to_ground(end, h)?;
    let dx = g_end.0 - g_start.0;
    let dy = g_end.1 - g_start.1;
    if dx == 0.0 && dy == 0.0 {
        return Err(GuidanceError::UndefinedDirection);
    }

    let cx = (width_px as f64 - 1.0) / 2.0;
    let bottom = to_ground((cx, height_px as f64 - 1.0), h)?;
    let top = to_ground((cx, 0.0), h)?;
    let fx = top.0 - bottom.0;
    let fy = top.1 - bottom.1;
    if fx == 0.0 && fy == 0.0 {
        return Err(GuidanceError::UndefinedDirection);
    }

    let cross = fx * dy - fy * dx;
    let dot = fx * dx + fy * dy;
    Ok(cross.atan2(dot).to_degrees())
}
