use crate::commands::{load_input_image, load_model};
use crate::errors::CliError;
use crate::ReplayArgs;
use lytnet::guidance::engine::{EventKind, GuidanceEvent};
use lytnet::guidance::{FrameObservation, GuidanceConfig, GuidanceEngine};
use lytnet::model::{Model, INPUT_SHAPE};
use serde::Deserialize;
use std::io::Write;
use std::path::Path;

/// One stream line: either an image frame or a precomputed observation.
#[derive(Debug, Deserialize)]
struct StreamLine {
    t_ms: u64,
    #[serde(default)]
    image: Option<String>,
    #[serde(default)]
    probs: Option<Vec<f64>>,
    #[serde(default)]
    coords: Option<Vec<f64>>,
    #[serde(default)]
    image_w: Option<u32>,
    #[serde(default)]
    image_h: Option<u32>,
}

fn parse_stream(path: &Path) -> Result<Vec<(usize, StreamLine)>, CliError> {
    let content = std::fs::read_to_string(path)
        .map_err(|e| CliError::stream(format!("{}: {e}", path.display())))?;
    let mut lines = Vec::new();
    let mut last_t: Option<u64> = None;
    for (idx, raw) in content.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let line: StreamLine = serde_json::from_str(raw).map_err(|e| {
            CliError::stream(format!("{}: line {line_no}: {e}", path.display()))
        })?;
        let fail = |detail: &str| {
            Err(CliError::stream(format!(
                "{}: line {line_no}: {detail}",
                path.display()
            )))
        };
        match (&line.image, &line.probs) {
            (Some(_), Some(_)) | (None, None) => {
                return fail("exactly one of \"image\" or \"probs\" is required")
            }
            (None, Some(probs)) => {
                if probs.len() != 5 {
                    return fail(&format!("probs must have 5 entries, got {}", probs.len()));
                }
                match &line.coords {
                    Some(coords) if coords.len() == 4 => {}
                    Some(coords) => {
                        return fail(&format!(
                            "coords must have 4 entries, got {}",
                            coords.len()
                        ))
                    }
                    None => return fail("probs frames need coords"),
                }
            }
            (Some(_), None) => {}
        }
        if let Some(last) = last_t {
            if line.t_ms <= last {
                return fail(&format!(
                    "t_ms {} is not greater than the previous {last}",
                    line.t_ms
                ));
            }
        }
        last_t = Some(line.t_ms);
        lines.push((line_no, line));
    }
    Ok(lines)
}

fn observe(
    stream_dir: &Path,
    model: Option<&Model>,
    resize: bool,
    line_no: usize,
    line: &StreamLine,
) -> Result<FrameObservation, CliError> {
    if let Some(image) = &line.image {
        let model = model.expect("checked before processing");
        let path = {
            let p = Path::new(image);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                stream_dir.join(p)
            }
        };
        let tensor = load_input_image(&path, resize)?;
        let prediction = model
            .forward(&tensor)
            .map_err(|e| CliError::image(format!("{}: {e}", path.display())))?;
        let (_, probs) = model.classify(&prediction);
        FrameObservation::new(
            line.t_ms,
            probs.map(|p| p as f64),
            prediction.coords.map(|c| c as f64),
            INPUT_SHAPE.2 as u32,
            INPUT_SHAPE.1 as u32,
        )
        .map_err(|e| CliError::stream(format!("line {line_no}: {e}")))
    } else {
        let probs = line.probs.as_ref().expect("validated");
        let coords = line.coords.as_ref().expect("validated");
        FrameObservation::new(
            line.t_ms,
            [probs[0], probs[1], probs[2], probs[3], probs[4]],
            [coords[0], coords[1], coords[2], coords[3]],
            line.image_w.unwrap_or(INPUT_SHAPE.2 as u32),
            line.image_h.unwrap_or(INPUT_SHAPE.1 as u32),
        )
        .map_err(|e| CliError::stream(format!("line {line_no}: {e}")))
    }
}

fn footer(frames: usize, events: &[GuidanceEvent]) -> String {
    let mut parts = vec![format!("frames={frames}"), format!("events={}", events.len())];
    for kind in EventKind::ALL {
        let count = events.iter().filter(|e| e.kind == kind).count();
        parts.push(format!("{}={count}", kind.name()));
    }
    format!("replay: {}", parts.join(" "))
}

pub fn run(args: ReplayArgs) -> Result<(), CliError> {
    let config = match &args.config {
        Some(path) => {
            let json = std::fs::read_to_string(path)
                .map_err(|e| CliError::other(format!("{}: {e}", path.display())))?;
            GuidanceConfig::from_json(&json)
                .map_err(|e| CliError::other(format!("{}: {e}", path.display())))?
        }
        None => GuidanceConfig::default(),
    };

    let lines = parse_stream(&args.stream)?;
    let needs_weights = lines.iter().any(|(_, l)| l.image.is_some());
    let model = if needs_weights {
        match &args.weights {
            Some(path) => Some(load_model(path)?),
            None => {
                return Err(CliError::weights(
                    "stream carries image frames; --weights is required",
                ))
            }
        }
    } else {
        None
    };
    let stream_dir = args
        .stream
        .parent()
        .map(|p| p.to_path_buf())
        .unwrap_or_default();

    let mut engine = GuidanceEngine::new(config);
    let mut log = String::new();
    let mut all_events = Vec::new();
    for (line_no, line) in &lines {
        let obs = observe(&stream_dir, model.as_ref(), args.resize, *line_no, line)?;
        let events = engine
            .step(&obs)
            .map_err(|e| CliError::stream(format!("line {line_no}: {e}")))?;
        for event in &events {
            log.push_str(&serde_json::to_string(event).expect("events serialize"));
            log.push('\n');
        }
        all_events.extend(events);
    }

    match &args.out {
        Some(path) => std::fs::write(path, &log)
            .map_err(|e| CliError::other(format!("{}: {e}", path.display())))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(log.as_bytes())
                .map_err(|e| CliError::other(format!("stdout: {e}")))?;
        }
    }
    eprintln!("{}", footer(lines.len(), &all_events));
    Ok(())
}
