//! The per-session guidance state machine.
//!
//! One [`GuidanceEngine`] per session; frames must arrive with strictly
//! increasing timestamps and are processed sequentially. Identical
//! observation streams produce identical event sequences.
//!
//! Cadence is enforced per event kind: a Move/Rotate instruction never
//! repeats within `renotify_ms` of the previous instruction of the same kind,
//! and a light mode never repeats within `light_repeat_ms` of its own last
//! announcement. A flipped instruction or changed mode goes out immediately
//! when its own timer allows, which keeps the per-kind spacing guarantees
//! intact even under rapid oscillation.

use crate::classes::LightMode;
use crate::guidance::{
    delta_theta, ground_startpoint_x, orientation_instruction, position_instruction,
    smoothed_light_mode, FrameObservation, GuidanceConfig, GuidanceError, OrientationInstruction,
    PositionInstruction,
};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Event kinds, named for what the user is told.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    MoveLeft,
    MoveRight,
    PositionOk,
    RotateLeft,
    RotateRight,
    OrientationOk,
    LightRed,
    LightGreen,
    LightCountdown,
    LightNone,
}

impl EventKind {
    pub const ALL: [EventKind; 10] = [
        EventKind::MoveLeft,
        EventKind::MoveRight,
        EventKind::PositionOk,
        EventKind::RotateLeft,
        EventKind::RotateRight,
        EventKind::OrientationOk,
        EventKind::LightRed,
        EventKind::LightGreen,
        EventKind::LightCountdown,
        EventKind::LightNone,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EventKind::MoveLeft => "move_left",
            EventKind::MoveRight => "move_right",
            EventKind::PositionOk => "position_ok",
            EventKind::RotateLeft => "rotate_left",
            EventKind::RotateRight => "rotate_right",
            EventKind::OrientationOk => "orientation_ok",
            EventKind::LightRed => "light_red",
            EventKind::LightGreen => "light_green",
            EventKind::LightCountdown => "light_countdown",
            EventKind::LightNone => "light_none",
        }
    }

    /// Delivery channel; the mapping is fixed. Rotation cues are beeps (one
    /// for left, two for right), position nudges are vibrations, everything
    /// else is spoken.
    pub fn channel(self) -> Channel {
        match self {
            EventKind::MoveLeft | EventKind::MoveRight => Channel::Vibration,
            EventKind::RotateLeft => Channel::Beep1,
            EventKind::RotateRight => Channel::Beep2,
            _ => Channel::Voice,
        }
    }

    pub fn light(mode: LightMode) -> EventKind {
        match mode {
            LightMode::Red => EventKind::LightRed,
            LightMode::Green => EventKind::LightGreen,
            LightMode::Countdown => EventKind::LightCountdown,
            LightMode::None => EventKind::LightNone,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Voice,
    Vibration,
    Beep1,
    Beep2,
}

/// One emitted notification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuidanceEvent {
    pub t_ms: u64,
    pub kind: EventKind,
    pub channel: Channel,
}

impl GuidanceEvent {
    pub fn new(t_ms: u64, kind: EventKind) -> GuidanceEvent {
        GuidanceEvent {
            t_ms,
            kind,
            channel: kind.channel(),
        }
    }
}

/// Guidance advances through these stages and regresses when position or
/// orientation is lost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Positioning,
    Orienting,
    Monitoring,
}

/// Mutable per-session state.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceState {
    stage: Stage,
    window: VecDeque<[f64; 5]>,
    /// Last emission per instruction kind: MoveLeft, MoveRight, RotateLeft,
    /// RotateRight.
    instruction_emitted_at: [Option<u64>; 4],
    /// Last announcement per light mode (red, green, countdown, none).
    light_emitted_at: [Option<u64>; 4],
    last_timestamp: Option<u64>,
}

impl GuidanceState {
    fn new() -> GuidanceState {
        GuidanceState {
            stage: Stage::Positioning,
            window: VecDeque::new(),
            instruction_emitted_at: [None; 4],
            light_emitted_at: [None; 4],
            last_timestamp: None,
        }
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }
}

fn instruction_slot(kind: EventKind) -> usize {
    match kind {
        EventKind::MoveLeft => 0,
        EventKind::MoveRight => 1,
        EventKind::RotateLeft => 2,
        EventKind::RotateRight => 3,
        _ => unreachable!("not a cadenced instruction"),
    }
}

/// Drives one session. Sequential by construction: `step` takes `&mut self`.
#[derive(Debug, Clone)]
pub struct GuidanceEngine {
    config: GuidanceConfig,
    state: GuidanceState,
}

impl GuidanceEngine {
    pub fn new(config: GuidanceConfig) -> GuidanceEngine {
        GuidanceEngine {
            config,
            state: GuidanceState::new(),
        }
    }

    pub fn config(&self) -> &GuidanceConfig {
        &self.config
    }

    pub fn state(&self) -> &GuidanceState {
        &self.state
    }

    /// Drops session state (stage, window, timers); keeps the config.
    pub fn reset(&mut self) {
        self.state = GuidanceState::new();
    }

    fn try_instruction(&mut self, events: &mut Vec<GuidanceEvent>, t: u64, kind: EventKind) {
        let slot = instruction_slot(kind);
        let allowed = match self.state.instruction_emitted_at[slot] {
            None => true,
            Some(last) => t.saturating_sub(last) >= self.config.renotify_ms,
        };
        if allowed {
            self.state.instruction_emitted_at[slot] = Some(t);
            events.push(GuidanceEvent::new(t, kind));
        }
    }

    fn try_light(&mut self, events: &mut Vec<GuidanceEvent>, t: u64, mode: LightMode) {
        let slot = mode.index();
        let allowed = match self.state.light_emitted_at[slot] {
            None => true,
            Some(last) => t.saturating_sub(last) >= self.config.light_repeat_ms,
        };
        if allowed {
            self.state.light_emitted_at[slot] = Some(t);
            events.push(GuidanceEvent::new(t, EventKind::light(mode)));
        }
    }

    /// Processes one frame and returns the events it caused, in order:
    /// position, then orientation, then light.
    ///
    /// A frame whose geometry is degenerate (horizon-mapped startpoint or
    /// zero-length midline) still feeds the smoothing window but produces no
    /// position or orientation activity.
    pub fn step(&mut self, obs: &FrameObservation) -> Result<Vec<GuidanceEvent>, GuidanceError> {
        if let Some(last) = self.state.last_timestamp {
            if obs.timestamp_ms <= last {
                return Err(GuidanceError::NonMonotonicTimestamp {
                    last,
                    got: obs.timestamp_ms,
                });
            }
        }
        self.state.last_timestamp = Some(obs.timestamp_ms);
        let t = obs.timestamp_ms;

        self.state.window.push_back(obs.probs);
        while self.state.window.len() > self.config.window {
            self.state.window.pop_front();
        }

        let mut events = Vec::new();

        // position logic
        let position = ground_startpoint_x(
            &obs.coords,
            &self.config.homography,
            obs.image_width_px,
            obs.image_height_px,
        )
        .map(|x_int| {
            position_instruction(x_int, obs.image_width_px as f64, self.config.position_band)
        });
        if let Ok(instruction) = position {
            match instruction {
                PositionInstruction::InRange => {
                    if self.state.stage == Stage::Positioning {
                        events.push(GuidanceEvent::new(t, EventKind::PositionOk));
                        self.state.stage = Stage::Orienting;
                    }
                }
                PositionInstruction::MoveLeft => {
                    self.state.stage = Stage::Positioning;
                    self.try_instruction(&mut events, t, EventKind::MoveLeft);
                }
                PositionInstruction::MoveRight => {
                    self.state.stage = Stage::Positioning;
                    self.try_instruction(&mut events, t, EventKind::MoveRight);
                }
            }
        }

        // orientation logic
        if self.state.stage >= Stage::Orienting {
            let orientation = delta_theta(
                &obs.coords,
                &self.config.homography,
                obs.image_width_px,
                obs.image_height_px,
            )
            .map(|theta| orientation_instruction(theta, self.config.angle_band_deg));
            if let Ok(instruction) = orientation {
                match instruction {
                    OrientationInstruction::InRange => {
                        if self.state.stage == Stage::Orienting {
                            events.push(GuidanceEvent::new(t, EventKind::OrientationOk));
                            self.state.stage = Stage::Monitoring;
                        }
                    }
                    OrientationInstruction::RotateLeft => {
                        self.state.stage = Stage::Orienting;
                        self.try_instruction(&mut events, t, EventKind::RotateLeft);
                    }
                    OrientationInstruction::RotateRight => {
                        self.state.stage = Stage::Orienting;
                        self.try_instruction(&mut events, t, EventKind::RotateRight);
                    }
                }
            }
        }

        // light logic
        if self.state.stage == Stage::Monitoring {
            let window: Vec<[f64; 5]> = self.state.window.iter().copied().collect();
            let smoothed = smoothed_light_mode(&window);
            if smoothed.actionable(&self.config) {
                self.try_light(&mut events, t, smoothed.mode);
            }
        }

        Ok(events)
    }
}
