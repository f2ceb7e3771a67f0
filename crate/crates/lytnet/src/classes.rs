//! The closed set of pedestrian-traffic-light classes and the merged
//! announcement modes derived from them.

use serde::{Deserialize, Serialize};
use std::fmt;

/// The five network classes, in canonical logit order.
///
/// The order is fixed: `red`, `green`, `countdown_green`, `countdown_blank`,
/// `none`. Weight files may declare a different logit order in their header;
/// everything else in the crate uses this canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightClass {
    Red,
    Green,
    CountdownGreen,
    CountdownBlank,
    None,
}

impl LightClass {
    pub const ALL: [LightClass; 5] = [
        LightClass::Red,
        LightClass::Green,
        LightClass::CountdownGreen,
        LightClass::CountdownBlank,
        LightClass::None,
    ];

    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        match self {
            LightClass::Red => 0,
            LightClass::Green => 1,
            LightClass::CountdownGreen => 2,
            LightClass::CountdownBlank => 3,
            LightClass::None => 4,
        }
    }

    pub fn from_index(index: usize) -> Option<LightClass> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            LightClass::Red => "red",
            LightClass::Green => "green",
            LightClass::CountdownGreen => "countdown_green",
            LightClass::CountdownBlank => "countdown_blank",
            LightClass::None => "none",
        }
    }

    pub fn from_name(name: &str) -> Option<LightClass> {
        Self::ALL.iter().copied().find(|c| c.name() == name)
    }

    /// Merged announcement mode: the two countdown classes represent the same
    /// light mode.
    pub fn mode(self) -> LightMode {
        match self {
            LightClass::Red => LightMode::Red,
            LightClass::Green => LightMode::Green,
            LightClass::CountdownGreen | LightClass::CountdownBlank => LightMode::Countdown,
            LightClass::None => LightMode::None,
        }
    }
}

impl fmt::Display for LightClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Announcement modes: the four categories the user actually hears about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightMode {
    Red,
    Green,
    Countdown,
    None,
}

impl LightMode {
    pub const ALL: [LightMode; 4] = [
        LightMode::Red,
        LightMode::Green,
        LightMode::Countdown,
        LightMode::None,
    ];

    pub fn index(self) -> usize {
        match self {
            LightMode::Red => 0,
            LightMode::Green => 1,
            LightMode::Countdown => 2,
            LightMode::None => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LightMode::Red => "red",
            LightMode::Green => "green",
            LightMode::Countdown => "countdown",
            LightMode::None => "none",
        }
    }
}

impl fmt::Display for LightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
