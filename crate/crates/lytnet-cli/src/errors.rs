//! Error-to-exit-code mapping.
//!
//! 2: weight file problems (unreadable, malformed, fails validation, or
//!    missing when the input needs inference)
//! 3: image problems (unreadable, not a usable PPM, wrong size without
//!    --resize)
//! 4: label-set problems (unreadable or malformed CSV, empty set)
//! 5: stream problems (malformed lines, non-monotonic timestamps)
//! 1: everything else (bad config, IO on outputs)

use std::fmt;

pub const EXIT_WEIGHTS: i32 = 2;
pub const EXIT_IMAGE: i32 = 3;
pub const EXIT_LABELS: i32 = 4;
pub const EXIT_STREAM: i32 = 5;
pub const EXIT_OTHER: i32 = 1;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn weights(message: impl fmt::Display) -> CliError {
        CliError {
            code: EXIT_WEIGHTS,
            message: message.to_string(),
        }
    }

    pub fn image(message: impl fmt::Display) -> CliError {
        CliError {
            code: EXIT_IMAGE,
            message: message.to_string(),
        }
    }

    pub fn labels(message: impl fmt::Display) -> CliError {
        CliError {
            code: EXIT_LABELS,
            message: message.to_string(),
        }
    }

    pub fn stream(message: impl fmt::Display) -> CliError {
        CliError {
            code: EXIT_STREAM,
            message: message.to_string(),
        }
    }

    pub fn other(message: impl fmt::Display) -> CliError {
        CliError {
            code: EXIT_OTHER,
            message: message.to_string(),
        }
    }
}
