use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Which input unit carries a label.
///
/// `Open` means the segmentation line is available and every morpheme is a
/// token; `Closed` means only the raw transcription is available and every
/// word is a token whose label is a (possibly dash-joined) gloss compound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Track {
    Open,
    Closed,
}

impl Track {
    pub fn as_str(self) -> &'static str {
        match self {
            Track::Open => "open",
            Track::Closed => "closed",
        }
    }
}

impl fmt::Display for Track {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown track {0:?} (expected \"open\" or \"closed\")")]
pub struct ParseTrackError(pub String);

impl FromStr for Track {
    type Err = ParseTrackError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "open" => Ok(Track::Open),
            "closed" => Ok(Track::Closed),
            _ => Err(ParseTrackError(s.to_string())),
        }
    }
}
