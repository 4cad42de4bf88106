//! Decoding configuration.

use std::fmt;
use std::num::NonZeroUsize;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeMode {
    Greedy,
    Beam,
    #[default]
    Aggressive,
}

impl FromStr for DecodeMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(DecodeMode::Greedy),
            "beam" => Ok(DecodeMode::Beam),
            "aggressive" => Ok(DecodeMode::Aggressive),
            other => Err(format!("unknown decode mode {other:?}")),
        }
    }
}

impl fmt::Display for DecodeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecodeMode::Greedy => "greedy",
            DecodeMode::Beam => "beam",
            DecodeMode::Aggressive => "aggressive",
        })
    }
}

/// Cap on the number of positions scored in one aggressive pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub enum LMax {
    Limited(NonZeroUsize),
    #[default]
    Unlimited,
}

impl LMax {
    pub fn limited(n: usize) -> Result<Self> {
        NonZeroUsize::new(n)
            .map(LMax::Limited)
            .ok_or_else(|| Error::InvalidDecodeConfig("l_max must be >= 1".into()))
    }

    pub fn cap(self, w: usize) -> usize {
        match self {
            LMax::Limited(n) => w.min(n.get()),
            LMax::Unlimited => w,
        }
    }

    pub fn as_option(self) -> Option<usize> {
        match self {
            LMax::Limited(n) => Some(n.get()),
            LMax::Unlimited => None,
        }
    }
}

impl fmt::Display for LMax {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LMax::Limited(n) => write!(f, "{n}"),
            LMax::Unlimited => f.write_str("unlimited"),
        }
    }
}

impl FromStr for LMax {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("unlimited") || s == "inf" {
            return Ok(LMax::Unlimited);
        }
        let n: usize = s.parse().map_err(|_| format!("invalid l_max {s:?}"))?;
        LMax::limited(n).map_err(|e| e.to_string())
    }
}

impl Serialize for LMax {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LMax {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(usize),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(n) => LMax::limited(n).map_err(serde::de::Error::custom),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub mode: DecodeMode,
    /// `MAX_LEN`; `None` means `2 * n + 16` for an input of `n` tokens.
    pub max_len: Option<usize>,
    pub l_max: LMax,
    pub beam_size: usize,
    pub length_penalty: f64,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            mode: DecodeMode::Aggressive,
            max_len: None,
            l_max: LMax::Unlimited,
            beam_size: 5,
            length_penalty: 0.0,
        }
    }
}

impl DecodeConfig {
    pub fn greedy() -> Self {
        Self::default().with_mode(DecodeMode::Greedy)
    }

    pub fn aggressive() -> Self {
        Self::default()
    }

    pub fn beam(beam_size: usize) -> Self {
        DecodeConfig {
            beam_size,
            ..Self::default().with_mode(DecodeMode::Beam)
        }
    }

    #[must_use]
    pub fn with_mode(mut self, mode: DecodeMode) -> Self {
        self.mode = mode;
        self
    }

    #[must_use]
    pub fn with_max_len(mut self, max_len: usize) -> Self {
        self.max_len = Some(max_len);
        self
    }

    #[must_use]
    pub fn with_l_max(mut self, l_max: LMax) -> Self {
        self.l_max = l_max;
        self
    }

    #[must_use]
    pub fn with_length_penalty(mut self, alpha: f64) -> Self {
        self.length_penalty = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_len == Some(0) {
            return Err(Error::InvalidDecodeConfig("max_len must be >= 1".into()));
        }
        if self.beam_size == 0 {
            return Err(Error::InvalidDecodeConfig("beam_size must be >= 1".into()));
        }
        if !(self.length_penalty >= 0.0 && self.length_penalty.is_finite()) {
            return Err(Error::InvalidDecodeConfig(
                "length_penalty must be a nonnegative real".into(),
            ));
        }
        Ok(())
    }

    /// `MAX_LEN` for an input of `n` real tokens.
    pub fn max_len_for(&self, n: usize) -> usize {
        self.max_len.unwrap_or(2 * n + 16)
    }
}
