//! Greedy, beam and aggressive decoding.

mod aggressive;
mod argmax;
mod beam;
mod greedy;
mod suffix;

pub use aggressive::{aggressive_decode, find_bifurcation};
pub use argmax::argmax_with_tiebreak;
pub use beam::beam_decode;
pub use greedy::greedy_decode;
pub use suffix::{find_suffix_match, SuffixMatch};

use serde::{Deserialize, Serialize};

use crate::config::{DecodeConfig, DecodeMode};
use crate::error::Result;
use crate::model::Scorer;
use crate::scalar::Scalar;
use crate::sequence::{PreparedInput, TokenSequence};
use crate::trace::DecodeTrace;
use crate::vocab::TokenId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    /// `[BOS, o_1 .. o_m]`, EOS-terminated unless `MAX_LEN` was reached.
    pub output: TokenSequence,
    pub trace: DecodeTrace,
    /// Sum of the chosen tokens' log-probabilities.
    pub score: f64,
    /// Decoder positions scored in total. Beam search scores one position
    /// per live hypothesis per step, so this can exceed the trace's count.
    pub positions_scored: usize,
}

impl DecodeResult {
    /// `o_1 .. o_m`, EOS included.
    pub fn generated(&self) -> &[TokenId] {
        &self.output[1..]
    }

    /// Generated tokens without the trailing EOS.
    pub fn tokens(&self) -> &[TokenId] {
        self.output.strip_sentinels()
    }

    pub fn ends_with_eos(&self) -> bool {
        self.output.last() == Some(&TokenId::EOS)
    }

    pub fn sequential_iterations(&self) -> usize {
        self.trace.sequential_iterations()
    }
}

/// Decodes with the strategy selected by `cfg.mode`.
pub fn decode<T, S>(scorer: &S, x: &PreparedInput, cfg: &DecodeConfig) -> Result<DecodeResult>
where
    T: Scalar,
    S: Scorer<T>,
{
    match cfg.mode {
        DecodeMode::Greedy => greedy_decode(scorer, x, cfg),
        DecodeMode::Beam => beam_decode(scorer, x, cfg),
        DecodeMode::Aggressive => aggressive_decode(scorer, x, cfg),
    }
}
