//! Aggressive decoding for sequence-to-sequence rewriting tasks whose output
//! is mostly a copy of the input.
//!
//! Decoding copies input tokens into the decoder as guesses for the output,
//! scores all of them in one pass, and keeps predictions up to the first
//! disagreement. Where the output departs from the input the decoder falls
//! back to one token per step, and returns to copying once the recent output
//! uniquely locates a position in the input. For any prefix-consistent
//! [`Scorer`] the result is exactly the greedy decode.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common choices.
//!
//! ```
//! use aggdec::{decode, prepare_input, DecodeConfig, Scheme, ScriptedScorerF64, Vocab};
//!
//! let vocab = Vocab::from_corpus(["she go to school"], Scheme::Whitespace);
//! let scorer = ScriptedScorerF64::identity(&vocab);
//! let x = prepare_input(&vocab.tokenize("she go to school", Scheme::Whitespace), &vocab)?;
//! let result = decode(&scorer, &x, &DecodeConfig::aggressive())?;
//! assert_eq!(result.sequential_iterations(), 1);
//! # Ok::<(), aggdec::Error>(())
//! ```

pub mod config;
pub mod decode;
pub mod error;
pub mod metrics;
pub mod model;
pub mod scalar;
pub mod sequence;
pub mod trace;
pub mod vocab;

pub use config::{DecodeConfig, DecodeMode, LMax};
pub use decode::{
    aggressive_decode, argmax_with_tiebreak, beam_decode, decode, find_bifurcation,
    find_suffix_match, greedy_decode, DecodeResult, SuffixMatch,
};
pub use error::{Error, Result};
pub use metrics::{
    bench, check_equivalence, edit_ratio, levenshtein, sweep_depth, sweep_lmax, BenchConfig,
    EquivalenceReport, SentenceReport, StepStats, Timing,
};
pub use model::{
    Logits, NgramParams, NgramScorer, Scorer, ScoringSession, ScriptedScorer, TinyTransformer,
    TransformerConfig,
};
pub use scalar::Scalar;
pub use sequence::{prepare_input, PreparedInput, TokenSequence};
pub use trace::{DecodeTrace, IterationRecord, Mode};
pub use vocab::{detokenize, detokenize_with, tokenize, Scheme, TokenId, Vocab};

pub type TinyTransformerF32 = TinyTransformer<f32>;
pub type TinyTransformerF64 = TinyTransformer<f64>;
pub type NgramScorerF64 = NgramScorer<f64>;
pub type ScriptedScorerF64 = ScriptedScorer<f64>;
pub type LogitsF32 = Logits<f32>;
pub type LogitsF64 = Logits<f64>;
