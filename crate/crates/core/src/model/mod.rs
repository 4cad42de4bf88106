//! The scorer contract and reference scorers.
//!
//! A [`Scorer`] maps an encoder input and a decoder prefix to next-token
//! logits. Decoding goes through a [`ScoringSession`], which owns the
//! incremental decoder state for one input: tokens are fed in order, each fed
//! token yields the logits for the *following* position, and the state can be
//! truncated back to any shorter accepted prefix.
//!
//! Every scorer must be prefix-consistent: the logits for position `j` may
//! depend only on the encoder input and on the decoder tokens `0..=j`, never
//! on how many later tokens were fed in the same call.

mod ngram;
mod scripted;
mod transformer;

pub use ngram::{NgramParams, NgramScorer};
pub use scripted::ScriptedScorer;
pub use transformer::{TinyTransformer, TransformerConfig, TransformerSession};

use crate::scalar::Scalar;
use crate::sequence::PreparedInput;
use crate::vocab::TokenId;

/// Row-major `rows x vocab` logits.
#[derive(Debug, Clone, PartialEq)]
pub struct Logits<T> {
    vocab: usize,
    data: Vec<T>,
}

impl<T: Scalar> Logits<T> {
    pub fn with_capacity(vocab: usize, rows: usize) -> Self {
        Logits {
            vocab,
            data: Vec::with_capacity(vocab * rows),
        }
    }

    pub fn from_flat(vocab: usize, data: Vec<T>) -> Self {
        assert!(
            vocab > 0 && data.len().is_multiple_of(vocab),
            "ragged logits"
        );
        Logits { vocab, data }
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.vocab
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.vocab..(i + 1) * self.vocab]
    }

    pub fn push_row(&mut self, row: &[T]) {
        assert_eq!(row.len(), self.vocab);
        self.data.extend_from_slice(row);
    }

    pub fn iter(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.vocab)
    }
}

pub trait ScoringSession<T: Scalar> {
    /// Decoder positions currently held in the incremental state.
    fn cached_len(&self) -> usize;

    /// Appends `tokens` at positions `cached_len()..` and returns one logits
    /// row per fed token.
    fn feed(&mut self, tokens: &[TokenId]) -> Logits<T>;

    /// Discards state for positions `len..`.
    fn truncate(&mut self, len: usize);
}

pub trait Scorer<T: Scalar>: Send + Sync {
    /// Per-input encoder output, reused across all decoding iterations.
    type Encoded: Send + Sync;
    type Session<'a>: ScoringSession<T> + Clone
    where
        Self: 'a;

    fn vocab_size(&self) -> usize;

    fn encode(&self, x: &PreparedInput) -> Self::Encoded;

    fn session<'a>(&'a self, encoded: &'a Self::Encoded) -> Self::Session<'a>;

    /// Stateless scoring of selected positions of a full decoder prefix.
    fn score_positions(
        &self,
        encoded: &Self::Encoded,
        prefix: &[TokenId],
        positions: &[usize],
    ) -> Logits<T> {
        let mut session = self.session(encoded);
        let all = session.feed(prefix);
        let mut out = Logits::with_capacity(all.vocab(), positions.len());
        for &p in positions {
            out.push_row(all.row(p));
        }
        out
    }
}

/// Sets BOS and PAD to negative infinity; neither is ever emitted.
pub(crate) fn mask_unproducible<T: Scalar>(row: &mut [T]) {
    row[TokenId::BOS.index()] = T::neg_infinity();
    row[TokenId::PAD.index()] = T::neg_infinity();
}

/// Natural-log probability of `id` under softmax(`row`).
pub fn log_prob<T: Scalar>(row: &[T], id: TokenId) -> f64 {
    let vals = row.iter().map(|v| v.to_f64().unwrap_or(f64::NAN));
    let max = vals.clone().fold(f64::NEG_INFINITY, f64::max);
    let x = row[id.index()].to_f64().unwrap_or(f64::NAN);
    if max == f64::INFINITY {
        return if x == f64::INFINITY {
            0.0
        } else {
            f64::NEG_INFINITY
        };
    }
    let lse = max + vals.map(|v| (v - max).exp()).sum::<f64>().ln();
    x - lse
}
