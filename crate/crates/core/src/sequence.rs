//! Token sequences and encoder-input preparation.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::{TokenId, Vocab};

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSequence(Vec<TokenId>);

impl TokenSequence {
    pub fn new(ids: Vec<TokenId>) -> Self {
        TokenSequence(ids)
    }

    pub fn as_slice(&self) -> &[TokenId] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<TokenId> {
        self.0
    }

    pub fn push(&mut self, id: TokenId) {
        self.0.push(id);
    }

    /// Drops a leading BOS and a trailing EOS/PAD, if present.
    pub fn strip_sentinels(&self) -> &[TokenId] {
        let mut s = self.as_slice();
        if let [TokenId::BOS, rest @ ..] = s {
            s = rest;
        }
        if let [rest @ .., TokenId::EOS | TokenId::PAD] = s {
            s = rest;
        }
        s
    }
}

impl Deref for TokenSequence {
    type Target = [TokenId];

    fn deref(&self) -> &[TokenId] {
        &self.0
    }
}

impl FromIterator<TokenId> for TokenSequence {
    fn from_iter<I: IntoIterator<Item = TokenId>>(iter: I) -> Self {
        TokenSequence(iter.into_iter().collect())
    }
}

impl From<Vec<TokenId>> for TokenSequence {
    fn from(v: Vec<TokenId>) -> Self {
        TokenSequence(v)
    }
}

impl From<&[u32]> for TokenSequence {
    fn from(v: &[u32]) -> Self {
        v.iter().copied().map(TokenId).collect()
    }
}

/// An encoder input of shape `[BOS, x_1 .. x_n, PAD]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PreparedInput(TokenSequence);

impl PreparedInput {
    /// Wraps a sequence that already has the prepared shape.
    pub fn from_prepared(seq: TokenSequence) -> Result<Self> {
        match seq.as_slice() {
            [TokenId::BOS, body @ .., TokenId::PAD] => {
                if body.iter().any(|t| t.is_sentinel()) {
                    Err(Error::Unprepared("interior sentinel"))
                } else {
                    Ok(PreparedInput(seq))
                }
            }
            _ => Err(Error::Unprepared("expected [BOS, .., PAD]")),
        }
    }

    /// Number of real tokens, `n`.
    pub fn n(&self) -> usize {
        self.0.len() - 2
    }

    /// `x_1 .. x_n`.
    pub fn raw(&self) -> &[TokenId] {
        &self.0[1..self.0.len() - 1]
    }

    pub fn as_slice(&self) -> &[TokenId] {
        &self.0
    }

    pub fn sequence(&self) -> &TokenSequence {
        &self.0
    }
}

impl Deref for PreparedInput {
    type Target = [TokenId];

    fn deref(&self) -> &[TokenId] {
        &self.0
    }
}

/// Returns `[BOS] + raw + [PAD]`.
pub fn prepare_input(raw: &[TokenId], vocab: &Vocab) -> Result<PreparedInput> {
    let mut ids = Vec::with_capacity(raw.len() + 2);
    ids.push(vocab.bos());
    for (pos, &id) in raw.iter().enumerate() {
        if id.is_sentinel() {
            return Err(Error::SentinelInInput { id, pos });
        }
        if !vocab.contains(id) {
            return Err(Error::InvalidToken(id));
        }
        ids.push(id);
    }
    ids.push(vocab.pad());
    Ok(PreparedInput(TokenSequence(ids)))
}
