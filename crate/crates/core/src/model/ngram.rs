//! Additive-smoothing n-gram scorer with a copy bias toward the
//! position-aligned input token.
//!
//! `logit(t | h, p) = ln((c(h, t) + a) / (c(h) + a * S)) + bias * [t == x_{p+1}]`
//!
//! where `h` is the last `order - 1` decoder tokens (left-padded with BOS),
//! `S` is the number of producible tokens and `x_{p+1}` is replaced by EOS
//! once it reaches the input's PAD. BOS and PAD are masked.

use std::collections::HashMap;
use std::marker::PhantomData;

use serde::{Deserialize, Serialize};

use super::{mask_unproducible, Logits, Scorer, ScoringSession};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sequence::{PreparedInput, TokenSequence};
use crate::vocab::{TokenId, Vocab};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NgramParams {
    pub order: usize,
    pub smoothing: f64,
    pub copy_bias: f64,
}

impl Default for NgramParams {
    fn default() -> Self {
        NgramParams {
            order: 3,
            smoothing: 0.1,
            copy_bias: 4.0,
        }
    }
}

#[derive(Debug, Default, Clone)]
struct ContextCounts {
    total: u64,
    next: HashMap<TokenId, u64>,
}

#[derive(Debug, Clone)]
pub struct NgramScorer<T> {
    params: NgramParams,
    vocab_size: usize,
    counts: HashMap<Vec<TokenId>, ContextCounts>,
    _scalar: PhantomData<fn() -> T>,
}

#[derive(Debug, Clone)]
pub struct NgramSession<'a, T> {
    scorer: &'a NgramScorer<T>,
    x: &'a PreparedInput,
    fed: Vec<TokenId>,
}

impl<T: Scalar> NgramScorer<T> {
    pub fn new(corpus: &[TokenSequence], params: NgramParams, vocab: &Vocab) -> Result<Self> {
        if params.order == 0 {
            return Err(Error::InvalidNgram("order must be >= 1".into()));
        }
        if !(params.smoothing > 0.0 && params.smoothing.is_finite()) {
            return Err(Error::InvalidNgram("smoothing must be > 0".into()));
        }
        if params.copy_bias.is_nan() {
            return Err(Error::InvalidNgram("copy bias is NaN".into()));
        }
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let ctx_len = params.order - 1;
        let mut counts: HashMap<Vec<TokenId>, ContextCounts> = HashMap::new();
        for sentence in corpus {
            let mut padded = vec![TokenId::BOS; ctx_len.max(1)];
            for &id in sentence.iter() {
                if !vocab.contains(id) {
                    return Err(Error::InvalidToken(id));
                }
            }
            padded.extend_from_slice(sentence);
            padded.push(TokenId::EOS);
            let start = ctx_len.max(1);
            for pos in start..padded.len() {
                let ctx = padded[pos - ctx_len..pos].to_vec();
                let entry = counts.entry(ctx).or_default();
                entry.total += 1;
                *entry.next.entry(padded[pos]).or_default() += 1;
            }
        }
        Ok(NgramScorer {
            params,
            vocab_size: vocab.len(),
            counts,
            _scalar: PhantomData,
        })
    }

    pub fn params(&self) -> NgramParams {
        self.params
    }

    fn context(&self, fed: &[TokenId], p: usize) -> Vec<TokenId> {
        let ctx_len = self.params.order - 1;
        let have = p + 1;
        let mut ctx = Vec::with_capacity(ctx_len);
        if have < ctx_len {
            ctx.resize(ctx_len - have, TokenId::BOS);
            ctx.extend_from_slice(&fed[..have]);
        } else {
            ctx.extend_from_slice(&fed[have - ctx_len..have]);
        }
        ctx
    }

    fn fill_row(&self, ctx: &[TokenId], aligned: TokenId, row: &mut [T]) {
        let a = self.params.smoothing;
        // BOS and PAD are never produced, so they are outside the support.
        let support = (self.vocab_size - 2) as f64;
        let stats = self.counts.get(ctx);
        let total = stats.map_or(0, |s| s.total) as f64;
        let denom = (total + a * support).ln();
        for (id, slot) in row.iter_mut().enumerate() {
            let c = stats
                .and_then(|s| s.next.get(&TokenId(id as u32)))
                .copied()
                .unwrap_or(0) as f64;
            let mut logit = (c + a).ln() - denom;
            if id == aligned.index() {
                logit += self.params.copy_bias;
            }
            *slot = T::from_f64_lossy(logit);
        }
        mask_unproducible(row);
    }
}

impl<T: Scalar> Scorer<T> for NgramScorer<T> {
    type Encoded = PreparedInput;
    type Session<'a> = NgramSession<'a, T>;

    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn encode(&self, x: &PreparedInput) -> PreparedInput {
        x.clone()
    }

    fn session<'a>(&'a self, x: &'a PreparedInput) -> NgramSession<'a, T> {
        NgramSession {
            scorer: self,
            x,
            fed: Vec::new(),
        }
    }
}

impl<T: Scalar> ScoringSession<T> for NgramSession<'_, T> {
    fn cached_len(&self) -> usize {
        self.fed.len()
    }

    fn feed(&mut self, tokens: &[TokenId]) -> Logits<T> {
        let mut out = Logits::with_capacity(self.scorer.vocab_size, tokens.len());
        let mut row = vec![T::zero(); self.scorer.vocab_size];
        for &tok in tokens {
            let p = self.fed.len();
            self.fed.push(tok);
            let ctx = self.scorer.context(&self.fed, p);
            let aligned = match self.x.get(p + 1) {
                Some(&t) if t != TokenId::PAD => t,
                _ => TokenId::EOS,
            };
            self.scorer.fill_row(&ctx, aligned, &mut row);
            out.push_row(&row);
        }
        out
    }

    fn truncate(&mut self, len: usize) {
        self.fed.truncate(len);
    }
}
