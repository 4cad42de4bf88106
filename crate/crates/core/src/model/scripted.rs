//! Deterministic scorer that replays known corrections.
//!
//! For a registered source the scorer's argmax continuation is the scripted
//! target followed by EOS. Once a decoder prefix leaves the target, the
//! prediction at position `p` is `source[p]` (EOS past the end), so every
//! prefix has a defined, predictable continuation. Unregistered inputs
//! behave as if scripted to themselves, which makes the empty script the
//! identity corrector.

use std::collections::HashMap;
use std::marker::PhantomData;
use std::sync::Arc;

use super::{mask_unproducible, Logits, Scorer, ScoringSession};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sequence::{PreparedInput, TokenSequence};
use crate::vocab::{TokenId, Vocab};

/// Logit given to every token other than the scripted choice.
const OFF_LOGIT: f64 = -10.0;

#[derive(Debug, Clone)]
pub struct ScriptedScorer<T> {
    vocab_size: usize,
    script: HashMap<Vec<TokenId>, Arc<[TokenId]>>,
    _scalar: PhantomData<fn() -> T>,
}

#[derive(Debug, Clone)]
pub struct ScriptedEncoded {
    source: Arc<[TokenId]>,
    target: Arc<[TokenId]>,
}

#[derive(Debug, Clone)]
pub struct ScriptedSession<'a, T> {
    vocab_size: usize,
    enc: &'a ScriptedEncoded,
    /// `on_target[p]`: fed tokens `1..=p` equal `target[..p]`.
    on_target: Vec<bool>,
    _scalar: PhantomData<fn() -> T>,
}

impl<T: Scalar> ScriptedScorer<T> {
    pub fn identity(vocab: &Vocab) -> Self {
        ScriptedScorer {
            vocab_size: vocab.len(),
            script: HashMap::new(),
            _scalar: PhantomData,
        }
    }

    pub fn new<I>(pairs: I, vocab: &Vocab) -> Result<Self>
    where
        I: IntoIterator<Item = (TokenSequence, TokenSequence)>,
    {
        let mut script = HashMap::new();
        for (idx, (src, tgt)) in pairs.into_iter().enumerate() {
            for &id in src.iter().chain(tgt.iter()) {
                if id.is_sentinel() {
                    return Err(Error::SentinelInInput { id, pos: idx });
                }
                if !vocab.contains(id) {
                    return Err(Error::InvalidToken(id));
                }
            }
            if script
                .insert(src.into_inner(), Arc::from(tgt.into_inner()))
                .is_some()
            {
                return Err(Error::DuplicateSource(idx));
            }
        }
        Ok(ScriptedScorer {
            vocab_size: vocab.len(),
            script,
            _scalar: PhantomData,
        })
    }

    pub fn len(&self) -> usize {
        self.script.len()
    }

    pub fn is_empty(&self) -> bool {
        self.script.is_empty()
    }
}

impl<T: Scalar> Scorer<T> for ScriptedScorer<T> {
    type Encoded = ScriptedEncoded;
    type Session<'a> = ScriptedSession<'a, T>;

    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn encode(&self, x: &PreparedInput) -> ScriptedEncoded {
        let source: Arc<[TokenId]> = Arc::from(x.raw());
        let target = self
            .script
            .get(x.raw())
            .cloned()
            .unwrap_or_else(|| source.clone());
        ScriptedEncoded { source, target }
    }

    fn session<'a>(&'a self, enc: &'a ScriptedEncoded) -> ScriptedSession<'a, T> {
        ScriptedSession {
            vocab_size: self.vocab_size,
            enc,
            on_target: Vec::new(),
            _scalar: PhantomData,
        }
    }
}

impl<T: Scalar> ScriptedSession<'_, T> {
    fn prediction(&self, p: usize) -> TokenId {
        let seq = if self.on_target[p] {
            &self.enc.target
        } else {
            &self.enc.source
        };
        seq.get(p).copied().unwrap_or(TokenId::EOS)
    }
}

impl<T: Scalar> ScoringSession<T> for ScriptedSession<'_, T> {
    fn cached_len(&self) -> usize {
        self.on_target.len()
    }

    fn feed(&mut self, tokens: &[TokenId]) -> Logits<T> {
        let off = T::from_f64_lossy(OFF_LOGIT);
        let mut out = Logits::with_capacity(self.vocab_size, tokens.len());
        let mut row = vec![off; self.vocab_size];
        for &tok in tokens {
            let p = self.on_target.len();
            let on = match p {
                0 => tok == TokenId::BOS,
                _ => self.on_target[p - 1] && self.enc.target.get(p - 1) == Some(&tok),
            };
            self.on_target.push(on);

            row.fill(off);
            row[self.prediction(p).index()] = T::zero();
            mask_unproducible(&mut row);
            out.push_row(&row);
        }
        out
    }

    fn truncate(&mut self, len: usize) {
        self.on_target.truncate(len);
    }
}
