//! Synthetic corpora shared by the integration targets.
#![allow(dead_code)]

use std::collections::HashSet;

use aggdec::{prepare_input, PreparedInput, TokenId, TokenSequence, Vocab};
use rand::Rng;

pub fn vocab(regular: usize) -> Vocab {
    Vocab::new((0..regular).map(|i| format!("w{i}"))).unwrap()
}

pub fn random_sentence<R: Rng>(rng: &mut R, vocab: &Vocab, len: usize) -> Vec<TokenId> {
    let regular = vocab.len() as u32 - TokenId::FIRST_REGULAR;
    (0..len)
        .map(|_| TokenId(TokenId::FIRST_REGULAR + rng.gen_range(0..regular)))
        .collect()
}

/// Applies `edits` random substitutions, insertions and deletions.
pub fn corrupt<R: Rng>(rng: &mut R, vocab: &Vocab, src: &[TokenId], edits: usize) -> Vec<TokenId> {
    let regular = vocab.len() as u32 - TokenId::FIRST_REGULAR;
    let mut out = src.to_vec();
    for _ in 0..edits {
        let tok = TokenId(TokenId::FIRST_REGULAR + rng.gen_range(0..regular));
        match rng.gen_range(0..3) {
            0 if !out.is_empty() => {
                let p = rng.gen_range(0..out.len());
                out[p] = tok;
            }
            1 if out.len() > 1 => {
                let p = rng.gen_range(0..out.len());
                out.remove(p);
            }
            _ => {
                let p = rng.gen_range(0..=out.len());
                out.insert(p, tok);
            }
        }
    }
    out
}

pub fn prepare(raw: &[TokenId], vocab: &Vocab) -> PreparedInput {
    prepare_input(raw, vocab).unwrap()
}

/// Distinct random sentences with lengths drawn from `lens`.
pub fn distinct_sentences<R: Rng>(
    rng: &mut R,
    vocab: &Vocab,
    count: usize,
    lens: std::ops::RangeInclusive<usize>,
) -> Vec<Vec<TokenId>> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let len = rng.gen_range(lens.clone());
        let s = random_sentence(rng, vocab, len);
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    out
}

pub fn to_pairs(src: &[Vec<TokenId>], tgt: &[Vec<TokenId>]) -> Vec<(TokenSequence, TokenSequence)> {
    src.iter()
        .zip(tgt)
        .map(|(s, t)| (s.clone().into(), t.clone().into()))
        .collect()
}
