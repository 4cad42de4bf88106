//! Beam search, used only as the latency baseline.
//!
//! Hypotheses are ranked by summed log-probability; finished hypotheses are
//! compared by `score / length^alpha`. Each step expands every live
//! hypothesis, considers the best `2k` candidates, finalizes EOS candidates
//! ranked within the top `k`, and keeps the best `k` non-EOS candidates
//! alive. Search stops once `k` hypotheses have finished or `MAX_LEN` is
//! reached. With `k = 1` and `alpha = 0` this is exactly greedy decoding.

use std::cmp::Ordering;

use super::DecodeResult;
use crate::config::DecodeConfig;
use crate::error::Result;
use crate::model::{log_prob, Scorer, ScoringSession};
use crate::scalar::Scalar;
use crate::sequence::{PreparedInput, TokenSequence};
use crate::trace::{DecodeTrace, IterationRecord};
use crate::vocab::TokenId;

struct Hypothesis<S> {
    tokens: Vec<TokenId>,
    score: f64,
    session: S,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    parent: usize,
    token: TokenId,
    score: f64,
}

fn rank(a: &Candidate, b: &Candidate) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then(a.parent.cmp(&b.parent))
        .then(a.token.cmp(&b.token))
}

fn normalized(tokens: &[TokenId], score: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return score;
    }
    let len = (tokens.len() - 1).max(1) as f64;
    score / len.powf(alpha)
}

pub fn beam_decode<T, S>(scorer: &S, x: &PreparedInput, cfg: &DecodeConfig) -> Result<DecodeResult>
where
    T: Scalar,
    S: Scorer<T>,
{
    cfg.validate()?;
    let k = cfg.beam_size;
    let max_len = cfg.max_len_for(x.n());
    let enc = scorer.encode(x);

    let mut live = vec![Hypothesis {
        tokens: vec![TokenId::BOS],
        score: 0.0,
        session: scorer.session(&enc),
    }];
    let mut finished: Vec<(Vec<TokenId>, f64)> = Vec::new();
    let mut positions_scored = 0;
    let mut candidates = Vec::new();

    for _step in 0..max_len {
        candidates.clear();
        for (parent, hyp) in live.iter_mut().enumerate() {
            let last = *hyp.tokens.last().expect("nonempty");
            let logits = hyp.session.feed(&[last]);
            positions_scored += 1;
            let row = logits.row(0);
            let mut local: Vec<Candidate> = row
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != T::neg_infinity())
                .map(|(id, _)| {
                    let token = TokenId(id as u32);
                    Candidate {
                        parent,
                        token,
                        score: hyp.score + log_prob(row, token),
                    }
                })
                .collect();
            local.sort_by(rank);
            local.truncate(2 * k);
            candidates.extend(local);
        }
        candidates.sort_by(rank);
        candidates.truncate(2 * k);

        let mut next = Vec::with_capacity(k);
        for (r, c) in candidates.iter().enumerate() {
            let parent = &live[c.parent];
            if c.token == TokenId::EOS {
                if r < k && finished.len() < k {
                    let mut tokens = parent.tokens.clone();
                    tokens.push(TokenId::EOS);
                    finished.push((tokens, c.score));
                }
            } else if next.len() < k {
                let mut tokens = parent.tokens.clone();
                tokens.push(c.token);
                next.push(Hypothesis {
                    tokens,
                    score: c.score,
                    session: parent.session.clone(),
                });
            }
        }
        live = next;
        if finished.len() >= k || live.is_empty() {
            break;
        }
    }

    if finished.len() < k {
        finished.extend(live.into_iter().map(|h| (h.tokens, h.score)));
    }
    let alpha = cfg.length_penalty;
    let (best, score) = finished
        .into_iter()
        .enumerate()
        .max_by(|(ia, (ta, sa)), (ib, (tb, sb))| {
            normalized(ta, *sa, alpha)
                .partial_cmp(&normalized(tb, *sb, alpha))
                .unwrap_or(Ordering::Equal)
                // earlier entries win ties
                .then(ib.cmp(ia))
        })
        .map(|(_, h)| h)
        .expect("at least one hypothesis");

    let trace = DecodeTrace {
        iterations: vec![IterationRecord::autoregressive(); best.len() - 1],
    };
    Ok(DecodeResult {
        output: TokenSequence::new(best),
        trace,
        score,
        positions_scored,
    })
}
