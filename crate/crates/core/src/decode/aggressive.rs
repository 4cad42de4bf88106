//! Copy-and-verify decoding that is token-for-token identical to greedy
//! decoding for any prefix-consistent scorer.
//!
//! The loop keeps an accepted output `o_0 .. o_j` (with `o_0 = BOS`). Each
//! iteration first looks for a unique suffix match `(i, q)` against the
//! input. With a match, the input tokens after `x_i` are assumed to be the
//! continuation: `w` of them are copied, the decoder is fed `o_j` followed by
//! the first `w - 1` copies, and all `w` positions are scored in one call.
//! Predictions are accepted up to and including the first one that differs
//! from its copied token; everything scored after it is discarded. Without a
//! match one token is decoded autoregressively. The input's trailing PAD is
//! part of the final copy window and is never predicted, so a window that
//! reaches it always ends in a bifurcation.

use super::{argmax_with_tiebreak, find_suffix_match, DecodeResult};
use crate::config::DecodeConfig;
use crate::error::{Error, Result};
use crate::model::{log_prob, Scorer, ScoringSession};
use crate::scalar::Scalar;
use crate::sequence::{PreparedInput, TokenSequence};
use crate::trace::{DecodeTrace, IterationRecord, Mode};
use crate::vocab::TokenId;

/// Smallest 1-based `k` with `predictions[k-1] != copied[k-1]`.
pub fn find_bifurcation(predictions: &[TokenId], copied: &[TokenId]) -> Result<Option<usize>> {
    if predictions.len() != copied.len() {
        return Err(Error::WindowMismatch {
            predictions: predictions.len(),
            copied: copied.len(),
        });
    }
    Ok(predictions
        .iter()
        .zip(copied)
        .position(|(p, c)| p != c)
        .map(|k| k + 1))
}

pub fn aggressive_decode<T, S>(
    scorer: &S,
    x: &PreparedInput,
    cfg: &DecodeConfig,
) -> Result<DecodeResult>
where
    T: Scalar,
    S: Scorer<T>,
{
    cfg.validate()?;
    let n = x.n();
    let max_len = cfg.max_len_for(n);
    let enc = scorer.encode(x);
    let mut session = scorer.session(&enc);

    let mut output = vec![TokenId::BOS];
    let mut trace = DecodeTrace::default();
    let mut score = 0.0;
    let mut predictions = Vec::new();

    loop {
        let j = output.len() - 1;
        if output[j] == TokenId::EOS || j >= max_len {
            break;
        }
        // the session holds decoder inputs o_0 .. o_{j-1}
        debug_assert_eq!(session.cached_len(), j);

        let Some(m) = find_suffix_match(&output, x) else {
            let logits = session.feed(&[output[j]]);
            let next = argmax_with_tiebreak(logits.row(0))?;
            score += log_prob(logits.row(0), next);
            output.push(next);
            trace.push(IterationRecord::autoregressive());
            continue;
        };

        let w = cfg.l_max.cap(n + 1 - m.i).min(max_len - j);
        let copied = &x[m.i + 1..=m.i + w];
        let mut fed = Vec::with_capacity(w);
        fed.push(output[j]);
        fed.extend_from_slice(&copied[..w - 1]);
        let logits = session.feed(&fed);

        predictions.clear();
        for row in logits.iter() {
            predictions.push(argmax_with_tiebreak(row)?);
        }
        let bifurcation = find_bifurcation(&predictions, copied)?;
        let accepted = bifurcation.unwrap_or(w);
        for (r, &tok) in predictions[..accepted].iter().enumerate() {
            score += log_prob(logits.row(r), tok);
        }
        output.extend_from_slice(&predictions[..accepted]);
        // inputs past o_{j+accepted-1} were copies that are no longer valid
        session.truncate(j + accepted);
        trace.push(IterationRecord {
            mode: Mode::Aggressive,
            positions_scored: w,
            accepted,
            suffix_match: Some(m),
            bifurcation: bifurcation.map(|k| j + k),
        });
    }

    debug_assert_eq!(trace.validate(output.len() - 1), Ok(()));
    let positions_scored = trace.positions_scored();
    Ok(DecodeResult {
        output: TokenSequence::new(output),
        trace,
        score,
        positions_scored,
    })
}
