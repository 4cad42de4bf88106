use super::{argmax_with_tiebreak, DecodeResult};
use crate::config::DecodeConfig;
use crate::error::Result;
use crate::model::{log_prob, Scorer, ScoringSession};
use crate::scalar::Scalar;
use crate::sequence::{PreparedInput, TokenSequence};
use crate::trace::{DecodeTrace, IterationRecord};
use crate::vocab::TokenId;

/// One token per scorer call, always the argmax.
pub fn greedy_decode<T, S>(
    scorer: &S,
    x: &PreparedInput,
    cfg: &DecodeConfig,
) -> Result<DecodeResult>
where
    T: Scalar,
    S: Scorer<T>,
{
    cfg.validate()?;
    let max_len = cfg.max_len_for(x.n());
    let enc = scorer.encode(x);
    let mut session = scorer.session(&enc);

    let mut output = vec![TokenId::BOS];
    let mut trace = DecodeTrace::default();
    let mut score = 0.0;
    while output.len() - 1 < max_len {
        let last = *output.last().expect("nonempty");
        if last == TokenId::EOS {
            break;
        }
        let logits = session.feed(&[last]);
        let next = argmax_with_tiebreak(logits.row(0))?;
        score += log_prob(logits.row(0), next);
        output.push(next);
        trace.push(IterationRecord::autoregressive());
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
