use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vocab::TokenId;

/// Index of the largest logit; ties go to the smallest id. Negative
/// infinity marks a masked entry.
pub fn argmax_with_tiebreak<T: Scalar>(logits: &[T]) -> Result<TokenId> {
    let mut best: Option<(usize, T)> = None;
    for (i, &v) in logits.iter().enumerate() {
        if v.is_nan() || v == T::neg_infinity() {
            continue;
        }
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| TokenId(i as u32)).ok_or(Error::AllMasked)
}
