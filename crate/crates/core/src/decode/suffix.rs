use serde::{Deserialize, Serialize};

use crate::sequence::PreparedInput;
use crate::vocab::TokenId;

/// The output suffix `o[j-q ..= j]` equals `x[i-q ..= i]`, and that
/// substring occurs exactly once in `x[0 ..= n]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SuffixMatch {
    pub i: usize,
    pub q: usize,
}

/// Shortest output suffix that occurs exactly once in `[BOS, x_1 .. x_n]`.
///
/// Candidate anchors are the input positions holding the last output token;
/// each growth step of `q` filters them by one more token to the left. The
/// search stops with no match as soon as no candidate survives, or when the
/// whole output has been consumed with several candidates left. The PAD
/// position is never an anchor.
pub fn find_suffix_match(o: &[TokenId], x: &PreparedInput) -> Option<SuffixMatch> {
    let j = o.len().checked_sub(1)?;
    let window = &x[..=x.n()];
    let mut candidates: Vec<usize> = window
        .iter()
        .enumerate()
        .filter_map(|(i, &t)| (t == o[j]).then_some(i))
        .collect();
    let mut q = 0;
    loop {
        match candidates.as_slice() {
            [] => return None,
            [i] => return Some(SuffixMatch { i: *i, q }),
            _ => {}
        }
        q += 1;
        if q > j {
            return None;
        }
        candidates.retain(|&i| i >= q && window[i - q] == o[j - q]);
    }
}
