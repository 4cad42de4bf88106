use crate::error::{Error, Result};

/// Token-level edit distance with unit insert/delete/substitute costs.
pub fn levenshtein<E: PartialEq>(a: &[E], b: &[E]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ea) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, eb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ea != eb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `levenshtein(input, output) / |input|`. Normalized by the input only, so
/// it is not symmetric and may exceed 1.
pub fn edit_ratio<E: PartialEq>(input: &[E], output: &[E]) -> Result<f64> {
    if input.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(levenshtein(input, output) as f64 / input.len() as f64)
}
