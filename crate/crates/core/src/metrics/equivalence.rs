use serde::Serialize;

use crate::config::{DecodeConfig, LMax};
use crate::decode::{aggressive_decode, greedy_decode, DecodeResult};
use crate::error::Result;
use crate::model::Scorer;
use crate::scalar::Scalar;
use crate::sequence::PreparedInput;

/// One greedy/aggressive pair that disagreed, with both traces.
#[derive(Debug, Clone, Serialize)]
pub struct Mismatch {
    pub sentence: usize,
    pub l_max: LMax,
    pub max_len: Option<usize>,
    pub greedy: DecodeResult,
    pub aggressive: DecodeResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceFailure {
    pub sentence: usize,
    pub l_max: LMax,
    pub max_len: Option<usize>,
    pub violation: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct EquivalenceReport {
    pub sentences: usize,
    /// Greedy/aggressive pairs compared.
    pub comparisons: usize,
    pub mismatches: Vec<Mismatch>,
    pub trace_failures: Vec<TraceFailure>,
    /// Aggressive decodes that used more iterations than greedy.
    pub dominance_failures: usize,
    pub greedy_iterations: usize,
    pub aggressive_iterations: usize,
}

impl EquivalenceReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty() && self.trace_failures.is_empty() && self.dominance_failures == 0
    }

    pub fn merge(&mut self, other: EquivalenceReport) {
        self.sentences += other.sentences;
        self.comparisons += other.comparisons;
        self.mismatches.extend(other.mismatches);
        self.trace_failures.extend(other.trace_failures);
        self.dominance_failures += other.dominance_failures;
        self.greedy_iterations += other.greedy_iterations;
        self.aggressive_iterations += other.aggressive_iterations;
    }

    pub fn summary(&self) -> String {
        format!(
            "{} mismatches / {} sentences",
            self.mismatches.len(),
            self.sentences
        )
    }
}

fn check_trace(
    report: &mut EquivalenceReport,
    result: &DecodeResult,
    sentence: usize,
    l_max: LMax,
    max_len: Option<usize>,
) {
    if let Err(v) = result.trace.validate(result.generated().len()) {
        report.trace_failures.push(TraceFailure {
            sentence,
            l_max,
            max_len,
            violation: v.to_string(),
        });
    }
}

/// Decodes every sentence greedily and aggressively for each `l_max` and
/// `max_len` in the sweep and records any disagreement. `None` in
/// `max_lens` means the default `MAX_LEN`.
pub fn check_equivalence<T, S>(
    scorer: &S,
    corpus: &[PreparedInput],
    l_maxes: &[LMax],
    max_lens: &[Option<usize>],
) -> Result<EquivalenceReport>
where
    T: Scalar,
    S: Scorer<T>,
{
    let mut report = EquivalenceReport {
        sentences: corpus.len(),
        ..Default::default()
    };
    let default_len = [None];
    let max_lens = if max_lens.is_empty() {
        &default_len[..]
    } else {
        max_lens
    };
    for (sentence, x) in corpus.iter().enumerate() {
        for &max_len in max_lens {
            let mut greedy_cfg = DecodeConfig::greedy();
            greedy_cfg.max_len = max_len;
            let greedy = greedy_decode(scorer, x, &greedy_cfg)?;
            check_trace(&mut report, &greedy, sentence, LMax::Unlimited, max_len);
            for &l_max in l_maxes {
                let cfg = DecodeConfig {
                    max_len,
                    l_max,
                    ..DecodeConfig::aggressive()
                };
                let aggressive = aggressive_decode(scorer, x, &cfg)?;
                report.comparisons += 1;
                report.greedy_iterations += greedy.sequential_iterations();
                report.aggressive_iterations += aggressive.sequential_iterations();
                check_trace(&mut report, &aggressive, sentence, l_max, max_len);
                if aggressive.sequential_iterations() > greedy.sequential_iterations() {
                    report.dominance_failures += 1;
                }
                if aggressive.output != greedy.output {
                    report.mismatches.push(Mismatch {
                        sentence,
                        l_max,
                        max_len,
                        greedy: greedy.clone(),
                        aggressive,
                    });
                }
            }
        }
    }
    Ok(report)
}
