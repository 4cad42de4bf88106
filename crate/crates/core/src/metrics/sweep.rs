//! Parameter sweeps over the aggressive window cap and over encoder/decoder
//! depth.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::bench::{thread_pool, time_decode, Timing};
use super::stats::{median, StepStats};
use crate::config::{DecodeConfig, DecodeMode, LMax};
use crate::decode::{decode, greedy_decode};
use crate::error::{Error, Result};
use crate::model::{Scorer, TinyTransformer, TransformerConfig};
use crate::scalar::Scalar;
use crate::sequence::{PreparedInput, TokenSequence};
use crate::vocab::Vocab;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmaxRow {
    pub l_max: LMax,
    pub sentences: usize,
    /// Totals over the corpus.
    pub stats: StepStats,
    /// Every output equals the greedy output.
    pub matches_greedy: bool,
}

/// Aggregate aggressive-decoding cost for each window cap.
pub fn sweep_lmax<T, S>(
    scorer: &S,
    corpus: &[PreparedInput],
    values: &[LMax],
    base: &DecodeConfig,
    timing: Timing,
) -> Result<Vec<LmaxRow>>
where
    T: Scalar,
    S: Scorer<T>,
{
    let greedy_cfg = base.clone().with_mode(DecodeMode::Greedy);
    let reference: Vec<TokenSequence> = corpus
        .iter()
        .map(|x| greedy_decode(scorer, x, &greedy_cfg).map(|r| r.output))
        .collect::<Result<_>>()?;

    values
        .iter()
        .map(|&l_max| {
            let cfg = base
                .clone()
                .with_mode(DecodeMode::Aggressive)
                .with_l_max(l_max);
            let mut stats = StepStats::default();
            let mut matches_greedy = true;
            for (x, want) in corpus.iter().zip(&reference) {
                let (r, wall) = time_decode(timing, || decode(scorer, x, &cfg))?;
                matches_greedy &= &r.output == want;
                stats.accumulate(&StepStats::from_result(&r, wall));
            }
            Ok(LmaxRow {
                l_max,
                sentences: corpus.len(),
                stats,
                matches_greedy,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthRow {
    pub enc_layers: usize,
    pub dec_layers: usize,
    pub greedy: StepStats,
    pub aggressive: StepStats,
    /// Median encoder time, summed over the corpus.
    #[serde(with = "super::stats::secs")]
    pub encode_wall: Duration,
    pub matches_greedy: bool,
}

impl DepthRow {
    pub fn label(&self) -> String {
        format!("{}+{}", self.enc_layers, self.dec_layers)
    }
}

/// Builds one tiny transformer per config and times greedy and aggressive
/// decoding over the corpus. Configs must agree on `model_dim` and `heads`.
pub fn sweep_depth<T: Scalar>(
    configs: &[TransformerConfig],
    vocab: &Vocab,
    corpus: &[PreparedInput],
    base: &DecodeConfig,
    timing: Timing,
    threads: usize,
) -> Result<Vec<DepthRow>> {
    if let Some(first) = configs.first() {
        if configs
            .iter()
            .any(|c| c.model_dim != first.model_dim || c.heads != first.heads)
        {
            return Err(Error::InvalidTransformerConfig(
                "depth sweep configs must share model_dim and heads".into(),
            ));
        }
    }
    let pool = thread_pool(threads);
    configs
        .iter()
        .map(|cfg| {
            let model = TinyTransformer::<T>::new(cfg.clone(), vocab)?;
            pool.install(|| depth_row(&model, corpus, base, timing))
        })
        .collect()
}

fn depth_row<T: Scalar>(
    model: &TinyTransformer<T>,
    corpus: &[PreparedInput],
    base: &DecodeConfig,
    timing: Timing,
) -> Result<DepthRow> {
    let greedy_cfg = base.clone().with_mode(DecodeMode::Greedy);
    let aggressive_cfg = base.clone().with_mode(DecodeMode::Aggressive);
    let mut greedy = StepStats::default();
    let mut aggressive = StepStats::default();
    let mut encode_wall = Duration::ZERO;
    let mut matches_greedy = true;
    for x in corpus {
        let (g, gw) = time_decode(timing, || decode(model, x, &greedy_cfg))?;
        let (a, aw) = time_decode(timing, || decode(model, x, &aggressive_cfg))?;
        matches_greedy &= g.output == a.output;
        greedy.accumulate(&StepStats::from_result(&g, gw));
        aggressive.accumulate(&StepStats::from_result(&a, aw));

        let mut samples = Vec::with_capacity(timing.repetitions);
        for _ in 0..timing.repetitions.max(1) {
            let start = Instant::now();
            std::hint::black_box(model.encode(x));
            samples.push(start.elapsed());
        }
        encode_wall += median(&mut samples);
    }
    let cfg = model.config();
    Ok(DepthRow {
        enc_layers: cfg.encoder_layers,
        dec_layers: cfg.decoder_layers,
        greedy,
        aggressive,
        encode_wall,
        matches_greedy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ScriptedScorer;
    use crate::sequence::prepare_input;
    use crate::vocab::TokenId;

    const QUICK: Timing = Timing {
        repetitions: 1,
        warmup: 0,
    };

    #[test]
    fn lmax_iterations_nonincreasing() {
        let v = Vocab::new((0..50).map(|i| format!("w{i}"))).unwrap();
        let s: ScriptedScorer<f64> = ScriptedScorer::identity(&v);
        let corpus: Vec<PreparedInput> = [3u32, 12, 25, 39]
            .iter()
            .map(|&n| {
                let raw: Vec<TokenId> = (0..n).map(|k| TokenId(4 + k)).collect();
                prepare_input(&raw, &v).unwrap()
            })
            .collect();
        let values: Vec<LMax> = [1, 2, 3, 5, 10, 20, 40]
            .iter()
            .map(|&n| LMax::limited(n).unwrap())
            .chain([LMax::Unlimited])
            .collect();
        let rows = sweep_lmax(&s, &corpus, &values, &DecodeConfig::aggressive(), QUICK).unwrap();
        let iters: Vec<usize> = rows.iter().map(|r| r.stats.sequential_iterations).collect();
        assert!(iters.windows(2).all(|w| w[0] >= w[1]), "{iters:?}");
        assert_eq!(iters[0], 3 + 12 + 25 + 39 + 4);
        assert_eq!(iters[6], iters[7]);
        assert!(rows.iter().all(|r| r.matches_greedy));
    }

    #[test]
    fn depth_configs_must_share_width() {
        let v = Vocab::new(["a"]).unwrap();
        let cfgs = [
            TransformerConfig::new(1, 1, 16, 0),
            TransformerConfig::new(1, 1, 32, 0),
        ];
        let err = sweep_depth::<f32>(&cfgs, &v, &[], &DecodeConfig::default(), QUICK, 1);
        assert!(matches!(err, Err(Error::InvalidTransformerConfig(_))));
    }

    #[test]
    fn depth_rows_report_layers() {
        let v = Vocab::new(["a", "b", "c"]).unwrap();
        let x = prepare_input(&[TokenId(4), TokenId(5), TokenId(6)], &v).unwrap();
        let cfgs = [
            TransformerConfig::new(1, 2, 16, 3),
            TransformerConfig::new(2, 1, 16, 3),
        ];
        let rows = sweep_depth::<f32>(
            &cfgs,
            &v,
            &[x],
            &DecodeConfig::default().with_max_len(8),
            QUICK,
            1,
        )
        .unwrap();
        assert_eq!(rows[0].label(), "1+2");
        assert_eq!(rows[1].label(), "2+1");
        assert!(rows.iter().all(|r| r.matches_greedy));
    }
}
