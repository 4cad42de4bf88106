//! Timed decoding in the online setting: one sentence per decode call.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::levenshtein::edit_ratio;
use super::stats::{median, StepStats};
use crate::config::{DecodeConfig, DecodeMode, LMax};
use crate::decode::{decode, DecodeResult};
use crate::error::Result;
use crate::model::Scorer;
use crate::scalar::Scalar;
use crate::sequence::PreparedInput;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub repetitions: usize,
    pub warmup: usize,
}

impl Default for Timing {
    fn default() -> Self {
        Timing {
            repetitions: 5,
            warmup: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub decode: DecodeConfig,
    pub timing: Timing,
    /// Threads available to the scorer's internal math.
    pub threads: usize,
    /// Sentences timed concurrently by the harness.
    pub workers: usize,
    /// Also time beam search as the baseline.
    pub beam: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            decode: DecodeConfig::default(),
            timing: Timing::default(),
            threads: 1,
            workers: 1,
            beam: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceReport {
    pub sentence: usize,
    pub input_len: usize,
    pub edit_ratio: f64,
    pub greedy: StepStats,
    pub aggressive: StepStats,
    pub beam: Option<StepStats>,
    pub iteration_speedup: f64,
    pub wall_speedup: f64,
    pub l_max: LMax,
}

/// Runs `warmup` untimed and `repetitions` timed decodes; returns the last
/// result and the median wall-clock.
pub fn time_decode<F>(timing: Timing, mut run: F) -> Result<(DecodeResult, Duration)>
where
    F: FnMut() -> Result<DecodeResult>,
{
    for _ in 0..timing.warmup {
        run()?;
    }
    let mut samples = Vec::with_capacity(timing.repetitions);
    let mut last = None;
    for _ in 0..timing.repetitions.max(1) {
        let start = Instant::now();
        let r = run()?;
        samples.push(start.elapsed());
        last = Some(r);
    }
    Ok((last.expect("at least one repetition"), median(&mut samples)))
}

pub(crate) fn thread_pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool")
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        f64::NAN
    } else {
        num / den
    }
}

fn bench_sentence<T, S>(
    scorer: &S,
    index: usize,
    x: &PreparedInput,
    cfg: &BenchConfig,
    pool: &rayon::ThreadPool,
) -> Result<SentenceReport>
where
    T: Scalar,
    S: Scorer<T>,
{
    let run = |mode: DecodeMode| -> Result<(DecodeResult, Duration)> {
        let dc = cfg.decode.clone().with_mode(mode);
        pool.install(|| time_decode(cfg.timing, || decode(scorer, x, &dc)))
    };
    let (greedy, greedy_wall) = run(DecodeMode::Greedy)?;
    let (aggressive, aggressive_wall) = run(DecodeMode::Aggressive)?;
    let beam = if cfg.beam {
        let (b, wall) = run(DecodeMode::Beam)?;
        Some(StepStats::from_result(&b, wall))
    } else {
        None
    };
    let greedy_stats = StepStats::from_result(&greedy, greedy_wall);
    let aggressive_stats = StepStats::from_result(&aggressive, aggressive_wall);
    let edit_ratio = edit_ratio(x.raw(), greedy.tokens())?;
    Ok(SentenceReport {
        sentence: index,
        input_len: x.n(),
        edit_ratio,
        greedy: greedy_stats,
        aggressive: aggressive_stats,
        beam,
        iteration_speedup: ratio(
            greedy_stats.sequential_iterations as f64,
            aggressive_stats.sequential_iterations as f64,
        ),
        wall_speedup: ratio(greedy_wall.as_secs_f64(), aggressive_wall.as_secs_f64()),
        l_max: cfg.decode.l_max,
    })
}

/// Times greedy, aggressive and optionally beam decoding of every sentence.
/// Sentences must be nonempty (the edit ratio is undefined otherwise).
pub fn bench<T, S>(
    scorer: &S,
    corpus: &[PreparedInput],
    cfg: &BenchConfig,
) -> Result<Vec<SentenceReport>>
where
    T: Scalar,
    S: Scorer<T>,
{
    cfg.decode.validate()?;
    let pool = thread_pool(cfg.threads);
    if cfg.workers <= 1 {
        return corpus
            .iter()
            .enumerate()
            .map(|(i, x)| bench_sentence(scorer, i, x, cfg, &pool))
            .collect();
    }
    let harness = thread_pool(cfg.workers);
    harness.install(|| {
        corpus
            .par_iter()
            .enumerate()
            .map(|(i, x)| bench_sentence(scorer, i, x, cfg, &pool))
            .collect()
    })
}
