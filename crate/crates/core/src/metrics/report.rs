//! CSV rows and JSON aggregates for benchmark output.

use std::io::Write;

use serde::Serialize;

use super::bench::SentenceReport;
use super::stats::{mean, spearman};
use super::sweep::{DepthRow, LmaxRow};
use crate::error::{Error, Result};

/// One CSV line per sentence (bench) or per sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub sentence: Option<usize>,
    pub edit_ratio: Option<f64>,
    pub greedy_iters: Option<usize>,
    pub aggressive_iters: Option<usize>,
    pub iteration_speedup: Option<f64>,
    pub wall_speedup: Option<f64>,
    pub l_max: String,
    pub enc_layers: Option<usize>,
    pub dec_layers: Option<usize>,
    pub greedy_wall_s: Option<f64>,
    pub aggressive_wall_s: Option<f64>,
    pub positions_scored: Option<usize>,
    pub tokens_emitted: Option<usize>,
}

impl CsvRow {
    fn empty(l_max: String) -> Self {
        CsvRow {
            sentence: None,
            edit_ratio: None,
            greedy_iters: None,
            aggressive_iters: None,
            iteration_speedup: None,
            wall_speedup: None,
            l_max,
            enc_layers: None,
            dec_layers: None,
            greedy_wall_s: None,
            aggressive_wall_s: None,
            positions_scored: None,
            tokens_emitted: None,
        }
    }

    pub fn from_sentence(r: &SentenceReport, depth: Option<(usize, usize)>) -> Self {
        CsvRow {
            sentence: Some(r.sentence),
            edit_ratio: Some(r.edit_ratio),
            greedy_iters: Some(r.greedy.sequential_iterations),
            aggressive_iters: Some(r.aggressive.sequential_iterations),
            iteration_speedup: Some(r.iteration_speedup),
            wall_speedup: Some(r.wall_speedup),
            enc_layers: depth.map(|d| d.0),
            dec_layers: depth.map(|d| d.1),
            greedy_wall_s: Some(r.greedy.wall_clock.as_secs_f64()),
            aggressive_wall_s: Some(r.aggressive.wall_clock.as_secs_f64()),
            positions_scored: Some(r.aggressive.positions_scored),
            tokens_emitted: Some(r.aggressive.tokens_emitted),
            ..Self::empty(r.l_max.to_string())
        }
    }

    pub fn from_lmax(r: &LmaxRow) -> Self {
        CsvRow {
            aggressive_iters: Some(r.stats.sequential_iterations),
            aggressive_wall_s: Some(r.stats.wall_clock.as_secs_f64()),
            positions_scored: Some(r.stats.positions_scored),
            tokens_emitted: Some(r.stats.tokens_emitted),
            ..Self::empty(r.l_max.to_string())
        }
    }

    pub fn from_depth(r: &DepthRow, l_max: String) -> Self {
        let gi = r.greedy.sequential_iterations as f64;
        let ai = r.aggressive.sequential_iterations as f64;
        CsvRow {
            greedy_iters: Some(r.greedy.sequential_iterations),
            aggressive_iters: Some(r.aggressive.sequential_iterations),
            iteration_speedup: Some(gi / ai),
            wall_speedup: Some(
                r.greedy.wall_clock.as_secs_f64() / r.aggressive.wall_clock.as_secs_f64(),
            ),
            enc_layers: Some(r.enc_layers),
            dec_layers: Some(r.dec_layers),
            greedy_wall_s: Some(r.greedy.wall_clock.as_secs_f64()),
            aggressive_wall_s: Some(r.aggressive.wall_clock.as_secs_f64()),
            positions_scored: Some(r.aggressive.positions_scored),
            tokens_emitted: Some(r.greedy.tokens_emitted),
            ..Self::empty(l_max)
        }
    }
}

pub fn write_csv<W: Write>(rows: &[CsvRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Report(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Report(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSummary {
    pub sentences: usize,
    pub mean_edit_ratio: f64,
    pub mean_iteration_speedup: f64,
    pub mean_wall_speedup: f64,
    pub total_greedy_iters: usize,
    pub total_aggressive_iters: usize,
    pub total_greedy_wall_s: f64,
    pub total_aggressive_wall_s: f64,
    pub total_beam_wall_s: Option<f64>,
    pub spearman_edit_ratio_vs_speedup: Option<f64>,
}

pub fn summarize(reports: &[SentenceReport]) -> BenchSummary {
    let ratios: Vec<f64> = reports.iter().map(|r| r.edit_ratio).collect();
    let speedups: Vec<f64> = reports.iter().map(|r| r.iteration_speedup).collect();
    let beam: Option<f64> = reports
        .iter()
        .map(|r| r.beam.map(|b| b.wall_clock.as_secs_f64()))
        .sum();
    BenchSummary {
        sentences: reports.len(),
        mean_edit_ratio: mean(ratios.iter().copied()),
        mean_iteration_speedup: mean(speedups.iter().copied()),
        mean_wall_speedup: mean(reports.iter().map(|r| r.wall_speedup)),
        total_greedy_iters: reports.iter().map(|r| r.greedy.sequential_iterations).sum(),
        total_aggressive_iters: reports
            .iter()
            .map(|r| r.aggressive.sequential_iterations)
            .sum(),
        total_greedy_wall_s: reports
            .iter()
            .map(|r| r.greedy.wall_clock.as_secs_f64())
            .sum(),
        total_aggressive_wall_s: reports
            .iter()
            .map(|r| r.aggressive.wall_clock.as_secs_f64())
            .sum(),
        total_beam_wall_s: beam,
        spearman_edit_ratio_vs_speedup: if reports.len() >= 2 {
            spearman(&ratios, &speedups)
        } else {
            None
        },
    }
}

pub fn write_json<W: Write, V: Serialize>(value: &V, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::Report(e.to_string()))?;
    writeln!(out).map_err(|e| Error::Report(e.to_string()))
}
