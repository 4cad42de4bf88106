use std::fs::File;
use std::io::{self, BufWriter, Write};

use aggdec::metrics::report::{summarize, write_csv, write_json, BenchSummary, CsvRow};
use aggdec::metrics::{DepthRow, LmaxRow};
use aggdec::{
    bench, check_equivalence, decode, detokenize_with, sweep_depth, sweep_lmax, BenchConfig,
    PreparedInput, Scalar, Scorer, SentenceReport,
};
use anyhow::{Context, Result};
use serde::Serialize;

use crate::args::{CommandKind, Format, Precision, Settings};
use crate::emit_trace;
use crate::scorers::{load_transformer_config, with_scorer, ScorerTask, Workspace};

pub fn execute(s: &Settings) -> Result<i32> {
    let ws = Workspace::load(s)?;
    let mut out = open_output(s)?;
    let code = match s.command {
        CommandKind::Decode => with_scorer(s, &ws, DecodeTask { s, out: &mut out })?,
        CommandKind::Check => with_scorer(s, &ws, CheckTask { s, out: &mut out })?,
        CommandKind::Bench => with_scorer(s, &ws, BenchTask { s, out: &mut out })?,
        CommandKind::SweepLmax => with_scorer(s, &ws, SweepLmaxTask { s, out: &mut out })?,
        CommandKind::SweepDepth => sweep_depth_cmd(s, &ws, &mut out)?,
    };
    out.flush()?;
    Ok(code)
}

fn open_output(s: &Settings) -> Result<Box<dyn Write>> {
    Ok(match &s.output {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()?)
}

fn nonblank_inputs(ws: &Workspace) -> Vec<PreparedInput> {
    ws.nonblank()
        .into_iter()
        .map(|i| ws.inputs[i].clone())
        .collect()
}

fn strip_wall(rows: &mut [CsvRow]) {
    for r in rows {
        r.wall_speedup = None;
        r.greedy_wall_s = None;
        r.aggressive_wall_s = None;
    }
}

fn emit_rows<W: Write + ?Sized>(s: &Settings, mut rows: Vec<CsvRow>, out: &mut W) -> Result<()> {
    if s.no_wall_clock {
        strip_wall(&mut rows);
    }
    match s.format {
        Format::Csv => write_csv(&rows, out)?,
        Format::Json => write_json(&rows, out)?,
        Format::Text => {
            for r in &rows {
                writeln!(out, "{}", text_row(r))?;
            }
        }
    }
    Ok(())
}

fn text_row(r: &CsvRow) -> String {
    let mut parts = Vec::new();
    if let (Some(e), Some(d)) = (r.enc_layers, r.dec_layers) {
        parts.push(format!("depth={e}+{d}"));
    }
    if let Some(i) = r.sentence {
        parts.push(format!("sentence={i}"));
    }
    parts.push(format!("l_max={}", r.l_max));
    if let Some(v) = r.edit_ratio {
        parts.push(format!("edit_ratio={v:.4}"));
    }
    if let Some(v) = r.greedy_iters {
        parts.push(format!("greedy_iters={v}"));
    }
    if let Some(v) = r.aggressive_iters {
        parts.push(format!("aggressive_iters={v}"));
    }
    if let Some(v) = r.iteration_speedup {
        parts.push(format!("iteration_speedup={v:.3}"));
    }
    if let Some(v) = r.greedy_wall_s {
        parts.push(format!("greedy_wall_s={v:.6}"));
    }
    if let Some(v) = r.aggressive_wall_s {
        parts.push(format!("aggressive_wall_s={v:.6}"));
    }
    if let Some(v) = r.wall_speedup {
        parts.push(format!("wall_speedup={v:.3}"));
    }
    parts.join(" ")
}

struct DecodeTask<'a, W: ?Sized> {
    s: &'a Settings,
    out: &'a mut W,
}

#[derive(Serialize)]
struct DecodedLine {
    line: usize,
    output: String,
    iterations: usize,
    positions_scored: usize,
    trace: String,
}

impl<W: Write + ?Sized> ScorerTask for DecodeTask<'_, W> {
    type Output = i32;

    fn run<T: Scalar, S: Scorer<T>>(self, scorer: &S, ws: &Workspace) -> Result<i32> {
        let pool = pool(self.s.threads)?;
        let mut decoded = Vec::with_capacity(ws.inputs.len());
        for (i, x) in ws.inputs.iter().enumerate() {
            let r = pool
                .install(|| decode(scorer, x, &self.s.decode))
                .with_context(|| format!("decoding line {}", i + 1))?;
            decoded.push(DecodedLine {
                line: i + 1,
                output: detokenize_with(r.output.as_slice(), &ws.vocab, ws.scheme)?,
                iterations: r.sequential_iterations(),
                positions_scored: r.positions_scored,
                trace: emit_trace(&r, &ws.vocab),
            });
        }
        match self.s.format {
            Format::Text => {
                for d in &decoded {
                    let text = if self.s.trace { &d.trace } else { &d.output };
                    writeln!(self.out, "{text}")?;
                }
            }
            Format::Json => write_json(&decoded, &mut *self.out)?,
            Format::Csv => {
                let mut w = csv::Writer::from_writer(&mut *self.out);
                for d in &decoded {
                    w.serialize(d)?;
                }
                w.flush()?;
            }
        }
        Ok(0)
    }
}

struct CheckTask<'a, W: ?Sized> {
    s: &'a Settings,
    out: &'a mut W,
}

impl<W: Write + ?Sized> ScorerTask for CheckTask<'_, W> {
    type Output = i32;

    fn run<T: Scalar, S: Scorer<T>>(self, scorer: &S, ws: &Workspace) -> Result<i32> {
        let pool = pool(self.s.threads)?;
        let report = pool.install(|| {
            check_equivalence(scorer, &ws.inputs, &self.s.lmax, &[self.s.decode.max_len])
        })?;
        for m in &report.mismatches {
            eprintln!(
                "mismatch: line {} l_max={}\n  greedy:     {}\n  aggressive: {}",
                m.sentence + 1,
                m.l_max,
                emit_trace(&m.greedy, &ws.vocab),
                emit_trace(&m.aggressive, &ws.vocab),
            );
        }
        for f in &report.trace_failures {
            eprintln!(
                "malformed trace: line {} l_max={}: {}",
                f.sentence + 1,
                f.l_max,
                f.violation
            );
        }
        match self.s.format {
            Format::Json => write_json(&report, &mut *self.out)?,
            Format::Text | Format::Csv => writeln!(self.out, "{}", report.summary())?,
        }
        Ok(if report.mismatches.is_empty() { 0 } else { 1 })
    }
}

struct BenchTask<'a, W: ?Sized> {
    s: &'a Settings,
    out: &'a mut W,
}

#[derive(Serialize)]
struct BenchJson {
    summary: BenchSummary,
    sentences: Vec<CsvRow>,
}

impl<W: Write + ?Sized> ScorerTask for BenchTask<'_, W> {
    type Output = i32;

    fn run<T: Scalar, S: Scorer<T>>(self, scorer: &S, ws: &Workspace) -> Result<i32> {
        let s = self.s;
        let lines = ws.nonblank();
        let corpus = nonblank_inputs(ws);
        let cfg = BenchConfig {
            decode: s.decode.clone(),
            timing: s.timing,
            threads: s.threads,
            workers: s.workers,
            beam: s.beam_baseline,
        };
        let mut reports = bench(scorer, &corpus, &cfg)?;
        for r in &mut reports {
            r.sentence = lines[r.sentence];
        }
        let depth = depth_of(s)?;
        let rows = reports
            .iter()
            .map(|r| CsvRow::from_sentence(r, depth))
            .collect();
        match s.format {
            Format::Json => {
                let mut rows: Vec<CsvRow> = rows;
                let mut summary = summarize(&reports);
                if s.no_wall_clock {
                    strip_wall(&mut rows);
                    strip_summary(&mut summary);
                }
                write_json(
                    &BenchJson {
                        summary,
                        sentences: rows,
                    },
                    &mut *self.out,
                )?;
            }
            Format::Csv => emit_rows(s, rows, &mut *self.out)?,
            Format::Text => write_bench_text(s, &reports, &mut *self.out)?,
        }
        Ok(0)
    }
}

fn depth_of(s: &Settings) -> Result<Option<(usize, usize)>> {
    match (s.scorer, s.transformer_configs.as_slice()) {
        (crate::args::ScorerKind::Transformer, [p]) => {
            let c = load_transformer_config(p, s.seed)?;
            Ok(Some((c.encoder_layers, c.decoder_layers)))
        }
        _ => Ok(None),
    }
}

fn strip_summary(summary: &mut BenchSummary) {
    summary.mean_wall_speedup = 0.0;
    summary.total_greedy_wall_s = 0.0;
    summary.total_aggressive_wall_s = 0.0;
    summary.total_beam_wall_s = summary.total_beam_wall_s.map(|_| 0.0);
}

fn write_bench_text<W: Write + ?Sized>(
    s: &Settings,
    reports: &[SentenceReport],
    out: &mut W,
) -> Result<()> {
    let sum = summarize(reports);
    writeln!(out, "sentences: {}", sum.sentences)?;
    writeln!(out, "mean edit ratio: {:.4}", sum.mean_edit_ratio)?;
    writeln!(
        out,
        "sequential iterations: greedy {} aggressive {} (mean speedup {:.3}x)",
        sum.total_greedy_iters, sum.total_aggressive_iters, sum.mean_iteration_speedup
    )?;
    if !s.no_wall_clock {
        writeln!(
            out,
            "wall-clock: greedy {:.6}s aggressive {:.6}s (mean speedup {:.3}x)",
            sum.total_greedy_wall_s, sum.total_aggressive_wall_s, sum.mean_wall_speedup
        )?;
        if let Some(b) = sum.total_beam_wall_s {
            writeln!(out, "beam wall-clock: {b:.6}s")?;
        }
    }
    match sum.spearman_edit_ratio_vs_speedup {
        Some(rho) => writeln!(out, "spearman(edit ratio, iteration speedup): {rho:.4}")?,
        None => writeln!(out, "spearman(edit ratio, iteration speedup): undefined")?,
    }
    Ok(())
}

struct SweepLmaxTask<'a, W: ?Sized> {
    s: &'a Settings,
    out: &'a mut W,
}

impl<W: Write + ?Sized> ScorerTask for SweepLmaxTask<'_, W> {
    type Output = i32;

    fn run<T: Scalar, S: Scorer<T>>(self, scorer: &S, ws: &Workspace) -> Result<i32> {
        let corpus = nonblank_inputs(ws);
        let pool = pool(self.s.threads)?;
        let rows: Vec<LmaxRow> = pool
            .install(|| sweep_lmax(scorer, &corpus, &self.s.lmax, &self.s.decode, self.s.timing))?;
        if let Some(r) = rows.iter().find(|r| !r.matches_greedy) {
            eprintln!("warning: l_max={} output differs from greedy", r.l_max);
        }
        emit_rows(
            self.s,
            rows.iter().map(CsvRow::from_lmax).collect(),
            &mut *self.out,
        )?;
        Ok(0)
    }
}

fn sweep_depth_cmd<W: Write + ?Sized>(s: &Settings, ws: &Workspace, out: &mut W) -> Result<i32> {
    let configs = s
        .transformer_configs
        .iter()
        .map(|p| load_transformer_config(p, s.seed))
        .collect::<Result<Vec<_>>>()?;
    let corpus = nonblank_inputs(ws);
    let rows: Vec<DepthRow> = match s.precision {
        Precision::F32 => {
            sweep_depth::<f32>(&configs, &ws.vocab, &corpus, &s.decode, s.timing, s.threads)?
        }
        Precision::F64 => {
            sweep_depth::<f64>(&configs, &ws.vocab, &corpus, &s.decode, s.timing, s.threads)?
        }
    };
    let l_max = s.decode.l_max.to_string();
    emit_rows(
        s,
        rows.iter()
            .map(|r| CsvRow::from_depth(r, l_max.clone()))
            .collect(),
        out,
    )?;
    Ok(0)
}
