use std::path::{Path, PathBuf};

use aggdec::{DecodeConfig, DecodeMode, LMax, NgramParams, Scheme, Timing};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(
    name = "aggdec",
    version,
    about = "Aggressive decoding for input-preserving rewriting"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Decode,
    Check,
    Bench,
    SweepLmax,
    SweepDepth,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decode every line of the input corpus.
    Decode(RunArgs),
    /// Compare greedy and aggressive outputs; exits 1 on any mismatch.
    Check(RunArgs),
    /// Time greedy, aggressive and (with --beam) beam decoding per sentence.
    Bench(RunArgs),
    /// Aggregate aggressive-decoding cost for each --lmax value.
    SweepLmax(RunArgs),
    /// Time tiny transformers of different depths (repeat --transformer-config).
    SweepDepth(RunArgs),
}

impl Command {
    pub fn split(self) -> (CommandKind, RunArgs) {
        match self {
            Command::Decode(a) => (CommandKind::Decode, a),
            Command::Check(a) => (CommandKind::Check, a),
            Command::Bench(a) => (CommandKind::Bench, a),
            Command::SweepLmax(a) => (CommandKind::SweepLmax, a),
            Command::SweepDepth(a) => (CommandKind::SweepDepth, a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Identity,
    Scripted,
    Ngram,
    Transformer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// Corpus, one sentence per line.
    #[arg(long, visible_alias = "corpus", value_name = "PATH")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub scorer: Option<ScorerKind>,
    /// Line-aligned source and target files for the scripted scorer.
    #[arg(long, num_args = 2, value_names = ["SRC", "TGT"])]
    pub scripted_pairs: Option<Vec<PathBuf>>,
    #[arg(long, value_name = "PATH")]
    pub transformer_config: Vec<PathBuf>,
    /// Training corpus for the n-gram scorer (defaults to the input corpus).
    #[arg(long, value_name = "PATH")]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub mode: Option<DecodeMode>,
    /// Beam size; for `bench`, also times beam search as a baseline.
    #[arg(long)]
    pub beam: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub lmax: Option<Vec<LMax>>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub length_penalty: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub scheme: Option<Scheme>,
    #[arg(long, value_enum)]
    pub precision: Option<Precision>,
    /// Render decode output as bracketed iteration segments.
    #[arg(long)]
    pub trace: bool,
    /// Leave timing columns empty so reports are byte-reproducible.
    #[arg(long)]
    pub no_wall_clock: bool,
    /// TOML file whose keys override the flags above.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

/// Keys accepted in a `--config` file. Relative paths resolve against the
/// file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    input: Option<PathBuf>,
    corpus: Option<PathBuf>,
    scorer: Option<ScorerKind>,
    scripted_pairs: Option<[PathBuf; 2]>,
    transformer_config: Option<Vec<PathBuf>>,
    train: Option<PathBuf>,
    mode: Option<DecodeMode>,
    beam: Option<usize>,
    lmax: Option<Vec<LMax>>,
    max_len: Option<usize>,
    length_penalty: Option<f64>,
    seed: Option<u64>,
    threads: Option<usize>,
    workers: Option<usize>,
    repetitions: Option<usize>,
    warmup: Option<usize>,
    format: Option<Format>,
    output: Option<PathBuf>,
    scheme: Option<Scheme>,
    precision: Option<Precision>,
    trace: Option<bool>,
    no_wall_clock: Option<bool>,
    ngram: Option<NgramParams>,
}

/// Fully resolved run settings.
#[derive(Debug, Clone)]
pub struct Settings {
    pub command: CommandKind,
    pub input: PathBuf,
    pub scorer: ScorerKind,
    pub scripted_pairs: Option<(PathBuf, PathBuf)>,
    pub transformer_configs: Vec<PathBuf>,
    pub train: Option<PathBuf>,
    pub ngram: NgramParams,
    pub decode: DecodeConfig,
    pub beam_baseline: bool,
    pub lmax: Vec<LMax>,
    pub seed: Option<u64>,
    pub threads: usize,
    pub workers: usize,
    pub timing: Timing,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub scheme: Scheme,
    pub precision: Precision,
    pub trace: bool,
    pub no_wall_clock: bool,
}

fn resolve(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn load_file(path: &Path) -> Result<FileConfig> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg: FileConfig =
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let fix = |p: Option<PathBuf>| p.map(|p| resolve(base, p));
    cfg.input = fix(cfg.input);
    cfg.corpus = fix(cfg.corpus);
    cfg.train = fix(cfg.train);
    cfg.output = fix(cfg.output);
    cfg.scripted_pairs = cfg
        .scripted_pairs
        .map(|[s, t]| [resolve(base, s), resolve(base, t)]);
    cfg.transformer_config = cfg
        .transformer_config
        .map(|v| v.into_iter().map(|p| resolve(base, p)).collect());
    Ok(cfg)
}

fn default_lmax(command: CommandKind) -> Vec<LMax> {
    let limited = |v: &[usize]| -> Vec<LMax> {
        v.iter()
            .map(|&n| LMax::limited(n).expect("nonzero"))
            .chain([LMax::Unlimited])
            .collect()
    };
    match command {
        CommandKind::Check => limited(&[1, 2, 5]),
        CommandKind::SweepLmax => limited(&[1, 2, 3, 5, 10, 20, 40]),
        _ => vec![LMax::Unlimited],
    }
}

impl Settings {
    pub fn from_args(command: CommandKind, args: RunArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => load_file(p)?,
            None => FileConfig::default(),
        };

        let input = file
            .input
            .or(file.corpus)
            .or(args.input)
            .context("an input corpus is required (--input/--corpus)")?;
        let scripted_pairs = match (file.scripted_pairs, args.scripted_pairs) {
            (Some([s, t]), _) => Some((s, t)),
            (None, Some(v)) => {
                let mut it = v.into_iter();
                Some((
                    it.next().expect("two values"),
                    it.next().expect("two values"),
                ))
            }
            (None, None) => None,
        };
        let transformer_configs = file.transformer_config.unwrap_or(args.transformer_config);
        let scorer = file.scorer.or(args.scorer).unwrap_or(match command {
            CommandKind::SweepDepth => ScorerKind::Transformer,
            _ => ScorerKind::Identity,
        });

        let beam = file.beam.or(args.beam);
        let mode = file.mode.or(args.mode).unwrap_or(DecodeMode::Aggressive);
        let mut decode = DecodeConfig::default().with_mode(mode);
        if let Some(k) = beam {
            decode.beam_size = k;
        }
        if let Some(m) = file.max_len.or(args.max_len) {
            decode = decode.with_max_len(m);
        }
        if let Some(a) = file.length_penalty.or(args.length_penalty) {
            decode = decode.with_length_penalty(a);
        }
        let lmax = file
            .lmax
            .or(args.lmax)
            .unwrap_or_else(|| default_lmax(command));
        if lmax.is_empty() {
            bail!("--lmax needs at least one value");
        }
        decode = decode.with_l_max(lmax[0]);
        decode.validate()?;

        let defaults = Timing::default();
        let timing = Timing {
            repetitions: file
                .repetitions
                .or(args.repetitions)
                .unwrap_or(defaults.repetitions),
            warmup: file.warmup.or(args.warmup).unwrap_or(defaults.warmup),
        };
        if timing.repetitions == 0 {
            bail!("--repetitions must be at least 1");
        }

        let settings = Settings {
            command,
            input,
            scorer,
            scripted_pairs,
            transformer_configs,
            train: file.train.or(args.train),
            ngram: file.ngram.unwrap_or_default(),
            decode,
            beam_baseline: beam.is_some() || mode == DecodeMode::Beam,
            lmax,
            seed: file.seed.or(args.seed),
            threads: file.threads.or(args.threads).unwrap_or(1).max(1),
            workers: file.workers.or(args.workers).unwrap_or(1).max(1),
            timing,
            format: file.format.or(args.format).unwrap_or(match command {
                CommandKind::Decode | CommandKind::Check => Format::Text,
                _ => Format::Csv,
            }),
            output: file.output.or(args.output),
            scheme: file.scheme.or(args.scheme).unwrap_or_default(),
            precision: file.precision.or(args.precision).unwrap_or(Precision::F32),
            trace: file.trace.unwrap_or(args.trace),
            no_wall_clock: file.no_wall_clock.unwrap_or(args.no_wall_clock),
        };
        settings.check_paths()?;
        Ok(settings)
    }

    fn check_paths(&self) -> Result<()> {
        let mut paths = vec![&self.input];
        if let Some((s, t)) = &self.scripted_pairs {
            paths.push(s);
            paths.push(t);
        }
        paths.extend(&self.transformer_configs);
        paths.extend(&self.train);
        for p in paths {
            if !p.is_file() {
                bail!("{}: no such file", p.display());
            }
        }
        match self.scorer {
            ScorerKind::Scripted if self.scripted_pairs.is_none() => {
                bail!("--scorer scripted needs --scripted-pairs <SRC> <TGT>")
            }
            ScorerKind::Transformer if self.transformer_configs.is_empty() => {
                bail!("--scorer transformer needs --transformer-config <PATH>")
            }
            _ => {}
        }
        if self.command == CommandKind::SweepDepth && self.scorer != ScorerKind::Transformer {
            bail!("sweep-depth only supports the transformer scorer");
        }
        Ok(())
    }
}
