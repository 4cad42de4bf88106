use std::collections::HashMap;
use std::path::Path;

use aggdec::{
    prepare_input, NgramScorer, PreparedInput, Scalar, Scheme, Scorer, ScriptedScorer,
    TinyTransformer, TokenSequence, TransformerConfig, Vocab,
};
use anyhow::{bail, Context, Result};

use crate::args::{Precision, ScorerKind, Settings};

pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(str::to_owned).collect())
}

/// Corpus lines, their prepared inputs, and the vocabulary built from every
/// text the run touches.
pub struct Workspace {
    pub lines: Vec<String>,
    pub inputs: Vec<PreparedInput>,
    pub vocab: Vocab,
    pub scheme: Scheme,
    pairs: Vec<(String, String)>,
    train: Vec<String>,
}

impl Workspace {
    pub fn load(s: &Settings) -> Result<Self> {
        let lines = read_lines(&s.input)?;
        let pairs = match &s.scripted_pairs {
            Some((src, tgt)) if s.scorer == ScorerKind::Scripted => {
                let src_lines = read_lines(src)?;
                let tgt_lines = read_lines(tgt)?;
                if src_lines.len() != tgt_lines.len() {
                    bail!(
                        "{} has {} lines but {} has {}",
                        src.display(),
                        src_lines.len(),
                        tgt.display(),
                        tgt_lines.len()
                    );
                }
                src_lines.into_iter().zip(tgt_lines).collect()
            }
            _ => Vec::new(),
        };
        let train = match (&s.train, s.scorer) {
            (Some(p), ScorerKind::Ngram) => read_lines(p)?,
            _ => Vec::new(),
        };
        let vocab = Vocab::from_corpus(
            lines
                .iter()
                .chain(pairs.iter().flat_map(|(a, b)| [a, b]))
                .chain(&train)
                .map(String::as_str),
            s.scheme,
        );
        let inputs = lines
            .iter()
            .enumerate()
            .map(|(i, l)| {
                prepare_input(&vocab.tokenize(l, s.scheme), &vocab)
                    .with_context(|| format!("line {}", i + 1))
            })
            .collect::<Result<_>>()?;
        Ok(Workspace {
            lines,
            inputs,
            vocab,
            scheme: s.scheme,
            pairs,
            train,
        })
    }

    fn tokenize(&self, line: &str) -> TokenSequence {
        self.vocab.tokenize(line, self.scheme)
    }

    /// Indices of nonblank lines.
    pub fn nonblank(&self) -> Vec<usize> {
        (0..self.inputs.len())
            .filter(|&i| self.inputs[i].n() > 0)
            .collect()
    }
}

/// Receives the constructed scorer; lets one generic body serve every
/// scorer kind and precision.
pub trait ScorerTask {
    type Output;
    fn run<T: Scalar, S: Scorer<T>>(self, scorer: &S, ws: &Workspace) -> Result<Self::Output>;
}

/// Loads a transformer config, letting `seed` override the file. Random
/// weights need a seed from one of the two.
pub fn load_transformer_config(path: &Path, seed: Option<u64>) -> Result<TransformerConfig> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut table: toml::Table =
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(seed) = seed {
        let seed = i64::try_from(seed).context("seed must fit in a signed 64-bit integer")?;
        table.insert("seed".into(), toml::Value::Integer(seed));
    } else if !table.contains_key("seed") {
        bail!(
            "{}: transformer weights are random, so a seed is required (--seed or `seed = ...`)",
            path.display()
        );
    }
    TransformerConfig::from_toml_str(&toml::to_string(&table)?)
        .with_context(|| format!("in {}", path.display()))
}

fn scripted<T: Scalar>(ws: &Workspace) -> Result<ScriptedScorer<T>> {
    let mut seen: HashMap<&str, &str> = HashMap::new();
    let mut pairs = Vec::new();
    for (i, (src, tgt)) in ws.pairs.iter().enumerate() {
        match seen.insert(src, tgt) {
            Some(prev) if prev != tgt => {
                bail!(
                    "scripted pair {} repeats a source with a different target",
                    i + 1
                )
            }
            Some(_) => continue,
            None => pairs.push((ws.tokenize(src), ws.tokenize(tgt))),
        }
    }
    Ok(ScriptedScorer::new(pairs, &ws.vocab)?)
}

fn with_scalar<T: Scalar, K: ScorerTask>(
    s: &Settings,
    ws: &Workspace,
    task: K,
) -> Result<K::Output> {
    match s.scorer {
        ScorerKind::Identity => task.run(&ScriptedScorer::<T>::identity(&ws.vocab), ws),
        ScorerKind::Scripted => task.run(&scripted::<T>(ws)?, ws),
        ScorerKind::Ngram => {
            let source = if ws.train.is_empty() {
                &ws.lines
            } else {
                &ws.train
            };
            let corpus: Vec<TokenSequence> = source.iter().map(|l| ws.tokenize(l)).collect();
            task.run(&NgramScorer::<T>::new(&corpus, s.ngram, &ws.vocab)?, ws)
        }
        ScorerKind::Transformer => {
            let [path] = s.transformer_configs.as_slice() else {
                bail!("this command takes exactly one --transformer-config");
            };
            let cfg = load_transformer_config(path, s.seed)?;
            task.run(&TinyTransformer::<T>::new(cfg, &ws.vocab)?, ws)
        }
    }
}

/// Builds the configured scorer and hands it to `task`. Only the
/// transformer honours `--precision`; the other scorers run in `f64`.
pub fn with_scorer<K: ScorerTask>(s: &Settings, ws: &Workspace, task: K) -> Result<K::Output> {
    match (s.scorer, s.precision) {
        (ScorerKind::Transformer, Precision::F32) => with_scalar::<f32, K>(s, ws, task),
        _ => with_scalar::<f64, K>(s, ws, task),
    }
}
