//! Command-line driver: corpus loading, scorer construction, and report
//! emission for the `aggdec` binary.

mod args;
mod commands;
mod scorers;

use std::ffi::OsString;

use aggdec::{DecodeResult, Mode, TokenId, Vocab};
use clap::Parser;

pub use args::{Cli, Command, Format, ScorerKind, Settings};
pub use scorers::load_transformer_config;

/// Parses `argv` (program name first) and runs the subcommand. Returns the
/// process exit code; diagnostics go to stderr.
pub fn run<I, A>(argv: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let (kind, args) = cli.command.split();
    let result = Settings::from_args(kind, args).and_then(|s| commands::execute(&s));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn render(id: TokenId, vocab: &Vocab) -> &str {
    match id {
        TokenId::EOS => "<eos>",
        TokenId::BOS => "<bos>",
        TokenId::PAD => "<pad>",
        _ => vocab.surface(id).unwrap_or("<?>"),
    }
}

/// Renders the output as one bracketed segment per decode iteration,
/// subscripted with the iteration index and mode, e.g.
/// `[a b X]_0(agg) [d]_1(ar) [<eos>]_2(agg)`.
pub fn emit_trace(result: &DecodeResult, vocab: &Vocab) -> String {
    let generated = result.generated();
    let mut pos = 0;
    let mut segments = Vec::with_capacity(result.trace.len());
    for (i, it) in result.trace.iterations.iter().enumerate() {
        let end = (pos + it.accepted).min(generated.len());
        let words: Vec<&str> = generated[pos..end]
            .iter()
            .map(|&t| render(t, vocab))
            .collect();
        let mode = match it.mode {
            Mode::Aggressive => "agg",
            Mode::Autoregressive => "ar",
        };
        segments.push(format!("[{}]_{i}({mode})", words.join(" ")));
        pos = end;
    }
    segments.join(" ")
}
