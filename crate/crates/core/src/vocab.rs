//! Vocabulary, token ids and the two tokenization schemes.
//!
//! Ids `0..4` are reserved for the sentinels `BOS`, `EOS`, `PAD` and `UNK`;
//! corpus surface forms are numbered from [`TokenId::FIRST_REGULAR`] in order
//! of first appearance, which keeps vocabulary construction deterministic.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::TokenSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    pub const BOS: TokenId = TokenId(0);
    pub const EOS: TokenId = TokenId(1);
    pub const PAD: TokenId = TokenId(2);
    pub const UNK: TokenId = TokenId(3);
    pub const FIRST_REGULAR: u32 = 4;

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// BOS, EOS and PAD. UNK is an ordinary (if lossy) token.
    #[inline]
    pub fn is_sentinel(self) -> bool {
        matches!(self, TokenId::BOS | TokenId::EOS | TokenId::PAD)
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for TokenId {
    fn from(v: u32) -> Self {
        TokenId(v)
    }
}

/// Rendering of UNK in detokenized text.
pub const UNK_TEXT: &str = "<unk>";

const RESERVED: [&str; 4] = ["<s>", "</s>", "<pad>", UNK_TEXT];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Whitespace,
    Character,
}

impl Scheme {
    fn split(self, text: &str) -> Vec<String> {
        match self {
            Scheme::Whitespace => text.split_whitespace().map(str::to_owned).collect(),
            Scheme::Character => text
                .chars()
                .filter(|c| !c.is_whitespace())
                .map(String::from)
                .collect(),
        }
    }

    fn separator(self) -> &'static str {
        match self {
            Scheme::Whitespace => " ",
            Scheme::Character => "",
        }
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "whitespace" => Ok(Scheme::Whitespace),
            "character" | "char" => Ok(Scheme::Character),
            other => Err(format!("unknown tokenization scheme {other:?}")),
        }
    }
}

/// An immutable token inventory. Cheap to share across decode workers.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Vocab {
    /// Builds a vocabulary from regular surface forms. Sentinels are added
    /// automatically and must not appear in `surfaces`.
    pub fn new<I, S>(surfaces: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Self::empty();
        for s in surfaces {
            let s = s.into();
            if vocab.index.contains_key(&s) {
                return Err(Error::DuplicateSurface(s));
            }
            vocab.push(s);
        }
        Ok(vocab)
    }

    /// Collects every surface form in `lines` under `scheme`, in order of
    /// first appearance. Repeats are merged rather than rejected.
    pub fn from_corpus<'a, I>(lines: I, scheme: Scheme) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut vocab = Self::empty();
        for line in lines {
            for tok in scheme.split(line) {
                if !vocab.index.contains_key(&tok) {
                    vocab.push(tok);
                }
            }
        }
        vocab
    }

    fn empty() -> Self {
        let mut vocab = Vocab {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        for s in RESERVED {
            vocab.push(s.to_owned());
        }
        vocab
    }

    fn push(&mut self, surface: String) {
        let id = TokenId(self.tokens.len() as u32);
        self.index.insert(surface.clone(), id);
        self.tokens.push(surface);
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn bos(&self) -> TokenId {
        TokenId::BOS
    }

    pub fn eos(&self) -> TokenId {
        TokenId::EOS
    }

    pub fn pad(&self) -> TokenId {
        TokenId::PAD
    }

    pub fn unk(&self) -> TokenId {
        TokenId::UNK
    }

    pub fn contains(&self, id: TokenId) -> bool {
        id.index() < self.tokens.len()
    }

    /// Looks up a regular surface form. Sentinel spellings are not
    /// addressable from text.
    pub fn id(&self, surface: &str) -> Option<TokenId> {
        self.index
            .get(surface)
            .copied()
            .filter(|id| id.0 >= TokenId::FIRST_REGULAR)
    }

    pub fn surface(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id.index()).map(String::as_str)
    }

    /// Regular (non-reserved) ids in ascending order.
    pub fn regular_ids(&self) -> impl Iterator<Item = TokenId> + '_ {
        (TokenId::FIRST_REGULAR..self.tokens.len() as u32).map(TokenId)
    }

    pub fn tokenize(&self, text: &str, scheme: Scheme) -> TokenSequence {
        tokenize(text, scheme, self)
    }

    pub fn detokenize(&self, seq: &[TokenId]) -> Result<String> {
        detokenize(seq, self)
    }
}

/// Maps `text` to ids; out-of-vocabulary forms become UNK.
pub fn tokenize(text: &str, scheme: Scheme, vocab: &Vocab) -> TokenSequence {
    scheme
        .split(text)
        .iter()
        .map(|t| vocab.id(t).unwrap_or(TokenId::UNK))
        .collect()
}

/// Whitespace-joined rendering; sentinels are dropped and UNK renders as
/// [`UNK_TEXT`].
pub fn detokenize(seq: &[TokenId], vocab: &Vocab) -> Result<String> {
    detokenize_with(seq, vocab, Scheme::Whitespace)
}

pub fn detokenize_with(seq: &[TokenId], vocab: &Vocab, scheme: Scheme) -> Result<String> {
    let mut parts = Vec::with_capacity(seq.len());
    for &id in seq {
        let surface = vocab.surface(id).ok_or(Error::InvalidToken(id))?;
        if id.is_sentinel() {
            continue;
        }
        parts.push(surface);
    }
    Ok(parts.join(scheme.separator()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> Vocab {
        Vocab::new(["a", "b", "c"]).unwrap()
    }

    #[test]
    fn reserved_ids_are_distinct_and_fixed() {
        let v = abc();
        let ids = [v.bos(), v.eos(), v.pad(), v.unk()];
        for (i, a) in ids.iter().enumerate() {
            assert_eq!(a.0, i as u32);
        }
        assert_eq!(v.id("a"), Some(TokenId(4)));
        assert_eq!(v.len(), 7);
    }

    #[test]
    fn duplicate_surface_rejected() {
        assert_eq!(
            Vocab::new(["a", "a"]),
            Err(Error::DuplicateSurface("a".into()))
        );
        assert!(Vocab::new(["<pad>"]).is_err());
    }

    #[test]
    fn whitespace_tokenize() {
        let v = abc();
        let ids = tokenize("a b", Scheme::Whitespace, &v);
        assert_eq!(ids.as_slice(), &[v.id("a").unwrap(), v.id("b").unwrap()]);
    }

    #[test]
    fn character_tokenize() {
        let v = abc();
        let ids = tokenize("ab", Scheme::Character, &v);
        assert_eq!(ids.as_slice(), &[v.id("a").unwrap(), v.id("b").unwrap()]);
    }

    #[test]
    fn oov_maps_to_unk() {
        let v = abc();
        let ids = tokenize("a zzz", Scheme::Whitespace, &v);
        assert_eq!(ids.as_slice(), &[v.id("a").unwrap(), TokenId::UNK]);
        // sentinel spellings in text are not sentinels
        let ids = tokenize("<s> </s>", Scheme::Whitespace, &v);
        assert_eq!(ids.as_slice(), &[TokenId::UNK, TokenId::UNK]);
    }

    #[test]
    fn detokenize_drops_sentinels() {
        let v = abc();
        let (a, b) = (v.id("a").unwrap(), v.id("b").unwrap());
        assert_eq!(
            detokenize(&[TokenId::BOS, a, b, TokenId::EOS], &v).unwrap(),
            "a b"
        );
        assert_eq!(detokenize(&[TokenId::BOS, TokenId::EOS], &v).unwrap(), "");
        assert_eq!(detokenize(&[a, TokenId::UNK, b], &v).unwrap(), "a <unk> b");
        assert_eq!(
            detokenize(&[TokenId(99)], &v),
            Err(Error::InvalidToken(TokenId(99)))
        );
    }

    #[test]
    fn corpus_vocab_first_appearance_order() {
        let v = Vocab::from_corpus(["b a", "a c b"], Scheme::Whitespace);
        assert_eq!(v.id("b"), Some(TokenId(4)));
        assert_eq!(v.id("a"), Some(TokenId(5)));
        assert_eq!(v.id("c"), Some(TokenId(6)));
        let chars = Vocab::from_corpus(["技术 进步"], Scheme::Character);
        assert_eq!(chars.len(), 4 + 4);
        assert_eq!(
            detokenize_with(
                &tokenize("技术", Scheme::Character, &chars),
                &chars,
                Scheme::Character
            )
            .unwrap(),
            "技术"
        );
    }

    #[test]
    fn whitespace_round_trip() {
        let text = "Nowadays , technology is more advance than the past time .";
        let v = Vocab::from_corpus([text], Scheme::Whitespace);
        let ids = tokenize(text, Scheme::Whitespace, &v);
        assert_eq!(ids.len(), 11);
        assert_eq!(detokenize(&ids, &v).unwrap(), text);
    }
}
