//! Tokenisation and vocabulary.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Padding token, always at index 0 in vocabularies built from text.
pub const PAD_TOKEN: &str = "<pad>";
/// Out-of-vocabulary token, always at index 1 in vocabularies built from text.
pub const OOV_TOKEN: &str = "<unk>";

pub const PAD_INDEX: u32 = 0;
pub const OOV_INDEX: u32 = 1;

/// Lowercases, splits on whitespace and trims non-alphanumeric characters from
/// both ends of every piece. No stemming.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|piece| piece.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|piece| !piece.is_empty())
        .map(|piece| piece.to_lowercase())
        .collect()
}

/// Bijective token/index mapping with contiguous indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl Vocabulary {
    /// Builds a vocabulary from tokens in the given order. Duplicates are an error.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocabulary::default();
        for token in tokens {
            let token = token.into();
            if vocab.index.contains_key(&token) {
                return Err(Error::Data(alloc::format!("duplicate vocabulary token {token:?}")));
            }
            vocab.push(token);
        }
        Ok(vocab)
    }

    /// Vocabulary with `<pad>` at 0 and `<unk>` at 1, followed by tokens
    /// sorted by descending count and then lexicographically.
    pub fn from_counts(counts: &BTreeMap<String, usize>) -> Self {
        let mut ranked: Vec<(&String, usize)> = counts
            .iter()
            .filter(|(t, _)| t.as_str() != PAD_TOKEN && t.as_str() != OOV_TOKEN)
            .map(|(t, &c)| (t, c))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let mut vocab = Vocabulary::default();
        vocab.push(PAD_TOKEN.to_string());
        vocab.push(OOV_TOKEN.to_string());
        for (token, _) in ranked {
            vocab.push(token.clone());
        }
        vocab
    }

    fn push(&mut self, token: String) {
        let id = self.tokens.len() as u32;
        self.index.insert(token.clone(), id);
        self.tokens.push(token);
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Whether the reserved `<pad>`/`<unk>` entries sit at indices 0 and 1.
    pub fn has_specials(&self) -> bool {
        self.token(PAD_INDEX) == Some(PAD_TOKEN) && self.token(OOV_INDEX) == Some(OOV_TOKEN)
    }

    /// Maps tokens to ids; unknown tokens map to `<unk>` when present.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<u32>> {
        let oov = self.get(OOV_TOKEN);
        tokens
            .iter()
            .map(|t| {
                self.get(t.as_ref())
                    .or(oov)
                    .ok_or_else(|| Error::Data(alloc::format!("token {:?} not in vocabulary", t.as_ref())))
            })
            .collect()
    }
}
