use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};

use super::normalize::TAG_TOKENS;

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const PAD_INDEX: usize = 0;
pub const UNK_INDEX: usize = 1;

/// Token ↔ index map. Index 0 is padding, index 1 the unknown token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Keeps every corpus token that has a pretrained vector, plus the tag
    /// tokens emitted by normalization. Ordering after the reserved slots is
    /// lexicographic, so equal inputs give equal vocabularies.
    pub fn build<'a, I, S>(corpus: I, pretrained_tokens: &HashSet<String>) -> Result<Self>
    where
        I: IntoIterator<Item = &'a S>,
        S: AsRef<[String]> + 'a + ?Sized,
    {
        let mut kept: BTreeSet<&str> = TAG_TOKENS.iter().copied().collect();
        let mut seen_any = false;
        for seq in corpus {
            for tok in seq.as_ref() {
                seen_any = true;
                if pretrained_tokens.contains(tok) {
                    kept.insert(tok);
                }
            }
        }
        if !seen_any {
            return Err(Error::EmptyCorpus);
        }
        kept.remove(PAD);
        kept.remove(UNK);
        Ok(
            Self::from_tokens([PAD, UNK].into_iter().chain(kept).map(String::from).collect())
                .expect("reserved tokens present and unique"),
        )
    }

    /// Rebuilds a vocabulary from its index-ordered token list.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.get(PAD_INDEX).map(String::as_str) != Some(PAD)
            || tokens.get(UNK_INDEX).map(String::as_str) != Some(UNK)
        {
            return Err(Error::Config(format!("vocabulary must start with {PAD} and {UNK}")));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::Config(format!("invalid vocabulary token {t:?}")));
            }
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::DuplicateId(t.clone()));
            }
        }
        Ok(Self { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Index for a real token. Out-of-vocabulary tokens, and a literal
    /// padding token appearing in text, map to UNK.
    pub fn index_of(&self, token: &str) -> usize {
        match self.index.get(token) {
            Some(&i) if i != PAD_INDEX => i,
            _ => UNK_INDEX,
        }
    }
}
