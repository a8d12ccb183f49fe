use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::{Error, Result};

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";

/// Token-to-id map with contiguous ids; `<pad>` is 0 and `<unk>` is 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: BTreeMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from the words of `questions`, sorted for stable ids.
    pub fn from_questions<'a>(questions: impl IntoIterator<Item = &'a str>) -> Self {
        let words: BTreeSet<String> = questions.into_iter().flat_map(tokenize_words).collect();
        Self::from_tokens(words)
    }

    fn from_tokens(words: impl IntoIterator<Item = String>) -> Self {
        let mut v = Vocabulary {
            tokens: Vec::new(),
            ids: BTreeMap::new(),
        };
        for t in [PAD.to_string(), UNK.to_string()].into_iter().chain(words) {
            if !v.ids.contains_key(&t) {
                v.ids.insert(t.clone(), v.tokens.len());
                v.tokens.push(t);
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn unk_id(&self) -> usize {
        self.ids[UNK]
    }

    pub fn pad_id(&self) -> usize {
        self.ids[PAD]
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    /// One token per line; the line number is the id.
    pub fn to_lines(&self) -> String {
        let mut s = String::new();
        for t in &self.tokens {
            s.push_str(t);
            s.push('\n');
        }
        s
    }

    pub fn from_lines(text: &str) -> Result<Self> {
        let mut tokens = Vec::new();
        let mut ids = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() || ids.insert(line.to_string(), i).is_some() {
                return Err(Error::Data(alloc::format!("vocabulary line {} is empty or duplicated", i + 1)));
            }
            tokens.push(line.to_string());
        }
        if !ids.contains_key(UNK) || !ids.contains_key(PAD) {
            return Err(Error::Data("vocabulary lacks <pad> or <unk>".into()));
        }
        Ok(Vocabulary { tokens, ids })
    }
}

/// Lowercased words and single punctuation marks.
pub fn tokenize_words(question: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in question.chars() {
        if ch.is_whitespace() || ch.is_ascii_punctuation() {
            if !cur.is_empty() {
                out.push(core::mem::take(&mut cur));
            }
            if ch.is_ascii_punctuation() {
                out.push(ch.to_string());
            }
        } else {
            cur.extend(ch.to_lowercase());
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Token ids for `question`; unknown words map to the `<unk>` id.
pub fn tokenize(question: &str, vocab: &Vocabulary) -> Result<Vec<usize>> {
    if question.trim().is_empty() {
        return Err(Error::Data("empty question".into()));
    }
    let unk = vocab.unk_id();
    Ok(tokenize_words(question)
        .iter()
        .map(|w| vocab.id(w).unwrap_or(unk))
        .collect())
}
