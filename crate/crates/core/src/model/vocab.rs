use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::corpus::Instance;

pub const UNK: &str = "<unk>";

/// Token ↔ id table. Id 0 is always [`UNK`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabRecord")]
pub struct Vocab {
    tokens: Vec<String>,
    /// Frequency cutoff the table was built with.
    pub min_count: usize,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

#[derive(Deserialize)]
struct VocabRecord {
    tokens: Vec<String>,
    min_count: usize,
}

impl From<VocabRecord> for Vocab {
    fn from(r: VocabRecord) -> Self {
        let mut v = Vocab { tokens: r.tokens, min_count: r.min_count, index: HashMap::new() };
        v.reindex();
        v
    }
}

impl Vocab {
    pub fn from_tokens(tokens: Vec<String>, min_count: usize) -> Self {
        let mut all = vec![UNK.to_string()];
        all.extend(tokens.into_iter().filter(|t| t != UNK));
        let mut v = Vocab { tokens: all, min_count, index: HashMap::new() };
        v.reindex();
        v
    }

    /// Every question and passage token seen at least `min_count` times,
    /// sorted lexicographically so the ids do not depend on input order.
    pub fn build<'a>(instances: impl IntoIterator<Item = &'a Instance>, min_count: usize) -> Self {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for inst in instances {
            for t in inst.question.tokens.iter().chain(inst.passage.tokens()) {
                *counts.entry(t.surface.as_str()).or_default() += 1;
            }
        }
        let kept = counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count.max(1))
            .map(|(t, _)| t.to_string())
            .collect();
        Self::from_tokens(kept, min_count)
    }

    fn reindex(&mut self) {
        self.index = self.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(0)
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Token-per-line file; the first line records the cutoff as `#min_count=N`.
    pub fn to_text(&self) -> String {
        let mut out = format!("#min_count={}\n", self.min_count);
        for t in &self.tokens[1..] {
            out.push_str(t);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ModelError> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        let min_count = header
            .strip_prefix("#min_count=")
            .and_then(|n| n.trim().parse().ok())
            .ok_or_else(|| ModelError::Checkpoint(format!("bad vocabulary header {header:?}")))?;
        Ok(Self::from_tokens(lines.map(str::to_string).collect(), min_count))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        fs::write(path.as_ref(), self.to_text()).map_err(|e| ModelError::Io(path.as_ref().to_path_buf(), e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let text = fs::read_to_string(path.as_ref()).map_err(|e| ModelError::Io(path.as_ref().to_path_buf(), e))?;
        Self::from_text(&text)
    }
}
