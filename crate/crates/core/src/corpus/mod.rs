//! Passages, questions, paired entries, and the datasets built from them.
//!
//! All offsets are byte offsets into the owning passage (or question) text.

mod bank;
mod generate;
mod squad;

pub use bank::{builtin_families, TemplateFamily, TemplateVariant, SLOT};
pub use generate::{generate_corpus, EntityPools, GenSpec};
pub use squad::{export_dataset, load_squad, parse_squad};

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textproc::{self, EntityMention, EntityType, Recognizer};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed file {file}: {detail} (at {path})")]
    MalformedFile { file: PathBuf, path: String, detail: String },
    #[error("answer offset mismatch for question {question_id}: expected {expected:?}, found {found:?}")]
    OffsetMismatch { question_id: String, expected: String, found: String },
    #[error("entity pool for {0} is empty")]
    EmptyPool(EntityType),
    #[error("invalid generation spec: {0}")]
    InvalidSpec(String),
    #[error("invalid instance {id}: {detail}")]
    InvalidInstance { id: String, detail: String },
    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Half-open byte range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, other: Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// Lowercased text of the token.
    pub surface: String,
    pub char_span: Span,
    pub is_stop: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    pub char_span: Span,
    pub entities: Vec<EntityMention>,
    /// Entity annotations are authoritative (set by the generator) and are
    /// never re-derived by the recognizer.
    #[serde(default)]
    pub gold_entities: bool,
}

/// One sentence before it is placed in a passage: its text and entity spans
/// relative to that text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceDraft {
    pub text: String,
    pub entities: Vec<(Span, EntityType)>,
    pub gold: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub id: String,
    pub text: String,
    pub sentences: Vec<Sentence>,
}

impl Passage {
    /// Splits, tokenizes and annotates raw text.
    pub fn from_text(id: impl Into<String>, text: impl Into<String>, recognizer: &Recognizer) -> Self {
        let text = text.into();
        let mut sentences = textproc::split_sentences(&text);
        recognizer.annotate(&text, &mut sentences);
        Passage { id: id.into(), text, sentences }
    }

    /// Joins drafted sentences with single spaces and maps their entity spans
    /// onto tokens.
    pub fn from_drafts(id: impl Into<String>, drafts: &[SentenceDraft]) -> Self {
        let mut text = String::new();
        let mut sentences = Vec::with_capacity(drafts.len());
        for d in drafts {
            if !text.is_empty() {
                text.push(' ');
            }
            let base = text.len();
            text.push_str(&d.text);
            let tokens = textproc::tokenize_at(&d.text, base);
            let entities = d
                .entities
                .iter()
                .filter_map(|&(span, etype)| {
                    let (s, e) = (span.start + base, span.end + base);
                    let first = tokens.iter().position(|t| t.char_span.start == s)?;
                    let last = tokens.iter().rposition(|t| t.char_span.end == e)?;
                    Some(EntityMention {
                        etype,
                        token_span: (first, last),
                        surface: text[s..e].to_string(),
                    })
                })
                .collect();
            sentences.push(Sentence {
                tokens,
                char_span: Span::new(base, base + d.text.len()),
                entities,
                gold_entities: d.gold,
            });
        }
        Passage { id: id.into(), text, sentences }
    }

    /// The inverse of [`Passage::from_drafts`], one draft per sentence.
    pub fn drafts(&self) -> Vec<SentenceDraft> {
        self.sentences
            .iter()
            .map(|s| {
                let base = s.char_span.start;
                SentenceDraft {
                    text: self.text[s.char_span.start..s.char_span.end].to_string(),
                    entities: s
                        .entities
                        .iter()
                        .map(|m| {
                            let span = m.char_span(s);
                            (Span::new(span.start - base, span.end - base), m.etype)
                        })
                        .collect(),
                    gold: s.gold_entities,
                }
            })
            .collect()
    }

    pub fn sentence_text(&self, idx: usize) -> &str {
        let span = self.sentences[idx].char_span;
        &self.text[span.start..span.end]
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.sentences.iter().flat_map(|s| s.tokens.iter())
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(|s| s.tokens.len()).sum()
    }

    /// Index of the sentence containing byte `offset`.
    pub fn sentence_of(&self, offset: usize) -> Option<usize> {
        self.sentences
            .iter()
            .position(|s| s.char_span.start <= offset && offset < s.char_span.end)
    }

    /// Every occurrence of `answer` that starts and ends on token boundaries.
    pub fn find_answers(&self, answer: &str) -> Vec<Answer> {
        if answer.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::new();
        for (si, s) in self.sentences.iter().enumerate() {
            for (ti, t) in s.tokens.iter().enumerate() {
                let start = t.char_span.start;
                if !self.text[start..].starts_with(answer) {
                    continue;
                }
                let end = start + answer.len();
                if s.tokens[ti..].iter().any(|t| t.char_span.end == end) {
                    out.push(Answer { text: answer.to_string(), char_start: start, sentence_idx: si });
                }
            }
        }
        out
    }

    /// Checks the token and sentence invariants.
    pub fn validate(&self) -> Result<(), String> {
        let mut last = 0;
        for (si, s) in self.sentences.iter().enumerate() {
            if s.char_span.start < last || s.char_span.end > self.text.len() {
                return Err(format!("sentence {si} span out of order"));
            }
            last = s.char_span.end;
            let mut tok_last = s.char_span.start;
            for t in &s.tokens {
                if t.char_span.start >= t.char_span.end || t.char_span.start < tok_last {
                    return Err(format!("sentence {si} token spans out of order"));
                }
                if !s.char_span.contains(t.char_span) {
                    return Err(format!("sentence {si} token outside sentence"));
                }
                if self.text[t.char_span.start..t.char_span.end].to_lowercase() != t.surface {
                    return Err(format!("sentence {si} token surface mismatch"));
                }
                tok_last = t.char_span.end;
            }
            for m in &s.entities {
                if m.token_span.0 > m.token_span.1 || m.token_span.1 >= s.tokens.len() {
                    return Err(format!("sentence {si} entity span invalid"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum QWord {
    Who,
    When,
    Where,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub text: String,
    pub tokens: Vec<Token>,
    pub qword: QWord,
}

impl Question {
    pub fn new(id: impl Into<String>, text: &str) -> Self {
        let tokens = textproc::tokenize(text);
        let qword = textproc::classify_qword(&tokens);
        Question { id: id.into(), text: text.to_string(), tokens, qword }
    }

    /// Same id, new wording.
    pub fn reworded(&self, text: &str) -> Self {
        Question::new(self.id.clone(), text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Answer {
    pub text: String,
    pub char_start: usize,
    pub sentence_idx: usize,
}

impl Answer {
    pub fn span(&self) -> Span {
        Span::new(self.char_start, self.char_start + self.text.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Version {
    Shortcut,
    Challenging,
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Version::Shortcut => "shortcut",
            Version::Challenging => "challenging",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Skill {
    Qwm,
    Spm,
    Para,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub question: Question,
    pub passage: Passage,
    /// Every gold occurrence of the answer.
    pub answers: Vec<Answer>,
    pub version: Version,
    pub skill: Option<Skill>,
}

impl Instance {
    pub fn id(&self) -> &str {
        &self.question.id
    }

    /// The gold answer string (all occurrences share it).
    pub fn answer_text(&self) -> &str {
        self.answers.first().map(|a| a.text.as_str()).unwrap_or("")
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let invalid = |detail: String| CorpusError::InvalidInstance { id: self.id().to_string(), detail };
        if self.answers.is_empty() {
            return Err(invalid("no gold answers".into()));
        }
        self.passage.validate().map_err(invalid)?;
        for a in &self.answers {
            let found = self.passage.text.get(a.char_start..a.char_start + a.text.len());
            if found != Some(a.text.as_str()) {
                return Err(CorpusError::OffsetMismatch {
                    question_id: self.id().to_string(),
                    expected: a.text.clone(),
                    found: found.unwrap_or("<out of range>").to_string(),
                });
            }
            if self.passage.sentence_of(a.char_start) != Some(a.sentence_idx) {
                return Err(invalid(format!("answer at {} has wrong sentence index", a.char_start)));
            }
        }
        Ok(())
    }

    /// Passage-level `(first, last)` token indices of every gold answer.
    pub fn gold_token_spans(&self) -> Vec<(usize, usize)> {
        let starts: Vec<Span> = self.passage.tokens().map(|t| t.char_span).collect();
        let mut out: Vec<(usize, usize)> = self
            .answers
            .iter()
            .filter_map(|a| {
                let span = a.span();
                let first = starts.iter().position(|t| t.end > span.start)?;
                let last = starts.iter().rposition(|t| t.start < span.end)?;
                (first <= last).then_some((first, last))
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_id: String,
    pub recipe: String,
    pub paraphraser: String,
    pub seed: u64,
}

/// A paired unit: the shortcut and challenging versions built from one source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub id: String,
    pub shortcut: Instance,
    pub challenging: Instance,
    pub skill: Skill,
    pub provenance: Provenance,
}

impl Entry {
    pub fn version(&self, version: Version) -> &Instance {
        match version {
            Version::Shortcut => &self.shortcut,
            Version::Challenging => &self.challenging,
        }
    }
}
