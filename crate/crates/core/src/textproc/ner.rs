//! Rule-based named entity recognition.
//!
//! TIME comes from regular expressions over month names, dates and years.
//! PERSON and LOCATION come from gazetteers, gated by a capitalization cue in
//! the raw text. Candidates are resolved longest-match-first so mentions never
//! overlap.

use std::collections::HashMap;
use std::fmt;

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{parse_list, tokenize};
use crate::corpus::{Sentence, Span};

const PERSONS_TXT: &str = include_str!("../../resources/persons.txt");
const LOCATIONS_TXT: &str = include_str!("../../resources/locations.txt");

pub const MONTHS: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityType {
    Person,
    Time,
    Location,
}

impl EntityType {
    pub const ALL: [EntityType; 3] = [EntityType::Person, EntityType::Time, EntityType::Location];
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EntityType::Person => "PERSON",
            EntityType::Time => "TIME",
            EntityType::Location => "LOCATION",
        };
        f.write_str(s)
    }
}

/// An entity occurrence inside one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub etype: EntityType,
    /// Inclusive `[first, last]` token indices within the sentence.
    pub token_span: (usize, usize),
    /// Raw text of the mention as it appears in the passage.
    pub surface: String,
}

impl EntityMention {
    /// Byte span of the mention in the passage text.
    pub fn char_span(&self, sentence: &Sentence) -> Span {
        let first = &sentence.tokens[self.token_span.0];
        let last = &sentence.tokens[self.token_span.1];
        Span::new(first.char_span.start, last.char_span.end)
    }
}

/// Name lists keyed by entity type, matched as lowercase token sequences.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: HashMap<String, Vec<(Vec<String>, EntityType)>>,
}

impl Gazetteer {
    pub fn new() -> Self {
        Self::default()
    }

    /// The embedded PERSON and LOCATION lists.
    pub fn embedded() -> Self {
        let mut g = Gazetteer::new();
        for name in parse_list(PERSONS_TXT) {
            g.insert(&name, EntityType::Person);
        }
        for name in parse_list(LOCATIONS_TXT) {
            g.insert(&name, EntityType::Location);
        }
        g
    }

    /// Reads a one-entry-per-line list file.
    pub fn load_into(&mut self, text: &str, etype: EntityType) {
        for name in parse_list(text) {
            self.insert(&name, etype);
        }
    }

    pub fn insert(&mut self, name: &str, etype: EntityType) {
        let toks: Vec<String> = tokenize(name).into_iter().map(|t| t.surface).collect();
        if let Some(first) = toks.first().cloned() {
            self.entries.entry(first).or_default().push((toks, etype));
        }
    }

    fn candidates<'a>(&'a self, first: &str) -> impl Iterator<Item = &'a (Vec<String>, EntityType)> {
        self.entries.get(first).into_iter().flatten()
    }
}

/// Embedded person names (generator pool and gazetteer share them).
pub fn embedded_persons() -> Vec<String> {
    parse_list(PERSONS_TXT)
}

/// Embedded location names.
pub fn embedded_locations() -> Vec<String> {
    parse_list(LOCATIONS_TXT)
}

static TIME_PATTERNS: Lazy<Vec<Regex>> = Lazy::new(|| {
    let months = MONTHS.join("|");
    [
        format!(r"\b(?:{months})\s+\d{{1,2}},?\s+\d{{3,4}}\b"),
        format!(r"\b\d{{1,2}}\s+(?:{months})\s+\d{{3,4}}\b"),
        format!(r"\b(?:{months})\s+\d{{3,4}}\b"),
        format!(r"\b(?:{months})\s+\d{{1,2}}\b"),
        r"\b1\d{3}s?\b|\b20\d{2}s?\b".to_string(),
    ]
    .iter()
    .map(|p| Regex::new(p).expect("valid time pattern"))
    .collect()
});

#[derive(Debug, Clone, Default)]
pub struct Recognizer {
    gazetteer: Gazetteer,
}

impl Recognizer {
    pub fn new(gazetteer: Gazetteer) -> Self {
        Self { gazetteer }
    }

    pub fn embedded() -> Self {
        Self::new(Gazetteer::embedded())
    }

    /// Entity mentions of `sentence`, whose token spans index `text`.
    ///
    /// Sentences carrying gold annotations (generated corpora) return them
    /// unchanged.
    pub fn recognize(&self, text: &str, sentence: &Sentence) -> Vec<EntityMention> {
        if sentence.gold_entities {
            return sentence.entities.clone();
        }
        let toks = &sentence.tokens;
        if toks.is_empty() {
            return Vec::new();
        }
        // (first, last, etype)
        let mut cands: Vec<(usize, usize, EntityType)> = Vec::new();

        let base = sentence.char_span.start;
        let raw = &text[sentence.char_span.start..sentence.char_span.end];
        for re in TIME_PATTERNS.iter() {
            for m in re.find_iter(raw) {
                let (s, e) = (m.start() + base, m.end() + base);
                let first = toks.iter().position(|t| t.char_span.start == s);
                let last = toks.iter().rposition(|t| t.char_span.end == e);
                if let (Some(f), Some(l)) = (first, last) {
                    cands.push((f, l, EntityType::Time));
                }
            }
        }

        for (i, tok) in toks.iter().enumerate() {
            let capitalized = text[tok.char_span.start..]
                .chars()
                .next()
                .is_some_and(char::is_uppercase);
            if !capitalized {
                continue;
            }
            for (seq, etype) in self.gazetteer.candidates(&tok.surface) {
                let end = i + seq.len();
                if end <= toks.len() && toks[i..end].iter().zip(seq).all(|(t, s)| &t.surface == s) {
                    cands.push((i, end - 1, *etype));
                }
            }
        }

        // Longest first, then leftmost; drop anything overlapping a kept span.
        cands.sort_by(|a, b| (b.1 - b.0).cmp(&(a.1 - a.0)).then(a.0.cmp(&b.0)).then(a.2.cmp(&b.2)));
        let mut kept: Vec<(usize, usize, EntityType)> = Vec::new();
        for c in cands {
            if kept.iter().all(|k| c.1 < k.0 || c.0 > k.1) {
                kept.push(c);
            }
        }
        kept.sort_by_key(|k| k.0);
        kept.into_iter()
            .map(|(f, l, etype)| EntityMention {
                etype,
                token_span: (f, l),
                surface: text[toks[f].char_span.start..toks[l].char_span.end].to_string(),
            })
            .collect()
    }

    /// Fills `sentence.entities` for every non-gold sentence.
    pub fn annotate(&self, text: &str, sentences: &mut [Sentence]) {
        for s in sentences.iter_mut() {
            if !s.gold_entities {
                s.entities = self.recognize(text, s);
            }
        }
    }
}
