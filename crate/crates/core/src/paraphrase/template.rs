use regex::Regex;

use super::ParaphraseError;
use crate::corpus::{TemplateFamily, SLOT};

struct Pattern {
    family: usize,
    variant: usize,
    sentence: Regex,
}

/// Recognises rendered template sentences and questions and rewrites them to
/// the next variant of the same family.
pub struct TemplateIndex {
    families: Vec<TemplateFamily>,
    patterns: Vec<Pattern>,
}

impl TemplateIndex {
    pub fn new(families: &[TemplateFamily]) -> Self {
        let mut patterns = Vec::new();
        for (fi, fam) in families.iter().enumerate() {
            for (vi, v) in fam.variants.iter().enumerate() {
                let Some((head, tail)) = v.sentence.split_once(SLOT) else {
                    continue;
                };
                let re = format!("^{}(?P<slot>.+?){}$", regex::escape(head), regex::escape(tail));
                if let Ok(sentence) = Regex::new(&re) {
                    patterns.push(Pattern { family: fi, variant: vi, sentence });
                }
            }
        }
        TemplateIndex { families: families.to_vec(), patterns }
    }

    /// Rewrites `text` into the next variant of its family.
    pub fn swap(&self, text: &str) -> Result<String, ParaphraseError> {
        let trimmed = text.trim();
        for fam in &self.families {
            for (vi, v) in fam.variants.iter().enumerate() {
                if v.question.trim().eq_ignore_ascii_case(trimmed) {
                    let next = &fam.variants[(vi + 1) % fam.variants.len()];
                    return Ok(next.question.clone());
                }
            }
        }
        for p in &self.patterns {
            if let Some(caps) = p.sentence.captures(trimmed) {
                let fam = &self.families[p.family];
                let next = &fam.variants[(p.variant + 1) % fam.variants.len()];
                return Ok(next.render(&caps["slot"]));
            }
        }
        Err(ParaphraseError::UnknownTemplate(text.to_string()))
    }
}
