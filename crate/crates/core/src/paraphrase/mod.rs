//! Pluggable paraphrasers.
//!
//! * `Template` swaps a rendered template sentence (or question) to another
//!   variant of its family, keeping the slot filler. Offline and exact.
//! * `Lexical` substitutes non-stop, non-answer words through a synonym map.
//! * `Backtranslation` sends text around a pivot-language chain through an
//!   HTTP translation endpoint.

mod backtranslate;
mod lexical;
mod template;

pub use backtranslate::{HttpTranslator, Translator};
pub use lexical::lexical_paraphrase;
pub use template::TemplateIndex;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::TemplateFamily;

#[derive(Debug, Error)]
pub enum ParaphraseError {
    #[error("text does not match any known template: {0:?}")]
    UnknownTemplate(String),
    #[error("translation endpoint unreachable: {0}")]
    NetworkUnavailable(String),
    #[error("credential environment variable {0} is not set")]
    CredentialMissing(String),
    #[error("translation endpoint returned an unusable response: {0}")]
    BadResponse(String),
    #[error("invalid paraphraser spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Template,
    Lexical,
    Backtranslation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParaphraserSpec {
    pub method: Method,
    /// Families recognised by the template method.
    #[serde(default)]
    pub families: Vec<TemplateFamily>,
    /// Lowercase word → replacement, for the lexical method.
    #[serde(default)]
    pub lexicon: BTreeMap<String, String>,
    /// Language codes visited in order, e.g. `["en", "de", "zh", "en"]`.
    #[serde(default)]
    pub pivot_chain: Vec<String>,
    #[serde(default)]
    pub endpoint: Option<String>,
    /// Name of the environment variable holding the endpoint credential.
    #[serde(default)]
    pub credential_env: Option<String>,
    /// Allows concurrent requests against the endpoint.
    #[serde(default)]
    pub rate_unlimited: bool,
}

impl ParaphraserSpec {
    pub fn template(families: Vec<TemplateFamily>) -> Self {
        ParaphraserSpec {
            method: Method::Template,
            families,
            lexicon: BTreeMap::new(),
            pivot_chain: Vec::new(),
            endpoint: None,
            credential_env: None,
            rate_unlimited: false,
        }
    }

    pub fn lexical(lexicon: BTreeMap<String, String>) -> Self {
        ParaphraserSpec { method: Method::Lexical, lexicon, ..Self::template(Vec::new()) }
    }

    pub fn backtranslation(endpoint: &str, pivot_chain: &[&str], credential_env: Option<&str>) -> Self {
        ParaphraserSpec {
            method: Method::Backtranslation,
            pivot_chain: pivot_chain.iter().map(|s| s.to_string()).collect(),
            endpoint: Some(endpoint.to_string()),
            credential_env: credential_env.map(str::to_string),
            ..Self::template(Vec::new())
        }
    }

    /// Short identifier recorded in entry provenance.
    pub fn id(&self) -> String {
        match self.method {
            Method::Template => "template".into(),
            Method::Lexical => format!("lexical:{}", self.lexicon.len()),
            Method::Backtranslation => format!("backtranslation:{}", self.pivot_chain.join(">")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParaphraseResult {
    pub original: String,
    pub paraphrased: String,
    pub method: String,
    /// The protected answer occurs verbatim in `paraphrased` (true when no
    /// answer was supplied).
    pub answer_preserved: bool,
}

enum Backend {
    Template(TemplateIndex),
    Lexical(BTreeMap<String, String>),
    Backtranslation { chain: Vec<String>, translator: Arc<dyn Translator> },
}

/// A paraphraser compiled from its spec, reusable across many calls.
pub struct Paraphraser {
    id: String,
    backend: Backend,
}

impl Paraphraser {
    pub fn new(spec: &ParaphraserSpec) -> Result<Self, ParaphraseError> {
        let backend = match spec.method {
            Method::Template => Backend::Template(TemplateIndex::new(&spec.families)),
            Method::Lexical => Backend::Lexical(spec.lexicon.clone()),
            Method::Backtranslation => {
                let endpoint = spec
                    .endpoint
                    .as_deref()
                    .ok_or_else(|| ParaphraseError::InvalidSpec("backtranslation needs an endpoint".into()))?;
                let translator = HttpTranslator::from_env(endpoint, spec.credential_env.as_deref(), spec.rate_unlimited)?;
                return Self::with_translator(spec, Arc::new(translator));
            }
        };
        Ok(Paraphraser { id: spec.id(), backend })
    }

    /// A back-translation paraphraser over any [`Translator`].
    pub fn with_translator(spec: &ParaphraserSpec, translator: Arc<dyn Translator>) -> Result<Self, ParaphraseError> {
        let chain = &spec.pivot_chain;
        if chain.len() < 3 || chain.first() != chain.last() {
            return Err(ParaphraseError::InvalidSpec(
                "pivot chain must visit at least one pivot and return to the source language".into(),
            ));
        }
        Ok(Paraphraser {
            id: spec.id(),
            backend: Backend::Backtranslation { chain: chain.clone(), translator },
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn paraphrase(&self, text: &str, protected_answer: Option<&str>) -> Result<ParaphraseResult, ParaphraseError> {
        let paraphrased = match &self.backend {
            Backend::Template(index) => index.swap(text)?,
            Backend::Lexical(lexicon) => lexical_paraphrase(lexicon, text, protected_answer),
            Backend::Backtranslation { chain, translator } => {
                let mut current = text.to_string();
                for hop in chain.windows(2) {
                    current = translator.translate(&hop[0], &hop[1], &current)?;
                }
                current
            }
        };
        let answer_preserved = protected_answer.is_none_or(|a| paraphrased.contains(a));
        Ok(ParaphraseResult { original: text.to_string(), paraphrased, method: self.id.clone(), answer_preserved })
    }
}

/// One-shot form of [`Paraphraser::paraphrase`].
pub fn paraphrase(
    spec: &ParaphraserSpec,
    text: &str,
    protected_answer: Option<&str>,
) -> Result<ParaphraseResult, ParaphraseError> {
    Paraphraser::new(spec)?.paraphrase(text, protected_answer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{TemplateVariant, SLOT};
    use crate::textproc::EntityType;

    fn musician_family() -> TemplateFamily {
        TemplateFamily {
            id: "fig2".into(),
            etype: EntityType::Person,
            variants: vec![
                TemplateVariant {
                    sentence: format!("{SLOT} was rated as the most powerful female musician"),
                    question: "Who was rated as the most powerful female musician?".into(),
                },
                TemplateVariant {
                    sentence: format!("{SLOT} was named the most influential music girl"),
                    question: "Who was named the most influential music girl?".into(),
                },
            ],
        }
    }

    #[test]
    fn template_swaps_variant_keeping_filler() {
        let spec = ParaphraserSpec::template(vec![musician_family()]);
        let r = paraphrase(&spec, "X was rated as the most powerful female musician", Some("X")).unwrap();
        assert_eq!(r.paraphrased, "X was named the most influential music girl");
        assert!(r.answer_preserved);
        let q = paraphrase(&spec, "Who was rated as the most powerful female musician?", None).unwrap();
        assert_eq!(q.paraphrased, "Who was named the most influential music girl?");
    }

    #[test]
    fn template_rejects_unknown_text() {
        let spec = ParaphraserSpec::template(vec![musician_family()]);
        assert!(matches!(paraphrase(&spec, "Nothing like it.", None), Err(ParaphraseError::UnknownTemplate(_))));
    }

    #[test]
    fn empty_lexicon_is_identity() {
        let spec = ParaphraserSpec::lexical(BTreeMap::new());
        let r = paraphrase(&spec, "Lisa founded the orchestra.", Some("Lisa")).unwrap();
        assert_eq!(r.paraphrased, r.original);
        assert!(r.answer_preserved);
    }

    #[test]
    fn answer_preserved_tracks_substring() {
        let mut lex = BTreeMap::new();
        lex.insert("founded".to_string(), "established".to_string());
        let spec = ParaphraserSpec::lexical(lex);
        let r = paraphrase(&spec, "Lisa founded the orchestra.", Some("founded")).unwrap();
        assert_eq!(r.paraphrased, "Lisa founded the orchestra.", "protected words are kept");
        let r = paraphrase(&spec, "Lisa founded the orchestra.", Some("Lisa")).unwrap();
        assert_eq!(r.paraphrased, "Lisa established the orchestra.");
        assert!(r.answer_preserved);
        let r = paraphrase(&spec, "Lisa founded the orchestra.", Some("Bella")).unwrap();
        assert!(!r.answer_preserved);
    }

    #[test]
    fn pivot_chain_must_return_home() {
        let spec = ParaphraserSpec::backtranslation("http://127.0.0.1:9", &["en", "de", "zh"], None);
        assert!(matches!(Paraphraser::new(&spec), Err(ParaphraseError::InvalidSpec(_))));
    }
}
