//! Dataset constructors.
//!
//! `build_qwm_entry` and `build_spm_entry` turn one source instance into a
//! paired entry (or a rejection with the filter that discarded it).
//! `substitute_entities` derives the entity-substituted QWM variant, and
//! `sample_mixture` draws a training set with a fixed shortcut proportion.

mod mixture;
mod substitute;

pub use mixture::{sample_mixture, shortcut_count, MixtureSpec};
pub use substitute::substitute_entities;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Answer, Entry, Instance, Passage, Provenance, SentenceDraft, Skill, Span, Version};
use crate::paraphrase::Paraphraser;
use crate::textproc::{self, qword_type, EntityType};

/// Alg. 1 rejects when the paraphrased question still overlaps the answer
/// sentence by more than this; Alg. 2 applies it to the paraphrased sentence.
pub const MAX_PARAPHRASE_OVERLAP: f64 = 0.25;
/// Alg. 2 keeps only questions overlapping their answer sentence at least this much.
pub const MIN_SPM_OVERLAP: f64 = 0.75;

#[derive(Debug, Error)]
pub enum ConstructError {
    #[error("entity pool for {0} is empty")]
    EmptyPool(EntityType),
    #[error("mixture expects {expected} entries, got {actual}")]
    MixtureSize { expected: usize, actual: usize },
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad entry record at {path}:{line}: {detail}")]
    BadRecord { path: PathBuf, line: usize, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RejectReason {
    /// Alg. 1: question does not start with who/when/where.
    QuestionWordUnsupported,
    /// Alg. 1: answer sentence holds another mention of the expected type.
    DistractorInAnswerSentence,
    /// Alg. 1 and 2: paraphrase still overlaps too much.
    ParaphraseOverlapTooHigh,
    /// Alg. 2: question and answer sentence overlap too little.
    OverlapTooLowForSpM,
    /// Alg. 2: the answer span did not survive paraphrasing.
    AnswerLostInParaphrase,
    /// The paraphraser itself failed.
    ParaphraseFailed,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BuildOutcome {
    Accepted(Box<Entry>),
    Rejected { reason: RejectReason, detail: Option<String> },
}

impl BuildOutcome {
    fn reject(reason: RejectReason) -> Self {
        BuildOutcome::Rejected { reason, detail: None }
    }

    pub fn accepted(self) -> Option<Entry> {
        match self {
            BuildOutcome::Accepted(e) => Some(*e),
            BuildOutcome::Rejected { .. } => None,
        }
    }

    pub fn reason(&self) -> Option<RejectReason> {
        match self {
            BuildOutcome::Accepted(_) => None,
            BuildOutcome::Rejected { reason, .. } => Some(*reason),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recipe {
    Qwm,
    Spm,
    /// QWM followed by entity substitution.
    QwmSubs,
}

impl Recipe {
    pub fn name(self) -> &'static str {
        match self {
            Recipe::Qwm => "qwm",
            Recipe::Spm => "spm",
            Recipe::QwmSubs => "qwm-subs",
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Recipe {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "qwm" => Ok(Recipe::Qwm),
            "spm" => Ok(Recipe::Spm),
            "qwm-subs" | "qwm/subs" | "qwmsubs" => Ok(Recipe::QwmSubs),
            other => Err(format!("unknown recipe {other:?} (expected qwm, spm or qwm-subs)")),
        }
    }
}

/// Rebuilds `passage` keeping sentences `order` (old indices, in new order),
/// carrying over every answer that sits in a kept sentence.
pub(crate) fn reorder(passage: &Passage, order: &[usize], answers: &[Answer], id: &str) -> (Passage, Vec<Answer>) {
    let drafts = passage.drafts();
    let kept: Vec<SentenceDraft> = order.iter().map(|&i| drafts[i].clone()).collect();
    let rebuilt = Passage::from_drafts(id, &kept);
    let mut moved = Vec::new();
    for a in answers {
        if let Some(new_idx) = order.iter().position(|&i| i == a.sentence_idx) {
            let old = passage.sentences[a.sentence_idx].char_span.start;
            let new = rebuilt.sentences[new_idx].char_span.start;
            moved.push(Answer { text: a.text.clone(), char_start: a.char_start - old + new, sentence_idx: new_idx });
        }
    }
    moved.sort_by_key(|a| a.char_start);
    (rebuilt, moved)
}

fn shuffled_order(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

/// Fisher–Yates permutation of the sentences. Returns the new passage and
/// `order`, where `order[new] = old`.
pub fn shuffle_sentences(passage: &Passage, seed: u64) -> (Passage, Vec<usize>) {
    let order = shuffled_order(passage.sentences.len(), seed);
    let (p, _) = reorder(passage, &order, &[], &passage.id);
    (p, order)
}

/// Shuffles an instance's passage and remaps its answers.
pub fn shuffle_instance(instance: &Instance, seed: u64) -> Instance {
    let order = shuffled_order(instance.passage.sentences.len(), seed);
    let (passage, answers) = reorder(&instance.passage, &order, &instance.answers, &instance.passage.id);
    Instance { passage, answers, ..instance.clone() }
}

fn overlap_text(a: &str, b: &str) -> f64 {
    textproc::text_overlap(a, b)
}

fn answer_sentence(instance: &Instance) -> usize {
    instance.answers[0].sentence_idx
}

fn provenance(instance: &Instance, recipe: Recipe, paraphraser: &Paraphraser, seed: u64) -> Provenance {
    Provenance {
        source_id: instance.id().to_string(),
        recipe: recipe.name().to_string(),
        paraphraser: paraphraser.id().to_string(),
        seed,
    }
}

/// Question-word-matching construction (paraphrased question; the shortcut
/// passage drops sentences with same-type distractors).
pub fn build_qwm_entry(instance: &Instance, paraphraser: &Paraphraser, seed: u64) -> BuildOutcome {
    let Some(qtype) = qword_type(&instance.question) else {
        return BuildOutcome::reject(RejectReason::QuestionWordUnsupported);
    };
    if instance.answers.is_empty() {
        return BuildOutcome::Rejected { reason: RejectReason::ParaphraseFailed, detail: Some("no gold answer".into()) };
    }
    let passage = &instance.passage;
    let gold: Vec<Span> = instance.answers.iter().map(Answer::span).collect();
    let is_gold_mention = |span: Span, surface: &str| {
        surface == instance.answer_text() || gold.iter().any(|g| span.start < g.end && g.start < span.end)
    };

    let s_idx = answer_sentence(instance);
    let s = &passage.sentences[s_idx];
    let distracted = s
        .entities
        .iter()
        .any(|m| m.etype == qtype && !is_gold_mention(m.char_span(s), &m.surface));
    if distracted {
        return BuildOutcome::reject(RejectReason::DistractorInAnswerSentence);
    }

    let q_p = match paraphraser.paraphrase(&instance.question.text, None) {
        Ok(r) => r.paraphrased,
        Err(e) => return BuildOutcome::Rejected { reason: RejectReason::ParaphraseFailed, detail: Some(e.to_string()) },
    };
    if overlap_text(&q_p, passage.sentence_text(s_idx)) > MAX_PARAPHRASE_OVERLAP {
        return BuildOutcome::reject(RejectReason::ParaphraseOverlapTooHigh);
    }

    let answer_sentences: Vec<usize> = instance.answers.iter().map(|a| a.sentence_idx).collect();
    let keep: Vec<usize> = (0..passage.sentences.len())
        .filter(|&i| answer_sentences.contains(&i) || !passage.sentences[i].entities.iter().any(|m| m.etype == qtype))
        .collect();
    let (p_s, s_answers) = reorder(passage, &keep, &instance.answers, &format!("{}-s", passage.id));

    let question = instance.question.reworded(&q_p);
    let shortcut = Instance {
        question: question.clone(),
        passage: p_s,
        answers: s_answers,
        version: Version::Shortcut,
        skill: Some(Skill::Qwm),
    };
    let challenging = Instance {
        question,
        passage: passage.clone(),
        answers: instance.answers.clone(),
        version: Version::Challenging,
        skill: Some(Skill::Para),
    };
    BuildOutcome::Accepted(Box::new(Entry {
        id: format!("qwm-{}", instance.id()),
        shortcut,
        challenging,
        skill: Skill::Qwm,
        provenance: provenance(instance, Recipe::Qwm, paraphraser, seed),
    }))
}

/// Draft for the paraphrased sentence, carrying over every mention whose
/// surface survives verbatim.
fn paraphrased_draft(passage: &Passage, s_idx: usize, text: &str) -> SentenceDraft {
    let s = &passage.sentences[s_idx];
    let mut entities: Vec<(Span, EntityType)> = Vec::new();
    for m in &s.entities {
        for (at, _) in text.match_indices(m.surface.as_str()) {
            let span = Span::new(at, at + m.surface.len());
            if entities.iter().all(|(e, _)| e.end <= span.start || span.end <= e.start) {
                entities.push((span, m.etype));
                break;
            }
        }
    }
    entities.sort_by_key(|(span, _)| span.start);
    SentenceDraft { text: text.to_string(), entities, gold: s.gold_entities }
}

/// Occurrences of `answer` inside the given sentences only.
fn answers_in(passage: &Passage, answer: &str, sentences: &[usize]) -> Vec<Answer> {
    passage
        .find_answers(answer)
        .into_iter()
        .filter(|a| sentences.contains(&a.sentence_idx))
        .collect()
}

/// Simple-matching construction (paraphrased answer sentence; the shortcut
/// passage keeps both the original and the paraphrase).
pub fn build_spm_entry(instance: &Instance, paraphraser: &Paraphraser, seed: u64) -> BuildOutcome {
    if instance.answers.is_empty() {
        return BuildOutcome::Rejected { reason: RejectReason::ParaphraseFailed, detail: Some("no gold answer".into()) };
    }
    let passage = &instance.passage;
    let q = &instance.question.text;
    let s_idx = answer_sentence(instance);
    let s_text = passage.sentence_text(s_idx);
    if overlap_text(q, s_text) < MIN_SPM_OVERLAP {
        return BuildOutcome::reject(RejectReason::OverlapTooLowForSpM);
    }
    let answer = instance.answer_text().to_string();
    let para = match paraphraser.paraphrase(s_text, Some(&answer)) {
        Ok(r) => r,
        Err(e) => return BuildOutcome::Rejected { reason: RejectReason::ParaphraseFailed, detail: Some(e.to_string()) },
    };
    if !para.answer_preserved {
        return BuildOutcome::reject(RejectReason::AnswerLostInParaphrase);
    }
    if overlap_text(q, &para.paraphrased) > MAX_PARAPHRASE_OVERLAP {
        return BuildOutcome::reject(RejectReason::ParaphraseOverlapTooHigh);
    }

    let drafts = passage.drafts();
    let s_p = paraphrased_draft(passage, s_idx, &para.paraphrased);

    // P_c: S replaced by S_p, then shuffled.
    let mut replaced = drafts.clone();
    replaced[s_idx] = s_p.clone();
    let order_c = shuffled_order(replaced.len(), seed);
    let p_c_drafts: Vec<SentenceDraft> = order_c.iter().map(|&i| replaced[i].clone()).collect();
    let p_c = Passage::from_drafts(format!("{}-c", passage.id), &p_c_drafts);
    let sp_pos_c = order_c.iter().position(|&i| i == s_idx).unwrap_or(0);
    let c_answers = answers_in(&p_c, &answer, &[sp_pos_c]);

    // P_s: S_p appended, then shuffled.
    let mut appended = drafts;
    appended.push(s_p);
    let order_s = shuffled_order(appended.len(), seed.wrapping_add(1));
    let p_s_drafts: Vec<SentenceDraft> = order_s.iter().map(|&i| appended[i].clone()).collect();
    let p_s = Passage::from_drafts(format!("{}-s", passage.id), &p_s_drafts);
    let s_pos = order_s.iter().position(|&i| i == s_idx).unwrap_or(0);
    let sp_pos = order_s.iter().position(|&i| i == appended.len() - 1).unwrap_or(0);
    let s_answers = answers_in(&p_s, &answer, &[s_pos, sp_pos]);

    let shortcut = Instance {
        question: instance.question.clone(),
        passage: p_s,
        answers: s_answers,
        version: Version::Shortcut,
        skill: Some(Skill::Spm),
    };
    let challenging = Instance {
        question: instance.question.clone(),
        passage: p_c,
        answers: c_answers,
        version: Version::Challenging,
        skill: Some(Skill::Para),
    };
    BuildOutcome::Accepted(Box::new(Entry {
        id: format!("spm-{}", instance.id()),
        shortcut,
        challenging,
        skill: Skill::Spm,
        provenance: provenance(instance, Recipe::Spm, paraphraser, seed),
    }))
}

/// Outcome counts of a construction run, keyed by reason name
/// (`"Accepted"` for successes).
pub type Histogram = BTreeMap<String, usize>;

/// Per-instance construction seed: the run seed offset by the input index.
pub fn instance_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(index as u64)
}

/// Applies a recipe to every instance, in input order.
pub fn construct_all(
    instances: &[Instance],
    recipe: Recipe,
    paraphraser: &Paraphraser,
    pools: &crate::corpus::EntityPools,
    seed: u64,
) -> Result<(Vec<Entry>, Histogram), ConstructError> {
    let outcomes: Vec<Result<BuildOutcome, ConstructError>> = instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            let s = instance_seed(seed, i);
            match recipe {
                Recipe::Qwm => Ok(build_qwm_entry(inst, paraphraser, s)),
                Recipe::Spm => Ok(build_spm_entry(inst, paraphraser, s)),
                Recipe::QwmSubs => match build_qwm_entry(inst, paraphraser, s) {
                    BuildOutcome::Accepted(e) => {
                        let mut subs = substitute_entities(&e, pools, s)?;
                        subs.provenance.recipe = Recipe::QwmSubs.name().to_string();
                        subs.id = format!("qwm-subs-{}", inst.id());
                        Ok(BuildOutcome::Accepted(Box::new(subs)))
                    }
                    rejected => Ok(rejected),
                },
            }
        })
        .collect();
    let mut entries = Vec::new();
    let mut histogram = Histogram::new();
    for outcome in outcomes {
        let outcome = outcome?;
        let key = outcome.reason().map(|r| r.to_string()).unwrap_or_else(|| "Accepted".to_string());
        *histogram.entry(key).or_default() += 1;
        if let Some(e) = outcome.accepted() {
            entries.push(e);
        }
    }
    Ok((entries, histogram))
}

/// Seeded train/test split: `round(test_fraction · N)` entries go to test.
/// Both halves keep the input order.
pub fn split_entries(entries: &[Entry], test_fraction: f64, seed: u64) -> (Vec<Entry>, Vec<Entry>) {
    let n_test = shortcut_count(test_fraction, entries.len());
    let order = shuffled_order(entries.len(), seed);
    let mut is_test = vec![false; entries.len()];
    for &i in &order[..n_test] {
        is_test[i] = true;
    }
    let (test, train): (Vec<_>, Vec<_>) = entries.iter().cloned().zip(is_test).partition(|(_, t)| *t);
    (train.into_iter().map(|(e, _)| e).collect(), test.into_iter().map(|(e, _)| e).collect())
}

/// Writes entries as JSON Lines, one paired record per line.
pub fn write_entries(path: impl AsRef<Path>, entries: &[Entry]) -> Result<(), ConstructError> {
    let path = path.as_ref();
    let io = |source| ConstructError::Io { path: path.to_path_buf(), source };
    let mut w = BufWriter::new(fs::File::create(path).map_err(io)?);
    for e in entries {
        let line = serde_json::to_string(e).expect("entries serialize");
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_entries(path: impl AsRef<Path>) -> Result<Vec<Entry>, ConstructError> {
    let path = path.as_ref();
    let io = |source| ConstructError::Io { path: path.to_path_buf(), source };
    let reader = BufReader::new(fs::File::open(path).map_err(io)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let e: Entry = serde_json::from_str(&line).map_err(|e| ConstructError::BadRecord {
            path: path.to_path_buf(),
            line: i + 1,
            detail: e.to_string(),
        })?;
        out.push(e);
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
