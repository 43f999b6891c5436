use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::corpus::{builtin_families, generate_corpus, EntityPools, GenSpec, Question};
use crate::paraphrase::{ParaphraseError, ParaphraserSpec, Translator};
use crate::textproc::text_overlap;

fn template() -> Paraphraser {
    Paraphraser::new(&ParaphraserSpec::template(builtin_families(24))).unwrap()
}

fn identity() -> Paraphraser {
    Paraphraser::new(&ParaphraserSpec::lexical(Default::default())).unwrap()
}

fn corpus(n: usize, seed: u64, distractors: usize) -> Vec<Instance> {
    generate_corpus(&GenSpec { n_entries: n, seed, distractor_count: distractors, ..GenSpec::default() }).unwrap()
}

fn typed_sentences(passage: &Passage, etype: EntityType) -> Vec<usize> {
    (0..passage.sentences.len())
        .filter(|&i| passage.sentences[i].entities.iter().any(|m| m.etype == etype))
        .collect()
}

/// Hand-built instance: each sentence is text plus (surface, type) mentions.
fn instance(question: &str, sentences: &[(&str, &[(&str, EntityType)])], answer: &str) -> Instance {
    let drafts: Vec<SentenceDraft> = sentences
        .iter()
        .map(|(text, ents)| SentenceDraft {
            text: text.to_string(),
            entities: ents
                .iter()
                .map(|(s, t)| {
                    let at = text.find(s).unwrap();
                    (Span::new(at, at + s.len()), *t)
                })
                .collect(),
            gold: true,
        })
        .collect();
    let passage = Passage::from_drafts("p", &drafts);
    let answers = passage.find_answers(answer);
    Instance { question: Question::new("q", question), passage, answers, version: Version::Challenging, skill: None }
}

#[test]
fn qwm_rejects_other_question_words() {
    let mut inst = corpus(1, 1, 2).remove(0);
    inst.question = Question::new("q", "What was the acclaimed singer?");
    assert_eq!(build_qwm_entry(&inst, &template(), 0).reason(), Some(RejectReason::QuestionWordUnsupported));
}

#[test]
fn qwm_rejects_distractor_in_answer_sentence() {
    use EntityType::Person;
    let inst = instance(
        "Who recorded anthems with Bella?",
        &[("Lisa recorded anthems with Bella.", &[("Lisa", Person), ("Bella", Person)])],
        "Lisa",
    );
    assert_eq!(build_qwm_entry(&inst, &identity(), 0).reason(), Some(RejectReason::DistractorInAnswerSentence));
}

#[test]
fn qwm_identity_paraphrase_is_too_close() {
    let inst = corpus(1, 2, 2).remove(0);
    assert_eq!(build_qwm_entry(&inst, &identity(), 0).reason(), Some(RejectReason::ParaphraseOverlapTooHigh));
}

#[test]
fn qwm_shortcut_drops_distractor_sentences() {
    for inst in corpus(50, 3, 1) {
        let etype = qword_type(&inst.question).unwrap();
        let entry = build_qwm_entry(&inst, &template(), 0).accepted().expect("accepted");
        assert_eq!(entry.challenging.passage, inst.passage);
        let typed = typed_sentences(&entry.shortcut.passage, etype);
        assert_eq!(typed.len(), 1);
        assert_eq!(typed[0], entry.shortcut.answers[0].sentence_idx);
        assert_eq!(entry.shortcut.question.text, entry.challenging.question.text);
        assert_eq!(entry.shortcut.answer_text(), entry.challenging.answer_text());
        entry.shortcut.validate().unwrap();
        entry.challenging.validate().unwrap();
    }
}

#[test]
fn spm_rejects_low_overlap() {
    use EntityType::Person;
    // 3 of the 5 question content words appear in the sentence.
    let inst = instance(
        "Who founded the orchestra near the old harbor?",
        &[("Lisa founded the orchestra near the river.", &[("Lisa", Person)])],
        "Lisa",
    );
    assert!((text_overlap(&inst.question.text, inst.passage.sentence_text(0)) - 0.6).abs() < 1e-12);
    assert_eq!(build_spm_entry(&inst, &template(), 0).reason(), Some(RejectReason::OverlapTooLowForSpM));
}

struct Rename;

impl Translator for Rename {
    fn translate(&self, _: &str, _: &str, text: &str) -> Result<String, ParaphraseError> {
        Ok(text.replace("Lisa", "Bella"))
    }
}

#[test]
fn spm_rejects_lost_answer() {
    use EntityType::Person;
    let inst = instance(
        "Who founded the orchestra?",
        &[("Lisa founded the orchestra.", &[("Lisa", Person)])],
        "Lisa",
    );
    let spec = ParaphraserSpec::backtranslation("http://unused", &["en", "de", "en"], None);
    let p = Paraphraser::with_translator(&spec, Arc::new(Rename)).unwrap();
    assert_eq!(build_spm_entry(&inst, &p, 0).reason(), Some(RejectReason::AnswerLostInParaphrase));
}

#[test]
fn spm_entries_satisfy_postconditions() {
    for (i, inst) in corpus(50, 4, 2).iter().enumerate() {
        let entry = build_spm_entry(inst, &template(), i as u64).accepted().expect("accepted");
        let (s, c) = (&entry.shortcut, &entry.challenging);
        assert_eq!(s.passage.sentences.len(), c.passage.sentences.len() + 1);
        assert!(s.answers.len() >= 2);
        assert!(!c.answers.is_empty());
        s.validate().unwrap();
        c.validate().unwrap();
        let q = &inst.question.text;
        let orig = inst.passage.sentence_text(inst.answers[0].sentence_idx);
        assert!(text_overlap(q, orig) >= MIN_SPM_OVERLAP);
        let para = c.passage.sentence_text(c.answers[0].sentence_idx);
        assert!(text_overlap(q, para) <= MAX_PARAPHRASE_OVERLAP);
        assert!(!c.passage.text.contains(orig));
        assert!(s.passage.text.contains(orig) && s.passage.text.contains(para));
    }
}

#[test]
fn shipped_corpus_passes_every_filter() {
    let data = corpus(300, 5, 2);
    let p = template();
    let pools = EntityPools::embedded();
    for recipe in [Recipe::Qwm, Recipe::Spm, Recipe::QwmSubs] {
        let (entries, hist) = construct_all(&data, recipe, &p, &pools, 9).unwrap();
        assert_eq!(entries.len(), data.len(), "{recipe}: {hist:?}");
    }
}

#[test]
fn one_sentence_shuffle_is_identity() {
    let inst = instance("Who sang?", &[("Lisa sang.", &[("Lisa", EntityType::Person)])], "Lisa");
    let (p, order) = shuffle_sentences(&inst.passage, 11);
    assert_eq!(p, inst.passage);
    assert_eq!(order, vec![0]);
}

#[test]
fn substitution_keeps_types_in_shortcut_version() {
    let pools = EntityPools::embedded();
    for (i, inst) in corpus(40, 6, 2).iter().enumerate() {
        let entry = build_qwm_entry(inst, &template(), 0).accepted().unwrap();
        let subs = substitute_entities(&entry, &pools, i as u64).unwrap();
        let before: Vec<EntityType> = entry.shortcut.passage.sentences.iter().flat_map(|s| &s.entities).map(|m| m.etype).collect();
        let after: Vec<EntityType> = subs.shortcut.passage.sentences.iter().flat_map(|s| &s.entities).map(|m| m.etype).collect();
        assert_eq!(before, after);
        for v in [&subs.shortcut, &subs.challenging] {
            v.validate().unwrap();
            assert_eq!(v.question.text, entry.shortcut.question.text);
        }
        // Both versions are built on the distractor-free passage.
        assert_eq!(subs.challenging.passage.sentences.len(), entry.shortcut.passage.sentences.len());
        // Every mention surface was swapped out, so the old answer is gone.
        assert!(!subs.challenging.passage.text.contains(entry.challenging.answer_text()));
        assert_eq!(subs, substitute_entities(&entry, &pools, i as u64).unwrap());
    }
}

#[test]
fn substitution_types_are_uniform_in_challenging_version() {
    let pools = EntityPools::embedded();
    let mut counts = [0usize; 3];
    for (i, inst) in corpus(1200, 7, 2).iter().enumerate() {
        let entry = build_qwm_entry(inst, &template(), 0).accepted().unwrap();
        let subs = substitute_entities(&entry, &pools, i as u64).unwrap();
        for m in subs.challenging.passage.sentences.iter().flat_map(|s| &s.entities) {
            counts[EntityType::ALL.iter().position(|&t| t == m.etype).unwrap()] += 1;
        }
    }
    let n: usize = counts.iter().sum();
    assert!(n >= 3000, "only {n} draws");
    let expected = n as f64 / 3.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 2 degrees of freedom, p = 0.01: -2 ln 0.01.
    assert!(chi2 < 9.2103, "chi2 {chi2} for {counts:?}");
}

#[test]
fn mixture_counts_match_examples() {
    assert_eq!(shortcut_count(0.9, 6306), 5675);
    assert_eq!(shortcut_count(0.0, 6306), 0);
    assert_eq!(shortcut_count(0.5, 5), 3);
    let entries: Vec<Entry> = corpus(30, 8, 2)
        .iter()
        .map(|i| build_qwm_entry(i, &template(), 0).accepted().unwrap())
        .collect();
    let spec = MixtureSpec { proportion: 0.0, seed: 3, n_entries: entries.len() };
    let mix = sample_mixture(&entries, &spec).unwrap();
    assert!(mix.iter().all(|i| i.version == Version::Challenging));
    let spec = MixtureSpec { proportion: 0.7, ..spec };
    let a = sample_mixture(&entries, &spec).unwrap();
    assert_eq!(a.iter().filter(|i| i.version == Version::Shortcut).count(), 21);
    assert_eq!(a, sample_mixture(&entries, &spec).unwrap());
    let mut ids: Vec<&str> = a.iter().map(|i| i.id()).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), entries.len());
    let short = MixtureSpec { n_entries: 5, ..spec };
    assert!(matches!(sample_mixture(&entries, &short), Err(ConstructError::MixtureSize { .. })));
}

#[test]
fn entry_files_round_trip() {
    let entries: Vec<Entry> = corpus(5, 9, 2)
        .iter()
        .map(|i| build_spm_entry(i, &template(), 1).accepted().unwrap())
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("entries.jsonl");
    write_entries(&path, &entries).unwrap();
    assert_eq!(read_entries(&path).unwrap(), entries);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mixture_count_is_exact(k in 0usize..10, n in 0usize..20_000) {
        // Integer form of round-half-up(k/10 * n).
        prop_assert_eq!(shortcut_count(k as f64 / 10.0, n), (k * n + 5) / 10);
    }

    #[test]
    fn shuffle_preserves_sentences_and_answers(seed in any::<u64>(), gen_seed in 0u64..1000) {
        let inst = corpus(1, gen_seed, 2).remove(0);
        let shuffled = shuffle_instance(&inst, seed);
        shuffled.validate().unwrap();
        prop_assert_eq!(shuffled.answer_text(), inst.answer_text());
        let mut a: Vec<Vec<String>> = inst.passage.sentences.iter().map(|s| s.tokens.iter().map(|t| t.surface.clone()).collect()).collect();
        let mut b: Vec<Vec<String>> = shuffled.passage.sentences.iter().map(|s| s.tokens.iter().map(|t| t.surface.clone()).collect()).collect();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
        prop_assert_eq!(shuffle_instance(&inst, seed), shuffled);
    }

    #[test]
    fn qwm_shortcut_keeps_only_answer_typed_mentions(seed in 0u64..500) {
        for inst in corpus(3, seed, 3) {
            let entry = build_qwm_entry(&inst, &template(), 0).accepted().unwrap();
            let etype = qword_type(&entry.shortcut.question).unwrap();
            let gold: Vec<usize> = entry.shortcut.answers.iter().map(|a| a.sentence_idx).collect();
            for i in typed_sentences(&entry.shortcut.passage, etype) {
                prop_assert!(gold.contains(&i));
            }
        }
    }
}
