use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ConstructError;
use crate::corpus::{Answer, EntityPools, Entry, Instance, Passage, SentenceDraft, Span};
use crate::textproc::EntityType;

/// Replacement type policy.
#[derive(Clone, Copy)]
enum Mode {
    SameType,
    UniformType,
}

struct Substituter<'a> {
    pools: &'a EntityPools,
    rng: ChaCha8Rng,
    mode: Mode,
    /// Original surface → (replacement, its type).
    chosen: BTreeMap<String, (String, EntityType)>,
    used: BTreeSet<String>,
}

impl Substituter<'_> {
    fn replacement(&mut self, surface: &str, etype: EntityType) -> Result<(String, EntityType), ConstructError> {
        if let Some(r) = self.chosen.get(surface) {
            return Ok(r.clone());
        }
        let rtype = match self.mode {
            Mode::SameType => etype,
            Mode::UniformType => EntityType::ALL[self.rng.gen_range(0..EntityType::ALL.len())],
        };
        let pool = self.pools.get(rtype);
        if pool.is_empty() {
            return Err(ConstructError::EmptyPool(rtype));
        }
        let fresh: Vec<&String> = pool.iter().filter(|c| !self.used.contains(*c)).collect();
        let pick = if fresh.is_empty() {
            pool[self.rng.gen_range(0..pool.len())].clone()
        } else {
            fresh[self.rng.gen_range(0..fresh.len())].clone()
        };
        self.used.insert(pick.clone());
        self.chosen.insert(surface.to_string(), (pick.clone(), rtype));
        Ok((pick, rtype))
    }
}

/// One text edit inside a sentence, in sentence-relative bytes.
struct Edit {
    span: Span,
    text: String,
}

/// Maps a sentence-relative boundary through the sorted, disjoint edits.
/// Boundaries never fall strictly inside an edit.
fn shift(offset: usize, edits: &[Edit]) -> usize {
    let delta: isize = edits
        .iter()
        .filter(|e| e.span.end <= offset)
        .map(|e| e.text.len() as isize - e.span.len() as isize)
        .sum();
    (offset as isize + delta) as usize
}

fn substitute_instance(instance: &Instance, sub: &mut Substituter<'_>) -> Result<Instance, ConstructError> {
    let passage = &instance.passage;
    let mut drafts: Vec<SentenceDraft> = passage.drafts();
    let mut sentence_edits: Vec<Vec<Edit>> = Vec::with_capacity(drafts.len());

    for (si, draft) in drafts.iter_mut().enumerate() {
        let base = passage.sentences[si].char_span.start;
        let local_answers: Vec<Span> = instance
            .answers
            .iter()
            .filter(|a| a.sentence_idx == si)
            .map(|a| Span::new(a.char_start - base, a.char_start - base + a.text.len()))
            .collect();
        let mut edits = Vec::new();
        let mut kept = Vec::new();
        for &(span, etype) in &draft.entities {
            // Only mentions disjoint from every answer, or wholly inside one,
            // can be swapped without cutting an answer apart.
            let unsafe_cut = local_answers
                .iter()
                .any(|a| span.start < a.end && a.start < span.end && !a.contains(span));
            if unsafe_cut {
                kept.push((span, etype));
                continue;
            }
            let (text, rtype) = sub.replacement(&draft.text[span.start..span.end], etype)?;
            edits.push((Edit { span, text }, rtype));
        }
        edits.sort_by_key(|(e, _)| e.span.start);

        let mut text = String::with_capacity(draft.text.len());
        let mut entities = Vec::with_capacity(draft.entities.len());
        let mut cursor = 0;
        for (e, rtype) in &edits {
            text.push_str(&draft.text[cursor..e.span.start]);
            let at = text.len();
            text.push_str(&e.text);
            entities.push((Span::new(at, text.len()), *rtype));
            cursor = e.span.end;
        }
        text.push_str(&draft.text[cursor..]);
        let edits: Vec<Edit> = edits.into_iter().map(|(e, _)| e).collect();
        for (span, etype) in kept {
            entities.push((Span::new(shift(span.start, &edits), shift(span.end, &edits)), etype));
        }
        entities.sort_by_key(|(s, _)| s.start);
        draft.text = text;
        draft.entities = entities;
        sentence_edits.push(edits);
    }

    let rebuilt = Passage::from_drafts(passage.id.clone(), &drafts);
    let mut answers = Vec::with_capacity(instance.answers.len());
    for a in &instance.answers {
        let si = a.sentence_idx;
        let old_base = passage.sentences[si].char_span.start;
        let new_base = rebuilt.sentences[si].char_span.start;
        let edits = &sentence_edits[si];
        let start = new_base + shift(a.char_start - old_base, edits);
        let end = new_base + shift(a.char_start - old_base + a.text.len(), edits);
        answers.push(Answer { text: rebuilt.text[start..end].to_string(), char_start: start, sentence_idx: si });
    }
    Ok(Instance { passage: rebuilt, answers, ..instance.clone() })
}

/// Entity-substituted copy of a QWM entry. Both versions start from the
/// shortcut passage (paraphrased question, distractor sentences dropped); the
/// challenging copy then gets entities of a uniformly drawn type, the shortcut
/// copy entities of the same type. Replacement is consistent per surface within
/// a passage, and the gold answer is substituted along with everything else.
pub fn substitute_entities(entry: &Entry, pools: &EntityPools, seed: u64) -> Result<Entry, ConstructError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut substituter = |mode| Substituter {
        pools,
        rng: ChaCha8Rng::seed_from_u64(rng.gen()),
        mode,
        chosen: BTreeMap::new(),
        used: BTreeSet::new(),
    };
    let shortcut = substitute_instance(&entry.shortcut, &mut substituter(Mode::SameType))?;
    let mut base = entry.shortcut.clone();
    base.version = entry.challenging.version;
    base.skill = entry.challenging.skill;
    base.passage.id = format!("{}-u", entry.challenging.passage.id);
    let challenging = substitute_instance(&base, &mut substituter(Mode::UniformType))?;
    Ok(Entry { shortcut, challenging, ..entry.clone() })
}
