//! Fact templates used by the generator and the template paraphraser.
//!
//! A family is one fact with several surface variants. Variant 0 is the
//! canonical wording placed in passages; the others are paraphrases that
//! share no content words with it. Each variant pairs a sentence pattern
//! holding one answer slot with the question that asks for that slot.

use serde::{Deserialize, Serialize};

use crate::textproc::EntityType;

/// Placeholder for the answer slot in sentence patterns.
pub const SLOT: &str = "{X}";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateVariant {
    /// Sentence pattern containing exactly one [`SLOT`].
    pub sentence: String,
    /// Question asking for the slot.
    pub question: String,
}

impl TemplateVariant {
    pub fn render(&self, filler: &str) -> String {
        self.sentence.replacen(SLOT, filler, 1)
    }

    /// Byte offset of the slot in the rendered sentence.
    pub fn slot_offset(&self) -> usize {
        self.sentence.find(SLOT).unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateFamily {
    pub id: String,
    pub etype: EntityType,
    pub variants: Vec<TemplateVariant>,
}

impl TemplateFamily {
    pub fn validate(&self) -> Result<(), String> {
        if self.variants.len() < 2 {
            return Err(format!("family {} needs at least two variants", self.id));
        }
        for v in &self.variants {
            if v.sentence.matches(SLOT).count() != 1 {
                return Err(format!("family {}: every variant needs exactly one slot", self.id));
            }
        }
        Ok(())
    }
}

const ADJECTIVES: [(&str, &str); 24] = [
    ("acclaimed", "celebrated"),
    ("ancient", "antiquated"),
    ("famous", "renowned"),
    ("powerful", "mighty"),
    ("wealthy", "affluent"),
    ("brilliant", "gifted"),
    ("modest", "humble"),
    ("fierce", "ferocious"),
    ("quiet", "silent"),
    ("grand", "majestic"),
    ("tiny", "minuscule"),
    ("rapid", "swift"),
    ("bold", "daring"),
    ("gentle", "tender"),
    ("strange", "peculiar"),
    ("secret", "covert"),
    ("vast", "immense"),
    ("bitter", "harsh"),
    ("clever", "shrewd"),
    ("loyal", "faithful"),
    ("rural", "pastoral"),
    ("royal", "regal"),
    ("crucial", "vital"),
    ("sacred", "holy"),
];

const PERSON_NOUNS: [(&str, &str); 12] = [
    ("singer", "vocalist"),
    ("painter", "artist"),
    ("general", "commander"),
    ("poet", "bard"),
    ("physician", "doctor"),
    ("merchant", "trader"),
    ("architect", "designer"),
    ("sailor", "mariner"),
    ("judge", "magistrate"),
    ("scholar", "academic"),
    ("inventor", "innovator"),
    ("monarch", "sovereign"),
];

const TIME_NOUNS: [(&str, &str); 12] = [
    ("treaty", "accord"),
    ("festival", "carnival"),
    ("election", "ballot"),
    ("rebellion", "uprising"),
    ("expedition", "voyage"),
    ("exhibition", "showcase"),
    ("ceremony", "ritual"),
    ("merger", "amalgamation"),
    ("census", "survey"),
    ("tournament", "championship"),
    ("summit", "conference"),
    ("flood", "deluge"),
];

const LOCATION_NOUNS: [(&str, &str); 12] = [
    ("cathedral", "basilica"),
    ("harbor", "port"),
    ("fortress", "citadel"),
    ("museum", "gallery"),
    ("market", "bazaar"),
    ("university", "college"),
    ("palace", "residence"),
    ("stadium", "arena"),
    ("library", "archive"),
    ("factory", "plant"),
    ("theater", "playhouse"),
    ("garden", "park"),
];

const VERBS: [(&str, &str); 24] = [
    ("recorded", "taped"),
    ("founded", "established"),
    ("defeated", "vanquished"),
    ("designed", "devised"),
    ("inspired", "motivated"),
    ("wrote", "penned"),
    ("built", "constructed"),
    ("funded", "financed"),
    ("launched", "initiated"),
    ("praised", "commended"),
    ("attracted", "drew"),
    ("destroyed", "demolished"),
    ("hosted", "welcomed"),
    ("ended", "concluded"),
    ("united", "joined"),
    ("protected", "guarded"),
    ("displayed", "exhibited"),
    ("changed", "altered"),
    ("shaped", "molded"),
    ("doubled", "multiplied"),
    ("delayed", "postponed"),
    ("banned", "prohibited"),
    ("rescued", "saved"),
    ("taught", "instructed"),
];

const OBJECTS: [(&str, &str); 24] = [
    ("anthems", "hymns"),
    ("armies", "troops"),
    ("ships", "vessels"),
    ("pilgrims", "worshippers"),
    ("crowds", "throngs"),
    ("tourists", "travelers"),
    ("borders", "frontiers"),
    ("laws", "statutes"),
    ("taxes", "levies"),
    ("bridges", "viaducts"),
    ("villages", "hamlets"),
    ("students", "pupils"),
    ("paintings", "canvases"),
    ("engines", "motors"),
    ("farms", "ranches"),
    ("rivers", "streams"),
    ("wars", "conflicts"),
    ("songs", "tunes"),
    ("poems", "verses"),
    ("machines", "devices"),
    ("prisoners", "captives"),
    ("children", "youngsters"),
    ("rebels", "insurgents"),
    ("coins", "currency"),
];

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// The shipped bank: `per_type` families for each entity type (at most 48).
///
/// Sentences read like headlines, "Acclaimed singer {X} recorded anthems.",
/// so every content word sits within two tokens of the slot.
pub fn builtin_families(per_type: usize) -> Vec<TemplateFamily> {
    let per_type = per_type.min(48);
    let mut out = Vec::with_capacity(per_type * 3);
    for (t, etype) in EntityType::ALL.into_iter().enumerate() {
        let (nouns, wh, copula) = match etype {
            EntityType::Person => (&PERSON_NOUNS, "Who", "was"),
            EntityType::Time => (&TIME_NOUNS, "When", "was"),
            EntityType::Location => (&LOCATION_NOUNS, "Where", "is"),
        };
        for i in 0..per_type {
            let round = i / nouns.len();
            let noun = nouns[i % nouns.len()];
            let adj = ADJECTIVES[(i * 5 + 3 * t + round) % ADJECTIVES.len()];
            let verb = VERBS[(i * 7 + 5 * t + 3 * round) % VERBS.len()];
            let obj = OBJECTS[(i * 11 + 7 * t + 5 * round) % OBJECTS.len()];
            let variant = |pick: fn((&'static str, &'static str)) -> &'static str| TemplateVariant {
                sentence: format!("{} {} {SLOT} {} {}.", capitalize(pick(adj)), pick(noun), pick(verb), pick(obj)),
                question: format!("{wh} {copula} the {} {} that {} {}?", pick(adj), pick(noun), pick(verb), pick(obj)),
            };
            out.push(TemplateFamily {
                id: format!("{}-{i:02}", etype.to_string().to_lowercase()),
                etype,
                variants: vec![variant(|p| p.0), variant(|p| p.1)],
            });
        }
    }
    out
}
