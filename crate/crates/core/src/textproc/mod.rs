//! Text processing: tokenization, sentence splitting, stop words, the
//! non-stop-word overlap rate, and question-word typing.
//!
//! Everything here is a pure function over borrowed text. Resources (stop
//! words, abbreviations, gazetteers) are embedded at compile time and can be
//! replaced with files in the same one-entry-per-line format.

mod ner;

pub use ner::{embedded_locations, embedded_persons, EntityMention, EntityType, Gazetteer, Recognizer, MONTHS};

use std::collections::HashSet;

use once_cell::sync::Lazy;

use crate::corpus::{QWord, Question, Sentence, Span, Token};

const STOPWORDS_TXT: &str = include_str!("../../resources/stopwords.txt");
const ABBREVIATIONS_TXT: &str = include_str!("../../resources/abbreviations.txt");

/// Parses a resource list: one entry per line, `#` starts a comment, blank
/// lines ignored.
pub fn parse_list(text: &str) -> Vec<String> {
    text.lines()
        .map(|line| match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        })
        .map(str::trim)
        .filter(|line| !line.is_empty())
        .map(str::to_string)
        .collect()
}

static STOPWORDS: Lazy<HashSet<String>> = Lazy::new(|| {
    parse_list(STOPWORDS_TXT)
        .into_iter()
        .map(|w| w.to_lowercase())
        .collect()
});

static ABBREVIATIONS: Lazy<HashSet<String>> = Lazy::new(|| {
    parse_list(ABBREVIATIONS_TXT)
        .into_iter()
        .map(|w| w.to_lowercase())
        .collect()
});

/// True when `word` (already lowercased) is in the embedded stop-word list.
pub fn is_stopword(word: &str) -> bool {
    STOPWORDS.contains(word)
}

/// A token made only of punctuation / symbol characters.
pub fn is_punct(surface: &str) -> bool {
    !surface.is_empty() && surface.chars().all(|c| !c.is_alphanumeric())
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Splits `text` into lowercased tokens.
///
/// Runs of alphanumeric characters form words; every other non-whitespace
/// character is a token of its own. Punctuation tokens are flagged as stop
/// tokens so they never count as content.
pub fn tokenize(text: &str) -> Vec<Token> {
    tokenize_at(text, 0)
}

/// Like [`tokenize`], with every span shifted by `offset` bytes.
pub fn tokenize_at(text: &str, offset: usize) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut word_start: Option<usize> = None;
    let flush = |tokens: &mut Vec<Token>, start: usize, end: usize| {
        let surface = text[start..end].to_lowercase();
        let is_stop = is_stopword(&surface);
        tokens.push(Token {
            surface,
            char_span: Span::new(start + offset, end + offset),
            is_stop,
        });
    };
    for (i, c) in text.char_indices() {
        if is_word_char(c) {
            if word_start.is_none() {
                word_start = Some(i);
            }
            continue;
        }
        if let Some(start) = word_start.take() {
            flush(&mut tokens, start, i);
        }
        if !c.is_whitespace() {
            let end = i + c.len_utf8();
            tokens.push(Token {
                surface: text[i..end].to_lowercase(),
                char_span: Span::new(i + offset, end + offset),
                is_stop: true,
            });
        }
    }
    if let Some(start) = word_start {
        flush(&mut tokens, start, text.len());
    }
    tokens
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

/// The word immediately before byte `end` (the terminator position),
/// including internal periods so that "e.g" and "U.S" are recognised.
fn word_before(text: &str, end: usize) -> &str {
    let head = &text[..end];
    let start = head
        .char_indices()
        .rev()
        .find(|&(_, c)| !(c.is_alphanumeric() || c == '.'))
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(0);
    &head[start..]
}

fn is_abbreviation(word: &str) -> bool {
    if word.is_empty() {
        return false;
    }
    let lower = word.to_lowercase();
    if ABBREVIATIONS.contains(&lower) {
        return true;
    }
    // Single-letter initials such as "J." in "J. Smith".
    let mut chars = word.chars();
    matches!((chars.next(), chars.next()), (Some(c), None) if c.is_uppercase())
}

/// Byte spans of the sentences in `text`, trimmed of surrounding whitespace.
///
/// A sentence ends at `.`, `!` or `?` (plus any closing quotes or brackets)
/// when followed by whitespace and an uppercase letter, or by the end of the
/// text. A period after a known abbreviation or a single capital initial
/// does not end a sentence.
pub fn sentence_spans(text: &str) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut idx = 0;
    while idx < chars.len() {
        let (pos, c) = chars[idx];
        if start.is_none() {
            if c.is_whitespace() {
                idx += 1;
                continue;
            }
            start = Some(pos);
        }
        if is_terminator(c) {
            let mut end_idx = idx + 1;
            while end_idx < chars.len() && (is_terminator(chars[end_idx].1) || is_closer(chars[end_idx].1)) {
                end_idx += 1;
            }
            let end = chars.get(end_idx).map(|&(p, _)| p).unwrap_or(text.len());
            let mut next = end_idx;
            while next < chars.len() && chars[next].1.is_whitespace() {
                next += 1;
            }
            let boundary = if next == chars.len() {
                true
            } else {
                next > end_idx && chars[next].1.is_uppercase()
            };
            let guarded = c == '.' && is_abbreviation(word_before(text, pos)) && next < chars.len();
            if boundary && !guarded {
                spans.push(Span::new(start.take().unwrap_or(pos), end));
                idx = end_idx;
                continue;
            }
        }
        idx += 1;
    }
    if let Some(s) = start {
        let end = text.trim_end().len();
        if end > s {
            spans.push(Span::new(s, end));
        }
    }
    spans
}

/// Splits `text` into tokenized sentences (no entity annotations).
pub fn split_sentences(text: &str) -> Vec<Sentence> {
    sentence_spans(text)
        .into_iter()
        .map(|span| Sentence {
            tokens: tokenize_at(&text[span.start..span.end], span.start),
            char_span: span,
            entities: Vec::new(),
            gold_entities: false,
        })
        .collect()
}

fn content_set(tokens: &[Token]) -> HashSet<&str> {
    tokens
        .iter()
        .filter(|t| !t.is_stop)
        .map(|t| t.surface.as_str())
        .collect()
}

/// Fraction of the question's distinct non-stop words that also occur in
/// `s_tokens`. Returns 0 when the question has no non-stop words.
pub fn nonstop_overlap(q_tokens: &[Token], s_tokens: &[Token]) -> f64 {
    let q = content_set(q_tokens);
    if q.is_empty() {
        return 0.0;
    }
    let s = content_set(s_tokens);
    let shared = q.iter().filter(|w| s.contains(*w)).count();
    shared as f64 / q.len() as f64
}

/// Convenience form of [`nonstop_overlap`] over raw strings.
pub fn text_overlap(question: &str, sentence: &str) -> f64 {
    nonstop_overlap(&tokenize(question), &tokenize(sentence))
}

/// Classifies the leading wh-word of a question.
pub fn classify_qword(tokens: &[Token]) -> QWord {
    match tokens.first().map(|t| t.surface.as_str()) {
        Some("who") => QWord::Who,
        Some("when") => QWord::When,
        Some("where") => QWord::Where,
        _ => QWord::Other,
    }
}

/// The entity type a question word asks for, if any.
pub fn qword_type(question: &Question) -> Option<EntityType> {
    match question.qword {
        QWord::Who => Some(EntityType::Person),
        QWord::When => Some(EntityType::Time),
        QWord::Where => Some(EntityType::Location),
        QWord::Other => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn tokenize_splits_punctuation() {
        assert_eq!(surfaces("September 1876."), vec!["september", "1876", "."]);
        assert!(tokenize("").is_empty());
        assert_eq!(surfaces("master's"), vec!["master", "'", "s"]);
    }

    #[test]
    fn tokenize_marks_stop_words() {
        let toks = tokenize("When did Luther graduate?");
        let flags: Vec<(&str, bool)> = toks.iter().map(|t| (t.surface.as_str(), t.is_stop)).collect();
        assert_eq!(
            flags,
            vec![("when", true), ("did", true), ("luther", false), ("graduate", false), ("?", true)]
        );
    }

    #[test]
    fn token_spans_index_source() {
        let text = "Palácio da Alvorada, Brasília!";
        for t in tokenize(text) {
            assert!(t.char_span.start < t.char_span.end);
            assert_eq!(text[t.char_span.start..t.char_span.end].to_lowercase(), t.surface);
        }
    }

    #[test]
    fn split_simple_sentences() {
        assert_eq!(split_sentences("A b. C d.").len(), 2);
        assert_eq!(split_sentences("no terminator here").len(), 1);
        assert!(split_sentences("   ").is_empty());
    }

    #[test]
    fn split_hand_traced_spans() {
        // "He was born in 1501." occupies bytes 0..20; "He died." 21..29.
        let spans = sentence_spans("He was born in 1501. He died.");
        assert_eq!(spans, vec![Span::new(0, 20), Span::new(21, 29)]);
    }

    #[test]
    fn split_respects_abbreviations_and_initials() {
        let text = "Dr. Smith met J. Watson in St. Louis. They talked.";
        let spans = sentence_spans(text);
        assert_eq!(spans.len(), 2);
        assert_eq!(&text[spans[0].start..spans[0].end], "Dr. Smith met J. Watson in St. Louis.");
    }

    #[test]
    fn split_requires_capital_after_terminator() {
        assert_eq!(sentence_spans("Version 2.0 is out. it is lowercase.").len(), 1);
        assert_eq!(sentence_spans("Really? Yes! Done.").len(), 3);
    }

    #[test]
    fn overlap_examples() {
        let q6 = text_overlap(
            "Why do these defections occur?",
            "Most of these defections occur because of economic or financial factors",
        );
        assert_eq!(q6, 1.0);
        let q4 = text_overlap("When did Luther graduate?", "He received his master's degree in 1506");
        assert_eq!(q4, 0.0);
        let t = tokenize("Beyonce rated powerful musician");
        assert_eq!(nonstop_overlap(&t, &t), 1.0);
        assert_eq!(text_overlap("who is it?", "anything"), 0.0);
    }

    #[test]
    fn qword_examples() {
        let q = |s: &str| Question::new("q", s);
        assert_eq!(
            qword_type(&q("Who is rated as the most powerful female musician?")),
            Some(EntityType::Person)
        );
        assert_eq!(qword_type(&q("When did Luther graduate?")), Some(EntityType::Time));
        assert_eq!(qword_type(&q("  where is it")), Some(EntityType::Location));
        assert_eq!(qword_type(&q("Why do these defections occur?")), None);
    }

    #[test]
    fn parse_list_skips_comments() {
        assert_eq!(parse_list("# c\na\n\n b # tail\n"), vec!["a", "b"]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn words() -> impl Strategy<Value = Vec<String>> {
            prop::collection::vec(
                prop::sample::select(vec![
                    "who", "the", "musician", "rated", "powerful", "of", "lisa", "singer", "1876", "?",
                ])
                .prop_map(str::to_string),
                0..8,
            )
        }

        proptest! {
            #[test]
            fn overlap_is_in_unit_interval(a in words(), b in words()) {
                let r = text_overlap(&a.join(" "), &b.join(" "));
                prop_assert!((0.0..=1.0).contains(&r));
            }

            #[test]
            fn overlap_ignores_duplicates(a in words(), b in words()) {
                let base = text_overlap(&a.join(" "), &b.join(" "));
                let doubled_a = [a.clone(), a.clone()].concat().join(" ");
                let doubled_b = [b.clone(), b.clone()].concat().join(" ");
                prop_assert_eq!(base, text_overlap(&doubled_a, &b.join(" ")));
                prop_assert_eq!(base, text_overlap(&a.join(" "), &doubled_b));
            }

            #[test]
            fn self_overlap_is_one(a in words()) {
                let toks = tokenize(&a.join(" "));
                if toks.iter().any(|t| !t.is_stop) {
                    prop_assert_eq!(nonstop_overlap(&toks, &toks), 1.0);
                }
            }

            #[test]
            fn qword_type_matches_qword(a in words()) {
                let q = Question::new("q", &a.join(" "));
                prop_assert_eq!(qword_type(&q).is_some(), q.qword != QWord::Other);
            }

            #[test]
            fn sentence_spans_are_ordered(text in "[A-Za-z .!?]{0,60}") {
                let spans = sentence_spans(&text);
                let mut last = 0;
                for s in &spans {
                    prop_assert!(s.start >= last && s.start < s.end);
                    last = s.end;
                }
                let covered: String = spans.iter().map(|s| &text[s.start..s.end]).collect::<Vec<_>>().concat();
                let expect: String = text.chars().filter(|c| !c.is_whitespace()).collect();
                let got: String = covered.chars().filter(|c| !c.is_whitespace()).collect();
                prop_assert_eq!(got, expect);
            }
        }
    }
}
