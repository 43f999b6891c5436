use std::collections::BTreeMap;

use crate::textproc::tokenize;

fn match_case(original: &str, replacement: &str) -> String {
    if original.chars().next().is_some_and(char::is_uppercase) {
        let mut chars = replacement.chars();
        match chars.next() {
            Some(c) => c.to_uppercase().chain(chars).collect(),
            None => String::new(),
        }
    } else {
        replacement.to_string()
    }
}

/// Replaces every non-stop word found in `lexicon` unless it lies inside an
/// occurrence of `protected`.
pub fn lexical_paraphrase(lexicon: &BTreeMap<String, String>, text: &str, protected: Option<&str>) -> String {
    let guarded: Vec<(usize, usize)> = match protected {
        Some(a) if !a.is_empty() => text.match_indices(a).map(|(i, m)| (i, i + m.len())).collect(),
        _ => Vec::new(),
    };
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for tok in tokenize(text) {
        if tok.is_stop {
            continue;
        }
        let (s, e) = (tok.char_span.start, tok.char_span.end);
        if guarded.iter().any(|&(gs, ge)| s < ge && gs < e) {
            continue;
        }
        if let Some(rep) = lexicon.get(&tok.surface) {
            out.push_str(&text[cursor..s]);
            out.push_str(&match_case(&text[s..e], rep));
            cursor = e;
        }
    }
    out.push_str(&text[cursor..]);
    out
}
