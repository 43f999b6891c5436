//! SQuAD v1.1 reading and writing.
//!
//! SQuAD stores `answer_start` as a character (code point) index; in memory we
//! anchor answers by byte offset, converting at the file boundary.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use super::{Answer, CorpusError, Instance, Passage, Question, Version};
use crate::textproc::Recognizer;

fn malformed(file: &Path, path: &str, detail: impl Into<String>) -> CorpusError {
    CorpusError::MalformedFile { file: file.to_path_buf(), path: path.to_string(), detail: detail.into() }
}

fn field<'a>(file: &Path, obj: &'a Value, path: &str, key: &str) -> Result<&'a Value, CorpusError> {
    obj.get(key).ok_or_else(|| malformed(file, path, format!("missing key {key:?}")))
}

fn array<'a>(file: &Path, v: &'a Value, path: &str) -> Result<&'a Vec<Value>, CorpusError> {
    v.as_array().ok_or_else(|| malformed(file, path, "expected an array"))
}

fn string<'a>(file: &Path, v: &'a Value, path: &str) -> Result<&'a str, CorpusError> {
    v.as_str().ok_or_else(|| malformed(file, path, "expected a string"))
}

/// Byte offset of code point `index` in `text`, if within bounds.
fn char_to_byte(text: &str, index: usize) -> Option<usize> {
    if index == text.chars().count() {
        return Some(text.len());
    }
    text.char_indices().nth(index).map(|(b, _)| b)
}

pub(crate) fn byte_to_char(text: &str, byte: usize) -> usize {
    text[..byte].chars().count()
}

/// Parses SQuAD JSON text. `file` is only used in error messages.
pub fn parse_squad(text: &str, file: &Path, recognizer: &Recognizer) -> Result<Vec<Instance>, CorpusError> {
    let root: Value = serde_json::from_str(text).map_err(|e| malformed(file, "$", e.to_string()))?;
    let data = array(file, field(file, &root, "$", "data")?, "$.data")?;
    let mut out = Vec::new();
    for (ai, article) in data.iter().enumerate() {
        let apath = format!("$.data[{ai}]");
        let paragraphs = array(file, field(file, article, &apath, "paragraphs")?, &format!("{apath}.paragraphs"))?;
        for (pi, para) in paragraphs.iter().enumerate() {
            let ppath = format!("{apath}.paragraphs[{pi}]");
            let context = string(file, field(file, para, &ppath, "context")?, &format!("{ppath}.context"))?;
            let passage = Passage::from_text(format!("a{ai}-p{pi}"), context, recognizer);
            let qas = array(file, field(file, para, &ppath, "qas")?, &format!("{ppath}.qas"))?;
            for (qi, qa) in qas.iter().enumerate() {
                let qpath = format!("{ppath}.qas[{qi}]");
                let id = string(file, field(file, qa, &qpath, "id")?, &format!("{qpath}.id"))?;
                let qtext = string(file, field(file, qa, &qpath, "question")?, &format!("{qpath}.question"))?;
                let answers_v = array(file, field(file, qa, &qpath, "answers")?, &format!("{qpath}.answers"))?;
                if answers_v.is_empty() {
                    return Err(malformed(file, &format!("{qpath}.answers"), "no answers"));
                }
                let mut answers: Vec<Answer> = Vec::new();
                for (xi, a) in answers_v.iter().enumerate() {
                    let xpath = format!("{qpath}.answers[{xi}]");
                    let atext = string(file, field(file, a, &xpath, "text")?, &format!("{xpath}.text"))?;
                    let start = field(file, a, &xpath, "answer_start")?
                        .as_u64()
                        .ok_or_else(|| malformed(file, &format!("{xpath}.answer_start"), "expected an integer"))?;
                    let byte = char_to_byte(context, start as usize);
                    let found = byte.and_then(|b| context.get(b..b + atext.len()));
                    let (Some(byte), Some(slice)) = (byte, found) else {
                        return Err(CorpusError::OffsetMismatch {
                            question_id: id.to_string(),
                            expected: atext.to_string(),
                            found: "<out of range>".into(),
                        });
                    };
                    if slice != atext {
                        return Err(CorpusError::OffsetMismatch {
                            question_id: id.to_string(),
                            expected: atext.to_string(),
                            found: slice.to_string(),
                        });
                    }
                    let sentence_idx = passage
                        .sentence_of(byte)
                        .ok_or_else(|| malformed(file, &xpath, "answer starts between sentences"))?;
                    let answer = Answer { text: atext.to_string(), char_start: byte, sentence_idx };
                    if !answers.contains(&answer) {
                        answers.push(answer);
                    }
                }
                answers.sort_by_key(|a| (a.char_start, a.text.len()));
                out.push(Instance {
                    question: Question::new(id, qtext),
                    passage: passage.clone(),
                    answers,
                    version: Version::Challenging,
                    skill: None,
                });
            }
        }
    }
    Ok(out)
}

/// Reads a SQuAD v1.1 file, annotating entities with the embedded recognizer.
pub fn load_squad(path: impl AsRef<Path>) -> Result<Vec<Instance>, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CorpusError::IoFailure { path: path.to_path_buf(), source })?;
    parse_squad(&text, path, &Recognizer::embedded())
}

#[derive(Serialize)]
struct SquadFile<'a> {
    version: &'static str,
    data: Vec<SquadArticle<'a>>,
}

#[derive(Serialize)]
struct SquadArticle<'a> {
    title: &'a str,
    paragraphs: Vec<SquadParagraph<'a>>,
}

#[derive(Serialize)]
struct SquadParagraph<'a> {
    context: &'a str,
    qas: Vec<SquadQa<'a>>,
}

#[derive(Serialize)]
struct SquadQa<'a> {
    id: &'a str,
    question: &'a str,
    answers: Vec<SquadAnswer<'a>>,
}

#[derive(Serialize)]
struct SquadAnswer<'a> {
    text: &'a str,
    answer_start: usize,
}

/// Serializes instances as SQuAD v1.1 JSON, one paragraph per instance.
pub fn squad_json(instances: &[Instance]) -> String {
    let paragraphs = instances
        .iter()
        .map(|inst| SquadParagraph {
            context: &inst.passage.text,
            qas: vec![SquadQa {
                id: &inst.question.id,
                question: &inst.question.text,
                answers: inst
                    .answers
                    .iter()
                    .map(|a| SquadAnswer { text: &a.text, answer_start: byte_to_char(&inst.passage.text, a.char_start) })
                    .collect(),
            }],
        })
        .collect();
    let file = SquadFile { version: "1.1", data: vec![SquadArticle { title: "shortcut-lab", paragraphs }] };
    serde_json::to_string_pretty(&file).expect("SQuAD structures serialize")
}

pub fn export_dataset(instances: &[Instance], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    fs::write(path, squad_json(instances)).map_err(|source| CorpusError::IoFailure { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"version":"1.1","data":[{"title":"t","paragraphs":[
        {"context":"Beyonce was rated as the most powerful female musician. Lisa sang.",
         "qas":[{"id":"q1","question":"Who was rated as the most powerful female musician?",
                 "answers":[{"text":"Beyonce","answer_start":0},{"text":"Beyonce","answer_start":0}]}]}]}]}"#;

    #[test]
    fn minimal_file_gives_one_instance() {
        let insts = parse_squad(MINIMAL, Path::new("min.json"), &Recognizer::embedded()).unwrap();
        assert_eq!(insts.len(), 1);
        assert_eq!(insts[0].answers.len(), 1, "duplicate answers are merged");
        assert_eq!(insts[0].passage.sentences.len(), 2);
        insts[0].validate().unwrap();
    }

    #[test]
    fn wrong_offset_is_reported() {
        let bad = MINIMAL.replace("\"answer_start\":0}]", "\"answer_start\":3}]");
        let err = parse_squad(&bad, Path::new("bad.json"), &Recognizer::embedded()).unwrap_err();
        assert!(matches!(err, CorpusError::OffsetMismatch { .. }), "{err}");
    }

    #[test]
    fn structure_errors_carry_a_path() {
        let bad = MINIMAL.replace("\"question\"", "\"questoin\"");
        match parse_squad(&bad, Path::new("bad.json"), &Recognizer::embedded()).unwrap_err() {
            CorpusError::MalformedFile { path, .. } => assert_eq!(path, "$.data[0].paragraphs[0].qas[0]"),
            other => panic!("unexpected {other}"),
        }
        assert!(matches!(
            parse_squad("[1,2]", Path::new("x"), &Recognizer::embedded()),
            Err(CorpusError::MalformedFile { .. })
        ));
    }

    #[test]
    fn code_point_offsets_convert_to_bytes() {
        let text = r#"{"data":[{"paragraphs":[{"context":"Palácio da Alvorada is in Brasília.",
            "qas":[{"id":"q","question":"Where is it?","answers":[{"text":"Brasília","answer_start":26}]}]}]}]}"#;
        let insts = parse_squad(text, Path::new("x"), &Recognizer::embedded()).unwrap();
        assert_eq!(insts[0].answers[0].char_start, 27);
        let back = squad_json(&insts);
        assert!(back.contains("\"answer_start\": 26"));
    }
}
