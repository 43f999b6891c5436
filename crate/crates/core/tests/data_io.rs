//! File and network boundaries: SQuAD round trips, the paired-entry format,
//! and the back-translation client against a local mock endpoint.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;

use shortcut_lab::construct::{construct_all, read_entries, write_entries, Recipe};
use shortcut_lab::corpus::{builtin_families, export_dataset, generate_corpus, load_squad, EntityPools, GenSpec, Version};
use shortcut_lab::paraphrase::{HttpTranslator, ParaphraseError, Paraphraser, ParaphraserSpec, Translator};

fn entries(n: usize) -> Vec<shortcut_lab::corpus::Entry> {
    let corpus = generate_corpus(&GenSpec { n_entries: n, seed: 9, ..GenSpec::default() }).unwrap();
    let p = Paraphraser::new(&ParaphraserSpec::template(builtin_families(24))).unwrap();
    construct_all(&corpus, Recipe::Spm, &p, &EntityPools::embedded(), 9).unwrap().0
}

#[test]
fn squad_export_round_trips_each_version() {
    let dir = tempfile::tempdir().unwrap();
    let entries = entries(20);
    for v in [Version::Shortcut, Version::Challenging] {
        let instances: Vec<_> = entries.iter().map(|e| e.version(v).clone()).collect();
        let path = dir.path().join(format!("{v}.json"));
        export_dataset(&instances, &path).unwrap();
        let back = load_squad(&path).unwrap();
        assert_eq!(back.len(), instances.len());
        for (a, b) in instances.iter().zip(&back) {
            assert_eq!(a.passage.text, b.passage.text);
            assert_eq!(a.question.text, b.question.text);
            let spans = |i: &shortcut_lab::corpus::Instance| -> Vec<(String, usize)> {
                i.answers.iter().map(|x| (x.text.clone(), x.char_start)).collect()
            };
            assert_eq!(spans(a), spans(b));
        }
    }
}

#[test]
fn squad_offsets_count_code_points() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("accents.json");
    // "Lisa" starts at code point 23 but byte 24 (é is two bytes).
    let json = r#"{"version":"1.1","data":[{"title":"t","paragraphs":[{"context":"Beyoncé sang in Paris. Lisa sang in Rome.",
        "qas":[{"id":"q","question":"Who sang in Rome?","answers":[{"text":"Lisa","answer_start":23}]}]}]}]}"#;
    std::fs::write(&path, json).unwrap();
    let inst = load_squad(&path).unwrap().remove(0);
    assert_eq!(inst.answers[0].char_start, 24);
    assert_eq!(&inst.passage.text[24..28], "Lisa");
    let out = dir.path().join("out.json");
    export_dataset(&[inst], &out).unwrap();
    assert!(std::fs::read_to_string(&out).unwrap().contains("\"answer_start\": 23"));
}

#[test]
fn paired_entry_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("entries.jsonl");
    let entries = entries(15);
    write_entries(&path, &entries).unwrap();
    assert_eq!(read_entries(&path).unwrap(), entries);
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 15);
}

/// One request as seen by the mock endpoint.
#[derive(Debug, Clone)]
struct Seen {
    auth: Option<String>,
    body: serde_json::Value,
}

fn read_request(stream: &mut TcpStream) -> Seen {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let (mut len, mut auth) = (0usize, None);
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        let (name, value) = line.split_once(':').unwrap_or((line, ""));
        match name.to_ascii_lowercase().as_str() {
            "content-length" => len = value.trim().parse().unwrap(),
            "authorization" => auth = Some(value.trim().to_string()),
            _ => {}
        }
    }
    let mut body = vec![0; len];
    reader.read_exact(&mut body).unwrap();
    Seen { auth, body: serde_json::from_slice(&body).unwrap() }
}

fn respond(stream: &mut TcpStream, status: &str, body: &str) {
    let msg = format!(
        "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    stream.write_all(msg.as_bytes()).unwrap();
}

/// Serves `n` requests with `reply`, recording what it saw.
fn mock(n: usize, reply: fn(&Seen) -> (&'static str, String)) -> (String, Arc<Mutex<Vec<Seen>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/translate", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for stream in listener.incoming().take(n) {
            let mut stream = stream.unwrap();
            let req = read_request(&mut stream);
            let (status, body) = reply(&req);
            log.lock().unwrap().push(req);
            respond(&mut stream, status, &body);
        }
    });
    (url, seen)
}

/// Tags text on the way out and rewrites one verb on the way home.
fn pivot(req: &Seen) -> (&'static str, String) {
    let text = req.body["text"].as_str().unwrap();
    let out = match req.body["target_lang"].as_str().unwrap() {
        "en" => text.trim_start_matches("[de] ").replace("founded", "established"),
        lang => format!("[{lang}] {text}"),
    };
    ("200 OK", serde_json::json!({ "text": out }).to_string())
}

#[test]
fn backtranslation_walks_the_pivot_chain() {
    let (url, seen) = mock(2, pivot);
    let spec = ParaphraserSpec::backtranslation(&url, &["en", "de", "en"], None);
    let p = Paraphraser::new(&spec).unwrap();
    let r = p.paraphrase("Lisa founded the orchestra.", Some("Lisa")).unwrap();
    assert_eq!(r.paraphrased, "Lisa established the orchestra.");
    assert!(r.answer_preserved);
    let seen = seen.lock().unwrap();
    let hops: Vec<(&str, &str)> =
        seen.iter().map(|s| (s.body["source_lang"].as_str().unwrap(), s.body["target_lang"].as_str().unwrap())).collect();
    assert_eq!(hops, vec![("en", "de"), ("de", "en")]);
    assert!(seen.iter().all(|s| s.auth.is_none()));
}

#[test]
fn credential_is_sent_as_bearer_token() {
    let (url, seen) = mock(1, pivot);
    let t = HttpTranslator::new(&url, Some("s3cret".into()), false);
    assert_eq!(t.translate("en", "de", "hi").unwrap(), "[de] hi");
    assert_eq!(seen.lock().unwrap()[0].auth.as_deref(), Some("Bearer s3cret"));
}

#[test]
fn missing_credential_variable_is_reported() {
    let err = HttpTranslator::from_env("http://127.0.0.1:9", Some("SHORTCUT_LAB_TEST_UNSET_VAR"), false).err().unwrap();
    assert!(matches!(err, ParaphraseError::CredentialMissing(v) if v == "SHORTCUT_LAB_TEST_UNSET_VAR"));
}

#[test]
fn server_errors_are_retried_then_reported() {
    let (url, seen) = mock(HttpTranslator::RETRIES as usize, |_| ("503 Service Unavailable", "{}".into()));
    let err = HttpTranslator::new(&url, None, false).translate("en", "de", "hi").unwrap_err();
    assert!(matches!(err, ParaphraseError::NetworkUnavailable(_)), "{err:?}");
    assert_eq!(seen.lock().unwrap().len(), HttpTranslator::RETRIES as usize);
}

#[test]
fn client_errors_and_bad_bodies_are_not_retried() {
    let (url, _) = mock(1, |_| ("400 Bad Request", "{\"error\":\"no\"}".into()));
    let err = HttpTranslator::new(&url, None, false).translate("en", "de", "hi").unwrap_err();
    assert!(matches!(err, ParaphraseError::BadResponse(_)), "{err:?}");
    let (url, _) = mock(1, |_| ("200 OK", "not json".into()));
    let err = HttpTranslator::new(&url, None, false).translate("en", "de", "hi").unwrap_err();
    assert!(matches!(err, ParaphraseError::BadResponse(_)), "{err:?}");
}

#[test]
fn closed_port_is_network_unavailable() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let t = HttpTranslator::new(&format!("http://127.0.0.1:{port}/translate"), None, false);
    assert!(matches!(t.translate("en", "de", "hi"), Err(ParaphraseError::NetworkUnavailable(_))));
}
