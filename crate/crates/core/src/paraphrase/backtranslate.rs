use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::ParaphraseError;

/// One translation hop: text in, text out.
pub trait Translator: Send + Sync {
    fn translate(&self, source_lang: &str, target_lang: &str, text: &str) -> Result<String, ParaphraseError>;
}

#[derive(Serialize)]
struct TranslateRequest<'a> {
    source_lang: &'a str,
    target_lang: &'a str,
    text: &'a str,
}

#[derive(Deserialize)]
struct TranslateResponse {
    #[serde(alias = "translation", alias = "translated_text")]
    text: String,
}

/// JSON-over-HTTP translation client.
///
/// Each hop is a `POST` of `{"source_lang", "target_lang", "text"}` answered by
/// `{"text"}`. Transport failures are retried up to `retries` times.
pub struct HttpTranslator {
    endpoint: String,
    credential: Option<String>,
    agent: ureq::Agent,
    retries: u32,
    // Held for the duration of a request unless the endpoint is rate-unlimited.
    gate: Option<Mutex<()>>,
}

impl HttpTranslator {
    pub const RETRIES: u32 = 3;
    pub const HOP_TIMEOUT: Duration = Duration::from_secs(10);

    pub fn new(endpoint: &str, credential: Option<String>, rate_unlimited: bool) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Self::HOP_TIMEOUT))
            .http_status_as_error(false)
            .build()
            .into();
        HttpTranslator {
            endpoint: endpoint.to_string(),
            credential,
            agent,
            retries: Self::RETRIES,
            gate: (!rate_unlimited).then(|| Mutex::new(())),
        }
    }

    /// Reads the credential from the environment variable `credential_env`.
    pub fn from_env(endpoint: &str, credential_env: Option<&str>, rate_unlimited: bool) -> Result<Self, ParaphraseError> {
        let credential = match credential_env {
            Some(var) => Some(std::env::var(var).map_err(|_| ParaphraseError::CredentialMissing(var.to_string()))?),
            None => None,
        };
        Ok(Self::new(endpoint, credential, rate_unlimited))
    }

    fn attempt(&self, body: &str) -> Result<Result<String, ParaphraseError>, String> {
        let mut req = self.agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(token) = &self.credential {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req.send(body).map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        if status >= 500 {
            return Err(format!("status {status}"));
        }
        if status >= 400 {
            return Ok(Err(ParaphraseError::BadResponse(format!("status {status}: {text}"))));
        }
        Ok(serde_json::from_str::<TranslateResponse>(&text)
            .map(|r| r.text)
            .map_err(|e| ParaphraseError::BadResponse(e.to_string())))
    }
}

impl Translator for HttpTranslator {
    fn translate(&self, source_lang: &str, target_lang: &str, text: &str) -> Result<String, ParaphraseError> {
        let body = serde_json::to_string(&TranslateRequest { source_lang, target_lang, text })
            .map_err(|e| ParaphraseError::BadResponse(e.to_string()))?;
        let _guard = self.gate.as_ref().map(|g| g.lock().unwrap_or_else(|p| p.into_inner()));
        let mut last = String::new();
        for attempt in 0..self.retries {
            match self.attempt(&body) {
                Ok(result) => return result,
                Err(e) => last = e,
            }
            if attempt + 1 < self.retries {
                thread::sleep(Duration::from_millis(50 << attempt));
            }
        }
        Err(ParaphraseError::NetworkUnavailable(format!("{}: {last}", self.endpoint)))
    }
}
