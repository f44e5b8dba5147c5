use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{TranslateError, TranslationBackend, TranslationRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HttpMethod {
    Get,
    Post,
}

/// Generic HTTP translation endpoint.
///
/// `url`, string values inside `body` and header values may contain the
/// placeholders `{text}`, `{source}` and `{target}`; header values may also
/// contain `{api_key}`, filled from the environment variable named by
/// `api_key_env`. Placeholders in `url` are percent-encoded.
///
/// `response_path` is a dot-separated path into the JSON response
/// (`data.translations.0.translatedText`); an empty path takes the raw body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointConfig {
    pub url: String,
    pub method: HttpMethod,
    pub body: Option<Value>,
    pub headers: BTreeMap<String, String>,
    pub api_key_env: Option<String>,
    pub response_path: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub backoff_max_ms: u64,
    /// Zero disables throttling.
    pub requests_per_second: f64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            url: "http://127.0.0.1:5000/translate".to_string(),
            method: HttpMethod::Post,
            body: Some(serde_json::json!({
                "q": "{text}",
                "source": "{source}",
                "target": "{target}",
                "format": "text",
            })),
            headers: BTreeMap::new(),
            api_key_env: None,
            response_path: "translatedText".to_string(),
            timeout_secs: 30.0,
            max_retries: 5,
            backoff_base_ms: 500,
            backoff_max_ms: 30_000,
            requests_per_second: 2.0,
        }
    }
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<(), TranslateError> {
        let bad = |m: &str| Err(TranslateError::Config(m.to_string()));
        if self.url.trim().is_empty() {
            return bad("url is empty");
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return bad("timeout_secs must be positive");
        }
        if !(self.requests_per_second >= 0.0 && self.requests_per_second.is_finite()) {
            return bad("requests_per_second must be non-negative");
        }
        if self.method == HttpMethod::Get && self.body.is_some() {
            return bad("a GET endpoint cannot have a body");
        }
        Ok(())
    }

    /// Backoff before retry number `retry` (1-based): base·2^(retry−1), capped.
    pub fn backoff(&self, retry: u32) -> Duration {
        let factor = 1u64
            .checked_shl(retry.saturating_sub(1))
            .unwrap_or(u64::MAX);
        Duration::from_millis(
            self.backoff_base_ms
                .saturating_mul(factor)
                .min(self.backoff_max_ms),
        )
    }
}

/// Spaces calls at least `1 / rate` seconds apart; callers queue on the lock.
#[derive(Debug)]
pub struct Throttle {
    period: Option<Duration>,
    next: Mutex<Option<Instant>>,
}

impl Throttle {
    pub fn new(requests_per_second: f64) -> Self {
        let period =
            (requests_per_second > 0.0).then(|| Duration::from_secs_f64(1.0 / requests_per_second));
        Throttle {
            period,
            next: Mutex::new(None),
        }
    }

    pub fn acquire(&self) {
        let Some(period) = self.period else { return };
        let mut next = self.next.lock().unwrap_or_else(|e| e.into_inner());
        let now = Instant::now();
        let slot = match *next {
            Some(at) if at > now => {
                thread::sleep(at - now);
                at
            }
            _ => now,
        };
        *next = Some(slot + period);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpStats {
    pub requests: u64,
    pub attempts: u64,
    pub retries: u64,
}

/// Blocking HTTP client with retries and throttling.
pub struct HttpBackend {
    config: EndpointConfig,
    client: reqwest::blocking::Client,
    throttle: Throttle,
    api_key: Option<String>,
    requests: AtomicU64,
    attempts: AtomicU64,
}

const RETRIABLE: [u16; 2] = [408, 429];

enum Attempt {
    Done(String),
    Retry(String),
    Fatal(TranslateError),
}

impl HttpBackend {
    pub fn new(config: EndpointConfig) -> Result<Self, TranslateError> {
        config.validate()?;
        let api_key = match &config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                TranslateError::Config(format!("environment variable {var} is not set"))
            })?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| TranslateError::Config(e.to_string()))?;
        Ok(HttpBackend {
            throttle: Throttle::new(config.requests_per_second),
            config,
            client,
            api_key,
            requests: AtomicU64::new(0),
            attempts: AtomicU64::new(0),
        })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    pub fn stats(&self) -> HttpStats {
        let requests = self.requests.load(Ordering::SeqCst);
        let attempts = self.attempts.load(Ordering::SeqCst);
        HttpStats {
            requests,
            attempts,
            retries: attempts.saturating_sub(requests),
        }
    }

    /// Translates with retries; returns the text and the number of attempts.
    pub fn translate_counted(
        &self,
        request: &TranslationRequest,
    ) -> Result<(String, u32), TranslateError> {
        self.requests.fetch_add(1, Ordering::SeqCst);
        let max_attempts = self.config.max_retries.saturating_add(1);
        let mut attempt = 0u32;
        loop {
            attempt += 1;
            self.throttle.acquire();
            self.attempts.fetch_add(1, Ordering::SeqCst);
            match self.attempt(request, attempt) {
                Attempt::Done(text) => return Ok((text, attempt)),
                Attempt::Fatal(err) => return Err(err),
                Attempt::Retry(last) => {
                    if attempt >= max_attempts {
                        return Err(TranslateError::RetriesExhausted {
                            attempts: attempt,
                            last,
                        });
                    }
                    thread::sleep(self.config.backoff(attempt));
                }
            }
        }
    }

    fn fill(&self, template: &str, request: &TranslationRequest, encode: bool) -> String {
        let enc = |s: &str| {
            if encode {
                url::form_urlencoded::byte_serialize(s.as_bytes()).collect::<String>()
            } else {
                s.to_string()
            }
        };
        template
            .replace("{source}", &enc(&request.source_lang))
            .replace("{target}", &enc(&request.target_lang))
            .replace("{api_key}", &enc(self.api_key.as_deref().unwrap_or("")))
            .replace("{text}", &enc(&request.text))
    }

    fn fill_json(&self, value: &Value, request: &TranslationRequest) -> Value {
        match value {
            Value::String(s) => Value::String(self.fill(s, request, false)),
            Value::Array(items) => {
                Value::Array(items.iter().map(|v| self.fill_json(v, request)).collect())
            }
            Value::Object(map) => Value::Object(
                map.iter()
                    .map(|(k, v)| (k.clone(), self.fill_json(v, request)))
                    .collect(),
            ),
            other => other.clone(),
        }
    }

    fn attempt(&self, request: &TranslationRequest, attempt: u32) -> Attempt {
        let url = self.fill(&self.config.url, request, true);
        let mut builder = match self.config.method {
            HttpMethod::Get => self.client.get(&url),
            HttpMethod::Post => self.client.post(&url),
        };
        for (name, value) in &self.config.headers {
            builder = builder.header(name, self.fill(value, request, false));
        }
        if let Some(body) = &self.config.body {
            builder = builder
                .header("content-type", "application/json")
                .body(self.fill_json(body, request).to_string());
        }
        let response = match builder.send() {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = response.status();
        let body = match response.text() {
            Ok(b) => b,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        if status.is_success() {
            return match extract(&body, &self.config.response_path) {
                Ok(text) => Attempt::Done(text),
                Err(e) => Attempt::Fatal(e),
            };
        }
        if status.is_server_error() || RETRIABLE.contains(&status.as_u16()) {
            return Attempt::Retry(format!("HTTP {}", status.as_u16()));
        }
        Attempt::Fatal(TranslateError::Http {
            status: status.as_u16(),
            body: excerpt(&body),
            attempts: attempt,
        })
    }
}

impl TranslationBackend for HttpBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, TranslateError> {
        self.translate_counted(request).map(|(text, _)| text)
    }
}

fn excerpt(body: &str) -> String {
    const LIMIT: usize = 200;
    match body.char_indices().nth(LIMIT) {
        Some((at, _)) => format!("{}…", &body[..at]),
        None => body.to_string(),
    }
}

fn extract(body: &str, path: &str) -> Result<String, TranslateError> {
    let text = if path.is_empty() {
        body.to_string()
    } else {
        let root: Value = serde_json::from_str(body)
            .map_err(|e| TranslateError::Response(format!("body is not JSON: {e}")))?;
        let mut node = &root;
        for segment in path.split('.') {
            let next = match node {
                Value::Array(items) => segment.parse::<usize>().ok().and_then(|i| items.get(i)),
                Value::Object(map) => map.get(segment),
                _ => None,
            };
            node = next.ok_or_else(|| {
                TranslateError::Response(format!("path {path:?} not found at {segment:?}"))
            })?;
        }
        node.as_str()
            .ok_or_else(|| TranslateError::Response(format!("value at {path:?} is not a string")))?
            .to_string()
    };
    if text.trim().is_empty() {
        return Err(TranslateError::Response("empty translation".into()));
    }
    Ok(text)
}
