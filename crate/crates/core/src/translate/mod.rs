//! Translation backends used for back-translation.
//!
//! Everything goes through [`TranslationBackend`]: a live HTTP client
//! ([`HttpBackend`]), transcript recording and replay for offline
//! reproducible runs, and a few mocks for tests and dry runs.

mod http;
pub mod mock;
mod transcript;

use std::sync::Arc;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::SentenceId;

pub use http::{EndpointConfig, HttpBackend, HttpMethod, HttpStats, Throttle};
pub use transcript::{RecordingBackend, ReplayBackend, Transcript, TranscriptRecord};

#[derive(Debug, Error)]
pub enum TranslateError {
    #[error("invalid translation request: {0}")]
    InvalidRequest(String),
    #[error("invalid endpoint configuration: {0}")]
    Config(String),
    #[error("HTTP {status} after {attempts} attempt(s): {body}")]
    Http {
        status: u16,
        body: String,
        attempts: u32,
    },
    #[error("gave up after {attempts} attempt(s): {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("unusable response: {0}")]
    Response(String),
    #[error("no recorded translation for request {hash}{}", sentence_suffix(.sentence_id))]
    ReplayMiss {
        hash: String,
        sentence_id: Option<SentenceId>,
    },
    #[error("transcript record {hash} does not match the request text")]
    HashCollision { hash: String },
    #[error("transcript line {line}: {message}")]
    Transcript { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn sentence_suffix(id: &Option<SentenceId>) -> String {
    id.map(|id| format!(" (sentence {id})")).unwrap_or_default()
}

impl TranslateError {
    /// Whether retrying the same request could succeed.
    pub fn is_retriable(&self) -> bool {
        matches!(
            self,
            TranslateError::Transport(_) | TranslateError::RetriesExhausted { .. }
        )
    }
}

/// One translation call. `sentence_id` is context for error messages and is
/// not part of the request hash.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationRequest {
    pub text: String,
    pub source_lang: String,
    pub target_lang: String,
    pub sentence_id: Option<SentenceId>,
}

impl TranslationRequest {
    pub fn new(
        text: impl Into<String>,
        source_lang: impl Into<String>,
        target_lang: impl Into<String>,
    ) -> Result<Self, TranslateError> {
        let (text, source_lang, target_lang) =
            (text.into(), source_lang.into(), target_lang.into());
        if text.trim().is_empty() {
            return Err(TranslateError::InvalidRequest("empty text".into()));
        }
        if source_lang.is_empty() || target_lang.is_empty() {
            return Err(TranslateError::InvalidRequest("empty language code".into()));
        }
        if source_lang == target_lang {
            return Err(TranslateError::InvalidRequest(format!(
                "source and target are both {source_lang:?}"
            )));
        }
        Ok(TranslationRequest {
            text,
            source_lang,
            target_lang,
            sentence_id: None,
        })
    }

    pub fn for_sentence(mut self, id: SentenceId) -> Self {
        self.sentence_id = Some(id);
        self
    }

    /// Lowercase hex SHA-256 of `source_lang \n target_lang \n text`.
    pub fn hash(&self) -> String {
        request_hash(&self.source_lang, &self.target_lang, &self.text)
    }
}

pub(crate) fn request_hash(source: &str, target: &str, text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(source.as_bytes());
    hasher.update(b"\n");
    hasher.update(target.as_bytes());
    hasher.update(b"\n");
    hasher.update(text.as_bytes());
    hex::encode(hasher.finalize())
}

/// A translation service. Implementations must be safe to call concurrently.
pub trait TranslationBackend: Send + Sync {
    fn name(&self) -> &str;

    fn translate(&self, request: &TranslationRequest) -> Result<String, TranslateError>;
}

impl<T: TranslationBackend + ?Sized> TranslationBackend for &T {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, TranslateError> {
        (**self).translate(request)
    }
}

impl<T: TranslationBackend + ?Sized> TranslationBackend for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, TranslateError> {
        (**self).translate(request)
    }
}

impl<T: TranslationBackend + ?Sized> TranslationBackend for Arc<T> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, TranslateError> {
        (**self).translate(request)
    }
}
