//! Deterministic in-process backends for tests and dry runs.

use std::sync::atomic::{AtomicUsize, Ordering};

use super::{TranslateError, TranslationBackend, TranslationRequest};
use crate::augment::is_sentinel;

/// Returns its input.
#[derive(Debug, Default, Clone, Copy)]
pub struct IdentityBackend;

impl TranslationBackend for IdentityBackend {
    fn name(&self) -> &str {
        "identity"
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, TranslateError> {
        Ok(request.text.clone())
    }
}

/// Reverses the word order of requests whose target is `reverse_into`,
/// passes other requests through. Sentinels move with the reversal, so a
/// round trip through it yields a reordered sentence.
#[derive(Debug, Clone)]
pub struct ReverseWordsBackend {
    reverse_into: String,
}

impl ReverseWordsBackend {
    pub fn new(reverse_into: impl Into<String>) -> Self {
        ReverseWordsBackend {
            reverse_into: reverse_into.into(),
        }
    }
}

impl TranslationBackend for ReverseWordsBackend {
    fn name(&self) -> &str {
        "reverse-words"
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, TranslateError> {
        if request.target_lang != self.reverse_into {
            return Ok(request.text.clone());
        }
        let mut words: Vec<&str> = request.text.split_whitespace().collect();
        words.reverse();
        Ok(words.join(" "))
    }
}

/// Deletes every sentinel token.
#[derive(Debug, Default, Clone, Copy)]
pub struct DropSentinelBackend;

impl TranslationBackend for DropSentinelBackend {
    fn name(&self) -> &str {
        "drop-sentinel"
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, TranslateError> {
        let kept: Vec<&str> = request
            .text
            .split_whitespace()
            .filter(|w| !is_sentinel(w))
            .collect();
        if kept.is_empty() {
            Ok("-".to_string())
        } else {
            Ok(kept.join(" "))
        }
    }
}

/// Writes every sentinel twice.
#[derive(Debug, Default, Clone, Copy)]
pub struct DuplicateSentinelBackend;

impl TranslationBackend for DuplicateSentinelBackend {
    fn name(&self) -> &str {
        "duplicate-sentinel"
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, TranslateError> {
        let words: Vec<String> = request
            .text
            .split_whitespace()
            .map(|w| {
                if is_sentinel(w) {
                    format!("{w} {w}")
                } else {
                    w.to_string()
                }
            })
            .collect();
        Ok(words.join(" "))
    }
}

/// Fails every request with a transport error.
#[derive(Debug, Default, Clone, Copy)]
pub struct FailingBackend;

impl TranslationBackend for FailingBackend {
    fn name(&self) -> &str {
        "failing"
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, TranslateError> {
        Err(TranslateError::Transport(format!(
            "connection refused (sentence {:?})",
            request.sentence_id
        )))
    }
}

/// Counts calls forwarded to the wrapped backend.
#[derive(Debug, Default)]
pub struct CountingBackend<B> {
    inner: B,
    calls: AtomicUsize,
}

impl<B> CountingBackend<B> {
    pub fn new(inner: B) -> Self {
        CountingBackend {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<B: TranslationBackend> TranslationBackend for CountingBackend<B> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, TranslateError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.translate(request)
    }
}
