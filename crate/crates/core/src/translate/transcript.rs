//! Request/response transcripts for offline, reproducible back-translation.
//!
//! File format: JSONL, one [`TranscriptRecord`] per line, appended and
//! flushed per record. A trailing unterminated line (interrupted write) is
//! ignored on load and cut off before appending.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{TranslateError, TranslationBackend, TranslationRequest};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub hash: String,
    pub source_lang: String,
    pub target_lang: String,
    pub text: String,
    pub translation: String,
}

impl TranscriptRecord {
    fn matches(&self, request: &TranslationRequest) -> bool {
        self.text == request.text
            && self.source_lang == request.source_lang
            && self.target_lang == request.target_lang
    }
}

/// Ordered records with a hash index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    records: Vec<TranscriptRecord>,
    index: HashMap<String, usize>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[TranscriptRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, hash: &str) -> Option<&TranscriptRecord> {
        self.index.get(hash).map(|&i| &self.records[i])
    }

    /// Adds a record unless its hash is already present. Returns whether it
    /// was added.
    pub fn push(&mut self, record: TranscriptRecord) -> bool {
        if self.index.contains_key(&record.hash) {
            return false;
        }
        self.index.insert(record.hash.clone(), self.records.len());
        self.records.push(record);
        true
    }

    /// Parses transcript text; returns it with the byte length of the valid
    /// prefix (everything up to the last complete line).
    pub fn parse(text: &str) -> Result<(Self, usize), TranslateError> {
        let mut transcript = Transcript::new();
        let mut offset = 0;
        for (i, line) in text.split_inclusive('\n').enumerate() {
            if !line.ends_with('\n') {
                break;
            }
            offset += line.len();
            if line.trim().is_empty() {
                continue;
            }
            let record: TranscriptRecord =
                serde_json::from_str(line).map_err(|e| TranslateError::Transcript {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            let expected =
                super::request_hash(&record.source_lang, &record.target_lang, &record.text);
            if record.hash != expected {
                return Err(TranslateError::Transcript {
                    line: i + 1,
                    message: format!("hash {} does not match the record contents", record.hash),
                });
            }
            transcript.push(record);
        }
        Ok((transcript, offset))
    }

    pub fn load(path: &Path) -> Result<Self, TranslateError> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::parse(&text)?.0)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("transcript records serialize"));
            out.push('\n');
        }
        out
    }
}

struct Sink {
    transcript: Transcript,
    file: Option<File>,
}

/// Passes requests to `inner` and appends each new (request, response) pair.
pub struct RecordingBackend<B> {
    inner: B,
    name: String,
    sink: Mutex<Sink>,
}

impl<B: TranslationBackend> RecordingBackend<B> {
    pub fn in_memory(inner: B) -> Self {
        let name = format!("record({})", inner.name());
        RecordingBackend {
            inner,
            name,
            sink: Mutex::new(Sink {
                transcript: Transcript::new(),
                file: None,
            }),
        }
    }

    /// Records into `path`, keeping any complete records already there.
    pub fn to_file(inner: B, path: &Path) -> Result<Self, TranslateError> {
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)?;
        let mut existing = String::new();
        file.read_to_string(&mut existing)?;
        let (transcript, valid) = Transcript::parse(&existing)?;
        if valid < existing.len() {
            file.set_len(valid as u64)?;
        }
        let recorder = Self::in_memory(inner);
        {
            let mut sink = recorder.sink.lock().unwrap();
            sink.transcript = transcript;
            sink.file = Some(file);
        }
        Ok(recorder)
    }

    pub fn transcript(&self) -> Transcript {
        self.sink
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .transcript
            .clone()
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: TranslationBackend> TranslationBackend for RecordingBackend<B> {
    fn name(&self) -> &str {
        &self.name
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, TranslateError> {
        let translation = self.inner.translate(request)?;
        let record = TranscriptRecord {
            hash: request.hash(),
            source_lang: request.source_lang.clone(),
            target_lang: request.target_lang.clone(),
            text: request.text.clone(),
            translation: translation.clone(),
        };
        let mut sink = self.sink.lock().unwrap_or_else(|e| e.into_inner());
        let line = serde_json::to_string(&record).expect("transcript records serialize");
        if sink.transcript.push(record) {
            if let Some(file) = sink.file.as_mut() {
                file.write_all(format!("{line}\n").as_bytes())?;
                file.flush()?;
            }
        }
        Ok(translation)
    }
}

/// Answers requests from a transcript; never touches the network.
pub struct ReplayBackend {
    transcript: Transcript,
}

impl ReplayBackend {
    pub fn new(transcript: Transcript) -> Self {
        ReplayBackend { transcript }
    }

    pub fn from_path(path: &Path) -> Result<Self, TranslateError> {
        Ok(Self::new(Transcript::load(path)?))
    }
}

impl TranslationBackend for ReplayBackend {
    fn name(&self) -> &str {
        "replay"
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, TranslateError> {
        let hash = request.hash();
        let record = self
            .transcript
            .get(&hash)
            .ok_or_else(|| TranslateError::ReplayMiss {
                hash: hash.clone(),
                sentence_id: request.sentence_id,
            })?;
        if !record.matches(request) {
            return Err(TranslateError::HashCollision { hash });
        }
        Ok(record.translation.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::translate::mock::{CountingBackend, ReverseWordsBackend};

    fn req(text: &str) -> TranslationRequest {
        TranslationRequest::new(text, "fa", "en").unwrap()
    }

    #[test]
    fn record_then_replay_five_requests() {
        let recorder =
            RecordingBackend::in_memory(CountingBackend::new(ReverseWordsBackend::new("en")));
        let texts = ["a b", "c d e", "f", "g h", "i j k l"];
        let first: Vec<String> = texts
            .iter()
            .map(|t| recorder.translate(&req(t)).unwrap())
            .collect();
        assert_eq!(recorder.transcript().len(), 5);
        assert_eq!(recorder.inner().calls(), 5);

        let replay = ReplayBackend::new(recorder.transcript());
        let second: Vec<String> = texts
            .iter()
            .map(|t| replay.translate(&req(t)).unwrap())
            .collect();
        assert_eq!(first, second);
        assert_eq!(recorder.inner().calls(), 5);
    }

    #[test]
    fn replay_miss_names_hash_and_sentence() {
        let replay = ReplayBackend::new(Transcript::new());
        let request = req("missing").for_sentence(77);
        match replay.translate(&request).unwrap_err() {
            TranslateError::ReplayMiss { hash, sentence_id } => {
                assert_eq!(hash, request.hash());
                assert_eq!(sentence_id, Some(77));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn file_recording_survives_partial_tail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        {
            let rec = RecordingBackend::to_file(ReverseWordsBackend::new("en"), &path).unwrap();
            rec.translate(&req("one two")).unwrap();
            rec.translate(&req("one two")).unwrap();
        }
        // simulate an interrupted append
        let mut text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1);
        text.push_str("{\"hash\":\"abc\",\"sou");
        std::fs::write(&path, &text).unwrap();
        assert_eq!(Transcript::load(&path).unwrap().len(), 1);

        {
            let rec = RecordingBackend::to_file(ReverseWordsBackend::new("en"), &path).unwrap();
            rec.translate(&req("three")).unwrap();
        }
        let loaded = Transcript::load(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        let (_, valid) = Transcript::parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(valid, std::fs::metadata(&path).unwrap().len() as usize);
    }

    #[test]
    fn tampered_records_are_rejected() {
        let mut record = TranscriptRecord {
            hash: req("x").hash(),
            source_lang: "fa".into(),
            target_lang: "en".into(),
            text: "x".into(),
            translation: "y".into(),
        };
        record.text = "changed".into();
        let line = format!("{}\n", serde_json::to_string(&record).unwrap());
        assert!(matches!(
            Transcript::parse(&line),
            Err(TranslateError::Transcript { line: 1, .. })
        ));
    }
}
