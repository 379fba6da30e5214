use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::{Cassette, CassetteEntry, ChatBackend, ChatRequest, ChatResponse, GatewayError};

/// Forwards every request to `inner` and persists each successful response
/// into a cassette file. The file is rewritten atomically after every call,
/// and writes are serialized, so a failed or interrupted call never leaves a
/// damaged cassette behind.
pub struct RecordingBackend<B> {
    inner: B,
    path: PathBuf,
    cassette: Mutex<Cassette>,
}

impl<B: ChatBackend> RecordingBackend<B> {
    /// Starts from the existing cassette at `path`, if there is one.
    pub fn open(inner: B, path: impl Into<PathBuf>) -> Result<Self, GatewayError> {
        let path = path.into();
        let cassette = if path.exists() {
            Cassette::load(&path)?
        } else {
            Cassette::default()
        };
        Ok(RecordingBackend {
            inner,
            path,
            cassette: Mutex::new(cassette),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn cassette(&self) -> Cassette {
        self.cassette.lock().unwrap().clone()
    }

    /// Performs the call and returns the response together with the entry
    /// written for it.
    pub fn record(
        &self,
        request: &ChatRequest,
    ) -> Result<(ChatResponse, (String, CassetteEntry)), GatewayError> {
        request.validate()?;
        let response = self.inner.complete(request)?;
        let fingerprint = request.fingerprint();
        let entry = CassetteEntry {
            content: response.content.clone(),
            model: response.model.clone(),
        };
        let mut cassette = self.cassette.lock().unwrap();
        let mut updated = cassette.clone();
        updated.insert(fingerprint.clone(), entry.clone());
        updated.save(&self.path)?;
        *cassette = updated;
        Ok((response, (fingerprint, entry)))
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        self.record(request).map(|(response, _)| response)
    }
}

/// Keeps every request that passes through, in arrival order.
pub struct CallLog<B> {
    inner: B,
    calls: Mutex<Vec<ChatRequest>>,
}

impl<B: ChatBackend> CallLog<B> {
    pub fn new(inner: B) -> Self {
        CallLog {
            inner,
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> Vec<ChatRequest> {
        self.calls.lock().unwrap().clone()
    }

    pub fn len(&self) -> usize {
        self.calls.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<B: ChatBackend> ChatBackend for CallLog<B> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        self.calls.lock().unwrap().push(request.clone());
        self.inner.complete(request)
    }
}
