//! Recorded replies keyed by prompt hash.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;

use super::{prompt_key, LlmError, Provider};

type Store = BTreeMap<String, String>;

fn load(path: &Path) -> Result<Store, LlmError> {
    let err = |reason: String| LlmError::Store { path: path.display().to_string(), reason };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| err(e.to_string()))
}

/// Answers only prompts it has a recording for.
#[derive(Debug, Clone, Default)]
pub struct ReplayProvider {
    store: Store,
    model: String,
}

impl ReplayProvider {
    pub fn open(path: &Path) -> Result<Self, LlmError> {
        Ok(ReplayProvider { store: load(path)?, model: format!("replay:{}", path.display()) })
    }

    pub fn from_map(store: BTreeMap<String, String>) -> Self {
        ReplayProvider { store, model: "replay".into() }
    }

    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }
}

impl Provider for ReplayProvider {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let key = prompt_key(prompt);
        self.store.get(&key).cloned().ok_or(LlmError::ReplayMiss(key))
    }

    fn model_name(&self) -> &str {
        &self.model
    }
}

/// Passes prompts through to another provider and keeps every successful
/// reply, for writing a replay store.
pub struct RecordingProvider<P> {
    inner: P,
    seen: Mutex<Store>,
}

impl<P: Provider> RecordingProvider<P> {
    pub fn new(inner: P) -> Self {
        RecordingProvider { inner, seen: Mutex::new(Store::new()) }
    }

    pub fn recorded(&self) -> BTreeMap<String, String> {
        self.seen.lock().unwrap().clone()
    }

    /// Writes the recordings as a pretty JSON object, merged over any store
    /// already at `path`.
    pub fn save(&self, path: &Path) -> Result<usize, LlmError> {
        let mut all = if path.exists() { load(path)? } else { Store::new() };
        all.extend(self.recorded());
        let text = serde_json::to_string_pretty(&all).expect("maps serialize");
        std::fs::write(path, text + "\n")
            .map_err(|e| LlmError::Store { path: path.display().to_string(), reason: e.to_string() })?;
        Ok(all.len())
    }
}

impl<P: Provider> Provider for RecordingProvider<P> {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let reply = self.inner.complete(prompt)?;
        self.seen.lock().unwrap().insert(prompt_key(prompt), reply.clone());
        Ok(reply)
    }

    fn model_name(&self) -> &str {
        self.inner.model_name()
    }
}

impl<P: Provider> Provider for std::sync::Arc<P> {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        (**self).complete(prompt)
    }

    fn model_name(&self) -> &str {
        (**self).model_name()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::HeuristicStub;

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.json");
        let rec = RecordingProvider::new(HeuristicStub::default());
        let prompt = "<task>two-bubbles</task>";
        let live = rec.complete(prompt).unwrap();
        assert_eq!(rec.save(&path).unwrap(), 1);
        let replay = ReplayProvider::open(&path).unwrap();
        assert_eq!(replay.complete(prompt).unwrap(), live);
        assert!(matches!(replay.complete("something else"), Err(LlmError::ReplayMiss(_))));
    }

    #[test]
    fn bad_store() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, "[1,2]").unwrap();
        assert!(matches!(ReplayProvider::open(&path), Err(LlmError::Store { .. })));
        assert!(ReplayProvider::open(&dir.path().join("missing.json")).is_err());
    }
}
