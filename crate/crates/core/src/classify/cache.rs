//! Append-only response cache keyed by a digest of `(model, prompt)`.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Label;

/// Hex SHA-256 of the model name and prompt, separated by a NUL byte.
pub fn cache_key(model: &str, prompt: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(model.as_bytes());
    hasher.update([0u8]);
    hasher.update(prompt.as_bytes());
    hex::encode(hasher.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key_hash: String,
    pub model: String,
    pub label: Label,
    pub rationale: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl CacheEntry {
    pub fn new(key_hash: String, model: &str, label: Label, rationale: &str) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            key_hash,
            model: model.to_string(),
            label,
            rationale: rationale.to_string(),
            timestamp,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// In-memory index over an optional append-only file. Writes go through a
/// single locked writer.
#[derive(Debug, Default)]
pub struct ResponseCache {
    entries: Mutex<HashMap<String, CacheEntry>>,
    writer: Mutex<Option<File>>,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads every entry of `path` (later lines win) and opens it for append.
    pub fn open(path: &Path) -> Result<Self, CacheError> {
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: CacheEntry =
                    serde_json::from_str(&line).map_err(|e| CacheError::Malformed {
                        line: i + 1,
                        message: e.to_string(),
                    })?;
                entries.insert(entry.key_hash.clone(), entry);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            entries: Mutex::new(entries),
            writer: Mutex::new(Some(file)),
        })
    }

    pub fn get(&self, key: &str) -> Option<CacheEntry> {
        self.entries.lock().expect("cache lock").get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn insert(&self, entry: CacheEntry) -> Result<(), CacheError> {
        {
            let mut writer = self.writer.lock().expect("cache writer lock");
            if let Some(file) = writer.as_mut() {
                let mut line = serde_json::to_vec(&entry).expect("cache entry serializes");
                line.push(b'\n');
                file.write_all(&line)?;
                file.flush()?;
            }
        }
        self.entries
            .lock()
            .expect("cache lock")
            .insert(entry.key_hash.clone(), entry);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_depends_on_model() {
        assert_ne!(cache_key("m1", "p"), cache_key("m2", "p"));
        assert_ne!(cache_key("ab", "c"), cache_key("a", "bc"));
        assert_eq!(cache_key("m", "p").len(), 64);
    }

    #[test]
    fn file_cache_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        {
            let cache = ResponseCache::open(&path).unwrap();
            cache
                .insert(CacheEntry::new("k1".into(), "m", Label::Conceptual, "why"))
                .unwrap();
            cache
                .insert(CacheEntry::new("k2".into(), "m", Label::Empirical, "data"))
                .unwrap();
        }
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains(r#""label":"conceptual""#));
        let cache = ResponseCache::open(&path).unwrap();
        assert_eq!(cache.len(), 2);
        assert_eq!(cache.get("k2").unwrap().label, Label::Empirical);
    }

    #[test]
    fn malformed_cache_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        std::fs::write(&path, "{not json}\n").unwrap();
        assert!(matches!(
            ResponseCache::open(&path),
            Err(CacheError::Malformed { line: 1, .. })
        ));
    }
}
