//! Disk cache of raw provider replies: one JSON file per request digest,
//! laid out as `cache/<model>/<digest>.json`.

use crate::error::LlmError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// Request metadata plus the verbatim reply, as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub schema_version: u32,
    pub model: String,
    pub temperature: f64,
    pub raw_response: String,
    pub created_unix: u64,
}

/// Collision-resistant digest of everything that determines a reply:
/// schema version, model name, temperature bits, and both prompt parts.
pub fn cache_digest(
    schema_version: u32,
    model: &str,
    temperature: f64,
    system: &str,
    user: &str,
) -> String {
    let mut hasher = Sha256::new();
    hasher.update(schema_version.to_le_bytes());
    hasher.update([0]);
    hasher.update(model.as_bytes());
    hasher.update([0]);
    hasher.update(temperature.to_bits().to_le_bytes());
    hasher.update([0]);
    hasher.update(system.as_bytes());
    hasher.update([0]);
    hasher.update(user.as_bytes());
    hex::encode(hasher.finalize())
}

#[derive(Debug, Clone)]
pub struct DiskCache {
    root: PathBuf,
}

impl DiskCache {
    pub fn new(root: impl Into<PathBuf>) -> DiskCache {
        DiskCache { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path_for(&self, model: &str, digest: &str) -> PathBuf {
        let safe_model: String = model
            .chars()
            .map(|c| if c.is_alphanumeric() || c == '-' || c == '.' || c == '_' { c } else { '_' })
            .collect();
        self.root.join(safe_model).join(format!("{digest}.json"))
    }

    pub fn get(&self, model: &str, digest: &str) -> Result<Option<CacheEntry>, LlmError> {
        let path = self.path_for(model, digest);
        match fs::read_to_string(&path) {
            Ok(content) => serde_json::from_str(&content)
                .map(Some)
                .map_err(|e| LlmError::Cache(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(LlmError::Cache(format!("{}: {e}", path.display()))),
        }
    }

    /// Persist an entry atomically (temp file + rename), tolerating
    /// concurrent writers racing on the same key.
    pub fn put(&self, model: &str, digest: &str, entry: &CacheEntry) -> Result<(), LlmError> {
        let path = self.path_for(model, digest);
        let dir = path.parent().expect("cache paths have parents");
        fs::create_dir_all(dir).map_err(|e| LlmError::Cache(e.to_string()))?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)
            .map_err(|e| LlmError::Cache(e.to_string()))?;
        serde_json::to_writer_pretty(&mut tmp, entry)
            .map_err(|e| LlmError::Cache(e.to_string()))?;
        tmp.write_all(b"\n").map_err(|e| LlmError::Cache(e.to_string()))?;
        tmp.persist(&path)
            .map_err(|e| LlmError::Cache(e.to_string()))?;
        Ok(())
    }
}

pub(crate) fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_raw_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DiskCache::new(dir.path());
        let digest = cache_digest(1, "model-x", 0.0, "sys", "usr");
        assert!(cache.get("model-x", &digest).unwrap().is_none());

        let entry = CacheEntry {
            schema_version: 1,
            model: "model-x".into(),
            temperature: 0.0,
            raw_response: "{\"label\":\"positive\"}\nwith trailing text \u{1F600}".into(),
            created_unix: 123,
        };
        cache.put("model-x", &digest, &entry).unwrap();
        let back = cache.get("model-x", &digest).unwrap().unwrap();
        assert_eq!(back, entry);
    }

    #[test]
    fn digest_separates_every_component() {
        let base = cache_digest(1, "m", 0.0, "s", "u");
        assert_ne!(base, cache_digest(2, "m", 0.0, "s", "u"));
        assert_ne!(base, cache_digest(1, "m2", 0.0, "s", "u"));
        assert_ne!(base, cache_digest(1, "m", 0.5, "s", "u"));
        assert_ne!(base, cache_digest(1, "m", 0.0, "s2", "u"));
        assert_ne!(base, cache_digest(1, "m", 0.0, "s", "u2"));
        // Moving bytes across the system/user boundary must change the key.
        assert_ne!(
            cache_digest(1, "m", 0.0, "ab", "c"),
            cache_digest(1, "m", 0.0, "a", "bc")
        );
    }

    #[test]
    fn model_names_are_sanitized_into_directories() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DiskCache::new(dir.path());
        let entry = CacheEntry {
            schema_version: 1,
            model: "org/model:v1".into(),
            temperature: 0.0,
            raw_response: "x".into(),
            created_unix: 0,
        };
        cache.put("org/model:v1", "abc", &entry).unwrap();
        assert!(dir.path().join("org_model_v1").join("abc.json").exists());
        assert_eq!(cache.get("org/model:v1", "abc").unwrap().unwrap(), entry);
    }
}
