//! Atomic file output and the scan cache.

use nsk::report::{config_hash, SCHEMA_VERSION};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CachePolicy {
    Rw,
    Ro,
    Off,
}

/// Provenance embedded in every output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stamp {
    pub schema_version: u32,
    pub config_hash: String,
    pub seed: u64,
}

impl Stamp {
    pub fn new(config_hash: String, seed: u64) -> Self {
        Stamp { schema_version: SCHEMA_VERSION, config_hash, seed }
    }

    /// Leading comment line for CSV files.
    pub fn csv_line(&self) -> String {
        format!("# schema_version={} config_hash={} seed={}\n", self.schema_version, self.config_hash, self.seed)
    }
}

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    schema_version: u32,
    checksum: String,
    payload: String,
}

pub struct Cache {
    dir: PathBuf,
    policy: CachePolicy,
}

impl Cache {
    pub fn new(out: &Path, policy: CachePolicy) -> Self {
        Cache { dir: out.join(".cache"), policy }
    }

    fn path(&self, sub: &str, hash: &str) -> PathBuf {
        self.dir.join(format!("{sub}-{hash}.json"))
    }

    /// Cached payload; a corrupt or stale entry counts as a miss.
    pub fn get(&self, sub: &str, hash: &str) -> Option<String> {
        if self.policy == CachePolicy::Off {
            return None;
        }
        let text = std::fs::read_to_string(self.path(sub, hash)).ok()?;
        let e: CacheEntry = serde_json::from_str(&text).ok()?;
        (e.schema_version == SCHEMA_VERSION && e.checksum == config_hash(&e.payload)).then_some(e.payload)
    }

    pub fn put(&self, sub: &str, hash: &str, payload: &str) -> std::io::Result<()> {
        if self.policy != CachePolicy::Rw {
            return Ok(());
        }
        let e = CacheEntry { schema_version: SCHEMA_VERSION, checksum: config_hash(&payload), payload: payload.to_string() };
        write_atomic(&self.path(sub, hash), &serde_json::to_string(&e).expect("cache entry serializes"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corrupt_entry_is_a_miss() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::new(dir.path(), CachePolicy::Rw);
        c.put("scan-det", "abc", "{\"x\":1}").unwrap();
        assert_eq!(c.get("scan-det", "abc").as_deref(), Some("{\"x\":1}"));
        let p = c.path("scan-det", "abc");
        let t = std::fs::read_to_string(&p).unwrap().replace("\\\"x\\\":1", "\\\"x\\\":2");
        std::fs::write(&p, t).unwrap();
        assert!(c.get("scan-det", "abc").is_none());
    }

    #[test]
    fn read_only_does_not_write() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::new(dir.path(), CachePolicy::Ro);
        c.put("a", "h", "{}").unwrap();
        assert!(c.get("a", "h").is_none());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/x.txt");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
