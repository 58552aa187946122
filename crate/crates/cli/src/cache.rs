//! On-disk store of census verdicts keyed by a content hash of the run.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use locsol::census::{LocalVerdict, SolubleVia};
use locsol::padic::Place;

use crate::output::write_atomic;
use crate::CliError;

pub fn content_key(parts: &[String]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    hex::encode(h.finalize())[..32].to_string()
}

pub fn verdict_json(v: &LocalVerdict) -> Value {
    match v {
        LocalVerdict::Soluble { via } => json!({ "verdict": "soluble", "via": via.to_string() }),
        LocalVerdict::Insoluble { place } => json!({ "verdict": "insoluble", "place": place.to_string() }),
        LocalVerdict::Unknown { reason } => json!({ "verdict": "unknown", "reason": reason }),
    }
}

fn verdict_from_json(v: &Value) -> Option<LocalVerdict> {
    match v.get("verdict")?.as_str()? {
        "soluble" => Some(LocalVerdict::Soluble {
            via: match v.get("via")?.as_str()? {
                "rational-point" => SolubleVia::RationalPoint,
                "quadratic-primes" => SolubleVia::QuadraticPrimes,
                _ => return None,
            },
        }),
        "insoluble" => {
            let place = match v.get("place")?.as_str()? {
                "inf" => Place::Infinity,
                p => Place::Prime(p.parse().ok()?),
            };
            Some(LocalVerdict::Insoluble { place })
        }
        "unknown" => Some(LocalVerdict::Unknown { reason: v.get("reason")?.as_str()?.to_string() }),
        _ => None,
    }
}

/// Removes the lock file when dropped.
struct Lock(PathBuf);

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

pub struct VerdictCache {
    file: PathBuf,
    pub entries: BTreeMap<Vec<i64>, LocalVerdict>,
    dirty: bool,
    _lock: Lock,
}

impl VerdictCache {
    /// Opens (creating if needed) the store for `key`, holding its lock
    /// until dropped.
    pub fn open(root: &Path, key: &str) -> Result<Self, CliError> {
        let io = |e: std::io::Error| CliError::Io(format!("cache {}: {e}", root.display()));
        std::fs::create_dir_all(root).map_err(io)?;
        let lock_path = root.join(format!("census-{key}.lock"));
        let mut tries = 0;
        let lock = loop {
            match OpenOptions::new().write(true).create_new(true).open(&lock_path) {
                Ok(_) => break Lock(lock_path),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists && tries < 600 => {
                    tries += 1;
                    std::thread::sleep(Duration::from_millis(100));
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    return Err(CliError::Io(format!("cache is locked by another writer: {}", lock_path.display())))
                }
                Err(e) => return Err(io(e)),
            }
        };
        let file = root.join(format!("census-{key}.jsonl"));
        let mut entries = BTreeMap::new();
        if let Ok(text) = std::fs::read_to_string(&file) {
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let v: Value = serde_json::from_str(line).map_err(|e| CliError::Io(format!("corrupt cache {}: {e}", file.display())))?;
                let a: Option<Vec<i64>> = v.get("a").and_then(|a| serde_json::from_value(a.clone()).ok());
                match (a, verdict_from_json(&v)) {
                    (Some(a), Some(verdict)) => {
                        entries.insert(a, verdict);
                    }
                    _ => return Err(CliError::Io(format!("corrupt cache entry in {}", file.display()))),
                }
            }
        }
        Ok(VerdictCache { file, entries, dirty: false, _lock: lock })
    }

    pub fn get(&self, a: &[i64]) -> Option<&LocalVerdict> {
        self.entries.get(a)
    }

    pub fn insert(&mut self, a: Vec<i64>, v: LocalVerdict) {
        self.entries.insert(a, v);
        self.dirty = true;
    }

    pub fn save(&mut self) -> Result<(), CliError> {
        if !self.dirty {
            return Ok(());
        }
        let mut out = Vec::new();
        for (a, v) in &self.entries {
            let mut obj = verdict_json(v);
            obj["a"] = json!(a);
            serde_json::to_writer(&mut out, &obj).expect("serializable");
            out.push(b'\n');
        }
        write_atomic(&self.file, &out).map_err(|e| CliError::Io(format!("{}: {e}", self.file.display())))?;
        self.dirty = false;
        Ok(())
    }
}
