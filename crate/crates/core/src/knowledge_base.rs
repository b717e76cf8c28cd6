// SPDX-License-Identifier: Apache-2.0

//! File-backed catalog of classified workloads.
//!
//! The store is a text file with one JSON [`KbEntry`] per line. Writes append
//! a line and `fsync`; the last line for a workload id wins. When superseded
//! lines outnumber live ones the file is rewritten through a temporary file
//! and an atomic rename. Writers serialize on an exclusive lock held on a
//! sibling `<store>.lock` file; a second writer fails fast with
//! [`KbError::Contention`] instead of waiting. Readers take no lock. A final
//! line without a trailing newline is a torn append and is ignored.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions, TryLockError};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::ClassificationResult;
use crate::ingest::ProfileSet;

/// Environment variable naming the default store path.
pub const KB_ENV: &str = "MEMADVISOR_KB";

#[derive(Debug, thiserror::Error)]
pub enum KbError {
    #[error("knowledge base I/O on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("knowledge base {path} is locked by another writer")]
    Contention { path: PathBuf },
    #[error("knowledge base {path} line {line}: {reason}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("invalid entry for {workload_id:?}: {reason}")]
    InvalidEntry { workload_id: String, reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbEntry {
    pub workload_id: String,
    pub classification: ClassificationResult,
    /// SHA-256 of the profile set in canonical record form, hex encoded.
    pub profile_digest: String,
    pub created_at: DateTime<Utc>,
}

impl KbEntry {
    pub fn new(profiles: &ProfileSet, classification: ClassificationResult) -> Self {
        KbEntry {
            workload_id: profiles.workload_id().to_string(),
            classification,
            profile_digest: profile_digest(profiles),
            created_at: Utc::now(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.workload_id.is_empty() {
            return Err("empty workload id".into());
        }
        if !self.classification.is_consistent() {
            return Err(format!(
                "factor {} does not match category {}",
                self.classification.factor_shuf, self.classification.category
            ));
        }
        let d = &self.profile_digest;
        if d.len() != 64 || !d.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            return Err("profile_digest is not a lowercase sha256 hex string".into());
        }
        Ok(())
    }
}

pub fn profile_digest(profiles: &ProfileSet) -> String {
    hex::encode(Sha256::digest(profiles.to_records().as_bytes()))
}

/// Result of a [`KnowledgeBase::put`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PutOutcome {
    pub entry: KbEntry,
    pub replaced: bool,
}

/// Parses one store line. Exposed for fuzzing and tooling.
pub fn parse_store_line(line: &str) -> Result<KbEntry, String> {
    let entry: KbEntry = serde_json::from_str(line).map_err(|e| e.to_string())?;
    entry.validate()?;
    Ok(entry)
}

#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    path: PathBuf,
}

struct Loaded {
    entries: BTreeMap<String, KbEntry>,
    lines: usize,
    torn_tail: bool,
}

impl KnowledgeBase {
    /// Opens a store at `path`. Nothing is created until the first write.
    pub fn open(path: impl Into<PathBuf>) -> Self {
        KnowledgeBase { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn lock_path(&self) -> PathBuf {
        let mut p = self.path.clone().into_os_string();
        p.push(".lock");
        PathBuf::from(p)
    }

    fn io_err(&self, source: io::Error) -> KbError {
        KbError::Io {
            path: self.path.clone(),
            source,
        }
    }

    fn load(&self) -> Result<Loaded, KbError> {
        let data = match fs::read(&self.path) {
            Ok(d) => d,
            Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(self.io_err(e)),
        };
        let mut entries = BTreeMap::new();
        let mut lines = 0;
        let torn_tail = !data.is_empty() && !data.ends_with(b"\n");
        let mut segments: Vec<&[u8]> = data.split(|&b| b == b'\n').collect();
        // split leaves either an empty tail or the torn fragment last
        segments.pop();
        for (i, raw) in segments.into_iter().enumerate() {
            let corrupt = |reason: String| KbError::Corrupt {
                path: self.path.clone(),
                line: i + 1,
                reason,
            };
            let text = std::str::from_utf8(raw).map_err(|e| corrupt(e.to_string()))?;
            if text.trim().is_empty() {
                continue;
            }
            let entry = parse_store_line(text).map_err(corrupt)?;
            lines += 1;
            entries.insert(entry.workload_id.clone(), entry);
        }
        Ok(Loaded {
            entries,
            lines,
            torn_tail,
        })
    }

    pub fn get(&self, workload_id: &str) -> Result<Option<KbEntry>, KbError> {
        Ok(self.load()?.entries.remove(workload_id))
    }

    /// All entries ordered by workload id.
    pub fn list(&self) -> Result<Vec<KbEntry>, KbError> {
        Ok(self.load()?.entries.into_values().collect())
    }

    /// Takes the writer lock without blocking.
    pub fn writer(&self) -> Result<KbWriter<'_>, KbError> {
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| self.io_err(e))?;
        }
        let lock_path = self.lock_path();
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)
            .map_err(|e| self.io_err(e))?;
        match lock.try_lock() {
            Ok(()) => Ok(KbWriter { kb: self, _lock: lock }),
            Err(TryLockError::WouldBlock) => Err(KbError::Contention { path: self.path.clone() }),
            Err(TryLockError::Error(e)) => Err(self.io_err(e)),
        }
    }

    /// Stores `entry`, replacing any entry with the same id.
    pub fn put(&self, entry: KbEntry) -> Result<PutOutcome, KbError> {
        self.writer()?.put(entry)
    }
}

/// Holds the exclusive writer lock until dropped.
#[derive(Debug)]
pub struct KbWriter<'a> {
    kb: &'a KnowledgeBase,
    _lock: File,
}

impl KbWriter<'_> {
    pub fn put(&self, entry: KbEntry) -> Result<PutOutcome, KbError> {
        entry.validate().map_err(|reason| KbError::InvalidEntry {
            workload_id: entry.workload_id.clone(),
            reason,
        })?;
        let kb = self.kb;
        let mut loaded = kb.load()?;
        let replaced = loaded.entries.contains_key(&entry.workload_id);
        let line = serde_json::to_string(&entry).expect("entry serializes");
        loaded.entries.insert(entry.workload_id.clone(), entry.clone());

        let stale = loaded.lines + 1 - loaded.entries.len();
        if loaded.torn_tail || stale > loaded.entries.len() {
            self.rewrite(&loaded.entries)?;
        } else {
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&kb.path)
                .map_err(|e| kb.io_err(e))?;
            f.write_all(format!("{line}\n").as_bytes())
                .and_then(|_| f.sync_all())
                .map_err(|e| kb.io_err(e))?;
        }
        Ok(PutOutcome { entry, replaced })
    }

    fn rewrite(&self, entries: &BTreeMap<String, KbEntry>) -> Result<(), KbError> {
        let kb = self.kb;
        let mut tmp = kb.path.clone().into_os_string();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        let mut body = String::new();
        for e in entries.values() {
            body.push_str(&serde_json::to_string(e).expect("entry serializes"));
            body.push('\n');
        }
        let write = || -> io::Result<()> {
            let mut f = File::create(&tmp)?;
            f.write_all(body.as_bytes())?;
            f.sync_all()?;
            fs::rename(&tmp, &kb.path)?;
            if let Some(dir) = kb.path.parent().filter(|d| !d.as_os_str().is_empty()) {
                File::open(dir)?.sync_all()?;
            }
            Ok(())
        };
        write().map_err(|e| kb.io_err(e))
    }
}
