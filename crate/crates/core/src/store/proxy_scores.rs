use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Mutex, RwLock};

use crate::error::{Error, Result};
use crate::table::{self, fmt6, parse_field};

pub const PROXY_HEADER: [&str; 5] = ["model_id", "task_id", "proxy_kind", "score", "config_digest"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProxyKind {
    Knn,
    Linear,
}

impl ProxyKind {
    pub const ALL: [ProxyKind; 2] = [ProxyKind::Knn, ProxyKind::Linear];

    pub fn as_str(self) -> &'static str {
        match self {
            ProxyKind::Knn => "knn",
            ProxyKind::Linear => "linear",
        }
    }
}

impl fmt::Display for ProxyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProxyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "knn" => Ok(ProxyKind::Knn),
            "linear" => Ok(ProxyKind::Linear),
            other => Err(Error::Config(format!("unknown proxy kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxyEntry {
    pub score: f64,
    pub config_digest: String,
}

type Key = (String, String, ProxyKind);

/// Proxy scores per (model, task, kind), each tagged with the digest of the
/// evaluation configuration that produced it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProxyScoreTable {
    entries: BTreeMap<Key, ProxyEntry>,
}

impl ProxyScoreTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a score. Re-inserting an identical entry is a no-op; a different
    /// digest or a different score under the same digest is a `DigestConflict`.
    /// Returns whether the table changed.
    pub fn insert(&mut self, model_id: &str, task_id: &str, kind: ProxyKind, score: f64, digest: &str) -> Result<bool> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::Range(format!("proxy score {score} outside [0, 1]")));
        }
        if digest.is_empty() {
            return Err(Error::Config("proxy score needs a config digest".into()));
        }
        let key = (model_id.to_string(), task_id.to_string(), kind);
        match self.entries.get(&key) {
            Some(existing) if existing.config_digest == digest && existing.score == score => Ok(false),
            Some(existing) => Err(Error::DigestConflict {
                model_id: model_id.to_string(),
                task_id: task_id.to_string(),
                kind: kind.to_string(),
                existing: existing.config_digest.clone(),
                incoming: if existing.config_digest == digest {
                    format!("{digest} (different score)")
                } else {
                    digest.to_string()
                },
            }),
            None => {
                self.entries.insert(
                    key,
                    ProxyEntry {
                        score,
                        config_digest: digest.to_string(),
                    },
                );
                Ok(true)
            }
        }
    }

    pub fn entry(&self, model_id: &str, task_id: &str, kind: ProxyKind) -> Option<&ProxyEntry> {
        self.entries.get(&(model_id.to_string(), task_id.to_string(), kind))
    }

    /// Score computed under exactly `digest`, if cached.
    pub fn lookup(&self, model_id: &str, task_id: &str, kind: ProxyKind, digest: &str) -> Option<f64> {
        self.entry(model_id, task_id, kind)
            .filter(|e| e.config_digest == digest)
            .map(|e| e.score)
    }

    pub fn score(&self, model_id: &str, task_id: &str, kind: ProxyKind) -> Option<f64> {
        self.entry(model_id, task_id, kind).map(|e| e.score)
    }

    pub fn require(&self, model_id: &str, task_id: &str, kind: ProxyKind) -> Result<f64> {
        self.score(model_id, task_id, kind).ok_or_else(|| Error::MissingScore {
            model_id: model_id.to_string(),
            task_id: task_id.to_string(),
            kind: kind.to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, ProxyKind, &ProxyEntry)> {
        self.entries
            .iter()
            .map(|((m, t, k), e)| (m.as_str(), t.as_str(), *k, e))
    }

    /// Copies every entry of `other` into `self` under the usual conflict rules.
    pub fn merge(&mut self, other: &ProxyScoreTable) -> Result<usize> {
        let mut added = 0;
        for (m, t, k, e) in other.iter() {
            if self.insert(m, t, k, e.score, &e.config_digest)? {
                added += 1;
            }
        }
        Ok(added)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut table = Self::new();
        for (line, rec) in table::records(path, &PROXY_HEADER)? {
            let kind: ProxyKind = rec[2]
                .parse()
                .map_err(|_| Error::format(table::location(path, line), format!("bad proxy_kind `{}`", &rec[2])))?;
            let score: f64 = parse_field(path, line, "score", &rec[3])?;
            table.insert(rec[0].trim(), rec[1].trim(), kind, score, rec[4].trim())?;
        }
        Ok(table)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        table::write_csv(
            path,
            &PROXY_HEADER,
            self.iter().map(|(m, t, k, e)| {
                vec![
                    m.to_string(),
                    t.to_string(),
                    k.to_string(),
                    fmt6(e.score),
                    e.config_digest.clone(),
                ]
            }),
        )
    }
}

/// Shared proxy-score cache: concurrent reads, serialized writes, optional
/// backing CSV file.
#[derive(Debug, Default)]
pub struct ProxyCache {
    table: RwLock<ProxyScoreTable>,
    path: Option<PathBuf>,
    persist_lock: Mutex<()>,
}

impl ProxyCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or starts) a cache backed by `path`.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let table = if path.is_file() {
            ProxyScoreTable::load_csv(&path)?
        } else {
            ProxyScoreTable::new()
        };
        Ok(Self {
            table: RwLock::new(table),
            path: Some(path),
            persist_lock: Mutex::new(()),
        })
    }

    pub fn lookup(&self, model_id: &str, task_id: &str, kind: ProxyKind, digest: &str) -> Option<f64> {
        self.table.read().unwrap().lookup(model_id, task_id, kind, digest)
    }

    pub fn insert(&self, model_id: &str, task_id: &str, kind: ProxyKind, score: f64, digest: &str) -> Result<bool> {
        self.table.write().unwrap().insert(model_id, task_id, kind, score, digest)
    }

    pub fn snapshot(&self) -> ProxyScoreTable {
        self.table.read().unwrap().clone()
    }

    /// Writes the table to the backing file, if any.
    pub fn persist(&self) -> Result<()> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let _guard = self.persist_lock.lock().unwrap();
        let snapshot = self.snapshot();
        snapshot.save_csv(path)
    }
}
