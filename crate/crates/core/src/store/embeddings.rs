//! `EMB1` binary embedding files.
//!
//! Layout, all integers little-endian `u32`:
//!
//! ```text
//! b"EMB1" | n | d | n_classes | labels[n] | features[n * d] (f32 LE, row-major)
//! ```

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"EMB1";
const HEADER_LEN: usize = 4 + 3 * 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

/// Frozen representations and labels for one (model, task, split).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    n_classes: u32,
    d: usize,
    labels: Vec<u32>,
    features: Vec<f32>,
}

impl EmbeddingMatrix {
    /// Validates shape, label range and finiteness. Empty matrices are rejected.
    pub fn new(n_classes: u32, d: usize, labels: Vec<u32>, features: Vec<f32>) -> Result<Self> {
        if labels.is_empty() || d == 0 {
            return Err(Error::format("embedding matrix", "empty matrices are not allowed"));
        }
        if labels.len() * d != features.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels x d={d} needs {} features, got {}",
                labels.len(),
                labels.len() * d,
                features.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::Range(format!("label {bad} not in [0, {n_classes})")));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "feature at row {}, column {} is {}",
                pos / d,
                pos % d,
                features[pos]
            )));
        }
        Ok(Self {
            n_classes,
            d,
            labels,
            features,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_classes(&self) -> u32 {
        self.n_classes
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.features.chunks_exact(self.d)
    }

    /// Size in bytes of the encoded file.
    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + 4 * self.n() + 4 * self.features.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(MAGIC);
        for v in [self.n() as u32, self.d as u32, self.n_classes] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for l in &self.labels {
            out.extend_from_slice(&l.to_le_bytes());
        }
        for f in &self.features {
            out.extend_from_slice(&f.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let fail = |detail: String| Error::format("EMB1 stream", detail);
        if bytes.len() < HEADER_LEN {
            return Err(fail(format!("truncated header ({} bytes)", bytes.len())));
        }
        if &bytes[..4] != MAGIC {
            return Err(fail(format!("bad magic {:?}", String::from_utf8_lossy(&bytes[..4]))));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let (n, d, n_classes) = (word(4) as usize, word(8) as usize, word(12));
        if n == 0 || d == 0 {
            return Err(fail(format!("empty matrix n={n} d={d}")));
        }
        let expected = n
            .checked_mul(d)
            .and_then(|nd| nd.checked_add(n))
            .and_then(|words| words.checked_mul(4))
            .and_then(|b| b.checked_add(HEADER_LEN))
            .ok_or_else(|| fail("size overflow".into()))?;
        if bytes.len() != expected {
            return Err(fail(format!("expected {expected} bytes for n={n} d={d}, found {}", bytes.len())));
        }
        let body = &bytes[HEADER_LEN..];
        let labels = body[..4 * n]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let features = body[4 * n..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(n_classes, d, labels, features)
    }
}

pub fn save_embeddings(matrix: &EmbeddingMatrix, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, matrix.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    EmbeddingMatrix::from_bytes(&bytes).map_err(|e| match e {
        Error::Format { detail, .. } => Error::format(path.display().to_string(), detail),
        other => other,
    })
}

/// A directory of `EMB1` files named `<model>__<task>__<split>.emb`.
#[derive(Debug, Clone)]
pub struct EmbeddingDir {
    root: PathBuf,
}

impl EmbeddingDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, model_id: &str, task_id: &str, split: Split) -> PathBuf {
        self.root.join(format!("{model_id}__{task_id}__{split}.emb"))
    }

    pub fn contains(&self, model_id: &str, task_id: &str, split: Split) -> bool {
        self.path(model_id, task_id, split).is_file()
    }

    pub fn load(&self, model_id: &str, task_id: &str, split: Split) -> Result<EmbeddingMatrix> {
        load_embeddings(&self.path(model_id, task_id, split))
    }

    pub fn save(&self, model_id: &str, task_id: &str, split: Split, m: &EmbeddingMatrix) -> Result<()> {
        save_embeddings(m, &self.path(model_id, task_id, split))
    }
}

/// Anything that can hand out embedding matrices by (model, task, split).
pub trait EmbeddingSource: Sync {
    fn contains(&self, model_id: &str, task_id: &str, split: Split) -> bool;
    fn load(&self, model_id: &str, task_id: &str, split: Split) -> Result<Cow<'_, EmbeddingMatrix>>;
}

impl EmbeddingSource for EmbeddingDir {
    fn contains(&self, model_id: &str, task_id: &str, split: Split) -> bool {
        EmbeddingDir::contains(self, model_id, task_id, split)
    }

    fn load(&self, model_id: &str, task_id: &str, split: Split) -> Result<Cow<'_, EmbeddingMatrix>> {
        EmbeddingDir::load(self, model_id, task_id, split).map(Cow::Owned)
    }
}

/// In-memory embeddings, keyed like an [`EmbeddingDir`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingSet {
    matrices: BTreeMap<(String, String, Split), EmbeddingMatrix>,
}

impl EmbeddingSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, model_id: &str, task_id: &str, split: Split, matrix: EmbeddingMatrix) {
        self.matrices
            .insert((model_id.to_string(), task_id.to_string(), split), matrix);
    }

    pub fn get(&self, model_id: &str, task_id: &str, split: Split) -> Option<&EmbeddingMatrix> {
        self.matrices
            .get(&(model_id.to_string(), task_id.to_string(), split))
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, Split, &EmbeddingMatrix)> {
        self.matrices
            .iter()
            .map(|((m, t, s), e)| (m.as_str(), t.as_str(), *s, e))
    }

    /// Writes every matrix into `dir`.
    pub fn save_to(&self, dir: &EmbeddingDir) -> Result<()> {
        for (m, t, s, e) in self.iter() {
            dir.save(m, t, s, e)?;
        }
        Ok(())
    }
}

impl EmbeddingSource for EmbeddingSet {
    fn contains(&self, model_id: &str, task_id: &str, split: Split) -> bool {
        self.get(model_id, task_id, split).is_some()
    }

    fn load(&self, model_id: &str, task_id: &str, split: Split) -> Result<Cow<'_, EmbeddingMatrix>> {
        self.get(model_id, task_id, split)
            .map(Cow::Borrowed)
            .ok_or_else(|| Error::MissingEmbedding(vec![(model_id.to_string(), task_id.to_string())]))
    }
}
