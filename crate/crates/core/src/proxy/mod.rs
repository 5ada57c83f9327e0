//! Task-aware proxy scores computed on frozen representations.

mod knn;
mod linear;

pub use knn::{knn_eval, KnnConfig};
pub use linear::{linear_eval, linear_eval_repeats, train_probe, LinearEvalConfig, LinearProbe};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::catalog::{ModelCatalog, Pool};
use crate::error::{Error, Result};
use crate::store::{EmbeddingMatrix, EmbeddingSource, ProxyCache, ProxyKind, ProxyScoreTable, Split};
use crate::table::quantize6;

/// Evaluation protocol for one proxy kind.
#[derive(Debug, Clone, PartialEq)]
pub enum ProxyConfig {
    Knn(KnnConfig),
    Linear(LinearEvalConfig),
}

impl ProxyConfig {
    pub fn kind(&self) -> ProxyKind {
        match self {
            ProxyConfig::Knn(_) => ProxyKind::Knn,
            ProxyConfig::Linear(_) => ProxyKind::Linear,
        }
    }

    pub fn default_for(kind: ProxyKind) -> Self {
        match kind {
            ProxyKind::Knn => ProxyConfig::Knn(KnnConfig::default()),
            ProxyKind::Linear => ProxyConfig::Linear(LinearEvalConfig::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProxyConfig::Knn(c) => c.validate(),
            ProxyConfig::Linear(c) => c.validate(),
        }
    }

    /// Canonical text form; every field that can change a score appears in it.
    pub fn canonical(&self) -> String {
        match self {
            ProxyConfig::Knn(c) => c.canonical(),
            ProxyConfig::Linear(c) => c.canonical(),
        }
    }

    /// First 16 hex digits of the SHA-256 of [`canonical`](Self::canonical).
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical().as_bytes());
        hex::encode(&hash[..8])
    }

    /// Scores one (train, val) pair.
    pub fn evaluate(&self, train: &EmbeddingMatrix, val: &EmbeddingMatrix) -> Result<f64> {
        match self {
            ProxyConfig::Knn(c) => knn_eval(train, val, c),
            ProxyConfig::Linear(c) => linear_eval(train, val, c),
        }
    }
}

/// Result of [`score_pool`]: the scores plus cache accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolScores {
    pub scores: ProxyScoreTable,
    pub computed: usize,
    pub reused: usize,
}

/// Scores every pool member on `task_id`, reusing cache entries whose digest
/// matches `config` and writing fresh ones back.
///
/// Scores are rounded to the 6 decimals the cache file stores, so a cached
/// value and a freshly computed one are always identical.
pub fn score_pool(
    pool: &Pool,
    task_id: &str,
    config: &ProxyConfig,
    catalog: &ModelCatalog,
    embeddings: &dyn EmbeddingSource,
    cache: &ProxyCache,
) -> Result<PoolScores> {
    config.validate()?;
    let kind = config.kind();
    let digest = config.digest();

    let missing: Vec<(String, String)> = pool
        .members()
        .iter()
        .filter(|m| {
            !(embeddings.contains(m, task_id, Split::Train) && embeddings.contains(m, task_id, Split::Val))
        })
        .map(|m| (m.clone(), task_id.to_string()))
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingEmbedding(missing));
    }

    let outcomes: Vec<(f64, bool)> = pool
        .members()
        .par_iter()
        .map(|model_id| -> Result<(f64, bool)> {
            if let Some(score) = cache.lookup(model_id, task_id, kind, &digest) {
                return Ok((score, false));
            }
            let expected_dim = catalog.get(model_id)?.embedding_dim as usize;
            let train = embeddings.load(model_id, task_id, Split::Train)?;
            let val = embeddings.load(model_id, task_id, Split::Val)?;
            for m in [&*train, &*val] {
                if m.d() != expected_dim {
                    return Err(Error::DimensionMismatch(format!(
                        "{model_id} on {task_id}: embeddings have d={}, catalog says {expected_dim}",
                        m.d()
                    )));
                }
            }
            let score = quantize6(config.evaluate(&train, &val)?);
            cache.insert(model_id, task_id, kind, score, &digest)?;
            Ok((score, true))
        })
        .collect::<Result<_>>()?;

    let mut scores = ProxyScoreTable::new();
    let mut computed = 0;
    for (model_id, (score, fresh)) in pool.members().iter().zip(outcomes) {
        scores.insert(model_id, task_id, kind, score, &digest)?;
        computed += usize::from(fresh);
    }
    Ok(PoolScores {
        computed,
        reused: pool.len() - computed,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_pool, ModelRecord, PoolId, PoolSpec};
    use crate::store::EmbeddingSet;

    fn setup() -> (ModelCatalog, EmbeddingSet) {
        let catalog = ModelCatalog::new(vec![ModelRecord {
            model_id: "m".into(),
            display_name: "m".into(),
            embedding_dim: 2,
            param_count: 1,
            imagenet_accuracy: None,
            upstream_dataset_name: "x".into(),
            upstream_dataset_size: None,
            tags: Default::default(),
        }])
        .unwrap();
        let mut set = EmbeddingSet::new();
        let m = EmbeddingMatrix::new(2, 2, vec![0, 1, 0], vec![0.0, 0.0, 5.0, 5.0, 0.5, 0.0]).unwrap();
        set.insert("m", "t", Split::Train, m.clone());
        set.insert("m", "t", Split::Val, m);
        (catalog, set)
    }

    #[test]
    fn digests_differ_by_config() {
        let a = ProxyConfig::Knn(KnnConfig { k: 1 });
        let b = ProxyConfig::Knn(KnnConfig { k: 3 });
        let c = ProxyConfig::Linear(LinearEvalConfig::default());
        let d = ProxyConfig::Linear(LinearEvalConfig {
            seed: 1,
            ..Default::default()
        });
        let digests = [a.digest(), b.digest(), c.digest(), d.digest()];
        for i in 0..4 {
            assert_eq!(digests[i].len(), 16);
            for j in i + 1..4 {
                assert_ne!(digests[i], digests[j]);
            }
        }
        assert_eq!(a.digest(), ProxyConfig::Knn(KnnConfig::default()).digest());
    }

    #[test]
    fn single_member_pool_and_cache_reuse() {
        let (catalog, set) = setup();
        let pool = build_pool(&catalog, &PoolSpec::builtin(PoolId::All)).unwrap();
        let cache = ProxyCache::in_memory();
        let cfg = ProxyConfig::default_for(ProxyKind::Knn);
        let first = score_pool(&pool, "t", &cfg, &catalog, &set, &cache).unwrap();
        assert_eq!((first.computed, first.reused, first.scores.len()), (1, 0, 1));
        let second = score_pool(&pool, "t", &cfg, &catalog, &set, &cache).unwrap();
        assert_eq!((second.computed, second.reused), (0, 1));
        assert_eq!(first.scores, second.scores);
    }

    #[test]
    fn missing_embeddings_are_listed() {
        let (catalog, set) = setup();
        let pool = build_pool(&catalog, &PoolSpec::builtin(PoolId::All)).unwrap();
        let err = score_pool(&pool, "other", &ProxyConfig::default_for(ProxyKind::Knn), &catalog, &set, &ProxyCache::in_memory())
            .unwrap_err();
        match err {
            Error::MissingEmbedding(list) => assert_eq!(list, vec![("m".to_string(), "other".to_string())]),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn dimension_checked_against_catalog() {
        let (catalog, mut set) = setup();
        let wide = EmbeddingMatrix::new(2, 3, vec![0], vec![0.0; 3]).unwrap();
        set.insert("m", "w", Split::Train, wide.clone());
        set.insert("m", "w", Split::Val, wide);
        let pool = build_pool(&catalog, &PoolSpec::builtin(PoolId::All)).unwrap();
        let err = score_pool(&pool, "w", &ProxyConfig::default_for(ProxyKind::Knn), &catalog, &set, &ProxyCache::in_memory());
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
    }
}
