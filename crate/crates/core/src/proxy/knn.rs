//! Nearest-neighbour validation accuracy on frozen representations.

use crate::error::{Error, Result};
use crate::store::EmbeddingMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnnConfig {
    /// Number of neighbours voting. The metric is always Euclidean.
    pub k: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self { k: 1 }
    }
}

impl KnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        Ok(())
    }

    pub(crate) fn canonical(&self) -> String {
        format!("knn;k={};metric=euclidean", self.k)
    }
}

pub(crate) fn check_pair(train: &EmbeddingMatrix, val: &EmbeddingMatrix) -> Result<()> {
    if train.d() != val.d() {
        return Err(Error::DimensionMismatch(format!(
            "train has d={}, validation has d={}",
            train.d(),
            val.d()
        )));
    }
    Ok(())
}

pub(crate) fn squared_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let diff = f64::from(x) - f64::from(y);
            diff * diff
        })
        .sum()
}

/// Fraction of validation rows whose k-NN vote matches their label.
///
/// Neighbours are ordered by squared Euclidean distance, then by training row
/// index. The vote goes to the most frequent label; a tie between labels goes
/// to the one whose nearest representative comes first in that order.
pub fn knn_eval(train: &EmbeddingMatrix, val: &EmbeddingMatrix, cfg: &KnnConfig) -> Result<f64> {
    cfg.validate()?;
    check_pair(train, val)?;
    let k = cfg.k;
    if train.n() < k {
        return Err(Error::EmptySplit(format!(
            "k={k} needs at least {k} training rows, found {}",
            train.n()
        )));
    }
    let n_labels = train.n_classes().max(val.n_classes()) as usize;
    let mut nearest: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    let mut votes = vec![0usize; n_labels];
    let mut correct = 0usize;

    for (query, &truth) in val.rows().zip(val.labels()) {
        nearest.clear();
        for (j, candidate) in train.rows().enumerate() {
            let dist = squared_distance(query, candidate);
            if nearest.len() == k && dist >= nearest[k - 1].0 {
                // equal distance loses to the earlier (lower-index) row already kept
                continue;
            }
            let at = nearest.partition_point(|&(d, _)| d <= dist);
            nearest.insert(at, (dist, j));
            nearest.truncate(k);
        }
        let predicted = vote(&nearest, train.labels(), &mut votes);
        if predicted == truth {
            correct += 1;
        }
    }
    Ok(correct as f64 / val.n() as f64)
}

fn vote(nearest: &[(f64, usize)], labels: &[u32], votes: &mut [usize]) -> u32 {
    if let [(_, only)] = nearest {
        return labels[*only];
    }
    votes.iter_mut().for_each(|v| *v = 0);
    for &(_, j) in nearest {
        votes[labels[j] as usize] += 1;
    }
    let best = nearest.iter().map(|&(_, j)| votes[labels[j] as usize]).max().unwrap_or(0);
    nearest
        .iter()
        .map(|&(_, j)| labels[j])
        .find(|&l| votes[l as usize] == best)
        .expect("at least one neighbour")
}
