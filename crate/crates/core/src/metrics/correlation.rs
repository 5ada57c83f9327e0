use std::collections::BTreeMap;

use crate::catalog::ModelCatalog;
use crate::error::{Error, Result};
use crate::store::{ProxyKind, ProxyScoreTable};

/// Sample Pearson correlation. `None` when either side is constant or there
/// are fewer than two points: no correlation exists, which is different from
/// a correlation of zero.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Option<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("pearson input {v}")));
    }
    let constant = |v: &[f64]| v.iter().all(|&x| x == v[0]);
    if xs.len() < 2 || constant(xs) || constant(ys) {
        return Ok(None);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok(Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

/// Correlation between embedding width and the best kNN score reached at
/// that width, one point per distinct width.
pub fn knn_dim_correlation(task_id: &str, catalog: &ModelCatalog, scores: &ProxyScoreTable) -> Result<Option<f64>> {
    let mut best: BTreeMap<u32, f64> = BTreeMap::new();
    for m in catalog.iter() {
        let s = scores.require(&m.model_id, task_id, ProxyKind::Knn)?;
        best.entry(m.embedding_dim)
            .and_modify(|b| *b = b.max(s))
            .or_insert(s);
    }
    if best.len() < 2 {
        return Ok(None);
    }
    let dims: Vec<f64> = best.keys().map(|&d| f64::from(d)).collect();
    let values: Vec<f64> = best.values().copied().collect();
    pearson(&dims, &values)
}
