//! Why correlation between a proxy and fine-tune accuracy is the wrong target:
//! a pool where every model fine-tunes equally well has zero regret under any
//! strategy, yet no correlation can be measured at all. Conversely a single
//! outlier that a proxy finds gives zero regret with almost no correlation.

use std::path::Path;

use crate::catalog::{ModelCatalog, ModelRecord, Pool, PoolId, TaskGroup, TaskRecord};
use crate::error::Result;
use crate::store::{AccuracyTable, ProxyKind, ProxyScoreTable};
use crate::strategy::{rank, select_top, Strategy, StrategyInputs};
use crate::table::{self, fmt6, fmt6_opt};

use super::correlation::pearson;
use super::report::RegretRow;

pub const DEMO_HEADER: [&str; 6] = ["scenario", "strategy_id", "budget", "abs_regret", "rel_regret", "pearson"];

const TASK: &str = "demo";

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: &'static str,
    /// Regret of every strategy at budget 1.
    pub rows: Vec<RegretRow>,
    /// Correlation between linear proxy score and fine-tune accuracy over the pool.
    pub pearson: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoReport {
    pub identical: Scenario,
    pub outlier: Scenario,
}

impl DemoReport {
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let rows = [&self.identical, &self.outlier].into_iter().flat_map(|s| {
            s.rows.iter().map(move |r| {
                vec![
                    s.name.to_string(),
                    r.strategy.to_string(),
                    r.budget.to_string(),
                    fmt6(r.abs_regret),
                    fmt6(r.rel_regret),
                    fmt6_opt(s.pearson),
                ]
            })
        });
        table::write_csv(path, &DEMO_HEADER, rows)
    }
}

fn run_scenario(name: &'static str, accuracies: &[f64], proxy: &[f64]) -> Result<Scenario> {
    let models: Vec<ModelRecord> = (0..accuracies.len())
        .map(|i| ModelRecord {
            model_id: format!("model_{i}"),
            display_name: format!("Model {i}"),
            embedding_dim: 256 << (i % 4),
            param_count: 1_000_000 * (i as u64 + 1),
            imagenet_accuracy: Some(0.70 + 0.01 * i as f64),
            upstream_dataset_name: "upstream".into(),
            upstream_dataset_size: Some(1_000_000),
            tags: Default::default(),
        })
        .collect();
    let catalog = ModelCatalog::new(models)?;
    let pool = Pool::from_members(PoolId::Custom("appendix".into()), catalog.iter().map(|m| m.model_id.clone()).collect());
    let task = TaskRecord {
        task_id: TASK.into(),
        group: TaskGroup::Natural,
        n_train: 800,
        n_val: 200,
        n_test: 1000,
        n_classes: 2,
    };
    let mut accuracy = AccuracyTable::new();
    let mut scores = ProxyScoreTable::new();
    for (m, (&acc, &score)) in catalog.iter().zip(accuracies.iter().zip(proxy)) {
        accuracy.insert_run(&m.model_id, TASK, 0, acc)?;
        for kind in [ProxyKind::Linear, ProxyKind::Knn] {
            scores.insert(&m.model_id, TASK, kind, score, "demo")?;
        }
    }
    let task_ids = vec![TASK.to_string()];
    let inputs = StrategyInputs {
        catalog: &catalog,
        proxy_scores: &scores,
        accuracy: &accuracy,
        task_ids: &task_ids,
    };
    let oracle = accuracies.iter().copied().fold(f64::MIN, f64::max);
    let rows = Strategy::ALL
        .iter()
        .map(|&s| {
            let picked = select_top(&rank(s, &inputs, &pool, TASK)?, 1)?;
            let achieved = accuracy.require(&picked.models[0], TASK)?;
            RegretRow::new(pool.pool_id.clone(), &task, s, 1, oracle, achieved)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Scenario {
        name,
        rows,
        pearson: pearson(proxy, accuracies)?,
    })
}

/// Builds and evaluates both counterexample pools.
pub fn correlation_limit_demo() -> Result<DemoReport> {
    let identical = run_scenario(
        "identical",
        &[0.5; 6],
        &[0.31, 0.72, 0.55, 0.18, 0.64, 0.47],
    )?;
    let mut accuracies = vec![0.5; 10];
    accuracies[0] = 0.9;
    let mut proxy = vec![0.8; 10];
    proxy[0] = 0.81;
    proxy[9] = 0.0;
    let outlier = run_scenario("outlier", &accuracies, &proxy)?;
    Ok(DemoReport { identical, outlier })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_pool_has_no_regret_and_no_correlation() {
        let demo = correlation_limit_demo().unwrap();
        assert_eq!(demo.identical.rows.len(), Strategy::ALL.len());
        assert!(demo.identical.rows.iter().all(|r| r.abs_regret == 0.0 && r.rel_regret == 0.0));
        assert_eq!(demo.identical.pearson, None);
    }

    #[test]
    fn outlier_found_by_proxy_with_weak_correlation() {
        let demo = correlation_limit_demo().unwrap();
        let linear = demo
            .outlier
            .rows
            .iter()
            .find(|r| r.strategy == Strategy::TaskAware(ProxyKind::Linear))
            .unwrap();
        assert_eq!(linear.abs_regret, 0.0);
        // by hand: sxy = 0.0356, sxx = 0.57769, syy = 0.144
        let expected = 0.0356 / (0.57769f64 * 0.144).sqrt();
        assert!((demo.outlier.pearson.unwrap() - expected).abs() < 1e-9);
        assert!(demo.outlier.pearson.unwrap().abs() < 0.2);
    }
}
