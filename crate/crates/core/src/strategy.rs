//! Model-search strategies: each turns a pool (and possibly a task) into a
//! full ranking whose top-B prefix is the set of models to fine-tune.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::catalog::{ModelCatalog, ModelRecord, Pool, PoolId};
use crate::error::{Error, Result};
use crate::store::{AccuracyTable, ProxyKind, ProxyScoreTable};
use crate::table::{self, parse_field};

pub const SELECTION_HEADER: [&str; 6] = ["strategy_id", "pool_id", "task_id", "budget", "rank", "model_id"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Metadata only: ImageNet accuracy, then upstream size, then parameter count.
    TaskAgnostic,
    /// Descending proxy score on the downstream task.
    TaskAware(ProxyKind),
    /// Task-agnostic top-1, then the best task-aware models not yet picked.
    Hybrid(ProxyKind),
    /// Mean fine-tune accuracy over all tasks. Needs the answers, so it is a
    /// reference point rather than a usable strategy.
    OracleTaskAgnostic,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::TaskAgnostic,
        Strategy::TaskAware(ProxyKind::Linear),
        Strategy::TaskAware(ProxyKind::Knn),
        Strategy::Hybrid(ProxyKind::Linear),
        Strategy::Hybrid(ProxyKind::Knn),
        Strategy::OracleTaskAgnostic,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Strategy::TaskAgnostic => "agnostic",
            Strategy::TaskAware(ProxyKind::Linear) => "linear",
            Strategy::TaskAware(ProxyKind::Knn) => "knn",
            Strategy::Hybrid(ProxyKind::Linear) => "hybrid-linear",
            Strategy::Hybrid(ProxyKind::Knn) => "hybrid-knn",
            Strategy::OracleTaskAgnostic => "oracle",
        }
    }

    /// Proxy kind the strategy reads, if any.
    pub fn proxy_kind(self) -> Option<ProxyKind> {
        match self {
            Strategy::TaskAware(k) | Strategy::Hybrid(k) => Some(k),
            _ => None,
        }
    }

    pub fn is_task_specific(self) -> bool {
        self.proxy_kind().is_some()
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "agnostic" | "task-agnostic" => Strategy::TaskAgnostic,
            "linear" | "task-aware-linear" => Strategy::TaskAware(ProxyKind::Linear),
            "knn" | "task-aware-knn" => Strategy::TaskAware(ProxyKind::Knn),
            "hybrid-linear" | "hybrid" => Strategy::Hybrid(ProxyKind::Linear),
            "hybrid-knn" => Strategy::Hybrid(ProxyKind::Knn),
            "oracle" | "oracle-task-agnostic" => Strategy::OracleTaskAgnostic,
            other => return Err(Error::Config(format!("unknown strategy `{other}`"))),
        })
    }
}

/// A full permutation of a pool, best first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking {
    pub strategy: Strategy,
    pub pool_id: PoolId,
    /// `None` for rankings that do not depend on the task.
    pub task_id: Option<String>,
    pub ordered_models: Vec<String>,
}

impl Ranking {
    pub fn len(&self) -> usize {
        self.ordered_models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordered_models.is_empty()
    }

    pub fn top(&self) -> &str {
        &self.ordered_models[0]
    }

    /// 1-based position of `model_id`.
    pub fn rank_of(&self, model_id: &str) -> Option<usize> {
        self.ordered_models.iter().position(|m| m == model_id).map(|p| p + 1)
    }

    /// Copy of this ranking attributed to a specific task.
    pub fn for_task(&self, task_id: &str) -> Ranking {
        Ranking {
            task_id: Some(task_id.to_string()),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub strategy: Strategy,
    pub pool_id: PoolId,
    pub task_id: Option<String>,
    pub budget: usize,
    /// Exactly `budget` distinct pool members, in pick order.
    pub models: Vec<String>,
}

impl Selection {
    pub fn contains(&self, model_id: &str) -> bool {
        self.models.iter().any(|m| m == model_id)
    }
}

fn agnostic_cmp(a: &ModelRecord, b: &ModelRecord) -> Ordering {
    // descending ImageNet accuracy, models without one after all models with one
    let by_accuracy = match (a.imagenet_accuracy, b.imagenet_accuracy) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => match (a.upstream_dataset_size, b.upstream_dataset_size) {
            (Some(x), Some(y)) => y.cmp(&x),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        },
    };
    by_accuracy.then_with(|| b.param_count.cmp(&a.param_count))
}

fn pool_records<'a>(pool: &Pool, catalog: &'a ModelCatalog) -> Result<Vec<(usize, &'a ModelRecord)>> {
    if pool.is_empty() {
        return Err(Error::EmptyPool(pool.pool_id.to_string()));
    }
    pool.members()
        .iter()
        .map(|m| Ok((catalog.position(m)?, catalog.get(m)?)))
        .collect()
}

pub fn rank_task_agnostic(pool: &Pool, catalog: &ModelCatalog) -> Result<Ranking> {
    let mut records = pool_records(pool, catalog)?;
    records.sort_by(|(pa, a), (pb, b)| agnostic_cmp(a, b).then(pa.cmp(pb)));
    Ok(Ranking {
        strategy: Strategy::TaskAgnostic,
        pool_id: pool.pool_id.clone(),
        task_id: None,
        ordered_models: records.into_iter().map(|(_, m)| m.model_id.clone()).collect(),
    })
}

pub fn rank_task_aware(
    pool: &Pool,
    catalog: &ModelCatalog,
    task_id: &str,
    scores: &ProxyScoreTable,
    kind: ProxyKind,
) -> Result<Ranking> {
    let agnostic = rank_task_agnostic(pool, catalog)?;
    let mut scored: Vec<(f64, usize, &String)> = agnostic
        .ordered_models
        .iter()
        .enumerate()
        .map(|(pos, m)| Ok((scores.require(m, task_id, kind)?, pos, m)))
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(Ranking {
        strategy: Strategy::TaskAware(kind),
        pool_id: pool.pool_id.clone(),
        task_id: Some(task_id.to_string()),
        ordered_models: scored.into_iter().map(|(_, _, m)| m.clone()).collect(),
    })
}

/// The task-agnostic top-1 followed by the task-aware order without it. Every
/// hybrid selection is a prefix of this ranking.
pub fn rank_hybrid(
    pool: &Pool,
    catalog: &ModelCatalog,
    task_id: &str,
    scores: &ProxyScoreTable,
    kind: ProxyKind,
) -> Result<Ranking> {
    let agnostic = rank_task_agnostic(pool, catalog)?;
    let aware = rank_task_aware(pool, catalog, task_id, scores, kind)?;
    let first = agnostic.top().to_string();
    let mut ordered = Vec::with_capacity(pool.len());
    ordered.push(first.clone());
    ordered.extend(aware.ordered_models.into_iter().filter(|m| *m != first));
    Ok(Ranking {
        strategy: Strategy::Hybrid(kind),
        pool_id: pool.pool_id.clone(),
        task_id: Some(task_id.to_string()),
        ordered_models: ordered,
    })
}

pub fn select_hybrid(
    pool: &Pool,
    catalog: &ModelCatalog,
    task_id: &str,
    scores: &ProxyScoreTable,
    kind: ProxyKind,
    budget: usize,
) -> Result<Selection> {
    check_budget(budget, pool.len())?;
    select_top(&rank_hybrid(pool, catalog, task_id, scores, kind)?, budget)
}

/// Ranks by mean aggregate accuracy over `task_ids`; ties by catalog order.
pub fn rank_oracle_task_agnostic(
    pool: &Pool,
    catalog: &ModelCatalog,
    task_ids: &[String],
    accuracy: &AccuracyTable,
) -> Result<Ranking> {
    if task_ids.is_empty() {
        return Err(Error::Config("oracle ranking needs at least one task".into()));
    }
    let records = pool_records(pool, catalog)?;
    let mut means: Vec<(f64, usize, &String)> = records
        .iter()
        .map(|(pos, m)| {
            let total = task_ids
                .iter()
                .map(|t| accuracy.require(&m.model_id, t))
                .sum::<Result<f64>>()?;
            Ok((total / task_ids.len() as f64, *pos, &m.model_id))
        })
        .collect::<Result<_>>()?;
    means.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(Ranking {
        strategy: Strategy::OracleTaskAgnostic,
        pool_id: pool.pool_id.clone(),
        task_id: None,
        ordered_models: means.into_iter().map(|(_, _, m)| m.clone()).collect(),
    })
}

fn check_budget(budget: usize, pool_size: usize) -> Result<()> {
    if budget == 0 {
        return Err(Error::ZeroBudget);
    }
    if budget > pool_size {
        return Err(Error::BudgetTooLarge { budget, pool_size });
    }
    Ok(())
}

pub fn select_top(ranking: &Ranking, budget: usize) -> Result<Selection> {
    check_budget(budget, ranking.len())?;
    Ok(Selection {
        strategy: ranking.strategy,
        pool_id: ranking.pool_id.clone(),
        task_id: ranking.task_id.clone(),
        budget,
        models: ranking.ordered_models[..budget].to_vec(),
    })
}

/// Everything a strategy may read.
#[derive(Debug, Clone, Copy)]
pub struct StrategyInputs<'a> {
    pub catalog: &'a ModelCatalog,
    pub proxy_scores: &'a ProxyScoreTable,
    pub accuracy: &'a AccuracyTable,
    /// Tasks averaged by the oracle strategy.
    pub task_ids: &'a [String],
}

/// Full ranking of `pool` by `strategy` for `task_id`.
pub fn rank(strategy: Strategy, inputs: &StrategyInputs<'_>, pool: &Pool, task_id: &str) -> Result<Ranking> {
    let ranking = match strategy {
        Strategy::TaskAgnostic => rank_task_agnostic(pool, inputs.catalog)?,
        Strategy::TaskAware(kind) => rank_task_aware(pool, inputs.catalog, task_id, inputs.proxy_scores, kind)?,
        Strategy::Hybrid(kind) => rank_hybrid(pool, inputs.catalog, task_id, inputs.proxy_scores, kind)?,
        Strategy::OracleTaskAgnostic => {
            rank_oracle_task_agnostic(pool, inputs.catalog, inputs.task_ids, inputs.accuracy)?
        }
    };
    Ok(ranking.for_task(task_id))
}

pub fn save_selections(path: &Path, selections: &[Selection]) -> Result<()> {
    let rows = selections.iter().flat_map(|s| {
        s.models.iter().enumerate().map(move |(i, m)| {
            vec![
                s.strategy.to_string(),
                s.pool_id.to_string(),
                s.task_id.clone().unwrap_or_default(),
                s.budget.to_string(),
                (i + 1).to_string(),
                m.clone(),
            ]
        })
    });
    table::write_csv(path, &SELECTION_HEADER, rows)
}

/// Reads selections back, grouping consecutive rows that share
/// (strategy, pool, task, budget).
pub fn load_selections(path: &Path) -> Result<Vec<Selection>> {
    let mut out: Vec<Selection> = Vec::new();
    let mut index: HashMap<(Strategy, String, String, usize), usize> = HashMap::new();
    for (line, rec) in table::records(path, &SELECTION_HEADER)? {
        let strategy: Strategy = rec[0]
            .parse()
            .map_err(|_| Error::format(table::location(path, line), format!("bad strategy `{}`", &rec[0])))?;
        let pool_id: PoolId = rec[1].parse()?;
        let task = rec[2].trim().to_string();
        let budget: usize = parse_field(path, line, "budget", &rec[3])?;
        let rank: usize = parse_field(path, line, "rank", &rec[4])?;
        let key = (strategy, pool_id.to_string(), task.clone(), budget);
        let slot = *index.entry(key).or_insert_with(|| {
            out.push(Selection {
                strategy,
                pool_id,
                task_id: (!task.is_empty()).then_some(task),
                budget,
                models: Vec::new(),
            });
            out.len() - 1
        });
        let sel = &mut out[slot];
        if rank != sel.models.len() + 1 {
            return Err(Error::format(table::location(path, line), format!("rank {rank} out of sequence")));
        }
        sel.models.push(rec[5].trim().to_string());
    }
    if let Some(bad) = out.iter().find(|s| s.models.len() != s.budget) {
        return Err(Error::format(
            path.display().to_string(),
            format!("selection {} / {} has {} rows for budget {}", bad.strategy, bad.pool_id, bad.models.len(), bad.budget),
        ));
    }
    Ok(out)
}
