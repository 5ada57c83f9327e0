use crate::catalog::Pool;
use crate::error::{Error, Result};
use crate::store::AccuracyTable;
use crate::strategy::Ranking;

use super::regret::oracle_value;

/// Smallest prefix length of `ranking` that contains a pool-optimal model.
pub fn budget_to_zero_regret(ranking: &Ranking, pool: &Pool, task_id: &str, table: &AccuracyTable) -> Result<usize> {
    if ranking.len() != pool.len() || ranking.ordered_models.iter().any(|m| !pool.contains(m)) {
        return Err(Error::Config(format!(
            "ranking by {} is not a permutation of pool {}",
            ranking.strategy, pool.pool_id
        )));
    }
    let oracle = oracle_value(pool, task_id, table)?;
    for (i, m) in ranking.ordered_models.iter().enumerate() {
        if table.require(m, task_id)? == oracle {
            return Ok(i + 1);
        }
    }
    unreachable!("the oracle value is attained by some pool member")
}

/// Fraction of tasks solved within each budget `1..=pool_size`, given each
/// task's minimal budget.
pub fn fraction_within(min_budgets: &[usize], pool_size: usize) -> Result<Vec<f64>> {
    if min_budgets.is_empty() {
        return Err(Error::Config("budget curve needs at least one task".into()));
    }
    if let Some(&b) = min_budgets.iter().find(|&&b| b == 0 || b > pool_size) {
        return Err(Error::Range(format!("minimal budget {b} outside 1..={pool_size}")));
    }
    let n = min_budgets.len() as f64;
    Ok((1..=pool_size)
        .map(|budget| min_budgets.iter().filter(|&&b| b <= budget).count() as f64 / n)
        .collect())
}
