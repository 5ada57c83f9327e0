use crate::catalog::Pool;
use crate::error::{Error, Result};
use crate::store::AccuracyTable;

fn check_unit(value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::Range(format!("{value} is outside [0, 1]")));
    }
    Ok(())
}

fn max_aggregate<'a>(models: impl IntoIterator<Item = &'a String>, task_id: &str, table: &AccuracyTable) -> Result<f64> {
    let mut best: Option<f64> = None;
    for m in models {
        let acc = table.require(m, task_id)?;
        best = Some(best.map_or(acc, |b| b.max(acc)));
    }
    best.ok_or_else(|| Error::Config("cannot take the best of an empty model set".into()))
}

/// Best aggregate accuracy over the whole pool.
pub fn oracle_value(pool: &Pool, task_id: &str, table: &AccuracyTable) -> Result<f64> {
    if pool.is_empty() {
        return Err(Error::EmptyPool(pool.pool_id.to_string()));
    }
    max_aggregate(pool.members(), task_id, table)
}

/// Best aggregate accuracy among the selected models.
pub fn achieved_value(selection: &[String], task_id: &str, table: &AccuracyTable) -> Result<f64> {
    max_aggregate(selection, task_id, table)
}

fn check_subset(pool: &Pool, selection: &[String]) -> Result<()> {
    match selection.iter().find(|m| !pool.contains(m)) {
        Some(m) => Err(Error::UnknownModel(format!("{m} is not in pool {}", pool.pool_id))),
        None => Ok(()),
    }
}

/// Oracle value minus achieved value.
pub fn absolute_regret(pool: &Pool, selection: &[String], task_id: &str, table: &AccuracyTable) -> Result<f64> {
    check_subset(pool, selection)?;
    Ok(oracle_value(pool, task_id, table)? - achieved_value(selection, task_id, table)?)
}

/// `(s1 - s2) / (1 - min(s1, s2))`, or 0 when both are perfect.
pub fn relative_delta(s1: f64, s2: f64) -> Result<f64> {
    check_unit(s1)?;
    check_unit(s2)?;
    let floor = s1.min(s2);
    if floor == 1.0 {
        return Ok(0.0);
    }
    Ok((s1 - s2) / (1.0 - floor))
}

pub fn relative_regret(pool: &Pool, selection: &[String], task_id: &str, table: &AccuracyTable) -> Result<f64> {
    check_subset(pool, selection)?;
    relative_delta(oracle_value(pool, task_id, table)?, achieved_value(selection, task_id, table)?)
}

pub fn logit(p: f64) -> Result<f64> {
    check_unit(p)?;
    if p == 0.0 || p == 1.0 {
        return Err(Error::UndefinedValue(format!("logit({p})")));
    }
    Ok((p / (1.0 - p)).ln())
}

/// `logit(s1) - logit(s2)`.
pub fn log_odds_delta(s1: f64, s2: f64) -> Result<f64> {
    Ok(logit(s1)? - logit(s2)?)
}

/// `ln((s1 - s2) / (1 - min(s1, s2)))`, the formula as typeset in the
/// original write-up. Only defined when `s1 > s2`; kept for comparison with
/// [`log_odds_delta`].
pub fn log_of_relative_delta(s1: f64, s2: f64) -> Result<f64> {
    let delta = relative_delta(s1, s2)?;
    if delta <= 0.0 {
        return Err(Error::UndefinedValue(format!("ln of non-positive relative delta ({s1}, {s2})")));
    }
    Ok(delta.ln())
}

/// Log-odds regret, `None` when the oracle or achieved value is 0 or 1.
pub fn log_odds_regret(oracle: f64, achieved: f64) -> Result<Option<f64>> {
    match log_odds_delta(oracle, achieved) {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedValue(_)) => Ok(None),
        Err(e) => Err(e),
    }
}
