use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;

use crate::catalog::{Pool, PoolId, TaskGroup, TaskRecord};
use crate::error::{Error, Result};
use crate::strategy::{rank, select_top, Strategy, StrategyInputs};
use crate::table::{self, fmt6, fmt6_opt, parse_field, parse_opt_f64};

use super::budget::{budget_to_zero_regret, fraction_within};
use super::regret::{achieved_value, log_odds_regret, oracle_value, relative_delta};

pub const REGRET_HEADER: [&str; 10] = [
    "pool_id",
    "task_id",
    "task_group",
    "strategy_id",
    "budget",
    "oracle",
    "achieved",
    "abs_regret",
    "rel_regret",
    "log_odds_regret",
];
pub const BUDGET_CURVE_HEADER: [&str; 4] = ["pool_id", "strategy_id", "budget", "fraction_optimal"];
pub const MIN_BUDGET_HEADER: [&str; 4] = ["task_id", "pool_id", "strategy_id", "min_budget"];

#[derive(Debug, Clone, PartialEq)]
pub struct RegretRow {
    pub pool_id: PoolId,
    pub task_id: String,
    pub task_group: TaskGroup,
    pub strategy: Strategy,
    pub budget: usize,
    pub oracle: f64,
    pub achieved: f64,
    pub abs_regret: f64,
    pub rel_regret: f64,
    /// `None` when the oracle or achieved accuracy is exactly 0 or 1.
    pub log_odds_regret: Option<f64>,
}

impl RegretRow {
    pub fn new(
        pool_id: PoolId,
        task: &TaskRecord,
        strategy: Strategy,
        budget: usize,
        oracle: f64,
        achieved: f64,
    ) -> Result<Self> {
        if achieved > oracle {
            return Err(Error::Range(format!(
                "achieved {achieved} exceeds oracle {oracle} on {}",
                task.task_id
            )));
        }
        Ok(Self {
            pool_id,
            task_id: task.task_id.clone(),
            task_group: task.group,
            strategy,
            budget,
            oracle,
            achieved,
            abs_regret: oracle - achieved,
            rel_regret: relative_delta(oracle, achieved)?,
            log_odds_regret: log_odds_regret(oracle, achieved)?,
        })
    }

    pub fn is_zero_regret(&self) -> bool {
        self.achieved == self.oracle
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegretReport {
    pub rows: Vec<RegretRow>,
}

impl RegretReport {
    /// Orders rows by (pool, task, strategy, budget).
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            (&a.pool_id, &a.task_id, a.strategy, a.budget).cmp(&(&b.pool_id, &b.task_id, b.strategy, b.budget))
        });
    }

    pub fn find(&self, pool_id: &PoolId, task_id: &str, strategy: Strategy, budget: usize) -> Option<&RegretRow> {
        self.rows
            .iter()
            .find(|r| &r.pool_id == pool_id && r.task_id == task_id && r.strategy == strategy && r.budget == budget)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let rows = self.rows.iter().map(|r| {
            vec![
                r.pool_id.to_string(),
                r.task_id.clone(),
                r.task_group.to_string(),
                r.strategy.to_string(),
                r.budget.to_string(),
                fmt6(r.oracle),
                fmt6(r.achieved),
                fmt6(r.abs_regret),
                fmt6(r.rel_regret),
                fmt6_opt(r.log_odds_regret),
            ]
        });
        table::write_csv(path, &REGRET_HEADER, rows)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut rows = Vec::new();
        for (line, rec) in table::records(path, &REGRET_HEADER)? {
            let f = |i: usize| parse_field::<f64>(path, line, REGRET_HEADER[i], &rec[i]);
            rows.push(RegretRow {
                pool_id: rec[0].parse()?,
                task_id: rec[1].trim().to_string(),
                task_group: parse_field(path, line, "task_group", &rec[2])?,
                strategy: parse_field(path, line, "strategy_id", &rec[3])?,
                budget: parse_field(path, line, "budget", &rec[4])?,
                oracle: f(5)?,
                achieved: f(6)?,
                abs_regret: f(7)?,
                rel_regret: f(8)?,
                log_odds_regret: parse_opt_f64(path, line, "log_odds_regret", &rec[9])?,
            });
        }
        Ok(Self { rows })
    }
}

/// Fraction of tasks with zero regret at each budget `1..=pool size`.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetCurve {
    pub pool_id: PoolId,
    pub strategy: Strategy,
    /// Entry `b - 1` holds the fraction for budget `b`.
    pub fractions: Vec<f64>,
}

impl BudgetCurve {
    pub fn at(&self, budget: usize) -> Option<f64> {
        budget.checked_sub(1).and_then(|i| self.fractions.get(i)).copied()
    }
}

pub fn save_budget_curves(path: &Path, curves: &[BudgetCurve]) -> Result<()> {
    let rows = curves.iter().flat_map(|c| {
        c.fractions
            .iter()
            .enumerate()
            .map(move |(i, f)| vec![c.pool_id.to_string(), c.strategy.to_string(), (i + 1).to_string(), fmt6(*f)])
    });
    table::write_csv(path, &BUDGET_CURVE_HEADER, rows)
}

pub fn load_budget_curves(path: &Path) -> Result<Vec<BudgetCurve>> {
    let mut curves: Vec<BudgetCurve> = Vec::new();
    let mut index: HashMap<(PoolId, Strategy), usize> = HashMap::new();
    for (line, rec) in table::records(path, &BUDGET_CURVE_HEADER)? {
        let pool_id: PoolId = rec[0].parse()?;
        let strategy: Strategy = parse_field(path, line, "strategy_id", &rec[1])?;
        let budget: usize = parse_field(path, line, "budget", &rec[2])?;
        let fraction: f64 = parse_field(path, line, "fraction_optimal", &rec[3])?;
        let slot = *index.entry((pool_id.clone(), strategy)).or_insert_with(|| {
            curves.push(BudgetCurve {
                pool_id,
                strategy,
                fractions: Vec::new(),
            });
            curves.len() - 1
        });
        let curve = &mut curves[slot];
        if budget != curve.fractions.len() + 1 {
            return Err(Error::format(table::location(path, line), format!("budget {budget} out of sequence")));
        }
        curve.fractions.push(fraction);
    }
    Ok(curves)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinBudgetRow {
    pub task_id: String,
    pub pool_id: PoolId,
    pub strategy: Strategy,
    pub min_budget: usize,
}

pub fn save_min_budgets(path: &Path, rows: &[MinBudgetRow]) -> Result<()> {
    let rows = rows.iter().map(|r| {
        vec![
            r.task_id.clone(),
            r.pool_id.to_string(),
            r.strategy.to_string(),
            r.min_budget.to_string(),
        ]
    });
    table::write_csv(path, &MIN_BUDGET_HEADER, rows)
}

pub fn load_min_budgets(path: &Path) -> Result<Vec<MinBudgetRow>> {
    table::records(path, &MIN_BUDGET_HEADER)?
        .into_iter()
        .map(|(line, rec)| {
            Ok(MinBudgetRow {
                task_id: rec[0].trim().to_string(),
                pool_id: rec[1].parse()?,
                strategy: parse_field(path, line, "strategy_id", &rec[2])?,
                min_budget: parse_field(path, line, "min_budget", &rec[3])?,
            })
        })
        .collect()
}

/// Minimal budgets of `strategy` on each task, then the budget curve over them.
pub fn budget_curve(
    strategy: Strategy,
    inputs: &StrategyInputs<'_>,
    pool: &Pool,
    task_ids: &[String],
) -> Result<BudgetCurve> {
    let mins = task_ids
        .iter()
        .map(|t| budget_to_zero_regret(&rank(strategy, inputs, pool, t)?, pool, t, inputs.accuracy))
        .collect::<Result<Vec<_>>>()?;
    Ok(BudgetCurve {
        pool_id: pool.pool_id.clone(),
        strategy,
        fractions: fraction_within(&mins, pool.len())?,
    })
}

/// Everything `report` emits, before rendering.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub regret: RegretReport,
    pub curves: Vec<BudgetCurve>,
    pub min_budgets: Vec<MinBudgetRow>,
}

/// Evaluates every (pool, task, strategy) combination.
///
/// Regret rows are emitted for each requested budget; minimal budgets and
/// curves cover the full range `1..=pool size`. Output order does not depend
/// on scheduling.
pub fn build_report(
    inputs: &StrategyInputs<'_>,
    pools: &[Pool],
    tasks: &[TaskRecord],
    strategies: &[Strategy],
    budgets: &[usize],
) -> Result<Report> {
    if strategies.is_empty() {
        return Err(Error::Config("no strategies requested".into()));
    }
    if pools.is_empty() || tasks.is_empty() {
        return Err(Error::Config("report needs at least one pool and one task".into()));
    }
    if budgets.contains(&0) {
        return Err(Error::ZeroBudget);
    }
    for pool in pools {
        if let Some(&b) = budgets.iter().find(|&&b| b > pool.len()) {
            return Err(Error::BudgetTooLarge {
                budget: b,
                pool_size: pool.len(),
            });
        }
    }

    let jobs: Vec<(&Pool, &TaskRecord, Strategy)> = pools
        .iter()
        .flat_map(|p| tasks.iter().flat_map(move |t| strategies.iter().map(move |&s| (p, t, s))))
        .collect();
    let results: Vec<(Vec<RegretRow>, MinBudgetRow)> = jobs
        .par_iter()
        .map(|&(pool, task, strategy)| {
            let ranking = rank(strategy, inputs, pool, &task.task_id)?;
            let oracle = oracle_value(pool, &task.task_id, inputs.accuracy)?;
            let rows = budgets
                .iter()
                .map(|&b| {
                    let picked = select_top(&ranking, b)?;
                    let achieved = achieved_value(&picked.models, &task.task_id, inputs.accuracy)?;
                    RegretRow::new(pool.pool_id.clone(), task, strategy, b, oracle, achieved)
                })
                .collect::<Result<Vec<_>>>()?;
            let min_budget = budget_to_zero_regret(&ranking, pool, &task.task_id, inputs.accuracy)?;
            Ok((
                rows,
                MinBudgetRow {
                    task_id: task.task_id.clone(),
                    pool_id: pool.pool_id.clone(),
                    strategy,
                    min_budget,
                },
            ))
        })
        .collect::<Result<_>>()?;

    let mut report = Report::default();
    for (rows, min) in results {
        report.regret.rows.extend(rows);
        report.min_budgets.push(min);
    }
    report.regret.sort();
    report
        .min_budgets
        .sort_by(|a, b| (&a.pool_id, a.strategy, &a.task_id).cmp(&(&b.pool_id, b.strategy, &b.task_id)));

    for pool in pools {
        for &strategy in strategies {
            let mins: Vec<usize> = report
                .min_budgets
                .iter()
                .filter(|r| r.pool_id == pool.pool_id && r.strategy == strategy)
                .map(|r| r.min_budget)
                .collect();
            report.curves.push(BudgetCurve {
                pool_id: pool.pool_id.clone(),
                strategy,
                fractions: fraction_within(&mins, pool.len())?,
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(id: &str) -> TaskRecord {
        TaskRecord {
            task_id: id.into(),
            group: TaskGroup::Natural,
            n_train: 800,
            n_val: 200,
            n_test: 100,
            n_classes: 2,
        }
    }

    #[test]
    fn regret_row_values() {
        let r = RegretRow::new(PoolId::All, &task("t"), Strategy::TaskAgnostic, 1, 0.9, 0.8).unwrap();
        assert!((r.abs_regret - 0.1).abs() < 1e-12);
        assert!((r.rel_regret - 0.5).abs() < 1e-12);
        assert!(r.log_odds_regret.unwrap() > 0.0);
        let perfect = RegretRow::new(PoolId::All, &task("t"), Strategy::TaskAgnostic, 1, 1.0, 0.8).unwrap();
        assert_eq!(perfect.log_odds_regret, None);
        assert!(RegretRow::new(PoolId::All, &task("t"), Strategy::TaskAgnostic, 1, 0.5, 0.8).is_err());
    }

    #[test]
    fn csv_text_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let report = RegretReport {
            rows: vec![RegretRow::new(PoolId::Expert, &task("t"), Strategy::Hybrid(crate::store::ProxyKind::Linear), 2, 1.0, 0.75)
                .unwrap()],
        };
        let p = dir.path().join("regret.csv");
        report.save_csv(&p).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "pool_id,task_id,task_group,strategy_id,budget,oracle,achieved,abs_regret,rel_regret,log_odds_regret\n\
             Expert,t,natural,hybrid-linear,2,1.000000,0.750000,0.250000,1.000000,undefined\n"
        );
        assert_eq!(RegretReport::load_csv(&p).unwrap(), report);

        let curves = vec![BudgetCurve {
            pool_id: PoolId::All,
            strategy: Strategy::TaskAgnostic,
            fractions: vec![0.5, 1.0],
        }];
        let c = dir.path().join("curve.csv");
        save_budget_curves(&c, &curves).unwrap();
        assert_eq!(
            std::fs::read_to_string(&c).unwrap(),
            "pool_id,strategy_id,budget,fraction_optimal\nAll,agnostic,1,0.500000\nAll,agnostic,2,1.000000\n"
        );
        assert_eq!(load_budget_curves(&c).unwrap(), curves);
        assert_eq!(curves[0].at(2), Some(1.0));
        assert_eq!(curves[0].at(0), None);

        let mins = vec![MinBudgetRow {
            task_id: "caltech101".into(),
            pool_id: PoolId::All,
            strategy: Strategy::TaskAware(crate::store::ProxyKind::Linear),
            min_budget: 1,
        }];
        let m = dir.path().join("min.csv");
        save_min_budgets(&m, &mins).unwrap();
        assert_eq!(
            std::fs::read_to_string(&m).unwrap(),
            "task_id,pool_id,strategy_id,min_budget\ncaltech101,All,linear,1\n"
        );
        assert_eq!(load_min_budgets(&m).unwrap(), mins);
    }
}
