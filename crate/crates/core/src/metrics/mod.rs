//! Regret of a selection against the pool oracle, budget analyses and
//! correlation diagnostics.

mod budget;
mod correlation;
mod demo;
mod regret;
mod report;

pub use budget::{budget_to_zero_regret, fraction_within};
pub use correlation::{knn_dim_correlation, pearson};
pub use demo::{correlation_limit_demo, DemoReport, Scenario, DEMO_HEADER};
pub use regret::{
    absolute_regret, achieved_value, log_odds_delta, log_odds_regret, log_of_relative_delta, logit, oracle_value,
    relative_delta, relative_regret,
};
pub use report::{
    budget_curve, build_report, load_budget_curves, load_min_budgets, save_budget_curves, save_min_budgets,
    BudgetCurve, MinBudgetRow, RegretReport, RegretRow, Report, BUDGET_CURVE_HEADER, MIN_BUDGET_HEADER,
    REGRET_HEADER,
};
