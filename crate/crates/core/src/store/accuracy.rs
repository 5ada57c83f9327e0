use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::table::{self, fmt6, parse_field};

pub const ACCURACY_HEADER: [&str; 4] = ["model_id", "task_id", "run_index", "accuracy"];

/// Median; even counts average the two central values. `None` for an empty slice.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Cell {
    runs: BTreeMap<u32, f64>,
    aggregate: f64,
}

/// Fine-tune test accuracies per (model, task): the individual runs and their
/// median, which is the point value used by every regret computation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AccuracyTable {
    cells: BTreeMap<(String, String), Cell>,
}

impl AccuracyTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_run(&mut self, model_id: &str, task_id: &str, run_index: u32, accuracy: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(Error::Range(format!(
                "accuracy {accuracy} for ({model_id}, {task_id}) outside [0, 1]"
            )));
        }
        let cell = self
            .cells
            .entry((model_id.to_string(), task_id.to_string()))
            .or_default();
        if cell.runs.contains_key(&run_index) {
            return Err(Error::DuplicateRun {
                model_id: model_id.to_string(),
                task_id: task_id.to_string(),
                run_index,
            });
        }
        cell.runs.insert(run_index, accuracy);
        let runs: Vec<f64> = cell.runs.values().copied().collect();
        cell.aggregate = median(&runs).expect("cell has at least one run");
        Ok(())
    }

    /// Convenience for tables that carry a single run per cell.
    pub fn with_aggregates<'a, I>(cells: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str, f64)>,
    {
        let mut table = Self::new();
        for (m, t, acc) in cells {
            table.insert_run(m, t, 0, acc)?;
        }
        Ok(table)
    }

    pub fn aggregate(&self, model_id: &str, task_id: &str) -> Option<f64> {
        self.cells
            .get(&(model_id.to_string(), task_id.to_string()))
            .map(|c| c.aggregate)
    }

    /// Aggregate t(m, D), or `MissingAccuracy`.
    pub fn require(&self, model_id: &str, task_id: &str) -> Result<f64> {
        self.aggregate(model_id, task_id)
            .ok_or_else(|| Error::missing_accuracy(model_id, task_id))
    }

    pub fn runs(&self, model_id: &str, task_id: &str) -> Option<Vec<(u32, f64)>> {
        self.cells
            .get(&(model_id.to_string(), task_id.to_string()))
            .map(|c| c.runs.iter().map(|(&i, &a)| (i, a)).collect())
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// (model, task, aggregate) in lexicographic key order.
    pub fn aggregates(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.cells
            .iter()
            .map(|((m, t), c)| (m.as_str(), t.as_str(), c.aggregate))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut table = Self::new();
        for (line, rec) in table::records(path, &ACCURACY_HEADER)? {
            let run_index: u32 = parse_field(path, line, "run_index", &rec[2])?;
            let accuracy: f64 = parse_field(path, line, "accuracy", &rec[3])?;
            table.insert_run(rec[0].trim(), rec[1].trim(), run_index, accuracy)?;
        }
        Ok(table)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let rows = self.cells.iter().flat_map(|((m, t), cell)| {
            cell.runs
                .iter()
                .map(move |(i, a)| vec![m.clone(), t.clone(), i.to_string(), fmt6(*a)])
        });
        table::write_csv(path, &ACCURACY_HEADER, rows)
    }
}
