use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pool {0} has no members after filtering")]
    EmptyPool(String),

    #[error("unknown model id `{0}`")]
    UnknownModel(String),

    #[error("unknown task id `{0}`")]
    UnknownTask(String),

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("format error in {location}: {detail}")]
    Format { location: String, detail: String },

    #[error("value out of range: {0}")]
    Range(String),

    #[error("non-finite value: {0}")]
    Numeric(String),

    #[error("duplicate run {run_index} for ({model_id}, {task_id})")]
    DuplicateRun {
        model_id: String,
        task_id: String,
        run_index: u32,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty split: {0}")]
    EmptySplit(String),

    #[error("missing embeddings for {}", format_pairs(.0))]
    MissingEmbedding(Vec<(String, String)>),

    #[error("missing {kind} proxy score for ({model_id}, {task_id})")]
    MissingScore {
        model_id: String,
        task_id: String,
        kind: String,
    },

    #[error("missing fine-tune accuracy for ({model_id}, {task_id})")]
    MissingAccuracy { model_id: String, task_id: String },

    #[error("budget {budget} exceeds pool size {pool_size}")]
    BudgetTooLarge { budget: usize, pool_size: usize },

    #[error("budget must be at least 1")]
    ZeroBudget,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("undefined value: {0}")]
    UndefinedValue(String),

    #[error(
        "cached score for ({model_id}, {task_id}, {kind}) was computed under digest {existing}, refusing to overwrite with {incoming}"
    )]
    DigestConflict {
        model_id: String,
        task_id: String,
        kind: String,
        existing: String,
        incoming: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn format_pairs(pairs: &[(String, String)]) -> String {
    pairs
        .iter()
        .map(|(m, t)| format!("({m}, {t})"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    /// Stable machine-readable code, used by the CLI's `ERROR <code>: <detail>` line.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyPool(_) => "empty_pool",
            Error::UnknownModel(_) => "unknown_model",
            Error::UnknownTask(_) => "unknown_task",
            Error::DuplicateId(_) => "duplicate_id",
            Error::Format { .. } => "format",
            Error::Range(_) => "range",
            Error::Numeric(_) => "numeric",
            Error::DuplicateRun { .. } => "duplicate_run",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::EmptySplit(_) => "empty_split",
            Error::MissingEmbedding(_) => "missing_embedding",
            Error::MissingScore { .. } => "missing_score",
            Error::MissingAccuracy { .. } => "missing_accuracy",
            Error::BudgetTooLarge { .. } => "budget_too_large",
            Error::ZeroBudget => "zero_budget",
            Error::LengthMismatch(..) => "length_mismatch",
            Error::UndefinedValue(_) => "undefined_value",
            Error::DigestConflict { .. } => "digest_conflict",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn format(location: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Format {
            location: location.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn missing_accuracy(model_id: &str, task_id: &str) -> Self {
        Error::MissingAccuracy {
            model_id: model_id.to_string(),
            task_id: task_id.to_string(),
        }
    }
}
