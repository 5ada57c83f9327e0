//! Budgeted selection of pretrained models for fine-tuning.
//!
//! Given a catalog of models, cheap proxy scores computed on their frozen
//! representations and (for evaluation) fine-tune accuracies, pick `B` models
//! per downstream task and measure how far the best of them falls short of
//! the best model in the pool.

pub mod catalog;
pub mod error;
pub mod metrics;
pub mod proxy;
pub mod store;
pub mod strategy;
pub mod synth;
pub mod table;

pub use catalog::{build_pool, ModelCatalog, ModelRecord, Pool, PoolId, PoolSpec, TaskCatalog, TaskGroup, TaskRecord};
pub use error::{Error, Result};
pub use store::{AccuracyTable, EmbeddingMatrix, ProxyKind, ProxyScoreTable};
pub use strategy::{Ranking, Selection, Strategy, StrategyInputs};
