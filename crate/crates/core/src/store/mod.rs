//! Persistence for embeddings, fine-tune accuracies and cached proxy scores.

mod accuracy;
mod embeddings;
mod proxy_scores;

pub use accuracy::{median, AccuracyTable, ACCURACY_HEADER};
pub use embeddings::{load_embeddings, save_embeddings, EmbeddingDir, EmbeddingMatrix, EmbeddingSet, EmbeddingSource, Split, MAGIC};
pub use proxy_scores::{ProxyCache, ProxyEntry, ProxyKind, ProxyScoreTable, PROXY_HEADER};
