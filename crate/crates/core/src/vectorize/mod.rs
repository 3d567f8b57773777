//! Numeric features for token sequences: sparse bag-of-words counts and dense
//! subword-embedding document vectors, plus the text vector file format.

mod embed;
mod sparse;
mod subword;
mod vocab;

use thiserror::Error;

pub use embed::{
    embed_document, load_vectors, save_vectors, DocumentEmbedding, EmbeddingTable, TokenEmbedder,
    TokenEmbedding,
};
pub use sparse::SparseVector;
pub use subword::{
    fnv1a, ngram_decompose, pair_gradients, pair_loss, train_skipgram, Composition,
    PairGradients, SubwordEmbeddingModel, SubwordParams, TrainReport,
};
pub use vocab::{bow_transform, build_vocabulary, BowVectorizer, BowWeighting, Vocabulary};

#[derive(Debug, Error)]
pub enum VectorizeError {
    #[error("corpus has no tokens")]
    EmptyCorpus,
    #[error("no token reaches min_count {min_count}")]
    EmptyVocabulary { min_count: u64 },
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
    #[error("invalid sparse vector: {0}")]
    InvalidSparse(String),
    #[error("invalid embedding parameters: {0}")]
    InvalidParams(String),
    #[error("non-finite loss at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("malformed vector file header: {0}")]
    MalformedHeader(String),
    #[error("vector file line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("duplicate token {token:?}{}", line.map(|l| format!(" on line {l}")).unwrap_or_default())]
    DuplicateToken { token: String, line: Option<usize> },
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
