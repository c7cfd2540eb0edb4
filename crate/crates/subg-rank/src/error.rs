//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid feature manifest: {0}")]
    InvalidManifest(String),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("sentence {sentence}: {message}")]
    InvalidSentence { sentence: String, message: String },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("sentence {sentence}, candidate {candidate}: score is not finite")]
    NonFiniteScore { sentence: String, candidate: String },

    #[error(
        "sentence {sentence}, candidate {candidate}: auxiliary score {name} \
         must be strictly positive, got {value}"
    )]
    StrictPositivity {
        name: String,
        sentence: String,
        candidate: String,
        value: f64,
    },

    #[error("sentence {sentence}, candidate {candidate}: no {name} score provided")]
    MissingAuxScore {
        name: String,
        sentence: String,
        candidate: String,
    },

    #[error("conditional undefined: governor-relation pair ({governor}, {relation}) has zero marginal")]
    UndefinedConditional { governor: String, relation: String },

    #[error("sentence {sentence}: gold parse has conditional probability zero")]
    ZeroGoldProbability { sentence: String },

    #[error("cannot split {sentences} sentences into {folds} folds")]
    BadFoldCount { folds: usize, sentences: usize },

    #[error("line {line}: {message}")]
    ParseLine { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
