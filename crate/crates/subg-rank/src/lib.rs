//! Conditional log-linear parse disambiguation with auxiliary lexical
//! distributions.
//!
//! Given a corpus of sentences, each paired with its enumerated candidate
//! parses and a marked gold parse, this crate fits a log-linear model over
//! parse features by maximizing the regularized log pseudo-likelihood — the
//! product over sentences of the gold parse's conditional probability given
//! its yield. Externally estimated scoring functions (for example a
//! latent-class model of lexical selectional preferences trained on a much
//! larger corpus) plug in as *auxiliary features*: the log of any strictly
//! positive score becomes one more feature with its own learned weight, so
//! the estimator can scale its influence or ignore it entirely.
//!
//! The pieces:
//!
//! - [`model`] — corpus and model types, conditional distributions, the
//!   regularized objective and its exact gradient.
//! - [`optimizer`] — conjugate-gradient maximizer with backtracking line
//!   search, plus the finite-difference gradient oracle.
//! - [`auxiliary`] — strictly positive auxiliary scores as log features and
//!   their geometric-mixture reading.
//! - [`lexsel`] — the EM-trained latent-class model over dependency tuples
//!   and the lexical features derived from it.
//! - [`evaluation`] — correct-parses and pseudo-likelihood measures,
//!   pseudo-constant pruning, indistinguishable-sentence detection, k-fold
//!   cross-validation.
//! - [`synth`] — synthetic corpora with known truth, the independent
//!   conditional oracle, toy PCFG enumeration, consistency experiments.
//! - [`formats`] — the JSONL corpus, TSV tuple, and JSON model files.
//! - [`cli`] — the `subg-rank` binary's subcommands.
//!
//! ## Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run --example gradient_check      # analytic vs numeric gradient
//! cargo run --example pcfg_equivalence    # rule-weight equivalence on toy PCFGs
//! cargo run --example latent_classes      # EM training and class summaries
//! cargo run --example auxiliary_reference # log features vs reference factors
//! cargo run --example train_and_evaluate  # fit a model, score a test set
//! cargo run --example cross_validation    # seeded k-fold evaluation
//! cargo run --example consistency         # fitted vs generating conditionals
//! cargo run --example lexical_pipeline    # tuples -> lexical features -> gain
//! ```
//!
//! ## Quick start
//!
//! ```
//! use subg_rank::model::{default_sigma, DisambiguationCorpus};
//! use subg_rank::optimizer::OptimizerConfig;
//! use subg_rank::synth::{generate_corpus, SynthConfig};
//!
//! let config = SynthConfig {
//!     num_sentences: 50,
//!     min_candidates: 2,
//!     max_candidates: 4,
//!     num_features: 3,
//!     num_auxiliary: 0,
//!     max_feature_value: 4,
//!     true_lambda: vec![0.8, -0.4, 0.2],
//!     seed: 1,
//! };
//! let (corpus, _truth) = generate_corpus(&config).unwrap();
//! let sigma = default_sigma(&corpus);
//! let (model, trace) = subg_rank::fit_model(&corpus, sigma, &OptimizerConfig::default()).unwrap();
//! assert!(trace.converged);
//! assert_eq!(model.lambda.len(), corpus.manifest.len());
//! ```

pub mod auxiliary;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod formats;
pub mod lexsel;
pub mod model;
pub mod optimizer;
pub mod synth;

pub use error::{Error, Result};

use model::{objective_gradient, regularized_objective, DisambiguationCorpus, ModelParams};
use optimizer::{cg_maximize, OptimizationTrace, OptimizerConfig};

/// Fit weights on a corpus by maximizing the regularized log
/// pseudo-likelihood from an all-zero start.
///
/// The corpus should already be preprocessed (unambiguous sentences dropped,
/// pseudo-constant features pruned) the way [`evaluation`] and the CLI do
/// it; this function just runs the maximizer.
pub fn fit_model(
    corpus: &DisambiguationCorpus,
    sigma: Vec<f64>,
    config: &OptimizerConfig,
) -> Result<(ModelParams, OptimizationTrace)> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let manifest = corpus.manifest.clone();
    let dim = manifest.len();
    let evaluate = |lambda: &[f64]| {
        let params = ModelParams {
            manifest: manifest.clone(),
            lambda: lambda.to_vec(),
            sigma: sigma.clone(),
        };
        match (regularized_objective(&params, corpus), objective_gradient(&params, corpus)) {
            (Ok(objective), Ok(gradient)) => (objective, gradient),
            _ => (f64::NAN, vec![f64::NAN; dim]),
        }
    };
    let (lambda, trace) = cg_maximize(evaluate, &vec![0.0; dim], config)?;
    let model = ModelParams::new(manifest, lambda, sigma)?;
    Ok((model, trace))
}
