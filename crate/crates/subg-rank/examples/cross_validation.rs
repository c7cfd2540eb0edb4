//! Seeded k-fold cross-validation with per-split preprocessing, printing a
//! per-fold table and the cumulative scores.
//!
//! ```bash
//! cargo run --example cross_validation
//! ```

use subg_rank::evaluation::{drop_unambiguous, k_fold_cv};
use subg_rank::model::DisambiguationCorpus;
use subg_rank::optimizer::OptimizerConfig;
use subg_rank::synth::{generate_corpus, SynthConfig};

fn main() -> subg_rank::Result<()> {
    let config = SynthConfig {
        num_sentences: 324,
        min_candidates: 1,
        max_candidates: 5,
        num_features: 6,
        num_auxiliary: 0,
        max_feature_value: 4,
        true_lambda: SynthConfig::random_lambda(6, 1.0, 9),
        seed: 31,
    };
    let (corpus, _) = generate_corpus(&config)?;
    let ambiguous = drop_unambiguous(&corpus);
    println!("{} of {} sentences are ambiguous", ambiguous.len(), corpus.len());

    let optimizer = OptimizerConfig::default();
    let trainer = |train: &DisambiguationCorpus, sigma: &[f64]| {
        subg_rank::fit_model(train, sigma.to_vec(), &optimizer).map(|(model, _)| model)
    };
    let (folds, cumulative) = k_fold_cv(&ambiguous, 10, 7, trainer)?;

    println!("{:<8} {:>6} {:>18} {:>9} {:>10}", "fold", "test", "indistinguishable", "correct", "-log PL");
    for fold in &folds {
        println!(
            "{:<8} {:>6} {:>18} {:>9.2} {:>10.2}",
            fold.fold_index,
            fold.test_ids.len(),
            fold.report.indistinguishable,
            fold.report.correct_credit,
            fold.report.neg_log_pl
        );
    }
    println!(
        "{:<8} {:>6} {:>18} {:>9.2} {:>10.2}",
        "total",
        cumulative.num_sentences,
        cumulative.indistinguishable,
        cumulative.correct_credit,
        cumulative.neg_log_pl
    );
    Ok(())
}
