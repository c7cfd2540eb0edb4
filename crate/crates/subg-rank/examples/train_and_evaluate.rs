//! Sample a corpus from a known model, fit weights on one half, and score
//! the other half with the correct-parses and pseudo-likelihood measures.
//!
//! ```bash
//! cargo run --example train_and_evaluate
//! ```

use subg_rank::evaluation::{drop_unambiguous, evaluate, prune_pseudo_constant};
use subg_rank::model::{default_sigma, DisambiguationCorpus};
use subg_rank::optimizer::OptimizerConfig;
use subg_rank::synth::{generate_corpus, SynthConfig};

fn main() -> subg_rank::Result<()> {
    let config = SynthConfig {
        num_sentences: 400,
        min_candidates: 2,
        max_candidates: 4,
        num_features: 5,
        num_auxiliary: 0,
        max_feature_value: 4,
        true_lambda: SynthConfig::random_lambda(5, 1.0, 123),
        seed: 17,
    };
    let (corpus, truth) = generate_corpus(&config)?;

    let split = corpus.len() / 2;
    let train = DisambiguationCorpus {
        manifest: corpus.manifest.clone(),
        sentences: corpus.sentences[..split].to_vec(),
    };
    let test = DisambiguationCorpus {
        manifest: corpus.manifest.clone(),
        sentences: corpus.sentences[split..].to_vec(),
    };

    let train = drop_unambiguous(&train);
    let (train, removed) = prune_pseudo_constant(&train);
    println!("training on {} sentences ({} features pruned)", train.len(), removed.len());

    let sigma = default_sigma(&train);
    let (model, trace) = subg_rank::fit_model(&train, sigma, &OptimizerConfig::default())?;
    println!(
        "fit finished after {} iterations (converged: {}, final objective {:.4})",
        trace.iterations,
        trace.converged,
        trace.objective_history.last().unwrap()
    );
    for (name, (fitted, true_weight)) in model
        .manifest
        .names()
        .iter()
        .zip(model.lambda.iter().zip(&truth.lambda))
    {
        println!("  {name}: fitted {fitted:>8.4}, generating {true_weight:>8.4}");
    }

    let test = drop_unambiguous(&test).project_onto(&model.manifest);
    let report = evaluate(&model, &test)?;
    println!(
        "\ntest: {} sentences, correct credit {:.2}, -log PL {:.2}, {} indistinguishable",
        report.num_sentences, report.correct_credit, report.neg_log_pl, report.indistinguishable
    );
    Ok(())
}
