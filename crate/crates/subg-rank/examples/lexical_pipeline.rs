//! The full lexical pipeline at desk scale: sample a world whose gold
//! parses prefer lexically plausible dependency tuples, fit the latent-class
//! model on the tuple corpus, attach the lexical log-probability feature,
//! and compare held-out accuracy with and without it.
//!
//! ```bash
//! cargo run --example lexical_pipeline
//! ```

use subg_rank::cli::{attach_lexical_features, LexFeature};
use subg_rank::evaluation::{correct_parses_measure, drop_unambiguous, prune_pseudo_constant};
use subg_rank::lexsel::em_fit;
use subg_rank::model::{default_sigma, DisambiguationCorpus};
use subg_rank::optimizer::OptimizerConfig;
use subg_rank::synth::{generate_lexical_corpus, LexicalSynthConfig};

fn holdout_credit(corpus: &DisambiguationCorpus, split: usize) -> subg_rank::Result<f64> {
    let train = DisambiguationCorpus {
        manifest: corpus.manifest.clone(),
        sentences: corpus.sentences[..split].to_vec(),
    };
    let test = DisambiguationCorpus {
        manifest: corpus.manifest.clone(),
        sentences: corpus.sentences[split..].to_vec(),
    };
    let train = drop_unambiguous(&train);
    let (train, _) = prune_pseudo_constant(&train);
    let sigma = default_sigma(&train);
    let (model, _) = subg_rank::fit_model(&train, sigma, &OptimizerConfig::default())?;
    let test = drop_unambiguous(&test).project_onto(&model.manifest);
    Ok(correct_parses_measure(&model, &test)? / test.len() as f64)
}

fn main() -> subg_rank::Result<()> {
    let config = LexicalSynthConfig { seed: 3, ..LexicalSynthConfig::default() };
    let world = generate_lexical_corpus(&config)?;
    println!(
        "sampled {} sentences and a tuple corpus of {} types / {} tokens",
        world.corpus.len(),
        world.tuples.num_types(),
        world.tuples.total_count()
    );

    let (lexical_model, history) = em_fit(&world.tuples, 4, 3, 200, 1e-9)?;
    println!("lexical model trained, {} EM iterations", history.len());

    let featurized = attach_lexical_features(
        &world.corpus,
        &lexical_model,
        &world.tuples.governor_unigram(),
        &[LexFeature::Logprob, LexFeature::Count, LexFeature::Mean],
        1e-10,
    )?;

    let split = world.corpus.len() * 6 / 10;
    let without = holdout_credit(&world.corpus, split)?;
    let with = holdout_credit(&featurized, split)?;
    println!("held-out correct-parse rate without lexical features: {without:.3}");
    println!("held-out correct-parse rate with lexical features:    {with:.3}");
    Ok(())
}
