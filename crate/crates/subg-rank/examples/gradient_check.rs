//! Check the analytic gradient of the regularized objective against central
//! finite differences on a sampled corpus.
//!
//! ```bash
//! cargo run --example gradient_check
//! ```

use subg_rank::model::{default_sigma, objective_gradient, regularized_objective, ModelParams};
use subg_rank::optimizer::finite_difference_gradient;
use subg_rank::synth::{generate_corpus, SynthConfig};

fn main() -> subg_rank::Result<()> {
    let config = SynthConfig {
        num_sentences: 10,
        min_candidates: 2,
        max_candidates: 5,
        num_features: 4,
        num_auxiliary: 1,
        max_feature_value: 4,
        true_lambda: SynthConfig::random_lambda(5, 1.0, 99),
        seed: 42,
    };
    let (corpus, _) = generate_corpus(&config)?;
    let sigma = default_sigma(&corpus);
    let lambda = SynthConfig::random_lambda(corpus.manifest.len(), 1.0, 7);
    let model = ModelParams::new(corpus.manifest.clone(), lambda.clone(), sigma.clone())?;

    let analytic = objective_gradient(&model, &corpus)?;
    let numeric = finite_difference_gradient(
        |l| {
            let probe = ModelParams::new(corpus.manifest.clone(), l.to_vec(), sigma.clone())
                .expect("finite probe");
            regularized_objective(&probe, &corpus).expect("probe objective")
        },
        &lambda,
        1e-5,
    );

    println!("{:<10} {:>14} {:>14} {:>12}", "feature", "analytic", "numeric", "rel. error");
    let mut worst = 0.0_f64;
    for (j, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
        let relative = (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
        worst = worst.max(relative);
        println!("{:<10} {a:>14.8} {n:>14.8} {relative:>12.2e}", corpus.manifest.name(j));
    }
    println!("\nworst relative error: {worst:.2e}");
    Ok(())
}
