//! Fit models on corpora sampled from a known truth and watch the
//! KL divergence between generating and fitted conditionals shrink as the
//! corpus grows.
//!
//! ```bash
//! cargo run --release --example consistency
//! ```

use subg_rank::optimizer::OptimizerConfig;
use subg_rank::synth::{consistency_experiment, SynthConfig};

fn main() -> subg_rank::Result<()> {
    let optimizer = OptimizerConfig::default();
    println!("{:>8} {:>12} {:>12} {:>10}", "n", "mean KL", "max KL", "|lambda|");
    for n in [250usize, 1000, 4000] {
        let config = SynthConfig {
            num_sentences: n,
            min_candidates: 2,
            max_candidates: 4,
            num_features: 5,
            num_auxiliary: 0,
            max_feature_value: 4,
            true_lambda: SynthConfig::random_lambda(5, 1.0, 77),
            seed: 5,
        };
        let report = consistency_experiment(&config, &optimizer, 200)?;
        println!(
            "{n:>8} {:>12.6} {:>12.6} {:>10.4}",
            report.mean_kl, report.max_kl, report.fitted_lambda_inf_norm
        );
    }
    Ok(())
}
