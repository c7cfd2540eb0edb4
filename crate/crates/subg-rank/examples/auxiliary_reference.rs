//! Auxiliary scores as log features: weight 1 acts like a fixed reference
//! distribution, weight 0 ignores the score, and rescaling a score never
//! changes any conditional.
//!
//! ```bash
//! cargo run --example auxiliary_reference
//! ```

use subg_rank::auxiliary::{attach_auxiliary, composed_reference, AuxiliaryScore};
use subg_rank::model::{conditional_parse_distribution, ModelParams};
use subg_rank::synth::{generate_corpus, SynthConfig};

fn main() -> subg_rank::Result<()> {
    let config = SynthConfig {
        num_sentences: 1,
        min_candidates: 3,
        max_candidates: 3,
        num_features: 2,
        num_auxiliary: 0,
        max_feature_value: 4,
        true_lambda: vec![0.5, -0.3],
        seed: 11,
    };
    let (corpus, _) = generate_corpus(&config)?;
    let sentence = &corpus.sentences[0];

    let mut aux = AuxiliaryScore::new("shallow");
    for (cand, q) in sentence.candidates.iter().zip([0.6, 0.3, 0.1]) {
        aux.insert(sentence.id.clone(), cand.id.clone(), q);
    }
    let attached = attach_auxiliary(&corpus, &aux)?;

    let ordinary = vec![0.5, -0.3];
    println!("{:>10} {:>12} {:>12} {:>12}", "aux weight", "p(cand 0)", "p(cand 1)", "p(cand 2)");
    for weight in [0.0, 0.5, 1.0, 2.0] {
        let mut lambda = ordinary.clone();
        lambda.push(weight);
        let model = ModelParams::new(attached.manifest.clone(), lambda, vec![7.0; 3])?;
        let p = conditional_parse_distribution(&model, &attached.sentences[0])?;
        println!("{weight:>10.1} {:>12.6} {:>12.6} {:>12.6}", p[0], p[1], p[2]);
    }

    // The geometric-mixture reading of the same weights.
    for cand in &sentence.candidates {
        let q1 = composed_reference(&[aux.clone()], &[1.0], &sentence.id, &cand.id)?;
        let q0 = composed_reference(&[aux.clone()], &[0.0], &sentence.id, &cand.id)?;
        println!("candidate {}: reference factor {q1:.3} at weight 1, {q0:.3} at weight 0", cand.id);
    }

    // Rescaling the score is invisible to the model.
    let mut rescaled = aux.clone();
    rescaled.scale(1000.0);
    let attached_rescaled = attach_auxiliary(&corpus, &rescaled)?;
    let lambda = vec![0.5, -0.3, 0.8];
    let a = conditional_parse_distribution(
        &ModelParams::new(attached.manifest.clone(), lambda.clone(), vec![7.0; 3])?,
        &attached.sentences[0],
    )?;
    let b = conditional_parse_distribution(
        &ModelParams::new(attached_rescaled.manifest.clone(), lambda, vec![7.0; 3])?,
        &attached_rescaled.sentences[0],
    )?;
    let drift = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0_f64, f64::max);
    println!("\nmax probability drift after scaling the score by 1000: {drift:.2e}");
    Ok(())
}
