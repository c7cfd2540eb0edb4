//! Fit the latent-class model on a small tuple corpus, print the
//! log-likelihood history, the class summaries, and the smoothing power.
//!
//! ```bash
//! cargo run --example latent_classes
//! ```

use subg_rank::lexsel::{class_summary, em_fit, smoothing_power, TupleCorpus};

fn main() -> subg_rank::Result<()> {
    // Two latent "topics": cooking verbs with foods, driving verbs with
    // vehicles, plus a little crosstalk.
    let mut tuples = TupleCorpus::new();
    for (g, r, a, c) in [
        ("cook", "obj", "soup", 14),
        ("cook", "obj", "rice", 11),
        ("eat", "obj", "soup", 9),
        ("eat", "obj", "rice", 12),
        ("stir", "obj", "soup", 7),
        ("drive", "obj", "car", 15),
        ("drive", "obj", "truck", 9),
        ("park", "obj", "car", 11),
        ("park", "obj", "truck", 6),
        ("drive", "obj", "soup", 1),
        ("eat", "obj", "car", 1),
    ] {
        tuples.add(g, r, a, c);
    }

    let (model, history) = em_fit(&tuples, 2, 1, 200, 1e-9)?;
    println!("log-likelihood per iteration:");
    for (i, ll) in history.iter().enumerate() {
        println!("  {:>3}  {ll:.6}", i + 1);
    }

    for class in 0..model.num_classes() {
        let summary = class_summary(&model, &tuples, class, 4)?;
        println!("\nclass {class} (prior {:.3})", summary.prior);
        println!("  top predicates:");
        for ((g, r), p) in &summary.predicates {
            println!("    {p:.3}  {g}:{r}");
        }
        println!("  top arguments:");
        for (a, p) in &summary.arguments {
            println!("    {p:.3}  {a}");
        }
    }

    let power = smoothing_power(&model, &tuples);
    println!(
        "\nsmoothing power: {:.1}% of possible tuples get positive mass \
         (the raw counts cover {:.1}%)",
        100.0 * power.model_fraction,
        100.0 * power.empirical_fraction
    );
    Ok(())
}
