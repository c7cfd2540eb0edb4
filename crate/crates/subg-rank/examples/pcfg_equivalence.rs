//! Set each rule feature's weight to the log of its emission probability and
//! the log-linear conditional over a yield's parses matches the renormalized
//! PCFG derivation probabilities.
//!
//! ```bash
//! cargo run --example pcfg_equivalence
//! ```

use subg_rank::model::{conditional_parse_distribution, ModelParams};
use subg_rank::synth::{pcfg_enumerate, pcfg_sentence, PcfgRule, ToyPCFG};

fn main() -> subg_rank::Result<()> {
    // A deliberately ambiguous grammar: S -> S S | a.
    let grammar = ToyPCFG::new(
        vec!["S".into()],
        vec!["a".into()],
        vec![
            PcfgRule { lhs: "S".into(), rhs: vec!["S".into(), "S".into()], probability: 0.4 },
            PcfgRule { lhs: "S".into(), rhs: vec!["a".into()], probability: 0.6 },
        ],
        "S".into(),
        6,
    )?;

    for tokens in [vec!["a"; 3], vec!["a"; 4]] {
        let parses = pcfg_enumerate(&grammar, &tokens);
        println!("yield {:?}: {} parses", tokens.join(" "), parses.len());

        let (manifest, sentence) = pcfg_sentence(&grammar, &parses, "y")?;
        let lambda: Vec<f64> = grammar.rules.iter().map(|r| r.probability.ln()).collect();
        let model = ModelParams::new(manifest, lambda, vec![1.0; grammar.rules.len()])?;
        let conditional = conditional_parse_distribution(&model, &sentence)?;

        let z: f64 = parses.iter().map(|p| p.probability).sum();
        println!("{:>12} {:>14} {:>14}", "derivation", "renormalized", "log-linear");
        for (i, (parse, p)) in parses.iter().zip(&conditional).enumerate() {
            println!("{:>12} {:>14.10} {:>14.10}", format!("#{i}"), parse.probability / z, p);
        }
        println!();
    }
    Ok(())
}
