//! Synthetic corpora with known ground truth, plus independent oracles.
//!
//! Everything here exists to verify the estimator at desk scale: corpora
//! sampled from a known weight vector, a direct-enumeration conditional that
//! shares no normalization code with the production path, exhaustive toy
//! PCFG parsing for the rule-weight equivalence check, and a consistency
//! experiment that fits a model on sampled data and measures how far the
//! fitted conditionals sit from the generating ones.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lexsel::{DependencyTuple, LatentClassModel, TupleCorpus};
use crate::model::{
    conditional_parse_distribution, default_sigma, DisambiguationCorpus, FeatureManifest,
    FeatureVector, ModelParams, ParseCandidate, SentenceItem,
};
use crate::optimizer::OptimizerConfig;

/// Shape of a sampled disambiguation corpus.
///
/// Ordinary feature values are small non-negative integers, like the
/// construction-count features of a hand-built grammar; auxiliary features
/// are logs of scores drawn from (0, 1]. Gold parses are sampled from the
/// conditional distribution under `true_lambda`.
#[derive(Debug, Clone, Serialize)]
pub struct SynthConfig {
    pub num_sentences: usize,
    pub min_candidates: usize,
    pub max_candidates: usize,
    pub num_features: usize,
    pub num_auxiliary: usize,
    pub max_feature_value: u32,
    pub true_lambda: Vec<f64>,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_sentences == 0 {
            return Err(Error::InvalidConfig("num_sentences must be positive".into()));
        }
        if self.min_candidates == 0 || self.max_candidates < self.min_candidates {
            return Err(Error::InvalidConfig("candidate range is empty".into()));
        }
        if self.num_features == 0 {
            return Err(Error::InvalidConfig("need at least one ordinary feature".into()));
        }
        if self.max_feature_value == 0 {
            return Err(Error::InvalidConfig("max_feature_value must be positive".into()));
        }
        let dim = self.num_features + self.num_auxiliary;
        if self.true_lambda.len() != dim {
            return Err(Error::InvalidConfig(format!(
                "true_lambda has {} entries, need {dim}",
                self.true_lambda.len()
            )));
        }
        if self.true_lambda.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidConfig("true_lambda must be finite".into()));
        }
        Ok(())
    }

    /// Seeded weight vector with entries uniform in `[-scale, scale]`.
    pub fn random_lambda(dim: usize, scale: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..dim).map(|_| rng.gen_range(-scale..=scale)).collect()
    }
}

fn synth_manifest(num_features: usize, num_auxiliary: usize) -> FeatureManifest {
    let mut names: Vec<String> = (0..num_features).map(|j| format!("f{j:02}")).collect();
    names.extend((0..num_auxiliary).map(|j| format!("aux{j:02}")));
    let mut flags = vec![false; num_features];
    flags.extend(vec![true; num_auxiliary]);
    FeatureManifest::new(names, flags).expect("generated names are unique")
}

/// Sample a corpus and return it with the generating model (its sigma is a
/// placeholder of ones; only the weights matter for sampling). Identical
/// configs produce identical corpora.
pub fn generate_corpus(config: &SynthConfig) -> Result<(DisambiguationCorpus, ModelParams)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let manifest = synth_manifest(config.num_features, config.num_auxiliary);
    let dim = manifest.len();

    let mut sentences = Vec::with_capacity(config.num_sentences);
    for i in 0..config.num_sentences {
        let n_cand = rng.gen_range(config.min_candidates..=config.max_candidates);
        let candidates: Vec<ParseCandidate> = (0..n_cand)
            .map(|c| {
                let mut values = Vec::with_capacity(dim);
                for _ in 0..config.num_features {
                    values.push(rng.gen_range(0..=config.max_feature_value) as f64);
                }
                for _ in 0..config.num_auxiliary {
                    let q: f64 = rng.gen_range(0.05..=1.0);
                    values.push(q.ln());
                }
                ParseCandidate::new(format!("p{c}"), FeatureVector::new(values).unwrap())
            })
            .collect();
        let probe = SentenceItem::new(format!("s{i:05}"), candidates, 0)?;
        let gold = sample_conditional(&config.true_lambda, &probe, &mut rng);
        let mut sentence = probe;
        sentence.gold_index = gold;
        sentences.push(sentence);
    }

    let corpus = DisambiguationCorpus::new(manifest.clone(), sentences)?;
    let truth = ModelParams::new(manifest, config.true_lambda.clone(), vec![1.0; dim])?;
    Ok((corpus, truth))
}

/// Conditional distribution over a sentence's candidates by direct
/// evaluation: plain exponentials, summed and divided through. This is the
/// oracle for the max-subtracted production path; it deliberately shares no
/// code with it and is only meant for moderate score magnitudes.
pub fn exact_conditional(lambda: &[f64], sentence: &SentenceItem) -> Vec<f64> {
    let weights: Vec<f64> = sentence
        .candidates
        .iter()
        .map(|cand| {
            let mut score = 0.0;
            for (l, v) in lambda.iter().zip(cand.features.values()) {
                score += l * v;
            }
            score.exp()
        })
        .collect();
    let z: f64 = weights.iter().sum();
    weights.iter().map(|w| w / z).collect()
}

/// Draw a candidate index from the exact conditional distribution.
pub fn sample_conditional(lambda: &[f64], sentence: &SentenceItem, rng: &mut ChaCha8Rng) -> usize {
    let probs = exact_conditional(lambda, sentence);
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    for (i, p) in probs.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return i;
        }
    }
    probs.len() - 1
}

/// A context-free rule with an emission probability.
#[derive(Debug, Clone, PartialEq)]
pub struct PcfgRule {
    pub lhs: String,
    pub rhs: Vec<String>,
    pub probability: f64,
}

/// A small PCFG whose derivations are enumerated exhaustively up to a depth
/// bound. The bound is what keeps grammars with cyclic unary or recursive
/// rules finite.
#[derive(Debug, Clone)]
pub struct ToyPCFG {
    pub nonterminals: Vec<String>,
    pub terminals: Vec<String>,
    pub rules: Vec<PcfgRule>,
    pub start: String,
    pub max_depth: usize,
}

impl ToyPCFG {
    pub fn new(
        nonterminals: Vec<String>,
        terminals: Vec<String>,
        rules: Vec<PcfgRule>,
        start: String,
        max_depth: usize,
    ) -> Result<Self> {
        let grammar = Self { nonterminals, terminals, rules, start, max_depth };
        grammar.validate()?;
        Ok(grammar)
    }

    fn is_nonterminal(&self, symbol: &str) -> bool {
        self.nonterminals.iter().any(|n| n == symbol)
    }

    fn is_terminal(&self, symbol: &str) -> bool {
        self.terminals.iter().any(|t| t == symbol)
    }

    fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::InvalidConfig("max_depth must be positive".into()));
        }
        if !self.is_nonterminal(&self.start) {
            return Err(Error::InvalidConfig(format!("start symbol {} unknown", self.start)));
        }
        for rule in &self.rules {
            if !self.is_nonterminal(&rule.lhs) {
                return Err(Error::InvalidConfig(format!("rule lhs {} is not a nonterminal", rule.lhs)));
            }
            if rule.rhs.is_empty() {
                return Err(Error::InvalidConfig("empty rule right-hand sides are not supported".into()));
            }
            for symbol in &rule.rhs {
                if !self.is_nonterminal(symbol) && !self.is_terminal(symbol) {
                    return Err(Error::InvalidConfig(format!("unknown symbol {symbol}")));
                }
            }
            if !(rule.probability > 0.0 && rule.probability <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "rule probability {} out of range",
                    rule.probability
                )));
            }
        }
        for nt in &self.nonterminals {
            let total: f64 =
                self.rules.iter().filter(|r| &r.lhs == nt).map(|r| r.probability).sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidConfig(format!(
                    "probabilities for {nt} sum to {total}, not 1"
                )));
            }
        }
        // Properness at the depth cutoff: every nonterminal must finish a
        // derivation within the bound.
        let heights = self.min_heights();
        for nt in &self.nonterminals {
            match heights.get(nt) {
                Some(&h) if h <= self.max_depth => {}
                _ => {
                    return Err(Error::InvalidConfig(format!(
                        "nonterminal {nt} cannot derive a string within depth {}",
                        self.max_depth
                    )))
                }
            }
        }
        Ok(())
    }

    /// Minimum derivation height per nonterminal, by fixpoint.
    fn min_heights(&self) -> BTreeMap<String, usize> {
        let mut heights: BTreeMap<String, usize> = BTreeMap::new();
        loop {
            let mut changed = false;
            for rule in &self.rules {
                let mut worst = 0usize;
                let mut feasible = true;
                for symbol in &rule.rhs {
                    if self.is_terminal(symbol) {
                        continue;
                    }
                    match heights.get(symbol) {
                        Some(&h) => worst = worst.max(h),
                        None => {
                            feasible = false;
                            break;
                        }
                    }
                }
                if !feasible {
                    continue;
                }
                let candidate = worst + 1;
                let entry = heights.entry(rule.lhs.clone()).or_insert(usize::MAX);
                if candidate < *entry {
                    *entry = candidate;
                    changed = true;
                }
            }
            if !changed {
                return heights;
            }
        }
    }
}

/// One enumerated derivation: how often each rule fired, and the product of
/// the fired rules' probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct PcfgParse {
    pub rule_counts: Vec<u32>,
    pub probability: f64,
}

/// All derivations of `tokens` from the start symbol within the grammar's
/// depth bound. Underivable yields give an empty set.
pub fn pcfg_enumerate(grammar: &ToyPCFG, tokens: &[&str]) -> Vec<PcfgParse> {
    let derivations = derive(grammar, &grammar.start, tokens, grammar.max_depth);
    derivations
        .into_iter()
        .map(|counts| {
            let probability = grammar
                .rules
                .iter()
                .zip(&counts)
                .map(|(rule, &c)| rule.probability.powi(c as i32))
                .product();
            PcfgParse { rule_counts: counts, probability }
        })
        .collect()
}

fn derive(grammar: &ToyPCFG, symbol: &str, tokens: &[&str], depth: usize) -> Vec<Vec<u32>> {
    if grammar.is_terminal(symbol) {
        return if tokens.len() == 1 && tokens[0] == symbol {
            vec![vec![0; grammar.rules.len()]]
        } else {
            Vec::new()
        };
    }
    if depth == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (rule_index, rule) in grammar.rules.iter().enumerate() {
        if rule.lhs != symbol {
            continue;
        }
        for split in compositions(tokens.len(), rule.rhs.len()) {
            // Derivations of every right-hand-side symbol over its slice.
            let mut partials: Vec<Vec<u32>> = vec![vec![0; grammar.rules.len()]];
            let mut offset = 0;
            for (part, child) in split.iter().zip(&rule.rhs) {
                let slice = &tokens[offset..offset + part];
                offset += part;
                let child_derivations = derive(grammar, child, slice, depth - 1);
                if child_derivations.is_empty() {
                    partials.clear();
                    break;
                }
                let mut next = Vec::with_capacity(partials.len() * child_derivations.len());
                for base in &partials {
                    for child_counts in &child_derivations {
                        let mut merged = base.clone();
                        for (m, c) in merged.iter_mut().zip(child_counts) {
                            *m += c;
                        }
                        next.push(merged);
                    }
                }
                partials = next;
            }
            for mut counts in partials {
                counts[rule_index] += 1;
                out.push(counts);
            }
        }
    }
    out
}

/// Ways to write `total` as `parts` positive integers, in order.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { Vec::new() };
    }
    if parts == 1 {
        return if total >= 1 { vec![vec![total]] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in 1..=(total.saturating_sub(parts - 1)) {
        for rest in compositions(total - first, parts - 1) {
            let mut v = Vec::with_capacity(parts);
            v.push(first);
            v.extend(rest);
            out.push(v);
        }
    }
    out
}

/// Wrap the enumerated parses of one yield as a sentence whose features are
/// the rule usage counts. The weight vector `rule log-probabilities` then
/// reproduces the renormalized derivation distribution.
pub fn pcfg_sentence(
    grammar: &ToyPCFG,
    parses: &[PcfgParse],
    sentence_id: &str,
) -> Result<(FeatureManifest, SentenceItem)> {
    let names = (0..grammar.rules.len()).map(|j| format!("rule{j:02}")).collect();
    let manifest = FeatureManifest::ordinary(names)?;
    let candidates = parses
        .iter()
        .enumerate()
        .map(|(i, parse)| {
            let values = parse.rule_counts.iter().map(|&c| c as f64).collect();
            Ok(ParseCandidate::new(format!("d{i}"), FeatureVector::new(values)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let sentence = SentenceItem::new(sentence_id, candidates, 0)?;
    Ok((manifest, sentence))
}

/// A random proper toy grammar: every nonterminal has at least one terminal
/// rule, plus binary (and occasionally unary) expansions that create
/// ambiguity.
pub fn random_pcfg(rng: &mut ChaCha8Rng) -> ToyPCFG {
    let n_nt = rng.gen_range(1..=3usize);
    let nonterminals: Vec<String> =
        (0..n_nt).map(|i| ((b'S' + i as u8) as char).to_string()).collect();
    let terminals = vec!["a".to_owned(), "b".to_owned()];

    let mut rules = Vec::new();
    for nt in &nonterminals {
        let mut expansions: Vec<Vec<String>> = Vec::new();
        expansions.push(vec![terminals[rng.gen_range(0..terminals.len())].clone()]);
        let n_binary = rng.gen_range(1..=2usize);
        for _ in 0..n_binary {
            let left = nonterminals[rng.gen_range(0..n_nt)].clone();
            let right = nonterminals[rng.gen_range(0..n_nt)].clone();
            expansions.push(vec![left, right]);
        }
        if rng.gen_bool(0.3) {
            expansions.push(vec![nonterminals[rng.gen_range(0..n_nt)].clone()]);
        }
        expansions.sort();
        expansions.dedup();

        let raw: Vec<f64> = (0..expansions.len()).map(|_| rng.gen_range(0.2..1.0)).collect();
        let total: f64 = raw.iter().sum();
        for (rhs, weight) in expansions.into_iter().zip(raw) {
            rules.push(PcfgRule { lhs: nt.clone(), rhs, probability: weight / total });
        }
    }

    ToyPCFG::new(nonterminals, terminals, rules, "S".to_owned(), 6)
        .expect("constructed grammar is proper")
}

/// Sample a derivable yield, preferring short and ambiguous ones. Returns
/// `None` when sampling keeps producing yields longer than `max_len`.
pub fn sample_yield(grammar: &ToyPCFG, rng: &mut ChaCha8Rng, max_len: usize) -> Option<Vec<String>> {
    let heights = grammar.min_heights();
    let fits = |symbol: &str, depth: usize| -> bool {
        if grammar.is_terminal(symbol) {
            return true;
        }
        heights.get(symbol).is_some_and(|&h| h <= depth)
    };

    fn expand(
        grammar: &ToyPCFG,
        symbol: &str,
        depth: usize,
        rng: &mut ChaCha8Rng,
        out: &mut Vec<String>,
        fits: &dyn Fn(&str, usize) -> bool,
    ) -> bool {
        if grammar.is_terminal(symbol) {
            out.push(symbol.to_owned());
            return true;
        }
        let feasible: Vec<&PcfgRule> = grammar
            .rules
            .iter()
            .filter(|r| r.lhs == symbol && r.rhs.iter().all(|s| fits(s, depth - 1)))
            .collect();
        if feasible.is_empty() {
            return false;
        }
        let total: f64 = feasible.iter().map(|r| r.probability).sum();
        let mut u: f64 = rng.gen::<f64>() * total;
        let mut chosen = feasible[feasible.len() - 1];
        for rule in &feasible {
            if u < rule.probability {
                chosen = rule;
                break;
            }
            u -= rule.probability;
        }
        for child in &chosen.rhs {
            if !expand(grammar, child, depth - 1, rng, out, fits) {
                return false;
            }
        }
        true
    }

    for _ in 0..50 {
        let mut tokens = Vec::new();
        if expand(grammar, &grammar.start, grammar.max_depth, rng, &mut tokens, &fits)
            && !tokens.is_empty()
            && tokens.len() <= max_len
        {
            return Some(tokens);
        }
    }
    None
}

/// Result of one fit-against-the-truth run.
#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    /// Mean over held-out sentences of KL(true conditional || fitted).
    pub mean_kl: f64,
    pub max_kl: f64,
    pub num_heldout: usize,
    pub train_sentences: usize,
    pub fitted_lambda_inf_norm: f64,
    pub converged: bool,
}

/// Sample a training corpus from the configured truth, fit a model to it,
/// and measure KL(true || fitted) conditionals on freshly sampled held-out
/// sentences that the fit never saw.
pub fn consistency_experiment(
    config: &SynthConfig,
    optimizer: &OptimizerConfig,
    num_heldout: usize,
) -> Result<ConsistencyReport> {
    if num_heldout == 0 {
        return Err(Error::InvalidConfig("need at least one held-out sentence".into()));
    }
    let (train, truth) = generate_corpus(config)?;
    let heldout_config = SynthConfig {
        num_sentences: num_heldout,
        seed: config.seed.wrapping_add(0x9e37_79b9_7f4a_7c15),
        ..config.clone()
    };
    let (heldout, _) = generate_corpus(&heldout_config)?;

    let sigma = default_sigma(&train);
    let (fitted, trace) = crate::fit_model(&train, sigma, optimizer)?;

    let mut total_kl = 0.0;
    let mut max_kl: f64 = 0.0;
    for sentence in &heldout.sentences {
        let p_true = exact_conditional(&truth.lambda, sentence);
        let p_fit = conditional_parse_distribution(&fitted, sentence)?;
        let kl: f64 = p_true
            .iter()
            .zip(&p_fit)
            .filter(|(t, _)| **t > 0.0)
            .map(|(t, f)| t * (t / f).ln())
            .sum();
        total_kl += kl;
        max_kl = max_kl.max(kl);
    }

    Ok(ConsistencyReport {
        mean_kl: total_kl / heldout.len() as f64,
        max_kl,
        num_heldout: heldout.len(),
        train_sentences: train.len(),
        fitted_lambda_inf_norm: fitted.lambda.iter().fold(0.0_f64, |m, l| m.max(l.abs())),
        converged: trace.converged,
    })
}

/// Shape of a corpus whose gold parses carry a lexical signal: candidates
/// hold dependency tuples, and the generating score adds
/// `lexical_weight * (true lexical log-probability)` to the ordinary
/// feature score.
#[derive(Debug, Clone, Serialize)]
pub struct LexicalSynthConfig {
    pub num_governors: usize,
    pub num_arguments: usize,
    pub num_true_classes: usize,
    /// Tuples sampled from the true model into the training tuple corpus.
    pub tuple_samples: usize,
    pub num_sentences: usize,
    pub min_candidates: usize,
    pub max_candidates: usize,
    pub num_features: usize,
    pub max_feature_value: u32,
    pub min_tuples: usize,
    pub max_tuples: usize,
    pub ordinary_weight_scale: f64,
    pub lexical_weight: f64,
    pub seed: u64,
}

impl Default for LexicalSynthConfig {
    fn default() -> Self {
        Self {
            num_governors: 6,
            num_arguments: 10,
            num_true_classes: 2,
            tuple_samples: 3000,
            num_sentences: 240,
            min_candidates: 2,
            max_candidates: 4,
            num_features: 3,
            max_feature_value: 4,
            min_tuples: 1,
            max_tuples: 3,
            ordinary_weight_scale: 0.3,
            lexical_weight: 1.2,
            seed: 0,
        }
    }
}

/// A sampled lexical world: the disambiguation corpus (ordinary features
/// only, tuples attached), the tuple corpus for fitting a lexical model, and
/// the generating weights.
#[derive(Debug, Clone)]
pub struct LexicalWorld {
    pub corpus: DisambiguationCorpus,
    pub tuples: TupleCorpus,
    pub true_ordinary_lambda: Vec<f64>,
    pub lexical_weight: f64,
}

fn sample_index(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u: f64 = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

fn peaked_distribution(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..len)
        .map(|_| {
            let u: f64 = rng.gen_range(0.01..1.0);
            u * u * u
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

pub fn generate_lexical_corpus(config: &LexicalSynthConfig) -> Result<LexicalWorld> {
    if config.num_governors == 0
        || config.num_arguments == 0
        || config.num_true_classes == 0
        || config.num_sentences == 0
        || config.min_candidates < 2
        || config.max_candidates < config.min_candidates
        || config.min_tuples == 0
        || config.max_tuples < config.min_tuples
        || config.tuple_samples == 0
    {
        return Err(Error::InvalidConfig("degenerate lexical synthesis config".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let relations = ["subj", "obj"];
    let gr_vocab: Vec<(String, String)> = (0..config.num_governors)
        .flat_map(|g| relations.iter().map(move |r| (format!("g{g}"), r.to_string())))
        .collect();
    let arg_vocab: Vec<String> = (0..config.num_arguments).map(|a| format!("n{a}")).collect();

    // The generating lexical model, strictly positive everywhere.
    let raw_prior: Vec<f64> = (0..config.num_true_classes).map(|_| rng.gen_range(0.5..1.0)).collect();
    let prior_total: f64 = raw_prior.iter().sum();
    let class_prior: Vec<f64> = raw_prior.iter().map(|v| v / prior_total).collect();
    let gr_given_class: Vec<Vec<f64>> = (0..config.num_true_classes)
        .map(|_| peaked_distribution(gr_vocab.len(), &mut rng))
        .collect();
    let arg_given_class: Vec<Vec<f64>> = (0..config.num_true_classes)
        .map(|_| peaked_distribution(arg_vocab.len(), &mut rng))
        .collect();
    let truth = LatentClassModel::new(
        class_prior.clone(),
        gr_vocab.clone(),
        arg_vocab.clone(),
        gr_given_class.clone(),
        arg_given_class.clone(),
    )?;

    // Tuple corpus sampled from the truth.
    let mut tuples = TupleCorpus::new();
    for _ in 0..config.tuple_samples {
        let c = sample_index(&class_prior, &mut rng);
        let gi = sample_index(&gr_given_class[c], &mut rng);
        let ai = sample_index(&arg_given_class[c], &mut rng);
        let (g, r) = &gr_vocab[gi];
        tuples.add(g, r, &arg_vocab[ai], 1);
    }

    // True governor unigram, summed over relations.
    let mut unigram: BTreeMap<String, f64> = BTreeMap::new();
    for (g, r) in &gr_vocab {
        *unigram.entry(g.clone()).or_insert(0.0) += truth.gr_marginal(g, r);
    }

    let manifest = synth_manifest(config.num_features, 0);
    let true_ordinary_lambda: Vec<f64> = (0..config.num_features)
        .map(|_| rng.gen_range(-config.ordinary_weight_scale..=config.ordinary_weight_scale))
        .collect();

    let mut sentences = Vec::with_capacity(config.num_sentences);
    for i in 0..config.num_sentences {
        let n_cand = rng.gen_range(config.min_candidates..=config.max_candidates);
        let mut candidates = Vec::with_capacity(n_cand);
        let mut log_weights = Vec::with_capacity(n_cand);
        for c in 0..n_cand {
            let values: Vec<f64> = (0..config.num_features)
                .map(|_| rng.gen_range(0..=config.max_feature_value) as f64)
                .collect();

            let n_tuples = rng.gen_range(config.min_tuples..=config.max_tuples);
            let mut observed: BTreeMap<(String, String, String), u32> = BTreeMap::new();
            for _ in 0..n_tuples {
                let (g, r) = gr_vocab[rng.gen_range(0..gr_vocab.len())].clone();
                let argument = if rng.gen_bool(0.5) {
                    // Plausible: from the true conditional given (g, r).
                    let conditional: Vec<f64> = arg_vocab
                        .iter()
                        .map(|a| crate::lexsel::tuple_prob(&truth, &g, &r, a))
                        .collect();
                    arg_vocab[sample_index(&conditional, &mut rng)].clone()
                } else {
                    arg_vocab[rng.gen_range(0..arg_vocab.len())].clone()
                };
                *observed.entry((g, r, argument)).or_insert(0) += 1;
            }
            let root = observed.keys().next().map(|(g, _, _)| g.clone());

            // The true lexical score of this candidate.
            let mut lexical = 0.0;
            if let Some(g0) = &root {
                lexical += unigram[g0].ln();
            }
            let tuple_list: Vec<DependencyTuple> = observed
                .iter()
                .map(|((g, r, a), &count)| {
                    lexical += f64::from(count)
                        * crate::lexsel::arg_given_gov(&truth, g, r, a)
                            .expect("truth is strictly positive")
                            .ln();
                    DependencyTuple::new(g.clone(), r.clone(), a.clone(), count)
                })
                .collect::<Result<Vec<_>>>()?;

            let ordinary_score: f64 =
                true_ordinary_lambda.iter().zip(&values).map(|(l, v)| l * v).sum();
            log_weights.push(ordinary_score + config.lexical_weight * lexical);

            let mut cand = ParseCandidate::new(format!("p{c}"), FeatureVector::new(values)?);
            cand.tuples = tuple_list;
            cand.root_governor = root;
            candidates.push(cand);
        }

        let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = log_weights.iter().map(|w| (w - max).exp()).collect();
        let gold = sample_index(&weights, &mut rng);
        sentences.push(SentenceItem::new(format!("s{i:05}"), candidates, gold)?);
    }

    Ok(LexicalWorld {
        corpus: DisambiguationCorpus::new(manifest, sentences)?,
        tuples,
        true_ordinary_lambda,
        lexical_weight: config.lexical_weight,
    })
}
