//! Latent-class model of lexical selectional preferences.
//!
//! Dependency tuples (governor, relation, argument) are generated by first
//! drawing a hidden class, then drawing the governor-relation pair and the
//! argument independently given the class. Training is plain EM over tuple
//! types weighted by their counts. The fitted model smooths the empirical
//! tuple distribution: most unseen tuples still receive positive mass.
//!
//! The module also derives the per-candidate lexical features used for
//! disambiguation: a total log-probability score, the tuple count, and their
//! ratio.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::ParseCandidate;

/// Probability floor substituted for zero or undefined conditionals when
/// computing lexical features.
pub const PROBABILITY_FLOOR: f64 = 1e-10;

/// One governor-relation-argument observation with its occurrence count.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DependencyTuple {
    pub governor: String,
    pub relation: String,
    pub argument: String,
    pub count: u32,
}

impl DependencyTuple {
    pub fn new(
        governor: impl Into<String>,
        relation: impl Into<String>,
        argument: impl Into<String>,
        count: u32,
    ) -> Result<Self> {
        let t = Self {
            governor: governor.into(),
            relation: relation.into(),
            argument: argument.into(),
            count,
        };
        if t.count == 0 {
            return Err(Error::InvalidConfig("tuple count must be positive".into()));
        }
        if t.governor.is_empty() || t.relation.is_empty() || t.argument.is_empty() {
            return Err(Error::InvalidConfig("tuple fields must be non-empty".into()));
        }
        Ok(t)
    }
}

/// Aggregated tuple counts with the governor-relation and argument
/// vocabularies they project onto.
#[derive(Debug, Clone, Default)]
pub struct TupleCorpus {
    counts: BTreeMap<(String, String, String), u64>,
}

impl TupleCorpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_tuples<I: IntoIterator<Item = DependencyTuple>>(tuples: I) -> Self {
        let mut corpus = Self::new();
        for t in tuples {
            corpus.add(&t.governor, &t.relation, &t.argument, u64::from(t.count));
        }
        corpus
    }

    pub fn add(&mut self, governor: &str, relation: &str, argument: &str, count: u64) {
        if count == 0 {
            return;
        }
        *self
            .counts
            .entry((governor.to_owned(), relation.to_owned(), argument.to_owned()))
            .or_insert(0) += count;
    }

    /// Distinct (governor, relation, argument) types.
    pub fn num_types(&self) -> usize {
        self.counts.len()
    }

    pub fn total_count(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(String, String, String), u64)> {
        self.counts.iter().map(|(k, &v)| (k, v))
    }

    /// Sorted distinct governor-relation pairs.
    pub fn vocab_gr(&self) -> Vec<(String, String)> {
        let mut v: Vec<_> =
            self.counts.keys().map(|(g, r, _)| (g.clone(), r.clone())).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Sorted distinct arguments.
    pub fn vocab_arg(&self) -> Vec<String> {
        let mut v: Vec<_> = self.counts.keys().map(|(_, _, a)| a.clone()).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Count-weighted unigram distribution over governors, summed across
    /// relations. Used as the root-predicate prior in the lexical features.
    pub fn governor_unigram(&self) -> BTreeMap<String, f64> {
        let mut totals: BTreeMap<String, u64> = BTreeMap::new();
        for ((g, _, _), count) in self.counts.iter() {
            *totals.entry(g.clone()).or_insert(0) += count;
        }
        let total: u64 = totals.values().sum();
        totals
            .into_iter()
            .map(|(g, c)| (g, c as f64 / total as f64))
            .collect()
    }
}

/// Mixture over hidden classes: a class prior plus, per class, a
/// distribution over governor-relation pairs and one over arguments.
#[derive(Debug, Clone)]
pub struct LatentClassModel {
    class_prior: Vec<f64>,
    gr_vocab: Vec<(String, String)>,
    arg_vocab: Vec<String>,
    /// `[class][gr index]`, each row summing to one.
    gr_given_class: Vec<Vec<f64>>,
    /// `[class][argument index]`, each row summing to one.
    arg_given_class: Vec<Vec<f64>>,
    gr_index: HashMap<(String, String), usize>,
    arg_index: HashMap<String, usize>,
}

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidParams(format!("{what} has a negative or non-finite entry")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::InvalidParams(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

impl LatentClassModel {
    pub fn new(
        class_prior: Vec<f64>,
        gr_vocab: Vec<(String, String)>,
        arg_vocab: Vec<String>,
        gr_given_class: Vec<Vec<f64>>,
        arg_given_class: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let k = class_prior.len();
        if k == 0 {
            return Err(Error::InvalidParams("model needs at least one class".into()));
        }
        if gr_given_class.len() != k || arg_given_class.len() != k {
            return Err(Error::InvalidParams("per-class tables must match the prior length".into()));
        }
        check_distribution(&class_prior, "class prior")?;
        for (c, row) in gr_given_class.iter().enumerate() {
            if row.len() != gr_vocab.len() {
                return Err(Error::InvalidParams(format!("class {c} governor-relation row length")));
            }
            check_distribution(row, "governor-relation distribution")?;
        }
        for (c, row) in arg_given_class.iter().enumerate() {
            if row.len() != arg_vocab.len() {
                return Err(Error::InvalidParams(format!("class {c} argument row length")));
            }
            check_distribution(row, "argument distribution")?;
        }
        let gr_index = gr_vocab.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        let arg_index = arg_vocab.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        Ok(Self {
            class_prior,
            gr_vocab,
            arg_vocab,
            gr_given_class,
            arg_given_class,
            gr_index,
            arg_index,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.class_prior.len()
    }

    pub fn class_prior(&self) -> &[f64] {
        &self.class_prior
    }

    pub fn gr_vocab(&self) -> &[(String, String)] {
        &self.gr_vocab
    }

    pub fn arg_vocab(&self) -> &[String] {
        &self.arg_vocab
    }

    pub fn gr_given_class(&self) -> &[Vec<f64>] {
        &self.gr_given_class
    }

    pub fn arg_given_class(&self) -> &[Vec<f64>] {
        &self.arg_given_class
    }

    fn gr_id(&self, governor: &str, relation: &str) -> Option<usize> {
        self.gr_index.get(&(governor.to_owned(), relation.to_owned())).copied()
    }

    fn arg_id(&self, argument: &str) -> Option<usize> {
        self.arg_index.get(argument).copied()
    }

    /// Marginal probability of a governor-relation pair.
    pub fn gr_marginal(&self, governor: &str, relation: &str) -> f64 {
        match self.gr_id(governor, relation) {
            Some(gi) => (0..self.num_classes())
                .map(|c| self.class_prior[c] * self.gr_given_class[c][gi])
                .sum(),
            None => 0.0,
        }
    }
}

/// Mixture probability of one tuple; zero when the governor-relation pair or
/// the argument is out of vocabulary.
pub fn tuple_prob(model: &LatentClassModel, governor: &str, relation: &str, argument: &str) -> f64 {
    let (Some(gi), Some(ai)) = (model.gr_id(governor, relation), model.arg_id(argument)) else {
        return 0.0;
    };
    (0..model.num_classes())
        .map(|c| model.class_prior[c] * model.gr_given_class[c][gi] * model.arg_given_class[c][ai])
        .sum()
}

/// Conditional probability of the argument given the governor-relation pair,
/// i.e. the tuple probability renormalized over all arguments.
pub fn arg_given_gov(
    model: &LatentClassModel,
    governor: &str,
    relation: &str,
    argument: &str,
) -> Result<f64> {
    let marginal = model.gr_marginal(governor, relation);
    if marginal <= 0.0 {
        return Err(Error::UndefinedConditional {
            governor: governor.to_owned(),
            relation: relation.to_owned(),
        });
    }
    Ok(tuple_prob(model, governor, relation, argument) / marginal)
}

/// Fit by EM from a seeded perturbed-uniform start.
///
/// Returns the model and the log-likelihood history, one entry per completed
/// iteration; the history never decreases. Training stops after `max_iters`
/// iterations or as soon as an iteration improves the log-likelihood by less
/// than `tol`.
pub fn em_fit(
    corpus: &TupleCorpus,
    num_classes: usize,
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<(LatentClassModel, Vec<f64>)> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if num_classes == 0 {
        return Err(Error::InvalidConfig("number of classes must be at least 1".into()));
    }
    if max_iters == 0 {
        return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
    }

    let gr_vocab = corpus.vocab_gr();
    let arg_vocab = corpus.vocab_arg();
    let gr_index: HashMap<(String, String), usize> =
        gr_vocab.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
    let arg_index: HashMap<String, usize> =
        arg_vocab.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();

    // Tuple types as dense index triples, weighted by count.
    let types: Vec<(usize, usize, f64)> = corpus
        .iter()
        .map(|((g, r, a), count)| {
            (gr_index[&(g.clone(), r.clone())], arg_index[a.clone().as_str()], count as f64)
        })
        .collect();
    let total: f64 = types.iter().map(|t| t.2).sum();

    // Uniform start with seeded noise: exact uniformity is a stationary
    // point, so every class gets its own perturbation.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perturbed_uniform = |len: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
        let raw: Vec<f64> = (0..len).map(|_| 1.0 + 0.1 * rng.gen::<f64>()).collect();
        let sum: f64 = raw.iter().sum();
        raw.iter().map(|v| v / sum).collect()
    };
    let mut class_prior = vec![1.0 / num_classes as f64; num_classes];
    let mut gr_given_class: Vec<Vec<f64>> =
        (0..num_classes).map(|_| perturbed_uniform(gr_vocab.len(), &mut rng)).collect();
    let mut arg_given_class: Vec<Vec<f64>> =
        (0..num_classes).map(|_| perturbed_uniform(arg_vocab.len(), &mut rng)).collect();

    let mut history: Vec<f64> = Vec::new();
    let mut posterior = vec![0.0_f64; num_classes];

    for _ in 0..max_iters {
        // E-step: per tuple type, the posterior over classes; accumulate the
        // log-likelihood and the expected counts in one pass.
        let mut log_likelihood = 0.0;
        let mut new_prior = vec![0.0_f64; num_classes];
        let mut new_gr = vec![vec![0.0_f64; gr_vocab.len()]; num_classes];
        let mut new_arg = vec![vec![0.0_f64; arg_vocab.len()]; num_classes];
        for &(gi, ai, weight) in &types {
            let mut mass = 0.0;
            for c in 0..num_classes {
                let p = class_prior[c] * gr_given_class[c][gi] * arg_given_class[c][ai];
                posterior[c] = p;
                mass += p;
            }
            log_likelihood += weight * mass.ln();
            for c in 0..num_classes {
                let responsibility = weight * posterior[c] / mass;
                new_prior[c] += responsibility;
                new_gr[c][gi] += responsibility;
                new_arg[c][ai] += responsibility;
            }
        }

        if let Some(&previous) = history.last() {
            if log_likelihood - previous < tol {
                break;
            }
        }
        history.push(log_likelihood);

        // M-step: count-weighted re-estimation. A class that attracted no
        // mass keeps its old conditionals and a zero prior.
        for c in 0..num_classes {
            let mass = new_prior[c];
            class_prior[c] = mass / total;
            if mass > 0.0 {
                for v in &mut new_gr[c] {
                    *v /= mass;
                }
                for v in &mut new_arg[c] {
                    *v /= mass;
                }
                gr_given_class[c] = new_gr[c].clone();
                arg_given_class[c] = new_arg[c].clone();
            }
        }
    }

    let model =
        LatentClassModel::new(class_prior, gr_vocab, arg_vocab, gr_given_class, arg_given_class)?;
    Ok((model, history))
}

/// Fraction of the vocabulary cross product the model assigns positive
/// probability, next to the fraction the raw type counts cover.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingPower {
    pub model_fraction: f64,
    pub empirical_fraction: f64,
}

pub fn smoothing_power(model: &LatentClassModel, corpus: &TupleCorpus) -> SmoothingPower {
    let vocab_gr = corpus.vocab_gr();
    let vocab_arg = corpus.vocab_arg();
    let possible = vocab_gr.len() * vocab_arg.len();
    if possible == 0 {
        return SmoothingPower { model_fraction: 0.0, empirical_fraction: 0.0 };
    }
    let mut covered = 0usize;
    for (g, r) in &vocab_gr {
        for a in &vocab_arg {
            if tuple_prob(model, g, r, a) > 0.0 {
                covered += 1;
            }
        }
    }
    SmoothingPower {
        model_fraction: covered as f64 / possible as f64,
        empirical_fraction: corpus.num_types() as f64 / possible as f64,
    }
}

/// Most probable predicates and arguments of one hidden class, with a matrix
/// marking which pairs were actually observed in training.
#[derive(Debug, Clone)]
pub struct ClassSummary {
    pub class_index: usize,
    pub prior: f64,
    /// Governor-relation pairs sorted by descending class-conditional
    /// probability, ties broken lexicographically.
    pub predicates: Vec<((String, String), f64)>,
    pub arguments: Vec<(String, f64)>,
    /// `seen[i][j]` marks whether `predicates[i]` and `arguments[j]` occur
    /// together in the training counts.
    pub seen: Vec<Vec<bool>>,
}

pub fn class_summary(
    model: &LatentClassModel,
    corpus: &TupleCorpus,
    class_index: usize,
    top_n: usize,
) -> Result<ClassSummary> {
    if class_index >= model.num_classes() {
        return Err(Error::InvalidConfig(format!(
            "class {class_index} out of range ({} classes)",
            model.num_classes()
        )));
    }

    fn ranked<K: Clone + Ord>(vocab: &[K], probs: &[f64], top_n: usize) -> Vec<(K, f64)> {
        let mut items: Vec<(K, f64)> =
            vocab.iter().cloned().zip(probs.iter().copied()).collect();
        items.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        items.truncate(top_n);
        items
    }

    let predicates = ranked(&model.gr_vocab, &model.gr_given_class[class_index], top_n);
    let arguments = ranked(&model.arg_vocab, &model.arg_given_class[class_index], top_n);

    let observed: std::collections::HashSet<(&str, &str, &str)> = corpus
        .iter()
        .map(|((g, r, a), _)| (g.as_str(), r.as_str(), a.as_str()))
        .collect();
    let seen = predicates
        .iter()
        .map(|((g, r), _)| {
            arguments
                .iter()
                .map(|(a, _)| observed.contains(&(g.as_str(), r.as_str(), a.as_str())))
                .collect()
        })
        .collect();

    Ok(ClassSummary {
        class_index,
        prior: model.class_prior[class_index],
        predicates,
        arguments,
        seen,
    })
}

/// The three per-candidate lexical features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LexicalFeatures {
    /// Root-predicate log-probability plus count-weighted conditional
    /// log-probabilities of every tuple.
    pub log_prob: f64,
    /// Total number of tuple occurrences.
    pub tuple_count: f64,
    /// `log_prob / tuple_count`, or zero for candidates without tuples.
    pub mean_log_prob: f64,
}

/// Compute the lexical features of one candidate under a fitted model and a
/// root-predicate unigram distribution.
///
/// Zero or undefined conditionals are lifted to `floor` before the log, and
/// a missing root simply drops its term; the second return value counts
/// those incidents.
pub fn lexical_feature_values(
    model: &LatentClassModel,
    governor_unigram: &BTreeMap<String, f64>,
    candidate: &ParseCandidate,
    floor: f64,
) -> (LexicalFeatures, usize) {
    let mut incidents = 0usize;
    let mut log_prob = 0.0;
    let mut tuple_count = 0u64;

    match &candidate.root_governor {
        Some(root) => {
            let p = match governor_unigram.get(root) {
                Some(&p) if p > 0.0 => p,
                _ => {
                    incidents += 1;
                    floor
                }
            };
            log_prob += p.ln();
        }
        None => incidents += 1,
    }

    for t in &candidate.tuples {
        let p = match arg_given_gov(model, &t.governor, &t.relation, &t.argument) {
            Ok(p) if p > 0.0 => p,
            _ => {
                incidents += 1;
                floor
            }
        };
        log_prob += f64::from(t.count) * p.ln();
        tuple_count += u64::from(t.count);
    }

    if tuple_count == 0 && candidate.root_governor.is_none() {
        // No lexical material at all: all three features are neutral.
        return (LexicalFeatures { log_prob: 0.0, tuple_count: 0.0, mean_log_prob: 0.0 }, incidents);
    }

    let count = tuple_count as f64;
    let mean = if tuple_count > 0 { log_prob / count } else { 0.0 };
    (LexicalFeatures { log_prob, tuple_count: count, mean_log_prob: mean }, incidents)
}
