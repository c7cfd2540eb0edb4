//! Corpus and model data types, conditional parse probabilities, and the
//! regularized log pseudo-likelihood objective with its exact gradient.
//!
//! A disambiguation corpus pairs each sentence with its enumerated candidate
//! parses, one of which is marked gold. A model assigns every candidate a
//! log-linear score `lambda . f(parse)`; conditioning on the sentence turns
//! the scores into a distribution over that sentence's candidates. Training
//! maximizes the sum of gold log-probabilities minus a Gaussian penalty
//! `sum_j lambda_j^2 / (2 sigma_j^2)`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::lexsel::DependencyTuple;

/// Ordered registry of feature names. Ordinary features come first; auxiliary
/// features (log-valued scores appended by [`crate::auxiliary`] or the
/// featurize step) are flagged and always trail the ordinary block.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureManifest {
    names: Vec<String>,
    aux_flags: Vec<bool>,
    index: HashMap<String, usize>,
}

impl FeatureManifest {
    pub fn new(names: Vec<String>, aux_flags: Vec<bool>) -> Result<Self> {
        if names.len() != aux_flags.len() {
            return Err(Error::InvalidManifest(format!(
                "{} names but {} auxiliary flags",
                names.len(),
                aux_flags.len()
            )));
        }
        let mut index = HashMap::with_capacity(names.len());
        for (j, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::InvalidManifest(format!("feature {j} has an empty name")));
            }
            if index.insert(name.clone(), j).is_some() {
                return Err(Error::InvalidManifest(format!("duplicate feature name {name:?}")));
            }
        }
        // Auxiliary features must form a suffix of the ordering.
        let mut seen_aux = false;
        for (j, &aux) in aux_flags.iter().enumerate() {
            if aux {
                seen_aux = true;
            } else if seen_aux {
                return Err(Error::InvalidManifest(format!(
                    "ordinary feature {:?} follows an auxiliary feature",
                    names[j]
                )));
            }
        }
        Ok(Self { names, aux_flags, index })
    }

    /// Manifest of ordinary features only.
    pub fn ordinary(names: Vec<String>) -> Result<Self> {
        let flags = vec![false; names.len()];
        Self::new(names, flags)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn aux_flags(&self) -> &[bool] {
        &self.aux_flags
    }

    pub fn name(&self, j: usize) -> &str {
        &self.names[j]
    }

    pub fn is_auxiliary(&self, j: usize) -> bool {
        self.aux_flags[j]
    }

    /// Number of ordinary (non-auxiliary) features.
    pub fn ordinary_count(&self) -> usize {
        self.aux_flags.iter().filter(|&&a| !a).count()
    }

    /// Number of auxiliary features.
    pub fn auxiliary_count(&self) -> usize {
        self.aux_flags.iter().filter(|&&a| a).count()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// New manifest with one auxiliary feature appended.
    pub fn with_auxiliary(&self, name: &str) -> Result<Self> {
        let mut names = self.names.clone();
        let mut flags = self.aux_flags.clone();
        names.push(name.to_owned());
        flags.push(true);
        Self::new(names, flags)
    }

    /// Manifest restricted to the given indices, preserving their order.
    pub fn subset(&self, keep: &[usize]) -> Result<Self> {
        let names = keep.iter().map(|&j| self.names[j].clone()).collect();
        let flags = keep.iter().map(|&j| self.aux_flags[j]).collect();
        Self::new(names, flags)
    }
}

/// Dense feature values aligned to a [`FeatureManifest`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite feature value {v}")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, j: usize) -> f64 {
        self.values[j]
    }
}

/// One candidate parse: its feature values, its lexical dependency tuples,
/// and the predicate of its root structure when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseCandidate {
    pub id: String,
    pub features: FeatureVector,
    pub tuples: Vec<DependencyTuple>,
    pub root_governor: Option<String>,
}

impl ParseCandidate {
    pub fn new(id: impl Into<String>, features: FeatureVector) -> Self {
        Self { id: id.into(), features, tuples: Vec::new(), root_governor: None }
    }
}

/// A sentence with its candidate parse set and the index of the gold parse.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceItem {
    pub id: String,
    pub candidates: Vec<ParseCandidate>,
    pub gold_index: usize,
}

impl SentenceItem {
    pub fn new(id: impl Into<String>, candidates: Vec<ParseCandidate>, gold_index: usize) -> Result<Self> {
        let id = id.into();
        if candidates.is_empty() {
            return Err(Error::InvalidSentence { sentence: id, message: "no candidates".into() });
        }
        if gold_index >= candidates.len() {
            return Err(Error::InvalidSentence {
                sentence: id,
                message: format!("gold index {gold_index} out of range ({} candidates)", candidates.len()),
            });
        }
        let mut ids: Vec<&str> = candidates.iter().map(|c| c.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSentence { sentence: id, message: "duplicate candidate ids".into() });
        }
        Ok(Self { id, candidates, gold_index })
    }

    pub fn gold(&self) -> &ParseCandidate {
        &self.candidates[self.gold_index]
    }

    /// A sentence with exactly one candidate carries no training signal.
    pub fn is_ambiguous(&self) -> bool {
        self.candidates.len() > 1
    }
}

/// A feature manifest plus the sentences whose candidates conform to it.
#[derive(Debug, Clone, PartialEq)]
pub struct DisambiguationCorpus {
    pub manifest: FeatureManifest,
    pub sentences: Vec<SentenceItem>,
}

impl DisambiguationCorpus {
    pub fn new(manifest: FeatureManifest, sentences: Vec<SentenceItem>) -> Result<Self> {
        for sentence in &sentences {
            for cand in &sentence.candidates {
                if cand.features.len() != manifest.len() {
                    return Err(Error::InvalidSentence {
                        sentence: sentence.id.clone(),
                        message: format!(
                            "candidate {} has {} feature values, manifest has {}",
                            cand.id,
                            cand.features.len(),
                            manifest.len()
                        ),
                    });
                }
                for t in &cand.tuples {
                    if t.count == 0 {
                        return Err(Error::InvalidSentence {
                            sentence: sentence.id.clone(),
                            message: format!("candidate {} has a zero-count tuple", cand.id),
                        });
                    }
                }
            }
        }
        Ok(Self { manifest, sentences })
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Re-align the corpus onto `target`, filling features the corpus lacks
    /// with zero. Feature names, not positions, carry identity.
    pub fn project_onto(&self, target: &FeatureManifest) -> DisambiguationCorpus {
        let mapping: Vec<Option<usize>> =
            target.names().iter().map(|n| self.manifest.index_of(n)).collect();
        let sentences = self
            .sentences
            .iter()
            .map(|s| SentenceItem {
                id: s.id.clone(),
                gold_index: s.gold_index,
                candidates: s
                    .candidates
                    .iter()
                    .map(|c| ParseCandidate {
                        id: c.id.clone(),
                        features: FeatureVector {
                            values: mapping
                                .iter()
                                .map(|m| m.map_or(0.0, |j| c.features.get(j)))
                                .collect(),
                        },
                        tuples: c.tuples.clone(),
                        root_governor: c.root_governor.clone(),
                    })
                    .collect(),
            })
            .collect();
        DisambiguationCorpus { manifest: target.clone(), sentences }
    }
}

/// Weight vector and regularization scales for a feature manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub manifest: FeatureManifest,
    pub lambda: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl ModelParams {
    pub fn new(manifest: FeatureManifest, lambda: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if lambda.len() != manifest.len() || sigma.len() != manifest.len() {
            return Err(Error::InvalidParams(format!(
                "manifest has {} features, lambda {}, sigma {}",
                manifest.len(),
                lambda.len(),
                sigma.len()
            )));
        }
        if lambda.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidParams("lambda contains a non-finite entry".into()));
        }
        if sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidParams("sigma must be strictly positive".into()));
        }
        Ok(Self { manifest, lambda, sigma })
    }

    /// All-zero weights (the uniform conditional model) with the given scales.
    pub fn zeros(manifest: FeatureManifest, sigma: Vec<f64>) -> Result<Self> {
        let lambda = vec![0.0; manifest.len()];
        Self::new(manifest, lambda, sigma)
    }
}

fn candidate_scores(model: &ModelParams, sentence: &SentenceItem) -> Result<Vec<f64>> {
    sentence
        .candidates
        .iter()
        .map(|cand| {
            let values = cand.features.values();
            if values.len() != model.lambda.len() {
                return Err(Error::InvalidSentence {
                    sentence: sentence.id.clone(),
                    message: format!(
                        "candidate {} has {} feature values, model has {}",
                        cand.id,
                        values.len(),
                        model.lambda.len()
                    ),
                });
            }
            let score: f64 = model.lambda.iter().zip(values).map(|(l, v)| l * v).sum();
            if !score.is_finite() {
                return Err(Error::NonFiniteScore {
                    sentence: sentence.id.clone(),
                    candidate: cand.id.clone(),
                });
            }
            Ok(score)
        })
        .collect()
}

/// log sum_i exp(scores[i]), max-subtracted so large scores cannot overflow.
fn log_normalizer(scores: &[f64]) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

/// Per-candidate log-linear scores `lambda . f`, for callers that need the
/// unnormalized log scale (tie detection, report output).
pub fn log_scores(model: &ModelParams, sentence: &SentenceItem) -> Result<Vec<f64>> {
    candidate_scores(model, sentence)
}

/// Conditional probability of each candidate given the sentence.
pub fn conditional_parse_distribution(model: &ModelParams, sentence: &SentenceItem) -> Result<Vec<f64>> {
    let scores = candidate_scores(model, sentence)?;
    let lz = log_normalizer(&scores);
    Ok(scores.iter().map(|s| (s - lz).exp()).collect())
}

/// Sum over sentences of the gold parse's conditional log-probability.
/// Single-candidate sentences contribute exactly zero.
pub fn log_pseudo_likelihood(model: &ModelParams, corpus: &DisambiguationCorpus) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut total = 0.0;
    for sentence in &corpus.sentences {
        let scores = candidate_scores(model, sentence)?;
        total += scores[sentence.gold_index] - log_normalizer(&scores);
    }
    Ok(total)
}

/// Regularization scales: 7 times the largest absolute value each feature
/// takes anywhere in the corpus, or 7 for features that never fire. The
/// absolute value keeps scales positive for log-valued auxiliary features.
pub fn default_sigma(corpus: &DisambiguationCorpus) -> Vec<f64> {
    let mut max_abs = vec![0.0_f64; corpus.manifest.len()];
    for sentence in &corpus.sentences {
        for cand in &sentence.candidates {
            for (j, v) in cand.features.values().iter().enumerate() {
                max_abs[j] = max_abs[j].max(v.abs());
            }
        }
    }
    max_abs.iter().map(|&m| if m > 0.0 { 7.0 * m } else { 7.0 }).collect()
}

/// Log pseudo-likelihood minus the Gaussian penalty
/// `sum_j lambda_j^2 / (2 sigma_j^2)`.
pub fn regularized_objective(model: &ModelParams, corpus: &DisambiguationCorpus) -> Result<f64> {
    let pl = log_pseudo_likelihood(model, corpus)?;
    let penalty: f64 = model
        .lambda
        .iter()
        .zip(&model.sigma)
        .map(|(l, s)| l * l / (2.0 * s * s))
        .sum();
    Ok(pl - penalty)
}

/// Exact gradient of [`regularized_objective`]: per feature, gold value minus
/// its conditional expectation, summed over sentences, minus
/// `lambda_j / sigma_j^2`.
pub fn objective_gradient(model: &ModelParams, corpus: &DisambiguationCorpus) -> Result<Vec<f64>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let dim = model.manifest.len();
    let mut grad = vec![0.0_f64; dim];
    for sentence in &corpus.sentences {
        let probs = conditional_parse_distribution(model, sentence)?;
        for (j, v) in sentence.gold().features.values().iter().enumerate() {
            grad[j] += v;
        }
        for (cand, p) in sentence.candidates.iter().zip(&probs) {
            for (j, v) in cand.features.values().iter().enumerate() {
                grad[j] -= p * v;
            }
        }
    }
    for j in 0..dim {
        grad[j] -= model.lambda[j] / (model.sigma[j] * model.sigma[j]);
    }
    Ok(grad)
}
