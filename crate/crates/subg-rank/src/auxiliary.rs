//! Auxiliary distributions attached as log-valued features.
//!
//! An auxiliary score assigns every candidate a strictly positive number; it
//! does not have to normalize to anything. Attaching one appends the feature
//! `ln q` to the manifest. The learned weight on that feature scales the
//! score's contribution: weight 1 makes it a fixed reference factor, weight 0
//! ignores it, and several scores compose as a geometric mixture.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{DisambiguationCorpus, FeatureVector, ParseCandidate, SentenceItem};

/// Default lift applied to scores of exactly zero when flooring is requested.
pub const DEFAULT_ZERO_FLOOR: f64 = 1e-10;

/// A named positive score for every candidate of every sentence, keyed by
/// `(sentence id, candidate id)`.
#[derive(Debug, Clone, Default)]
pub struct AuxiliaryScore {
    pub name: String,
    scores: BTreeMap<(String, String), f64>,
}

impl AuxiliaryScore {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), scores: BTreeMap::new() }
    }

    pub fn insert(&mut self, sentence: impl Into<String>, candidate: impl Into<String>, q: f64) {
        self.scores.insert((sentence.into(), candidate.into()), q);
    }

    pub fn get(&self, sentence: &str, candidate: &str) -> Option<f64> {
        self.scores.get(&(sentence.to_owned(), candidate.to_owned())).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Multiply every score by `c`. Scaling never changes any conditional
    /// distribution; it only shifts the log feature by a constant.
    pub fn scale(&mut self, c: f64) {
        for v in self.scores.values_mut() {
            *v *= c;
        }
    }
}

fn score_for(aux: &AuxiliaryScore, sentence: &SentenceItem, cand: &ParseCandidate) -> Result<f64> {
    aux.get(&sentence.id, &cand.id).ok_or_else(|| Error::MissingAuxScore {
        name: aux.name.clone(),
        sentence: sentence.id.clone(),
        candidate: cand.id.clone(),
    })
}

fn attach(
    corpus: &DisambiguationCorpus,
    aux: &AuxiliaryScore,
    zero_floor: Option<f64>,
) -> Result<(DisambiguationCorpus, usize)> {
    let manifest = corpus.manifest.with_auxiliary(&aux.name)?;
    let mut floored = 0usize;
    let mut sentences = Vec::with_capacity(corpus.sentences.len());
    for sentence in &corpus.sentences {
        let mut candidates = Vec::with_capacity(sentence.candidates.len());
        for cand in &sentence.candidates {
            let q = score_for(aux, sentence, cand)?;
            let q = match zero_floor {
                Some(floor) if q == 0.0 => {
                    floored += 1;
                    floor
                }
                _ => q,
            };
            if !(q > 0.0) || !q.is_finite() {
                return Err(Error::StrictPositivity {
                    name: aux.name.clone(),
                    sentence: sentence.id.clone(),
                    candidate: cand.id.clone(),
                    value: q,
                });
            }
            let mut values = cand.features.values().to_vec();
            values.push(q.ln());
            candidates.push(ParseCandidate {
                id: cand.id.clone(),
                features: FeatureVector::new(values)?,
                tuples: cand.tuples.clone(),
                root_governor: cand.root_governor.clone(),
            });
        }
        sentences.push(SentenceItem {
            id: sentence.id.clone(),
            candidates,
            gold_index: sentence.gold_index,
        });
    }
    Ok((DisambiguationCorpus { manifest, sentences }, floored))
}

/// Append `ln q` as a new auxiliary feature. Every candidate must have a
/// strictly positive score; zero or negative scores are rejected.
pub fn attach_auxiliary(
    corpus: &DisambiguationCorpus,
    aux: &AuxiliaryScore,
) -> Result<DisambiguationCorpus> {
    attach(corpus, aux, None).map(|(c, _)| c)
}

/// Like [`attach_auxiliary`] but scores of exactly zero are lifted to
/// `floor` before the log. Returns the corpus and how many scores were
/// lifted; negative scores are still rejected.
pub fn attach_auxiliary_floored(
    corpus: &DisambiguationCorpus,
    aux: &AuxiliaryScore,
    floor: f64,
) -> Result<(DisambiguationCorpus, usize)> {
    if !(floor > 0.0) {
        return Err(Error::InvalidConfig(format!("zero floor must be positive, got {floor}")));
    }
    attach(corpus, aux, Some(floor))
}

/// The geometric mixture `prod_j q_j ^ weight_j` of several auxiliary scores
/// at one candidate. With this as the fixed reference factor, a model over
/// the ordinary features alone matches the model that carries the scores as
/// weighted log features.
pub fn composed_reference(
    auxes: &[AuxiliaryScore],
    weights: &[f64],
    sentence: &str,
    candidate: &str,
) -> Result<f64> {
    if auxes.len() != weights.len() {
        return Err(Error::InvalidConfig(format!(
            "{} auxiliary scores but {} weights",
            auxes.len(),
            weights.len()
        )));
    }
    let mut product = 1.0;
    for (aux, w) in auxes.iter().zip(weights) {
        let q = aux.get(sentence, candidate).ok_or_else(|| Error::MissingAuxScore {
            name: aux.name.clone(),
            sentence: sentence.to_owned(),
            candidate: candidate.to_owned(),
        })?;
        if !(q > 0.0) {
            return Err(Error::StrictPositivity {
                name: aux.name.clone(),
                sentence: sentence.to_owned(),
                candidate: candidate.to_owned(),
                value: q,
            });
        }
        product *= q.powf(*w);
    }
    Ok(product)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{conditional_parse_distribution, FeatureManifest, ModelParams};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy_corpus(rows: &[&[f64]]) -> DisambiguationCorpus {
        let names = (0..rows[0].len()).map(|j| format!("f{j:02}")).collect();
        let manifest = FeatureManifest::ordinary(names).unwrap();
        let candidates = rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                ParseCandidate::new(format!("p{i}"), FeatureVector::new(row.to_vec()).unwrap())
            })
            .collect();
        let sentence = SentenceItem::new("s0", candidates, 0).unwrap();
        DisambiguationCorpus::new(manifest, vec![sentence]).unwrap()
    }

    fn aux_for(corpus: &DisambiguationCorpus, name: &str, qs: &[f64]) -> AuxiliaryScore {
        let mut aux = AuxiliaryScore::new(name);
        for sentence in &corpus.sentences {
            for (cand, q) in sentence.candidates.iter().zip(qs) {
                aux.insert(sentence.id.clone(), cand.id.clone(), *q);
            }
        }
        aux
    }

    #[test]
    fn attached_feature_is_log_of_score() {
        let corpus = toy_corpus(&[&[1.0], &[0.0]]);
        let aux = aux_for(&corpus, "q", &[0.25, 0.5]);
        let out = attach_auxiliary(&corpus, &aux).unwrap();
        assert_eq!(out.manifest.len(), 2);
        assert!(out.manifest.is_auxiliary(1));
        let v = out.sentences[0].candidates[0].features.get(1);
        assert_abs_diff_eq!(v, 0.25_f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(v, -1.386294, epsilon = 1e-6);
    }

    #[test]
    fn unit_scores_become_a_constant_zero_feature() {
        let corpus = toy_corpus(&[&[1.0], &[0.0]]);
        let aux = aux_for(&corpus, "q", &[1.0, 1.0]);
        let out = attach_auxiliary(&corpus, &aux).unwrap();
        for cand in &out.sentences[0].candidates {
            assert_eq!(cand.features.get(1), 0.0);
        }
    }

    #[test]
    fn zero_score_violates_strict_positivity() {
        let corpus = toy_corpus(&[&[1.0], &[0.0]]);
        let aux = aux_for(&corpus, "q", &[0.25, 0.0]);
        match attach_auxiliary(&corpus, &aux) {
            Err(Error::StrictPositivity { sentence, candidate, .. }) => {
                assert_eq!(sentence, "s0");
                assert_eq!(candidate, "p1");
            }
            other => panic!("expected StrictPositivity, got {other:?}"),
        }
    }

    #[test]
    fn missing_score_is_a_coverage_error() {
        let corpus = toy_corpus(&[&[1.0], &[0.0]]);
        let mut aux = AuxiliaryScore::new("q");
        aux.insert("s0", "p0", 0.5);
        assert!(matches!(
            attach_auxiliary(&corpus, &aux),
            Err(Error::MissingAuxScore { .. })
        ));
    }

    #[test]
    fn flooring_lifts_exact_zeros_and_counts_them() {
        let corpus = toy_corpus(&[&[1.0], &[0.0]]);
        let aux = aux_for(&corpus, "q", &[0.25, 0.0]);
        let (out, floored) =
            attach_auxiliary_floored(&corpus, &aux, DEFAULT_ZERO_FLOOR).unwrap();
        assert_eq!(floored, 1);
        assert_abs_diff_eq!(
            out.sentences[0].candidates[1].features.get(1),
            DEFAULT_ZERO_FLOOR.ln(),
            epsilon = 1e-12
        );
        // Negative scores stay fatal even when flooring.
        let bad = aux_for(&corpus, "q", &[0.25, -0.1]);
        assert!(attach_auxiliary_floored(&corpus, &bad, DEFAULT_ZERO_FLOOR).is_err());
    }

    #[test]
    fn reference_weight_one_returns_the_score() {
        let corpus = toy_corpus(&[&[1.0]]);
        let aux = aux_for(&corpus, "q", &[0.3]);
        let q = composed_reference(&[aux], &[1.0], "s0", "p0").unwrap();
        assert_abs_diff_eq!(q, 0.3, epsilon = 1e-15);
    }

    #[test]
    fn weight_zero_ignores_the_score() {
        let corpus = toy_corpus(&[&[1.0]]);
        let aux = aux_for(&corpus, "q", &[0.737]);
        let q = composed_reference(&[aux], &[0.0], "s0", "p0").unwrap();
        assert_eq!(q, 1.0);
    }

    #[test]
    fn geometric_mixture_of_two_scores() {
        let corpus = toy_corpus(&[&[1.0]]);
        let a = aux_for(&corpus, "a", &[0.25]);
        let b = aux_for(&corpus, "b", &[0.04]);
        let q = composed_reference(&[a, b], &[1.0, 0.5], "s0", "p0").unwrap();
        assert_abs_diff_eq!(q, 0.05, epsilon = 1e-15);
    }

    /// Direct evaluation of the exponential model with an explicit reference
    /// factor; the oracle for the feature-based route.
    fn reference_route(
        auxes: &[AuxiliaryScore],
        ordinary_lambda: &[f64],
        aux_lambda: &[f64],
        sentence: &SentenceItem,
    ) -> Vec<f64> {
        let weights: Vec<f64> = sentence
            .candidates
            .iter()
            .map(|cand| {
                let q = composed_reference(auxes, aux_lambda, &sentence.id, &cand.id).unwrap();
                let score: f64 = ordinary_lambda
                    .iter()
                    .zip(cand.features.values())
                    .map(|(l, v)| l * v)
                    .sum();
                q * score.exp()
            })
            .collect();
        let z: f64 = weights.iter().sum();
        weights.iter().map(|w| w / z).collect()
    }

    #[test]
    fn feature_route_equals_reference_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..30 {
            let rows: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..2).map(|_| rng.gen_range(0..=4) as f64).collect())
                .collect();
            let row_refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            let corpus = toy_corpus(&row_refs);
            let qa: Vec<f64> = (0..3).map(|_| rng.gen_range(0.01..1.0)).collect();
            let qb: Vec<f64> = (0..3).map(|_| rng.gen_range(0.01..1.0)).collect();
            let a = aux_for(&corpus, "a", &qa);
            let b = aux_for(&corpus, "b", &qb);
            let attached = attach_auxiliary(&attach_auxiliary(&corpus, &a).unwrap(), &b).unwrap();

            let ordinary: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let aux_w: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let mut lambda = ordinary.clone();
            lambda.extend(&aux_w);
            let model =
                ModelParams::new(attached.manifest.clone(), lambda, vec![7.0; 4]).unwrap();
            let via_features =
                conditional_parse_distribution(&model, &attached.sentences[0]).unwrap();
            let via_reference =
                reference_route(&[a, b], &ordinary, &aux_w, &corpus.sentences[0]);
            for (x, y) in via_features.iter().zip(&via_reference) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn scaling_scores_never_moves_the_conditional() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..30 {
            let rows: Vec<Vec<f64>> = (0..4)
                .map(|_| (0..2).map(|_| rng.gen_range(0..=4) as f64).collect())
                .collect();
            let row_refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            let corpus = toy_corpus(&row_refs);
            let qs: Vec<f64> = (0..4).map(|_| rng.gen_range(0.01..1.0)).collect();
            let aux = aux_for(&corpus, "q", &qs);
            let mut scaled = aux.clone();
            scaled.scale(rng.gen_range(0.001..1000.0));

            let lambda = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.5..1.5)];
            let one = attach_auxiliary(&corpus, &aux).unwrap();
            let two = attach_auxiliary(&corpus, &scaled).unwrap();
            let m1 = ModelParams::new(one.manifest.clone(), lambda.clone(), vec![7.0; 3]).unwrap();
            let m2 = ModelParams::new(two.manifest.clone(), lambda, vec![7.0; 3]).unwrap();
            let p1 = conditional_parse_distribution(&m1, &one.sentences[0]).unwrap();
            let p2 = conditional_parse_distribution(&m2, &two.sentences[0]).unwrap();
            for (x, y) in p1.iter().zip(&p2) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn attachment_order_only_permutes_features() {
        let corpus = toy_corpus(&[&[1.0], &[2.0]]);
        let a = aux_for(&corpus, "a", &[0.2, 0.4]);
        let b = aux_for(&corpus, "b", &[0.9, 0.1]);
        let ab = attach_auxiliary(&attach_auxiliary(&corpus, &a).unwrap(), &b).unwrap();
        let ba = attach_auxiliary(&attach_auxiliary(&corpus, &b).unwrap(), &a).unwrap();
        for name in ["a", "b"] {
            let i = ab.manifest.index_of(name).unwrap();
            let j = ba.manifest.index_of(name).unwrap();
            for (s_ab, s_ba) in ab.sentences.iter().zip(&ba.sentences) {
                for (c_ab, c_ba) in s_ab.candidates.iter().zip(&s_ba.candidates) {
                    assert_eq!(c_ab.features.get(i), c_ba.features.get(j));
                }
            }
        }
    }
}
