//! Test-set measures and the cross-validation harness.
//!
//! Evaluation works on corpora that have been cleaned the same way training
//! expects: sentences with a single candidate are dropped (they carry no
//! signal either way) and features that never differ between the parses of
//! any one sentence are pruned. Both transforms are exposed here, and
//! [`k_fold_cv`] applies the pruning per training split so no test-set
//! information leaks into preprocessing.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    conditional_parse_distribution, default_sigma, log_scores, DisambiguationCorpus,
    ModelParams, SentenceItem,
};

/// Absolute tolerance on log scores below which candidates count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Scores of one evaluation pass.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EvalReport {
    /// Sum of per-sentence credit: 1 for a unique gold argmax, 1/t when the
    /// gold ties with t-1 others, 0 otherwise.
    pub correct_credit: f64,
    /// Negative sum of gold conditional log-probabilities; lower is better.
    pub neg_log_pl: f64,
    /// Sentences whose gold feature vector equals some other candidate's.
    pub indistinguishable: usize,
    pub num_sentences: usize,
}

impl EvalReport {
    pub fn zero() -> Self {
        Self { correct_credit: 0.0, neg_log_pl: 0.0, indistinguishable: 0, num_sentences: 0 }
    }

    pub fn accumulate(&mut self, other: &EvalReport) {
        self.correct_credit += other.correct_credit;
        self.neg_log_pl += other.neg_log_pl;
        self.indistinguishable += other.indistinguishable;
        self.num_sentences += other.num_sentences;
    }
}

/// One cross-validation fold: the split, the model fitted on the training
/// side, and the test-side report.
#[derive(Debug, Clone)]
pub struct FoldResult {
    pub fold_index: usize,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub model: ModelParams,
    pub report: EvalReport,
}

/// Drop features whose value is constant within every sentence's candidate
/// set. Such features cancel in every conditional distribution, so removing
/// them never changes model behaviour. Returns the pruned corpus and the
/// removed names.
pub fn prune_pseudo_constant(
    corpus: &DisambiguationCorpus,
) -> (DisambiguationCorpus, Vec<String>) {
    let dim = corpus.manifest.len();
    let mut informative = vec![false; dim];
    for sentence in &corpus.sentences {
        let first = sentence.candidates[0].features.values();
        for cand in &sentence.candidates[1..] {
            for (j, (a, b)) in first.iter().zip(cand.features.values()).enumerate() {
                if a != b {
                    informative[j] = true;
                }
            }
        }
    }
    let keep: Vec<usize> = (0..dim).filter(|&j| informative[j]).collect();
    let removed: Vec<String> = (0..dim)
        .filter(|&j| !informative[j])
        .map(|j| corpus.manifest.name(j).to_owned())
        .collect();
    let target = corpus.manifest.subset(&keep).expect("subset of a valid manifest");
    (corpus.project_onto(&target), removed)
}

/// Remove sentences with exactly one candidate.
pub fn drop_unambiguous(corpus: &DisambiguationCorpus) -> DisambiguationCorpus {
    DisambiguationCorpus {
        manifest: corpus.manifest.clone(),
        sentences: corpus.sentences.iter().filter(|s| s.is_ambiguous()).cloned().collect(),
    }
}

/// Whether some non-gold candidate has exactly the gold candidate's feature
/// values (bitwise). No weight vector can then prefer the gold parse.
pub fn sentence_is_indistinguishable(sentence: &SentenceItem) -> bool {
    let gold = sentence.gold().features.values();
    sentence.candidates.iter().enumerate().any(|(i, cand)| {
        i != sentence.gold_index
            && gold.len() == cand.features.len()
            && gold
                .iter()
                .zip(cand.features.values())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    })
}

/// Ids of all indistinguishable sentences, sorted.
pub fn indistinguishable_sentences(corpus: &DisambiguationCorpus) -> BTreeSet<String> {
    corpus
        .sentences
        .iter()
        .filter(|s| sentence_is_indistinguishable(s))
        .map(|s| s.id.clone())
        .collect()
}

/// Credit earned on one sentence: 1 when the gold parse is the unique
/// argmax, 1/t when it ties with t-1 others (the expected value of breaking
/// the tie uniformly at random), 0 otherwise.
pub fn sentence_credit(model: &ModelParams, sentence: &SentenceItem) -> Result<f64> {
    let scores = log_scores(model, sentence)?;
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied = scores.iter().filter(|s| (max - **s).abs() <= TIE_TOLERANCE).count();
    let gold_tied = (max - scores[sentence.gold_index]).abs() <= TIE_TOLERANCE;
    Ok(if gold_tied { 1.0 / tied as f64 } else { 0.0 })
}

/// Total credit over the corpus.
pub fn correct_parses_measure(model: &ModelParams, corpus: &DisambiguationCorpus) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut total = 0.0;
    for sentence in &corpus.sentences {
        total += sentence_credit(model, sentence)?;
    }
    Ok(total)
}

/// Negative log pseudo-likelihood of the gold parses.
pub fn neg_log_pl_measure(model: &ModelParams, corpus: &DisambiguationCorpus) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut total = 0.0;
    for sentence in &corpus.sentences {
        let probs = conditional_parse_distribution(model, sentence)?;
        let gold = probs[sentence.gold_index];
        if gold <= 0.0 {
            return Err(Error::ZeroGoldProbability { sentence: sentence.id.clone() });
        }
        total -= gold.ln();
    }
    Ok(total)
}

/// All three measures in one pass.
pub fn evaluate(model: &ModelParams, corpus: &DisambiguationCorpus) -> Result<EvalReport> {
    Ok(EvalReport {
        correct_credit: correct_parses_measure(model, corpus)?,
        neg_log_pl: neg_log_pl_measure(model, corpus)?,
        indistinguishable: indistinguishable_sentences(corpus).len(),
        num_sentences: corpus.len(),
    })
}

/// Seeded partition of `0..num` into `k` folds whose sizes differ by at most
/// one; the first `num % k` folds hold the extra element.
pub fn fold_partition(num: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > num {
        return Err(Error::BadFoldCount { folds: k, sentences: num });
    }
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut order: Vec<usize> = (0..num).collect();
    order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    let base = num / k;
    let extra = num % k;
    let mut folds = Vec::with_capacity(k);
    let mut offset = 0;
    for i in 0..k {
        let size = base + usize::from(i < extra);
        folds.push(order[offset..offset + size].to_vec());
        offset += size;
    }
    Ok(folds)
}

/// K-fold cross-validation.
///
/// Each fold's training split is pruned of pseudo-constant features and gets
/// its own regularization scales before `trainer` fits the weights; the test
/// split is projected onto the surviving features for evaluation. Folds are
/// independent and run in parallel; the cumulative report sums the fold
/// reports in fold order.
pub fn k_fold_cv<T>(
    corpus: &DisambiguationCorpus,
    k: usize,
    seed: u64,
    trainer: T,
) -> Result<(Vec<FoldResult>, EvalReport)>
where
    T: Fn(&DisambiguationCorpus, &[f64]) -> Result<ModelParams> + Sync,
{
    let folds = fold_partition(corpus.len(), k, seed)?;
    let results: Vec<FoldResult> = folds
        .par_iter()
        .enumerate()
        .map(|(fold_index, test_indices)| {
            let in_test: BTreeSet<usize> = test_indices.iter().copied().collect();
            let train_sentences: Vec<SentenceItem> = corpus
                .sentences
                .iter()
                .enumerate()
                .filter(|(i, _)| !in_test.contains(i))
                .map(|(_, s)| s.clone())
                .collect();
            let test_sentences: Vec<SentenceItem> =
                test_indices.iter().map(|&i| corpus.sentences[i].clone()).collect();

            let train =
                DisambiguationCorpus { manifest: corpus.manifest.clone(), sentences: train_sentences };
            let (train, _removed) = prune_pseudo_constant(&train);
            let sigma = default_sigma(&train);
            let model = trainer(&train, &sigma)?;

            let test = DisambiguationCorpus {
                manifest: corpus.manifest.clone(),
                sentences: test_sentences,
            }
            .project_onto(&model.manifest);
            let report = evaluate(&model, &test)?;
            Ok(FoldResult {
                fold_index,
                train_ids: train.sentences.iter().map(|s| s.id.clone()).collect(),
                test_ids: test.sentences.iter().map(|s| s.id.clone()).collect(),
                model,
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cumulative = EvalReport::zero();
    for fold in &results {
        cumulative.accumulate(&fold.report);
    }
    Ok((results, cumulative))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FeatureManifest, FeatureVector, ParseCandidate};
    use approx::assert_abs_diff_eq;

    fn manifest(names: &[&str]) -> FeatureManifest {
        FeatureManifest::ordinary(names.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    fn sentence(id: &str, rows: &[&[f64]], gold: usize) -> SentenceItem {
        let candidates = rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                ParseCandidate::new(format!("p{i}"), FeatureVector::new(row.to_vec()).unwrap())
            })
            .collect();
        SentenceItem::new(id, candidates, gold).unwrap()
    }

    fn corpus(names: &[&str], sentences: Vec<SentenceItem>) -> DisambiguationCorpus {
        DisambiguationCorpus::new(manifest(names), sentences).unwrap()
    }

    #[test]
    fn per_sentence_constants_are_pruned() {
        // First feature: 3 on both parses of sentence A, 5 on both parses of
        // sentence B; constant within each sentence, so it goes.
        let c = corpus(
            &["const", "varies"],
            vec![
                sentence("a", &[&[3.0, 1.0], &[3.0, 0.0]], 0),
                sentence("b", &[&[5.0, 2.0], &[5.0, 7.0]], 1),
            ],
        );
        let (pruned, removed) = prune_pseudo_constant(&c);
        assert_eq!(removed, vec!["const".to_owned()]);
        assert_eq!(pruned.manifest.names(), &["varies".to_owned()]);
    }

    #[test]
    fn within_sentence_variation_is_kept() {
        let c = corpus(
            &["f"],
            vec![sentence("a", &[&[1.0], &[1.0]], 0), sentence("b", &[&[1.0], &[2.0]], 0)],
        );
        let (pruned, removed) = prune_pseudo_constant(&c);
        assert!(removed.is_empty());
        assert_eq!(pruned.manifest.len(), 1);
    }

    #[test]
    fn pruning_preserves_conditional_distributions() {
        let c = corpus(
            &["const", "varies"],
            vec![
                sentence("a", &[&[3.0, 1.0], &[3.0, 0.0]], 0),
                sentence("b", &[&[5.0, 2.0], &[5.0, 7.0]], 1),
            ],
        );
        let (pruned, _) = prune_pseudo_constant(&c);
        // Any weight on the pruned feature cancels; match the surviving one.
        let full = ModelParams::new(c.manifest.clone(), vec![2.2, 0.6], vec![7.0, 7.0]).unwrap();
        let restricted =
            ModelParams::new(pruned.manifest.clone(), vec![0.6], vec![7.0]).unwrap();
        for (sf, sp) in c.sentences.iter().zip(&pruned.sentences) {
            let pf = conditional_parse_distribution(&full, sf).unwrap();
            let pp = conditional_parse_distribution(&restricted, sp).unwrap();
            for (x, y) in pf.iter().zip(&pp) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-12);
            }
        }
        // With zero weight on the pruned feature the objectives agree too.
        let zeroed = ModelParams::new(c.manifest.clone(), vec![0.0, 0.6], vec![7.0, 7.0]).unwrap();
        let obj_full = crate::model::regularized_objective(&zeroed, &c).unwrap();
        let obj_pruned = crate::model::regularized_objective(&restricted, &pruned).unwrap();
        assert_abs_diff_eq!(obj_full, obj_pruned, epsilon = 1e-12);
    }

    #[test]
    fn unambiguous_sentences_are_dropped() {
        let c = corpus(
            &["f"],
            vec![
                sentence("a", &[&[1.0]], 0),
                sentence("b", &[&[1.0], &[2.0]], 0),
                sentence("c", &[&[4.0]], 0),
            ],
        );
        let filtered = drop_unambiguous(&c);
        assert_eq!(filtered.len(), 1);
        assert_eq!(filtered.sentences[0].id, "b");
        // Already ambiguous corpora pass through unchanged.
        let again = drop_unambiguous(&filtered);
        assert_eq!(again, filtered);
    }

    #[test]
    fn dropping_everything_leaves_an_empty_corpus() {
        let c = corpus(&["f"], vec![sentence("a", &[&[1.0]], 0)]);
        let filtered = drop_unambiguous(&c);
        assert!(filtered.is_empty());
        let m = ModelParams::zeros(filtered.manifest.clone(), vec![7.0]).unwrap();
        assert!(matches!(correct_parses_measure(&m, &filtered), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn identical_gold_vector_is_indistinguishable() {
        let c = corpus(
            &["f", "g"],
            vec![
                sentence("dup", &[&[1.0, 2.0], &[1.0, 2.0], &[0.0, 0.0]], 0),
                sentence("ok", &[&[1.0, 2.0], &[1.0, 3.0]], 0),
            ],
        );
        let ids = indistinguishable_sentences(&c);
        assert!(ids.contains("dup"));
        assert!(!ids.contains("ok"));
    }

    #[test]
    fn adding_a_feature_never_adds_indistinguishable_sentences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let n_sent = rng.gen_range(2..6);
            let sentences: Vec<SentenceItem> = (0..n_sent)
                .map(|i| {
                    let n_cand = rng.gen_range(2..4);
                    let rows: Vec<Vec<f64>> = (0..n_cand)
                        .map(|_| (0..2).map(|_| rng.gen_range(0..=1) as f64).collect())
                        .collect();
                    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
                    sentence(&format!("s{i}"), &refs, 0)
                })
                .collect();
            let base = corpus(&["a", "b"], sentences);
            let before = indistinguishable_sentences(&base).len();

            let manifest = base.manifest.with_auxiliary("extra").unwrap();
            let extended = DisambiguationCorpus {
                manifest,
                sentences: base
                    .sentences
                    .iter()
                    .map(|s| SentenceItem {
                        id: s.id.clone(),
                        gold_index: s.gold_index,
                        candidates: s
                            .candidates
                            .iter()
                            .map(|c| {
                                let mut v = c.features.values().to_vec();
                                v.push(rng.gen_range(0..=1) as f64);
                                ParseCandidate::new(c.id.clone(), FeatureVector::new(v).unwrap())
                            })
                            .collect(),
                    })
                    .collect(),
            };
            let after = indistinguishable_sentences(&extended).len();
            assert!(after <= before, "indistinguishable grew from {before} to {after}");
        }
    }

    #[test]
    fn credit_is_one_for_a_unique_argmax() {
        let c = corpus(&["f"], vec![sentence("a", &[&[1.0], &[0.0]], 0)]);
        let m = ModelParams::new(c.manifest.clone(), vec![1.0], vec![7.0]).unwrap();
        assert_eq!(correct_parses_measure(&m, &c).unwrap(), 1.0);
    }

    #[test]
    fn two_way_tie_earns_half() {
        let c = corpus(&["f"], vec![sentence("a", &[&[1.0], &[1.0], &[0.0]], 0)]);
        let m = ModelParams::new(c.manifest.clone(), vec![1.0], vec![7.0]).unwrap();
        assert_eq!(correct_parses_measure(&m, &c).unwrap(), 0.5);
    }

    #[test]
    fn four_way_tie_earns_a_quarter() {
        let c = corpus(
            &["f"],
            vec![sentence("a", &[&[1.0], &[1.0], &[1.0], &[1.0], &[0.0]], 0)],
        );
        let m = ModelParams::new(c.manifest.clone(), vec![1.0], vec![7.0]).unwrap();
        assert_eq!(correct_parses_measure(&m, &c).unwrap(), 0.25);
    }

    #[test]
    fn losing_gold_earns_nothing() {
        let c = corpus(&["f"], vec![sentence("a", &[&[0.0], &[1.0]], 0)]);
        let m = ModelParams::new(c.manifest.clone(), vec![1.0], vec![7.0]).unwrap();
        assert_eq!(correct_parses_measure(&m, &c).unwrap(), 0.0);
    }

    #[test]
    fn uniform_model_neg_log_pl() {
        let c = corpus(
            &["f"],
            vec![sentence("a", &[&[1.0], &[0.0]], 0), sentence("b", &[&[0.0], &[1.0]], 1)],
        );
        let m = ModelParams::zeros(c.manifest.clone(), vec![7.0]).unwrap();
        assert_abs_diff_eq!(
            neg_log_pl_measure(&m, &c).unwrap(),
            2.0 * 2.0_f64.ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            neg_log_pl_measure(&m, &c).unwrap(),
            -crate::model::log_pseudo_likelihood(&m, &c).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn underflowed_gold_probability_names_the_sentence() {
        // Mathematically the gold conditional is always positive, but a gap
        // of ~1000 in log scores underflows exp to zero.
        let c = corpus(&["f"], vec![sentence("tiny", &[&[0.0], &[1000.0]], 0)]);
        let m = ModelParams::new(c.manifest.clone(), vec![1.0], vec![7000.0]).unwrap();
        match neg_log_pl_measure(&m, &c) {
            Err(Error::ZeroGoldProbability { sentence }) => assert_eq!(sentence, "tiny"),
            other => panic!("expected ZeroGoldProbability, got {other:?}"),
        }
    }

    #[test]
    fn scaling_up_a_separating_model_drives_neg_log_pl_down() {
        let c = corpus(
            &["f"],
            vec![sentence("a", &[&[1.0], &[0.0]], 0), sentence("b", &[&[2.0], &[0.0]], 0)],
        );
        let mut previous = f64::INFINITY;
        for scale in [1.0, 2.0, 4.0] {
            let m = ModelParams::new(c.manifest.clone(), vec![scale], vec![7.0]).unwrap();
            let value = neg_log_pl_measure(&m, &c).unwrap();
            assert!(value < previous);
            previous = value;
        }
    }

    #[test]
    fn fold_sizes_differ_by_at_most_one() {
        let folds = fold_partition(324, 10, 17).unwrap();
        let mut sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![32, 32, 32, 32, 32, 32, 33, 33, 33, 33]);

        let mut all: Vec<usize> = folds.into_iter().flatten().collect();
        all.sort_unstable();
        assert_eq!(all, (0..324).collect::<Vec<_>>());
    }

    #[test]
    fn folds_are_seed_reproducible() {
        assert_eq!(fold_partition(50, 5, 9).unwrap(), fold_partition(50, 5, 9).unwrap());
        assert_ne!(fold_partition(50, 5, 9).unwrap(), fold_partition(50, 5, 10).unwrap());
    }

    #[test]
    fn fold_count_must_fit_the_corpus() {
        assert!(matches!(fold_partition(3, 4, 0), Err(Error::BadFoldCount { .. })));
        assert!(matches!(fold_partition(10, 1, 0), Err(Error::BadFoldCount { .. })));
    }

    #[test]
    fn cumulative_report_is_the_exact_fold_sum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let sentences: Vec<SentenceItem> = (0..20)
            .map(|i| {
                let rows: Vec<Vec<f64>> = (0..3)
                    .map(|_| (0..2).map(|_| rng.gen_range(0..=3) as f64).collect())
                    .collect();
                let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
                sentence(&format!("s{i}"), &refs, rng.gen_range(0..3))
            })
            .collect();
        let c = corpus(&["a", "b"], sentences);
        let trainer = |train: &DisambiguationCorpus, sigma: &[f64]| {
            ModelParams::zeros(train.manifest.clone(), sigma.to_vec())
        };
        let (folds, cumulative) = k_fold_cv(&c, 4, 11, trainer).unwrap();
        assert_eq!(folds.len(), 4);
        let mut manual = EvalReport::zero();
        for fold in &folds {
            manual.accumulate(&fold.report);
            let train: BTreeSet<_> = fold.train_ids.iter().collect();
            let test: BTreeSet<_> = fold.test_ids.iter().collect();
            assert!(train.is_disjoint(&test));
        }
        assert_eq!(manual, cumulative);
        assert_eq!(cumulative.num_sentences, 20);
    }
}
