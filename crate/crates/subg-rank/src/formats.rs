//! On-disk formats: JSONL corpora, TSV tuple counts, JSONL auxiliary scores,
//! and JSON model files.
//!
//! A corpus file holds one JSON object per line:
//!
//! ```text
//! {"id": "s1", "candidates": [{"id": "p1", "features": {"name": 2.0},
//!  "tuples": [["eat", "obj", "apple", 1]], "root": "eat", "gold": true}]}
//! ```
//!
//! Exactly one candidate per sentence is gold; features absent from a
//! candidate's map are zero. Writers emit one extra leading object of the
//! form `{"_meta": {...}}` carrying the manifest, the seed, the
//! configuration, and the tool version, so outputs are self-describing and
//! reruns are byte-identical; readers accept files with or without it.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::auxiliary::AuxiliaryScore;
use crate::error::{Error, Result};
use crate::lexsel::{LatentClassModel, TupleCorpus};
use crate::model::{
    DisambiguationCorpus, FeatureManifest, FeatureVector, ModelParams, ParseCandidate,
    SentenceItem,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance block embedded in every output file.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct RunMeta {
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null", default)]
    pub config: serde_json::Value,
}

impl RunMeta {
    pub fn new(seed: Option<u64>, config: serde_json::Value) -> Self {
        Self { version: TOOL_VERSION.to_owned(), seed, config }
    }
}

#[derive(Serialize, Deserialize)]
struct RawCandidate {
    id: String,
    #[serde(default)]
    features: BTreeMap<String, f64>,
    #[serde(default)]
    tuples: Vec<(String, String, String, u32)>,
    #[serde(default)]
    root: Option<String>,
    #[serde(default)]
    gold: bool,
}

#[derive(Serialize, Deserialize)]
struct RawSentence {
    id: String,
    candidates: Vec<RawCandidate>,
}

#[derive(Serialize, Deserialize)]
struct CorpusMeta {
    #[serde(rename = "_meta")]
    meta: CorpusMetaBody,
}

#[derive(Serialize, Deserialize, Default)]
struct CorpusMetaBody {
    #[serde(flatten)]
    run: RunMeta,
    #[serde(default)]
    features: Vec<String>,
    #[serde(default)]
    aux_features: Vec<String>,
}

/// Read a corpus from JSONL. When no meta line declares the manifest, the
/// feature set is the sorted union of all names seen, all ordinary.
pub fn read_corpus<R: Read>(reader: R) -> Result<DisambiguationCorpus> {
    let mut raw_sentences: Vec<(usize, RawSentence)> = Vec::new();
    let mut declared: Option<CorpusMetaBody> = None;

    for (line_no, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let number = line_no + 1;
        if trimmed.contains("\"_meta\"") {
            if let Ok(meta) = serde_json::from_str::<CorpusMeta>(trimmed) {
                declared = Some(meta.meta);
                continue;
            }
        }
        let sentence: RawSentence = serde_json::from_str(trimmed)
            .map_err(|e| Error::ParseLine { line: number, message: e.to_string() })?;
        raw_sentences.push((number, sentence));
    }

    let manifest = match &declared {
        Some(meta) if !meta.features.is_empty() || !meta.aux_features.is_empty() => {
            let mut names = meta.features.clone();
            names.extend(meta.aux_features.iter().cloned());
            let mut flags = vec![false; meta.features.len()];
            flags.extend(vec![true; meta.aux_features.len()]);
            FeatureManifest::new(names, flags)?
        }
        _ => {
            let mut names: Vec<String> = raw_sentences
                .iter()
                .flat_map(|(_, s)| s.candidates.iter())
                .flat_map(|c| c.features.keys().cloned())
                .collect();
            names.sort();
            names.dedup();
            FeatureManifest::ordinary(names)?
        }
    };

    let mut sentences = Vec::with_capacity(raw_sentences.len());
    for (line, raw) in raw_sentences {
        let gold_indices: Vec<usize> = raw
            .candidates
            .iter()
            .enumerate()
            .filter(|(_, c)| c.gold)
            .map(|(i, _)| i)
            .collect();
        if gold_indices.len() != 1 {
            return Err(Error::ParseLine {
                line,
                message: format!(
                    "sentence {} has {} gold candidates, expected exactly 1",
                    raw.id,
                    gold_indices.len()
                ),
            });
        }
        let candidates = raw
            .candidates
            .into_iter()
            .map(|c| {
                let mut values = vec![0.0; manifest.len()];
                for (name, value) in &c.features {
                    match manifest.index_of(name) {
                        Some(j) => values[j] = *value,
                        None => {
                            return Err(Error::ParseLine {
                                line,
                                message: format!("feature {name} not in the declared manifest"),
                            })
                        }
                    }
                }
                let tuples = c
                    .tuples
                    .into_iter()
                    .map(|(g, r, a, count)| {
                        crate::lexsel::DependencyTuple::new(g, r, a, count).map_err(|e| {
                            Error::ParseLine { line, message: e.to_string() }
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(ParseCandidate {
                    id: c.id,
                    features: FeatureVector::new(values)?,
                    tuples,
                    root_governor: c.root,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        sentences.push(
            SentenceItem::new(raw.id, candidates, gold_indices[0])
                .map_err(|e| Error::ParseLine { line, message: e.to_string() })?,
        );
    }

    DisambiguationCorpus::new(manifest, sentences)
}

pub fn read_corpus_file(path: &Path) -> Result<DisambiguationCorpus> {
    read_corpus(File::open(path)?)
}

/// Write a corpus as JSONL, preceded by a meta line declaring the manifest.
/// Zero-valued features are omitted from candidate maps; the meta line keeps
/// the manifest exact across round trips.
pub fn write_corpus<W: Write>(
    writer: W,
    corpus: &DisambiguationCorpus,
    meta: &RunMeta,
) -> Result<()> {
    let mut w = BufWriter::new(writer);
    let body = CorpusMetaBody {
        run: meta.clone(),
        features: corpus
            .manifest
            .names()
            .iter()
            .zip(corpus.manifest.aux_flags())
            .filter(|(_, &aux)| !aux)
            .map(|(n, _)| n.clone())
            .collect(),
        aux_features: corpus
            .manifest
            .names()
            .iter()
            .zip(corpus.manifest.aux_flags())
            .filter(|(_, &aux)| aux)
            .map(|(n, _)| n.clone())
            .collect(),
    };
    serde_json::to_writer(&mut w, &CorpusMeta { meta: body })?;
    w.write_all(b"\n")?;

    for sentence in &corpus.sentences {
        let raw = RawSentence {
            id: sentence.id.clone(),
            candidates: sentence
                .candidates
                .iter()
                .enumerate()
                .map(|(i, c)| RawCandidate {
                    id: c.id.clone(),
                    features: corpus
                        .manifest
                        .names()
                        .iter()
                        .zip(c.features.values())
                        .filter(|(_, &v)| v != 0.0)
                        .map(|(n, &v)| (n.clone(), v))
                        .collect(),
                    tuples: c
                        .tuples
                        .iter()
                        .map(|t| {
                            (t.governor.clone(), t.relation.clone(), t.argument.clone(), t.count)
                        })
                        .collect(),
                    root: c.root_governor.clone(),
                    gold: i == sentence.gold_index,
                })
                .collect(),
        };
        serde_json::to_writer(&mut w, &raw)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_corpus_file(path: &Path, corpus: &DisambiguationCorpus, meta: &RunMeta) -> Result<()> {
    write_corpus(File::create(path)?, corpus, meta)
}

/// Read tab-separated `governor relation argument count` lines; duplicate
/// keys aggregate.
pub fn read_tuples<R: Read>(reader: R) -> Result<TupleCorpus> {
    let mut corpus = TupleCorpus::new();
    for (line_no, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() {
            continue;
        }
        let number = line_no + 1;
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::ParseLine {
                line: number,
                message: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        }
        let count: u64 = fields[3].trim().parse().map_err(|_| Error::ParseLine {
            line: number,
            message: format!("bad count {:?}", fields[3]),
        })?;
        if count == 0 || fields[..3].iter().any(|f| f.is_empty()) {
            return Err(Error::ParseLine {
                line: number,
                message: "fields must be non-empty and the count positive".into(),
            });
        }
        corpus.add(fields[0], fields[1], fields[2], count);
    }
    Ok(corpus)
}

pub fn read_tuples_file(path: &Path) -> Result<TupleCorpus> {
    read_tuples(File::open(path)?)
}

pub fn write_tuples<W: Write>(writer: W, corpus: &TupleCorpus) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for ((g, r, a), count) in corpus.iter() {
        writeln!(w, "{g}\t{r}\t{a}\t{count}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_tuples_file(path: &Path, corpus: &TupleCorpus) -> Result<()> {
    write_tuples(File::create(path)?, corpus)
}

#[derive(Serialize, Deserialize)]
struct RawAuxScore {
    sentence: String,
    candidate: String,
    q: f64,
}

/// Read JSONL `{"sentence": .., "candidate": .., "q": ..}` scores.
pub fn read_aux_scores<R: Read>(reader: R, name: &str) -> Result<AuxiliaryScore> {
    let mut aux = AuxiliaryScore::new(name);
    for (line_no, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawAuxScore = serde_json::from_str(&line)
            .map_err(|e| Error::ParseLine { line: line_no + 1, message: e.to_string() })?;
        aux.insert(raw.sentence, raw.candidate, raw.q);
    }
    Ok(aux)
}

pub fn read_aux_scores_file(path: &Path, name: &str) -> Result<AuxiliaryScore> {
    read_aux_scores(File::open(path)?, name)
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    features: Vec<String>,
    aux_flags: Vec<bool>,
    lambda: Vec<f64>,
    sigma: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<RunMeta>,
}

pub fn write_model<W: Write>(writer: W, model: &ModelParams, meta: &RunMeta) -> Result<()> {
    let raw = RawModel {
        features: model.manifest.names().to_vec(),
        aux_flags: model.manifest.aux_flags().to_vec(),
        lambda: model.lambda.clone(),
        sigma: model.sigma.clone(),
        meta: Some(meta.clone()),
    };
    let mut w = BufWriter::new(writer);
    serde_json::to_writer_pretty(&mut w, &raw)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_model_file(path: &Path, model: &ModelParams, meta: &RunMeta) -> Result<()> {
    write_model(File::create(path)?, model, meta)
}

pub fn read_model<R: Read>(reader: R) -> Result<ModelParams> {
    let raw: RawModel = serde_json::from_reader(reader)?;
    let manifest = FeatureManifest::new(raw.features, raw.aux_flags)?;
    ModelParams::new(manifest, raw.lambda, raw.sigma)
}

pub fn read_model_file(path: &Path) -> Result<ModelParams> {
    read_model(File::open(path)?)
}

#[derive(Serialize, Deserialize)]
struct RawLatentModel {
    num_classes: usize,
    class_prior: Vec<f64>,
    gr_vocab: Vec<(String, String)>,
    arg_vocab: Vec<String>,
    gr_given_class: Vec<Vec<f64>>,
    arg_given_class: Vec<Vec<f64>>,
    governor_unigram: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<RunMeta>,
}

/// Latent-class model plus the governor unigram it was trained alongside,
/// as one self-contained JSON document.
pub fn write_latent_model<W: Write>(
    writer: W,
    model: &LatentClassModel,
    governor_unigram: &BTreeMap<String, f64>,
    meta: &RunMeta,
) -> Result<()> {
    let raw = RawLatentModel {
        num_classes: model.num_classes(),
        class_prior: model.class_prior().to_vec(),
        gr_vocab: model.gr_vocab().to_vec(),
        arg_vocab: model.arg_vocab().to_vec(),
        gr_given_class: model.gr_given_class().to_vec(),
        arg_given_class: model.arg_given_class().to_vec(),
        governor_unigram: governor_unigram.clone(),
        meta: Some(meta.clone()),
    };
    let mut w = BufWriter::new(writer);
    serde_json::to_writer_pretty(&mut w, &raw)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_latent_model_file(
    path: &Path,
    model: &LatentClassModel,
    governor_unigram: &BTreeMap<String, f64>,
    meta: &RunMeta,
) -> Result<()> {
    write_latent_model(File::create(path)?, model, governor_unigram, meta)
}

pub fn read_latent_model<R: Read>(reader: R) -> Result<(LatentClassModel, BTreeMap<String, f64>)> {
    let raw: RawLatentModel = serde_json::from_reader(reader)?;
    let model = LatentClassModel::new(
        raw.class_prior,
        raw.gr_vocab,
        raw.arg_vocab,
        raw.gr_given_class,
        raw.arg_given_class,
    )?;
    if model.num_classes() != raw.num_classes {
        return Err(Error::InvalidParams(format!(
            "declared {} classes but stored {}",
            raw.num_classes,
            model.num_classes()
        )));
    }
    Ok((model, raw.governor_unigram))
}

pub fn read_latent_model_file(path: &Path) -> Result<(LatentClassModel, BTreeMap<String, f64>)> {
    read_latent_model(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexsel::em_fit;
    use crate::synth::{generate_corpus, SynthConfig};

    fn sample_corpus() -> DisambiguationCorpus {
        let config = SynthConfig {
            num_sentences: 8,
            min_candidates: 1,
            max_candidates: 3,
            num_features: 3,
            num_auxiliary: 1,
            max_feature_value: 4,
            true_lambda: SynthConfig::random_lambda(4, 1.0, 5),
            seed: 5,
        };
        generate_corpus(&config).unwrap().0
    }

    #[test]
    fn corpus_round_trips_exactly() {
        let corpus = sample_corpus();
        let mut buffer = Vec::new();
        write_corpus(&mut buffer, &corpus, &RunMeta::new(Some(5), serde_json::Value::Null))
            .unwrap();
        let back = read_corpus(buffer.as_slice()).unwrap();
        assert_eq!(corpus.manifest, back.manifest);
        assert_eq!(corpus.sentences.len(), back.sentences.len());
        for (a, b) in corpus.sentences.iter().zip(&back.sentences) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn corpus_without_meta_gets_a_sorted_manifest() {
        let text = concat!(
            "{\"id\":\"s1\",\"candidates\":[",
            "{\"id\":\"p0\",\"features\":{\"zeta\":1.0,\"alpha\":2.0},\"gold\":true},",
            "{\"id\":\"p1\",\"features\":{\"mid\":3.0}}]}\n",
        );
        let corpus = read_corpus(text.as_bytes()).unwrap();
        assert_eq!(
            corpus.manifest.names(),
            &["alpha".to_owned(), "mid".to_owned(), "zeta".to_owned()]
        );
        // Absent features default to zero.
        assert_eq!(corpus.sentences[0].candidates[1].features.values(), &[0.0, 3.0, 0.0]);
    }

    #[test]
    fn gold_must_be_unique() {
        let none = "{\"id\":\"s\",\"candidates\":[{\"id\":\"p0\"}]}\n";
        assert!(matches!(read_corpus(none.as_bytes()), Err(Error::ParseLine { .. })));
        let two = concat!(
            "{\"id\":\"s\",\"candidates\":[{\"id\":\"p0\",\"gold\":true},",
            "{\"id\":\"p1\",\"gold\":true}]}\n"
        );
        assert!(matches!(read_corpus(two.as_bytes()), Err(Error::ParseLine { .. })));
    }

    #[test]
    fn malformed_tsv_reports_the_line() {
        let text = "eat\tobj\tapple\t2\nbroken line\n";
        match read_tuples(text.as_bytes()) {
            Err(Error::ParseLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected a line error, got {other:?}"),
        }
    }

    #[test]
    fn tsv_aggregates_duplicates() {
        let text = "eat\tobj\tapple\t2\neat\tobj\tapple\t3\nsee\tsubj\tcat\t1\n";
        let corpus = read_tuples(text.as_bytes()).unwrap();
        assert_eq!(corpus.num_types(), 2);
        assert_eq!(corpus.total_count(), 6);

        let mut buffer = Vec::new();
        write_tuples(&mut buffer, &corpus).unwrap();
        let back = read_tuples(buffer.as_slice()).unwrap();
        assert_eq!(back.num_types(), 2);
        assert_eq!(back.total_count(), 6);
    }

    #[test]
    fn model_file_round_trips() {
        let corpus = sample_corpus();
        let model = ModelParams::new(
            corpus.manifest.clone(),
            vec![0.5, -1.0, 0.0, 2.0],
            vec![7.0, 7.0, 7.0, 14.0],
        )
        .unwrap();
        let mut buffer = Vec::new();
        write_model(&mut buffer, &model, &RunMeta::new(None, serde_json::Value::Null)).unwrap();
        let back = read_model(buffer.as_slice()).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn latent_model_file_round_trips() {
        let mut tuples = TupleCorpus::new();
        tuples.add("v1", "obj", "a1", 2);
        tuples.add("v1", "obj", "a2", 1);
        tuples.add("v2", "subj", "a1", 4);
        let (model, _) = em_fit(&tuples, 2, 3, 50, 1e-9).unwrap();
        let unigram = tuples.governor_unigram();
        let mut buffer = Vec::new();
        write_latent_model(&mut buffer, &model, &unigram, &RunMeta::default()).unwrap();
        let (back, unigram_back) = read_latent_model(buffer.as_slice()).unwrap();
        assert_eq!(model.class_prior(), back.class_prior());
        assert_eq!(model.gr_vocab(), back.gr_vocab());
        assert_eq!(model.arg_given_class(), back.arg_given_class());
        assert_eq!(unigram, unigram_back);
    }

    #[test]
    fn aux_scores_read_back() {
        let text = concat!(
            "{\"sentence\":\"s1\",\"candidate\":\"p0\",\"q\":0.25}\n",
            "{\"sentence\":\"s1\",\"candidate\":\"p1\",\"q\":0.5}\n",
        );
        let aux = read_aux_scores(text.as_bytes(), "lex").unwrap();
        assert_eq!(aux.name, "lex");
        assert_eq!(aux.get("s1", "p0"), Some(0.25));
        assert_eq!(aux.get("s1", "p1"), Some(0.5));
        assert_eq!(aux.get("s2", "p0"), None);
    }
}
