//! Implementation of the `subg-rank` command-line tool.
//!
//! The binary is a thin wrapper over the library: every subcommand reads the
//! documented file formats, calls into the corresponding module, and writes
//! self-describing outputs. Identical inputs, flags, and seeds produce
//! byte-identical output files.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::auxiliary::{attach_auxiliary_floored, DEFAULT_ZERO_FLOOR};
use crate::error::Error;
use crate::evaluation::{drop_unambiguous, evaluate, k_fold_cv, prune_pseudo_constant, EvalReport};
use crate::formats::{
    read_aux_scores_file, read_corpus_file, read_latent_model_file, read_model_file,
    read_tuples_file, write_corpus_file, write_latent_model_file, write_model_file,
    write_tuples_file, RunMeta,
};
use crate::lexsel::{
    class_summary, em_fit, lexical_feature_values, smoothing_power, LatentClassModel,
};
use crate::model::{
    default_sigma, objective_gradient, regularized_objective, DisambiguationCorpus,
    FeatureVector, ModelParams,
};
use crate::optimizer::{finite_difference_gradient, OptimizerConfig};
use crate::synth::{
    consistency_experiment, generate_corpus, generate_lexical_corpus, LexicalSynthConfig,
    SynthConfig,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] Error),
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(Error::Json(e))
    }
}

type CliResult = Result<(), CliError>;

#[derive(Debug, Parser)]
#[command(name = "subg-rank", version, about = "Conditional log-linear parse disambiguation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LexFeature {
    /// Root log-probability plus tuple conditional log-probabilities.
    Logprob,
    /// Number of tuple occurrences.
    Count,
    /// Log-probability divided by the tuple count.
    Mean,
}

impl LexFeature {
    fn feature_name(self) -> &'static str {
        match self {
            LexFeature::Logprob => "lex_logprob",
            LexFeature::Count => "lex_count",
            LexFeature::Mean => "lex_mean",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentKind {
    /// Fit models on sampled corpora and report KL against the truth.
    Consistency,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the latent-class lexical model on a tuple corpus.
    LexselTrain {
        /// Tuple corpus: tab-separated governor, relation, argument, count.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 25, value_parser = clap::value_parser!(u64).range(1..))]
        classes: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "max-iter", default_value_t = 100)]
        max_iter: usize,
        /// Stop when an iteration improves the log-likelihood by less.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Show the most probable predicates and arguments of one class.
    LexselInspect {
        #[arg(long)]
        model: PathBuf,
        /// Tuple corpus for marking which pairs were observed.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long = "class", default_value_t = 0)]
        class_index: usize,
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[arg(long)]
        json: bool,
    },
    /// Attach lexical and external auxiliary features to a corpus.
    Featurize {
        #[arg(long)]
        corpus: PathBuf,
        /// Fitted lexical model file.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Lexical features to attach; all three when omitted.
        #[arg(long, value_delimiter = ',')]
        features: Vec<LexFeature>,
        /// External auxiliary score files as name=path, repeatable.
        #[arg(long)]
        aux: Vec<String>,
        /// Lift zero scores and probabilities to this before the log.
        #[arg(long, default_value_t = DEFAULT_ZERO_FLOOR)]
        floor: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit disambiguation weights by regularized pseudo-likelihood.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "max-iter", default_value_t = 500)]
        max_iter: usize,
        /// Gradient infinity-norm stopping tolerance.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads; 0 keeps the default pool.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Score a corpus under a trained model.
    Eval {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validate: train and score on seeded disjoint folds.
    Cv {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "max-iter", default_value_t = 500)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit a synthetic corpus, or run a synthetic experiment.
    Synth {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        sentences: usize,
        #[arg(long, default_value_t = 5)]
        features: usize,
        /// Number of auxiliary (log-score) features.
        #[arg(long, default_value_t = 0)]
        aux: usize,
        #[arg(long = "min-candidates", default_value_t = 2)]
        min_candidates: usize,
        #[arg(long = "max-candidates", default_value_t = 4)]
        max_candidates: usize,
        /// Ordinary feature values are integers in 0..=this.
        #[arg(long = "max-value", default_value_t = 4)]
        max_value: u32,
        /// Generating weights are drawn uniformly from [-scale, scale].
        #[arg(long = "lambda-scale", default_value_t = 1.0)]
        lambda_scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the generating model here.
        #[arg(long = "true-model")]
        true_model: Option<PathBuf>,
        /// Sample a corpus whose gold parses carry a lexical signal.
        #[arg(long)]
        lexical: bool,
        /// With --lexical: write the sampled tuple corpus here.
        #[arg(long = "tuples-out")]
        tuples_out: Option<PathBuf>,
        /// Run an experiment instead of emitting a corpus.
        #[arg(long)]
        experiment: Option<ExperimentKind>,
        /// Held-out sentences for experiment reports.
        #[arg(long, default_value_t = 200)]
        heldout: usize,
        #[arg(long = "max-iter", default_value_t = 500)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Compare the analytic gradient against central finite differences.
    Gradcheck {
        /// Corpus to check on; a synthetic one is generated when omitted.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
        #[arg(long)]
        json: bool,
    },
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::LexselTrain { corpus, classes, seed, max_iter, tol, out } => {
            cmd_lexsel_train(&corpus, classes as usize, seed, max_iter, tol, &out)
        }
        Command::LexselInspect { model, corpus, class_index, top, json } => {
            cmd_lexsel_inspect(&model, corpus.as_deref(), class_index, top, json)
        }
        Command::Featurize { corpus, model, features, aux, floor, out } => {
            cmd_featurize(&corpus, model.as_deref(), &features, &aux, floor, &out)
        }
        Command::Train { corpus, out, max_iter, tol, seed, threads } => {
            init_threads(threads);
            cmd_train(&corpus, &out, max_iter, tol, seed)
        }
        Command::Eval { corpus, model, json, out } => {
            cmd_eval(&corpus, &model, json, out.as_deref())
        }
        Command::Cv { corpus, folds, seed, max_iter, tol, threads, json, out } => {
            init_threads(threads);
            cmd_cv(&corpus, folds, seed, max_iter, tol, json, out.as_deref())
        }
        Command::Synth {
            out,
            sentences,
            features,
            aux,
            min_candidates,
            max_candidates,
            max_value,
            lambda_scale,
            seed,
            true_model,
            lexical,
            tuples_out,
            experiment,
            heldout,
            max_iter,
            tol,
        } => cmd_synth(SynthArgs {
            out,
            sentences,
            features,
            aux,
            min_candidates,
            max_candidates,
            max_value,
            lambda_scale,
            seed,
            true_model,
            lexical,
            tuples_out,
            experiment,
            heldout,
            max_iter,
            tol,
        }),
        Command::Gradcheck { corpus, seed, step, json } => {
            cmd_gradcheck(corpus.as_deref(), seed, step, json)
        }
    }
}

fn init_threads(threads: usize) {
    if threads > 0 {
        // Ignore the error when a pool was already installed.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
}

fn optimizer_config(max_iter: usize, tol: f64) -> OptimizerConfig {
    OptimizerConfig {
        max_iterations: max_iter,
        gradient_tolerance: tol,
        ..OptimizerConfig::default()
    }
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}

fn cmd_lexsel_train(
    corpus_path: &Path,
    classes: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
    out: &Path,
) -> CliResult {
    let tuples = read_tuples_file(corpus_path)?;
    let (model, history) = em_fit(&tuples, classes, seed, max_iter, tol)?;
    for (iteration, ll) in history.iter().enumerate() {
        println!("iteration {:>3}  log-likelihood {ll:.6}", iteration + 1);
    }
    let power = smoothing_power(&model, &tuples);
    println!(
        "smoothing power {:.2}% (empirical type coverage {:.2}%)",
        100.0 * power.model_fraction,
        100.0 * power.empirical_fraction
    );
    let meta = RunMeta::new(
        Some(seed),
        serde_json::json!({
            "command": "lexsel-train",
            "classes": classes,
            "max_iter": max_iter,
            "tol": tol,
        }),
    );
    write_latent_model_file(out, &model, &tuples.governor_unigram(), &meta)?;
    log::info!("wrote lexical model to {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct InspectDoc {
    class_index: usize,
    prior: f64,
    predicates: Vec<(String, String, f64)>,
    arguments: Vec<(String, f64)>,
    seen: Vec<Vec<bool>>,
}

fn cmd_lexsel_inspect(
    model_path: &Path,
    corpus_path: Option<&Path>,
    class_index: usize,
    top: usize,
    json: bool,
) -> CliResult {
    let (model, _) = read_latent_model_file(model_path)?;
    let tuples = match corpus_path {
        Some(path) => read_tuples_file(path)?,
        None => crate::lexsel::TupleCorpus::new(),
    };
    let summary = class_summary(&model, &tuples, class_index, top)?;
    if json {
        let doc = InspectDoc {
            class_index: summary.class_index,
            prior: summary.prior,
            predicates: summary
                .predicates
                .iter()
                .map(|((g, r), p)| (g.clone(), r.clone(), *p))
                .collect(),
            arguments: summary.arguments.clone(),
            seen: summary.seen.clone(),
        };
        println!("{}", serde_json::to_string_pretty(&doc)?);
        return Ok(());
    }
    println!("class {}  prior {:.4}", summary.class_index, summary.prior);
    println!("arguments:");
    for (argument, p) in &summary.arguments {
        println!("  {p:.4}  {argument}");
    }
    println!("predicates:");
    for (row, ((governor, relation), p)) in summary.predicates.iter().enumerate() {
        let marks: String = summary.seen[row]
            .iter()
            .map(|&seen| if seen { " *" } else { " ." })
            .collect();
        println!("  {p:.4}  {governor}:{relation}{marks}");
    }
    Ok(())
}

fn parse_aux_spec(spec: &str) -> Result<(String, PathBuf), CliError> {
    match spec.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => {
            Ok((name.to_owned(), PathBuf::from(path)))
        }
        _ => Err(CliError::Usage(format!("--aux expects name=path, got {spec:?}"))),
    }
}

fn cmd_featurize(
    corpus_path: &Path,
    model_path: Option<&Path>,
    features: &[LexFeature],
    aux_specs: &[String],
    floor: f64,
    out: &Path,
) -> CliResult {
    if !(floor > 0.0) {
        return Err(CliError::Usage(format!("--floor must be positive, got {floor}")));
    }
    if !features.is_empty() && model_path.is_none() {
        return Err(CliError::Usage("--features requires a lexical model (--model)".into()));
    }
    let mut corpus = read_corpus_file(corpus_path)?;

    if let Some(path) = model_path {
        let (model, unigram) = read_latent_model_file(path)?;
        let requested: Vec<LexFeature> = if features.is_empty() {
            vec![LexFeature::Logprob, LexFeature::Count, LexFeature::Mean]
        } else {
            let mut seen = Vec::new();
            for f in features {
                if !seen.contains(f) {
                    seen.push(*f);
                }
            }
            seen
        };
        corpus = attach_lexical_features(&corpus, &model, &unigram, &requested, floor)?;
    }

    for spec in aux_specs {
        let (name, path) = parse_aux_spec(spec)?;
        let scores = read_aux_scores_file(&path, &name)?;
        let (next, floored) = attach_auxiliary_floored(&corpus, &scores, floor)?;
        if floored > 0 {
            log::warn!("auxiliary {name}: lifted {floored} zero scores to {floor}");
        }
        corpus = next;
    }

    let meta = RunMeta::new(
        None,
        serde_json::json!({
            "command": "featurize",
            "lexical_features": features.iter().map(|f| f.feature_name()).collect::<Vec<_>>(),
            "aux": aux_specs,
            "floor": floor,
        }),
    );
    write_corpus_file(out, &corpus, &meta)?;
    log::info!("wrote featurized corpus to {}", out.display());
    Ok(())
}

/// Append the requested lexical features, computed per candidate from the
/// fitted model. They are attached as plain real-valued features: the log
/// score already lives on the log scale, and the count and mean are not
/// logs of positive scores at all.
pub fn attach_lexical_features(
    corpus: &DisambiguationCorpus,
    model: &LatentClassModel,
    governor_unigram: &BTreeMap<String, f64>,
    requested: &[LexFeature],
    floor: f64,
) -> Result<DisambiguationCorpus, Error> {
    let mut manifest = corpus.manifest.clone();
    for feature in requested {
        manifest = manifest.with_auxiliary(feature.feature_name())?;
    }
    let mut incidents_total = 0usize;
    let sentences = corpus
        .sentences
        .iter()
        .map(|sentence| {
            let candidates = sentence
                .candidates
                .iter()
                .map(|cand| {
                    let (lex, incidents) =
                        lexical_feature_values(model, governor_unigram, cand, floor);
                    incidents_total += incidents;
                    let mut values = cand.features.values().to_vec();
                    for feature in requested {
                        values.push(match feature {
                            LexFeature::Logprob => lex.log_prob,
                            LexFeature::Count => lex.tuple_count,
                            LexFeature::Mean => lex.mean_log_prob,
                        });
                    }
                    Ok(crate::model::ParseCandidate {
                        id: cand.id.clone(),
                        features: FeatureVector::new(values)?,
                        tuples: cand.tuples.clone(),
                        root_governor: cand.root_governor.clone(),
                    })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            Ok(crate::model::SentenceItem {
                id: sentence.id.clone(),
                candidates,
                gold_index: sentence.gold_index,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    if incidents_total > 0 {
        log::warn!("lexical features: {incidents_total} floored or missing terms");
    }
    DisambiguationCorpus::new(manifest, sentences)
}

/// Training pipeline shared by `train` and `cv`: drop unambiguous
/// sentences, prune pseudo-constant features, derive the regularization
/// scales, and maximize.
fn prepare_and_fit(
    corpus: &DisambiguationCorpus,
    config: &OptimizerConfig,
) -> Result<(ModelParams, crate::optimizer::OptimizationTrace, Vec<String>), Error> {
    let ambiguous = drop_unambiguous(corpus);
    if ambiguous.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let (pruned, removed) = prune_pseudo_constant(&ambiguous);
    let sigma = default_sigma(&pruned);
    let (model, trace) = crate::fit_model(&pruned, sigma, config)?;
    Ok((model, trace, removed))
}

fn cmd_train(corpus_path: &Path, out: &Path, max_iter: usize, tol: f64, seed: u64) -> CliResult {
    let corpus = read_corpus_file(corpus_path)?;
    let config = optimizer_config(max_iter, tol);
    let (model, trace, removed) = prepare_and_fit(&corpus, &config)?;
    if !removed.is_empty() {
        log::info!("pruned {} pseudo-constant features", removed.len());
    }
    println!(
        "fitted {} weights in {} iterations (objective {:.6}, gradient norm {:.2e}, converged: {})",
        model.manifest.len(),
        trace.iterations,
        trace.objective_history.last().copied().unwrap_or(f64::NAN),
        trace.final_gradient_norm,
        trace.converged
    );
    let meta = RunMeta::new(
        Some(seed),
        serde_json::json!({
            "command": "train",
            "max_iter": max_iter,
            "tol": tol,
            "pruned_features": removed,
        }),
    );
    write_model_file(out, &model, &meta)?;
    log::info!("wrote model to {}", out.display());
    Ok(())
}

fn describe_features(manifest: &crate::model::FeatureManifest) -> String {
    let aux: Vec<&str> = manifest
        .names()
        .iter()
        .zip(manifest.aux_flags())
        .filter(|(_, &a)| a)
        .map(|(n, _)| n.as_str())
        .collect();
    if aux.is_empty() {
        format!("{} (none auxiliary)", manifest.len())
    } else {
        format!("{} [{}]", manifest.len(), aux.join(", "))
    }
}

fn print_report_header() {
    println!(
        "{:<40} {:>17} {:>9} {:>10}",
        "features", "indistinguishable", "correct", "-log PL"
    );
}

fn print_report_row(label: &str, report: &EvalReport) {
    println!(
        "{:<40} {:>17} {:>9.2} {:>10.2}",
        label, report.indistinguishable, report.correct_credit, report.neg_log_pl
    );
}

#[derive(Serialize)]
struct EvalDoc {
    meta: RunMeta,
    features_used: String,
    report: EvalReport,
}

fn cmd_eval(corpus_path: &Path, model_path: &Path, json: bool, out: Option<&Path>) -> CliResult {
    let corpus = read_corpus_file(corpus_path)?;
    let model = read_model_file(model_path)?;
    let ambiguous = drop_unambiguous(&corpus);
    if ambiguous.is_empty() {
        return Err(Error::EmptyCorpus.into());
    }
    let projected = ambiguous.project_onto(&model.manifest);
    let report = evaluate(&model, &projected)?;
    let doc = EvalDoc {
        meta: RunMeta::new(None, serde_json::json!({"command": "eval"})),
        features_used: describe_features(&model.manifest),
        report,
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&doc)?);
    } else {
        print_report_header();
        print_report_row(&doc.features_used, &report);
    }
    if let Some(path) = out {
        write_json_file(path, &doc)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct FoldDoc {
    fold: usize,
    test_sentences: usize,
    report: EvalReport,
}

#[derive(Serialize)]
struct CvDoc {
    meta: RunMeta,
    features_used: String,
    folds: Vec<FoldDoc>,
    cumulative: EvalReport,
}

fn cmd_cv(
    corpus_path: &Path,
    folds: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
    json: bool,
    out: Option<&Path>,
) -> CliResult {
    let corpus = read_corpus_file(corpus_path)?;
    let ambiguous = drop_unambiguous(&corpus);
    if ambiguous.is_empty() {
        return Err(Error::EmptyCorpus.into());
    }
    let config = optimizer_config(max_iter, tol);
    let trainer = |train: &DisambiguationCorpus, sigma: &[f64]| {
        crate::fit_model(train, sigma.to_vec(), &config).map(|(model, _)| model)
    };
    let (fold_results, cumulative) = k_fold_cv(&ambiguous, folds, seed, trainer)?;
    let doc = CvDoc {
        meta: RunMeta::new(
            Some(seed),
            serde_json::json!({
                "command": "cv",
                "folds": folds,
                "max_iter": max_iter,
                "tol": tol,
            }),
        ),
        features_used: describe_features(&ambiguous.manifest),
        folds: fold_results
            .iter()
            .map(|f| FoldDoc {
                fold: f.fold_index,
                test_sentences: f.test_ids.len(),
                report: f.report,
            })
            .collect(),
        cumulative,
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&doc)?);
    } else {
        print_report_header();
        for fold in &doc.folds {
            print_report_row(&format!("fold {} ({} sentences)", fold.fold, fold.test_sentences), &fold.report);
        }
        print_report_row(&format!("cumulative {}", doc.features_used), &doc.cumulative);
    }
    if let Some(path) = out {
        write_json_file(path, &doc)?;
    }
    Ok(())
}

struct SynthArgs {
    out: Option<PathBuf>,
    sentences: usize,
    features: usize,
    aux: usize,
    min_candidates: usize,
    max_candidates: usize,
    max_value: u32,
    lambda_scale: f64,
    seed: u64,
    true_model: Option<PathBuf>,
    lexical: bool,
    tuples_out: Option<PathBuf>,
    experiment: Option<ExperimentKind>,
    heldout: usize,
    max_iter: usize,
    tol: f64,
}

fn cmd_synth(args: SynthArgs) -> CliResult {
    if let Some(ExperimentKind::Consistency) = args.experiment {
        let dim = args.features + args.aux;
        let config = SynthConfig {
            num_sentences: args.sentences,
            min_candidates: args.min_candidates,
            max_candidates: args.max_candidates,
            num_features: args.features,
            num_auxiliary: args.aux,
            max_feature_value: args.max_value,
            true_lambda: SynthConfig::random_lambda(dim, args.lambda_scale, args.seed ^ 0x5eed),
            seed: args.seed,
        };
        let report =
            consistency_experiment(&config, &optimizer_config(args.max_iter, args.tol), args.heldout)?;
        let doc = serde_json::json!({
            "meta": RunMeta::new(Some(args.seed), serde_json::json!({"command": "synth", "experiment": "consistency"})),
            "config": config,
            "report": report,
        });
        println!("{}", serde_json::to_string_pretty(&doc)?);
        if let Some(path) = &args.out {
            write_json_file(path, &doc)?;
        }
        return Ok(());
    }

    let out = args
        .out
        .as_ref()
        .ok_or_else(|| CliError::Usage("--out is required when emitting a corpus".into()))?;

    if args.lexical {
        let config = LexicalSynthConfig {
            num_sentences: args.sentences,
            num_features: args.features,
            min_candidates: args.min_candidates.max(2),
            max_candidates: args.max_candidates.max(2),
            max_feature_value: args.max_value,
            seed: args.seed,
            ..LexicalSynthConfig::default()
        };
        let world = generate_lexical_corpus(&config)?;
        let meta = RunMeta::new(Some(args.seed), serde_json::json!({"command": "synth", "lexical": config}));
        write_corpus_file(out, &world.corpus, &meta)?;
        if let Some(path) = &args.tuples_out {
            write_tuples_file(path, &world.tuples)?;
        }
        println!(
            "wrote {} sentences ({} tuple types) to {}",
            world.corpus.len(),
            world.tuples.num_types(),
            out.display()
        );
        return Ok(());
    }

    let dim = args.features + args.aux;
    let config = SynthConfig {
        num_sentences: args.sentences,
        min_candidates: args.min_candidates,
        max_candidates: args.max_candidates,
        num_features: args.features,
        num_auxiliary: args.aux,
        max_feature_value: args.max_value,
        true_lambda: SynthConfig::random_lambda(dim, args.lambda_scale, args.seed ^ 0x5eed),
        seed: args.seed,
    };
    let (corpus, truth) = generate_corpus(&config)?;
    let meta = RunMeta::new(Some(args.seed), serde_json::json!({"command": "synth", "synth": config}));
    write_corpus_file(out, &corpus, &meta)?;
    if let Some(path) = &args.true_model {
        write_model_file(path, &truth, &meta)?;
    }
    println!("wrote {} sentences to {}", corpus.len(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct GradcheckDoc {
    meta: RunMeta,
    trials: usize,
    max_relative_error: f64,
    tolerance: f64,
    pass: bool,
}

fn cmd_gradcheck(corpus_path: Option<&Path>, seed: u64, step: f64, json: bool) -> CliResult {
    if !(step > 0.0) {
        return Err(CliError::Usage(format!("--step must be positive, got {step}")));
    }
    let corpus = match corpus_path {
        Some(path) => drop_unambiguous(&read_corpus_file(path)?),
        None => {
            let config = SynthConfig {
                num_sentences: 8,
                min_candidates: 2,
                max_candidates: 4,
                num_features: 4,
                num_auxiliary: 1,
                max_feature_value: 4,
                true_lambda: SynthConfig::random_lambda(5, 1.0, seed ^ 0x5eed),
                seed,
            };
            generate_corpus(&config)?.0
        }
    };
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus.into());
    }

    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let dim = corpus.manifest.len();
    let sigma = default_sigma(&corpus);
    let trials = 10;
    let mut max_relative_error = 0.0_f64;
    for _ in 0..trials {
        let lambda: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let model = ModelParams::new(corpus.manifest.clone(), lambda.clone(), sigma.clone())?;
        let analytic = objective_gradient(&model, &corpus)?;
        let numeric = finite_difference_gradient(
            |l| {
                let m = ModelParams::new(corpus.manifest.clone(), l.to_vec(), sigma.clone())
                    .expect("finite probe");
                regularized_objective(&m, &corpus).expect("probe objective")
            },
            &lambda,
            step,
        );
        for (a, n) in analytic.iter().zip(&numeric) {
            let scale = a.abs().max(n.abs()).max(1e-8);
            max_relative_error = max_relative_error.max((a - n).abs() / scale);
        }
    }

    let tolerance = 1e-6;
    let doc = GradcheckDoc {
        meta: RunMeta::new(Some(seed), serde_json::json!({"command": "gradcheck", "step": step})),
        trials,
        max_relative_error,
        tolerance,
        pass: max_relative_error < tolerance,
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&doc)?);
    } else {
        println!(
            "gradient check: max relative error {:.3e} over {} trials ({})",
            doc.max_relative_error,
            doc.trials,
            if doc.pass { "pass" } else { "FAIL" }
        );
    }
    if !doc.pass {
        return Err(Error::InvalidParams(format!(
            "analytic gradient deviates from finite differences by {:.3e}",
            doc.max_relative_error
        ))
        .into());
    }
    Ok(())
}
