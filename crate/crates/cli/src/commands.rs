use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use farsent::classify::Prediction;
use farsent::corpus::{
    class_distribution, load_corpus, shuffle_split, tag_distribution, CsvSchema, LabeledCorpus,
    Sentiment,
};
use farsent::evaluate::{
    compare_models, confusion_matrix, metrics, term_frequencies, write_term_frequencies,
    ComparisonRow, MetricsReport,
};
use farsent::pipeline::{preprocess_all, ExternalVectors, FittedVectorizer, TrainedPipeline};
use farsent::synth::{generate, SynthSpec};
use farsent::vectorize::TrainReport;

use crate::config::ExperimentConfig;
use crate::errors::{config_error, data_error};

pub const TRAIN_FILE: &str = "train.csv";
pub const TEST_FILE: &str = "test.csv";
pub const SPLIT_MANIFEST: &str = "split_manifest.json";
pub const MODEL_FILE: &str = "model.farsent";
pub const VOCABULARY_FILE: &str = "vocabulary.csv";
pub const TRAIN_LOG: &str = "train_log.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const REPORT_FILE: &str = "report.json";
pub const COMPARISON_ROW_FILE: &str = "comparison_row.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const TERMS_FILE: &str = "term_frequencies.csv";
pub const CLASS_DIST_FILE: &str = "class_distribution.csv";
pub const TAG_DIST_FILE: &str = "tag_distribution.csv";
const LOCK_FILE: &str = ".farsent.lock";

/// Exclusive claim on an output directory, released on drop.
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(DirLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(config_error(format!(
                "output directory {} is in use by another run (remove {} if stale)",
                dir.display(),
                path.display()
            ))),
            Err(e) => Err(e).with_context(|| format!("creating {}", path.display())),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Writes via a temporary sibling so a failed run never leaves a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn load_split(dir: &Path, file: &str) -> Result<LabeledCorpus> {
    let path = dir.join(file);
    if !path.exists() {
        bail!(config_error(format!(
            "{} not found; run `farsent split` first",
            path.display()
        )));
    }
    load_corpus(&path, &CsvSchema::split_file())
        .with_context(|| format!("loading split file {}", path.display()))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ClassCounts {
    pub negative: usize,
    pub neutral: usize,
    pub positive: usize,
}

impl From<[usize; 3]> for ClassCounts {
    fn from(c: [usize; 3]) -> Self {
        ClassCounts {
            negative: c[0],
            neutral: c[1],
            positive: c[2],
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SplitSide {
    pub size: usize,
    pub class_counts: ClassCounts,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SplitManifest {
    pub config_hash: String,
    pub corpus: String,
    pub seed: u64,
    pub train_ratio: f64,
    pub stratified: bool,
    pub train: SplitSide,
    pub test: SplitSide,
}

pub fn split(config: &ExperimentConfig) -> Result<()> {
    let spec = config.split_spec()?;
    let corpus_path = config.corpus_path()?;
    let preprocess = config.preprocess_config()?;
    let hash = config.hash(&preprocess)?;
    let corpus = load_corpus(corpus_path, &config.schema())
        .with_context(|| format!("loading corpus {}", corpus_path.display()))?;
    let (train, test) = shuffle_split(&corpus, &spec).context("splitting corpus")?;

    let _lock = DirLock::acquire(&config.output_dir)?;
    let out = &config.output_dir;
    write_atomic(&out.join(TRAIN_FILE), &csv_bytes(|b| Ok(train.write_csv(b)?))?)?;
    write_atomic(&out.join(TEST_FILE), &csv_bytes(|b| Ok(test.write_csv(b)?))?)?;
    let side = |c: &LabeledCorpus| SplitSide {
        size: c.len(),
        class_counts: c.class_counts().into(),
    };
    write_json(
        &out.join(SPLIT_MANIFEST),
        &SplitManifest {
            config_hash: hash,
            corpus: corpus_path.display().to_string(),
            seed: spec.seed,
            train_ratio: spec.train_ratio,
            stratified: spec.stratified,
            train: side(&train),
            test: side(&test),
        },
    )?;
    eprintln!(
        "split {} records into {} train / {} test in {}",
        corpus.len(),
        train.len(),
        test.len(),
        out.display()
    );
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrainLog {
    pub config_hash: String,
    pub name: String,
    pub seed: u64,
    pub vectorizer: String,
    pub model: String,
    pub train_records: usize,
    pub feature_dim: usize,
    pub training_accuracy: f64,
    pub training_macro_recall: f64,
    pub training_macro_f1: f64,
    pub embedding: Option<TrainReport>,
    pub wall_time_seconds: f64,
}

fn external(path: &Option<PathBuf>, key: &str) -> Result<Option<ExternalVectors>> {
    match path {
        None => Err(config_error(format!("the external vectorizer needs `{key}`"))),
        Some(p) => Ok(Some(
            ExternalVectors::load(p).with_context(|| format!("loading {key}"))?,
        )),
    }
}

pub fn train(config: &ExperimentConfig) -> Result<()> {
    let start = Instant::now();
    let preprocess = config.preprocess_config()?;
    let vectorizer = config.vectorizer_spec()?;
    let learner = config.learner()?;
    let hash = config.hash(&preprocess)?;
    let out = &config.output_dir;
    let train = load_split(out, TRAIN_FILE)?;
    let ext = if config.vectorizer == "external" {
        external(&config.train_vectors, "train_vectors")?
    } else {
        None
    };

    let _lock = DirLock::acquire(out)?;
    let (pipeline, summary) =
        TrainedPipeline::fit(preprocess, &vectorizer, &learner, train.records(), ext.as_ref())
            .context("stage: train")?;
    let train_metrics = metrics(&confusion_matrix(&train.labels(), &summary.train_predictions)?)?;

    pipeline.save(&out.join(MODEL_FILE)).context("stage: save model")?;
    let vocab = match &pipeline.vectorizer {
        FittedVectorizer::Bow(b) => Some(&b.vocabulary),
        FittedVectorizer::Subword(m) => Some(m.vocabulary()),
        _ => None,
    };
    if let Some(v) = vocab {
        write_atomic(&out.join(VOCABULARY_FILE), &csv_bytes(|b| Ok(v.write_csv(b)?))?)?;
    }
    let log = TrainLog {
        config_hash: hash,
        name: config.display_name(),
        seed: config.seed,
        vectorizer: vectorizer.name().to_string(),
        model: learner.name().to_string(),
        train_records: summary.train_records,
        feature_dim: summary.feature_dim,
        training_accuracy: train_metrics.accuracy,
        training_macro_recall: train_metrics.macro_recall,
        training_macro_f1: train_metrics.macro_f1,
        embedding: summary.embedding,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    write_json(&out.join(TRAIN_LOG), &log)?;
    eprintln!(
        "trained {} on {} records (training accuracy {:.4}) -> {}",
        log.name,
        log.train_records,
        log.training_accuracy,
        out.join(MODEL_FILE).display()
    );
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub name: String,
    pub model: String,
    pub vectorizer: String,
    pub seed: u64,
    pub config_hash: String,
    pub test_records: usize,
    /// Recall and F1 are unweighted means over the three classes.
    pub averaging: String,
    pub metrics: MetricsReport,
}

fn load_pipeline(path: &Path) -> Result<TrainedPipeline> {
    if !path.exists() {
        bail!(config_error(format!("model file {} not found", path.display())));
    }
    TrainedPipeline::load(path).with_context(|| format!("loading model {}", path.display()))
}

pub fn evaluate(config: &ExperimentConfig, model_file: Option<&Path>) -> Result<()> {
    let preprocess = config.preprocess_config()?;
    let hash = config.hash(&preprocess)?;
    let out = &config.output_dir;
    let model_path = model_file.map(Path::to_path_buf).unwrap_or_else(|| out.join(MODEL_FILE));
    let pipeline = load_pipeline(&model_path)?;
    let test = load_split(out, TEST_FILE)?;
    let ext = match pipeline.vectorizer {
        FittedVectorizer::External { .. } => external(&config.test_vectors, "test_vectors")?,
        _ => None,
    };

    let _lock = DirLock::acquire(out)?;
    let preds: Vec<Sentiment> = pipeline
        .predict(test.records(), ext.as_ref())
        .context("stage: evaluate")?
        .into_iter()
        .map(|p| p.label)
        .collect();
    let report = metrics(&confusion_matrix(&test.labels(), &preds)?)?;
    let name = config.display_name();
    write_atomic(&out.join(METRICS_FILE), &csv_bytes(|b| Ok(report.write_csv(b)?))?)?;
    let row = compare_models(vec![ComparisonRow::from_report(name.clone(), &report)])?;
    write_atomic(&out.join(COMPARISON_ROW_FILE), &csv_bytes(|b| Ok(row.write_csv(b)?))?)?;
    let full = EvaluationReport {
        name,
        model: pipeline.learner.name().to_string(),
        vectorizer: pipeline.vectorizer.name().to_string(),
        seed: config.seed,
        config_hash: hash,
        test_records: test.len(),
        averaging: report.averaging.clone(),
        metrics: report,
    };
    write_json(&out.join(REPORT_FILE), &full)?;
    eprintln!(
        "{}: accuracy {:.4}, macro recall {:.4}, macro F1 {:.4} on {} test records",
        full.name,
        full.metrics.accuracy,
        full.metrics.macro_recall,
        full.metrics.macro_f1,
        full.test_records
    );
    Ok(())
}

/// One input row of `predict`.
struct PredictInput {
    id: u64,
    text: String,
}

fn read_predict_input(
    path: &Path,
    config: &ExperimentConfig,
    lenient: bool,
) -> Result<(Vec<PredictInput>, Vec<String>)> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("reading input {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim_start_matches('\u{feff}').trim() == name);
    let text_col = col(&config.text_column).ok_or_else(|| {
        data_error(format!("{}: missing column {:?}", path.display(), config.text_column))
    })?;
    let id_name = if config.id_column.is_empty() { "id" } else { config.id_column.as_str() };
    let id_col = col(id_name);

    let mut rows = Vec::new();
    let mut problems = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let parsed = rec.map_err(|e| format!("row {row}: {e}")).and_then(|rec| {
            let text = rec.get(text_col).unwrap_or("").to_string();
            if text.trim().is_empty() {
                return Err(format!("row {row}: empty text"));
            }
            let id = match id_col {
                Some(c) => {
                    let raw = rec.get(c).unwrap_or("").trim();
                    raw.parse::<u64>().map_err(|_| format!("row {row}: invalid id {raw:?}"))?
                }
                None => i as u64,
            };
            Ok(PredictInput { id, text })
        });
        match parsed {
            Ok(p) => rows.push(p),
            Err(msg) if lenient => problems.push(msg),
            Err(msg) => bail!(data_error(format!(
                "{}: {msg} (pass --lenient to skip malformed rows)",
                path.display()
            ))),
        }
    }
    Ok((rows, problems))
}

pub fn predict(
    config: &ExperimentConfig,
    model_file: Option<&Path>,
    input: &Path,
    output: Option<&Path>,
    lenient: bool,
) -> Result<()> {
    let model_path = model_file
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.output_dir.join(MODEL_FILE));
    let pipeline = load_pipeline(&model_path)?;
    let (rows, problems) = read_predict_input(input, config, lenient)?;
    let ext = match pipeline.vectorizer {
        FittedVectorizer::External { .. } => external(&config.test_vectors, "test_vectors")?,
        _ => None,
    };
    let ids: Vec<u64> = rows.iter().map(|r| r.id).collect();
    let texts: Vec<&str> = rows.iter().map(|r| r.text.as_str()).collect();
    let xs = pipeline
        .featurize_texts(&ids, &texts, ext.as_ref())
        .context("stage: predict")?;
    let preds: Vec<Prediction> = pipeline.predict_features(&xs)?;

    let out_path = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.output_dir.join(PREDICTIONS_FILE));
    let dir = out_path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let _lock = DirLock::acquire(dir)?;
    let bytes = csv_bytes(|b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["id", "label", "score_negative", "score_neutral", "score_positive"])?;
        for (r, p) in rows.iter().zip(&preds) {
            w.write_record([
                r.id.to_string(),
                p.label.name().to_string(),
                p.scores[0].to_string(),
                p.scores[1].to_string(),
                p.scores[2].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    write_atomic(&out_path, &bytes)?;
    for p in &problems {
        eprintln!("skipped {p}");
    }
    eprintln!(
        "predicted {} rows ({} skipped) -> {}",
        rows.len(),
        problems.len(),
        out_path.display()
    );
    Ok(())
}

pub fn freq(config: &ExperimentConfig) -> Result<()> {
    let corpus_path = config.corpus_path()?;
    let mut preprocess = config.preprocess_config()?;
    let corpus = load_corpus(corpus_path, &config.schema())
        .with_context(|| format!("loading corpus {}", corpus_path.display()))?;
    preprocess.fit_spelling(corpus.texts())?;
    let docs = preprocess_all(&preprocess, corpus.records())?;
    let terms = term_frequencies(&docs, Some(config.top_n))?;
    let classes = class_distribution(&corpus)?;
    let tags = tag_distribution(&corpus)?;

    let _lock = DirLock::acquire(&config.output_dir)?;
    let out = &config.output_dir;
    write_atomic(&out.join(TERMS_FILE), &csv_bytes(|b| Ok(write_term_frequencies(&terms, b)?))?)?;
    write_atomic(&out.join(CLASS_DIST_FILE), &csv_bytes(|b| Ok(classes.write_csv(b)?))?)?;
    write_atomic(&out.join(TAG_DIST_FILE), &csv_bytes(|b| Ok(tags.write_csv(b)?))?)?;
    eprintln!("wrote {} terms, class and tag distributions to {}", terms.len(), out.display());
    Ok(())
}

pub fn synth(config: &ExperimentConfig, per_class: usize, output: &Path) -> Result<()> {
    if per_class == 0 {
        bail!(config_error("--per-class must be at least 1"));
    }
    let corpus = generate(&SynthSpec {
        per_class,
        seed: config.seed,
        ..SynthSpec::default()
    });
    if let Some(dir) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_atomic(output, &csv_bytes(|b| Ok(corpus.write_csv(b)?))?)?;
    eprintln!("wrote {} synthetic tweets to {}", corpus.len(), output.display());
    Ok(())
}

/// The classical-model ranking reported for the original private dataset.
pub const REFERENCE_ORDER: [&str; 3] = ["svm", "adaboost", "knn"];

pub fn compare(reports: &[PathBuf], output: &Path) -> Result<()> {
    if reports.is_empty() {
        bail!(config_error("compare needs at least one --report"));
    }
    let mut rows = Vec::new();
    let mut kinds = Vec::new();
    for p in reports {
        let file = File::open(p).with_context(|| format!("opening report {}", p.display()))?;
        let r: EvaluationReport = serde_json::from_reader(file)
            .with_context(|| format!("parsing report {}", p.display()))?;
        rows.push(ComparisonRow::from_report(r.name.clone(), &r.metrics));
        kinds.push((r.name, r.model));
    }
    let table = compare_models(rows)?;
    write_atomic(output, &csv_bytes(|b| Ok(table.write_csv(b)?))?)?;
    let ranked: Vec<&str> = table
        .order()
        .into_iter()
        .filter_map(|name| kinds.iter().find(|(n, _)| n == name).map(|(_, k)| k.as_str()))
        .collect();
    let seen: Vec<&str> = ranked.iter().copied().filter(|k| REFERENCE_ORDER.contains(k)).collect();
    println!("ranking by accuracy: {}", table.order().join(" > "));
    if seen.len() == REFERENCE_ORDER.len() {
        println!(
            "svm > adaboost > knn ordering reproduced: {}",
            if seen == REFERENCE_ORDER { "yes" } else { "no" }
        );
    }
    Ok(())
}
