//! Experiment configuration: one flat TOML table, overridable key by key from
//! the command line.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use farsent::classify::{LearnerSpec, Metric, SvmParams};
use farsent::container::sha256_hex;
use farsent::corpus::{CsvSchema, SplitSpec};
use farsent::pipeline::VectorizerSpec;
use farsent::preprocess::{load_preprocess_config, PreprocessConfig};
use farsent::vectorize::{BowWeighting, Composition, SubwordParams};

use crate::errors::config_error;

pub const MODELS: [&str; 3] = ["knn", "svm", "adaboost"];
pub const VECTORIZERS: [&str; 4] = ["bow", "subword", "pretrained", "external"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Label used in reports and comparison tables; defaults to `<vectorizer>-<model>`.
    pub name: Option<String>,
    pub corpus: Option<PathBuf>,
    pub text_column: String,
    pub label_column: String,
    /// Empty disables tags.
    pub tag_column: String,
    /// Empty assigns ids by row order.
    pub id_column: String,
    /// Preprocess rule file; built-in Persian defaults when unset.
    pub preprocess: Option<PathBuf>,

    pub vectorizer: String,
    pub bow_min_count: u64,
    pub bow_weighting: String,
    /// Text vector file for the `pretrained` vectorizer.
    pub vectors: Option<PathBuf>,
    /// Document vector CSVs (`id,v0,...`) for the `external` vectorizer.
    pub train_vectors: Option<PathBuf>,
    pub test_vectors: Option<PathBuf>,
    pub embedding_dim: usize,
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub window: usize,
    pub negatives: usize,
    pub embedding_epochs: usize,
    pub learning_rate: f64,
    pub buckets: u32,
    pub min_count: u64,
    pub composition: String,

    pub model: String,
    pub k: usize,
    /// `cosine` or `euclidean`; cosine for bag-of-words, euclidean otherwise when unset.
    pub metric: Option<String>,
    pub svm_lambda: f64,
    pub svm_epochs: usize,
    pub adaboost_rounds: usize,

    pub train_ratio: f64,
    pub seed: u64,
    pub stratified: bool,
    pub top_n: usize,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let sub = SubwordParams::default();
        let svm = SvmParams::default();
        let split = SplitSpec::default();
        ExperimentConfig {
            name: None,
            corpus: None,
            text_column: "text".into(),
            label_column: "label".into(),
            tag_column: "tag".into(),
            id_column: String::new(),
            preprocess: None,
            vectorizer: "bow".into(),
            bow_min_count: 1,
            bow_weighting: "counts".into(),
            vectors: None,
            train_vectors: None,
            test_vectors: None,
            embedding_dim: sub.dim,
            ngram_min: sub.min_n,
            ngram_max: sub.max_n,
            window: sub.window,
            negatives: sub.negatives,
            embedding_epochs: sub.epochs,
            learning_rate: sub.learning_rate,
            buckets: sub.buckets,
            min_count: sub.min_count,
            composition: "mean".into(),
            model: "svm".into(),
            k: 5,
            metric: None,
            svm_lambda: svm.lambda,
            svm_epochs: svm.epochs,
            adaboost_rounds: 50,
            train_ratio: split.train_ratio,
            seed: split.seed,
            stratified: split.stratified,
            top_n: 100,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Command-line mirrors of the config keys. Set flags override the file.
#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct Overrides {
    /// Experiment config file (TOML).
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text_column: Option<String>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_column: Option<String>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tag_column: Option<String>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id_column: Option<String>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preprocess: Option<PathBuf>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vectorizer: Option<String>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bow_min_count: Option<u64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bow_weighting: Option<String>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vectors: Option<PathBuf>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_vectors: Option<PathBuf>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_vectors: Option<PathBuf>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding_dim: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ngram_min: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ngram_max: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub negatives: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding_epochs: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub buckets: Option<u32>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_count: Option<u64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composition: Option<String>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<String>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svm_lambda: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svm_epochs: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adaboost_rounds: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_ratio: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stratified: Option<bool>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_n: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

const PATH_KEYS: [&str; 6] = ["corpus", "preprocess", "vectors", "train_vectors", "test_vectors", "output_dir"];

impl ExperimentConfig {
    /// File values (paths resolved against the file's directory), then flags.
    pub fn load(overrides: &Overrides) -> Result<Self> {
        let mut table = toml::Table::new();
        if let Some(path) = &overrides.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
            table = text
                .parse::<toml::Table>()
                .map_err(|e| config_error(format!("config {}: {e}", path.display())))?;
            let base = path.parent().unwrap_or(Path::new(""));
            for key in PATH_KEYS {
                if let Some(toml::Value::String(p)) = table.get(key) {
                    let joined = base.join(p).to_string_lossy().into_owned();
                    table.insert(key.to_string(), toml::Value::String(joined));
                }
            }
        }
        let flags = toml::Table::try_from(overrides).context("encoding command-line overrides")?;
        table.extend(flags);
        let config: ExperimentConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| config_error(format!("invalid config: {}", e.message())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !MODELS.contains(&self.model.as_str()) {
            bail!(config_error(format!(
                "unknown model {:?}; valid options: {}",
                self.model,
                MODELS.join(", ")
            )));
        }
        if !VECTORIZERS.contains(&self.vectorizer.as_str()) {
            bail!(config_error(format!(
                "unknown vectorizer {:?}; valid options: {}",
                self.vectorizer,
                VECTORIZERS.join(", ")
            )));
        }
        self.split_spec()?;
        self.metric()?;
        self.learner()?;
        self.vectorizer_spec()?;
        Ok(())
    }

    pub fn display_name(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("{}-{}", self.vectorizer, self.model))
    }

    pub fn corpus_path(&self) -> Result<&Path> {
        self.corpus
            .as_deref()
            .ok_or_else(|| config_error("no corpus given (set `corpus` or pass --corpus)"))
    }

    pub fn schema(&self) -> CsvSchema {
        let opt = |s: &str| (!s.is_empty()).then(|| s.to_string());
        CsvSchema {
            text: self.text_column.clone(),
            label: self.label_column.clone(),
            tag: opt(&self.tag_column),
            id: opt(&self.id_column),
        }
    }

    pub fn split_spec(&self) -> Result<SplitSpec> {
        let spec = SplitSpec {
            train_ratio: self.train_ratio,
            seed: self.seed,
            stratified: self.stratified,
        };
        spec.validate().map_err(|e| config_error(e.to_string()))?;
        Ok(spec)
    }

    pub fn metric(&self) -> Result<Metric> {
        match self.metric.as_deref() {
            None if self.vectorizer == "bow" => Ok(Metric::Cosine),
            None => Ok(Metric::Euclidean),
            Some("cosine") => Ok(Metric::Cosine),
            Some("euclidean") => Ok(Metric::Euclidean),
            Some(other) => Err(config_error(format!(
                "unknown metric {other:?}; valid options: cosine, euclidean"
            ))),
        }
    }

    pub fn learner(&self) -> Result<LearnerSpec> {
        Ok(match self.model.as_str() {
            "knn" => {
                if self.k == 0 {
                    bail!(config_error("k must be at least 1"));
                }
                LearnerSpec::Knn {
                    k: self.k,
                    metric: self.metric()?,
                }
            }
            "svm" => {
                if !(self.svm_lambda > 0.0 && self.svm_lambda.is_finite()) {
                    bail!(config_error("svm_lambda must be positive"));
                }
                LearnerSpec::Svm(SvmParams {
                    lambda: self.svm_lambda,
                    epochs: self.svm_epochs,
                    seed: self.seed,
                })
            }
            "adaboost" => {
                if self.adaboost_rounds == 0 {
                    bail!(config_error("adaboost_rounds must be at least 1"));
                }
                LearnerSpec::AdaBoost {
                    rounds: self.adaboost_rounds,
                }
            }
            other => bail!(config_error(format!(
                "unknown model {other:?}; valid options: {}",
                MODELS.join(", ")
            ))),
        })
    }

    pub fn vectorizer_spec(&self) -> Result<VectorizerSpec> {
        Ok(match self.vectorizer.as_str() {
            "bow" => VectorizerSpec::Bow {
                min_count: self.bow_min_count,
                weighting: match self.bow_weighting.as_str() {
                    "counts" => BowWeighting::Counts,
                    "binary" => BowWeighting::Binary,
                    "tfidf" => BowWeighting::TfIdf,
                    other => bail!(config_error(format!(
                        "unknown bow_weighting {other:?}; valid options: counts, binary, tfidf"
                    ))),
                },
            },
            "subword" => {
                let params = SubwordParams {
                    dim: self.embedding_dim,
                    min_n: self.ngram_min,
                    max_n: self.ngram_max,
                    window: self.window,
                    negatives: self.negatives,
                    epochs: self.embedding_epochs,
                    learning_rate: self.learning_rate,
                    seed: self.seed,
                    buckets: self.buckets,
                    min_count: self.min_count,
                    subsample: None,
                    composition: match self.composition.as_str() {
                        "mean" => Composition::Mean,
                        "sum" => Composition::Sum,
                        other => bail!(config_error(format!(
                            "unknown composition {other:?}; valid options: mean, sum"
                        ))),
                    },
                };
                params.validate().map_err(|e| config_error(e.to_string()))?;
                VectorizerSpec::Subword(params)
            }
            "pretrained" => VectorizerSpec::Pretrained {
                path: self
                    .vectors
                    .clone()
                    .ok_or_else(|| config_error("the pretrained vectorizer needs `vectors`"))?,
            },
            "external" => VectorizerSpec::External,
            other => bail!(config_error(format!(
                "unknown vectorizer {other:?}; valid options: {}",
                VECTORIZERS.join(", ")
            ))),
        })
    }

    pub fn preprocess_config(&self) -> Result<PreprocessConfig> {
        match &self.preprocess {
            None => Ok(PreprocessConfig::default()),
            Some(p) => load_preprocess_config(p).map_err(|e| config_error(e.to_string())),
        }
    }

    /// SHA-256 over the canonical config (without `output_dir`), the resolved
    /// preprocess rules and, when used, the pretrained vector file.
    pub fn hash(&self, preprocess: &PreprocessConfig) -> Result<String> {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let mut material = serde_json::to_string(&canonical)?;
        material.push('\n');
        material.push_str(&preprocess.digest());
        if self.vectorizer == "pretrained" {
            if let Some(p) = &self.vectors {
                let bytes = std::fs::read(p)
                    .with_context(|| format!("reading vector file {}", p.display()))?;
                material.push('\n');
                material.push_str(&sha256_hex(&bytes));
            }
        }
        Ok(sha256_hex(material.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::errors::ConfigError;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, "model = \"knn\"\nk = 3\ncorpus = \"c.csv\"\n").unwrap();
        let o = Overrides {
            config: Some(path),
            k: Some(7),
            ..Overrides::default()
        };
        let c = ExperimentConfig::load(&o).unwrap();
        assert_eq!(c.model, "knn");
        assert_eq!(c.k, 7);
        assert_eq!(c.corpus.unwrap(), dir.path().join("c.csv"));
    }

    #[test]
    fn unknown_model_lists_options() {
        let o = Overrides {
            model: Some("forest".into()),
            ..Overrides::default()
        };
        let err = ExperimentConfig::load(&o).unwrap_err();
        assert!(err.to_string().contains("knn, svm, adaboost"), "{err}");
        assert!(err.downcast_ref::<ConfigError>().is_some());
    }

    #[test]
    fn unknown_key_and_bad_ratio_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, "modle = \"svm\"\n").unwrap();
        let o = Overrides {
            config: Some(path),
            ..Overrides::default()
        };
        assert!(ExperimentConfig::load(&o).is_err());
        let o = Overrides {
            train_ratio: Some(1.0),
            ..Overrides::default()
        };
        assert!(ExperimentConfig::load(&o).unwrap_err().downcast_ref::<ConfigError>().is_some());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig {
            output_dir: "elsewhere".into(),
            ..a.clone()
        };
        let p = PreprocessConfig::default();
        assert_eq!(a.hash(&p).unwrap(), b.hash(&p).unwrap());
        let c = ExperimentConfig { seed: 1, ..a.clone() };
        assert_ne!(a.hash(&p).unwrap(), c.hash(&p).unwrap());
    }
}
