//! Preprocessing, a fitted vectorizer and a classifier bundled as one artifact.
//!
//! Fitting reads only the training records; the persisted pipeline then turns
//! any text into the same feature space it was trained on.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{ovr_train, ClassifyError, Classifier, FeatureVector, LearnerSpec, Prediction};
use crate::container::{self, sha256_hex, ContainerError};
use crate::corpus::{Sentiment, TweetRecord};
use crate::preprocess::{run_pipeline, PreprocessConfig, PreprocessError};
use crate::vectorize::{
    embed_document, load_vectors, train_skipgram, BowVectorizer, BowWeighting, EmbeddingTable,
    SubwordEmbeddingModel, SubwordParams, TokenEmbedder, TrainReport, VectorizeError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("preprocessing: {0}")]
    Preprocess(#[from] PreprocessError),
    #[error("vectorizer: {0}")]
    Vectorize(#[from] VectorizeError),
    #[error("classifier: {0}")]
    Classify(#[from] ClassifyError),
    #[error("model file: {0}")]
    Container(#[from] ContainerError),
    #[error("external vectors {path}: {message}")]
    External { path: String, message: String },
    #[error("vector file {path} changed since training (sha256 {found}, expected {expected})")]
    VectorFileChanged {
        path: String,
        expected: String,
        found: String,
    },
    #[error("external-vector pipelines need document vectors for every record")]
    ExternalVectorsRequired,
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, PipelineError>;

/// How documents become feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum VectorizerSpec {
    Bow {
        min_count: u64,
        weighting: BowWeighting,
    },
    Subword(SubwordParams),
    /// Static token vectors read from a text vector file.
    Pretrained { path: PathBuf },
    /// One vector per record supplied by an outside system.
    External,
}

impl VectorizerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            VectorizerSpec::Bow { .. } => "bow",
            VectorizerSpec::Subword(_) => "subword",
            VectorizerSpec::Pretrained { .. } => "pretrained",
            VectorizerSpec::External => "external",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FittedVectorizer {
    Bow(BowVectorizer),
    Subword(SubwordEmbeddingModel),
    /// Reference to a vector file, pinned by content hash.
    Pretrained {
        path: PathBuf,
        sha256: String,
        dim: usize,
    },
    External { dim: usize },
}

impl FittedVectorizer {
    pub fn dim(&self) -> usize {
        match self {
            FittedVectorizer::Bow(b) => b.dim(),
            FittedVectorizer::Subword(m) => m.dim(),
            FittedVectorizer::Pretrained { dim, .. } | FittedVectorizer::External { dim } => *dim,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FittedVectorizer::Bow(_) => "bow",
            FittedVectorizer::Subword(_) => "subword",
            FittedVectorizer::Pretrained { .. } => "pretrained",
            FittedVectorizer::External { .. } => "external",
        }
    }

    /// Tokens known to the vectorizer, when it has a vocabulary of its own.
    pub fn vocabulary_contains(&self, token: &str) -> Option<bool> {
        match self {
            FittedVectorizer::Bow(b) => Some(b.vocabulary.contains(token)),
            FittedVectorizer::Subword(m) => Some(m.vocabulary().contains(token)),
            _ => None,
        }
    }
}

/// Document vectors produced outside this crate, keyed by record id.
///
/// CSV layout: `id,v0,v1,...` with one row per record.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalVectors {
    pub path: String,
    pub dim: usize,
    rows: HashMap<u64, Vec<f64>>,
    order: Vec<u64>,
}

impl ExternalVectors {
    pub fn load(path: &Path) -> Result<Self> {
        let shown = path.display().to_string();
        let err = |message: String| PipelineError::External {
            path: shown.clone(),
            message,
        };
        let mut reader = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
        let headers = reader.headers().map_err(|e| err(e.to_string()))?.clone();
        if headers.get(0) != Some("id") || headers.len() < 2 {
            return Err(err("header must be id,v0,v1,...".into()));
        }
        let dim = headers.len() - 1;
        let mut rows = HashMap::new();
        let mut order = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| err(format!("row {row}: {e}")))?;
            let id: u64 = rec[0]
                .trim()
                .parse()
                .map_err(|_| err(format!("row {row}: invalid id {:?}", &rec[0])))?;
            let values = rec
                .iter()
                .skip(1)
                .map(|v| v.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| err(format!("row {row}: non-numeric or non-finite component")))?;
            if rows.insert(id, values).is_some() {
                return Err(err(format!("row {row}: duplicate id {id}")));
            }
            order.push(id);
        }
        Ok(ExternalVectors {
            path: shown,
            dim,
            rows,
            order,
        })
    }

    pub fn from_rows(dim: usize, rows: Vec<(u64, Vec<f64>)>) -> Self {
        let order = rows.iter().map(|r| r.0).collect();
        ExternalVectors {
            path: "<memory>".into(),
            dim,
            rows: rows.into_iter().collect(),
            order,
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Vectors for `ids`, in order. The file must cover exactly these ids.
    pub fn for_ids(&self, ids: &[u64]) -> Result<Vec<FeatureVector>> {
        let err = |message: String| PipelineError::External {
            path: self.path.clone(),
            message,
        };
        if self.len() != ids.len() {
            return Err(err(format!(
                "{} vector rows but the split has {} records",
                self.len(),
                ids.len()
            )));
        }
        ids.iter()
            .map(|id| {
                self.rows
                    .get(id)
                    .map(|v| FeatureVector::Dense(v.clone()))
                    .ok_or_else(|| err(format!("no vector for record id {id}")))
            })
            .collect()
    }

    pub fn for_records(&self, records: &[TweetRecord]) -> Result<Vec<FeatureVector>> {
        self.for_ids(&records.iter().map(|r| r.id).collect::<Vec<_>>())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedPipeline {
    pub preprocess: PreprocessConfig,
    pub vectorizer: FittedVectorizer,
    pub learner: LearnerSpec,
    pub classifier: Classifier,
}

/// What fitting observed, for the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub train_records: usize,
    pub feature_dim: usize,
    pub embedding: Option<TrainReport>,
    /// Training-set predictions of the fitted classifier.
    pub train_predictions: Vec<Sentiment>,
}

const PIPELINE_KIND: &str = "pipeline";

fn hash_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(sha256_hex(&bytes))
}

fn embed_all<E: TokenEmbedder>(embedder: &E, docs: &[Vec<String>]) -> Vec<FeatureVector> {
    docs.iter()
        .map(|d| FeatureVector::Dense(embed_document(embedder, d).vector))
        .collect()
}

pub fn preprocess_all(config: &PreprocessConfig, records: &[TweetRecord]) -> Result<Vec<Vec<String>>> {
    Ok(records
        .iter()
        .map(|r| run_pipeline(&r.text, config))
        .collect::<std::result::Result<_, _>>()?)
}

impl TrainedPipeline {
    /// Fits spelling vocabulary, vectorizer and classifier on `train` only.
    pub fn fit(
        mut preprocess: PreprocessConfig,
        vectorizer: &VectorizerSpec,
        learner: &LearnerSpec,
        train: &[TweetRecord],
        external: Option<&ExternalVectors>,
    ) -> Result<(TrainedPipeline, FitSummary)> {
        preprocess.fit_spelling(train.iter().map(|r| r.text.as_str()))?;
        let mut embedding = None;
        let (fitted, xs) = match vectorizer {
            VectorizerSpec::Bow {
                min_count,
                weighting,
            } => {
                let docs = preprocess_all(&preprocess, train)?;
                let bow = BowVectorizer::fit(&docs, *min_count, *weighting)?;
                let xs = docs.iter().map(|d| FeatureVector::Sparse(bow.transform(d))).collect();
                (FittedVectorizer::Bow(bow), xs)
            }
            VectorizerSpec::Subword(params) => {
                let docs = preprocess_all(&preprocess, train)?;
                let (model, report) = train_skipgram(&docs, params)?;
                embedding = Some(report);
                let xs = embed_all(&model, &docs);
                (FittedVectorizer::Subword(model), xs)
            }
            VectorizerSpec::Pretrained { path } => {
                let sha256 = hash_file(path)?;
                let table = load_vectors(path)?;
                let docs = preprocess_all(&preprocess, train)?;
                let xs = embed_all(&table, &docs);
                let fitted = FittedVectorizer::Pretrained {
                    path: path.clone(),
                    sha256,
                    dim: table.dim(),
                };
                (fitted, xs)
            }
            VectorizerSpec::External => {
                let ext = external.ok_or(PipelineError::ExternalVectorsRequired)?;
                let xs = ext.for_records(train)?;
                (FittedVectorizer::External { dim: ext.dim }, xs)
            }
        };
        let labels: Vec<Sentiment> = train.iter().map(|r| r.label).collect();
        let classifier = ovr_train(learner, &xs, &labels)?;
        let train_predictions = xs
            .iter()
            .map(|x| classifier.predict(x).map(|p| p.label))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let summary = FitSummary {
            train_records: train.len(),
            feature_dim: fitted.dim(),
            embedding,
            train_predictions,
        };
        let pipeline = TrainedPipeline {
            preprocess,
            vectorizer: fitted,
            learner: learner.clone(),
            classifier,
        };
        Ok((pipeline, summary))
    }

    fn pretrained_table(&self) -> Result<Option<EmbeddingTable>> {
        let FittedVectorizer::Pretrained { path, sha256, .. } = &self.vectorizer else {
            return Ok(None);
        };
        let found = hash_file(path)?;
        if &found != sha256 {
            return Err(PipelineError::VectorFileChanged {
                path: path.display().to_string(),
                expected: sha256.clone(),
                found,
            });
        }
        Ok(Some(load_vectors(path)?))
    }

    /// Feature vectors for already-preprocessed documents. External pipelines
    /// take their vectors from `external` instead.
    pub fn featurize_tokens(&self, docs: &[Vec<String>]) -> Result<Vec<FeatureVector>> {
        Ok(match &self.vectorizer {
            FittedVectorizer::Bow(b) => {
                docs.iter().map(|d| FeatureVector::Sparse(b.transform(d))).collect()
            }
            FittedVectorizer::Subword(m) => embed_all(m, docs),
            FittedVectorizer::Pretrained { .. } => {
                let table = self.pretrained_table()?.expect("pretrained vectorizer");
                embed_all(&table, docs)
            }
            FittedVectorizer::External { .. } => return Err(PipelineError::ExternalVectorsRequired),
        })
    }

    /// Feature vectors for raw texts with their record ids (ids matter only to
    /// external-vector pipelines).
    pub fn featurize_texts<S: AsRef<str>>(
        &self,
        ids: &[u64],
        texts: &[S],
        external: Option<&ExternalVectors>,
    ) -> Result<Vec<FeatureVector>> {
        if let FittedVectorizer::External { .. } = self.vectorizer {
            let ext = external.ok_or(PipelineError::ExternalVectorsRequired)?;
            return ext.for_ids(ids);
        }
        let docs = texts
            .iter()
            .map(|t| run_pipeline(t.as_ref(), &self.preprocess))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        self.featurize_tokens(&docs)
    }

    pub fn featurize(
        &self,
        records: &[TweetRecord],
        external: Option<&ExternalVectors>,
    ) -> Result<Vec<FeatureVector>> {
        let ids: Vec<u64> = records.iter().map(|r| r.id).collect();
        let texts: Vec<&str> = records.iter().map(|r| r.text.as_str()).collect();
        self.featurize_texts(&ids, &texts, external)
    }

    pub fn predict_features(&self, xs: &[FeatureVector]) -> Result<Vec<Prediction>> {
        Ok(xs
            .iter()
            .map(|x| self.classifier.predict(x))
            .collect::<std::result::Result<_, _>>()?)
    }

    pub fn predict(
        &self,
        records: &[TweetRecord],
        external: Option<&ExternalVectors>,
    ) -> Result<Vec<Prediction>> {
        self.predict_features(&self.featurize(records, external)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(container::write(path, PIPELINE_KIND, self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(container::read(path, PIPELINE_KIND)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{Metric, SvmParams};
    use crate::synth::{generate, SynthSpec};

    fn bow() -> VectorizerSpec {
        VectorizerSpec::Bow {
            min_count: 1,
            weighting: BowWeighting::Counts,
        }
    }

    fn small_corpus() -> Vec<TweetRecord> {
        generate(&SynthSpec {
            per_class: 20,
            ..SynthSpec::default()
        })
        .records()
        .to_vec()
    }

    #[test]
    fn bow_pipeline_round_trip() {
        let recs = small_corpus();
        let (p, summary) = TrainedPipeline::fit(
            PreprocessConfig::default(),
            &bow(),
            &LearnerSpec::Svm(SvmParams::default()),
            &recs,
            None,
        )
        .unwrap();
        assert_eq!(summary.train_predictions.len(), recs.len());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.model");
        p.save(&path).unwrap();
        let q = TrainedPipeline::load(&path).unwrap();
        assert_eq!(p.predict(&recs, None).unwrap(), q.predict(&recs, None).unwrap());
    }

    #[test]
    fn external_vectors_must_match_split() {
        let recs = small_corpus();
        let rows: Vec<(u64, Vec<f64>)> = recs
            .iter()
            .map(|r| (r.id, vec![r.label.code() as f64, 1.0]))
            .collect();
        let ext = ExternalVectors::from_rows(2, rows[1..].to_vec());
        let err = TrainedPipeline::fit(
            PreprocessConfig::default(),
            &VectorizerSpec::External,
            &LearnerSpec::Knn { k: 1, metric: Metric::Euclidean },
            &recs,
            Some(&ext),
        )
        .unwrap_err();
        assert!(err.to_string().contains(&format!("{} vector rows", recs.len() - 1)), "{err}");
        let ext = ExternalVectors::from_rows(2, rows);
        let (p, _) = TrainedPipeline::fit(
            PreprocessConfig::default(),
            &VectorizerSpec::External,
            &LearnerSpec::Knn { k: 1, metric: Metric::Euclidean },
            &recs,
            Some(&ext),
        )
        .unwrap();
        let preds = p.predict(&recs, Some(&ext)).unwrap();
        assert!(preds.iter().zip(&recs).all(|(p, r)| p.label == r.label));
    }
}
