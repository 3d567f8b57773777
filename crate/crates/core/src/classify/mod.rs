//! KNN, linear SVM and AdaBoost classifiers with a one-vs-rest wrapper.
//!
//! KNN is natively multiclass. SVM and AdaBoost are binary learners; for three
//! classes [`ovr_train`] fits one scorer per class on `+1 = class, -1 = rest`
//! labels and [`Classifier::predict`] takes the argmax of the raw scores, ties
//! going to the smaller class code.

mod adaboost;
mod knn;
mod svm;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adaboost::{
    adaboost_train_binary, vote_weight, AdaBoostBinaryModel, AdaBoostReport, BoostRound,
    StopReason, Stump, PERFECT_ERROR,
};
pub use knn::{knn_fit, KnnModel, Metric};
pub use svm::{svm_objective, svm_train_binary, LinearBinaryModel, SvmParams, SvmReport};

use crate::container::{self, ContainerError};
use crate::corpus::Sentiment;
use crate::vectorize::SparseVector;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("{vectors} vectors but {labels} labels")]
    LengthMismatch { vectors: usize, labels: usize },
    #[error("k = {k} is invalid for {n} training points")]
    InvalidK { k: usize, n: usize },
    #[error("dimension mismatch: model expects {expected}, vector has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("binary training needs both +1 and -1 labels")]
    SingleClass,
    #[error("labels must be +1 or -1, found {0}")]
    InvalidLabel(f64),
    #[error("class {0} is absent from the training data")]
    AbsentClass(Sentiment),
    #[error("need at least 2 classes, found {0}")]
    TooFewClasses(usize),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error(transparent)]
    Container(#[from] ContainerError),
}

/// A sparse or dense feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureVector {
    Sparse(SparseVector),
    Dense(Vec<f64>),
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        match self {
            FeatureVector::Sparse(s) => s.dim(),
            FeatureVector::Dense(d) => d.len(),
        }
    }

    pub fn get(&self, index: usize) -> f64 {
        match self {
            FeatureVector::Sparse(s) => s.get(index),
            FeatureVector::Dense(d) => d.get(index).copied().unwrap_or(0.0),
        }
    }

    pub fn norm_squared(&self) -> f64 {
        match self {
            FeatureVector::Sparse(s) => s.norm_squared(),
            FeatureVector::Dense(d) => d.iter().map(|x| x * x).sum(),
        }
    }

    /// Dot product with a dense slice of at least `dim` components.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        match self {
            FeatureVector::Sparse(s) => s.dot_dense(dense),
            FeatureVector::Dense(d) => d.iter().zip(dense).map(|(a, b)| a * b).sum(),
        }
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        match (self, other) {
            (FeatureVector::Sparse(a), FeatureVector::Sparse(b)) => a.dot(b),
            (FeatureVector::Sparse(a), FeatureVector::Dense(b))
            | (FeatureVector::Dense(b), FeatureVector::Sparse(a)) => a.dot_dense(b),
            (FeatureVector::Dense(a), FeatureVector::Dense(b)) => {
                a.iter().zip(b).map(|(x, y)| x * y).sum()
            }
        }
    }

    pub fn squared_distance(&self, other: &FeatureVector) -> f64 {
        match (self, other) {
            (FeatureVector::Dense(a), FeatureVector::Dense(b)) => {
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
            }
            _ => (self.norm_squared() + other.norm_squared() - 2.0 * self.dot(other)).max(0.0),
        }
    }

    /// `target += scale * self`.
    pub fn add_scaled_to(&self, target: &mut [f64], scale: f64) {
        match self {
            FeatureVector::Sparse(s) => {
                for &(i, v) in s.entries() {
                    target[i as usize] += scale * v;
                }
            }
            FeatureVector::Dense(d) => {
                for (t, v) in target.iter_mut().zip(d) {
                    *t += scale * v;
                }
            }
        }
    }

    pub fn check_finite(&self) -> Result<(), ClassifyError> {
        let finite = match self {
            FeatureVector::Sparse(_) => true,
            FeatureVector::Dense(d) => d.iter().all(|x| x.is_finite()),
        };
        if finite {
            Ok(())
        } else {
            Err(ClassifyError::NonFinite("feature vector".into()))
        }
    }
}

pub(crate) fn check_dim(expected: usize, x: &FeatureVector) -> Result<(), ClassifyError> {
    if x.dim() == expected {
        Ok(())
    } else {
        Err(ClassifyError::DimensionMismatch {
            expected,
            found: x.dim(),
        })
    }
}

/// Validates a ±1 binary problem and returns its common dimension.
pub(crate) fn check_binary_labels(xs: &[FeatureVector], ys: &[f64]) -> Result<usize, ClassifyError> {
    if xs.is_empty() {
        return Err(ClassifyError::EmptyTrainingSet);
    }
    if xs.len() != ys.len() {
        return Err(ClassifyError::LengthMismatch {
            vectors: xs.len(),
            labels: ys.len(),
        });
    }
    if let Some(&bad) = ys.iter().find(|y| **y != 1.0 && **y != -1.0) {
        return Err(ClassifyError::InvalidLabel(bad));
    }
    if !(ys.contains(&1.0) && ys.contains(&-1.0)) {
        return Err(ClassifyError::SingleClass);
    }
    let dim = xs[0].dim();
    for x in xs {
        check_dim(dim, x)?;
        x.check_finite()?;
    }
    Ok(dim)
}

/// Which learner to train, with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LearnerSpec {
    Knn { k: usize, metric: Metric },
    Svm(SvmParams),
    #[serde(rename = "adaboost")]
    AdaBoost { rounds: usize },
}

impl LearnerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LearnerSpec::Knn { .. } => "knn",
            LearnerSpec::Svm(_) => "svm",
            LearnerSpec::AdaBoost { .. } => "adaboost",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BinaryScorer {
    Svm(LinearBinaryModel),
    #[serde(rename = "adaboost")]
    AdaBoost(AdaBoostBinaryModel),
}

impl BinaryScorer {
    pub fn score(&self, x: &FeatureVector) -> Result<f64, ClassifyError> {
        match self {
            BinaryScorer::Svm(m) => m.score(x),
            BinaryScorer::AdaBoost(m) => m.score(x),
        }
    }
}

/// One binary scorer per class, indexed by class code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvrModel {
    pub dim: usize,
    pub scorers: Vec<BinaryScorer>,
}

impl OvrModel {
    pub fn scores(&self, x: &FeatureVector) -> Result<[f64; 3], ClassifyError> {
        check_dim(self.dim, x)?;
        let mut s = [0.0; 3];
        for (slot, scorer) in s.iter_mut().zip(&self.scorers) {
            *slot = scorer.score(x)?;
        }
        Ok(s)
    }
}

/// Index of the largest score; ties go to the smaller class code.
pub fn argmax_class(scores: &[f64; 3]) -> Sentiment {
    let mut best = 0;
    for c in 1..3 {
        if scores[c] > scores[best] {
            best = c;
        }
    }
    Sentiment::from_code(best).unwrap()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Sentiment,
    /// KNN: neighbor vote fractions. OVR: raw binary scores.
    pub scores: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "lowercase")]
pub enum Classifier {
    /// Native multiclass; no one-vs-rest decomposition.
    Knn(KnnModel),
    Ovr(OvrModel),
}

impl Classifier {
    pub fn is_native_multiclass(&self) -> bool {
        matches!(self, Classifier::Knn(_))
    }

    pub fn dim(&self) -> usize {
        match self {
            Classifier::Knn(m) => m.dim(),
            Classifier::Ovr(m) => m.dim,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Classifier::Knn(_) => "knn",
            Classifier::Ovr(m) => match m.scorers.first() {
                Some(BinaryScorer::AdaBoost(_)) => "adaboost",
                _ => "svm",
            },
        }
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<Prediction, ClassifyError> {
        match self {
            Classifier::Knn(m) => {
                let (label, scores) = m.predict_with_scores(x)?;
                Ok(Prediction { label, scores })
            }
            Classifier::Ovr(m) => {
                let scores = m.scores(x)?;
                Ok(Prediction {
                    label: argmax_class(&scores),
                    scores,
                })
            }
        }
    }
}

/// Trains `spec` on multiclass data.
///
/// Binary learners need every class present (each class's "rest" problem must
/// contain both labels). The three binary problems train on separate threads,
/// each with its own generator seeded `seed + class_code`.
pub fn ovr_train(
    spec: &LearnerSpec,
    xs: &[FeatureVector],
    labels: &[Sentiment],
) -> Result<Classifier, ClassifyError> {
    if xs.is_empty() {
        return Err(ClassifyError::EmptyTrainingSet);
    }
    if xs.len() != labels.len() {
        return Err(ClassifyError::LengthMismatch {
            vectors: xs.len(),
            labels: labels.len(),
        });
    }
    let mut present = [false; 3];
    for l in labels {
        present[l.code()] = true;
    }
    let n_present = present.iter().filter(|p| **p).count();
    if n_present < 2 {
        return Err(ClassifyError::TooFewClasses(n_present));
    }
    if let LearnerSpec::Knn { k, metric } = spec {
        return Ok(Classifier::Knn(knn_fit(xs.to_vec(), labels.to_vec(), *k, *metric)?));
    }
    if let Some(c) = Sentiment::ALL.iter().find(|c| !present[c.code()]) {
        return Err(ClassifyError::AbsentClass(*c));
    }
    let dim = xs[0].dim();
    let results: Vec<Result<BinaryScorer, ClassifyError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = Sentiment::ALL
            .iter()
            .map(|class| {
                let ys: Vec<f64> =
                    labels.iter().map(|l| if l == class { 1.0 } else { -1.0 }).collect();
                let code = class.code() as u64;
                scope.spawn(move || match spec {
                    LearnerSpec::Svm(p) => {
                        let params = SvmParams {
                            seed: p.seed.wrapping_add(code),
                            ..*p
                        };
                        svm_train_binary(xs, &ys, &params).map(|(m, _)| BinaryScorer::Svm(m))
                    }
                    LearnerSpec::AdaBoost { rounds } => adaboost_train_binary(xs, &ys, *rounds)
                        .map(|(m, _)| BinaryScorer::AdaBoost(m)),
                    LearnerSpec::Knn { .. } => unreachable!(),
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("training thread panicked")).collect()
    });
    let scorers = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(Classifier::Ovr(OvrModel { dim, scorers }))
}

const MODEL_KIND: &str = "classifier";

pub fn save_model(model: &Classifier, path: &Path) -> Result<(), ClassifyError> {
    Ok(container::write(path, MODEL_KIND, model)?)
}

pub fn load_model(path: &Path) -> Result<Classifier, ClassifyError> {
    Ok(container::read(path, MODEL_KIND)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Sentiment::*;

    fn toy() -> (Vec<FeatureVector>, Vec<Sentiment>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, (c, centre)) in [(Negative, [-2.0, 0.0]), (Neutral, [0.0, 2.0]), (Positive, [2.0, 0.0])]
            .iter()
            .enumerate()
        {
            for j in 0..6 {
                let off = (j as f64 - 2.5) * 0.1 + i as f64 * 0.01;
                xs.push(FeatureVector::Dense(vec![centre[0] + off, centre[1] - off]));
                ys.push(*c);
            }
        }
        (xs, ys)
    }

    #[test]
    fn svm_ovr_structure_and_accuracy() {
        let (xs, ys) = toy();
        let m = ovr_train(&LearnerSpec::Svm(SvmParams::default()), &xs, &ys).unwrap();
        match &m {
            Classifier::Ovr(o) => assert_eq!(o.scorers.len(), 3),
            _ => panic!("expected OVR"),
        }
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(m.predict(x).unwrap().label, *y);
        }
    }

    #[test]
    fn knn_is_native() {
        let (xs, ys) = toy();
        let m = ovr_train(&LearnerSpec::Knn { k: 5, metric: Metric::Euclidean }, &xs, &ys).unwrap();
        assert!(m.is_native_multiclass());
    }

    #[test]
    fn absent_class_is_named() {
        let (xs, ys) = toy();
        let keep: Vec<usize> = (0..xs.len()).filter(|&i| ys[i] != Neutral).collect();
        let xs: Vec<_> = keep.iter().map(|&i| xs[i].clone()).collect();
        let ys: Vec<_> = keep.iter().map(|&i| ys[i]).collect();
        let err = ovr_train(&LearnerSpec::AdaBoost { rounds: 5 }, &xs, &ys).unwrap_err();
        assert!(matches!(err, ClassifyError::AbsentClass(Neutral)));
        assert!(err.to_string().contains("neutral"));
        let one: Vec<_> = vec![Positive; 3];
        assert!(matches!(
            ovr_train(&LearnerSpec::AdaBoost { rounds: 5 }, &xs[..3], &one),
            Err(ClassifyError::TooFewClasses(1))
        ));
    }

    #[test]
    fn argmax_tie_and_shift() {
        assert_eq!(argmax_class(&[0.5, -0.2, 0.5]), Negative);
        assert_eq!(argmax_class(&[-1.0, 3.0, 0.0]), Neutral);
        assert_eq!(argmax_class(&[-1.0 + 7.0, 3.0 + 7.0, 0.0 + 7.0]), Neutral);
    }

    #[test]
    fn ovr_dimension_mismatch() {
        let (xs, ys) = toy();
        let m = ovr_train(&LearnerSpec::AdaBoost { rounds: 3 }, &xs, &ys).unwrap();
        assert!(matches!(
            m.predict(&FeatureVector::Dense(vec![1.0])),
            Err(ClassifyError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mixed_sparse_dense_arithmetic() {
        let s = FeatureVector::Sparse(SparseVector::new(3, vec![(0, 1.0), (2, 2.0)]).unwrap());
        let d = FeatureVector::Dense(vec![1.0, 5.0, 2.0]);
        assert_eq!(s.dot(&d), 5.0);
        assert_eq!(s.squared_distance(&d), 25.0);
        let mut t = vec![0.0; 3];
        s.add_scaled_to(&mut t, 2.0);
        assert_eq!(t, vec![2.0, 0.0, 4.0]);
    }
}
