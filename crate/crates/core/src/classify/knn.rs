use serde::{Deserialize, Serialize};

use super::{check_dim, ClassifyError, FeatureVector};
use crate::corpus::Sentiment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// `1 - cos(a, b)`; a zero vector is at distance 1 from everything.
    Cosine,
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KnnRepr", into = "KnnRepr")]
pub struct KnnModel {
    k: usize,
    metric: Metric,
    dim: usize,
    points: Vec<FeatureVector>,
    labels: Vec<Sentiment>,
    norms: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct KnnRepr {
    k: usize,
    metric: Metric,
    points: Vec<FeatureVector>,
    labels: Vec<Sentiment>,
}

impl TryFrom<KnnRepr> for KnnModel {
    type Error = ClassifyError;

    fn try_from(r: KnnRepr) -> Result<Self, Self::Error> {
        knn_fit(r.points, r.labels, r.k, r.metric)
    }
}

impl From<KnnModel> for KnnRepr {
    fn from(m: KnnModel) -> Self {
        KnnRepr {
            k: m.k,
            metric: m.metric,
            points: m.points,
            labels: m.labels,
        }
    }
}

/// Stores the training set verbatim.
pub fn knn_fit(
    points: Vec<FeatureVector>,
    labels: Vec<Sentiment>,
    k: usize,
    metric: Metric,
) -> Result<KnnModel, ClassifyError> {
    if points.is_empty() {
        return Err(ClassifyError::EmptyTrainingSet);
    }
    if points.len() != labels.len() {
        return Err(ClassifyError::LengthMismatch {
            vectors: points.len(),
            labels: labels.len(),
        });
    }
    if k == 0 || k > points.len() {
        return Err(ClassifyError::InvalidK {
            k,
            n: points.len(),
        });
    }
    let dim = points[0].dim();
    for p in &points {
        check_dim(dim, p)?;
        p.check_finite()?;
    }
    let norms = points.iter().map(|p| p.norm_squared().sqrt()).collect();
    Ok(KnnModel {
        k,
        metric,
        dim,
        points,
        labels,
        norms,
    })
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn distance(&self, i: usize, query: &FeatureVector, query_norm: f64) -> f64 {
        let p = &self.points[i];
        match self.metric {
            Metric::Euclidean => p.squared_distance(query).sqrt(),
            Metric::Cosine => {
                let denom = self.norms[i] * query_norm;
                if denom == 0.0 {
                    1.0
                } else {
                    1.0 - p.dot(query) / denom
                }
            }
        }
    }

    /// The `k` nearest training indices with distances, nearest first; equal
    /// distances keep the lower training index first.
    pub fn neighbors(&self, query: &FeatureVector) -> Result<Vec<(usize, f64)>, ClassifyError> {
        check_dim(self.dim, query)?;
        let qn = query.norm_squared().sqrt();
        let mut all: Vec<(usize, f64)> =
            (0..self.points.len()).map(|i| (i, self.distance(i, query, qn))).collect();
        all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        all.truncate(self.k);
        Ok(all)
    }

    /// Majority label among the neighbors, with per-class vote fractions.
    /// Vote ties go to the smaller summed neighbor distance, then the smaller class code.
    pub fn predict_with_scores(
        &self,
        query: &FeatureVector,
    ) -> Result<(Sentiment, [f64; 3]), ClassifyError> {
        let neighbors = self.neighbors(query)?;
        let mut votes = [0usize; 3];
        let mut dist = [0.0f64; 3];
        for &(i, d) in &neighbors {
            let c = self.labels[i].code();
            votes[c] += 1;
            dist[c] += d;
        }
        let best = (0..3)
            .filter(|&c| votes[c] > 0)
            .min_by(|&a, &b| {
                votes[b]
                    .cmp(&votes[a])
                    .then(dist[a].total_cmp(&dist[b]))
                    .then(a.cmp(&b))
            })
            .expect("k >= 1");
        let scores = votes.map(|v| v as f64 / self.k as f64);
        Ok((Sentiment::from_code(best).unwrap(), scores))
    }

    pub fn predict(&self, query: &FeatureVector) -> Result<Sentiment, ClassifyError> {
        Ok(self.predict_with_scores(query)?.0)
    }
}
