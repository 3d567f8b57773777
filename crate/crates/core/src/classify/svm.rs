//! Linear SVM trained with Pegasos stochastic subgradient steps.

use serde::{Deserialize, Serialize};

use super::{check_binary_labels, check_dim, ClassifyError, FeatureVector};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-4,
            epochs: 20,
            seed: 42,
        }
    }
}

/// Weights over the features followed by the bias weight (constant-1 feature).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearBinaryModel {
    pub weights: Vec<f64>,
    pub params: SvmParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmReport {
    pub initial_objective: f64,
    pub final_objective: f64,
    pub steps: usize,
}

impl LinearBinaryModel {
    pub fn dim(&self) -> usize {
        self.weights.len() - 1
    }

    /// Signed margin `w·x + b`.
    pub fn score(&self, x: &FeatureVector) -> Result<f64, ClassifyError> {
        check_dim(self.dim(), x)?;
        Ok(x.dot_dense(&self.weights) + self.weights[self.dim()])
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<f64, ClassifyError> {
        Ok(if self.score(x)? >= 0.0 { 1.0 } else { -1.0 })
    }
}

/// `λ/2 ‖w‖² + mean(max(0, 1 - y (w·x + b)))`, with the bias inside `w`.
pub fn svm_objective(weights: &[f64], xs: &[FeatureVector], ys: &[f64], lambda: f64) -> f64 {
    let dim = weights.len() - 1;
    let reg = 0.5 * lambda * weights.iter().map(|w| w * w).sum::<f64>();
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (1.0 - y * (x.dot_dense(weights) + weights[dim])).max(0.0))
        .sum();
    reg + hinge / xs.len() as f64
}

/// Exact minimizer over `c ≥ 0` of the objective along the ray `c * w`.
///
/// With margins `m_i = y_i (w·x_i + b)` the objective is the convex piecewise
/// quadratic `λ/2 c² ‖w‖² + mean(max(0, 1 - c m_i))`, whose kinks sit at
/// `c = 1/m_i`; the optimum is a kink or a segment's stationary point.
fn best_ray_scale(weights: &[f64], xs: &[FeatureVector], ys: &[f64], lambda: f64) -> f64 {
    let dim = weights.len() - 1;
    let n = xs.len() as f64;
    let wsq: f64 = weights.iter().map(|w| w * w).sum();
    if wsq == 0.0 {
        return 1.0;
    }
    let margins: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| y * (x.dot_dense(weights) + weights[dim]))
        .collect();
    let f = |c: f64| {
        0.5 * lambda * c * c * wsq + margins.iter().map(|m| (1.0 - c * m).max(0.0)).sum::<f64>() / n
    };
    let mut kinks: Vec<f64> = margins.iter().filter(|m| **m > 0.0).map(|m| 1.0 / m).collect();
    kinks.sort_by(f64::total_cmp);
    let mut candidates = vec![0.0, 1.0];
    candidates.extend(&kinks);
    let mut lo = 0.0;
    for hi in kinks.iter().copied().chain([f64::INFINITY]) {
        let mid = if hi.is_finite() { 0.5 * (lo + hi) } else { lo + 1.0 };
        let active: f64 = margins.iter().filter(|m| mid * **m < 1.0).sum();
        let c = active / (n * lambda * wsq);
        if c >= lo && c <= hi {
            candidates.push(c);
        }
        lo = hi;
    }
    candidates
        .into_iter()
        .filter(|c| c.is_finite() && *c >= 0.0)
        .map(|c| (f(c), c))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)))
        .map(|(_, c)| c)
        .unwrap_or(1.0)
}

/// Pegasos: at step `t` with `η = 1/(λt)`, `w ← (1 - ηλ) w` and, when the sample's
/// margin `y w·x` is below 1, `w ← w + η y x`, followed by projection onto the
/// ball of radius `1/√λ`. Each epoch visits the samples in a fresh seeded
/// shuffle. The weight vector is kept as `scale * v` (with `‖v‖²` tracked
/// incrementally) so sparse steps touch only the sample's non-zeros. Each
/// epoch-end iterate is rescaled by [`best_ray_scale`] and the rescaled iterate
/// with the lowest objective is returned.
pub fn svm_train_binary(
    xs: &[FeatureVector],
    ys: &[f64],
    params: &SvmParams,
) -> Result<(LinearBinaryModel, SvmReport), ClassifyError> {
    if !(params.lambda > 0.0 && params.lambda.is_finite()) {
        return Err(ClassifyError::InvalidHyperparameter(format!(
            "lambda must be positive, got {}",
            params.lambda
        )));
    }
    let dim = check_binary_labels(xs, ys)?;
    let n = xs.len();
    let radius = 1.0 / params.lambda.sqrt();
    let mut v = vec![0.0; dim + 1];
    let mut v_norm_sq = 0.0f64;
    let mut scale = 1.0f64;
    let mut rng = SeededRng::new(params.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0usize;
    let initial_objective = svm_objective(&vec![0.0; dim + 1], xs, ys, params.lambda);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..params.epochs {
        rng.shuffle(&mut order);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (params.lambda * t as f64);
            let x = &xs[i];
            let y = ys[i];
            let xv = x.dot_dense(&v) + v[dim];
            let margin = y * scale * xv;
            let shrink = 1.0 - eta * params.lambda;
            if shrink <= 0.0 {
                v.iter_mut().for_each(|w| *w = 0.0);
                v_norm_sq = 0.0;
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if margin < 1.0 {
                let step = eta * y / scale;
                // After a reset v is zero, so its product with x is too.
                let xv = if v_norm_sq == 0.0 { 0.0 } else { xv };
                v_norm_sq += 2.0 * step * xv + step * step * (x.norm_squared() + 1.0);
                x.add_scaled_to(&mut v, step);
                v[dim] += step;
            }
            let w_norm = scale * v_norm_sq.max(0.0).sqrt();
            if w_norm > radius {
                scale *= radius / w_norm;
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|w| *w *= scale);
                v_norm_sq = v.iter().map(|w| w * w).sum();
                scale = 1.0;
            }
        }
        let mut weights: Vec<f64> = v.iter().map(|w| w * scale).collect();
        let c = best_ray_scale(&weights, xs, ys, params.lambda);
        weights.iter_mut().for_each(|w| *w *= c);
        let obj = svm_objective(&weights, xs, ys, params.lambda);
        if !obj.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(ClassifyError::NonFinite("SVM objective".into()));
        }
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, weights));
        }
    }
    let (final_objective, weights) =
        best.unwrap_or_else(|| (initial_objective, vec![0.0; dim + 1]));
    Ok((
        LinearBinaryModel {
            weights,
            params: *params,
        },
        SvmReport {
            initial_objective,
            final_objective,
            steps: t,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(rows: &[[f64; 2]]) -> Vec<FeatureVector> {
        rows.iter().map(|r| FeatureVector::Dense(r.to_vec())).collect()
    }

    /// Exhaustive search over a weight grid for a separating (w1, w2, b).
    fn grid_separator(xs: &[[f64; 2]], ys: &[f64]) -> Option<[f64; 3]> {
        let grid: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.5).collect();
        for &a in &grid {
            for &b in &grid {
                for &c in &grid {
                    if xs.iter().zip(ys).all(|(x, y)| y * (a * x[0] + b * x[1] + c) > 0.0) {
                        return Some([a, b, c]);
                    }
                }
            }
        }
        None
    }

    #[test]
    fn separable_set_is_separated() {
        let raw = [[2.0, 1.0], [1.5, 2.5], [-1.0, -2.0], [-2.0, -0.5]];
        let ys = [1.0, 1.0, -1.0, -1.0];
        assert!(grid_separator(&raw, &ys).is_some());
        let xs = dense(&raw);
        let (m, _) = svm_train_binary(&xs, &ys, &SvmParams::default()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(m.predict(x).unwrap(), *y);
        }
    }

    #[test]
    fn objective_improves_on_zero_weights() {
        let raw = [[1.0, 0.2], [0.8, -0.1], [0.2, 1.0], [-0.3, 0.9], [0.5, 0.5], [0.9, 0.6]];
        let ys = [1.0, 1.0, -1.0, -1.0, 1.0, -1.0];
        let (_, report) = svm_train_binary(&dense(&raw), &ys, &SvmParams::default()).unwrap();
        assert_eq!(report.initial_objective, 1.0);
        assert!(report.final_objective < report.initial_objective, "{report:?}");
    }

    #[test]
    fn ray_scale_beats_grid() {
        let raw = [[1.0, 0.2], [0.8, -0.1], [0.2, 1.0], [-0.3, 0.9], [0.5, 0.5], [0.9, 0.6]];
        let ys = [1.0, 1.0, -1.0, -1.0, 1.0, -1.0];
        let xs = dense(&raw);
        let w = [3.0, -2.0, 0.5];
        for lambda in [1e-4, 0.1, 2.0] {
            let c = best_ray_scale(&w, &xs, &ys, lambda);
            let at = |c: f64| svm_objective(&w.map(|v| v * c), &xs, &ys, lambda);
            let grid_best = (0..=20000).map(|i| at(i as f64 * 0.001)).fold(f64::INFINITY, f64::min);
            assert!(at(c) <= grid_best + 1e-12, "lambda {lambda}: {} vs {grid_best}", at(c));
        }
    }

    #[test]
    fn identical_points_train_finitely() {
        let xs = dense(&[[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [1.0, 1.0]]);
        let ys = [1.0, -1.0, 1.0, -1.0];
        let (m, _) = svm_train_binary(&xs, &ys, &SvmParams::default()).unwrap();
        assert!(m.weights.iter().all(|w| w.is_finite()));
    }

    #[test]
    fn rejects_single_class_and_bad_lambda() {
        let xs = dense(&[[1.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(
            svm_train_binary(&xs, &[1.0, 1.0], &SvmParams::default()),
            Err(ClassifyError::SingleClass)
        ));
        let p = SvmParams {
            lambda: 0.0,
            ..SvmParams::default()
        };
        assert!(svm_train_binary(&xs, &[1.0, -1.0], &p).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let raw = [[1.0, 0.2], [0.8, -0.1], [0.2, 1.0], [-0.3, 0.9]];
        let ys = [1.0, 1.0, -1.0, -1.0];
        let a = svm_train_binary(&dense(&raw), &ys, &SvmParams::default()).unwrap();
        let b = svm_train_binary(&dense(&raw), &ys, &SvmParams::default()).unwrap();
        assert_eq!(a, b);
    }
}
