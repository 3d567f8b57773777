//! Binary AdaBoost over depth-1 decision stumps.

use serde::{Deserialize, Serialize};

use super::{check_binary_labels, check_dim, ClassifyError, FeatureVector};

/// `polarity` when `x[feature] >= threshold`, otherwise `-polarity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub polarity: i8,
}

impl Stump {
    pub fn predict_value(&self, value: f64) -> f64 {
        let p = f64::from(self.polarity);
        if value - self.threshold >= 0.0 {
            p
        } else {
            -p
        }
    }

    pub fn predict(&self, x: &FeatureVector) -> f64 {
        self.predict_value(x.get(self.feature))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostRound {
    pub stump: Stump,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostBinaryModel {
    pub dim: usize,
    pub max_rounds: usize,
    pub rounds: Vec<BoostRound>,
}

impl AdaBoostBinaryModel {
    /// Weighted vote `Σ α_t h_t(x)`.
    pub fn score(&self, x: &FeatureVector) -> Result<f64, ClassifyError> {
        check_dim(self.dim, x)?;
        Ok(self.rounds.iter().map(|r| r.alpha * r.stump.predict(x)).sum())
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<f64, ClassifyError> {
        Ok(if self.score(x)? >= 0.0 { 1.0 } else { -1.0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    RoundLimit,
    /// Best stump had weighted error ≥ 0.5; it was not stored.
    NoWeakLearner,
    /// A stump classified the weighted sample perfectly; stored with capped vote weight.
    Perfect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostReport {
    /// Weighted error of each stored round's stump on its own distribution.
    pub errors: Vec<f64>,
    /// The same stump's weighted error after that round's reweighting.
    pub post_update_errors: Vec<f64>,
    pub stop: StopReason,
}

impl AdaBoostReport {
    /// Running product of `2 √(ε (1 - ε))`, the training exponential-loss bound.
    pub fn loss_bounds(&self) -> Vec<f64> {
        let mut acc = 1.0;
        self.errors
            .iter()
            .map(|&e| {
                acc *= 2.0 * (e * (1.0 - e)).sqrt();
                acc
            })
            .collect()
    }
}

/// Errors at or below this are treated as a perfect stump.
pub const PERFECT_ERROR: f64 = 1e-10;

/// `½ ln((1-ε)/ε)`, capped at `½ ln(1e10)` for ε ≤ 1e-10.
pub fn vote_weight(error: f64) -> f64 {
    if error <= PERFECT_ERROR {
        return 0.5 * 1e10f64.ln();
    }
    0.5 * ((1.0 - error) / error).ln()
}

/// Per-feature sample order by value. Samples absent from a sparse column are
/// implicit zeros.
struct Columns {
    n: usize,
    explicit: Vec<Vec<(f64, u32)>>,
}

impl Columns {
    fn new(xs: &[FeatureVector], dim: usize) -> Self {
        let mut explicit: Vec<Vec<(f64, u32)>> = vec![Vec::new(); dim];
        for (i, x) in xs.iter().enumerate() {
            match x {
                FeatureVector::Dense(v) => {
                    for (f, &val) in v.iter().enumerate() {
                        explicit[f].push((val, i as u32));
                    }
                }
                FeatureVector::Sparse(s) => {
                    for &(f, val) in s.entries() {
                        explicit[f as usize].push((val, i as u32));
                    }
                }
            }
        }
        for col in &mut explicit {
            col.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        }
        Columns {
            n: xs.len(),
            explicit,
        }
    }
}

struct Candidate {
    error: f64,
    stump: Stump,
}

/// Minimum weighted-error stump over every feature, at a threshold below the
/// smallest value and at every midpoint between consecutive distinct values.
/// Earlier features, lower thresholds and polarity +1 win exact ties.
fn best_stump(columns: &Columns, ys: &[f64], w: &[f64]) -> Candidate {
    let total_pos: f64 = ys.iter().zip(w).filter(|(y, _)| **y > 0.0).map(|(_, w)| w).sum();
    let total_neg: f64 = ys.iter().zip(w).filter(|(y, _)| **y < 0.0).map(|(_, w)| w).sum();
    let total = total_pos + total_neg;
    let mut best: Option<Candidate> = None;
    let mut consider = |error_plus: f64, feature: usize, threshold: f64| {
        for (error, polarity) in [(error_plus, 1i8), (total - error_plus, -1i8)] {
            if best.as_ref().is_none_or(|b| error < b.error) {
                best = Some(Candidate {
                    error,
                    stump: Stump {
                        feature,
                        threshold,
                        polarity,
                    },
                });
            }
        }
    };

    let mut groups: Vec<(f64, f64, f64)> = Vec::new();
    for (feature, col) in columns.explicit.iter().enumerate() {
        // (value, positive weight, negative weight) per distinct value, zeros merged in
        groups.clear();
        let implicit = columns.n - col.len();
        let (mut zero_pos, mut zero_neg) = (total_pos, total_neg);
        for &(_, i) in col {
            let i = i as usize;
            if ys[i] > 0.0 {
                zero_pos -= w[i];
            } else {
                zero_neg -= w[i];
            }
        }
        let mut zero_pending = implicit > 0;
        for &(v, i) in col {
            if zero_pending && v >= 0.0 {
                push_group(&mut groups, 0.0, zero_pos, zero_neg);
                zero_pending = false;
            }
            let i = i as usize;
            let (p, q) = if ys[i] > 0.0 { (w[i], 0.0) } else { (0.0, w[i]) };
            push_group(&mut groups, v, p, q);
        }
        if zero_pending {
            push_group(&mut groups, 0.0, zero_pos, zero_neg);
        }
        if groups.is_empty() {
            continue;
        }
        // polarity +1 errs on positives below the threshold and negatives at or above it
        let mut pos_below = 0.0;
        let mut neg_below = 0.0;
        consider(total_neg, feature, groups[0].0 - 1.0);
        for g in 0..groups.len() - 1 {
            pos_below += groups[g].1;
            neg_below += groups[g].2;
            let threshold = 0.5 * (groups[g].0 + groups[g + 1].0);
            consider(pos_below + (total_neg - neg_below), feature, threshold);
        }
    }
    best.expect("at least one feature")
}

fn push_group(groups: &mut Vec<(f64, f64, f64)>, value: f64, pos: f64, neg: f64) {
    match groups.last_mut() {
        Some(last) if last.0 == value => {
            last.1 += pos;
            last.2 += neg;
        }
        _ => groups.push((value, pos, neg)),
    }
}

fn weighted_error(preds: &[f64], ys: &[f64], w: &[f64]) -> f64 {
    preds
        .iter()
        .zip(ys)
        .zip(w)
        .filter(|((p, y), _)| p != y)
        .map(|(_, w)| w)
        .sum()
}

/// Classic binary AdaBoost for up to `rounds` rounds.
///
/// Each round fits the weighted-error-minimizing stump, computes its error `ε`
/// directly from its predictions and its vote weight `α = ½ ln((1-ε)/ε)`, then
/// reweights samples by `exp(-α y h(x))` and renormalizes. Training stops early when
/// `ε ≥ 0.5` (stump discarded) or `ε ≤ 1e-10` (stump kept with the capped `α`).
pub fn adaboost_train_binary(
    xs: &[FeatureVector],
    ys: &[f64],
    rounds: usize,
) -> Result<(AdaBoostBinaryModel, AdaBoostReport), ClassifyError> {
    if rounds == 0 {
        return Err(ClassifyError::InvalidHyperparameter("rounds must be at least 1".into()));
    }
    let dim = check_binary_labels(xs, ys)?;
    if dim == 0 {
        return Err(ClassifyError::InvalidHyperparameter("feature dimension is 0".into()));
    }
    let n = xs.len();
    let columns = Columns::new(xs, dim);
    let mut w = vec![1.0 / n as f64; n];
    let mut model = AdaBoostBinaryModel {
        dim,
        max_rounds: rounds,
        rounds: Vec::new(),
    };
    let mut report = AdaBoostReport {
        errors: Vec::new(),
        post_update_errors: Vec::new(),
        stop: StopReason::RoundLimit,
    };

    for _ in 0..rounds {
        let stump = best_stump(&columns, ys, &w).stump;
        let preds: Vec<f64> = xs.iter().map(|x| stump.predict(x)).collect();
        let error = weighted_error(&preds, ys, &w);
        if error >= 0.5 {
            report.stop = StopReason::NoWeakLearner;
            break;
        }
        let alpha = vote_weight(error);
        model.rounds.push(BoostRound { stump, alpha });
        report.errors.push(error);
        if error <= PERFECT_ERROR {
            report.post_update_errors.push(f64::NAN);
            report.stop = StopReason::Perfect;
            break;
        }
        for ((wi, p), y) in w.iter_mut().zip(&preds).zip(ys) {
            *wi *= (-alpha * y * p).exp();
        }
        let z: f64 = w.iter().sum();
        w.iter_mut().for_each(|wi| *wi /= z);
        report.post_update_errors.push(weighted_error(&preds, ys, &w));
    }
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectorize::SparseVector;

    /// Brute-force weighted error of every (feature, threshold, polarity) over
    /// all distinct-value midpoints plus one threshold below the minimum.
    fn brute_best_error(xs: &[Vec<f64>], ys: &[f64], w: &[f64]) -> f64 {
        let dim = xs[0].len();
        let mut best = f64::INFINITY;
        for f in 0..dim {
            let mut vals: Vec<f64> = xs.iter().map(|x| x[f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            let mut thresholds = vec![vals[0] - 1.0];
            thresholds.extend(vals.windows(2).map(|p| 0.5 * (p[0] + p[1])));
            for t in thresholds {
                for pol in [1i8, -1] {
                    let s = Stump {
                        feature: f,
                        threshold: t,
                        polarity: pol,
                    };
                    let e: f64 = xs
                        .iter()
                        .zip(ys)
                        .zip(w)
                        .filter(|((x, y), _)| s.predict_value(x[f]) != **y)
                        .map(|(_, w)| w)
                        .sum();
                    best = best.min(e);
                }
            }
        }
        best
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn alpha_for_twenty_percent_error() {
        assert!((vote_weight(0.2) - 0.5 * 4f64.ln()).abs() < 1e-15);
        assert!((vote_weight(0.2) - 0.6931).abs() < 1e-4);
        assert_eq!(vote_weight(0.0), 0.5 * 1e10f64.ln());
    }

    #[test]
    fn threshold_separable_data_in_one_round() {
        let xs: Vec<FeatureVector> =
            [0.1, 0.4, 0.35, 0.8, 0.9, 1.3].iter().map(|v| FeatureVector::Dense(vec![*v])).collect();
        let ys = [-1.0, -1.0, -1.0, 1.0, 1.0, 1.0];
        let (m, r) = adaboost_train_binary(&xs, &ys, 10).unwrap();
        assert_eq!(r.stop, StopReason::Perfect);
        assert_eq!(m.rounds.len(), 1);
        assert!((m.rounds[0].stump.threshold - 0.6).abs() < 1e-12);
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(m.predict(x).unwrap(), *y);
        }
    }

    #[test]
    fn stump_search_matches_brute_force() {
        let mut rng = crate::rng::SeededRng::new(17);
        for _ in 0..30 {
            let n = 12;
            let raw: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..3).map(|_| (rng.below(5) as f64) - 2.0).collect())
                .collect();
            let mut ys: Vec<f64> = (0..n).map(|_| if rng.unit() < 0.5 { 1.0 } else { -1.0 }).collect();
            ys[0] = 1.0;
            ys[1] = -1.0;
            let mut w: Vec<f64> = (0..n).map(|_| rng.unit() + 0.05).collect();
            let z: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= z);
            for sparse in [false, true] {
                let xs: Vec<FeatureVector> = raw
                    .iter()
                    .map(|r| {
                        if sparse {
                            let e = r
                                .iter()
                                .enumerate()
                                .filter(|(_, v)| **v != 0.0)
                                .map(|(i, v)| (i as u32, *v))
                                .collect();
                            FeatureVector::Sparse(SparseVector::new(3, e).unwrap())
                        } else {
                            FeatureVector::Dense(r.clone())
                        }
                    })
                    .collect();
                let got = best_stump(&Columns::new(&xs, 3), &ys, &w);
                let preds: Vec<f64> = xs.iter().map(|x| got.stump.predict(x)).collect();
                let direct = weighted_error(&preds, &ys, &w);
                let brute = brute_best_error(&raw, &ys, &w);
                assert!((direct - brute).abs() < 1e-12, "{direct} vs {brute}");
                assert!((got.error - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reweighting_sets_stump_error_to_half() {
        let mut rng = crate::rng::SeededRng::new(3);
        let xs: Vec<FeatureVector> = (0..40)
            .map(|_| FeatureVector::Dense((0..4).map(|_| rng.uniform(-1.0, 1.0)).collect()))
            .collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| {
                let v = x.get(0) + 0.5 * x.get(1) + rng.uniform(-0.6, 0.6);
                if v >= 0.0 { 1.0 } else { -1.0 }
            })
            .collect();
        let (m, r) = adaboost_train_binary(&xs, &ys, 15).unwrap();
        assert!(!m.rounds.is_empty());
        for e in &r.post_update_errors {
            assert!((e - 0.5).abs() < 1e-10, "{e}");
        }
        for round in &m.rounds {
            assert!(round.alpha > 0.0);
        }
        let bounds = r.loss_bounds();
        for pair in bounds.windows(2) {
            assert!(pair[1] < pair[0]);
        }
    }

    #[test]
    fn constant_features_still_train() {
        let xs = vec![FeatureVector::Dense(vec![1.0]); 4];
        let ys = [1.0, 1.0, 1.0, -1.0];
        let (m, _) = adaboost_train_binary(&xs, &ys, 5).unwrap();
        assert_eq!(m.predict(&xs[0]).unwrap(), 1.0);
    }

    #[test]
    fn rejects_single_class() {
        let xs = vec![FeatureVector::Dense(vec![1.0]); 2];
        assert!(matches!(
            adaboost_train_binary(&xs, &[1.0, 1.0], 5),
            Err(ClassifyError::SingleClass)
        ));
    }
}
