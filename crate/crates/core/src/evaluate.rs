//! Accuracy, per-class and macro-averaged precision/recall/F1, term frequency
//! rankings and model comparison tables.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Sentiment;

#[derive(Debug, Error)]
pub enum EvaluateError {
    #[error("{truth} true labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("corpus has no tokens")]
    EmptyCorpus,
    #[error("no reports to compare")]
    NoReports,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Rows are true classes, columns predicted classes, both in class-code order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; 3]; 3]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn get(&self, truth: Sentiment, predicted: Sentiment) -> u64 {
        self.counts[truth.code()][predicted.code()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn col_sum(&self, class: usize) -> u64 {
        self.counts.iter().map(|r| r[class]).sum()
    }
}

pub fn confusion_matrix(
    truth: &[Sentiment],
    predicted: &[Sentiment],
) -> Result<ConfusionMatrix, EvaluateError> {
    if truth.len() != predicted.len() {
        return Err(EvaluateError::LengthMismatch {
            truth: truth.len(),
            predicted: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(EvaluateError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in truth.iter().zip(predicted) {
        cm.counts[t.code()][p.code()] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: Sentiment,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of items whose true label is this class.
    pub support: u64,
    /// Set when the class was never predicted (precision taken as 0).
    pub precision_undefined: bool,
    /// Set when the class never occurs in the truth (recall taken as 0).
    pub recall_undefined: bool,
    /// Set when precision + recall is 0 (F1 taken as 0).
    pub f1_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub total: u64,
    /// How recall and F1 are averaged over classes.
    pub averaging: String,
    pub confusion: ConfusionMatrix,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, EvaluateError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvaluateError::Empty);
    }
    let per_class: Vec<ClassMetrics> = Sentiment::ALL
        .iter()
        .map(|&class| {
            let c = class.code();
            let tp = cm.counts[c][c];
            let (precision, precision_undefined) = ratio(tp, cm.col_sum(c));
            let (recall, recall_undefined) = ratio(tp, cm.row_sum(c));
            let f1_undefined = precision + recall == 0.0;
            let f1 = if f1_undefined {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                class,
                precision,
                recall,
                f1,
                support: cm.row_sum(c),
                precision_undefined,
                recall_undefined,
                f1_undefined,
            }
        })
        .collect();
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / 3.0;
    Ok(MetricsReport {
        accuracy: cm.trace() as f64 / total as f64,
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        per_class,
        total,
        averaging: "macro".to_string(),
        confusion: *cm,
    })
}

impl MetricsReport {
    pub fn class(&self, class: Sentiment) -> &ClassMetrics {
        &self.per_class[class.code()]
    }

    /// Long-format CSV `metric,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), EvaluateError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["metric", "value"])?;
        let mut row = |k: String, v: String| w.write_record([k, v]);
        row("accuracy".into(), self.accuracy.to_string())?;
        row("macro_precision".into(), self.macro_precision.to_string())?;
        row("macro_recall".into(), self.macro_recall.to_string())?;
        row("macro_f1".into(), self.macro_f1.to_string())?;
        row("total".into(), self.total.to_string())?;
        for m in &self.per_class {
            let name = m.class.name();
            row(format!("precision_{name}"), m.precision.to_string())?;
            row(format!("recall_{name}"), m.recall.to_string())?;
            row(format!("f1_{name}"), m.f1.to_string())?;
            row(format!("support_{name}"), m.support.to_string())?;
        }
        for t in Sentiment::ALL {
            for p in Sentiment::ALL {
                row(
                    format!("confusion_{}_{}", t.name(), p.name()),
                    self.confusion.get(t, p).to_string(),
                )?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermFrequency {
    pub token: String,
    pub count: u64,
    /// `count / max count`, in (0, 1].
    pub weight: f64,
}

/// Tokens ranked by count (descending), ties in lexicographic order.
pub fn term_frequencies<D: AsRef<[String]>>(
    docs: &[D],
    top_n: Option<usize>,
) -> Result<Vec<TermFrequency>, EvaluateError> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for doc in docs {
        for tok in doc.as_ref() {
            *counts.entry(tok.as_str()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    if ranked.is_empty() {
        return Err(EvaluateError::EmptyCorpus);
    }
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    if let Some(n) = top_n {
        ranked.truncate(n);
    }
    let max = ranked[0].1 as f64;
    Ok(ranked
        .into_iter()
        .map(|(t, c)| TermFrequency {
            token: t.to_string(),
            count: c,
            weight: c as f64 / max,
        })
        .collect())
}

pub fn write_term_frequencies<W: Write>(
    terms: &[TermFrequency],
    out: W,
) -> Result<(), EvaluateError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["token", "count", "weight"])?;
    for t in terms {
        w.write_record([t.token.clone(), t.count.to_string(), t.weight.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub accuracy: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

impl ComparisonRow {
    pub fn from_report(model: impl Into<String>, report: &MetricsReport) -> Self {
        ComparisonRow {
            model: model.into(),
            accuracy: report.accuracy,
            macro_recall: report.macro_recall,
            macro_f1: report.macro_f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

/// Rows sorted by accuracy, highest first; equal accuracies keep input order.
pub fn compare_models(mut rows: Vec<ComparisonRow>) -> Result<ComparisonTable, EvaluateError> {
    if rows.is_empty() {
        return Err(EvaluateError::NoReports);
    }
    rows.sort_by(|a, b| b.accuracy.total_cmp(&a.accuracy));
    Ok(ComparisonTable { rows })
}

impl ComparisonTable {
    pub fn order(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r.model.as_str()).collect()
    }

    /// Whether the named models appear in exactly this relative order.
    pub fn follows_order(&self, expected: &[&str]) -> bool {
        let seen: Vec<&str> =
            self.order().into_iter().filter(|m| expected.contains(m)).collect();
        seen == expected
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), EvaluateError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["model", "accuracy", "macro_recall", "macro_f1"])?;
        for r in &self.rows {
            w.write_record([
                r.model.clone(),
                r.accuracy.to_string(),
                r.macro_recall.to_string(),
                r.macro_f1.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
