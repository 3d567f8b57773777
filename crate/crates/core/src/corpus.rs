//! Labeled tweet corpora: CSV loading, class/tag distributions and seeded splits.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SeededRng;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column {0:?} in header")]
    MissingColumn(String),
    #[error("row {row}: unknown label {value:?}")]
    UnknownLabel { row: usize, value: String },
    #[error("row {row}: empty text")]
    EmptyText { row: usize },
    #[error("row {row}: invalid id {value:?}")]
    InvalidId { row: usize, value: String },
    #[error("row {row}: duplicate id {id}")]
    DuplicateId { row: usize, id: u64 },
    #[error("dataset is empty")]
    Empty,
    #[error("corpus too small to split: {0}")]
    TooSmall(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("stratified split requires every class; {0} is absent")]
    AbsentClass(Sentiment),
}

pub type Result<T> = std::result::Result<T, CorpusError>;

/// Three-way sentiment label with fixed integer codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Negative = 0,
    Neutral = 1,
    Positive = 2,
}

impl Sentiment {
    pub const ALL: [Sentiment; 3] = [Sentiment::Negative, Sentiment::Neutral, Sentiment::Positive];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Sentiment> {
        Sentiment::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Sentiment::Negative => "negative",
            Sentiment::Neutral => "neutral",
            Sentiment::Positive => "positive",
        }
    }

    /// Maps a surface form from a label column onto a class.
    ///
    /// Accepted forms: English names and abbreviations (case-insensitive),
    /// the integer codes, signed shorthands and the common Persian words.
    pub fn from_alias(raw: &str) -> Option<Sentiment> {
        let s = raw.trim();
        let lower = s.to_lowercase();
        match lower.as_str() {
            "negative" | "neg" | "0" | "-1" | "-" | "منفی" => Some(Sentiment::Negative),
            "neutral" | "neu" | "1" | "خنثی" | "بی‌طرف" | "بیطرف" | "بی طرف" => {
                Some(Sentiment::Neutral)
            }
            "positive" | "pos" | "2" | "+1" | "+" | "مثبت" => Some(Sentiment::Positive),
            _ => None,
        }
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Sentiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Sentiment::from_alias(s).ok_or_else(|| format!("unknown label {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: u64,
    pub text: String,
    pub label: Sentiment,
    pub tag: Option<String>,
}

/// Column names used when reading a corpus CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub text: String,
    pub label: String,
    /// Optional: when the header lacks this column every record is untagged.
    pub tag: Option<String>,
    /// When set, ids are read from this column instead of being assigned by row order.
    pub id: Option<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            text: "text".into(),
            label: "label".into(),
            tag: Some("tag".into()),
            id: None,
        }
    }
}

impl CsvSchema {
    /// Schema of the files written by [`LabeledCorpus::write_csv`].
    pub fn split_file() -> Self {
        CsvSchema {
            text: "text".into(),
            label: "label".into(),
            tag: Some("tag".into()),
            id: Some("id".into()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabeledCorpus {
    records: Vec<TweetRecord>,
}

impl LabeledCorpus {
    /// Builds a corpus, rejecting duplicate ids and blank texts.
    pub fn new(records: Vec<TweetRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if r.text.trim().is_empty() {
                return Err(CorpusError::EmptyText { row: i + 1 });
            }
            if !seen.insert(r.id) {
                return Err(CorpusError::DuplicateId { row: i + 1, id: r.id });
            }
        }
        Ok(LabeledCorpus { records })
    }

    pub fn records(&self) -> &[TweetRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> Vec<Sentiment> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.text.as_str())
    }

    pub fn class_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for r in &self.records {
            counts[r.label.code()] += 1;
        }
        counts
    }

    /// Writes `id,text,label,tag` with canonical label names.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["id", "text", "label", "tag"])?;
        for r in &self.records {
            w.write_record([
                r.id.to_string().as_str(),
                r.text.as_str(),
                r.label.name(),
                r.tag.as_deref().unwrap_or(""),
            ])?;
        }
        w.flush().map_err(|e| CorpusError::Io {
            path: "<writer>".into(),
            source: e,
        })?;
        Ok(())
    }
}

/// Reads a corpus CSV from `path`.
pub fn load_corpus(path: &Path, schema: &CsvSchema) -> Result<LabeledCorpus> {
    let file = std::fs::File::open(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    read_corpus(file, schema)
}

/// Reads a corpus from any CSV source. Row numbers in errors count data rows from 1.
pub fn read_corpus<R: Read>(reader: R, schema: &CsvSchema) -> Result<LabeledCorpus> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}').trim() == name)
            .ok_or_else(|| CorpusError::MissingColumn(name.to_string()))
    };
    let text_col = column(&schema.text)?;
    let label_col = column(&schema.label)?;
    // Tags only feed the tag distribution; a corpus without the column is untagged.
    let tag_col = schema.tag.as_deref().and_then(|t| column(t).ok());
    let id_col = schema.id.as_deref().map(column).transpose()?;

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let field = |c: usize| row.get(c).unwrap_or("");
        let label_raw = field(label_col);
        let label = Sentiment::from_alias(label_raw).ok_or_else(|| CorpusError::UnknownLabel {
            row: row_no,
            value: label_raw.to_string(),
        })?;
        let text = field(text_col).to_string();
        if text.trim().is_empty() {
            return Err(CorpusError::EmptyText { row: row_no });
        }
        let tag = tag_col
            .map(|c| field(c).trim().to_string())
            .filter(|t| !t.is_empty());
        let id = match id_col {
            Some(c) => {
                let raw = field(c).trim();
                raw.parse::<u64>().map_err(|_| CorpusError::InvalidId {
                    row: row_no,
                    value: raw.to_string(),
                })?
            }
            None => i as u64,
        };
        records.push(TweetRecord { id, text, label, tag });
    }
    if records.is_empty() {
        return Err(CorpusError::Empty);
    }
    LabeledCorpus::new(records)
}

/// One row of a distribution report. `percent_hundredths` holds the percentage
/// times 100, rounded half-up, so 48.95% is stored as 4895.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionEntry {
    pub key: String,
    pub count: usize,
    pub percent_hundredths: u64,
}

impl DistributionEntry {
    pub fn percent(&self) -> f64 {
        self.percent_hundredths as f64 / 100.0
    }

    pub fn percent_string(&self) -> String {
        format!("{}.{:02}", self.percent_hundredths / 100, self.percent_hundredths % 100)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub total: usize,
    pub entries: Vec<DistributionEntry>,
}

impl DistributionReport {
    fn from_counts(counts: Vec<(String, usize)>) -> Result<Self> {
        let total: usize = counts.iter().map(|(_, c)| c).sum();
        if total == 0 {
            return Err(CorpusError::Empty);
        }
        let entries = counts
            .into_iter()
            .map(|(key, count)| DistributionEntry {
                key,
                count,
                percent_hundredths: percent_half_up(count, total),
            })
            .collect();
        Ok(DistributionReport { total, entries })
    }

    pub fn get(&self, key: &str) -> Option<&DistributionEntry> {
        self.entries.iter().find(|e| e.key == key)
    }

    /// CSV with columns `key,count,percent`.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["key", "count", "percent"])?;
        for e in &self.entries {
            w.write_record([e.key.as_str(), &e.count.to_string(), &e.percent_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `count / total * 100` to two decimals, half-up, in exact integer arithmetic.
fn percent_half_up(count: usize, total: usize) -> u64 {
    let (c, t) = (count as u128, total as u128);
    ((c * 20_000 + t) / (2 * t)) as u64
}

/// Count and percentage per class, in class-code order (absent classes included).
pub fn class_distribution(corpus: &LabeledCorpus) -> Result<DistributionReport> {
    if corpus.is_empty() {
        return Err(CorpusError::Empty);
    }
    let counts = corpus.class_counts();
    DistributionReport::from_counts(
        Sentiment::ALL
            .iter()
            .map(|s| (s.name().to_string(), counts[s.code()]))
            .collect(),
    )
}

/// Key under which records without a search-term tag are counted.
pub const UNTAGGED: &str = "untagged";

/// Count and percentage per search-term tag, ordered by count descending then key.
pub fn tag_distribution(corpus: &LabeledCorpus) -> Result<DistributionReport> {
    if corpus.is_empty() {
        return Err(CorpusError::Empty);
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in corpus.records() {
        *counts.entry(r.tag.as_deref().unwrap_or(UNTAGGED)).or_default() += 1;
    }
    let mut counts: Vec<(String, usize)> =
        counts.into_iter().map(|(k, c)| (k.to_string(), c)).collect();
    counts.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    DistributionReport::from_counts(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_ratio: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_ratio: 0.8,
            seed: 42,
            stratified: false,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return Err(CorpusError::InvalidSplit(format!(
                "train_ratio must lie strictly between 0 and 1, got {}",
                self.train_ratio
            )));
        }
        Ok(())
    }

    fn train_size(&self, n: usize) -> usize {
        (self.train_ratio * n as f64).floor() as usize
    }
}

/// Shuffled train/test partition.
///
/// Record indices are Fisher–Yates shuffled with `spec.seed` and the first
/// `floor(ratio * N)` go to training. In stratified mode each class receives
/// `floor(ratio * n_c)` training slots, the leftover slots go to the classes with
/// the largest fractional remainders (ties to the smaller class code), and each
/// class fills its slots in shuffled order. Both halves keep shuffled order.
pub fn shuffle_split(
    corpus: &LabeledCorpus,
    spec: &SplitSpec,
) -> Result<(LabeledCorpus, LabeledCorpus)> {
    spec.validate()?;
    let n = corpus.len();
    if n < 2 {
        return Err(CorpusError::TooSmall(format!("{n} record(s)")));
    }
    let n_train = spec.train_size(n);
    if n_train == 0 || n_train == n {
        return Err(CorpusError::TooSmall(format!(
            "ratio {} of {n} records leaves an empty side",
            spec.train_ratio
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    SeededRng::new(spec.seed).shuffle(&mut order);

    let mut in_train = vec![false; n];
    if spec.stratified {
        let counts = corpus.class_counts();
        if let Some(absent) = Sentiment::ALL.iter().find(|s| counts[s.code()] == 0) {
            return Err(CorpusError::AbsentClass(*absent));
        }
        let quota = stratified_quota(&counts, n_train, spec.train_ratio);
        let mut taken = [0usize; 3];
        for &i in &order {
            let c = corpus.records[i].label.code();
            if taken[c] < quota[c] {
                taken[c] += 1;
                in_train[i] = true;
            }
        }
    } else {
        for &i in &order[..n_train] {
            in_train[i] = true;
        }
    }

    let (train, test): (Vec<usize>, Vec<usize>) = order.iter().partition(|&&i| in_train[i]);
    let pick = |idx: Vec<usize>| LabeledCorpus {
        records: idx.into_iter().map(|i| corpus.records[i].clone()).collect(),
    };
    Ok((pick(train), pick(test)))
}

fn stratified_quota(counts: &[usize; 3], n_train: usize, ratio: f64) -> [usize; 3] {
    let mut quota = [0usize; 3];
    let mut remainders = Vec::with_capacity(3);
    for c in 0..3 {
        let exact = ratio * counts[c] as f64;
        quota[c] = (exact.floor() as usize).min(counts[c]);
        remainders.push((exact - exact.floor(), c));
    }
    let mut missing = n_train.saturating_sub(quota.iter().sum());
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    while missing > 0 {
        let before = missing;
        for &(_, c) in &remainders {
            if missing > 0 && quota[c] < counts[c] {
                quota[c] += 1;
                missing -= 1;
            }
        }
        if before == missing {
            break;
        }
    }
    quota
}
