use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{SparseVector, VectorizeError};

/// Token ↔ index bijection with training frequencies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    tokens: Vec<String>,
    frequencies: Vec<u64>,
    min_count: u64,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    tokens: Vec<String>,
    frequencies: Vec<u64>,
    min_count: u64,
}

impl TryFrom<VocabularyRepr> for Vocabulary {
    type Error = VectorizeError;

    fn try_from(r: VocabularyRepr) -> Result<Self, Self::Error> {
        if r.tokens.len() != r.frequencies.len() {
            return Err(VectorizeError::InvalidVocabulary("token/frequency length mismatch".into()));
        }
        let mut index = HashMap::with_capacity(r.tokens.len());
        for (i, t) in r.tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(VectorizeError::InvalidVocabulary(format!("duplicate token {t:?}")));
            }
        }
        Ok(Vocabulary {
            tokens: r.tokens,
            frequencies: r.frequencies,
            min_count: r.min_count,
            index,
        })
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            tokens: v.tokens,
            frequencies: v.frequencies,
            min_count: v.min_count,
        }
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index(&self, token: &str) -> Option<usize> {
        self.index.get(token).map(|&i| i as usize)
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn frequency(&self, index: usize) -> u64 {
        self.frequencies[index]
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn frequencies(&self) -> &[u64] {
        &self.frequencies
    }

    /// CSV with columns `token,index,frequency`.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["token", "index", "frequency"])?;
        for (i, (t, f)) in self.tokens.iter().zip(&self.frequencies).enumerate() {
            w.write_record([t.as_str(), &i.to_string(), &f.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Keeps tokens whose corpus frequency is at least `min_count`, indexed in
/// first-seen order.
pub fn build_vocabulary<D, T>(docs: &[D], min_count: u64) -> Result<Vocabulary, VectorizeError>
where
    D: AsRef<[T]>,
    T: AsRef<str>,
{
    if docs.is_empty() {
        return Err(VectorizeError::EmptyCorpus);
    }
    let mut order: Vec<&str> = Vec::new();
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for doc in docs {
        for t in doc.as_ref() {
            let t = t.as_ref();
            let c = counts.entry(t).or_insert(0);
            if *c == 0 {
                order.push(t);
            }
            *c += 1;
        }
    }
    if order.is_empty() {
        return Err(VectorizeError::EmptyCorpus);
    }
    let min_count = min_count.max(1);
    let mut tokens = Vec::new();
    let mut frequencies = Vec::new();
    let mut index = HashMap::new();
    for t in order {
        let f = counts[t];
        if f >= min_count {
            index.insert(t.to_string(), tokens.len() as u32);
            tokens.push(t.to_string());
            frequencies.push(f);
        }
    }
    Ok(Vocabulary {
        tokens,
        frequencies,
        min_count,
        index,
    })
}

/// Per-document token counts over `vocab`; out-of-vocabulary tokens are ignored.
pub fn bow_transform<T: AsRef<str>>(tokens: &[T], vocab: &Vocabulary) -> SparseVector {
    let mut ids: Vec<u32> = tokens
        .iter()
        .filter_map(|t| vocab.index.get(t.as_ref()).copied())
        .collect();
    ids.sort_unstable();
    let mut entries: Vec<(u32, f64)> = Vec::new();
    for id in ids {
        match entries.last_mut() {
            Some((last, c)) if *last == id => *c += 1.0,
            _ => entries.push((id, 1.0)),
        }
    }
    SparseVector::new(vocab.len(), entries).expect("counts are sorted and in range")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BowWeighting {
    /// Raw occurrence counts.
    #[default]
    Counts,
    /// 1 for present tokens.
    Binary,
    /// Counts scaled by smoothed inverse document frequency `ln((1+N)/(1+df)) + 1`.
    TfIdf,
}

/// Fitted bag-of-words feature extractor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BowVectorizer {
    pub vocabulary: Vocabulary,
    pub weighting: BowWeighting,
    idf: Option<Vec<f64>>,
}

impl BowVectorizer {
    pub fn fit<D, T>(docs: &[D], min_count: u64, weighting: BowWeighting) -> Result<Self, VectorizeError>
    where
        D: AsRef<[T]>,
        T: AsRef<str>,
    {
        let vocabulary = build_vocabulary(docs, min_count)?;
        if vocabulary.is_empty() {
            return Err(VectorizeError::EmptyVocabulary { min_count });
        }
        let idf = (weighting == BowWeighting::TfIdf).then(|| {
            let mut df = vec![0u64; vocabulary.len()];
            for doc in docs {
                for &(i, _) in bow_transform(doc.as_ref(), &vocabulary).entries() {
                    df[i as usize] += 1;
                }
            }
            let n = docs.len() as f64;
            df.iter().map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0).collect()
        });
        Ok(BowVectorizer {
            vocabulary,
            weighting,
            idf,
        })
    }

    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn transform<T: AsRef<str>>(&self, tokens: &[T]) -> SparseVector {
        let counts = bow_transform(tokens, &self.vocabulary);
        match (self.weighting, &self.idf) {
            (BowWeighting::Counts, _) => counts,
            (BowWeighting::Binary, _) => counts.map_values(|_, _| 1.0),
            (BowWeighting::TfIdf, Some(idf)) => counts.map_values(|i, c| c * idf[i as usize]),
            (BowWeighting::TfIdf, None) => counts,
        }
    }
}
