use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{CharMap, PreprocessError, ZWNJ};

const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords_fa.txt");

/// Exact-match token filter. Entries are stored in post-normalization form.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopwordList {
    words: BTreeSet<String>,
}

impl StopwordList {
    /// Parses one token per line, skipping blanks and `#` comments. Each entry is
    /// passed through `map` and `normalize` so it matches pipeline output.
    pub fn parse(text: &str, map: &CharMap, suffixes: &[String]) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .flat_map(|l| {
                let normalized = super::normalize(&map.apply(l), suffixes);
                normalized
                    .split(' ')
                    .filter(|t| !t.is_empty())
                    .map(str::to_string)
                    .collect::<Vec<_>>()
            })
            .collect();
        StopwordList { words }
    }

    pub fn bundled(map: &CharMap, suffixes: &[String]) -> Self {
        StopwordList::parse(BUNDLED_STOPWORDS, map, suffixes)
    }

    pub fn from_words<I: IntoIterator<Item = S>, S: Into<String>>(words: I) -> Self {
        StopwordList {
            words: words.into_iter().map(Into::into).collect(),
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

/// Suffix-stripping rules.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "StemRulesRepr", into = "StemRulesRepr")]
pub struct StemRules {
    suffixes: Vec<String>,
    min_stem_chars: usize,
    exceptions: BTreeSet<String>,
}

#[derive(Serialize, Deserialize)]
struct StemRulesRepr {
    suffixes: Vec<String>,
    min_stem_chars: usize,
    exceptions: BTreeSet<String>,
}

impl TryFrom<StemRulesRepr> for StemRules {
    type Error = PreprocessError;

    fn try_from(r: StemRulesRepr) -> Result<Self, Self::Error> {
        StemRules::new(r.suffixes, r.min_stem_chars, r.exceptions)
    }
}

impl From<StemRules> for StemRulesRepr {
    fn from(r: StemRules) -> Self {
        StemRulesRepr {
            suffixes: r.suffixes,
            min_stem_chars: r.min_stem_chars,
            exceptions: r.exceptions,
        }
    }
}

pub const DEFAULT_SUFFIXES: [&str; 8] = ["هایی", "های", "ها", "ترین", "تری", "تر", "ات", "ان"];

impl StemRules {
    /// Suffixes are reordered longest-first (stable for equal lengths).
    pub fn new<I, S>(suffixes: I, min_stem_chars: usize, exceptions: BTreeSet<String>) -> Result<Self, PreprocessError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        if min_stem_chars == 0 {
            return Err(PreprocessError::InvalidRules("minimum stem length must be at least 1".into()));
        }
        let mut suffixes: Vec<String> = suffixes.into_iter().map(Into::into).collect();
        if suffixes.iter().any(|s| s.is_empty() || s.contains(ZWNJ)) {
            return Err(PreprocessError::InvalidRules("suffixes must be non-empty and free of ZWNJ".into()));
        }
        let mut seen = HashSet::new();
        suffixes.retain(|s| seen.insert(s.clone()));
        suffixes.sort_by_key(|s| std::cmp::Reverse(s.chars().count()));
        Ok(StemRules {
            suffixes,
            min_stem_chars,
            exceptions,
        })
    }

    pub fn suffixes(&self) -> &[String] {
        &self.suffixes
    }

    pub fn min_stem_chars(&self) -> usize {
        self.min_stem_chars
    }

    pub fn exceptions(&self) -> &BTreeSet<String> {
        &self.exceptions
    }

    /// Remaining stem if `suffix` can be stripped from `token`.
    fn strip<'a>(&self, token: &'a str, suffix: &str) -> Option<&'a str> {
        let stem = token.strip_suffix(suffix)?.trim_end_matches(ZWNJ);
        (stem.chars().count() >= self.min_stem_chars).then_some(stem)
    }

    fn strippable(&self, token: &str) -> bool {
        self.suffixes.iter().any(|s| self.strip(token, s).is_some())
    }

    /// Strips one suffix: the longest one whose stem is long enough and would not
    /// itself be stripped again. Tokens with no such suffix are returned unchanged.
    pub fn stem_token<'a>(&self, token: &'a str) -> &'a str {
        if self.exceptions.contains(token) {
            return token;
        }
        self.suffixes
            .iter()
            .filter_map(|s| self.strip(token, s))
            .find(|stem| !self.strippable(stem))
            .unwrap_or(token)
    }
}

impl Default for StemRules {
    fn default() -> Self {
        StemRules::new(DEFAULT_SUFFIXES, 2, BTreeSet::new()).expect("default rules are valid")
    }
}

/// Edit-distance-1 spelling correction against a reference vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SpellRepr", into = "SpellRepr")]
pub struct SpellPolicy {
    vocabulary: HashMap<String, u64>,
    min_frequency: u64,
    alphabet: Vec<char>,
}

#[derive(Serialize, Deserialize)]
struct SpellRepr {
    vocabulary: BTreeMap<String, u64>,
    min_frequency: u64,
}

impl TryFrom<SpellRepr> for SpellPolicy {
    type Error = PreprocessError;

    fn try_from(r: SpellRepr) -> Result<Self, Self::Error> {
        SpellPolicy::new(r.vocabulary, r.min_frequency)
    }
}

impl From<SpellPolicy> for SpellRepr {
    fn from(p: SpellPolicy) -> Self {
        SpellRepr {
            vocabulary: p.vocabulary.into_iter().collect(),
            min_frequency: p.min_frequency,
        }
    }
}

pub const DEFAULT_SPELL_MIN_FREQUENCY: u64 = 2;

impl SpellPolicy {
    pub fn new<I: IntoIterator<Item = (String, u64)>>(
        vocabulary: I,
        min_frequency: u64,
    ) -> Result<Self, PreprocessError> {
        let vocabulary: HashMap<String, u64> = vocabulary.into_iter().collect();
        if vocabulary.is_empty() {
            return Err(PreprocessError::InvalidRules("spelling vocabulary is empty".into()));
        }
        let alphabet: BTreeSet<char> = vocabulary.keys().flat_map(|w| w.chars()).collect();
        Ok(SpellPolicy {
            vocabulary,
            min_frequency,
            alphabet: alphabet.into_iter().collect(),
        })
    }

    /// Counts token frequencies over `docs`.
    pub fn from_corpus<'a, I, D>(docs: I, min_frequency: u64) -> Result<Self, PreprocessError>
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = &'a String>,
    {
        let mut freq: HashMap<String, u64> = HashMap::new();
        for doc in docs {
            for t in doc {
                *freq.entry(t.clone()).or_default() += 1;
            }
        }
        SpellPolicy::new(freq, min_frequency)
    }

    pub fn min_frequency(&self) -> u64 {
        self.min_frequency
    }

    pub fn frequency(&self, word: &str) -> Option<u64> {
        self.vocabulary.get(word).copied()
    }

    pub fn vocabulary_len(&self) -> usize {
        self.vocabulary.len()
    }

    /// The unique qualifying correction for an out-of-vocabulary token, if any.
    pub fn correction(&self, token: &str) -> Option<&str> {
        if self.vocabulary.contains_key(token) {
            return None;
        }
        let mut found: Option<&str> = None;
        let mut seen = HashSet::new();
        for candidate in edits1(token, &self.alphabet) {
            if !seen.insert(candidate.clone()) {
                continue;
            }
            if let Some((word, &f)) = self.vocabulary.get_key_value(candidate.as_str()) {
                if f >= self.min_frequency {
                    if found.is_some() {
                        return None;
                    }
                    found = Some(word.as_str());
                }
            }
        }
        found
    }
}

/// Every string at Damerau–Levenshtein distance at most 1 from `word`
/// (excluding `word` itself is left to the caller).
fn edits1(word: &str, alphabet: &[char]) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    let build = |parts: &[&[char]]| parts.iter().flat_map(|p| p.iter()).collect::<String>();
    let mut out = Vec::with_capacity(n * 2 + (2 * n + 1) * alphabet.len());
    for i in 0..n {
        out.push(build(&[&chars[..i], &chars[i + 1..]]));
    }
    for i in 0..n.saturating_sub(1) {
        if chars[i] != chars[i + 1] {
            out.push(build(&[&chars[..i], &[chars[i + 1], chars[i]], &chars[i + 2..]]));
        }
    }
    for i in 0..n {
        for &c in alphabet {
            if c != chars[i] {
                out.push(build(&[&chars[..i], &[c], &chars[i + 1..]]));
            }
        }
    }
    for i in 0..=n {
        for &c in alphabet {
            out.push(build(&[&chars[..i], &[c], &chars[i..]]));
        }
    }
    out
}
