//! Persian tweet cleaning: character-level normalization, tokenization and
//! token-level filters, composed into a configurable ordered pipeline.

mod charmap;
mod config;
mod rules;

use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use charmap::CharMap;
pub use config::{load_preprocess_config, PreprocessFile, RuleSource};
pub use rules::{
    SpellPolicy, StemRules, StopwordList, DEFAULT_SPELL_MIN_FREQUENCY, DEFAULT_SUFFIXES,
};

/// Zero-width non-joiner, the Persian half-space.
pub const ZWNJ: char = '\u{200C}';

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("invalid character map: {0}")]
    InvalidCharMap(String),
    #[error("invalid rule table: {0}")]
    InvalidRules(String),
    #[error("invalid step order: {0}")]
    InvalidStepOrder(String),
    #[error("correct_spelling is configured but no spelling vocabulary has been fitted")]
    MissingSpellPolicy,
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid preprocess config {path}: {message}")]
    Config { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, PreprocessError>;

static PUNCTUATION_RUN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[\p{P}#@&*+=<>|~^]+").unwrap());
static LATIN_RUN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[A-Za-z]+").unwrap());
static DIGITS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[0-9\x{0660}-\x{0669}\x{06F0}-\x{06F9}]+").unwrap());

fn is_url_or_mention(token: &str) -> bool {
    let lower = token.get(..4).map(str::to_ascii_lowercase);
    matches!(lower.as_deref(), Some("http"))
        || token.get(..3).is_some_and(|p| p.eq_ignore_ascii_case("www"))
        || (token.starts_with('@') && token.len() > 1)
}

fn drop_urls_and_mentions(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut token_start: Option<usize> = None;
    let flush = |out: &mut String, token: &str| {
        if !is_url_or_mention(token) {
            out.push_str(token);
        }
    };
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = token_start.take() {
                flush(&mut out, &text[s..i]);
            }
            out.push(c);
        } else if token_start.is_none() {
            token_start = Some(i);
        }
    }
    if let Some(s) = token_start {
        flush(&mut out, &text[s..]);
    }
    out
}

fn drop_punctuation_runs(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for m in PUNCTUATION_RUN.find_iter(text) {
        out.push_str(&text[last..m.start()]);
        let before = text[..m.start()].chars().next_back();
        let after = text[m.end()..].chars().next();
        if matches!((before, after), (Some(b), Some(a)) if !b.is_whitespace() && !a.is_whitespace())
        {
            out.push(' ');
        }
        last = m.end();
    }
    out.push_str(&text[last..]);
    out
}

/// Deletes URLs and @-mentions, then punctuation.
///
/// A run of punctuation between two non-space characters becomes one space;
/// elsewhere it is deleted. Passes repeat until the text is stable, so the
/// result contains no punctuation and no URL or mention token.
pub fn strip_punctuation(text: &str) -> String {
    let mut current = text.to_string();
    loop {
        let next = drop_punctuation_runs(&drop_urls_and_mentions(&current));
        if next == current {
            return next;
        }
        current = next;
    }
}

/// Deletes every maximal run of ASCII Latin letters.
pub fn strip_foreign(text: &str) -> String {
    LATIN_RUN.replace_all(text, "").into_owned()
}

/// Deletes ASCII, Arabic-Indic and Extended Arabic-Indic digits.
pub fn strip_digits(text: &str) -> String {
    DIGITS.replace_all(text, "").into_owned()
}

pub fn map_characters(text: &str, map: &CharMap) -> String {
    map.apply(text)
}

/// Collapses whitespace to single spaces and trims; collapses ZWNJ runs and drops
/// ZWNJ at token edges; a standalone token equal to one of `suffixes` is joined
/// to the preceding token with a ZWNJ.
pub fn normalize(text: &str, suffixes: &[String]) -> String {
    let mut tokens: Vec<String> = Vec::new();
    for raw in text.split(char::is_whitespace) {
        let mut token = String::with_capacity(raw.len());
        for c in raw.chars() {
            if c == ZWNJ && (token.is_empty() || token.ends_with(ZWNJ)) {
                continue;
            }
            token.push(c);
        }
        while token.ends_with(ZWNJ) {
            token.pop();
        }
        if token.is_empty() {
            continue;
        }
        match tokens.last_mut() {
            Some(prev) if suffixes.contains(&token) => {
                prev.push(ZWNJ);
                prev.push_str(&token);
            }
            _ => tokens.push(token),
        }
    }
    tokens.join(" ")
}

/// Splits on whitespace; ZWNJ stays inside tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

pub fn remove_stopwords(tokens: Vec<String>, list: &StopwordList) -> Vec<String> {
    tokens.into_iter().filter(|t| !list.contains(t)).collect()
}

pub fn correct_spelling(tokens: Vec<String>, policy: &SpellPolicy) -> Vec<String> {
    tokens
        .into_iter()
        .map(|t| match policy.correction(&t) {
            Some(fix) => fix.to_string(),
            None => t,
        })
        .collect()
}

pub fn stem(tokens: Vec<String>, rules: &StemRules) -> Vec<String> {
    tokens
        .into_iter()
        .map(|t| {
            let s = rules.stem_token(&t);
            if s.len() == t.len() {
                t
            } else {
                s.to_string()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    StripPunctuation,
    StripForeign,
    StripDigits,
    MapCharacters,
    Normalize,
    Tokenize,
    RemoveStopwords,
    CorrectSpelling,
    Stem,
}

impl Step {
    pub fn is_token_level(self) -> bool {
        matches!(self, Step::RemoveStopwords | Step::CorrectSpelling | Step::Stem)
    }

    pub fn default_order() -> Vec<Step> {
        vec![
            Step::MapCharacters,
            Step::StripPunctuation,
            Step::StripForeign,
            Step::StripDigits,
            Step::Normalize,
            Step::Tokenize,
            Step::RemoveStopwords,
            Step::CorrectSpelling,
            Step::Stem,
        ]
    }
}

/// Ordered steps plus the rule tables they use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub steps: Vec<Step>,
    pub char_map: CharMap,
    pub stopwords: StopwordList,
    pub stem_rules: StemRules,
    pub spell_min_frequency: u64,
    /// Fitted by [`PreprocessConfig::fit_spelling`]; required when
    /// `CorrectSpelling` is among the steps.
    pub spell: Option<SpellPolicy>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        let char_map = CharMap::persian_default();
        let stem_rules = StemRules::default();
        let stopwords = StopwordList::bundled(&char_map, stem_rules.suffixes());
        PreprocessConfig {
            steps: Step::default_order(),
            char_map,
            stopwords,
            stem_rules,
            spell_min_frequency: DEFAULT_SPELL_MIN_FREQUENCY,
            spell: None,
        }
    }
}

impl PreprocessConfig {
    /// Only tokenization, with default tables.
    pub fn tokenize_only() -> Self {
        PreprocessConfig {
            steps: vec![Step::Tokenize],
            ..PreprocessConfig::default()
        }
    }

    /// Tokenize must appear exactly once, with character-level steps before it
    /// and token-level steps after it.
    pub fn validate(&self) -> Result<()> {
        let positions: Vec<usize> = self
            .steps
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Step::Tokenize)
            .map(|(i, _)| i)
            .collect();
        let tok = match positions.as_slice() {
            [one] => *one,
            [] => return Err(PreprocessError::InvalidStepOrder("tokenize is missing".into())),
            _ => {
                return Err(PreprocessError::InvalidStepOrder(
                    "tokenize appears more than once".into(),
                ))
            }
        };
        let mut seen = HashSet::new();
        for (i, step) in self.steps.iter().enumerate() {
            if !seen.insert(*step) {
                return Err(PreprocessError::InvalidStepOrder(format!("{step:?} repeated")));
            }
            if step.is_token_level() && i < tok {
                return Err(PreprocessError::InvalidStepOrder(format!(
                    "{step:?} must come after tokenize"
                )));
            }
            if !step.is_token_level() && *step != Step::Tokenize && i > tok {
                return Err(PreprocessError::InvalidStepOrder(format!(
                    "{step:?} must come before tokenize"
                )));
            }
        }
        Ok(())
    }

    pub fn uses_spelling(&self) -> bool {
        self.steps.contains(&Step::CorrectSpelling)
    }

    /// Builds the spelling vocabulary from `texts` run through every step that
    /// precedes spelling correction. No-op when spelling correction is not configured.
    pub fn fit_spelling<'a, I: IntoIterator<Item = &'a str>>(&mut self, texts: I) -> Result<()> {
        self.validate()?;
        let Some(pos) = self.steps.iter().position(|s| *s == Step::CorrectSpelling) else {
            return Ok(());
        };
        let prefix = PreprocessConfig {
            steps: self.steps[..pos].to_vec(),
            spell: None,
            ..self.clone()
        };
        let docs = texts
            .into_iter()
            .map(|t| run_pipeline(t, &prefix))
            .collect::<Result<Vec<_>>>()?;
        self.spell = Some(SpellPolicy::from_corpus(docs.iter(), self.spell_min_frequency)?);
        Ok(())
    }

    /// SHA-256 over the canonical JSON form, covering every rule table.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// Runs the configured steps over `text`.
pub fn run_pipeline(text: &str, config: &PreprocessConfig) -> Result<Vec<String>> {
    config.validate()?;
    let mut text = text.to_string();
    let mut tokens: Vec<String> = Vec::new();
    for step in &config.steps {
        match step {
            Step::StripPunctuation => text = strip_punctuation(&text),
            Step::StripForeign => text = strip_foreign(&text),
            Step::StripDigits => text = strip_digits(&text),
            Step::MapCharacters => text = map_characters(&text, &config.char_map),
            Step::Normalize => text = normalize(&text, config.stem_rules.suffixes()),
            Step::Tokenize => tokens = tokenize(&text),
            Step::RemoveStopwords => tokens = remove_stopwords(tokens, &config.stopwords),
            Step::CorrectSpelling => {
                let policy = config.spell.as_ref().ok_or(PreprocessError::MissingSpellPolicy)?;
                tokens = correct_spelling(tokens, policy);
            }
            Step::Stem => tokens = stem(tokens, &config.stem_rules),
        }
    }
    Ok(tokens)
}
