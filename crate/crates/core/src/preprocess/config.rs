use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CharMap, PreprocessConfig, PreprocessError, Step, StemRules, StopwordList};

/// Where a rule table comes from.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleSource {
    #[default]
    Default,
    None,
    #[serde(untagged)]
    File(PathBuf),
}

/// On-disk preprocess configuration (TOML). All keys are optional:
///
/// ```toml
/// steps = ["map_characters", "strip_punctuation", "strip_foreign", "strip_digits",
///          "normalize", "tokenize", "remove_stopwords", "correct_spelling", "stem"]
/// stopwords = "default"        # "default" | "none" | path (one token per line)
/// char_map = "default"         # "default" | "none" | path (TSV)
/// suffixes = ["هایی", "های", "ها", "ترین", "تری", "تر", "ات", "ان"]
/// min_stem_chars = 2
/// stem_exceptions = []
/// spell_min_frequency = 2
/// ```
///
/// Relative paths resolve against the directory holding the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessFile {
    pub steps: Option<Vec<Step>>,
    #[serde(default)]
    pub stopwords: RuleSource,
    #[serde(default)]
    pub char_map: RuleSource,
    pub suffixes: Option<Vec<String>>,
    pub min_stem_chars: Option<usize>,
    #[serde(default)]
    pub stem_exceptions: BTreeSet<String>,
    pub spell_min_frequency: Option<u64>,
}

fn read(path: &Path) -> Result<String, PreprocessError> {
    std::fs::read_to_string(path).map_err(|e| PreprocessError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

impl PreprocessFile {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, PreprocessError> {
        toml::from_str(text).map_err(|e| PreprocessError::Config {
            path: origin.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Resolves rule files against `base_dir` and builds a validated config.
    pub fn resolve(&self, base_dir: &Path) -> Result<PreprocessConfig, PreprocessError> {
        let defaults = PreprocessConfig::default();
        let char_map = match &self.char_map {
            RuleSource::Default => CharMap::persian_default(),
            RuleSource::None => CharMap::new(Vec::new())?,
            RuleSource::File(p) => CharMap::parse_tsv(&read(&base_dir.join(p))?)?,
        };
        let stem_rules = StemRules::new(
            self.suffixes
                .clone()
                .unwrap_or_else(|| defaults.stem_rules.suffixes().to_vec()),
            self.min_stem_chars.unwrap_or(defaults.stem_rules.min_stem_chars()),
            self.stem_exceptions.clone(),
        )?;
        let stopwords = match &self.stopwords {
            RuleSource::Default => StopwordList::bundled(&char_map, stem_rules.suffixes()),
            RuleSource::None => StopwordList::default(),
            RuleSource::File(p) => {
                StopwordList::parse(&read(&base_dir.join(p))?, &char_map, stem_rules.suffixes())
            }
        };
        let config = PreprocessConfig {
            steps: self.steps.clone().unwrap_or(defaults.steps),
            char_map,
            stopwords,
            stem_rules,
            spell_min_frequency: self.spell_min_frequency.unwrap_or(defaults.spell_min_frequency),
            spell: None,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Reads and resolves a preprocess config file.
pub fn load_preprocess_config(path: &Path) -> Result<PreprocessConfig, PreprocessError> {
    let file = PreprocessFile::parse(&read(path)?, path)?;
    file.resolve(path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let f = PreprocessFile::parse("", Path::new("x.toml")).unwrap();
        let c = f.resolve(Path::new(".")).unwrap();
        assert_eq!(c, PreprocessConfig::default());
    }

    #[test]
    fn rule_files_resolve_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("stop.txt"), "# c\nفقط\n").unwrap();
        std::fs::write(dir.path().join("map.tsv"), "U+0643\tU+06A9\n").unwrap();
        let cfg = dir.path().join("pre.toml");
        std::fs::write(
            &cfg,
            "steps = [\"map_characters\", \"tokenize\", \"remove_stopwords\"]\n\
             stopwords = \"stop.txt\"\nchar_map = \"map.tsv\"\nmin_stem_chars = 3\n",
        )
        .unwrap();
        let c = load_preprocess_config(&cfg).unwrap();
        assert_eq!(c.stopwords.len(), 1);
        assert_eq!(c.char_map.entries().len(), 1);
        assert_eq!(c.stem_rules.min_stem_chars(), 3);
        assert_eq!(
            super::super::run_pipeline("فقط كتاب", &c).unwrap(),
            vec!["کتاب".to_string()]
        );
    }

    #[test]
    fn bad_keys_and_orders_rejected() {
        assert!(PreprocessFile::parse("stepz = []", Path::new("x")).is_err());
        let f = PreprocessFile::parse("steps = [\"stem\", \"tokenize\"]", Path::new("x")).unwrap();
        assert!(f.resolve(Path::new(".")).is_err());
        let f = PreprocessFile::parse("stopwords = \"none\"", Path::new("x")).unwrap();
        assert!(f.resolve(Path::new(".")).unwrap().stopwords.is_empty());
    }
}
