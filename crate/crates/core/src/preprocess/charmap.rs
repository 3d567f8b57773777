use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::PreprocessError;

/// Ordered source → replacement table applied left to right, longest source first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(String, String)>", into = "Vec<(String, String)>")]
pub struct CharMap {
    entries: Vec<(String, String)>,
    max_source_chars: usize,
}

impl TryFrom<Vec<(String, String)>> for CharMap {
    type Error = PreprocessError;

    fn try_from(entries: Vec<(String, String)>) -> Result<Self, Self::Error> {
        CharMap::new(entries)
    }
}

impl From<CharMap> for Vec<(String, String)> {
    fn from(map: CharMap) -> Self {
        map.entries
    }
}

impl CharMap {
    /// Validates that sources are non-empty and unique and that no replacement
    /// contains a source sequence.
    pub fn new(entries: Vec<(String, String)>) -> Result<Self, PreprocessError> {
        let mut seen = HashSet::new();
        for (src, _) in &entries {
            if src.is_empty() {
                return Err(PreprocessError::InvalidCharMap("empty source".into()));
            }
            if !seen.insert(src.as_str()) {
                return Err(PreprocessError::InvalidCharMap(format!(
                    "source {} listed twice",
                    escape(src)
                )));
            }
        }
        for (src, rep) in &entries {
            if let Some((other, _)) = entries.iter().find(|(s, _)| rep.contains(s.as_str())) {
                return Err(PreprocessError::InvalidCharMap(format!(
                    "replacement for {} contains source {}",
                    escape(src),
                    escape(other)
                )));
            }
        }
        let mut entries = entries;
        // longest source wins at a given position
        entries.sort_by_key(|e| std::cmp::Reverse(e.0.chars().count()));
        let max_source_chars = entries.iter().map(|(s, _)| s.chars().count()).max().unwrap_or(0);
        Ok(CharMap {
            entries,
            max_source_chars,
        })
    }

    /// Arabic → Persian letter unification plus removal of Arabic diacritics and tatweel.
    pub fn persian_default() -> Self {
        let mut entries: Vec<(String, String)> = [
            ('\u{064A}', "\u{06CC}"), // ي → ی
            ('\u{0643}', "\u{06A9}"), // ك → ک
            ('\u{0629}', "\u{0647}"), // ة → ه
            ('\u{06C0}', "\u{0647}"), // ۀ → ه
            ('\u{0623}', "\u{0627}"), // أ → ا
            ('\u{0625}', "\u{0627}"), // إ → ا
            ('\u{0624}', "\u{0648}"), // ؤ → و
            ('\u{0626}', "\u{06CC}"), // ئ → ی
            ('\u{0671}', "\u{0627}"), // ٱ → ا
            ('\u{0640}', ""),         // tatweel
        ]
        .iter()
        .map(|(c, r)| (c.to_string(), r.to_string()))
        .collect();
        for cp in 0x064B..=0x065F {
            entries.push((char::from_u32(cp).unwrap().to_string(), String::new()));
        }
        CharMap::new(entries).expect("default map is closed")
    }

    /// Parses `source<TAB>replacement` lines. Blank lines and `#` comments are
    /// skipped; `U+XXXX` and `\u{XXXX}` escapes are expanded in both fields.
    pub fn parse_tsv(text: &str) -> Result<Self, PreprocessError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (src, rep) = line.split_once('\t').unwrap_or((line, ""));
            let bad = |msg: String| PreprocessError::InvalidCharMap(format!("line {}: {msg}", i + 1));
            let src = unescape(src.trim()).map_err(bad)?;
            let rep = unescape(rep.trim()).map_err(bad)?;
            entries.push((src, rep));
        }
        CharMap::new(entries)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (s, r) in &self.entries {
            out.push_str(&escape(s));
            out.push('\t');
            out.push_str(&escape(r));
            out.push('\n');
        }
        out
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn sources(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(s, _)| s.as_str())
    }

    fn single_pass(&self, text: &str) -> String {
        let mut out = String::with_capacity(text.len());
        let mut rest = text;
        'outer: while !rest.is_empty() {
            for (src, rep) in &self.entries {
                if rest.starts_with(src.as_str()) {
                    out.push_str(rep);
                    rest = &rest[src.len()..];
                    continue 'outer;
                }
            }
            let c = rest.chars().next().unwrap();
            out.push(c);
            rest = &rest[c.len_utf8()..];
        }
        out
    }

    /// Replaces every source occurrence. Passes repeat until nothing changes, so
    /// deletions that bring a multi-codepoint source together are also caught.
    pub fn apply(&self, text: &str) -> String {
        let mut current = self.single_pass(text);
        if self.max_source_chars <= 1 {
            return current;
        }
        loop {
            let next = self.single_pass(&current);
            if next == current {
                return current;
            }
            current = next;
        }
    }
}

impl Default for CharMap {
    fn default() -> Self {
        CharMap::persian_default()
    }
}

fn unescape(field: &str) -> Result<String, String> {
    let mut out = String::new();
    let mut rest = field;
    while !rest.is_empty() {
        if let Some(after) = rest.strip_prefix("U+") {
            let hex_len = after.chars().take_while(|c| c.is_ascii_hexdigit()).count();
            if hex_len == 0 {
                return Err(format!("bad escape in {field:?}"));
            }
            out.push(codepoint(&after[..hex_len])?);
            rest = &after[hex_len..];
        } else if let Some(after) = rest.strip_prefix("\\u{") {
            let end = after.find('}').ok_or_else(|| format!("unterminated escape in {field:?}"))?;
            out.push(codepoint(&after[..end])?);
            rest = &after[end + 1..];
        } else {
            let c = rest.chars().next().unwrap();
            out.push(c);
            rest = &rest[c.len_utf8()..];
        }
    }
    Ok(out)
}

fn codepoint(hex: &str) -> Result<char, String> {
    u32::from_str_radix(hex, 16)
        .ok()
        .and_then(char::from_u32)
        .ok_or_else(|| format!("invalid codepoint {hex:?}"))
}

fn escape(s: &str) -> String {
    s.chars().map(|c| format!("U+{:04X}", c as u32)).collect()
}
