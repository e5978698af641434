//! Tokenizing and term normalization.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use unicode_normalization::UnicodeNormalization;
use unicode_segmentation::UnicodeSegmentation;

use crate::error::{Error, Result};

pub const DEFAULT_STOPWORDS: &str = include_str!("../../assets/stopwords.txt");
pub const PERSIAN_SUFFIX_RULES: &str = include_str!("../../assets/stemmer.fa.rules");

/// Splits on Unicode word boundaries after NFC and lowercases. Segments
/// with no letter or digit (punctuation, emoji, spaces) are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    let nfc: String = text.nfc().collect();
    nfc.unicode_words()
        .map(|w| w.to_lowercase().nfc().collect::<String>())
        .filter(|w| !w.is_empty())
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum Stemmer {
    #[default]
    Identity,
    /// Ordered (suffix, replacement) rules; the first matching suffix is
    /// rewritten, provided at least two characters of stem remain.
    Suffix(Vec<(String, String)>),
}

impl Stemmer {
    /// Parses a rule table: one `suffix [replacement]` pair per line, `#`
    /// comments and blank lines ignored.
    pub fn parse_rules(text: &str) -> Result<Stemmer> {
        let mut rules = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_matches(|c: char| c.is_whitespace());
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let suffix: String = parts.next().unwrap_or_default().nfc().collect();
            let replacement: String = parts.next().unwrap_or_default().nfc().collect();
            if parts.next().is_some() {
                return Err(Error::InvalidArgument(format!(
                    "stemmer rule on line {} has more than two fields",
                    n + 1
                )));
            }
            rules.push((suffix, replacement));
        }
        Ok(Stemmer::Suffix(rules))
    }

    pub fn persian() -> Stemmer {
        Stemmer::parse_rules(PERSIAN_SUFFIX_RULES).expect("shipped rules parse")
    }

    pub fn stem(&self, token: &str) -> String {
        match self {
            Stemmer::Identity => token.to_string(),
            Stemmer::Suffix(rules) => {
                for (suffix, replacement) in rules {
                    if let Some(stem) = token.strip_suffix(suffix.as_str()) {
                        if stem.chars().count() >= 2 {
                            return format!("{stem}{replacement}").nfc().collect();
                        }
                    }
                }
                token.to_string()
            }
        }
    }
}

/// Stopword removal plus stemming, applied to tokenizer output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Analyzer {
    stopwords: HashSet<String>,
    stemmer: Stemmer,
}

impl Default for Analyzer {
    fn default() -> Self {
        Analyzer::new(parse_stopwords(DEFAULT_STOPWORDS), Stemmer::Identity)
    }
}

pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_lowercase().nfc().collect())
        .collect()
}

impl Analyzer {
    pub fn new(stopwords: HashSet<String>, stemmer: Stemmer) -> Self {
        Analyzer { stopwords, stemmer }
    }

    /// Defaults overridden by `stopwords.txt` and `stemmer.rules` when
    /// present in `dir`.
    pub fn from_config_dir(dir: &Path) -> Result<Self> {
        let mut a = Analyzer::default();
        let sw = dir.join("stopwords.txt");
        if sw.is_file() {
            a.stopwords = parse_stopwords(&fs::read_to_string(&sw).map_err(|e| Error::io(&sw, e))?);
        }
        let rules = dir.join("stemmer.rules");
        if rules.is_file() {
            a.stemmer = Stemmer::parse_rules(&fs::read_to_string(&rules).map_err(|e| Error::io(&rules, e))?)?;
        }
        Ok(a)
    }

    pub fn stemmer(&self) -> &Stemmer {
        &self.stemmer
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    /// `None` when the token is a stopword or stems to nothing.
    pub fn normalize_token(&self, token: &str) -> Option<String> {
        if self.is_stopword(token) {
            return None;
        }
        let stemmed = self.stemmer.stem(token);
        (!stemmed.is_empty()).then_some(stemmed)
    }

    /// The normalized term sequence of `text`, in order.
    pub fn terms(&self, text: &str) -> Vec<String> {
        tokenize(text)
            .iter()
            .filter_map(|t| self.normalize_token(t))
            .collect()
    }
}
