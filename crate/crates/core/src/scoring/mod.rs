//! TF-IEF weighting and cosine similarity.
//!
//! `tf` is a term's share of an event's normalized terms, `ief` is
//! `log2(|E| / ef)` with `ef` the number of events containing the term, and
//! an event's vector holds `tf * ief` per distinct term. Statistics are
//! taken over the latest version of every event.

mod text;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use text::{parse_stopwords, tokenize, Analyzer, Stemmer, DEFAULT_STOPWORDS, PERSIAN_SUFFIX_RULES};

use crate::corpus::{Corpus, EventId};
use crate::error::{Error, Result};
use crate::exec::Exec;

pub const DEFAULT_CATEGORIES: &str = include_str!("../../assets/categories.json");

/// `count(term) / len(tokens)`, 0 for an empty token list.
pub fn tf<S: AsRef<str>>(term: &str, tokens: &[S]) -> f64 {
    if tokens.is_empty() {
        return 0.0;
    }
    let count = tokens.iter().filter(|t| t.as_ref() == term).count();
    count as f64 / tokens.len() as f64
}

/// Event frequencies over a corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusTermStats {
    pub total_events: u64,
    pub ef: BTreeMap<String, u64>,
    pub total_words: BTreeMap<EventId, u64>,
}

impl CorpusTermStats {
    /// Stats from each event's normalized term list.
    pub fn from_term_lists<'a, I>(events: I) -> Self
    where
        I: IntoIterator<Item = (&'a EventId, &'a [String])>,
    {
        let mut stats = CorpusTermStats::default();
        for (id, terms) in events {
            stats.total_events += 1;
            stats.total_words.insert(id.clone(), terms.len() as u64);
            let mut distinct: Vec<&String> = terms.iter().collect();
            distinct.sort();
            distinct.dedup();
            for t in distinct {
                *stats.ef.entry(t.clone()).or_default() += 1;
            }
        }
        stats
    }

    pub fn build(corpus: &Corpus, analyzer: &Analyzer, exec: Exec) -> Self {
        let latest: Vec<(&EventId, &str)> = corpus
            .events
            .iter()
            .filter_map(|(id, vs)| vs.last().map(|v| (id, v.text.as_str())))
            .collect();
        let terms = exec.map(&latest, |(_, text)| analyzer.terms(text));
        CorpusTermStats::from_term_lists(
            latest.iter().zip(&terms).map(|((id, _), t)| (*id, t.as_slice())),
        )
    }

    pub fn event_frequency(&self, term: &str) -> u64 {
        self.ef.get(term).copied().unwrap_or(0)
    }

    /// `log2(|E| / ef)`; a term seen in no event gets `log2(2|E|)`.
    pub fn ief(&self, term: &str) -> Result<f64> {
        if self.total_events == 0 {
            return Err(Error::EmptyCorpus);
        }
        let n = self.total_events as f64;
        Ok(match self.event_frequency(term) {
            0 => (2.0 * n).log2(),
            ef => (n / ef as f64).log2(),
        })
    }
}

pub fn ief(term: &str, stats: &CorpusTermStats) -> Result<f64> {
    stats.ief(term)
}

pub fn tf_ief<S: AsRef<str>>(term: &str, tokens: &[S], stats: &CorpusTermStats) -> Result<f64> {
    let tf = tf(term, tokens);
    let ief = stats.ief(term)?;
    Ok(tf * ief)
}

/// A sparse non-negative vector with a cached Euclidean norm.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TermVector {
    weights: BTreeMap<String, f64>,
    norm: f64,
}

impl TermVector {
    /// Entries that are not strictly positive are dropped.
    pub fn new(weights: impl IntoIterator<Item = (String, f64)>) -> Self {
        let weights: BTreeMap<String, f64> = weights.into_iter().filter(|(_, w)| *w > 0.0).collect();
        let norm = weights.values().map(|w| w * w).sum::<f64>().sqrt();
        TermVector { weights, norm }
    }

    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }

    pub fn get(&self, term: &str) -> f64 {
        self.weights.get(term).copied().unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> TermVector {
        TermVector::new(self.weights.iter().map(|(t, w)| (t.clone(), w * factor)))
    }

    pub fn dot(&self, other: &TermVector) -> f64 {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.weights.iter().map(|(t, w)| w * large.get(t)).sum()
    }
}

/// The TF-IEF vector of a normalized term sequence.
pub fn term_vector<S: AsRef<str>>(terms: &[S], stats: &CorpusTermStats) -> Result<TermVector> {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for t in terms {
        *counts.entry(t.as_ref()).or_default() += 1;
    }
    let len = terms.len() as f64;
    let mut out = Vec::with_capacity(counts.len());
    for (t, c) in counts {
        out.push((t.to_string(), c as f64 / len * stats.ief(t)?));
    }
    Ok(TermVector::new(out))
}

/// `a·b / (|a||b|)`, 0 when either norm is 0, clamped to `[0, 1]`.
pub fn cosine(a: &TermVector, b: &TermVector) -> f64 {
    cosine_with_norms(a.dot(b), a.norm, b.norm)
}

pub fn cosine_with_norms(dot: f64, na: f64, nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryVector {
    pub name: String,
    pub vector: TermVector,
}

/// Parses `{"<name>": ["seed", ...]}`. Seeds are normalized with
/// `analyzer`; each surviving term is weighted by how often it occurs in
/// the seed list.
pub fn parse_categories(json: &str, analyzer: &Analyzer) -> Result<Vec<CategoryVector>> {
    let raw: BTreeMap<String, Vec<String>> = serde_json::from_str(json)?;
    let mut out = Vec::with_capacity(raw.len());
    for (name, seeds) in raw {
        let mut counts: BTreeMap<String, f64> = BTreeMap::new();
        for seed in &seeds {
            for term in analyzer.terms(seed) {
                *counts.entry(term).or_default() += 1.0;
            }
        }
        if counts.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "category {name:?} has no seed terms left after normalization"
            )));
        }
        out.push(CategoryVector {
            name,
            vector: TermVector::new(counts),
        });
    }
    Ok(out)
}

pub fn default_categories(analyzer: &Analyzer) -> Vec<CategoryVector> {
    parse_categories(DEFAULT_CATEGORIES, analyzer).expect("shipped categories parse")
}

/// `categories.json` from `dir` if present, else the shipped set.
pub fn load_categories(dir: &Path, analyzer: &Analyzer) -> Result<Vec<CategoryVector>> {
    let path = dir.join("categories.json");
    if path.is_file() {
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        parse_categories(&text, analyzer)
    } else {
        Ok(default_categories(analyzer))
    }
}

pub fn adapt_categories(event: &TermVector, categories: &[CategoryVector]) -> BTreeMap<String, f64> {
    categories
        .iter()
        .map(|c| (c.name.clone(), cosine(event, &c.vector)))
        .collect()
}
