//! The time-travel inverted index.
//!
//! Each normalized term maps to a posting list of
//! `(event, [begin, end), r, positions)` entries, one per event version that
//! contains the term. Alongside the postings the index keeps, for every
//! event version, its interval, term count and vector norm, which is all
//! query scoring needs.

mod coalesce;
mod persist;
mod query;

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};

pub use coalesce::{coalesce_entries, CoalesceConfig, DEFAULT_TOLERANCE};
pub use persist::{load_index, persist_index, read_index, write_index, INDEX_SCHEMA_VERSION};
pub use query::{QuerySpec, ScoredEvent};

use crate::corpus::{chain_intervals, Corpus, EventId, Interval};
use crate::error::Result;
use crate::exec::Exec;
use crate::scoring::{term_vector, Analyzer, CorpusTermStats};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostingEntry {
    pub event: EventId,
    pub interval: Interval,
    /// Occurrences of the term in the version.
    pub r: u32,
    /// Indices into the version's normalized term sequence.
    pub positions: Vec<u32>,
}

/// Per-version facts used for scoring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VersionMeta {
    pub interval: Interval,
    /// Number of normalized terms.
    pub len: u32,
    /// Euclidean norm of the version's TF-IEF vector.
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    /// Term → entries sorted by (event, begin).
    pub dictionary: BTreeMap<String, Vec<PostingEntry>>,
    pub versions: BTreeMap<EventId, Vec<VersionMeta>>,
    pub stats: CorpusTermStats,
    pub built_at: DateTime<Utc>,
    pub coalesce: Option<CoalesceConfig>,
}

struct EventPostings {
    versions: Vec<VersionMeta>,
    postings: Vec<(String, PostingEntry)>,
}

fn index_event(
    id: &EventId,
    versions: &[crate::corpus::EventVersion],
    analyzer: &Analyzer,
    stats: &CorpusTermStats,
) -> Result<EventPostings> {
    let intervals = chain_intervals(versions)?;
    let mut out = EventPostings {
        versions: Vec::with_capacity(versions.len()),
        postings: Vec::new(),
    };
    for (v, interval) in versions.iter().zip(intervals) {
        let terms = analyzer.terms(&v.text);
        let norm = if stats.total_events == 0 {
            0.0
        } else {
            term_vector(&terms, stats)?.norm()
        };
        out.versions.push(VersionMeta {
            interval,
            len: terms.len() as u32,
            norm,
        });
        let mut positions: BTreeMap<&str, Vec<u32>> = BTreeMap::new();
        for (i, t) in terms.iter().enumerate() {
            positions.entry(t).or_default().push(i as u32);
        }
        for (term, positions) in positions {
            out.postings.push((
                term.to_string(),
                PostingEntry {
                    event: id.clone(),
                    interval,
                    r: positions.len() as u32,
                    positions,
                },
            ));
        }
    }
    Ok(out)
}

impl InvertedIndex {
    pub fn empty(built_at: DateTime<Utc>) -> Self {
        InvertedIndex {
            dictionary: BTreeMap::new(),
            versions: BTreeMap::new(),
            stats: CorpusTermStats::default(),
            built_at,
            coalesce: None,
        }
    }

    /// Indexes every version of every event. `built_at` is the corpus's
    /// latest instant, so equal corpora give identical indexes.
    pub fn build(corpus: &Corpus, analyzer: &Analyzer, exec: Exec) -> Result<Self> {
        let stats = CorpusTermStats::build(corpus, analyzer, exec);
        Self::build_with_stats(corpus, analyzer, stats, exec)
    }

    pub fn build_with_stats(
        corpus: &Corpus,
        analyzer: &Analyzer,
        stats: CorpusTermStats,
        exec: Exec,
    ) -> Result<Self> {
        let events: Vec<_> = corpus.events.iter().collect();
        let per_event = exec.map(&events, |(id, versions)| index_event(id, versions, analyzer, &stats));
        let mut index = InvertedIndex::empty(corpus.max_time().unwrap_or(DateTime::UNIX_EPOCH));
        for ((id, _), built) in events.iter().zip(per_event) {
            let built = built?;
            index.versions.insert((*id).clone(), built.versions);
            for (term, entry) in built.postings {
                index.dictionary.entry(term).or_default().push(entry);
            }
        }
        index.stats = stats;
        Ok(index)
    }

    pub fn term_count(&self) -> usize {
        self.dictionary.len()
    }

    pub fn entry_count(&self) -> usize {
        self.dictionary.values().map(Vec::len).sum()
    }

    pub fn postings(&self, term: &str) -> &[PostingEntry] {
        self.dictionary.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The version of `event` valid at instant `at`.
    pub fn version_at(&self, event: &EventId, at: DateTime<Utc>) -> Option<&VersionMeta> {
        self.versions.get(event)?.iter().find(|v| v.interval.contains(at))
    }

    /// Earliest indexed instant.
    pub fn min_time(&self) -> Option<DateTime<Utc>> {
        self.versions.values().filter_map(|v| v.first()).map(|v| v.interval.begin).min()
    }
}
