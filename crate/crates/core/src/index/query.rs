//! Keyword + time-interval query evaluation.
//!
//! An event matches when a query term has an entry for it whose interval
//! intersects `[from, to]` (every term must, with `all_terms`). It is scored
//! at its latest version that intersects the interval and holds a query
//! term.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{InvertedIndex, PostingEntry, VersionMeta};
use crate::corpus::{EventId, Interval};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::scoring::{cosine_with_norms, term_vector, Analyzer};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub keywords: Vec<String>,
    /// Defaults to the beginning of time.
    pub from: Option<DateTime<Utc>>,
    /// Defaults to "now", later than anything stored.
    pub to: Option<DateTime<Utc>>,
    pub channels: Option<Vec<String>>,
    pub limit: Option<usize>,
    pub offset: usize,
    pub all_terms: bool,
}

impl QuerySpec {
    pub fn new<S: Into<String>>(keywords: impl IntoIterator<Item = S>) -> Self {
        QuerySpec {
            keywords: keywords.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    pub fn between(mut self, from: DateTime<Utc>, to: DateTime<Utc>) -> Self {
        self.from = Some(from);
        self.to = Some(to);
        self
    }

    /// A time-point query is the interval `[t, t]`.
    pub fn at(self, t: DateTime<Utc>) -> Self {
        self.between(t, t)
    }

    pub fn in_channels<S: Into<String>>(mut self, channels: impl IntoIterator<Item = S>) -> Self {
        self.channels = Some(channels.into_iter().map(Into::into).collect());
        self
    }

    pub fn bounds(&self) -> Result<(DateTime<Utc>, DateTime<Utc>)> {
        let from = self.from.unwrap_or(DateTime::<Utc>::MIN_UTC);
        let to = self.to.unwrap_or(DateTime::<Utc>::MAX_UTC);
        if from > to {
            return Err(Error::InvalidInterval {
                begin: from.to_rfc3339(),
                end: to.to_rfc3339(),
            });
        }
        Ok((from, to))
    }

    pub fn terms(&self, analyzer: &Analyzer) -> Result<Vec<String>> {
        let terms: Vec<String> = self.keywords.iter().flat_map(|k| analyzer.terms(k)).collect();
        if terms.is_empty() {
            return Err(Error::EmptyQuery);
        }
        Ok(terms)
    }

    fn admits(&self, channel: &str) -> bool {
        self.channels
            .as_ref()
            .is_none_or(|cs| cs.iter().any(|c| c == channel))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredEvent {
    pub event: EventId,
    /// Start of the scored version.
    pub timestamp: DateTime<Utc>,
    pub version: Interval,
    /// Intervals of the matching entries that intersect the query.
    pub matched_intervals: Vec<Interval>,
    /// Σ over distinct query terms of the term's TF-IEF in the scored version.
    pub tf_ief_sum: f64,
    pub cosine: f64,
    pub repetitions: BTreeMap<String, u32>,
}

/// Result order: cosine desc, tf_ief_sum desc, timestamp asc, event asc.
pub fn rank_order(a: &ScoredEvent, b: &ScoredEvent) -> Ordering {
    b.cosine
        .total_cmp(&a.cosine)
        .then(b.tf_ief_sum.total_cmp(&a.tf_ief_sum))
        .then(a.timestamp.cmp(&b.timestamp))
        .then_with(|| a.event.cmp(&b.event))
}

fn covers(entry: &PostingEntry, v: &VersionMeta) -> bool {
    entry.interval.begin <= v.interval.begin
        && entry.interval.end.is_none_or(|end| v.interval.begin < end)
}

impl InvertedIndex {
    pub fn query(&self, analyzer: &Analyzer, spec: &QuerySpec) -> Result<Vec<ScoredEvent>> {
        let terms = spec.terms(analyzer)?;
        self.query_terms(&terms, spec)
    }

    /// Evaluates already-normalized query terms; `spec.keywords` is ignored.
    pub fn query_terms(&self, terms: &[String], spec: &QuerySpec) -> Result<Vec<ScoredEvent>> {
        let (from, to) = spec.bounds()?;
        if terms.is_empty() {
            return Err(Error::EmptyQuery);
        }
        if self.stats.total_events == 0 {
            return Ok(Vec::new());
        }
        let qv = term_vector(terms, &self.stats)?;
        let mut distinct: Vec<&str> = terms.iter().map(String::as_str).collect();
        distinct.sort_unstable();
        distinct.dedup();
        let iefs = distinct
            .iter()
            .map(|t| self.stats.ief(t))
            .collect::<Result<Vec<f64>>>()?;

        let mut hits: BTreeMap<&EventId, Vec<(usize, &PostingEntry)>> = BTreeMap::new();
        for (k, term) in distinct.iter().enumerate() {
            for e in self.postings(term) {
                if e.interval.intersects(from, to) && spec.admits(&e.event.channel) {
                    hits.entry(&e.event).or_default().push((k, e));
                }
            }
        }

        let mut out = Vec::with_capacity(hits.len());
        for (event, group) in hits {
            if spec.all_terms {
                let mut seen: Vec<usize> = group.iter().map(|(k, _)| *k).collect();
                seen.dedup();
                if seen.len() < distinct.len() {
                    continue;
                }
            }
            let Some(versions) = self.versions.get(event) else {
                continue;
            };
            let Some(v) = versions
                .iter()
                .rev()
                .find(|v| v.interval.intersects(from, to) && group.iter().any(|(_, e)| covers(e, v)))
            else {
                continue;
            };
            let mut repetitions = BTreeMap::new();
            let (mut sum, mut dot) = (0.0, 0.0);
            for (k, e) in &group {
                if covers(e, v) && v.len > 0 {
                    let w = e.r as f64 / v.len as f64 * iefs[*k];
                    sum += w;
                    dot += qv.get(distinct[*k]) * w;
                    repetitions.insert(distinct[*k].to_string(), e.r);
                }
            }
            let mut matched_intervals: Vec<Interval> = group.iter().map(|(_, e)| e.interval).collect();
            matched_intervals.sort();
            matched_intervals.dedup();
            out.push(ScoredEvent {
                event: event.clone(),
                timestamp: v.interval.begin,
                version: v.interval,
                matched_intervals,
                tf_ief_sum: sum,
                cosine: cosine_with_norms(dot, qv.norm(), v.norm),
                repetitions,
            });
        }
        out.sort_by(rank_order);
        let out = out.into_iter().skip(spec.offset);
        Ok(match spec.limit {
            Some(n) => out.take(n).collect(),
            None => out.collect(),
        })
    }

    /// Runs independent queries, one per spec.
    pub fn query_batch(
        &self,
        analyzer: &Analyzer,
        specs: &[QuerySpec],
        exec: Exec,
    ) -> Vec<Result<Vec<ScoredEvent>>> {
        exec.map(specs, |s| self.query(analyzer, s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, EventVersion};

    fn at(ts: i64) -> DateTime<Utc> {
        DateTime::from_timestamp(ts, 0).unwrap()
    }

    fn corpus(events: &[(&str, &[(i64, &str)])]) -> Corpus {
        let mut c = Corpus::default();
        for (id, versions) in events {
            let vs = versions
                .iter()
                .map(|(t, text)| EventVersion {
                    timestamp: at(*t),
                    text: text.to_string(),
                    media: vec![],
                    views: None,
                    forwarded_from: None,
                })
                .collect();
            c.events.insert(id.parse().unwrap(), vs);
        }
        c
    }

    fn ids(r: &[ScoredEvent]) -> Vec<String> {
        r.iter().map(|s| s.event.to_string()).collect()
    }

    #[test]
    fn interval_filter() {
        let c = corpus(&[
            ("c/1", &[(1, "flood north")]),
            ("c/5", &[(5, "flood south")]),
            ("c/9", &[(9, "flood east")]),
            ("c/x", &[(2, "fire")]),
        ]);
        let a = Analyzer::default();
        let idx = InvertedIndex::build(&c, &a, Exec::Sequential).unwrap();
        // Single-version events stay valid until now, so [4, 10] still
        // intersects event 1; bound the query before it to exclude it.
        let r = idx.query(&a, &QuerySpec::new(["flood"]).between(at(4), at(10))).unwrap();
        assert_eq!(r.len(), 3);
        let r = idx.query(&a, &QuerySpec::new(["flood"]).between(at(0), at(0))).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn versions_bound_matches() {
        let c = corpus(&[
            ("c/a", &[(1, "flood north"), (2, "update text")]),
            ("c/b", &[(5, "flood south"), (6, "other")]),
            ("c/c", &[(9, "flood east")]),
        ]);
        let a = Analyzer::default();
        let idx = InvertedIndex::build(&c, &a, Exec::Sequential).unwrap();
        let r = idx.query(&a, &QuerySpec::new(["flood"]).between(at(4), at(10))).unwrap();
        let mut got = ids(&r);
        got.sort();
        assert_eq!(got, ["c/b", "c/c"]);
        assert_eq!(r.iter().find(|s| s.event.local_id == "b").unwrap().version.end, Some(at(6)));
    }

    #[test]
    fn errors() {
        let c = corpus(&[("c/1", &[(1, "flood")])]);
        let a = Analyzer::default();
        let idx = InvertedIndex::build(&c, &a, Exec::Sequential).unwrap();
        assert!(matches!(idx.query(&a, &QuerySpec::new(["و the"])), Err(Error::EmptyQuery)));
        assert!(matches!(
            idx.query(&a, &QuerySpec::new(["flood"]).between(at(5), at(1))),
            Err(Error::InvalidInterval { .. })
        ));
    }

    #[test]
    fn ranking_and_and_mode() {
        let c = corpus(&[
            ("c/1", &[(1, "flood rain rain rain")]),
            ("c/2", &[(2, "flood rain")]),
            ("c/3", &[(3, "flood")]),
            ("c/4", &[(4, "unrelated words")]),
        ]);
        let a = Analyzer::default();
        let idx = InvertedIndex::build(&c, &a, Exec::Sequential).unwrap();
        let r = idx.query(&a, &QuerySpec::new(["rain"])).unwrap();
        assert_eq!(ids(&r), ["c/1", "c/2"]);
        assert!(r[0].tf_ief_sum > r[1].tf_ief_sum);
        assert_eq!(r[0].repetitions["rain"], 3);
        let mut both = QuerySpec::new(["flood rain"]);
        assert_eq!(idx.query(&a, &both).unwrap().len(), 3);
        both.all_terms = true;
        assert_eq!(ids(&idx.query(&a, &both).unwrap()), ["c/2", "c/1"]);
        let page = QuerySpec { limit: Some(1), offset: 1, ..QuerySpec::new(["rain"]) };
        assert_eq!(ids(&idx.query(&a, &page).unwrap()), ["c/2"]);
        let filtered = QuerySpec::new(["rain"]).in_channels(["other"]);
        assert!(idx.query(&a, &filtered).unwrap().is_empty());
    }
}
