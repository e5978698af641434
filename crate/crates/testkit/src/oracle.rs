//! Brute-force reference implementations.
//!
//! These recompute everything from raw token lists or version texts, with
//! no posting lists, caches or shared helpers from the engine beyond text
//! normalization.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use tscdn_core::corpus::{Corpus, EventId};
use tscdn_core::scoring::Analyzer;

/// Scores computed straight from token lists.
pub struct BruteScorer<'a> {
    pub docs: &'a [Vec<String>],
}

impl BruteScorer<'_> {
    pub fn tf(&self, term: &str, doc: &[String]) -> f64 {
        if doc.is_empty() {
            return 0.0;
        }
        let mut c = 0usize;
        for t in doc {
            if t == term {
                c += 1;
            }
        }
        c as f64 / doc.len() as f64
    }

    pub fn ef(&self, term: &str) -> usize {
        self.docs.iter().filter(|d| d.iter().any(|t| t == term)).count()
    }

    pub fn ief(&self, term: &str) -> f64 {
        let n = self.docs.len() as f64;
        match self.ef(term) {
            0 => (2.0 * n).log2(),
            ef => (n / ef as f64).log2(),
        }
    }

    pub fn tf_ief(&self, term: &str, doc: &[String]) -> f64 {
        self.tf(term, doc) * self.ief(term)
    }

    /// Dense map term → weight over the distinct terms of `doc`.
    pub fn vector(&self, doc: &[String]) -> BTreeMap<String, f64> {
        let distinct: BTreeSet<&String> = doc.iter().collect();
        distinct
            .into_iter()
            .map(|t| (t.clone(), self.tf_ief(t, doc)))
            .filter(|(_, w)| *w > 0.0)
            .collect()
    }
}

pub fn dense_cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let na = a.values().map(|w| w * w).sum::<f64>().sqrt();
    let nb = b.values().map(|w| w * w).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let mut dot = 0.0;
    for (t, w) in a {
        if let Some(v) = b.get(t) {
            dot += w * v;
        }
    }
    (dot / (na * nb)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanHit {
    pub event: EventId,
    pub timestamp: DateTime<Utc>,
    pub tf_ief_sum: f64,
    pub cosine: f64,
}

/// Evaluates a query by reading every version of every event.
///
/// An event matches when a version valid somewhere in `[from, to]` contains
/// a query term (all terms, across such versions, with `all_terms`). It is
/// scored at the latest such version.
pub fn linear_scan(
    corpus: &Corpus,
    analyzer: &Analyzer,
    query_terms: &[String],
    from: DateTime<Utc>,
    to: DateTime<Utc>,
    channels: Option<&[String]>,
    all_terms: bool,
) -> Vec<ScanHit> {
    let latest: Vec<Vec<String>> = corpus
        .events
        .values()
        .map(|vs| analyzer.terms(&vs.last().unwrap().text))
        .collect();
    let scorer = BruteScorer { docs: &latest };
    let distinct: BTreeSet<&String> = query_terms.iter().collect();

    // Query weights in sorted term order.
    let mut qw: BTreeMap<&String, f64> = BTreeMap::new();
    for t in &distinct {
        let c = query_terms.iter().filter(|q| q == t).count();
        qw.insert(t, c as f64 / query_terms.len() as f64 * scorer.ief(t));
    }
    let qnorm = qw.values().filter(|w| **w > 0.0).map(|w| w * w).sum::<f64>().sqrt();

    let mut hits = Vec::new();
    for (id, versions) in &corpus.events {
        if channels.is_some_and(|cs| !cs.contains(&id.channel)) {
            continue;
        }
        let mut found: BTreeSet<&String> = BTreeSet::new();
        let mut best: Option<usize> = None;
        for (i, v) in versions.iter().enumerate() {
            let begin = v.timestamp;
            let end = versions.get(i + 1).map(|n| n.timestamp);
            let live = begin <= to && end.is_none_or(|e| e > from);
            if !live {
                continue;
            }
            let terms = analyzer.terms(&v.text);
            let mut any = false;
            for q in &distinct {
                if terms.contains(q) {
                    found.insert(q);
                    any = true;
                }
            }
            if any {
                best = Some(i);
            }
        }
        let qualifies = if all_terms { found.len() == distinct.len() } else { !found.is_empty() };
        let (true, Some(i)) = (qualifies, best) else {
            continue;
        };
        let doc = analyzer.terms(&versions[i].text);
        let mut vsq: BTreeMap<&str, usize> = BTreeMap::new();
        for t in &doc {
            *vsq.entry(t).or_default() += 1;
        }
        let vnorm = vsq
            .iter()
            .map(|(t, c)| *c as f64 / doc.len() as f64 * scorer.ief(t))
            .filter(|w| *w > 0.0)
            .map(|w| w * w)
            .sum::<f64>()
            .sqrt();
        let (mut sum, mut dot) = (0.0, 0.0);
        for q in &distinct {
            if let Some(c) = vsq.get(q.as_str()) {
                let w = *c as f64 / doc.len() as f64 * scorer.ief(q);
                sum += w;
                dot += qw[q] * w;
            }
        }
        let cosine = if qnorm == 0.0 || vnorm == 0.0 { 0.0 } else { (dot / (qnorm * vnorm)).clamp(0.0, 1.0) };
        hits.push(ScanHit {
            event: id.clone(),
            timestamp: versions[i].timestamp,
            tf_ief_sum: sum,
            cosine,
        });
    }
    hits.sort_by(|a, b| {
        b.cosine
            .total_cmp(&a.cosine)
            .then(b.tf_ief_sum.total_cmp(&a.tf_ief_sum))
            .then(a.timestamp.cmp(&b.timestamp))
            .then(a.event.cmp(&b.event))
    });
    hits
}

/// Run boundaries by definition: entry `j` belongs to the run headed at
/// `h` iff every step from `h` to `j` is joined and every score in between
/// lies in the band of `h`. Returns the head index of each run.
pub fn run_heads(joined: &[bool], scores: &[f64], tolerance: f64) -> Vec<usize> {
    let n = scores.len();
    let can_extend = |h: usize, j: usize| {
        (h + 1..=j).all(|k| joined[k - 1] && (scores[k] - scores[h]).abs() <= tolerance * scores[h])
    };
    let mut heads = Vec::new();
    let mut h = 0;
    while h < n {
        heads.push(h);
        let mut j = h + 1;
        while j < n && can_extend(h, j) {
            j += 1;
        }
        h = j;
    }
    heads
}
