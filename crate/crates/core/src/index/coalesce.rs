//! Temporal coalescing of posting entries.
//!
//! Within one (term, event) pair, a maximal run of entries whose intervals
//! meet end-to-start and whose scores stay within a relative band `τ` of
//! the run's first entry (the anchor) is replaced by one entry spanning the
//! whole run. The merged entry keeps the anchor's `r` and positions.

use serde::{Deserialize, Serialize};

use super::{InvertedIndex, PostingEntry};
use crate::error::{Error, Result};
use crate::exec::Exec;

pub const DEFAULT_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoalesceConfig {
    pub tolerance: f64,
    pub enabled: bool,
}

impl Default for CoalesceConfig {
    fn default() -> Self {
        CoalesceConfig {
            tolerance: DEFAULT_TOLERANCE,
            enabled: true,
        }
    }
}

impl CoalesceConfig {
    pub fn new(tolerance: f64) -> Result<Self> {
        if !(tolerance.is_finite() && tolerance >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "coalescing tolerance must be a non-negative number, got {tolerance}"
            )));
        }
        Ok(CoalesceConfig {
            tolerance,
            enabled: true,
        })
    }
}

/// Coalesces `entries`, which must be sorted by (event, begin).
pub fn coalesce_entries<F>(entries: &[PostingEntry], tolerance: f64, score: F) -> Vec<PostingEntry>
where
    F: Fn(&PostingEntry) -> f64,
{
    let mut out = Vec::with_capacity(entries.len());
    let mut i = 0;
    while i < entries.len() {
        let anchor = &entries[i];
        let s0 = score(anchor);
        let mut j = i;
        while let Some(next) = entries.get(j + 1) {
            let joined = next.event == anchor.event && entries[j].interval.meets(&next.interval);
            if !joined || (score(next) - s0).abs() > tolerance * s0 {
                break;
            }
            j += 1;
        }
        let mut merged = anchor.clone();
        merged.interval.end = entries[j].interval.end;
        out.push(merged);
        i = j + 1;
    }
    out
}

impl InvertedIndex {
    /// Per-version score of an entry: `r / len(version) * ief(term)`.
    pub fn entry_score(&self, term: &str, entry: &PostingEntry) -> Result<f64> {
        let len = self
            .versions
            .get(&entry.event)
            .and_then(|vs| vs.iter().find(|v| v.interval.begin == entry.interval.begin))
            .map_or(0, |v| v.len);
        if len == 0 {
            return Ok(0.0);
        }
        Ok(entry.r as f64 / len as f64 * self.stats.ief(term)?)
    }

    /// A new index with every posting list coalesced under `cfg`.
    pub fn coalesced(&self, cfg: CoalesceConfig, exec: Exec) -> Result<InvertedIndex> {
        let mut out = self.clone();
        out.coalesce = Some(cfg);
        if !cfg.enabled || self.stats.total_events == 0 {
            return Ok(out);
        }
        let terms: Vec<(&String, &Vec<PostingEntry>)> = self.dictionary.iter().collect();
        let lists = exec.map(&terms, |(term, entries)| {
            let score = |e: &PostingEntry| self.entry_score(term, e).unwrap_or(0.0);
            coalesce_entries(entries, cfg.tolerance, score)
        });
        for ((term, _), list) in terms.into_iter().zip(lists) {
            out.dictionary.insert(term.clone(), list);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{EventId, Interval};
    use chrono::DateTime;

    fn entry(ev: &str, b: i64, e: Option<i64>, r: u32) -> PostingEntry {
        let at = |s| DateTime::from_timestamp(s, 0).unwrap();
        PostingEntry {
            event: EventId::new("c", ev),
            interval: Interval::new(at(b), e.map(at)),
            r,
            positions: (0..r).collect(),
        }
    }

    fn by_r(e: &PostingEntry) -> f64 {
        e.r as f64
    }

    #[test]
    fn equal_adjacent_entries_merge() {
        let out = coalesce_entries(&[entry("x", 1, Some(2), 5), entry("x", 2, Some(3), 5)], 0.0, by_r);
        assert_eq!(out, [entry("x", 1, Some(3), 5)]);
    }

    #[test]
    fn gaps_never_merge() {
        let input = [entry("x", 1, Some(2), 5), entry("x", 4, Some(5), 5)];
        assert_eq!(coalesce_entries(&input, 1.0, by_r), input);
    }

    #[test]
    fn band_is_anchored_at_run_head() {
        let scores = [10.0, 10.5, 12.0];
        let input = [entry("x", 1, Some(2), 0), entry("x", 2, Some(3), 1), entry("x", 3, None, 2)];
        let out = coalesce_entries(&input, 0.1, |e| scores[e.r as usize]);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].interval, entry("x", 1, Some(3), 0).interval);
        assert_eq!(out[1], input[2]);
    }

    #[test]
    fn events_are_never_joined() {
        let input = [entry("x", 1, Some(2), 5), entry("y", 2, Some(3), 5)];
        assert_eq!(coalesce_entries(&input, 1.0, by_r), input);
    }

    #[test]
    fn tolerance_validation() {
        assert!(CoalesceConfig::new(-0.1).is_err());
        assert!(CoalesceConfig::new(f64::NAN).is_err());
        assert_eq!(CoalesceConfig::new(0.0).unwrap().tolerance, 0.0);
    }
}
