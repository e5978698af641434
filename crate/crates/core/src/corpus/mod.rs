//! Versioned events built from repeated channel snapshots.
//!
//! An event is one channel message, identified by (channel, message id).
//! Each crawl of a channel is a snapshot; when a later snapshot shows a
//! message with different text or media, the event gains a new version
//! stamped with that snapshot's crawl time. A version is valid from its
//! timestamp until the next version's timestamp, or open-ended ("now") for
//! the latest one.

mod jsondb;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use jsondb::{
    export_json_db, import_json_db, read_channel_db, write_channel_db, SNAPSHOT_LOG_FILE,
};

use crate::diagnostics::Diagnostic;
use crate::error::{Error, Result};
use crate::media::MediaKind;
use crate::store::ContentHash;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EventId {
    pub channel: String,
    pub local_id: String,
}

impl EventId {
    pub fn new(channel: impl Into<String>, local_id: impl Into<String>) -> Self {
        EventId {
            channel: channel.into(),
            local_id: local_id.into(),
        }
    }
}

/// Rendered as `<channel>/<local id>`.
impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.channel, self.local_id)
    }
}

impl FromStr for EventId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('/') {
            Some((c, l)) if !c.is_empty() && !l.is_empty() => Ok(EventId::new(c, l)),
            _ => Err(Error::InvalidArgument(format!(
                "event id {s:?} must look like <channel>/<message id>"
            ))),
        }
    }
}

/// A half-open validity interval `[begin, end)`; `end == None` is the open
/// "now" marker, later than every stored instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub begin: DateTime<Utc>,
    pub end: Option<DateTime<Utc>>,
}

impl Interval {
    pub fn new(begin: DateTime<Utc>, end: Option<DateTime<Utc>>) -> Self {
        Interval { begin, end }
    }

    pub fn is_open(&self) -> bool {
        self.end.is_none()
    }

    /// Does `[begin, end)` share at least one instant with the closed
    /// interval `[from, to]`?
    pub fn intersects(&self, from: DateTime<Utc>, to: DateTime<Utc>) -> bool {
        self.begin <= to && self.end.is_none_or(|e| e > from)
    }

    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.begin <= t && self.end.is_none_or(|e| t < e)
    }

    /// `self` ends exactly where `next` begins.
    pub fn meets(&self, next: &Interval) -> bool {
        self.end == Some(next.begin)
    }
}

/// A stored media object referenced by a message.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MediaRef {
    pub hash: ContentHash,
    pub ext: String,
    pub bytes: u64,
}

impl MediaRef {
    pub fn kind(&self) -> MediaKind {
        MediaKind::from_extension(&self.ext)
    }

    pub fn stored_name(&self) -> String {
        if self.ext.is_empty() {
            self.hash.to_string()
        } else {
            format!("{}.{}", self.hash, self.ext)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventVersion {
    pub timestamp: DateTime<Utc>,
    pub text: String,
    pub media: Vec<MediaRef>,
    pub views: Option<u64>,
    pub forwarded_from: Option<String>,
}

impl EventVersion {
    fn same_content(&self, text: &str, media: &[MediaRef]) -> bool {
        if self.text != text || self.media.len() != media.len() {
            return false;
        }
        let mut a: Vec<_> = self.media.iter().map(|m| (&m.hash, &m.ext)).collect();
        let mut b: Vec<_> = media.iter().map(|m| (&m.hash, &m.ext)).collect();
        a.sort();
        b.sort();
        a == b
    }
}

/// Validity of `version` given its successor in the chain, if any.
pub fn valid_interval(version: &EventVersion, successor: Option<&EventVersion>) -> Result<Interval> {
    match successor {
        None => Ok(Interval::new(version.timestamp, None)),
        Some(next) if next.timestamp > version.timestamp => {
            Ok(Interval::new(version.timestamp, Some(next.timestamp)))
        }
        Some(next) => Err(Error::ModelViolation {
            current: version.timestamp.to_rfc3339(),
            successor: next.timestamp.to_rfc3339(),
        }),
    }
}

/// Intervals for a whole version chain, in order.
pub fn chain_intervals(versions: &[EventVersion]) -> Result<Vec<Interval>> {
    (0..versions.len())
        .map(|i| valid_interval(&versions[i], versions.get(i + 1)))
        .collect()
}

/// One crawl of one channel.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CyberspaceSnapshot {
    pub channel_slug: String,
    pub crawl_time: DateTime<Utc>,
    pub archive_id: String,
}

/// A message as recorded in one snapshot, with media already resolved to
/// stored objects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotMessage {
    pub id: String,
    pub timestamp: Option<DateTime<Utc>>,
    pub text: String,
    pub media: Vec<MediaRef>,
    pub views: Option<u64>,
    pub forwarded_from: Option<String>,
}

/// Everything one snapshot contributes to the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub snapshot: CyberspaceSnapshot,
    pub channel_name: String,
    pub messages: Vec<SnapshotMessage>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    /// Channel slug → display name.
    pub channels: BTreeMap<String, String>,
    pub events: BTreeMap<EventId, Vec<EventVersion>>,
    pub snapshots: Vec<CyberspaceSnapshot>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildReport {
    /// Messages dropped because their timestamp was invalid.
    pub excluded_invalid: u64,
    pub diagnostics: Vec<Diagnostic>,
}

impl Corpus {
    /// |E|, the number of distinct events.
    pub fn event_count(&self) -> usize {
        self.events.len()
    }

    pub fn version_count(&self) -> usize {
        self.events.values().map(Vec::len).sum()
    }

    pub fn latest(&self, id: &EventId) -> Option<&EventVersion> {
        self.events.get(id).and_then(|v| v.last())
    }

    /// Every version with its validity interval.
    pub fn versions_with_intervals(
        &self,
    ) -> Result<Vec<(&EventId, &EventVersion, Interval)>> {
        let mut out = Vec::with_capacity(self.version_count());
        for (id, versions) in &self.events {
            for (v, iv) in versions.iter().zip(chain_intervals(versions)?) {
                out.push((id, v, iv));
            }
        }
        Ok(out)
    }

    /// Earliest version timestamp.
    pub fn min_time(&self) -> Option<DateTime<Utc>> {
        self.events.values().filter_map(|v| v.first()).map(|v| v.timestamp).min()
    }

    /// Latest version timestamp or crawl time, used to pin "now" offline.
    pub fn max_time(&self) -> Option<DateTime<Utc>> {
        let versions = self.events.values().filter_map(|v| v.last()).map(|v| v.timestamp);
        let crawls = self.snapshots.iter().map(|s| s.crawl_time);
        versions.chain(crawls).max()
    }

    pub fn archives_of(&self, channel: &str) -> Vec<String> {
        self.snapshots
            .iter()
            .filter(|s| s.channel_slug == channel)
            .map(|s| s.archive_id.clone())
            .collect()
    }
}

/// Folds snapshots, oldest crawl first, into version chains.
///
/// A message seen for the first time becomes a one-version event stamped
/// with its own date. A later snapshot with changed text or media appends a
/// version stamped with that snapshot's crawl time; unchanged content adds
/// nothing. Two differing copies of one message within the same crawl keep
/// the later-parsed copy and raise a `version_conflict` diagnostic.
pub fn build_corpus(records: &[SnapshotRecord]) -> (Corpus, BuildReport) {
    let mut order: Vec<&SnapshotRecord> = records.iter().collect();
    order.sort_by(|a, b| {
        (a.snapshot.crawl_time, &a.snapshot.channel_slug)
            .cmp(&(b.snapshot.crawl_time, &b.snapshot.channel_slug))
    });

    let mut corpus = Corpus::default();
    let mut report = BuildReport::default();
    let mut last_crawl: BTreeMap<EventId, DateTime<Utc>> = BTreeMap::new();

    for rec in order {
        let snap = &rec.snapshot;
        corpus
            .channels
            .insert(snap.channel_slug.clone(), rec.channel_name.clone());
        if !corpus.snapshots.contains(snap) {
            corpus.snapshots.push(snap.clone());
        }
        for msg in &rec.messages {
            let Some(ts) = msg.timestamp.filter(|t| *t <= snap.crawl_time) else {
                report.excluded_invalid += 1;
                continue;
            };
            let id = EventId::new(snap.channel_slug.clone(), msg.id.clone());
            let version = EventVersion {
                timestamp: ts,
                text: msg.text.clone(),
                media: msg.media.clone(),
                views: msg.views,
                forwarded_from: msg.forwarded_from.clone(),
            };
            let chain = corpus.events.entry(id.clone()).or_default();
            let Some(latest) = chain.last_mut() else {
                chain.push(version);
                last_crawl.insert(id, snap.crawl_time);
                continue;
            };
            if latest.same_content(&msg.text, &msg.media) {
                continue;
            }
            let seen = last_crawl[&id];
            if seen < snap.crawl_time {
                chain.push(EventVersion {
                    timestamp: snap.crawl_time,
                    ..version
                });
                last_crawl.insert(id, snap.crawl_time);
            } else {
                report.diagnostics.push(
                    Diagnostic::new(
                        "version_conflict",
                        format!(
                            "message {id} appears twice in the crawl of {} with different content; keeping the later copy",
                            snap.crawl_time.to_rfc3339()
                        ),
                    )
                    .at(snap.archive_id.clone()),
                );
                let ts = latest.timestamp;
                *latest = EventVersion {
                    timestamp: ts,
                    ..version
                };
            }
        }
    }
    corpus.snapshots.sort();
    (corpus, report)
}
