//! On-disk index format: one line of JSON followed by a checksum line
//! `sha256:<hex of the JSON line>`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CoalesceConfig, InvertedIndex, PostingEntry, VersionMeta};
use crate::corpus::{EventId, Interval};
use crate::error::{Error, Result};
use crate::scoring::CorpusTermStats;
use crate::store::write_atomic;
use crate::versioned::parse_versioned;

pub const INDEX_SCHEMA_VERSION: u64 = 1;
const CHECKSUM_PREFIX: &str = "sha256:";

type EntryRow = (String, String, DateTime<Utc>, Option<DateTime<Utc>>, u32, Vec<u32>);
type VersionRow = (DateTime<Utc>, Option<DateTime<Utc>>, u32, f64);

#[derive(Serialize, Deserialize)]
struct StatsDoc {
    total_events: u64,
    ef: BTreeMap<String, u64>,
    total_words: BTreeMap<String, u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IndexDoc {
    schema: u64,
    built_at: DateTime<Utc>,
    coalesce: Option<CoalesceConfig>,
    terms: BTreeMap<String, Vec<EntryRow>>,
    versions: BTreeMap<String, Vec<VersionRow>>,
    stats: StatsDoc,
}

fn malformed(pointer: String, message: impl Into<String>) -> Error {
    Error::Malformed {
        pointer,
        message: message.into(),
    }
}

pub fn write_index(index: &InvertedIndex) -> Result<Vec<u8>> {
    let doc = IndexDoc {
        schema: INDEX_SCHEMA_VERSION,
        built_at: index.built_at,
        coalesce: index.coalesce,
        terms: index
            .dictionary
            .iter()
            .map(|(t, entries)| {
                let rows = entries
                    .iter()
                    .map(|e| {
                        (
                            e.event.channel.clone(),
                            e.event.local_id.clone(),
                            e.interval.begin,
                            e.interval.end,
                            e.r,
                            e.positions.clone(),
                        )
                    })
                    .collect();
                (t.clone(), rows)
            })
            .collect(),
        versions: index
            .versions
            .iter()
            .map(|(id, vs)| {
                let rows = vs
                    .iter()
                    .map(|v| (v.interval.begin, v.interval.end, v.len, v.norm))
                    .collect();
                (id.to_string(), rows)
            })
            .collect(),
        stats: StatsDoc {
            total_events: index.stats.total_events,
            ef: index.stats.ef.clone(),
            total_words: index
                .stats
                .total_words
                .iter()
                .map(|(id, n)| (id.to_string(), *n))
                .collect(),
        },
    };
    let mut out = serde_json::to_vec(&doc)?;
    let digest = hex::encode(Sha256::digest(&out));
    out.push(b'\n');
    out.extend_from_slice(CHECKSUM_PREFIX.as_bytes());
    out.extend_from_slice(digest.as_bytes());
    out.push(b'\n');
    Ok(out)
}

fn parse_id(s: &str, pointer: &str) -> Result<EventId> {
    s.parse().map_err(|_| malformed(pointer.to_string(), format!("bad event id {s:?}")))
}

fn interval(begin: DateTime<Utc>, end: Option<DateTime<Utc>>, pointer: impl Fn() -> String) -> Result<Interval> {
    if end.is_some_and(|e| e <= begin) {
        return Err(malformed(pointer(), "interval end is not after its begin"));
    }
    Ok(Interval::new(begin, end))
}

pub fn read_index(bytes: &[u8]) -> Result<InvertedIndex> {
    let body_end = bytes
        .strip_suffix(b"\n")
        .and_then(|b| b.iter().rposition(|&c| c == b'\n'))
        .ok_or(Error::Checksum)?;
    let (body, trailer) = (&bytes[..body_end], &bytes[body_end + 1..bytes.len() - 1]);
    let expected = trailer.strip_prefix(CHECKSUM_PREFIX.as_bytes()).ok_or(Error::Checksum)?;
    if hex::encode(Sha256::digest(body)).as_bytes() != expected {
        return Err(Error::Checksum);
    }
    let doc: IndexDoc = parse_versioned(body, INDEX_SCHEMA_VERSION)?;

    let mut dictionary = BTreeMap::new();
    for (term, rows) in doc.terms {
        let mut entries = Vec::with_capacity(rows.len());
        for (i, (channel, local_id, begin, end, r, positions)) in rows.into_iter().enumerate() {
            let ptr = || format!("/terms/{term}/{i}");
            if r == 0 || positions.len() != r as usize {
                return Err(malformed(ptr(), "repetition must equal the number of positions"));
            }
            entries.push(PostingEntry {
                event: EventId::new(channel, local_id),
                interval: interval(begin, end, ptr)?,
                r,
                positions,
            });
        }
        dictionary.insert(term, entries);
    }
    let mut versions = BTreeMap::new();
    for (id, rows) in doc.versions {
        let event = parse_id(&id, "/versions")?;
        let metas = rows
            .into_iter()
            .enumerate()
            .map(|(i, (begin, end, len, norm))| {
                Ok(VersionMeta {
                    interval: interval(begin, end, || format!("/versions/{id}/{i}"))?,
                    len,
                    norm,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        versions.insert(event, metas);
    }
    let total_words = doc
        .stats
        .total_words
        .iter()
        .map(|(id, n)| Ok((parse_id(id, "/stats/total_words")?, *n)))
        .collect::<Result<_>>()?;
    Ok(InvertedIndex {
        dictionary,
        versions,
        stats: CorpusTermStats {
            total_events: doc.stats.total_events,
            ef: doc.stats.ef,
            total_words,
        },
        built_at: doc.built_at,
        coalesce: doc.coalesce,
    })
}

pub fn persist_index(index: &InvertedIndex, path: &Path) -> Result<()> {
    write_atomic(path, &write_index(index)?)
}

pub fn load_index(path: &Path) -> Result<InvertedIndex> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_index(&bytes)
}
