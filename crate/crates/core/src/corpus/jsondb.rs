//! The per-channel JSON message database.
//!
//! One `<channel_slug>.json` per channel, plus a `snapshots.index.json`
//! sidecar listing the crawls so that an exported corpus imports back
//! unchanged.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::{chain_intervals, Corpus, CyberspaceSnapshot, EventId, EventVersion, MediaRef};
use crate::error::{Error, Result};
use crate::versioned::parse_versioned;
use crate::store::{write_atomic, ContentHash};

pub const SCHEMA_VERSION: u64 = 1;
pub const SNAPSHOT_LOG_FILE: &str = "snapshots.index.json";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelDoc {
    schema: u64,
    channel: String,
    channel_name: String,
    messages: Vec<MessageDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MessageDoc {
    id: String,
    date_utc: String,
    text: String,
    views: Option<u64>,
    forwarded_from: Option<String>,
    media: Vec<MediaDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MediaDoc {
    kind: String,
    hash: ContentHash,
    ext: String,
    bytes: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotLog {
    schema: u64,
    snapshots: Vec<CyberspaceSnapshot>,
}

const DB_KINDS: [&str; 5] = ["video", "image", "audio", "document", "other"];

fn format_date(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Serializes one channel. Versions are listed by (date, id); an edited
/// message appears once per version.
pub fn write_channel_db(corpus: &Corpus, channel: &str) -> Result<Vec<u8>> {
    let mut messages = Vec::new();
    for (id, versions) in corpus.events.range(EventId::new(channel, "")..) {
        if id.channel != channel {
            break;
        }
        for v in versions {
            messages.push(MessageDoc {
                id: id.local_id.clone(),
                date_utc: format_date(v.timestamp),
                text: v.text.clone(),
                views: v.views,
                forwarded_from: v.forwarded_from.clone(),
                media: v
                    .media
                    .iter()
                    .map(|m| MediaDoc {
                        kind: m.kind().db_class().to_string(),
                        hash: m.hash.clone(),
                        ext: m.ext.clone(),
                        bytes: m.bytes,
                    })
                    .collect(),
            });
        }
    }
    messages.sort_by(|a, b| (&a.date_utc, &a.id).cmp(&(&b.date_utc, &b.id)));
    let doc = ChannelDoc {
        schema: SCHEMA_VERSION,
        channel: channel.to_string(),
        channel_name: corpus
            .channels
            .get(channel)
            .cloned()
            .unwrap_or_else(|| channel.to_string()),
        messages,
    };
    let mut out = serde_json::to_vec_pretty(&doc)?;
    out.push(b'\n');
    Ok(out)
}

/// Writes every channel plus the snapshot log into `out_dir`.
pub fn export_json_db(corpus: &Corpus, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::StoreWrite {
        path: out_dir.to_path_buf(),
        source: e,
    })?;
    let mut channels: Vec<&String> = corpus.channels.keys().collect();
    for id in corpus.events.keys() {
        if !corpus.channels.contains_key(&id.channel) && channels.last() != Some(&&id.channel) {
            channels.push(&id.channel);
        }
    }
    channels.sort();
    channels.dedup();

    let mut written = Vec::new();
    for ch in channels {
        let path = out_dir.join(format!("{ch}.json"));
        write_atomic(&path, &write_channel_db(corpus, ch)?)?;
        written.push(path);
    }
    let log = SnapshotLog {
        schema: SCHEMA_VERSION,
        snapshots: corpus.snapshots.clone(),
    };
    let path = out_dir.join(SNAPSHOT_LOG_FILE);
    let mut bytes = serde_json::to_vec_pretty(&log)?;
    bytes.push(b'\n');
    write_atomic(&path, &bytes)?;
    written.push(path);
    Ok(written)
}

/// Parses one channel document into `corpus`.
pub fn read_channel_db(bytes: &[u8], corpus: &mut Corpus) -> Result<()> {
    let doc: ChannelDoc = parse_versioned(bytes, SCHEMA_VERSION)?;
    crate::ingest::validate_slug(&doc.channel).map_err(|e| Error::Malformed {
        pointer: "/channel".into(),
        message: e.to_string(),
    })?;
    corpus.channels.insert(doc.channel.clone(), doc.channel_name);
    let mut touched = Vec::new();
    for (i, m) in doc.messages.into_iter().enumerate() {
        let timestamp = DateTime::parse_from_rfc3339(&m.date_utc)
            .map_err(|e| Error::Malformed {
                pointer: format!("/messages/{i}/date_utc"),
                message: e.to_string(),
            })?
            .with_timezone(&Utc);
        let mut media = Vec::with_capacity(m.media.len());
        for (j, md) in m.media.into_iter().enumerate() {
            if !DB_KINDS.contains(&md.kind.as_str()) {
                return Err(Error::Malformed {
                    pointer: format!("/messages/{i}/media/{j}/kind"),
                    message: format!("unknown media kind {:?}", md.kind),
                });
            }
            // The kind is re-derived from the extension on use.
            media.push(MediaRef {
                hash: md.hash,
                ext: md.ext,
                bytes: md.bytes,
            });
        }
        let id = EventId::new(doc.channel.clone(), m.id);
        corpus.events.entry(id.clone()).or_default().push(EventVersion {
            timestamp,
            text: m.text,
            media,
            views: m.views,
            forwarded_from: m.forwarded_from,
        });
        touched.push(id);
    }
    touched.sort();
    touched.dedup();
    for id in touched {
        let chain = corpus.events.get_mut(&id).expect("just inserted");
        chain.sort_by_key(|v| v.timestamp);
        chain_intervals(chain)?;
    }
    Ok(())
}

/// Imports a single channel file or every channel file in a directory.
pub fn import_json_db(path: &Path) -> Result<Corpus> {
    let mut corpus = Corpus::default();
    if path.is_dir() {
        let mut files = Vec::new();
        for entry in fs::read_dir(path).map_err(|e| Error::io(path, e))? {
            let p = entry.map_err(|e| Error::io(path, e))?.path();
            if p.extension().is_some_and(|e| e == "json") && p.is_file() {
                files.push(p);
            }
        }
        files.sort();
        for p in files {
            let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
            if p.file_name().is_some_and(|n| n == SNAPSHOT_LOG_FILE) {
                let log: SnapshotLog = parse_versioned(&bytes, SCHEMA_VERSION)?;
                corpus.snapshots = log.snapshots;
            } else {
                read_channel_db(&bytes, &mut corpus)?;
            }
        }
        corpus.snapshots.sort();
    } else {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        read_channel_db(&bytes, &mut corpus)?;
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::hash_content;
    use serde_json::Value;

    fn fixture() -> Corpus {
        let mut c = Corpus::default();
        c.channels.insert("kf".into(), "Khabare Fouri".into());
        let t = |s: &str| s.parse::<DateTime<Utc>>().unwrap();
        c.events.insert(
            EventId::new("kf", "1"),
            vec![EventVersion {
                timestamp: t("2020-03-23T04:45:00Z"),
                text: "واکسن کرونا".into(),
                media: vec![MediaRef {
                    hash: hash_content(b"jpeg bytes"),
                    ext: "jpg".into(),
                    bytes: 10,
                }],
                views: Some(1200),
                forwarded_from: None,
            }],
        );
        c.events.insert(
            EventId::new("kf", "2"),
            vec![
                EventVersion {
                    timestamp: t("2020-03-24T10:00:00Z"),
                    text: "draft".into(),
                    media: vec![],
                    views: None,
                    forwarded_from: Some("Other".into()),
                },
                EventVersion {
                    timestamp: t("2020-04-01T00:00:00Z"),
                    text: "final".into(),
                    media: vec![],
                    views: None,
                    forwarded_from: Some("Other".into()),
                },
            ],
        );
        c.snapshots.push(CyberspaceSnapshot {
            channel_slug: "kf".into(),
            crawl_time: t("2020-04-01T00:00:00Z"),
            archive_id: "kf-1".into(),
        });
        c
    }

    #[test]
    fn round_trip_through_directory() {
        let dir = tempfile::tempdir().unwrap();
        let c = fixture();
        let files = export_json_db(&c, dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        assert_eq!(import_json_db(dir.path()).unwrap(), c);
    }

    #[test]
    fn document_shape_is_exact() {
        let bytes = write_channel_db(&fixture(), "kf").unwrap();
        let v: Value = serde_json::from_slice(&bytes).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let keys: Vec<_> = ["\"schema\"", "\"channel\"", "\"channel_name\"", "\"messages\""]
            .iter()
            .map(|k| text.find(k).unwrap())
            .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(v["messages"].as_array().unwrap().len(), 3);
        let m0 = &v["messages"][0];
        assert_eq!(m0["date_utc"], "2020-03-23T04:45:00Z");
        assert_eq!(m0["media"][0]["kind"], "image");
        assert_eq!(m0["media"][0]["bytes"], 10);
        assert_eq!(m0["media"][0]["hash"].as_str().unwrap().len(), 32);
        assert_eq!(v["messages"][1]["views"], Value::Null);
    }

    #[test]
    fn empty_channel_has_empty_message_list() {
        let mut c = Corpus::default();
        c.channels.insert("kf".into(), "KF".into());
        let v: Value = serde_json::from_slice(&write_channel_db(&c, "kf").unwrap()).unwrap();
        assert_eq!(v["channel"], "kf");
        assert_eq!(v["messages"], serde_json::json!([]));
    }

    #[test]
    fn minimal_hand_written_file() {
        let doc = br#"{"schema":1,"channel":"kf","channel_name":"KF","messages":[
            {"id":"7","date_utc":"2020-03-23T04:45:00Z","text":"hi","views":null,"forwarded_from":null,"media":[]}]}"#;
        let mut c = Corpus::default();
        read_channel_db(doc, &mut c).unwrap();
        assert_eq!(c.event_count(), 1);
    }

    #[test]
    fn wrong_version_is_named() {
        let doc = br#"{"schema":2,"channel":"kf","channel_name":"KF","messages":[]}"#;
        let err = read_channel_db(doc, &mut Corpus::default()).unwrap_err();
        assert!(matches!(err, Error::SchemaVersion { ref found, .. } if found == "2"));
        assert!(err.to_string().contains('2'));
    }

    #[test]
    fn malformed_field_reports_pointer() {
        let doc = br#"{"schema":1,"channel":"kf","channel_name":"KF","messages":[
            {"id":"7","date_utc":"2020-03-23T04:45:00Z","text":"hi","views":"many","forwarded_from":null,"media":[]}]}"#;
        match read_channel_db(doc, &mut Corpus::default()).unwrap_err() {
            Error::Malformed { pointer, .. } => assert_eq!(pointer, "/messages/0/views"),
            e => panic!("unexpected {e}"),
        }
    }
}
