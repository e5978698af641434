//! End-to-end operations over a CDN directory.
//!
//! Layout under the CDN root:
//!
//! ```text
//! cdn-index.json            object catalog and path dictionaries
//! objects/<hex>.<ext>       stored media
//! rewritten/<archive>/...   export pages with references pointing at the CDN
//! snapshots/<archive>.json  messages extracted from each ingested archive
//! index.json                persisted inverted index
//! config/                   optional stopwords.txt, stemmer.rules, categories.json
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::Serialize;

use crate::corpus::{build_corpus, BuildReport, Corpus, CyberspaceSnapshot, MediaRef, SnapshotMessage, SnapshotRecord};
use crate::diagnostics::Diagnostic;
use crate::error::{Error, Result};
use crate::ingest::{parse_all, IngestConfig, SourceMeta};
use crate::ingest::extract_links_in;
use crate::store::{rewrite_references, write_atomic, ContentStore, MergeReport, PathDictionary};

pub const REWRITTEN_DIR: &str = "rewritten";
pub const SNAPSHOTS_DIR: &str = "snapshots";
pub const CONFIG_DIR: &str = "config";
pub const INDEX_FILE: &str = "index.json";

pub fn snapshots_dir(cdn: &Path) -> PathBuf {
    cdn.join(SNAPSHOTS_DIR)
}

pub fn config_dir(cdn: &Path) -> PathBuf {
    cdn.join(CONFIG_DIR)
}

pub fn index_path(cdn: &Path) -> PathBuf {
    cdn.join(INDEX_FILE)
}

/// `<slug>-<crawl time as YYYYMMDDTHHMMSSZ>`.
pub fn default_archive_id(slug: &str, crawl_time: DateTime<Utc>) -> String {
    format!("{slug}-{}", crawl_time.format("%Y%m%dT%H%M%SZ"))
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestReport {
    pub archive_id: String,
    pub pages: usize,
    pub messages: usize,
    pub media_links: usize,
    pub files_stored: usize,
    pub objects_written: usize,
    pub references_rewritten: usize,
    #[serde(skip)]
    pub diagnostics: Vec<Diagnostic>,
}

/// Ingests one export into the store at `store.root()`: every local media
/// file referenced by any page is stored under its digest, pages are
/// rewritten into `rewritten/<archive_id>/`, and the extracted messages are
/// saved as the archive's snapshot record.
pub fn ingest_archive(
    store: &mut ContentStore,
    source: &SourceMeta,
    archive_id: &str,
    cfg: &IngestConfig,
    cdn_prefix: &str,
) -> Result<IngestReport> {
    crate::ingest::validate_slug(archive_id)
        .map_err(|_| Error::InvalidArgument(format!("archive id {archive_id:?} must be ASCII letters, digits, '-' or '_'")))?;
    let parsed = parse_all(source, cfg)?;
    let mut report = IngestReport {
        archive_id: archive_id.to_string(),
        pages: parsed.pages.len(),
        messages: parsed.messages.len(),
        diagnostics: parsed.diagnostics,
        ..Default::default()
    };

    let per_page = cfg.exec.map(&parsed.pages, |p| extract_links_in(&p.bytes, p.base_dir()));
    let mut targets = BTreeSet::new();
    for links in &per_page {
        for l in links.iter().filter(|l| l.is_media()) {
            report.media_links += 1;
            targets.insert(l.resolved_path.clone());
        }
    }
    let files: Vec<(String, PathBuf)> = targets
        .into_iter()
        .map(|p| {
            let abs = source.export_root.join(&p);
            (p, abs)
        })
        .collect();
    let before = store.object_count();
    report
        .diagnostics
        .extend(store.ingest_files(archive_id, &files, source.crawl_time, cfg.exec)?);
    report.files_stored = files.len();
    report.objects_written = store.object_count() - before;

    let empty = PathDictionary::new();
    let dict = store.dictionary(archive_id).unwrap_or(&empty);
    let out_root = store.root().join(REWRITTEN_DIR).join(archive_id);
    let rewrites = cfg.exec.map(&parsed.pages, |p| {
        let rw = rewrite_references(&p.bytes, p.base_dir(), dict, cdn_prefix);
        let dest = out_root.join(&p.rel_path);
        write_atomic(&dest, &rw.html).map(|_| rw)
    });
    for rw in rewrites {
        let rw = rw?;
        report.references_rewritten += rw.rewritten;
        report.diagnostics.extend(rw.diagnostics);
    }

    let messages = parsed
        .messages
        .iter()
        .map(|m| SnapshotMessage {
            id: m.message_id.clone(),
            timestamp: m.timestamp,
            text: m.text.clone(),
            media: m
                .media_links
                .iter()
                .filter(|l| l.is_media())
                .filter_map(|l| store.lookup(archive_id, &l.resolved_path))
                .map(|o| MediaRef {
                    hash: o.hash.clone(),
                    ext: o.ext.clone(),
                    bytes: o.size,
                })
                .collect(),
            views: m.views,
            forwarded_from: m.forwarded_from.clone(),
        })
        .collect();
    let record = SnapshotRecord {
        snapshot: CyberspaceSnapshot {
            channel_slug: source.channel_slug.clone(),
            crawl_time: source.crawl_time,
            archive_id: archive_id.to_string(),
        },
        channel_name: source.channel_name.clone(),
        messages,
    };
    write_snapshot(store.root(), &record)?;
    store.save()?;
    Ok(report)
}

pub fn write_snapshot(cdn: &Path, record: &SnapshotRecord) -> Result<()> {
    let path = snapshots_dir(cdn).join(format!("{}.json", record.snapshot.archive_id));
    let mut bytes = serde_json::to_vec_pretty(record)?;
    bytes.push(b'\n');
    write_atomic(&path, &bytes)
}

/// Every snapshot record under `cdn`, in file name order.
pub fn load_snapshots(cdn: &Path) -> Result<Vec<SnapshotRecord>> {
    let dir = snapshots_dir(cdn);
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut paths = Vec::new();
    for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
        let p = entry.map_err(|e| Error::io(&dir, e))?.path();
        if p.extension().is_some_and(|e| e == "json") {
            paths.push(p);
        }
    }
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let bytes = fs::read(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_slice(&bytes).map_err(|e| Error::Malformed {
                pointer: p.display().to_string(),
                message: e.to_string(),
            })
        })
        .collect()
}

/// Rebuilds the corpus from the snapshot records of `cdn`.
pub fn load_corpus(cdn: &Path) -> Result<(Corpus, BuildReport)> {
    Ok(build_corpus(&load_snapshots(cdn)?))
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CdnMergeReport {
    #[serde(flatten)]
    pub store: MergeReport,
    pub snapshots_copied: usize,
    pub pages_copied: usize,
}

fn copy_tree(src: &Path, dest: &Path) -> Result<usize> {
    let mut n = 0;
    for entry in walkdir::WalkDir::new(src).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::io(src, e.into()))?;
        if entry.file_type().is_file() {
            let rel = entry.path().strip_prefix(src).expect("walk stays under its root");
            let bytes = fs::read(entry.path()).map_err(|e| Error::io(entry.path(), e))?;
            write_atomic(&dest.join(rel), &bytes)?;
            n += 1;
        }
    }
    Ok(n)
}

/// Merges the CDN directory `other` into `master`: objects and dictionaries
/// through [`ContentStore::merge_from`], plus snapshot records and
/// rewritten pages. A snapshot record that exists in both with different
/// content is an error.
pub fn merge_cdn(master: &mut ContentStore, other_root: &Path) -> Result<CdnMergeReport> {
    let other = ContentStore::open_existing(other_root)?;
    let mut report = CdnMergeReport::default();
    for rec in load_snapshots(other_root)? {
        let name = format!("{}.json", rec.snapshot.archive_id);
        let dest = snapshots_dir(master.root()).join(&name);
        if dest.exists() {
            let ours: SnapshotRecord = serde_json::from_slice(&fs::read(&dest).map_err(|e| Error::io(&dest, e))?)?;
            if ours != rec {
                return Err(Error::InvalidArgument(format!(
                    "archive {} exists in both stores with different content",
                    rec.snapshot.archive_id
                )));
            }
        }
    }
    report.store = master.merge_from(&other)?;
    if same_dir(master.root(), other_root) {
        return Ok(report);
    }
    let src = snapshots_dir(other_root);
    if src.is_dir() {
        report.snapshots_copied = copy_tree(&src, &snapshots_dir(master.root()))?;
    }
    let src = other_root.join(REWRITTEN_DIR);
    if src.is_dir() {
        report.pages_copied = copy_tree(&src, &master.root().join(REWRITTEN_DIR))?;
    }
    Ok(report)
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => a == b,
    }
}
