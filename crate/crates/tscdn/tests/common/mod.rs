#![allow(dead_code)]

use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};
use rand::Rng;
use tempfile::TempDir;
use tscdn_core::index::{persist_index, InvertedIndex};
use tscdn_core::ingest::{default_zone, IngestConfig, SourceMeta};
use tscdn_core::pipeline::{self, default_archive_id, ingest_archive, load_corpus};
use tscdn_core::scoring::Analyzer;
use tscdn_core::store::{ContentStore, DEFAULT_CDN_PREFIX};
use tscdn_core::Exec;
use tscdn_testkit::export::{render_page, write_file, PageMessage};
use tscdn_testkit::synth;

pub const WORDS: [&str; 10] = [
    "flood", "fire", "vaccine", "coronavirus", "school", "earthquake", "سیل", "آتش", "واکسن", "کرونا",
];

pub fn utc(s: &str) -> DateTime<Utc> {
    s.parse().unwrap()
}

pub struct Fixture {
    pub dir: TempDir,
    pub cdn: PathBuf,
}

fn message_text(rng: &mut rand::rngs::StdRng) -> String {
    let n = rng.random_range(2..9);
    (0..n).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect::<Vec<_>>().join(" ")
}

/// Writes one export and ingests it into `cdn`.
pub fn ingest_export(cdn: &Path, work: &Path, slug: &str, crawl: DateTime<Utc>, messages: &[PageMessage], media: &[(String, Vec<u8>)]) {
    let export = work.join(format!("export_{slug}_{}", crawl.timestamp()));
    for (rel, bytes) in media {
        write_file(&export, rel, bytes);
    }
    write_file(&export, "messages.html", render_page(messages, default_zone()).as_bytes());
    let source = SourceMeta {
        channel_name: slug.to_uppercase(),
        channel_slug: slug.into(),
        export_root: export,
        crawl_time: crawl,
    };
    let mut store = ContentStore::open(cdn).unwrap();
    let cfg = IngestConfig { exec: Exec::Sequential, ..Default::default() };
    ingest_archive(&mut store, &source, &default_archive_id(slug, crawl), &cfg, DEFAULT_CDN_PREFIX).unwrap();
}

/// Builds the search index of `cdn` from its snapshots.
pub fn index_cdn(cdn: &Path) {
    let (corpus, _) = load_corpus(cdn).unwrap();
    let index = InvertedIndex::build(&corpus, &Analyzer::default(), Exec::Parallel).unwrap();
    persist_index(&index, &pipeline::index_path(cdn)).unwrap();
}

/// Two channels of random news posts between March and October 2020, one
/// channel crawled twice with some posts edited in between, plus media.
pub fn news_cdn() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let cdn = dir.path().join("cdn");
    let mut rng = synth::rng(2020);
    let start = utc("2020-03-01T00:00:00Z");
    let span = (utc("2020-10-01T00:00:00Z") - start).num_seconds();
    let png = b"\x89PNG\r\n\x1a\n fixture image".to_vec();
    let mp4 = b"\x00\x00\x00\x18ftypmp42 fixture video".to_vec();

    for slug in ["kf", "ar"] {
        let mut msgs: Vec<PageMessage> = (0..80)
            .map(|i| {
                let t = start + Duration::seconds(rng.random_range(0..span) / 60 * 60);
                let mut m = PageMessage::new(i + 1, t, message_text(&mut rng));
                match i % 7 {
                    0 => m = m.with_media("img", "photos/a.png"),
                    3 => m = m.with_media("video", "video_files/v.mp4"),
                    _ => {}
                }
                m
            })
            .collect();
        let media = vec![("photos/a.png".to_string(), png.clone()), ("video_files/v.mp4".to_string(), mp4.clone())];
        ingest_export(&cdn, dir.path(), slug, utc("2020-10-02T00:00:00Z"), &msgs, &media);
        if slug == "kf" {
            for m in msgs.iter_mut().step_by(6) {
                m.text = format!("{} {}", m.text, message_text(&mut rng));
            }
            ingest_export(&cdn, dir.path(), slug, utc("2020-10-09T00:00:00Z"), &msgs, &media);
        }
    }
    index_cdn(&cdn);
    Fixture { dir, cdn }
}
