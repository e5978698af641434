//! Random and planted corpora.

use std::path::Path;

use chrono::{DateTime, Duration, Utc};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tscdn_core::corpus::{Corpus, EventId, EventVersion};
use tscdn_core::ingest::default_zone;

use crate::export::{render_page, write_file, PageMessage};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn at(secs: i64) -> DateTime<Utc> {
    DateTime::from_timestamp(secs, 0).unwrap()
}

pub fn vocabulary(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("t{i}")).collect()
}

pub fn random_text(rng: &mut StdRng, vocab: &[String], max_len: usize) -> String {
    let len = rng.random_range(1..=max_len);
    (0..len)
        .map(|_| vocab[rng.random_range(0..vocab.len())].as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone)]
pub struct CorpusShape {
    pub events: usize,
    pub vocab: usize,
    pub max_len: usize,
    pub max_versions: usize,
    pub channels: usize,
    /// Event start times are drawn from `[0, span)` seconds.
    pub span: i64,
}

impl Default for CorpusShape {
    fn default() -> Self {
        CorpusShape {
            events: 50,
            vocab: 40,
            max_len: 12,
            max_versions: 3,
            channels: 3,
            span: 1_000_000,
        }
    }
}

/// A corpus of random texts; each event has 1..=max_versions versions at
/// strictly increasing times.
pub fn random_corpus(rng: &mut StdRng, shape: &CorpusShape) -> Corpus {
    let vocab = vocabulary(shape.vocab);
    let mut c = Corpus::default();
    for ch in 0..shape.channels {
        c.channels.insert(format!("ch{ch}"), format!("Channel {ch}"));
    }
    for i in 0..shape.events {
        let ch = format!("ch{}", rng.random_range(0..shape.channels));
        let n = rng.random_range(1..=shape.max_versions);
        let mut t = rng.random_range(0..shape.span);
        let mut versions = Vec::with_capacity(n);
        for _ in 0..n {
            versions.push(EventVersion {
                timestamp: at(t),
                text: random_text(rng, &vocab, shape.max_len),
                media: vec![],
                views: None,
                forwarded_from: None,
            });
            t += rng.random_range(1..shape.span / 10 + 2);
        }
        c.events.insert(EventId::new(ch, format!("{i:05}")), versions);
    }
    c
}

/// A corpus with `counts[d]` events containing `term` on day `d` after
/// `start`, one channel, each event at a distinct time within its day.
pub fn planted_daily(term: &str, start: DateTime<Utc>, counts: &[u64]) -> Corpus {
    let mut c = Corpus::default();
    c.channels.insert("plant".into(), "Plant".into());
    let mut n = 0;
    for (d, k) in counts.iter().enumerate() {
        for j in 0..*k {
            let ts = start + Duration::days(d as i64) + Duration::minutes(10 + j as i64);
            c.events.insert(
                EventId::new("plant", format!("{n:06}")),
                vec![EventVersion {
                    timestamp: ts,
                    text: format!("{term} report number {n}"),
                    media: vec![],
                    views: None,
                    forwarded_from: None,
                }],
            );
            n += 1;
        }
    }
    c
}

/// Sizes of a planted-duplicate file set.
#[derive(Debug, Clone)]
pub struct DedupPlant {
    /// (archive index, relative path, bytes) for every file.
    pub files: Vec<(usize, String, Vec<u8>)>,
    pub bytes_total: u64,
    pub bytes_duplicate: u64,
}

/// `n` files, a third of them copies, sized so that duplicate copies make
/// up exactly 40% of all bytes. Files alternate between two archives.
pub fn planted_dedup(rng: &mut StdRng, n: usize) -> DedupPlant {
    assert!(n.is_multiple_of(5), "n must be a multiple of 5");
    let dups = 2 * n / 5;
    let originals_copied = dups;
    let originals_extra = n - 2 * dups;
    let mut sizes: Vec<u64> = (0..originals_copied).map(|_| rng.random_range(200..4000)).collect();
    if sizes.iter().sum::<u64>() % 2 == 1 {
        sizes[0] += 1;
    }
    // originals_extra must carry half of the copied originals' bytes so that
    // dup / total = D / (D + D + D/2) = 0.4.
    let target: u64 = sizes.iter().sum::<u64>() / 2;
    let each = target / originals_extra as u64;
    for i in 0..originals_extra {
        let s = if i + 1 == originals_extra { target - each * (originals_extra as u64 - 1) } else { each };
        sizes.push(s);
    }
    let mut originals: Vec<Vec<u8>> = Vec::with_capacity(sizes.len());
    for (i, s) in sizes.iter().enumerate() {
        let mut b: Vec<u8> = (0..*s).map(|_| rng.random()).collect();
        let tag = (i as u64).to_le_bytes();
        let k = 8.min(b.len());
        b[..k].copy_from_slice(&tag[..k]);
        originals.push(b);
    }
    let mut files = Vec::with_capacity(n);
    for (i, b) in originals.iter().enumerate() {
        files.push((i % 2, format!("photos/orig_{i:04}.jpg"), b.clone()));
    }
    for (i, b) in originals.iter().take(dups).enumerate() {
        files.push(((i + 1) % 2, format!("photos/copy_{i:04}.jpg"), b.clone()));
    }
    let bytes_total = files.iter().map(|f| f.2.len() as u64).sum();
    let bytes_duplicate = originals[..dups].iter().map(|b| b.len() as u64).sum();
    DedupPlant {
        files,
        bytes_total,
        bytes_duplicate,
    }
}

/// Writes a one-page export whose messages each reference one file.
pub fn write_media_export(root: &Path, files: &[(String, Vec<u8>)], start: DateTime<Utc>) {
    let mut msgs = Vec::new();
    for (i, (rel, bytes)) in files.iter().enumerate() {
        write_file(root, rel, bytes);
        let tag = if rel.ends_with(".mp4") { "video" } else { "img" };
        msgs.push(
            PageMessage::new(i as u64 + 1, start + Duration::minutes(i as i64), format!("post {i}"))
                .with_media(tag, rel.clone()),
        );
    }
    write_file(root, "messages.html", render_page(&msgs, default_zone()).as_bytes());
}
