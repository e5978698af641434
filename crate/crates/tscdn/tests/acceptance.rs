//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails or runs over its time budget.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use chrono::{Datelike, Duration as Span, FixedOffset, NaiveDate, TimeZone, Utc, Weekday};
use http_body_util::BodyExt;
use rand::rngs::StdRng;
use rand::Rng;
use regex::Regex;
use tower::ServiceExt;
use tscdn::app::{self, AppState};
use tscdn_core::analytics::{daily_average, trend_series, weekend_window, Granularity, YearMonth};
use tscdn_core::corpus::{chain_intervals, export_json_db, import_json_db, Corpus, EventId, EventVersion, Interval};
use tscdn_core::index::{coalesce_entries, read_index, write_index, CoalesceConfig, InvertedIndex, PostingEntry, QuerySpec};
use tscdn_core::ingest::{default_zone, IngestConfig, SourceMeta};
use tscdn_core::pipeline::{default_archive_id, ingest_archive, load_corpus, merge_cdn, REWRITTEN_DIR};
use tscdn_core::scoring::{cosine, term_vector, tf, Analyzer, CorpusTermStats, TermVector};
use tscdn_core::store::{decrease_pct, decrease_tenths, ContentStore, DEFAULT_CDN_PREFIX};
use tscdn_core::Exec;
use tscdn_testkit::export::{render_page, write_file, PageMessage};
use tscdn_testkit::oracle::{dense_cosine, linear_scan, run_heads, BruteScorer};
use tscdn_testkit::synth::{self, at, CorpusShape};

type Check = Result<String, String>;
type Criterion = (u32, &'static str, u64, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        match $cond {
            true => {}
            false => return Err(format!($($arg)+)),
        }
    };
}

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        (1, "decrease percentages", 1, decrease_arithmetic),
        (2, "planted dedup through ingest and merge", 30, planted_dedup),
        (3, "one object for renamed copies across archives", 5, renamed_copies),
        (4, "tf-ief against brute force", 60, tf_ief_oracle),
        (5, "time-travel query against linear scan", 60, time_travel_oracle),
        (6, "posting list coalescing", 30, coalescing),
        (7, "valid intervals tile each event", 5, tiling),
        (8, "persistence round-trips", 30, persistence),
        (9, "trend and weekend analytics", 10, analytics),
        (10, "api parity", 30, api_parity),
    ];
    let mut failed = 0;
    for (id, name, budget, f) in criteria {
        let started = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = started.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > Duration::from_secs(budget) => Err(format!("{detail}; over the {budget} s budget")),
            other => other,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} [{id:>2}] {name} ({:.2} s): {detail}", elapsed.as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn decrease_arithmetic() -> Check {
    // Table volumes in tenths of a unit.
    let rows = [(795, 478, 398, "39.8"), (40, 36, 100, "10.0"), (26, 25, 38, "3.8")];
    for (before, after, tenths, shown) in rows {
        ensure!(decrease_tenths(before, after) == tenths, "{before}->{after}: {} tenths", decrease_tenths(before, after));
        let pct = decrease_pct(before, after);
        ensure!(format!("{pct:.1}") == shown, "{before}->{after}: {pct}");
        // Independent: exact rational, truncated.
        let exact = (before - after) as f64 / before as f64 * 100.0;
        ensure!((exact * 10.0).floor() as u64 == tenths || (exact * 10.0 - tenths as f64 - 1.0).abs() < 1e-9, "oracle disagrees");
    }
    Ok("39.8 / 10.0 / 3.8".into())
}

fn planted_dedup() -> Check {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = synth::rng(40);
    let plant = synth::planted_dedup(&mut rng, 500);
    let master_root = tmp.path().join("master");
    let mut master = ContentStore::open(&master_root).unwrap();
    for archive in 0..2 {
        let files: Vec<(String, Vec<u8>)> = plant
            .files
            .iter()
            .filter(|f| f.0 == archive)
            .map(|f| (f.1.clone(), f.2.clone()))
            .collect();
        let export = tmp.path().join(format!("export{archive}"));
        synth::write_media_export(&export, &files, at(1_585_000_000));
        let root = tmp.path().join(format!("cdn{archive}"));
        let mut store = ContentStore::open(&root).unwrap();
        let src = SourceMeta {
            channel_name: "Plant".into(),
            channel_slug: format!("plant{archive}"),
            export_root: export,
            crawl_time: at(1_600_000_000),
        };
        let rep = ingest_archive(&mut store, &src, &format!("plant{archive}-1"), &IngestConfig::default(), DEFAULT_CDN_PREFIX).unwrap();
        let media_problems: Vec<_> = rep.diagnostics.iter().filter(|d| d.path.as_deref().is_some_and(|p| p.starts_with("photos/"))).collect();
        ensure!(media_problems.is_empty(), "diagnostics: {media_problems:?}");
        merge_cdn(&mut master, &root).unwrap();
    }
    master.save().unwrap();
    let total = ContentStore::open_existing(&master_root).unwrap().stats().total;
    let saved = total.bytes_before - total.bytes_after;
    ensure!(total.bytes_before == plant.bytes_total, "before {} != planted {}", total.bytes_before, plant.bytes_total);
    ensure!(saved == plant.bytes_duplicate, "saved {saved} != planted {}", plant.bytes_duplicate);
    ensure!(saved * 5 == total.bytes_before * 2, "saved {saved} of {} is not 2/5", total.bytes_before);
    ensure!(total.decrease_pct == 40.0, "decrease {}", total.decrease_pct);
    Ok(format!("{saved} of {} bytes saved = {:.1}%", total.bytes_before, total.decrease_pct))
}

fn list_files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out
}

fn renamed_copies() -> Check {
    let tmp = tempfile::tempdir().unwrap();
    let video = b"\x00\x00\x00\x18ftypmp42 the same clip".repeat(64);
    let layout = [
        ("a", "video_files/7.mp4", "video_files/7.mp4"),
        ("b", "video_files/14.mp4", "video_files/14.mp4"),
        ("c", "video_files/فیلم.mp4", "video_files/%D9%81%DB%8C%D9%84%D9%85.mp4"),
    ];
    let master_root = tmp.path().join("cdn");
    let mut master = ContentStore::open(&master_root).unwrap();
    for (i, (slug, file, href)) in layout.iter().enumerate() {
        let export = tmp.path().join(format!("export_{slug}"));
        write_file(&export, file, &video);
        let page = render_page(&[PageMessage::new(1, at(1_585_000_000 + i as i64), "ویدیو").with_media("video", *href)], default_zone());
        write_file(&export, "messages.html", page.as_bytes());
        let root = tmp.path().join(format!("cdn_{slug}"));
        let mut store = ContentStore::open(&root).unwrap();
        let src = SourceMeta {
            channel_name: slug.to_string(),
            channel_slug: slug.to_string(),
            export_root: export,
            crawl_time: at(1_600_000_000),
        };
        ingest_archive(&mut store, &src, &default_archive_id(slug, src.crawl_time), &IngestConfig::default(), DEFAULT_CDN_PREFIX).unwrap();
        merge_cdn(&mut master, &root).unwrap();
    }
    let names: Vec<String> = fs::read_dir(master.objects_dir())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    ensure!(names.len() == 1, "stored objects: {names:?}");
    ensure!(Regex::new(r"^[0-9a-f]{32}\.mp4$").unwrap().is_match(&names[0]), "bad name {}", names[0]);
    let cdn_ref = Regex::new(r#"/cdn/([^"'?#]+)"#).unwrap();
    let pages = list_files(&master_root.join(REWRITTEN_DIR));
    ensure!(pages.len() == 3, "{} rewritten pages", pages.len());
    for page in &pages {
        let html = fs::read_to_string(page).unwrap();
        let refs: Vec<String> = cdn_ref.captures_iter(&html).map(|c| c[1].to_string()).collect();
        ensure!(refs == [names[0].clone()], "{} references {refs:?}", page.display());
        ensure!(master.object_path(&refs[0]).is_file(), "dangling reference in {}", page.display());
    }
    Ok(format!("3 pages -> {}", names[0]))
}

fn random_vector(rng: &mut StdRng) -> TermVector {
    let n = rng.random_range(0..8);
    TermVector::new((0..n).map(|_| (format!("t{}", rng.random_range(0..10)), rng.random_range(0.0..5.0))))
}

fn tf_ief_oracle() -> Check {
    let a = Analyzer::default();
    let mut values = 0u64;
    for seed in 0..20 {
        let mut rng = synth::rng(seed);
        let shape = CorpusShape {
            events: rng.random_range(1..=50),
            vocab: rng.random_range(1..=40),
            max_versions: 1,
            ..Default::default()
        };
        let c = synth::random_corpus(&mut rng, &shape);
        let docs: Vec<Vec<String>> = c.events.values().map(|vs| a.terms(&vs[0].text)).collect();
        let stats = CorpusTermStats::build(&c, &a, Exec::Parallel);
        let brute = BruteScorer { docs: &docs };
        let vocab = synth::vocabulary(shape.vocab + 2);
        let vectors: Vec<TermVector> = docs.iter().map(|d| term_vector(d, &stats).unwrap()).collect();
        let dense: Vec<BTreeMap<String, f64>> = docs.iter().map(|d| brute.vector(d)).collect();
        for (i, doc) in docs.iter().enumerate() {
            for t in &vocab {
                ensure!((tf(t, doc) - brute.tf(t, doc)).abs() < 1e-9, "tf {t}");
                ensure!((stats.ief(t).unwrap() - brute.ief(t)).abs() < 1e-9, "ief {t}");
                ensure!((vectors[i].get(t) - brute.tf_ief(t, doc)).abs() < 1e-9, "tf_ief {t}");
                values += 3;
            }
            for j in 0..docs.len() {
                ensure!((cosine(&vectors[i], &vectors[j]) - dense_cosine(&dense[i], &dense[j])).abs() < 1e-9, "cosine {i},{j}");
                values += 1;
            }
        }
    }
    let mut rng = synth::rng(1000);
    for _ in 0..1000 {
        let (x, y) = (random_vector(&mut rng), random_vector(&mut rng));
        let c = cosine(&x, &y);
        ensure!(c == cosine(&y, &x), "asymmetric");
        ensure!((0.0..=1.0).contains(&c), "out of range {c}");
        let s = rng.random_range(0.01..100.0);
        ensure!((cosine(&x.scaled(s), &y) - c).abs() < 1e-12, "scaling changed cosine");
    }
    for _ in 0..100 {
        let q = random_vector(&mut rng);
        let events: Vec<TermVector> = (0..10).map(|_| random_vector(&mut rng)).collect();
        let scores = |q: &TermVector| events.iter().map(|e| cosine(q, e)).collect::<Vec<f64>>();
        let (s1, s2) = (scores(&q), scores(&q.scaled(rng.random_range(0.01..100.0))));
        let mut order: Vec<usize> = (0..events.len()).collect();
        order.sort_by(|a, b| s1[*b].total_cmp(&s1[*a]));
        for w in order.windows(2) {
            if s1[w[0]] - s1[w[1]] > 1e-9 {
                ensure!(s2[w[0]] >= s2[w[1]], "scaled query reordered results");
            }
        }
    }
    Ok(format!("{values} values on 20 corpora, 1000 pairs"))
}

fn random_query(rng: &mut StdRng, vocab: &[String], span: i64) -> QuerySpec {
    let k = rng.random_range(1..=3);
    let words: Vec<String> = (0..k).map(|_| vocab[rng.random_range(0..vocab.len())].clone()).collect();
    let (a, b) = (rng.random_range(0..span * 2), rng.random_range(0..span * 2));
    let mut q = QuerySpec::new([words.join(" ")]);
    if rng.random_bool(0.9) {
        q = q.between(at(a.min(b)), at(a.max(b)));
    }
    q.all_terms = rng.random_bool(0.2);
    if rng.random_bool(0.2) {
        q = q.in_channels(["ch1"]);
    }
    q
}

fn time_travel_oracle() -> Check {
    let a = Analyzer::default();
    let mut rng = synth::rng(77);
    let shape = CorpusShape { events: 1000, vocab: 60, ..Default::default() };
    let c = synth::random_corpus(&mut rng, &shape);
    let idx = InvertedIndex::build(&c, &a, Exec::Parallel).unwrap();
    let vocab = synth::vocabulary(shape.vocab + 3);
    let mut hits = 0;
    for _ in 0..50 {
        let q = random_query(&mut rng, &vocab, shape.span);
        let got = idx.query(&a, &q).unwrap();
        let (from, to) = q.bounds().unwrap();
        let want = linear_scan(&c, &a, &q.terms(&a).unwrap(), from, to, q.channels.as_deref(), q.all_terms);
        let g: Vec<_> = got.iter().map(|s| (&s.event, s.timestamp, s.cosine, s.tf_ief_sum)).collect();
        let w: Vec<_> = want.iter().map(|s| (&s.event, s.timestamp, s.cosine, s.tf_ief_sum)).collect();
        ensure!(g == w, "query {q:?} differs from the scan");
        hits += got.len();
    }
    for _ in 0..100 {
        let (x, y) = (rng.random_range(0..shape.span * 2), rng.random_range(0..shape.span * 2));
        let (from, to) = (at(x.min(y)), at(x.max(y)));
        let grow = |rng: &mut StdRng| Span::seconds(rng.random_range(0..100_000));
        let inner = random_query(&mut rng, &vocab, shape.span).between(from, to);
        let outer = inner.clone().between(from - grow(&mut rng), to + grow(&mut rng));
        let ids = |q: &QuerySpec| idx.query(&a, q).unwrap().into_iter().map(|s| s.event).collect::<BTreeSet<_>>();
        ensure!(ids(&inner).is_subset(&ids(&outer)), "widening the interval lost results");
    }
    Ok(format!("50 queries, {hits} results identical; 100 nested pairs"))
}

fn random_postings(rng: &mut StdRng) -> Vec<PostingEntry> {
    let mut out = Vec::new();
    for e in 0..rng.random_range(1..4) {
        let mut t = 0;
        let n = rng.random_range(1..12);
        for k in 0..n {
            if rng.random_bool(0.2) {
                t += rng.random_range(1..5);
            }
            let len = rng.random_range(1..6);
            let end = (k + 1 < n || rng.random_bool(0.5)).then(|| at(t + len));
            let r = rng.random_range(1..5);
            out.push(PostingEntry {
                event: EventId::new("c", e.to_string()),
                interval: Interval::new(at(t), end),
                r,
                positions: (0..r).collect(),
            });
            t += len;
        }
    }
    out
}

fn coverage(entries: &[PostingEntry]) -> BTreeMap<EventId, Vec<Interval>> {
    let mut out: BTreeMap<EventId, Vec<Interval>> = BTreeMap::new();
    for e in entries {
        let list = out.entry(e.event.clone()).or_default();
        match list.last_mut() {
            Some(last) if last.end == Some(e.interval.begin) => last.end = e.interval.end,
            _ => list.push(e.interval),
        }
    }
    out
}

fn coalescing() -> Check {
    let mut rng = synth::rng(8);
    let (mut before, mut after) = (0, 0);
    for i in 0..200 {
        let list = random_postings(&mut rng);
        let tau = [0.0, 0.05, 0.2, 0.5][i % 4];
        let weights: Vec<f64> = (0..5).map(|_| rng.random_range(0.5..2.0)).collect();
        let score = |e: &PostingEntry| e.r as f64 * weights[e.r as usize];
        let out = coalesce_entries(&list, tau, score);
        ensure!(out.len() <= list.len(), "list grew");
        ensure!(coverage(&out) == coverage(&list), "coverage changed on list {i}");
        ensure!(coalesce_entries(&out, tau, score) == out, "not idempotent on list {i}");
        let joined: Vec<bool> = list.windows(2).map(|w| w[0].event == w[1].event && w[0].interval.meets(&w[1].interval)).collect();
        let scores: Vec<f64> = list.iter().map(score).collect();
        let heads = run_heads(&joined, &scores, tau);
        ensure!(heads.len() == out.len(), "run count {} != oracle {}", out.len(), heads.len());
        for (k, (h, merged)) in heads.iter().zip(&out).enumerate() {
            let last = heads.get(k + 1).map_or(list.len(), |n| *n) - 1;
            ensure!(merged.interval.begin == list[*h].interval.begin, "run start moved");
            ensure!(merged.interval.end == list[last].interval.end, "run end moved");
            if tau == 0.0 {
                ensure!(list[*h..=last].iter().all(|e| score(e) == score(&list[*h])), "merged unequal scores at tau 0");
            }
        }
        before += list.len();
        after += out.len();
    }
    Ok(format!("200 lists, {before} -> {after} entries"))
}

fn tiling() -> Check {
    let mut rng = synth::rng(12);
    let shape = CorpusShape { events: 400, max_versions: 6, ..Default::default() };
    let c = synth::random_corpus(&mut rng, &shape);
    let mut multi = 0;
    for (id, versions) in c.events.iter().filter(|(_, v)| v.len() > 1) {
        multi += 1;
        let iv = chain_intervals(versions).unwrap();
        ensure!(iv[0].begin == versions[0].timestamp, "{id} does not start at its first version");
        ensure!(iv.last().unwrap().is_open(), "{id} does not reach now");
        ensure!(iv[..iv.len() - 1].iter().all(|i| !i.is_open()), "{id} has an open interval before the last");
        for w in iv.windows(2) {
            ensure!(w[0].end == Some(w[1].begin), "{id} has a gap or overlap");
        }
        for _ in 0..20 {
            let probe = versions[0].timestamp + Span::seconds(rng.random_range(0..shape.span * 2));
            let covering = iv.iter().filter(|i| i.contains(probe)).count();
            ensure!(covering == 1, "{id}: {covering} intervals contain {probe}");
        }
    }
    ensure!(multi > 50, "only {multi} multi-version events");
    Ok(format!("{multi} multi-version events"))
}

fn persistence() -> Check {
    let a = Analyzer::default();
    let tmp = tempfile::tempdir().unwrap();
    let mut corpora: Vec<Corpus> = (0..8)
        .map(|s| synth::random_corpus(&mut synth::rng(300 + s), &CorpusShape { events: 120, max_versions: 4, ..Default::default() }))
        .collect();
    let news = common::news_cdn();
    corpora.push(load_corpus(&news.cdn).unwrap().0);
    for (k, c) in corpora.iter().enumerate() {
        let dir = tmp.path().join(format!("db{k}"));
        export_json_db(c, &dir).unwrap();
        ensure!(&import_json_db(&dir).unwrap() == c, "json db round-trip {k}");
        let idx = InvertedIndex::build(c, &a, Exec::Parallel).unwrap();
        for index in [idx.clone(), idx.coalesced(CoalesceConfig::default(), Exec::Parallel).unwrap()] {
            let bytes = write_index(&index).unwrap();
            ensure!(read_index(&bytes).unwrap() == index, "index round-trip {k}");
        }
    }
    let small = InvertedIndex::build(&synth::planted_daily("flood", at(0), &[2, 1, 3]), &a, Exec::Sequential).unwrap();
    let bytes = write_index(&small).unwrap();
    let body_end = bytes.iter().position(|b| *b == b'\n').unwrap();
    let mut rejected = 0;
    for cut in 0..bytes.len() {
        let Ok(err) = panic::catch_unwind(|| read_index(&bytes[..cut]).is_err()) else {
            return Err(format!("loader panicked on a {cut}-byte prefix"));
        };
        ensure!(err || cut > body_end, "accepted a {cut}-byte prefix");
        rejected += err as usize;
    }
    let mut rng = synth::rng(9);
    for _ in 0..500 {
        let mut b = bytes.clone();
        let i = rng.random_range(0..b.len());
        b[i] ^= 1 << rng.random_range(0..8);
        ensure!(panic::catch_unwind(|| read_index(&b).is_err()).unwrap_or(false), "flipped byte at {i} was accepted or panicked");
    }
    Ok(format!("{} corpora; {rejected} truncations and 500 bit flips rejected", corpora.len()))
}

fn analytics() -> Check {
    let a = Analyzer::default();
    let start = Utc.with_ymd_and_hms(2020, 3, 1, 0, 0, 0).unwrap();
    let counts = [3u64, 0, 5, 1, 0, 7, 2, 4];
    let idx = InvertedIndex::build(&synth::planted_daily("flood", start, &counts), &a, Exec::Parallel).unwrap();
    let q = QuerySpec::new(["flood"]).between(start, start + Span::days(counts.len() as i64) - Span::seconds(1));
    let series = trend_series(&idx, &a, &q, Granularity::Day).unwrap();
    let got: Vec<u64> = series.channels["plant"].iter().map(|b| b.count).collect();
    ensure!(got == counts, "trend {got:?} != plant {counts:?}");

    let zone = FixedOffset::east_opt(3 * 3600 + 1800).unwrap();
    let mut thursdays = Corpus::default();
    thursdays.channels.insert("kf".into(), "KF".into());
    let mut per_month: BTreeMap<u32, u64> = BTreeMap::new();
    let mut day = NaiveDate::from_ymd_opt(2020, 4, 1).unwrap();
    let mut n = 0;
    while day.month() <= 5 {
        if day.weekday() == Weekday::Thu {
            for hour in [0, 12, 23] {
                let local = zone.from_local_datetime(&day.and_hms_opt(hour, 30, 0).unwrap()).unwrap();
                thursdays.events.insert(
                    EventId::new("kf", format!("{n:04}")),
                    vec![EventVersion { timestamp: local.with_timezone(&Utc), text: "کرونا covid".into(), media: vec![], views: None, forwarded_from: None }],
                );
                n += 1;
                *per_month.entry(day.month()).or_default() += 1;
            }
        }
        day = day.succ_opt().unwrap();
    }
    let idx = InvertedIndex::build(&thursdays, &a, Exec::Parallel).unwrap();
    let months: Vec<YearMonth> = vec!["2020-04".parse().unwrap(), "2020-05".parse().unwrap()];
    let w = weekend_window(&idx, &a, &QuerySpec::new(["کرونا"]), &months, zone).unwrap();
    for row in &w.rows {
        let c = row.counts;
        ensure!(c.wednesday == 0 && c.saturday == 0, "{}: wed {} sat {}", row.month, c.wednesday, c.saturday);
        ensure!(c.thursday_friday == per_month[&row.month.month], "{}: thu-fri {}", row.month, c.thursday_friday);
    }
    ensure!(w.totals["kf"].thursday_friday == n, "totals {}", w.totals["kf"].thursday_friday);

    let idx = InvertedIndex::build(&synth::planted_daily("flood", start, &[2; 5]), &a, Exec::Parallel).unwrap();
    let q = QuerySpec::new(["flood"]).between(start, start + Span::days(5) - Span::nanoseconds(1));
    let avg = daily_average(&idx, &a, &q).unwrap()["plant"];
    ensure!(avg.matches == 10 && avg.days == 5 && avg.raw == 2.0, "{avg:?}");
    Ok(format!("trend {got:?}; {n} thursday events; 10/5 = {}", avg.raw))
}

fn api_parity() -> Check {
    let fx = common::news_cdn();
    let state = Arc::new(AppState::load(&fx.cdn, default_zone()).unwrap());
    let router = app::router(state.clone(), None);
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    let day = |s: &str| Utc.from_utc_datetime(&NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap().and_hms_opt(0, 0, 0).unwrap());
    let end_of = |s: &str| day(s) + Span::days(1) - Span::nanoseconds(1);
    let base = |q: &str| QuerySpec { limit: Some(200), ..QuerySpec::new([q]) };
    let cases: Vec<(&str, QuerySpec, bool)> = vec![
        ("q=flood", base("flood"), false),
        ("q=flood&from=2020-03-23&to=2020-09-21", QuerySpec { from: Some(day("2020-03-23")), to: Some(end_of("2020-09-21")), ..base("flood") }, false),
        ("q=fire", base("fire"), false),
        ("q=%DA%A9%D8%B1%D9%88%D9%86%D8%A7", base("کرونا"), false),
        ("q=%D8%B3%DB%8C%D9%84%20flood", base("سیل flood"), false),
        ("q=vaccine&channels=kf", QuerySpec { channels: Some(vec!["kf".into()]), ..base("vaccine") }, false),
        ("q=vaccine&channels=ar,kf", QuerySpec { channels: Some(vec!["ar".into(), "kf".into()]), ..base("vaccine") }, false),
        ("q=school%20fire&all_terms=true", QuerySpec { all_terms: true, ..base("school fire") }, false),
        ("q=school%20fire", base("school fire"), false),
        ("q=earthquake&limit=5", QuerySpec { limit: Some(5), ..base("earthquake") }, false),
        ("q=earthquake&limit=5&offset=5", QuerySpec { limit: Some(5), offset: 5, ..base("earthquake") }, false),
        ("q=coronavirus&from=2020-06-01T12:00:00", QuerySpec { from: Some(day("2020-06-01") + Span::hours(12)), ..base("coronavirus") }, false),
        ("q=coronavirus&to=2020-04-15", QuerySpec { to: Some(end_of("2020-04-15")), ..base("coronavirus") }, false),
        ("q=flood&coalesced=true", base("flood"), true),
        ("q=fire&coalesced=true&from=2020-10-03", QuerySpec { from: Some(day("2020-10-03")), ..base("fire") }, true),
        ("q=flood&from=2020-10-05&to=2020-10-20", QuerySpec { from: Some(day("2020-10-05")), to: Some(end_of("2020-10-20")), ..base("flood") }, false),
        ("q=unheard", base("unheard"), false),
        ("q=flood&channels=none", QuerySpec { channels: Some(vec!["none".into()]), ..base("flood") }, false),
        ("q=fire%20flood%20vaccine&all_terms=1&channels=ar", QuerySpec { all_terms: true, channels: Some(vec!["ar".into()]), ..base("fire flood vaccine") }, false),
        ("q=%D9%88%D8%A7%DA%A9%D8%B3%D9%86&offset=3&limit=0", QuerySpec { limit: Some(0), offset: 3, ..base("واکسن") }, false),
    ];
    let mut results = 0;
    for (query, spec, coalesced) in &cases {
        let index = if *coalesced { &state.coalesced } else { &state.index };
        let expected = serde_json::to_vec(&index.query(&state.analyzer, spec).unwrap()).unwrap();
        let (status, body) = rt.block_on(async {
            let req = Request::get(format!("/api/search?{query}")).body(Body::empty()).unwrap();
            let resp = router.clone().oneshot(req).await.unwrap();
            (resp.status(), resp.into_body().collect().await.unwrap().to_bytes())
        });
        ensure!(status == StatusCode::OK, "{query}: status {status}");
        ensure!(body.as_ref() == expected.as_slice(), "{query}: body differs from in-process result");
        results += serde_json::from_slice::<Vec<serde_json::Value>>(&body).unwrap().len();
    }
    ensure!(results > 100, "fixture too sparse: {results} results");
    Ok(format!("{} parameter sets, {results} results, byte-equal", cases.len()))
}
