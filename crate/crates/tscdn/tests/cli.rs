mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tscdn_core::index::{load_index, QuerySpec};
use tscdn_core::scoring::Analyzer;
use tscdn_testkit::export::{render_page, write_file, PageMessage};
use tscdn_testkit::synth::at;
use tscdn_core::ingest::default_zone;

fn tscdn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tscdn"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = tscdn(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn export(root: &Path, texts: &[&str], video: &[u8]) {
    write_file(root, "video_files/clip.mp4", video);
    let msgs: Vec<PageMessage> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| PageMessage::new(i as u64 + 1, at(1_585_000_000 + i as i64 * 86_400), *t).with_media("video", "video_files/clip.mp4"))
        .collect();
    write_file(root, "messages.html", render_page(&msgs, default_zone()).as_bytes());
}

#[test]
fn pipeline_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let p = |s: &str| tmp.path().join(s).to_string_lossy().into_owned();
    let video = b"same clip in both channels".repeat(50);
    export(&tmp.path().join("ex_kf"), &["flood in the north", "fire and flood", "vaccine news"], &video);
    export(&tmp.path().join("ex_ar"), &["سیل در شمال", "flood warning"], &video);

    let out = ok(&["ingest", &p("ex_kf"), "--channel", "kf", "--out", &p("cdn_kf"), "--crawl-time", "2020-04-01T00:00:00Z"]);
    assert!(out.contains("3 messages"), "{out}");
    ok(&["ingest", &p("ex_ar"), "--channel", "ar", "--name", "Akhbar", "--out", &p("cdn_ar"), "--crawl-time", "2020-04-01", "--sequential"]);
    let out = ok(&["merge", &p("cdn"), &p("cdn_kf"), &p("cdn_ar")]);
    assert!(out.contains("1 deduplicated"), "{out}");

    let out = ok(&["index", &p("cdn"), "--coalesce", "--tau", "0.1"]);
    assert!(out.contains("5 events"), "{out}");
    assert!(Path::new(&p("cdn/index.coalesced.json")).is_file());

    let json = ok(&["query", "flood", "--cdn", &p("cdn"), "--json"]);
    let index = load_index(&tmp.path().join("cdn/index.json")).unwrap();
    let spec = QuerySpec { limit: Some(200), ..QuerySpec::new(["flood"]) };
    let expected = serde_json::to_string(&index.query(&Analyzer::default(), &spec).unwrap()).unwrap();
    assert_eq!(json.trim_end(), expected);
    assert_eq!(serde_json::from_str::<Vec<serde_json::Value>>(&json).unwrap().len(), 3);

    let table = ok(&["query", "flood", "--cdn", &p("cdn"), "--channels", "ar"]);
    assert!(table.contains("ar/2") && table.contains("flood warning"), "{table}");
    assert_eq!(table.lines().count(), 1);
    let none = ok(&["query", "earthquake", "--cdn", &p("cdn")]);
    assert_eq!(none.trim(), "no matches");

    let stats = ok(&["stats", &p("cdn")]);
    assert!(stats.contains("1 objects from 2 archives"), "{stats}");
    let stats: serde_json::Value = serde_json::from_str(&ok(&["stats", &p("cdn"), "--json"])).unwrap();
    assert_eq!(stats["media"]["total"]["decrease_pct"], 50.0);

    let listed = ok(&["export-json", &p("cdn"), "--out", &p("db")]);
    assert!(listed.contains("kf.json") && listed.contains("ar.json"), "{listed}");
    let kf: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("db/kf.json")).unwrap()).unwrap();
    assert_eq!(kf["messages"].as_array().unwrap().len(), 3);

    assert!(ok(&["verify", &p("cdn")]).contains("ok"));
    let object = fs::read_dir(tmp.path().join("cdn/objects")).unwrap().next().unwrap().unwrap().path();
    fs::write(&object, b"truncated").unwrap();
    let out = tscdn(&["verify", &p("cdn")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("problem"));
}

#[test]
fn helpful_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cdn = tmp.path().join("cdn");
    export(&tmp.path().join("ex"), &["flood"], b"v");
    let cdn_s = cdn.to_string_lossy();
    ok(&["ingest", &tmp.path().join("ex").to_string_lossy(), "--channel", "kf", "--out", &cdn_s, "--crawl-time", "2020-04-01"]);

    let out = tscdn(&["query", "flood", "--cdn", &cdn_s]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tscdn index"));

    let out = tscdn(&["serve", &cdn_s, "--port", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tscdn index"));

    let out = tscdn(&["ingest", &tmp.path().join("ex").to_string_lossy(), "--channel", "bad slug", "--out", &cdn_s]);
    assert_eq!(out.status.code(), Some(2));

    ok(&["index", &cdn_s]);
    let out = tscdn(&["query", "flood", "--cdn", &cdn_s, "--from", "2020-05-01", "--to", "2020-04-01"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid interval"));
    let out = tscdn(&["index", &cdn_s, "--coalesce", "--tau", "-1"]);
    assert_eq!(out.status.code(), Some(2));
}
