//! Command-line front end.

use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use chrono::{DateTime, FixedOffset, Utc};
use clap::{Args, Parser, Subcommand};
use tscdn_core::corpus::export_json_db;
use tscdn_core::diagnostics::write_json_lines;
use tscdn_core::index::{load_index, persist_index, read_index, CoalesceConfig, InvertedIndex, DEFAULT_TOLERANCE};
use tscdn_core::ingest::{parse_zone, IngestConfig, SourceMeta, DEFAULT_ZONE};
use tscdn_core::pipeline::{self, config_dir, default_archive_id, ingest_archive, load_corpus, merge_cdn};
use tscdn_core::scoring::Analyzer;
use tscdn_core::store::{ContentStore, DEFAULT_CDN_PREFIX};
use tscdn_core::Exec;

use crate::app::{self, coalesced_index_path, AppState};
use crate::params::{parse_instant, SearchParams, DEFAULT_LIMIT};

#[derive(Debug, Parser)]
#[command(name = "tscdn", version, about = "Content-addressed archive CDN and time-travel news search")]
pub struct Cli {
    /// Run every batch step on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Store the media of one channel export and record its messages.
    Ingest(IngestArgs),
    /// Fold other CDN directories into a master one.
    Merge {
        master: PathBuf,
        #[arg(required = true)]
        others: Vec<PathBuf>,
    },
    /// Build the search index from the recorded snapshots.
    Index {
        cdn: PathBuf,
        /// Also write a temporally coalesced index.
        #[arg(long)]
        coalesce: bool,
        /// Relative score band for coalescing.
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tau: f64,
    },
    /// Search the index.
    Query(QueryArgs),
    /// Storage and corpus statistics.
    Stats {
        cdn: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Write the corpus as per-channel JSON files.
    ExportJson {
        cdn: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check object sizes, snapshots and index checksums.
    Verify { cdn: PathBuf },
    /// Serve the HTTP API, media and an optional static UI.
    Serve {
        cdn: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory with a built explorer UI.
        #[arg(long)]
        ui: Option<PathBuf>,
        /// Fixed offset used for local weekdays.
        #[arg(long, default_value = DEFAULT_ZONE)]
        zone: String,
    },
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    pub export_dir: PathBuf,
    #[arg(long)]
    pub channel: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Display name; defaults to the slug.
    #[arg(long)]
    pub name: Option<String>,
    /// When the export was taken (ISO-8601); defaults to now.
    #[arg(long)]
    pub crawl_time: Option<String>,
    #[arg(long)]
    pub archive_id: Option<String>,
    /// Offset of the wall-clock times in the export.
    #[arg(long, default_value = DEFAULT_ZONE)]
    pub zone: String,
    /// URL prefix written into rewritten pages.
    #[arg(long, default_value = DEFAULT_CDN_PREFIX)]
    pub prefix: String,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    pub phrase: String,
    #[arg(long, default_value = ".")]
    pub cdn: PathBuf,
    #[arg(long)]
    pub from: Option<String>,
    #[arg(long)]
    pub to: Option<String>,
    /// Comma-separated channel slugs.
    #[arg(long)]
    pub channels: Option<String>,
    #[arg(long)]
    pub all_terms: bool,
    /// Use the coalesced index.
    #[arg(long)]
    pub coalesced: bool,
    #[arg(long, default_value_t = DEFAULT_LIMIT)]
    pub limit: usize,
    #[arg(long, default_value_t = 0)]
    pub offset: usize,
    /// Print the raw result array, as /api/search returns it.
    #[arg(long)]
    pub json: bool,
}

impl QueryArgs {
    pub fn params(&self) -> SearchParams {
        SearchParams {
            q: Some(self.phrase.clone()),
            from: self.from.clone(),
            to: self.to.clone(),
            channels: self.channels.clone(),
            all_terms: Some(self.all_terms.to_string()),
            coalesced: Some(self.coalesced.to_string()),
            limit: Some(self.limit.to_string()),
            offset: Some(self.offset.to_string()),
            ..Default::default()
        }
    }
}

fn zone(raw: &str) -> Result<FixedOffset> {
    parse_zone(raw).with_context(|| format!("invalid zone {raw:?}; use +HH:MM, -HH:MM or UTC"))
}

/// Returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::default() };
    match cli.command {
        Command::Ingest(a) => ingest(a, exec, out),
        Command::Merge { master, others } => merge(&master, &others, out),
        Command::Index { cdn, coalesce, tau } => index(&cdn, coalesce.then_some(tau), exec, out),
        Command::Query(a) => query(&a, out),
        Command::Stats { cdn, json } => stats(&cdn, json, out),
        Command::ExportJson { cdn, out: dir } => {
            let (corpus, _) = load_corpus(&cdn)?;
            for p in export_json_db(&corpus, &dir)? {
                writeln!(out, "{}", p.display())?;
            }
            Ok(0)
        }
        Command::Verify { cdn } => verify(&cdn, exec, out),
        Command::Serve { cdn, port, host, ui, zone: z } => {
            serve(&cdn, &host, port, ui.as_deref(), zone(&z)?)?;
            Ok(0)
        }
    }
}

fn ingest(a: IngestArgs, exec: Exec, out: &mut dyn Write) -> Result<i32> {
    let crawl_time: DateTime<Utc> = match &a.crawl_time {
        Some(raw) => parse_instant(raw, false).with_context(|| format!("invalid --crawl-time {raw:?}"))?,
        None => Utc::now(),
    };
    let source = SourceMeta {
        channel_name: a.name.clone().unwrap_or_else(|| a.channel.clone()),
        channel_slug: a.channel.clone(),
        export_root: a.export_dir.clone(),
        crawl_time,
    };
    let archive_id = a.archive_id.clone().unwrap_or_else(|| default_archive_id(&a.channel, crawl_time));
    let cfg = IngestConfig {
        zone: zone(&a.zone)?,
        exec,
        ..Default::default()
    };
    let mut store = ContentStore::open(&a.out)?;
    let report = ingest_archive(&mut store, &source, &archive_id, &cfg, &a.prefix)?;
    let diag_dir = a.out.join("diagnostics");
    fs::create_dir_all(&diag_dir)?;
    let diag_path = diag_dir.join(format!("{archive_id}.jsonl"));
    write_json_lines(io::BufWriter::new(fs::File::create(&diag_path)?), &report.diagnostics)?;
    writeln!(
        out,
        "archive {}: {} pages, {} messages, {} media links, {} files, {} new objects, {} references rewritten, {} diagnostics",
        report.archive_id,
        report.pages,
        report.messages,
        report.media_links,
        report.files_stored,
        report.objects_written,
        report.references_rewritten,
        report.diagnostics.len()
    )?;
    if !report.diagnostics.is_empty() {
        writeln!(out, "diagnostics written to {}", diag_path.display())?;
    }
    Ok(0)
}

fn merge(master: &Path, others: &[PathBuf], out: &mut dyn Write) -> Result<i32> {
    let mut store = ContentStore::open(master)?;
    for other in others {
        let r = merge_cdn(&mut store, other).with_context(|| format!("merging {}", other.display()))?;
        writeln!(
            out,
            "{}: {} objects added, {} deduplicated, {} bytes saved, {} snapshots, {} pages",
            other.display(),
            r.store.objects_added,
            r.store.objects_deduplicated,
            r.store.bytes_saved,
            r.snapshots_copied,
            r.pages_copied
        )?;
    }
    store.save()?;
    Ok(0)
}

fn index(cdn: &Path, tau: Option<f64>, exec: Exec, out: &mut dyn Write) -> Result<i32> {
    let cfg = tau.map(CoalesceConfig::new).transpose()?;
    let (corpus, report) = load_corpus(cdn)?;
    let analyzer = Analyzer::from_config_dir(&config_dir(cdn))?;
    let index = InvertedIndex::build(&corpus, &analyzer, exec)?;
    persist_index(&index, &pipeline::index_path(cdn))?;
    writeln!(
        out,
        "{} events, {} versions, {} terms, {} postings ({} messages excluded for invalid dates)",
        corpus.event_count(),
        corpus.version_count(),
        index.term_count(),
        index.entry_count(),
        report.excluded_invalid
    )?;
    if let Some(cfg) = cfg {
        let merged = index.coalesced(cfg, exec)?;
        persist_index(&merged, &coalesced_index_path(cdn))?;
        writeln!(out, "coalesced with tau {}: {} postings", cfg.tolerance, merged.entry_count())?;
    }
    Ok(0)
}

fn query(a: &QueryArgs, out: &mut dyn Write) -> Result<i32> {
    let path = if a.coalesced {
        coalesced_index_path(&a.cdn)
    } else {
        pipeline::index_path(&a.cdn)
    };
    if !path.is_file() {
        bail!("no index at {}; run `tscdn index {}{}` first", path.display(), a.cdn.display(), if a.coalesced { " --coalesce" } else { "" });
    }
    let index = load_index(&path)?;
    let analyzer = Analyzer::from_config_dir(&config_dir(&a.cdn))?;
    let spec = a.params().to_spec(None)?;
    let results = index.query(&analyzer, &spec)?;
    if a.json {
        out.write_all(&serde_json::to_vec(&results)?)?;
        writeln!(out)?;
        return Ok(0);
    }
    let (corpus, _) = load_corpus(&a.cdn)?;
    for (rank, r) in results.iter().enumerate() {
        let text = corpus
            .events
            .get(&r.event)
            .and_then(|vs| vs.iter().find(|v| v.timestamp == r.timestamp))
            .map(|v| v.text.as_str())
            .unwrap_or_default();
        writeln!(
            out,
            "{:>4}  {:.4}  {:>8.4}  {}  {:<20}  {}",
            rank + 1 + a.offset,
            r.cosine,
            r.tf_ief_sum,
            r.timestamp.format("%Y-%m-%d %H:%M"),
            r.event.to_string(),
            snippet(text, 60)
        )?;
    }
    if results.is_empty() {
        writeln!(out, "no matches")?;
    }
    Ok(0)
}

fn snippet(text: &str, max: usize) -> String {
    let flat: String = text.split_whitespace().collect::<Vec<_>>().join(" ");
    if flat.chars().count() <= max {
        flat
    } else {
        flat.chars().take(max).chain("...".chars()).collect()
    }
}

fn stats(cdn: &Path, json: bool, out: &mut dyn Write) -> Result<i32> {
    let store = ContentStore::open_existing(cdn)?;
    let (corpus, _) = load_corpus(cdn)?;
    let media = store.stats();
    if json {
        let body = serde_json::json!({
            "objects": store.object_count(),
            "archives": store.dictionaries().len(),
            "channels": corpus.channels.len(),
            "events": corpus.event_count(),
            "versions": corpus.version_count(),
            "media": media,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&body)?)?;
        return Ok(0);
    }
    writeln!(
        out,
        "{} objects from {} archives; {} channels, {} events, {} versions",
        store.object_count(),
        store.dictionaries().len(),
        corpus.channels.len(),
        corpus.event_count(),
        corpus.version_count()
    )?;
    writeln!(out, "{:<10} {:>8} {:>8} {:>14} {:>14} {:>9}", "class", "before", "after", "bytes before", "bytes after", "decrease")?;
    let rows = media.classes.iter().map(|(c, s)| (c.as_str(), s));
    for (name, s) in rows.chain(std::iter::once(("total", &media.total))) {
        writeln!(
            out,
            "{:<10} {:>8} {:>8} {:>14} {:>14} {:>8.1}%",
            name, s.items_before, s.items_after, s.bytes_before, s.bytes_after, s.decrease_pct
        )?;
    }
    Ok(0)
}

fn verify(cdn: &Path, exec: Exec, out: &mut dyn Write) -> Result<i32> {
    let store = ContentStore::open_existing(cdn)?;
    let report = store.verify_integrity_with(exec);
    let mut problems = report.problems.iter().map(|p| format!("{}: {}", p.object, p.problem)).collect::<Vec<_>>();
    if let Err(e) = load_corpus(cdn) {
        problems.push(format!("snapshots: {e}"));
    }
    for path in [pipeline::index_path(cdn), coalesced_index_path(cdn)] {
        if path.is_file() {
            if let Err(e) = fs::read(&path).map_err(anyhow::Error::from).and_then(|b| Ok(read_index(&b)?)) {
                problems.push(format!("{}: {e}", path.display()));
            }
        }
    }
    writeln!(out, "checked {} objects", report.checked)?;
    for p in &problems {
        writeln!(out, "problem: {p}")?;
    }
    if problems.is_empty() {
        writeln!(out, "ok")?;
        Ok(0)
    } else {
        writeln!(out, "{} problems", problems.len())?;
        Ok(1)
    }
}

fn serve(cdn: &Path, host: &str, port: u16, ui: Option<&Path>, zone: FixedOffset) -> Result<()> {
    if let Some(ui) = ui {
        if !ui.is_dir() {
            bail!("--ui {} is not a directory", ui.display());
        }
    }
    let state = Arc::new(AppState::load(cdn, zone)?);
    let addr: SocketAddr = format!("{host}:{port}").parse().with_context(|| format!("invalid address {host}:{port}"))?;
    let router = app::router(state, ui);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("cannot bind {addr}"))?;
        log::info!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, router)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
