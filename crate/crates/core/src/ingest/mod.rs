//! Reading exported channel archives: directory scan, page parsing, link
//! extraction and date normalization.
//!
//! The page layout is described by an [`ExportProfile`]; the default matches
//! the Telegram Desktop "Export chat history" HTML format, where each message
//! is a `div.message` carrying an `id="message<N>"`, a `.date` element whose
//! `title` holds the full timestamp, an optional `.text` body, an optional
//! `.forwarded` block, and media anchors/images.

mod html;
mod links;
mod timestamp;

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, FixedOffset, Utc};
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;
use walkdir::WalkDir;

pub use links::{extract_links, extract_links_in, LinkAttribute, LocalLink};
pub use timestamp::{default_zone, normalize_timestamp, parse_zone, DEFAULT_ZONE};

pub(crate) use html::Document;
pub(crate) use links::link_sites;

use crate::diagnostics::Diagnostic;
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Identity of one crawled channel export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceMeta {
    pub channel_name: String,
    pub channel_slug: String,
    pub export_root: PathBuf,
    pub crawl_time: DateTime<Utc>,
}

impl SourceMeta {
    pub fn validate(&self) -> Result<()> {
        validate_slug(&self.channel_slug)?;
        if !self.export_root.is_dir() {
            return Err(Error::InvalidSource(format!(
                "export root {} is not a readable directory",
                self.export_root.display()
            )));
        }
        Ok(())
    }
}

/// Slugs are non-empty ASCII identifiers: letters, digits, `_` and `-`.
pub fn validate_slug(slug: &str) -> Result<()> {
    if slug.is_empty()
        || !slug
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
    {
        return Err(Error::InvalidSource(format!(
            "channel slug {slug:?} must be a non-empty ASCII identifier"
        )));
    }
    Ok(())
}

/// CSS-class conventions used to find messages in export markup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExportProfile {
    pub message_class: String,
    /// Message blocks carrying any of these classes are not messages.
    pub skip_classes: Vec<String>,
    /// Prefix stripped from the block's `id` attribute to get the message id.
    pub id_prefix: String,
    pub date_class: String,
    pub date_attr: String,
    pub text_class: String,
    pub views_class: String,
    pub forwarded_class: String,
    pub from_name_class: String,
}

impl Default for ExportProfile {
    fn default() -> Self {
        ExportProfile {
            message_class: "message".into(),
            skip_classes: vec!["service".into()],
            id_prefix: "message".into(),
            date_class: "date".into(),
            date_attr: "title".into(),
            text_class: "text".into(),
            views_class: "views".into(),
            forwarded_class: "forwarded".into(),
            from_name_class: "from_name".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IngestConfig {
    pub profile: ExportProfile,
    pub zone: FixedOffset,
    pub exec: Exec,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            profile: ExportProfile::default(),
            zone: default_zone(),
            exec: Exec::default(),
        }
    }
}

/// One message as found in an export page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawMessage {
    pub source_ordinal: u32,
    pub message_id: String,
    /// `None` marks an unparseable or out-of-range date; such messages are
    /// kept but never indexed.
    pub timestamp: Option<DateTime<Utc>>,
    pub raw_date: String,
    pub text: String,
    pub media_links: Vec<LocalLink>,
    pub views: Option<u64>,
    pub forwarded_from: Option<String>,
    /// Page the message came from, relative to the export root.
    pub page: String,
}

/// An export page: path relative to the export root (NFC, `/`-separated)
/// and its raw bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportPage {
    pub rel_path: String,
    pub bytes: Vec<u8>,
}

impl ExportPage {
    /// Directory of the page relative to the export root.
    pub fn base_dir(&self) -> &str {
        self.rel_path.rsplit_once('/').map_or("", |(d, _)| d)
    }
}

/// Deterministic stream of export pages, in lexicographic path order.
#[derive(Debug)]
pub struct ExportScan {
    root: PathBuf,
    files: std::vec::IntoIter<(String, PathBuf)>,
}

impl ExportScan {
    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.len() == 0
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
}

impl Iterator for ExportScan {
    type Item = std::result::Result<ExportPage, Diagnostic>;

    fn next(&mut self) -> Option<Self::Item> {
        let (rel_path, abs) = self.files.next()?;
        Some(match fs::read(&abs) {
            Ok(bytes) => Ok(ExportPage { rel_path, bytes }),
            Err(e) => Err(Diagnostic::new("unreadable_page", e.to_string()).at(rel_path)),
        })
    }
}

fn rel_string(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    let parts: Vec<String> = rel
        .components()
        .map(|c| c.as_os_str().to_string_lossy().nfc().collect())
        .collect();
    parts.join("/")
}

/// Lists every `.html`/`.htm` file under `export_root`.
pub fn scan_export(export_root: &Path) -> Result<ExportScan> {
    let mut files = Vec::new();
    for entry in WalkDir::new(export_root).follow_links(false) {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(export_root).to_path_buf();
            Error::ExportUnreadable {
                path,
                source: e.into(),
            }
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let ext = entry
            .path()
            .extension()
            .map(|e| e.to_string_lossy().to_ascii_lowercase());
        if matches!(ext.as_deref(), Some("html" | "htm")) {
            files.push((rel_string(export_root, entry.path()), entry.into_path()));
        }
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(ExportScan {
        root: export_root.to_path_buf(),
        files: files.into_iter(),
    })
}

/// Messages and warnings from one page.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedPage {
    pub messages: Vec<RawMessage>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Parses one page. `page_path` is the page's path relative to the export
/// root; it names synthesized message ids and is the base for relative links.
/// Never fails: malformed markup yields fewer messages and more diagnostics.
pub fn parse_export(
    html_bytes: &[u8],
    page_path: &str,
    source: &SourceMeta,
    cfg: &IngestConfig,
) -> ParsedPage {
    let mut diagnostics = Vec::new();
    if std::str::from_utf8(html_bytes).is_err() {
        diagnostics.push(
            Diagnostic::new("lossy_utf8", "page is not valid UTF-8; replacement characters used")
                .at(page_path),
        );
    }
    let base_dir = page_path.rsplit_once('/').map_or("", |(d, _)| d);
    let profile = &cfg.profile;
    let doc = Document::parse(html_bytes);

    let mut messages = Vec::new();
    let mut inside_message: Option<std::ops::Range<usize>> = None;
    for el in doc.preorder() {
        let outer = doc.elements[el].outer.clone();
        if let Some(r) = &inside_message {
            if outer.start < r.end {
                continue;
            }
        }
        if doc.elements[el].name != "div" || !doc.has_class(el, &profile.message_class) {
            continue;
        }
        inside_message = Some(outer.clone());
        if profile.skip_classes.iter().any(|c| doc.has_class(el, c)) {
            continue;
        }
        let ordinal = messages.len() as u32;
        let message_id = doc
            .attr(el, "id")
            .filter(|id| !id.is_empty())
            .map(|id| {
                id.strip_prefix(profile.id_prefix.as_str())
                    .filter(|s| !s.is_empty())
                    .unwrap_or(&id)
                    .to_owned()
            })
            .unwrap_or_else(|| format!("{page_path}#{ordinal}"));

        let date_attr = profile.date_attr.as_str();
        let raw_date = doc
            .find_descendant(el, &|d| {
                doc.has_class(d, &profile.date_class) && doc.attr(d, date_attr).is_some()
            })
            .and_then(|d| doc.attr(d, date_attr))
            .unwrap_or_default();
        let timestamp = normalize_timestamp(&raw_date, cfg.zone)
            .filter(|t| *t <= source.crawl_time);
        if timestamp.is_none() {
            diagnostics.push(
                Diagnostic::new(
                    "invalid_timestamp",
                    format!("message {message_id}: unusable date {raw_date:?}"),
                )
                .at(page_path),
            );
        }

        let text = doc
            .find_descendant(el, &|d| doc.has_class(d, &profile.text_class))
            .map(|d| doc.text(d).trim().nfc().collect())
            .unwrap_or_default();
        let views = doc
            .find_descendant(el, &|d| doc.has_class(d, &profile.views_class))
            .and_then(|d| parse_count(&doc.text(d)));
        let forwarded_from = doc
            .find_descendant(el, &|d| doc.has_class(d, &profile.forwarded_class))
            .and_then(|fw| doc.find_descendant(fw, &|d| doc.has_class(d, &profile.from_name_class)))
            .map(|d| doc.own_text(d).trim().nfc().collect::<String>())
            .filter(|s| !s.is_empty());

        let media_links = extract_links_in(&html_bytes[outer], base_dir);
        messages.push(RawMessage {
            source_ordinal: ordinal,
            message_id,
            timestamp,
            raw_date,
            text,
            media_links,
            views,
            forwarded_from,
            page: page_path.to_owned(),
        });
    }
    if messages.is_empty() {
        diagnostics.push(Diagnostic::new("no_messages", "no message blocks found").at(page_path));
    }
    ParsedPage {
        messages,
        diagnostics,
    }
}

/// View counters: `1234`, `12,345`, `1.2K`, `3M`.
fn parse_count(s: &str) -> Option<u64> {
    let s: String = s.trim().chars().filter(|c| *c != ',' && *c != ' ').collect();
    let (num, mult) = match s.chars().last()? {
        'K' | 'k' => (&s[..s.len() - 1], 1_000.0),
        'M' | 'm' => (&s[..s.len() - 1], 1_000_000.0),
        _ => (s.as_str(), 1.0),
    };
    if mult == 1.0 {
        return num.parse().ok();
    }
    let v: f64 = num.parse().ok()?;
    (v >= 0.0).then(|| (v * mult).round() as u64)
}

/// All messages of one export with their pages, in (page path, ordinal)
/// order, renumbered so `source_ordinal` is unique across the export.
#[derive(Debug, Clone, Default)]
pub struct ParsedExport {
    pub pages: Vec<ExportPage>,
    pub messages: Vec<RawMessage>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Scans and parses a whole export. Pages are parsed in parallel under
/// [`Exec::Parallel`]; the merged result is identical in both modes.
pub fn parse_all(source: &SourceMeta, cfg: &IngestConfig) -> Result<ParsedExport> {
    source.validate()?;
    let mut out = ParsedExport::default();
    for item in scan_export(&source.export_root)? {
        match item {
            Ok(page) => out.pages.push(page),
            Err(d) => out.diagnostics.push(d),
        }
    }
    let parsed = cfg.exec.map(&out.pages, |p| {
        parse_export(&p.bytes, &p.rel_path, source, cfg)
    });
    let mut next = 0u32;
    for page in parsed {
        for mut m in page.messages {
            m.source_ordinal = next;
            next += 1;
            out.messages.push(m);
        }
        out.diagnostics.extend(page.diagnostics);
    }
    Ok(out)
}
