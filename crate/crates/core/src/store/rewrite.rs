//! In-place rewriting of media references to stored object names.

use super::{parse_stored_name, DictEntry, PathDictionary};
use crate::diagnostics::Diagnostic;
use crate::ingest::link_sites;

/// URL prefix under which the HTTP service serves stored objects.
pub const DEFAULT_CDN_PREFIX: &str = "/cdn";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rewrite {
    pub html: Vec<u8>,
    pub rewritten: usize,
    pub diagnostics: Vec<Diagnostic>,
}

/// Replaces every media link found in `dictionary` with
/// `<cdn_prefix>/<stored name>`. Only attribute values change; every other
/// byte is copied through. Links already pointing into the prefix are left
/// alone, which makes the operation idempotent. Unmapped or missing links
/// stay as they are and produce a diagnostic.
pub fn rewrite_references(
    html: &[u8],
    base_dir: &str,
    dictionary: &PathDictionary,
    cdn_prefix: &str,
) -> Rewrite {
    let prefix = cdn_prefix.trim_end_matches('/');
    let mut out = Vec::with_capacity(html.len());
    let mut cursor = 0;
    let mut rewritten = 0;
    let mut diagnostics = Vec::new();

    for site in link_sites(html, base_dir) {
        if !site.link.is_media() || points_into_prefix(&site.link.raw_path, prefix) {
            continue;
        }
        match dictionary.get(&site.link.resolved_path) {
            Some(DictEntry::Stored(name)) => {
                out.extend_from_slice(&html[cursor..site.value_span.start]);
                out.extend_from_slice(prefix.as_bytes());
                out.push(b'/');
                out.extend_from_slice(name.as_bytes());
                cursor = site.value_span.end;
                rewritten += 1;
            }
            Some(DictEntry::Missing) => diagnostics.push(
                Diagnostic::new("missing_media", "link target was missing at ingest; left unchanged")
                    .at(site.link.resolved_path),
            ),
            None => diagnostics.push(
                Diagnostic::new("unmapped_link", "link has no dictionary entry; left unchanged")
                    .at(site.link.resolved_path),
            ),
        }
    }
    out.extend_from_slice(&html[cursor..]);
    Rewrite {
        html: out,
        rewritten,
        diagnostics,
    }
}

fn points_into_prefix(raw: &str, prefix: &str) -> bool {
    raw.strip_prefix(prefix)
        .and_then(|rest| rest.strip_prefix('/'))
        .is_some_and(|name| parse_stored_name(name).is_some())
}
