//! Local media references inside export markup.

use std::ops::Range;

use percent_encoding::percent_decode_str;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::html::{decoded, tokenize, Token};
use crate::media::MediaKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkAttribute {
    Src,
    Href,
    Poster,
}

impl LinkAttribute {
    fn from_name(name: &str) -> Option<Self> {
        match name {
            "src" => Some(LinkAttribute::Src),
            "href" => Some(LinkAttribute::Href),
            "poster" => Some(LinkAttribute::Poster),
            _ => None,
        }
    }
}

/// A relative reference found in a `src`, `href` or `poster` attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalLink {
    pub attribute: LinkAttribute,
    /// The attribute value exactly as written in the markup.
    pub raw_path: String,
    /// Path relative to the export root: entity- and percent-decoded, NFC,
    /// with `.` and `..` segments resolved.
    pub resolved_path: String,
    pub kind: MediaKind,
    /// Percent-decoding produced invalid UTF-8; `resolved_path` was built
    /// from the undecoded value.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub decode_failed: bool,
}

impl LocalLink {
    /// Links to other export pages (pagination) are not media.
    pub fn is_media(&self) -> bool {
        !crate::media::is_page_link(&self.resolved_path)
    }
}

/// A link plus the byte span of its attribute value in the scanned document.
#[derive(Debug, Clone)]
pub(crate) struct LinkSite {
    pub link: LocalLink,
    pub value_span: Range<usize>,
}

/// Every relative `src`/`href`/`poster` reference in document order.
/// Equivalent to [`extract_links_in`] with the export root as base.
pub fn extract_links(html_fragment: &[u8]) -> Vec<LocalLink> {
    extract_links_in(html_fragment, "")
}

/// Like [`extract_links`], resolving paths against `base_dir`, the directory
/// of the page relative to the export root. References that would escape
/// the export root are dropped.
pub fn extract_links_in(html_fragment: &[u8], base_dir: &str) -> Vec<LocalLink> {
    link_sites(html_fragment, base_dir)
        .into_iter()
        .map(|s| s.link)
        .collect()
}

pub(crate) fn link_sites(src: &[u8], base_dir: &str) -> Vec<LinkSite> {
    let mut out = Vec::new();
    for tok in tokenize(src) {
        let Token::Start(tag) = tok else { continue };
        for attr in tag.attrs {
            let (Some(attribute), Some(span)) = (LinkAttribute::from_name(&attr.name), attr.value)
            else {
                continue;
            };
            let raw_path = String::from_utf8_lossy(&src[span.clone()]).into_owned();
            let value = decoded(src, span.clone());
            if let Some((resolved_path, decode_failed)) = resolve(&value, base_dir) {
                let kind = MediaKind::from_path(&resolved_path);
                out.push(LinkSite {
                    link: LocalLink {
                        attribute,
                        raw_path,
                        resolved_path,
                        kind,
                        decode_failed,
                    },
                    value_span: span,
                });
            }
        }
    }
    out
}

/// True when the value carries a URI scheme (`https:`, `data:`, `tg:`...).
fn has_scheme(v: &str) -> bool {
    let mut chars = v.char_indices();
    match chars.next() {
        Some((_, c)) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    for (_, c) in chars {
        if c == ':' {
            return true;
        }
        if !(c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.')) {
            return false;
        }
    }
    false
}

/// Resolves an attribute value to a root-relative path, or `None` when the
/// value is not a relative path (external, fragment-only, absolute) or
/// escapes the root.
pub(crate) fn resolve(value: &str, base_dir: &str) -> Option<(String, bool)> {
    let v = value.trim();
    if v.is_empty() || v.starts_with(['#', '?', '/', '\\']) || has_scheme(v) {
        return None;
    }
    let v = v.split(['?', '#']).next().unwrap_or_default();
    if v.is_empty() {
        return None;
    }
    let (decoded, failed) = match percent_decode_str(v).decode_utf8() {
        Ok(d) => (d.into_owned(), false),
        Err(_) => (v.to_owned(), true),
    };
    let decoded: String = decoded.nfc().collect();
    let path = normalize_segments(base_dir, &decoded)?;
    if path.is_empty() {
        return None;
    }
    Some((path, failed))
}

/// Joins `rel` onto `base` and resolves dot segments. `None` if the result
/// would climb above the root.
pub(crate) fn normalize_segments(base: &str, rel: &str) -> Option<String> {
    let mut parts: Vec<&str> = Vec::new();
    for seg in base.split(['/', '\\']).chain(rel.split(['/', '\\'])) {
        match seg {
            "" | "." => {}
            ".." => {
                parts.pop()?;
            }
            s => parts.push(s),
        }
    }
    Some(parts.join("/"))
}
