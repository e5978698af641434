//! Media classification by file extension.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaKind {
    Video,
    Image,
    Audio,
    Document,
    Css,
    Js,
    Sticker,
    Icon,
    Other,
}

impl MediaKind {
    pub const ALL: [MediaKind; 9] = [
        MediaKind::Video,
        MediaKind::Image,
        MediaKind::Audio,
        MediaKind::Document,
        MediaKind::Css,
        MediaKind::Js,
        MediaKind::Sticker,
        MediaKind::Icon,
        MediaKind::Other,
    ];

    /// Classifies a lowercase extension (without the dot). Total: anything
    /// unknown is `Other`.
    pub fn from_extension(ext: &str) -> MediaKind {
        match ext {
            "mp4" | "m4v" | "mkv" | "webm" | "mov" | "avi" | "3gp" | "mpg" | "mpeg" | "wmv"
            | "flv" => MediaKind::Video,
            "jpg" | "jpeg" | "png" | "gif" | "webp" | "bmp" | "svg" | "tif" | "tiff" | "heic" => {
                MediaKind::Image
            }
            "mp3" | "ogg" | "oga" | "opus" | "wav" | "m4a" | "aac" | "flac" | "wma" => {
                MediaKind::Audio
            }
            "pdf" | "doc" | "docx" | "xls" | "xlsx" | "ppt" | "pptx" | "txt" | "rtf" | "odt"
            | "csv" | "zip" | "rar" | "7z" | "epub" | "apk" => MediaKind::Document,
            "css" => MediaKind::Css,
            "js" | "mjs" => MediaKind::Js,
            "tgs" => MediaKind::Sticker,
            "ico" => MediaKind::Icon,
            _ => MediaKind::Other,
        }
    }

    pub fn from_path(path: &str) -> MediaKind {
        MediaKind::from_extension(&extension_of(path))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MediaKind::Video => "video",
            MediaKind::Image => "image",
            MediaKind::Audio => "audio",
            MediaKind::Document => "document",
            MediaKind::Css => "css",
            MediaKind::Js => "js",
            MediaKind::Sticker => "sticker",
            MediaKind::Icon => "icon",
            MediaKind::Other => "other",
        }
    }

    /// The coarse class used by the JSON message database.
    pub fn db_class(self) -> &'static str {
        match self {
            MediaKind::Video => "video",
            MediaKind::Image => "image",
            MediaKind::Audio => "audio",
            MediaKind::Document => "document",
            _ => "other",
        }
    }

    /// The class used by archive volume statistics.
    pub fn stats_class(self) -> StatsClass {
        match self {
            MediaKind::Video => StatsClass::Video,
            MediaKind::Image => StatsClass::Image,
            MediaKind::Css | MediaKind::Js => StatsClass::CssJs,
            _ => StatsClass::Misc,
        }
    }
}

impl fmt::Display for MediaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MediaKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MediaKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown media kind {s:?}"))
    }
}

/// Buckets reported by [`ArchiveStats`](crate::store::ArchiveStats).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatsClass {
    Video,
    Image,
    CssJs,
    Misc,
}

impl StatsClass {
    pub const ALL: [StatsClass; 4] = [
        StatsClass::Video,
        StatsClass::Image,
        StatsClass::CssJs,
        StatsClass::Misc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StatsClass::Video => "video",
            StatsClass::Image => "image",
            StatsClass::CssJs => "css_js",
            StatsClass::Misc => "misc",
        }
    }
}

/// Lowercase ASCII extension of the last path segment, without the dot.
/// Non-ASCII or overlong "extensions" are treated as no extension.
pub fn extension_of(path: &str) -> String {
    let name = path.rsplit(['/', '\\']).next().unwrap_or(path);
    match name.rfind('.') {
        Some(i) if i > 0 && i + 1 < name.len() => {
            let ext = &name[i + 1..];
            if ext.len() <= 10 && ext.bytes().all(|b| b.is_ascii_alphanumeric()) {
                ext.to_ascii_lowercase()
            } else {
                String::new()
            }
        }
        _ => String::new(),
    }
}

/// True for links to other export pages rather than media.
pub fn is_page_link(path: &str) -> bool {
    matches!(extension_of(path).as_str(), "html" | "htm")
}
