//! Writers for Telegram Desktop style HTML exports.

use std::fs;
use std::path::Path;

use chrono::{DateTime, FixedOffset, Utc};

#[derive(Debug, Clone)]
pub struct PageMessage {
    pub id: u64,
    pub date: DateTime<Utc>,
    pub text: String,
    /// (tag, attribute value) pairs such as `("video", "video_files/7.mp4")`.
    pub media: Vec<(&'static str, String)>,
    pub views: Option<u64>,
}

impl PageMessage {
    pub fn new(id: u64, date: DateTime<Utc>, text: impl Into<String>) -> Self {
        PageMessage {
            id,
            date,
            text: text.into(),
            media: Vec::new(),
            views: None,
        }
    }

    pub fn with_media(mut self, tag: &'static str, path: impl Into<String>) -> Self {
        self.media.push((tag, path.into()));
        self
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Export date attribute, `DD.MM.YYYY HH:MM:SS` in `zone`.
pub fn export_date(t: DateTime<Utc>, zone: FixedOffset) -> String {
    t.with_timezone(&zone).format("%d.%m.%Y %H:%M:%S").to_string()
}

pub fn render_page(messages: &[PageMessage], zone: FixedOffset) -> String {
    let mut out = String::from(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"/>\
         <link href=\"css/style.css\" rel=\"stylesheet\"/></head><body>\n<div class=\"history\">\n",
    );
    for m in messages {
        out.push_str(&format!(
            "<div class=\"message default clearfix\" id=\"message{}\"><div class=\"body\">\n\
             <div class=\"pull_right date details\" title=\"{}\">{}</div>\n\
             <div class=\"from_name\">Channel</div>\n",
            m.id,
            export_date(m.date, zone),
            m.date.with_timezone(&zone).format("%H:%M"),
        ));
        for (tag, path) in &m.media {
            let attr = if *tag == "a" { "href" } else { "src" };
            out.push_str(&format!(
                "<div class=\"media_wrap clearfix\"><{tag} {attr}=\"{}\"></{tag}></div>\n",
                escape(path)
            ));
        }
        if !m.text.is_empty() {
            out.push_str(&format!("<div class=\"text\">{}</div>\n", escape(&m.text)));
        }
        if let Some(v) = m.views {
            out.push_str(&format!("<div class=\"views\">{v}</div>\n"));
        }
        out.push_str("</div></div>\n");
    }
    out.push_str("</div></body></html>\n");
    out
}

pub fn write_file(root: &Path, rel: &str, bytes: &[u8]) {
    let p = root.join(rel);
    fs::create_dir_all(p.parent().unwrap()).unwrap();
    fs::write(p, bytes).unwrap();
}
