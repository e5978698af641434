//! Export date strings to UTC instants.

use chrono::{DateTime, FixedOffset, NaiveDateTime, TimeZone, Utc};

/// Local offset assumed for export wall-clock times when none is given.
pub const DEFAULT_ZONE: &str = "+03:30";

/// Parses `+HH:MM`, `-HH:MM`, `+HHMM`, `Z` or `UTC` into a fixed offset.
pub fn parse_zone(s: &str) -> Option<FixedOffset> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("z") || s.eq_ignore_ascii_case("utc") {
        return FixedOffset::east_opt(0);
    }
    let (sign, rest) = match s.as_bytes().first()? {
        b'+' => (1, &s[1..]),
        b'-' => (-1, &s[1..]),
        _ => return None,
    };
    let (h, m) = match rest.split_once(':') {
        Some((h, m)) => (h, m),
        None if rest.len() == 4 => rest.split_at(2),
        None if rest.len() <= 2 => (rest, "0"),
        None => return None,
    };
    let h: i32 = h.parse().ok()?;
    let m: i32 = m.parse().ok()?;
    if !(0..=23).contains(&h) || !(0..=59).contains(&m) {
        return None;
    }
    FixedOffset::east_opt(sign * (h * 3600 + m * 60))
}

pub fn default_zone() -> FixedOffset {
    parse_zone(DEFAULT_ZONE).expect("default zone is valid")
}

/// Converts an export date string to UTC.
///
/// Accepted: `DD.MM.YYYY HH:MM[:SS]` (optionally followed by ` UTC±HH:MM`,
/// which then overrides `assumed_zone`), RFC 3339 with offset, and naive
/// ISO-8601 `YYYY-MM-DD[T ]HH:MM[:SS[.f]]` read in `assumed_zone`.
/// Everything else, and anything before 1970, yields `None`.
pub fn normalize_timestamp(raw: &str, assumed_zone: FixedOffset) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    let t = parse_any(raw, assumed_zone)?;
    (t.timestamp() >= 0).then_some(t)
}

fn parse_any(raw: &str, zone: FixedOffset) -> Option<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Some(t.with_timezone(&Utc));
    }
    let (body, zone) = match raw.rsplit_once(" UTC") {
        Some((body, "")) => (body, FixedOffset::east_opt(0)?),
        Some((body, off)) => (body, parse_zone(off)?),
        None => (raw, zone),
    };
    const FORMATS: &[&str] = &[
        "%d.%m.%Y %H:%M:%S",
        "%d.%m.%Y %H:%M",
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%d %H:%M",
    ];
    let naive = FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(body, f).ok())?;
    zone.from_local_datetime(&naive)
        .single()
        .map(|t| t.with_timezone(&Utc))
}
