//! Query-string parameters shared by the HTTP API and the CLI.

use std::fmt;

use chrono::{DateTime, NaiveDate, NaiveDateTime, NaiveTime, Utc};
use serde::Deserialize;
use tscdn_core::analytics::{Granularity, YearMonth};
use tscdn_core::index::QuerySpec;

/// Default page size for `/api/search`.
pub const DEFAULT_LIMIT: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamError {
    pub code: &'static str,
    pub message: String,
}

impl ParamError {
    fn invalid(name: &str, value: &str, expected: &str) -> Self {
        ParamError {
            code: "invalid_parameter",
            message: format!("parameter {name}={value:?}: expected {expected}"),
        }
    }
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for ParamError {}

/// Parses an ISO-8601 date or date-time, UTC unless an offset is given. A
/// bare date means the start of that day, or its last instant when
/// `end_of_day` is set.
pub fn parse_instant(raw: &str, end_of_day: bool) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(t.and_utc());
        }
    }
    let day = NaiveDate::parse_from_str(raw, "%Y-%m-%d").ok()?;
    let time = if end_of_day {
        NaiveTime::from_hms_nano_opt(23, 59, 59, 999_999_999)?
    } else {
        NaiveTime::MIN
    };
    Some(day.and_time(time).and_utc())
}

fn instant(name: &str, raw: &Option<String>, end_of_day: bool) -> Result<Option<DateTime<Utc>>, ParamError> {
    match raw.as_deref().map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) => parse_instant(s, end_of_day)
            .map(Some)
            .ok_or_else(|| ParamError::invalid(name, s, "an ISO-8601 date or date-time")),
    }
}

pub fn parse_bool(name: &str, raw: &Option<String>) -> Result<bool, ParamError> {
    match raw.as_deref().map(str::trim) {
        None | Some("") | Some("false") | Some("0") | Some("no") => Ok(false),
        Some("true") | Some("1") | Some("yes") => Ok(true),
        Some(s) => Err(ParamError::invalid(name, s, "true or false")),
    }
}

fn number(name: &str, raw: &Option<String>) -> Result<Option<usize>, ParamError> {
    match raw.as_deref().map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) => s
            .parse()
            .map(Some)
            .map_err(|_| ParamError::invalid(name, s, "a non-negative integer")),
    }
}

/// Comma-separated list, empty items dropped; `None` when nothing is left.
pub fn parse_list(raw: &Option<String>) -> Option<Vec<String>> {
    let items: Vec<String> = raw
        .as_deref()?
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect();
    (!items.is_empty()).then_some(items)
}

/// Parameters of `/api/search`, `/api/trends`, `/api/weekend` and
/// `/api/daily`. All values arrive as strings so malformed input yields a
/// structured error rather than a bare rejection.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct SearchParams {
    pub q: Option<String>,
    pub from: Option<String>,
    pub to: Option<String>,
    pub channels: Option<String>,
    pub all_terms: Option<String>,
    pub coalesced: Option<String>,
    pub limit: Option<String>,
    pub offset: Option<String>,
    pub granularity: Option<String>,
    pub months: Option<String>,
}

impl SearchParams {
    /// The query, with `default_limit` applied when no limit is given.
    pub fn to_spec(&self, default_limit: Option<usize>) -> Result<QuerySpec, ParamError> {
        let q = self.q.as_deref().map(str::trim).unwrap_or_default();
        if q.is_empty() {
            return Err(ParamError {
                code: "missing_parameter",
                message: "parameter q is required".into(),
            });
        }
        Ok(QuerySpec {
            keywords: vec![q.to_string()],
            from: instant("from", &self.from, false)?,
            to: instant("to", &self.to, true)?,
            channels: parse_list(&self.channels),
            limit: number("limit", &self.limit)?.or(default_limit),
            offset: number("offset", &self.offset)?.unwrap_or(0),
            all_terms: parse_bool("all_terms", &self.all_terms)?,
        })
    }

    pub fn coalesced(&self) -> Result<bool, ParamError> {
        parse_bool("coalesced", &self.coalesced)
    }

    pub fn granularity(&self) -> Result<Granularity, ParamError> {
        match self.granularity.as_deref().map(str::trim) {
            None | Some("") => Ok(Granularity::Day),
            Some(s) => s.parse().map_err(|_| ParamError::invalid("granularity", s, "day, week or month")),
        }
    }

    pub fn months(&self) -> Result<Vec<YearMonth>, ParamError> {
        let Some(items) = parse_list(&self.months) else {
            return Err(ParamError {
                code: "missing_parameter",
                message: "parameter months is required, e.g. months=2020-03,2020-04".into(),
            });
        };
        items
            .iter()
            .map(|m| m.parse().map_err(|_| ParamError::invalid("months", m, "YYYY-MM")))
            .collect()
    }
}
