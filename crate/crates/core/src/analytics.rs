//! Aggregations over query results: trend buckets, weekday windows, daily
//! averages and per-channel rankings.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, Days, FixedOffset, Months, NaiveDate, TimeZone, Utc, Weekday};
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::index::{InvertedIndex, QuerySpec, ScoredEvent};
use crate::scoring::Analyzer;
use crate::store::ContentStore;

/// Upper bound on buckets in one series.
pub const MAX_BUCKETS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Day,
    Week,
    Month,
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "day" => Ok(Granularity::Day),
            "week" => Ok(Granularity::Week),
            "month" => Ok(Granularity::Month),
            _ => Err(Error::InvalidArgument(format!(
                "granularity must be day, week or month, got {s:?}"
            ))),
        }
    }
}

impl Granularity {
    /// Start of the UTC calendar unit containing `t`.
    pub fn bucket_start(self, t: DateTime<Utc>) -> DateTime<Utc> {
        let d = t.date_naive();
        let d = match self {
            Granularity::Day => d,
            Granularity::Week => d - Days::new(d.weekday().num_days_from_monday() as u64),
            Granularity::Month => d.with_day(1).expect("day 1 exists"),
        };
        d.and_hms_opt(0, 0, 0).expect("midnight").and_utc()
    }

    pub fn next(self, start: DateTime<Utc>) -> DateTime<Utc> {
        match self {
            Granularity::Day => start + Days::new(1),
            Granularity::Week => start + Days::new(7),
            Granularity::Month => start + Months::new(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendBucket {
    pub start: DateTime<Utc>,
    pub count: u64,
    pub mean_tf_ief_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSeries {
    pub query: QuerySpec,
    pub granularity: Granularity,
    pub from: DateTime<Utc>,
    pub to: DateTime<Utc>,
    pub channels: BTreeMap<String, Vec<TrendBucket>>,
}

impl TrendSeries {
    pub fn total(&self) -> u64 {
        self.channels.values().flatten().map(|b| b.count).sum()
    }
}

fn all_matches(index: &InvertedIndex, analyzer: &Analyzer, q: &QuerySpec) -> Result<Vec<ScoredEvent>> {
    let spec = QuerySpec {
        limit: None,
        offset: 0,
        ..q.clone()
    };
    index.query(analyzer, &spec)
}

/// Channels to report: the query's filter, or every indexed channel.
fn channel_universe(index: &InvertedIndex, q: &QuerySpec) -> Vec<String> {
    match &q.channels {
        Some(cs) => {
            let mut cs = cs.clone();
            cs.sort();
            cs.dedup();
            cs
        }
        None => {
            let mut cs: Vec<String> = index.versions.keys().map(|id| id.channel.clone()).collect();
            cs.dedup();
            cs
        }
    }
}

/// Query results bucketed per channel. A result is placed by the start of
/// its scored version, clamped into `[from, to]`, so bucket counts always
/// sum to the query's match count. Open bounds default to the index's
/// first and last instants.
pub fn trend_series(
    index: &InvertedIndex,
    analyzer: &Analyzer,
    q: &QuerySpec,
    granularity: Granularity,
) -> Result<TrendSeries> {
    let epoch = DateTime::UNIX_EPOCH;
    let from = q.from.unwrap_or_else(|| index.min_time().unwrap_or(epoch));
    let to = q.to.unwrap_or(index.built_at.max(from));
    let spec = QuerySpec {
        from: Some(from),
        to: Some(to),
        ..q.clone()
    };
    let results = all_matches(index, analyzer, &spec)?;

    let mut starts = Vec::new();
    let mut s = granularity.bucket_start(from);
    while s <= to {
        if starts.len() == MAX_BUCKETS {
            return Err(Error::InvalidArgument(format!(
                "interval spans more than {MAX_BUCKETS} buckets; use a coarser granularity"
            )));
        }
        starts.push(s);
        s = granularity.next(s);
    }

    let mut sums: BTreeMap<String, Vec<(u64, f64)>> = channel_universe(index, &spec)
        .into_iter()
        .map(|c| (c, vec![(0, 0.0); starts.len()]))
        .collect();
    for r in &results {
        let t = r.timestamp.clamp(from, to);
        let slot = starts.partition_point(|b| *b <= t) - 1;
        let row = sums
            .entry(r.event.channel.clone())
            .or_insert_with(|| vec![(0, 0.0); starts.len()]);
        row[slot].0 += 1;
        row[slot].1 += r.tf_ief_sum;
    }
    let channels = sums
        .into_iter()
        .map(|(c, row)| {
            let buckets = starts
                .iter()
                .zip(row)
                .map(|(start, (count, sum))| TrendBucket {
                    start: *start,
                    count,
                    mean_tf_ief_sum: if count == 0 { 0.0 } else { sum / count as f64 },
                })
                .collect();
            (c, buckets)
        })
        .collect();
    Ok(TrendSeries {
        query: q.clone(),
        granularity,
        from,
        to,
        channels,
    })
}

/// A calendar month, written `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) || NaiveDate::from_ymd_opt(year, month, 1).is_none() {
            return Err(Error::InvalidArgument(format!("invalid month {year}-{month}")));
        }
        Ok(YearMonth { year, month })
    }

    fn first_day(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("validated")
    }

    /// `[first instant, first instant of next month)` in `zone`.
    pub fn bounds(self, zone: FixedOffset) -> (DateTime<Utc>, DateTime<Utc>) {
        let local = |d: NaiveDate| {
            zone.from_local_datetime(&d.and_hms_opt(0, 0, 0).expect("midnight"))
                .single()
                .expect("fixed offsets are unambiguous")
                .with_timezone(&Utc)
        };
        let start = self.first_day();
        (local(start), local(start + Months::new(1)))
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("month {s:?} must look like YYYY-MM"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        YearMonth::new(y.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?)
    }
}

impl Serialize for YearMonth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeekendCounts {
    pub wednesday: u64,
    pub thursday: u64,
    pub friday: u64,
    pub thursday_friday: u64,
    pub saturday: u64,
}

impl WeekendCounts {
    fn add(&mut self, other: &WeekendCounts) {
        self.wednesday += other.wednesday;
        self.thursday += other.thursday;
        self.friday += other.friday;
        self.thursday_friday += other.thursday_friday;
        self.saturday += other.saturday;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeekendRow {
    pub month: YearMonth,
    pub channel: String,
    pub counts: WeekendCounts,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeekendWindow {
    pub zone: String,
    pub rows: Vec<WeekendRow>,
    /// Column sums per channel.
    pub totals: BTreeMap<String, WeekendCounts>,
}

/// Matching events per month and channel on Wednesday, Thursday+Friday and
/// Saturday, by local weekday in `zone`. An event is attributed to the
/// month in which its scored version begins; events carried over from
/// earlier months are not counted again.
pub fn weekend_window(
    index: &InvertedIndex,
    analyzer: &Analyzer,
    q: &QuerySpec,
    months: &[YearMonth],
    zone: FixedOffset,
) -> Result<WeekendWindow> {
    let mut sorted = months.to_vec();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("months must not repeat".into()));
    }
    let channels = channel_universe(index, q);
    let mut rows = Vec::new();
    let mut totals: BTreeMap<String, WeekendCounts> =
        channels.iter().map(|c| (c.clone(), WeekendCounts::default())).collect();
    for m in months {
        let (start, next) = m.bounds(zone);
        let spec = QuerySpec {
            from: Some(start),
            to: Some(next - chrono::Duration::nanoseconds(1)),
            ..q.clone()
        };
        let mut per_channel: BTreeMap<String, WeekendCounts> =
            channels.iter().map(|c| (c.clone(), WeekendCounts::default())).collect();
        for r in all_matches(index, analyzer, &spec)? {
            if r.timestamp < start {
                continue;
            }
            let c = per_channel.entry(r.event.channel.clone()).or_default();
            match r.timestamp.with_timezone(&zone).weekday() {
                Weekday::Wed => c.wednesday += 1,
                Weekday::Thu => c.thursday += 1,
                Weekday::Fri => c.friday += 1,
                Weekday::Sat => c.saturday += 1,
                _ => {}
            }
        }
        for (channel, mut counts) in per_channel {
            counts.thursday_friday = counts.thursday + counts.friday;
            totals.entry(channel.clone()).or_default().add(&counts);
            rows.push(WeekendRow {
                month: *m,
                channel,
                counts,
            });
        }
    }
    Ok(WeekendWindow {
        zone: zone.to_string(),
        rows,
        totals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyAverage {
    pub matches: u64,
    pub days: u64,
    pub raw: f64,
    /// `raw` rounded to the nearest integer, halves away from zero.
    pub rounded: i64,
}

/// Inclusive count of UTC calendar days from `from` to `to`.
pub fn calendar_days(from: DateTime<Utc>, to: DateTime<Utc>) -> u64 {
    (to.date_naive() - from.date_naive()).num_days().max(0) as u64 + 1
}

pub fn average_per_day(matches: u64, days: u64) -> DailyAverage {
    let raw = if days == 0 { 0.0 } else { matches as f64 / days as f64 };
    DailyAverage {
        matches,
        days,
        raw,
        rounded: raw.round() as i64,
    }
}

/// Match count per channel divided by the number of calendar days in the
/// query interval, which must be bounded on both sides.
pub fn daily_average(
    index: &InvertedIndex,
    analyzer: &Analyzer,
    q: &QuerySpec,
) -> Result<BTreeMap<String, DailyAverage>> {
    let (Some(from), Some(to)) = (q.from, q.to) else {
        return Err(Error::InvalidArgument("daily average needs both from and to".into()));
    };
    q.bounds()?;
    let days = calendar_days(from, to);
    let mut counts: BTreeMap<String, u64> =
        channel_universe(index, q).into_iter().map(|c| (c, 0)).collect();
    for r in all_matches(index, analyzer, q)? {
        *counts.entry(r.event.channel).or_default() += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(c, n)| (c, average_per_day(n, days)))
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MediaTally {
    /// Items per media kind.
    pub by_kind: BTreeMap<String, u64>,
    pub total: u64,
    pub bytes: u64,
}

impl MediaTally {
    fn from_inventory(inv: &crate::store::Inventory) -> Self {
        let mut t = MediaTally::default();
        for (kind, size) in &inv.items {
            *t.by_kind.entry(kind.as_str().to_string()).or_default() += 1;
            t.total += 1;
            t.bytes += size;
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelRanking {
    pub channel: String,
    pub name: String,
    pub posts: u64,
    /// Every stored reference across the channel's archives.
    pub media_before: MediaTally,
    /// Distinct objects those references resolve to.
    pub media_after: MediaTally,
}

/// Channels ordered by post count, most active first.
pub fn channel_rankings(corpus: &Corpus, store: &ContentStore) -> Vec<ChannelRanking> {
    let mut posts: BTreeMap<&str, u64> = corpus.channels.keys().map(|c| (c.as_str(), 0)).collect();
    for id in corpus.events.keys() {
        *posts.entry(id.channel.as_str()).or_default() += 1;
    }
    let mut out: Vec<ChannelRanking> = posts
        .into_iter()
        .map(|(channel, posts)| {
            let archives = corpus.archives_of(channel);
            ChannelRanking {
                channel: channel.to_string(),
                name: corpus.channels.get(channel).cloned().unwrap_or_else(|| channel.to_string()),
                posts,
                media_before: MediaTally::from_inventory(&store.inventory_before(Some(&archives))),
                media_after: MediaTally::from_inventory(&store.inventory_after(Some(&archives))),
            }
        })
        .collect();
    out.sort_by(|a, b| b.posts.cmp(&a.posts).then_with(|| a.channel.cmp(&b.channel)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{EventId, EventVersion};
    use crate::exec::Exec;

    fn t(s: &str) -> DateTime<Utc> {
        s.parse().unwrap()
    }

    fn corpus_at(stamps: &[(&str, &str, &str)]) -> Corpus {
        let mut c = Corpus::default();
        for (i, (ch, ts, text)) in stamps.iter().enumerate() {
            c.channels.insert(ch.to_string(), ch.to_string());
            c.events.insert(
                EventId::new(*ch, i.to_string()),
                vec![EventVersion {
                    timestamp: t(ts),
                    text: text.to_string(),
                    media: vec![],
                    views: None,
                    forwarded_from: None,
                }],
            );
        }
        c
    }

    #[test]
    fn bucket_starts() {
        let x = t("2020-03-26T15:00:00Z");
        assert_eq!(Granularity::Day.bucket_start(x), t("2020-03-26T00:00:00Z"));
        assert_eq!(Granularity::Week.bucket_start(x), t("2020-03-23T00:00:00Z"));
        assert_eq!(Granularity::Month.bucket_start(x), t("2020-03-01T00:00:00Z"));
        assert_eq!(Granularity::Month.next(t("2020-01-01T00:00:00Z")), t("2020-02-01T00:00:00Z"));
    }

    #[test]
    fn same_day_events_share_a_bucket() {
        let c = corpus_at(&[
            ("kf", "2020-03-23T01:00:00Z", "flood"),
            ("kf", "2020-03-23T05:00:00Z", "flood"),
            ("kf", "2020-03-23T23:00:00Z", "flood"),
            ("kf", "2020-03-25T23:00:00Z", "fire"),
        ]);
        let a = Analyzer::default();
        let idx = InvertedIndex::build(&c, &a, Exec::Sequential).unwrap();
        let q = QuerySpec::new(["flood"]).between(t("2020-03-23T00:00:00Z"), t("2020-03-25T00:00:00Z"));
        let s = trend_series(&idx, &a, &q, Granularity::Day).unwrap();
        let counts: Vec<u64> = s.channels["kf"].iter().map(|b| b.count).collect();
        assert_eq!(counts, [3, 0, 0]);
        assert_eq!(s.total(), 3);
        let none = trend_series(&idx, &a, &QuerySpec::new(["quake"]).between(q.from.unwrap(), q.to.unwrap()), Granularity::Day).unwrap();
        assert_eq!(none.channels["kf"].len(), 3);
        assert_eq!(none.total(), 0);
    }

    #[test]
    fn thursday_plant() {
        // 2020-04-02 is a Thursday; 10:00 local at +03:30 is 06:30 UTC.
        let c = corpus_at(&[
            ("kf", "2020-04-02T06:30:00Z", "corona"),
            ("kf", "2020-04-09T06:30:00Z", "corona"),
            ("kf", "2020-04-16T06:30:00Z", "corona"),
        ]);
        let a = Analyzer::default();
        let idx = InvertedIndex::build(&c, &a, Exec::Sequential).unwrap();
        let zone = crate::ingest::default_zone();
        let months = ["2020-04".parse().unwrap(), "2020-05".parse().unwrap()];
        let w = weekend_window(&idx, &a, &QuerySpec::new(["corona"]), &months, zone).unwrap();
        let april = &w.rows[0].counts;
        assert_eq!((april.wednesday, april.thursday_friday, april.saturday), (0, 3, 0));
        assert_eq!(w.rows[1].counts, WeekendCounts::default());
        assert_eq!(w.totals["kf"].thursday_friday, 3);
    }

    #[test]
    fn local_weekday_differs_from_utc() {
        // Wednesday 22:00 UTC is already Thursday in +03:30.
        let c = corpus_at(&[("kf", "2020-04-01T22:00:00Z", "corona")]);
        let a = Analyzer::default();
        let idx = InvertedIndex::build(&c, &a, Exec::Sequential).unwrap();
        let w = weekend_window(&idx, &a, &QuerySpec::new(["corona"]), &["2020-04".parse().unwrap()], crate::ingest::default_zone()).unwrap();
        assert_eq!(w.rows[0].counts.thursday, 1);
    }

    #[test]
    fn daily_average_examples() {
        assert_eq!(calendar_days(t("2020-03-23T00:00:00Z"), t("2020-09-21T23:59:59Z")), 183);
        let a = average_per_day(6771, 183);
        assert_eq!(a.rounded, 37);
        assert_eq!(average_per_day(6850, 183).rounded, 37);
        assert_eq!(average_per_day(87, 183).rounded, 0);
        assert_eq!(average_per_day(0, 183).rounded, 0);
        assert_eq!(average_per_day(10, 5).raw, 2.0);
    }

    #[test]
    fn rankings_order_by_posts() {
        let c = corpus_at(&[
            ("a", "2020-04-01T00:00:00Z", "x"),
            ("a", "2020-04-01T00:00:00Z", "x"),
            ("a", "2020-04-01T00:00:00Z", "x"),
            ("b", "2020-04-01T00:00:00Z", "x"),
            ("b", "2020-04-01T00:00:00Z", "x"),
            ("b", "2020-04-01T00:00:00Z", "x"),
            ("b", "2020-04-01T00:00:00Z", "x"),
            ("b", "2020-04-01T00:00:00Z", "x"),
        ]);
        let dir = tempfile::tempdir().unwrap();
        let store = ContentStore::open(dir.path()).unwrap();
        let r = channel_rankings(&c, &store);
        assert_eq!(r[0].channel, "b");
        assert_eq!(r[0].posts, 5);
        assert_eq!(r[1].posts, 3);
        assert!(channel_rankings(&Corpus::default(), &store).is_empty());
    }
}
