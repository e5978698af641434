//! Before/after volume statistics per media class.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::media::{MediaKind, StatsClass};

/// A flat list of (kind, size) items.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Inventory {
    pub items: Vec<(MediaKind, u64)>,
}

impl Inventory {
    pub fn push(&mut self, kind: MediaKind, size: u64) {
        self.items.push((kind, size));
    }
}

impl FromIterator<(MediaKind, u64)> for Inventory {
    fn from_iter<I: IntoIterator<Item = (MediaKind, u64)>>(iter: I) -> Self {
        Inventory {
            items: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ClassStats {
    pub items_before: u64,
    pub items_after: u64,
    pub bytes_before: u64,
    pub bytes_after: u64,
    /// Volume decrease in percent, truncated to one decimal place.
    pub decrease_pct: f64,
}

impl ClassStats {
    fn finish(mut self) -> Self {
        self.decrease_pct = decrease_pct(self.bytes_before, self.bytes_after);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ArchiveStats {
    pub classes: BTreeMap<StatsClass, ClassStats>,
    pub total: ClassStats,
}

/// Volume decrease in tenths of a percent, rounded toward zero:
/// `floor(1000 * (before - after) / before)`, or 0 for an empty class.
/// Integer arithmetic keeps exact ratios like 0.4/4 from landing a hair
/// below 10.0.
pub fn decrease_tenths(bytes_before: u64, bytes_after: u64) -> u64 {
    if bytes_before == 0 {
        return 0;
    }
    let saved = bytes_before.saturating_sub(bytes_after) as u128;
    (saved * 1000 / bytes_before as u128) as u64
}

/// [`decrease_tenths`] as a percentage with one decimal.
pub fn decrease_pct(bytes_before: u64, bytes_after: u64) -> f64 {
    decrease_tenths(bytes_before, bytes_after) as f64 / 10.0
}

pub fn compute_stats(before: &Inventory, after: &Inventory) -> ArchiveStats {
    let mut classes: BTreeMap<StatsClass, ClassStats> = StatsClass::ALL
        .into_iter()
        .map(|c| (c, ClassStats::default()))
        .collect();
    let mut total = ClassStats::default();
    for &(kind, size) in &before.items {
        let c = classes.get_mut(&kind.stats_class()).expect("all classes present");
        c.items_before += 1;
        c.bytes_before += size;
        total.items_before += 1;
        total.bytes_before += size;
    }
    for &(kind, size) in &after.items {
        let c = classes.get_mut(&kind.stats_class()).expect("all classes present");
        c.items_after += 1;
        c.bytes_after += size;
        total.items_after += 1;
        total.bytes_after += size;
    }
    ArchiveStats {
        classes: classes.into_iter().map(|(k, v)| (k, v.finish())).collect(),
        total: total.finish(),
    }
}
