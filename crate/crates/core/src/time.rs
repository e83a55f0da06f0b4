//! Hour-of-day time points and regular time indices.
//!
//! Hours follow the competition convention `1..=24`: hour 1 is the interval
//! starting at midnight. Internally positions are 0-based; the `+1` happens
//! only when converting to and from [`TimePoint`].

use std::fmt;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimePoint {
    year: i32,
    month: u32,
    day: u32,
    hour: u32,
}

impl TimePoint {
    pub fn new(year: i32, month: u32, day: u32, hour: u32) -> Result<Self> {
        if !(1..=24).contains(&hour) {
            return Err(Error::InvalidInput(format!("hour {hour} outside 1..=24")));
        }
        NaiveDate::from_ymd_opt(year, month, day).ok_or_else(|| {
            Error::InvalidInput(format!("invalid date {year:04}-{month:02}-{day:02}"))
        })?;
        Ok(Self { year, month, day, hour })
    }

    /// First hour (hour 1) of a calendar day.
    pub fn day_start(date: NaiveDate) -> Self {
        Self { year: date.year(), month: date.month(), day: date.day(), hour: 1 }
    }

    /// Maps a wall-clock timestamp to the hour interval it starts (`00:00` is hour 1).
    pub fn from_datetime(dt: NaiveDateTime) -> Self {
        let d = dt.date();
        Self { year: d.year(), month: d.month(), day: d.day(), hour: dt.hour() + 1 }
    }

    pub fn to_datetime(self) -> NaiveDateTime {
        self.date().and_hms_opt(self.hour - 1, 0, 0).expect("valid hour")
    }

    pub fn year(self) -> i32 {
        self.year
    }
    pub fn month(self) -> u32 {
        self.month
    }
    pub fn day(self) -> u32 {
        self.day
    }
    pub fn hour(self) -> u32 {
        self.hour
    }

    pub fn date(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, self.day).expect("validated date")
    }

    /// Hours elapsed since 0001-01-01 hour 1.
    pub fn ordinal(self) -> i64 {
        i64::from(self.date().num_days_from_ce()) * 24 + i64::from(self.hour) - 1
    }

    pub fn from_ordinal(ordinal: i64) -> Self {
        let days = ordinal.div_euclid(24);
        let hour = ordinal.rem_euclid(24) as u32 + 1;
        let date = NaiveDate::from_num_days_from_ce_opt(days as i32).expect("ordinal in date range");
        Self { year: date.year(), month: date.month(), day: date.day(), hour }
    }

    pub fn add_hours(self, hours: i64) -> Self {
        Self::from_ordinal(self.ordinal() + hours)
    }

    pub fn next_day(self) -> NaiveDate {
        self.date() + Duration::days(1)
    }
}

impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}h{:02}", self.year, self.month, self.day, self.hour)
    }
}

/// A regular time index: `len` points starting at `start`, spaced `step_hours` apart.
///
/// Hourly data uses `step_hours = 1`; temporally aggregated series use the
/// aggregation length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeIndex {
    pub start: TimePoint,
    pub step_hours: u32,
    pub len: usize,
}

impl TimeIndex {
    pub fn hourly(start: TimePoint, len: usize) -> Self {
        Self { start, step_hours: 1, len }
    }

    pub fn new(start: TimePoint, step_hours: u32, len: usize) -> Result<Self> {
        if step_hours == 0 {
            return Err(Error::InvalidInput("time step must be at least one hour".into()));
        }
        Ok(Self { start, step_hours, len })
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn at(&self, i: usize) -> TimePoint {
        self.start.add_hours(i as i64 * i64::from(self.step_hours))
    }

    /// Ordinal of the first point after the index.
    pub fn end_ordinal(&self) -> i64 {
        self.start.ordinal() + self.len as i64 * i64::from(self.step_hours)
    }

    pub fn last(&self) -> Option<TimePoint> {
        (self.len > 0).then(|| self.at(self.len - 1))
    }

    pub fn position(&self, tp: TimePoint) -> Option<usize> {
        let off = tp.ordinal() - self.start.ordinal();
        let step = i64::from(self.step_hours);
        if off < 0 || off % step != 0 {
            return None;
        }
        let pos = (off / step) as usize;
        (pos < self.len).then_some(pos)
    }

    pub fn iter(&self) -> impl Iterator<Item = TimePoint> + '_ {
        let start = self.start.ordinal();
        let step = i64::from(self.step_hours);
        (0..self.len).map(move |i| TimePoint::from_ordinal(start + i as i64 * step))
    }

    /// Sub-index of `len` points starting at position `offset`.
    pub fn slice(&self, offset: usize, len: usize) -> Result<Self> {
        if offset + len > self.len {
            return Err(Error::InvalidInput(format!(
                "slice {offset}..{} exceeds index of length {}",
                offset + len,
                self.len
            )));
        }
        Ok(Self { start: self.at(offset), step_hours: self.step_hours, len })
    }
}

/// Intersection of several regular indices with a common step and phase.
pub fn intersect(indices: &[TimeIndex]) -> Result<TimeIndex> {
    let first = indices
        .first()
        .ok_or_else(|| Error::Alignment("no series to align".into()))?;
    let step = first.step_hours;
    let mut lo = first.start.ordinal();
    let mut hi = first.end_ordinal();
    for idx in indices {
        if idx.len == 0 {
            return Err(Error::Alignment("empty series".into()));
        }
        if idx.step_hours != step {
            return Err(Error::Alignment(format!(
                "mixed time steps {} and {} hours",
                step, idx.step_hours
            )));
        }
        if (idx.start.ordinal() - first.start.ordinal()).rem_euclid(i64::from(step)) != 0 {
            return Err(Error::Alignment(format!("series starting {} is out of phase", idx.start)));
        }
        lo = lo.max(idx.start.ordinal());
        hi = hi.min(idx.end_ordinal());
    }
    if hi <= lo {
        return Err(Error::Alignment("time ranges do not overlap".into()));
    }
    let len = ((hi - lo) / i64::from(step)) as usize;
    Ok(TimeIndex { start: TimePoint::from_ordinal(lo), step_hours: step, len })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tp(y: i32, m: u32, d: u32, h: u32) -> TimePoint {
        TimePoint::new(y, m, d, h).unwrap()
    }

    #[test]
    fn rejects_invalid_points() {
        assert!(TimePoint::new(2022, 2, 29, 1).is_err());
        assert!(TimePoint::new(2024, 2, 29, 1).is_ok());
        assert!(TimePoint::new(2022, 1, 1, 0).is_err());
        assert!(TimePoint::new(2022, 1, 1, 25).is_err());
    }

    #[test]
    fn ordinal_round_trip_and_order() {
        let a = tp(2006, 12, 31, 24);
        let b = a.add_hours(1);
        assert_eq!(b, tp(2007, 1, 1, 1));
        assert!(a < b);
        assert_eq!(TimePoint::from_ordinal(a.ordinal()), a);
        assert_eq!(b.ordinal() - a.ordinal(), 1);
    }

    #[test]
    fn datetime_hour_convention() {
        let dt = NaiveDate::from_ymd_opt(2020, 5, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        assert_eq!(TimePoint::from_datetime(dt).hour(), 1);
        assert_eq!(tp(2020, 5, 1, 24).to_datetime().hour(), 23);
    }

    #[test]
    fn intersect_ranges() {
        let a = TimeIndex::hourly(tp(2020, 1, 1, 1), 24 * 10);
        let b = TimeIndex::hourly(tp(2020, 1, 5, 1), 24 * 16);
        let c = intersect(&[a, b]).unwrap();
        assert_eq!(c.start, tp(2020, 1, 5, 1));
        assert_eq!(c.len, 24 * 6);
        assert_eq!(intersect(&[a, a]).unwrap(), a);

        let early = TimeIndex::hourly(tp(2002, 1, 1, 1), 24 * 365 * 5);
        let late = TimeIndex::hourly(tp(2007, 1, 1, 1), 24 * 365);
        assert!(matches!(intersect(&[early, late]), Err(Error::Alignment(_))));
    }

    #[test]
    fn position_respects_step() {
        let idx = TimeIndex::new(tp(2020, 1, 1, 1), 2, 12).unwrap();
        assert_eq!(idx.position(tp(2020, 1, 1, 3)), Some(1));
        assert_eq!(idx.position(tp(2020, 1, 1, 2)), None);
        assert_eq!(idx.at(11), tp(2020, 1, 1, 23));
    }
}
