//! Signal containers, the dataset bundle, forecast records and daily peak extraction.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::time::{self, TimeIndex, TimePoint};

/// A regularly spaced series (hourly unless temporally aggregated).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct HourlySeries<T: Scalar = f64> {
    name: String,
    start: TimePoint,
    step_hours: u32,
    values: Vec<T>,
}

impl<T: Scalar> HourlySeries<T> {
    /// Builds an hourly series. Raw data must be complete: non-finite values are rejected.
    pub fn new(name: impl Into<String>, start: TimePoint, values: Vec<T>) -> Result<Self> {
        Self::with_step(name, start, 1, values)
    }

    pub fn with_step(
        name: impl Into<String>,
        start: TimePoint,
        step_hours: u32,
        values: Vec<T>,
    ) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::InvalidInput(format!("series `{name}` is empty")));
        }
        if step_hours == 0 {
            return Err(Error::InvalidInput(format!("series `{name}` has zero time step")));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let at = start.add_hours(pos as i64 * i64::from(step_hours));
            return Err(Error::InvalidInput(format!(
                "series `{name}` has a missing or non-finite value at {at}"
            )));
        }
        Ok(Self { name, start, step_hours, values })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn start(&self) -> TimePoint {
        self.start
    }
    pub fn step_hours(&self) -> u32 {
        self.step_hours
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }
    pub fn into_values(self) -> Vec<T> {
        self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index(&self) -> TimeIndex {
        TimeIndex { start: self.start, step_hours: self.step_hours, len: self.values.len() }
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Same index, new values.
    pub fn map_values(&self, values: Vec<T>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::InvalidInput("replacement values differ in length".into()));
        }
        Self::with_step(self.name.clone(), self.start, self.step_hours, values)
    }

    /// Restricts the series to `index`, which must lie inside it.
    pub fn restrict(&self, index: &TimeIndex) -> Result<Self> {
        if index.step_hours != self.step_hours {
            return Err(Error::Alignment(format!(
                "series `{}` has step {}h, index has {}h",
                self.name, self.step_hours, index.step_hours
            )));
        }
        let own = self.index();
        let offset = own.position(index.start).ok_or_else(|| {
            Error::Alignment(format!("{} is outside series `{}`", index.start, self.name))
        })?;
        if offset + index.len > self.values.len() {
            return Err(Error::Alignment(format!(
                "series `{}` ends before {}",
                self.name,
                index.last().map(|t| t.to_string()).unwrap_or_default()
            )));
        }
        Ok(Self {
            name: self.name.clone(),
            start: index.start,
            step_hours: self.step_hours,
            values: self.values[offset..offset + index.len].to_vec(),
        })
    }

    /// Appends `next`, which must start exactly one step after this series ends.
    pub fn concat(&self, next: &Self) -> Result<Self> {
        if next.step_hours != self.step_hours || next.start.ordinal() != self.index().end_ordinal() {
            return Err(Error::Alignment(format!(
                "series `{}` does not continue `{}`",
                next.name, self.name
            )));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&next.values);
        Ok(Self { name: self.name.clone(), start: self.start, step_hours: self.step_hours, values })
    }
}

/// Common time index of several series; errors when their ranges do not overlap.
pub fn align<T: Scalar>(series: &[&HourlySeries<T>]) -> Result<TimeIndex> {
    let indices: Vec<TimeIndex> = series.iter().map(|s| s.index()).collect();
    time::intersect(&indices)
}

/// Holiday dates with their names.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HolidayCalendar {
    days: BTreeMap<NaiveDate, String>,
}

impl HolidayCalendar {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, date: NaiveDate, name: impl Into<String>) {
        self.days.insert(date, name.into());
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.days.contains_key(&date)
    }

    pub fn name(&self, date: NaiveDate) -> Option<&str> {
        self.days.get(&date).map(String::as_str)
    }

    /// Most recent holiday on or before `date`.
    pub fn last_on_or_before(&self, date: NaiveDate) -> Option<NaiveDate> {
        self.days.range(..=date).next_back().map(|(d, _)| *d)
    }

    /// First holiday on or after `date`.
    pub fn next_on_or_after(&self, date: NaiveDate) -> Option<NaiveDate> {
        self.days.range(date..).next().map(|(d, _)| *d)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, &str)> {
        self.days.iter().map(|(d, n)| (*d, n.as_str()))
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    /// Distinct holiday names in sorted order; label ids are positions + 1.
    pub fn names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.days.values().map(String::as_str).collect();
        names.sort_unstable();
        names.dedup();
        names
    }
}

impl FromIterator<(NaiveDate, String)> for HolidayCalendar {
    fn from_iter<I: IntoIterator<Item = (NaiveDate, String)>>(iter: I) -> Self {
        Self { days: iter.into_iter().collect() }
    }
}

/// Target load plus the exogenous drivers, all on one time index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Dataset<T: Scalar = f64> {
    pub load: HourlySeries<T>,
    pub temperatures: Vec<HourlySeries<T>>,
    /// Additional exogenous columns used as-is (no lag or rolling blocks).
    pub exogenous: Vec<HourlySeries<T>>,
    pub holidays: HolidayCalendar,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(
        load: HourlySeries<T>,
        temperatures: Vec<HourlySeries<T>>,
        exogenous: Vec<HourlySeries<T>>,
        holidays: HolidayCalendar,
    ) -> Result<Self> {
        if temperatures.is_empty() {
            return Err(Error::InvalidInput("dataset needs at least one temperature series".into()));
        }
        let index = load.index();
        for s in temperatures.iter().chain(exogenous.iter()) {
            if s.index() != index {
                return Err(Error::Alignment(format!(
                    "series `{}` does not share the load's time index",
                    s.name()
                )));
            }
        }
        Ok(Self { load, temperatures, exogenous, holidays })
    }

    pub fn index(&self) -> TimeIndex {
        self.load.index()
    }

    pub fn len(&self) -> usize {
        self.load.len()
    }

    pub fn is_empty(&self) -> bool {
        self.load.is_empty()
    }

    pub fn restrict(&self, index: &TimeIndex) -> Result<Self> {
        Ok(Self {
            load: self.load.restrict(index)?,
            temperatures: self.temperatures.iter().map(|s| s.restrict(index)).collect::<Result<_>>()?,
            exogenous: self.exogenous.iter().map(|s| s.restrict(index)).collect::<Result<_>>()?,
            holidays: self.holidays.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PointForecast<T: Scalar = f64> {
    pub index: TimeIndex,
    pub values: Vec<T>,
}

impl<T: Scalar> PointForecast<T> {
    pub fn new(index: TimeIndex, values: Vec<T>) -> Result<Self> {
        if index.len != values.len() {
            return Err(Error::InvalidInput(format!(
                "forecast has {} values for a horizon of {}",
                values.len(),
                index.len
            )));
        }
        Ok(Self { index, values })
    }
}

/// Gaussian predictive distribution per horizon step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DistForecast<T: Scalar = f64> {
    pub index: TimeIndex,
    pub mean: Vec<T>,
    pub stddev: Vec<T>,
}

impl<T: Scalar> DistForecast<T> {
    pub fn new(index: TimeIndex, mean: Vec<T>, stddev: Vec<T>) -> Result<Self> {
        if mean.len() != index.len || stddev.len() != index.len {
            return Err(Error::InvalidInput("mean/stddev length differs from horizon".into()));
        }
        if let Some(i) = stddev.iter().position(|s| !(*s > T::zero()) || !s.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "stddev must be positive, got {} at {}",
                stddev[i],
                index.at(i)
            )));
        }
        Ok(Self { index, mean, stddev })
    }

    pub fn point(&self) -> PointForecast<T> {
        PointForecast { index: self.index, values: self.mean.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PeakForecast<T: Scalar = f64> {
    pub date: NaiveDate,
    pub peak_value: T,
    /// Hour of the maximum, `1..=24`.
    pub peak_hour: u32,
}

/// One peak per day of an hourly forecast; ties go to the earliest hour.
pub fn extract_daily_peaks<T: Scalar>(forecast: &PointForecast<T>) -> Result<Vec<PeakForecast<T>>> {
    daily_peaks(&forecast.index, &forecast.values)
}

pub(crate) fn daily_peaks<T: Scalar>(index: &TimeIndex, values: &[T]) -> Result<Vec<PeakForecast<T>>> {
    if index.step_hours != 1 {
        return Err(Error::InvalidInput("daily peaks need an hourly forecast".into()));
    }
    if index.len == 0 {
        return Ok(Vec::new());
    }
    if index.start.hour() != 1 {
        return Err(Error::PartialDay { date: index.start.date().to_string() });
    }
    if index.len % 24 != 0 {
        let last = index.last().expect("non-empty");
        return Err(Error::PartialDay { date: last.date().to_string() });
    }
    Ok(values
        .chunks_exact(24)
        .enumerate()
        .map(|(d, day)| {
            let (hour0, &peak) = argmax_first(day);
            PeakForecast {
                date: index.at(d * 24).date(),
                peak_value: peak,
                peak_hour: hour0 as u32 + 1,
            }
        })
        .collect())
}

/// Position and value of the first maximum.
pub(crate) fn argmax_first<T: Scalar>(values: &[T]) -> (usize, &T) {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    (best, &values[best])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn day_start() -> TimePoint {
        TimePoint::new(2007, 1, 1, 1).unwrap()
    }

    fn peaks_of(values: Vec<f64>) -> Vec<PeakForecast<f64>> {
        let fc = PointForecast::new(TimeIndex::hourly(day_start(), values.len()), values).unwrap();
        extract_daily_peaks(&fc).unwrap()
    }

    #[test]
    fn constant_day_peaks_at_first_hour() {
        let p = peaks_of(vec![5.0; 24]);
        assert_eq!(p.len(), 1);
        assert_eq!((p[0].peak_value, p[0].peak_hour), (5.0, 1));
    }

    #[test]
    fn ramp_peaks_at_last_hour() {
        let p = peaks_of((1..=24).map(f64::from).collect());
        assert_eq!((p[0].peak_value, p[0].peak_hour), (24.0, 24));
    }

    #[test]
    fn unique_maximum_found() {
        let mut v: Vec<f64> = (0..24).map(|h| 50.0 + (h as f64 * 0.7).sin()).collect();
        v[17] = 87.3;
        // linear-scan oracle
        let mut oracle = (0, f64::MIN);
        for (i, x) in v.iter().enumerate() {
            if *x > oracle.1 {
                oracle = (i, *x);
            }
        }
        let p = peaks_of(v);
        assert_eq!((p[0].peak_value, p[0].peak_hour), (87.3, 18));
        assert_eq!(p[0].peak_hour as usize, oracle.0 + 1);
    }

    #[test]
    fn partial_day_is_rejected() {
        let fc = PointForecast::new(TimeIndex::hourly(day_start(), 30), vec![1.0; 30]).unwrap();
        match extract_daily_peaks(&fc) {
            Err(Error::PartialDay { date }) => assert_eq!(date, "2007-01-02"),
            other => panic!("unexpected {other:?}"),
        }
        let late = TimePoint::new(2007, 1, 1, 5).unwrap();
        let fc = PointForecast::new(TimeIndex::hourly(late, 24), vec![1.0; 24]).unwrap();
        assert!(matches!(extract_daily_peaks(&fc), Err(Error::PartialDay { .. })));
    }

    #[test]
    fn series_rejects_gaps_and_mismatched_dataset() {
        assert!(HourlySeries::new("t", day_start(), vec![1.0, f64::NAN]).is_err());
        assert!(HourlySeries::<f64>::new("t", day_start(), vec![]).is_err());
        let load = HourlySeries::new("load", day_start(), vec![1.0; 4]).unwrap();
        let temp = HourlySeries::new("T", day_start(), vec![1.0; 3]).unwrap();
        assert!(Dataset::new(load.clone(), vec![temp], vec![], HolidayCalendar::new()).is_err());
        assert!(Dataset::new(load, vec![], vec![], HolidayCalendar::new()).is_err());
    }

    #[test]
    fn restrict_and_concat() {
        let s = HourlySeries::new("T", day_start(), (0..48).map(f64::from).collect()).unwrap();
        let idx = TimeIndex::hourly(day_start().add_hours(24), 24);
        let tail = s.restrict(&idx).unwrap();
        assert_eq!(tail.values()[0], 24.0);
        let head = s.restrict(&TimeIndex::hourly(day_start(), 24)).unwrap();
        assert_eq!(head.concat(&tail).unwrap(), s);
        assert!(tail.concat(&head).is_err());
    }

    proptest! {
        #[test]
        fn peak_tracks_permutation(
            day in prop::collection::vec(-1e3f64..1e3, 24),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let base = peaks_of(day.clone())[0];
            for v in &day {
                prop_assert!(base.peak_value >= *v);
            }
            let mut perm: Vec<usize> = (0..24).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let shuffled: Vec<f64> = perm.iter().map(|&i| day[i]).collect();
            let p = peaks_of(shuffled.clone())[0];
            prop_assert_eq!(p.peak_value, base.peak_value);
            prop_assert_eq!(shuffled[p.peak_hour as usize - 1], base.peak_value);
        }
    }
}
