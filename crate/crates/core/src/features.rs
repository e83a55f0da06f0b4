//! Explanatory variables: calendar labels, lagged and rolling temperatures,
//! and per-period temperature aggregates including signal-processing ratios.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::frame::{assemble, FeatureMatrix};
use crate::scalar::{compensated_sum, median_sorted, Scalar};
use crate::series::{HolidayCalendar, HourlySeries};
use crate::time::{TimeIndex, TimePoint};

/// Calendar columns of the baseline model.
pub const CALENDAR_BASELINE: [&str; 6] = ["Year", "Month", "Week", "Day", "Weekday", "Hour"];

/// Additional calendar columns.
pub const CALENDAR_EXTENDED: [&str; 8] = [
    "Holiday",
    "HolidayName",
    "Weekend",
    "WeekOfMonth",
    "Season",
    "DayOfYear",
    "DaysSinceLastHoliday",
    "DaysUntilNextHoliday",
];

/// Cap on the holiday distance columns; also used when no holiday exists on that side.
pub const HOLIDAY_DISTANCE_CAP: i64 = 366;

/// Label-encoded calendar features for every point of `index`.
///
/// Weekday is 1 (Monday) to 7 (Sunday); Season uses meteorological quarters
/// (DJF = 1, MAM = 2, JJA = 3, SON = 4); HolidayName is 0 for ordinary days and
/// otherwise 1 + the position of the name in the calendar's sorted name list.
pub fn calendar_features<T: Scalar>(
    index: &TimeIndex,
    holidays: &HolidayCalendar,
) -> Result<FeatureMatrix<T>> {
    if index.is_empty() {
        return Err(invalid("calendar features need a non-empty index"));
    }
    let names_sorted = holidays.names();
    let n_cols = CALENDAR_BASELINE.len() + CALENDAR_EXTENDED.len();
    let mut cols: Vec<Vec<T>> = vec![Vec::with_capacity(index.len); n_cols];
    for tp in index.iter() {
        let date = tp.date();
        let weekday = date.weekday();
        let holiday_name = holidays.name(date);
        let label = holiday_name
            .and_then(|n| names_sorted.iter().position(|m| *m == n))
            .map_or(0, |p| p + 1);
        let since = holidays
            .last_on_or_before(date)
            .map_or(HOLIDAY_DISTANCE_CAP, |h| (date - h).num_days().min(HOLIDAY_DISTANCE_CAP));
        let until = holidays
            .next_on_or_after(date)
            .map_or(HOLIDAY_DISTANCE_CAP, |h| (h - date).num_days().min(HOLIDAY_DISTANCE_CAP));
        let row = [
            f64::from(tp.year()),
            f64::from(tp.month()),
            f64::from(date.iso_week().week()),
            f64::from(tp.day()),
            f64::from(weekday.number_from_monday()),
            f64::from(tp.hour()),
            f64::from(u8::from(holiday_name.is_some())),
            label as f64,
            f64::from(u8::from(matches!(weekday, Weekday::Sat | Weekday::Sun))),
            f64::from((tp.day() - 1) / 7 + 1),
            f64::from(season(tp.month())),
            f64::from(date.ordinal()),
            since as f64,
            until as f64,
        ];
        for (c, v) in cols.iter_mut().zip(row) {
            c.push(T::lit(v));
        }
    }
    let names = CALENDAR_BASELINE.iter().chain(CALENDAR_EXTENDED.iter()).map(|s| s.to_string()).collect();
    FeatureMatrix::new(*index, names, cols, vec![0; n_cols])
}

fn season(month: u32) -> u32 {
    match month {
        12 | 1 | 2 => 1,
        3..=5 => 2,
        6..=8 => 3,
        _ => 4,
    }
}

/// The series values at the current time, one column per series.
pub fn current_features<T: Scalar>(series: &[HourlySeries<T>]) -> Result<FeatureMatrix<T>> {
    let index = common_index(series)?;
    FeatureMatrix::new(
        index,
        series.iter().map(|s| s.name().to_string()).collect(),
        series.iter().map(|s| s.values().to_vec()).collect(),
        vec![0; series.len()],
    )
}

fn common_index<T: Scalar>(series: &[HourlySeries<T>]) -> Result<TimeIndex> {
    let first = series.first().ok_or_else(|| invalid("no series given"))?;
    let index = first.index();
    if let Some(s) = series.iter().find(|s| s.index() != index) {
        return Err(Error::Alignment(format!("series `{}` is not aligned", s.name())));
    }
    Ok(index)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagSpec {
    /// Largest lag, in time steps of the series.
    pub max_lag: usize,
}

impl Default for LagSpec {
    fn default() -> Self {
        Self { max_lag: 48 }
    }
}

/// Lagged copies `T(t - h)` for `h = 1..=max_lag`; the first `h` cells of lag `h` are missing.
pub fn lag_features<T: Scalar>(temps: &[HourlySeries<T>], spec: LagSpec) -> Result<FeatureMatrix<T>> {
    let index = common_index(temps)?;
    if spec.max_lag == 0 {
        return Err(invalid("max lag must be at least 1"));
    }
    if spec.max_lag >= index.len {
        return Err(Error::InsufficientData(format!(
            "max lag {} needs more than {} observations",
            spec.max_lag, index.len
        )));
    }
    let mut names = Vec::new();
    let mut cols = Vec::new();
    let mut warmup = Vec::new();
    for s in temps {
        let x = s.values();
        for h in 1..=spec.max_lag {
            let mut col = vec![T::nan(); x.len()];
            col[h..].copy_from_slice(&x[..x.len() - h]);
            names.push(format!("{}_lag{h}", s.name()));
            cols.push(col);
            warmup.push(h);
        }
    }
    FeatureMatrix::new(index, names, cols, warmup)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RollingStat {
    Mean,
    Max,
    Min,
    Median,
    Std,
}

impl RollingStat {
    pub const ALL: [RollingStat; 5] =
        [RollingStat::Mean, RollingStat::Max, RollingStat::Min, RollingStat::Median, RollingStat::Std];

    fn label(self) -> &'static str {
        match self {
            RollingStat::Mean => "mean",
            RollingStat::Max => "max",
            RollingStat::Min => "min",
            RollingStat::Median => "median",
            RollingStat::Std => "std",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RollingSpec {
    pub stat: RollingStat,
    pub window_hours: usize,
}

impl RollingSpec {
    /// Windows of 3 hours, one day, one week and one month (720 h), five statistics each.
    pub fn defaults() -> Vec<RollingSpec> {
        [3, 24, 168, 720]
            .into_iter()
            .flat_map(|w| RollingStat::ALL.into_iter().map(move |stat| RollingSpec { stat, window_hours: w }))
            .collect()
    }
}

/// Rolling statistics over the strictly past window `t-1 ..= t-w`.
///
/// Windows are given in hours; for aggregated series they are converted to
/// steps, rounding up. `std` is the population standard deviation.
pub fn rolling_features<T: Scalar>(
    temps: &[HourlySeries<T>],
    specs: &[RollingSpec],
) -> Result<FeatureMatrix<T>> {
    let index = common_index(temps)?;
    if specs.is_empty() {
        return Err(invalid("no rolling statistics requested"));
    }
    let step = index.step_hours as usize;
    // window (steps) -> stats requested, in first-seen order of specs
    let mut by_window: Vec<(usize, Vec<RollingSpec>)> = Vec::new();
    for spec in specs {
        if spec.window_hours == 0 {
            return Err(invalid("rolling window must be at least one hour"));
        }
        let w = spec.window_hours.div_ceil(step);
        if w >= index.len {
            return Err(Error::InsufficientData(format!(
                "rolling window of {} h needs more than {} observations",
                spec.window_hours, index.len
            )));
        }
        match by_window.iter_mut().find(|(ww, _)| *ww == w) {
            Some((_, v)) => v.push(*spec),
            None => by_window.push((w, vec![*spec])),
        }
    }
    let mut names = Vec::new();
    let mut cols = Vec::new();
    let mut warmup = Vec::new();
    for s in temps {
        for (w, group) in &by_window {
            let stats = rolling_window_stats(s.values(), *w);
            for spec in group {
                let col = match spec.stat {
                    RollingStat::Mean => &stats.mean,
                    RollingStat::Max => &stats.max,
                    RollingStat::Min => &stats.min,
                    RollingStat::Median => &stats.median,
                    RollingStat::Std => &stats.std,
                };
                names.push(format!("{}_roll_{}_{}h", s.name(), spec.stat.label(), spec.window_hours));
                cols.push(col.clone());
                warmup.push(*w);
            }
        }
    }
    FeatureMatrix::new(index, names, cols, warmup)
}

struct WindowStats<T> {
    mean: Vec<T>,
    max: Vec<T>,
    min: Vec<T>,
    median: Vec<T>,
    std: Vec<T>,
}

fn rolling_window_stats<T: Scalar>(x: &[T], w: usize) -> WindowStats<T> {
    let n = x.len();
    let mut out = WindowStats {
        mean: vec![T::nan(); n],
        max: vec![T::nan(); n],
        min: vec![T::nan(); n],
        median: vec![T::nan(); n],
        std: vec![T::nan(); n],
    };
    let cmp = |a: &T, b: &T| a.partial_cmp(b).expect("finite series values");
    let mut sorted: Vec<T> = x[..w].to_vec();
    sorted.sort_by(cmp);
    let wn = T::of_usize(w);
    for t in w..n {
        if t > w {
            let old = x[t - w - 1];
            let pos = sorted.binary_search_by(|p| cmp(p, &old)).expect("value present in window");
            sorted.remove(pos);
            let new = x[t - 1];
            let pos = sorted.partition_point(|p| cmp(p, &new).is_lt());
            sorted.insert(pos, new);
        }
        let m = compensated_sum(sorted.iter().copied()) / wn;
        let var = compensated_sum(sorted.iter().map(|&v| (v - m) * (v - m))) / wn;
        out.mean[t] = m;
        out.min[t] = sorted[0];
        out.max[t] = sorted[w - 1];
        out.median[t] = median_sorted(&sorted).expect("non-empty window");
        out.std[t] = var.sqrt();
    }
    out
}

/// Signal-processing summary of a vector.
///
/// The four ratio factors are `None` when their denominator vanishes (all-zero input).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SignalStats<T: Scalar = f64> {
    pub rms: T,
    pub peak: T,
    pub crest: Option<T>,
    pub impulse: Option<T>,
    pub margin: Option<T>,
    pub shape: Option<T>,
    pub peak_to_peak: T,
}

/// RMS, peak `max|x|`, crest `peak/RMS`, impulse `peak/mean|x|`,
/// margin `peak/(Σ√|x|)²`, shape `RMS/mean|x|` and `max(x) - min(x)`.
pub fn signal_stats<T: Scalar>(x: &[T]) -> Result<SignalStats<T>> {
    if x.is_empty() {
        return Err(invalid("signal statistics need at least one value"));
    }
    let n = T::of_usize(x.len());
    let rms = (compensated_sum(x.iter().map(|&v| v * v)) / n).sqrt();
    let peak = x.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    let mean_abs = compensated_sum(x.iter().map(|v| v.abs())) / n;
    let sqrt_sum = compensated_sum(x.iter().map(|v| v.abs().sqrt()));
    let hi = x.iter().copied().fold(T::neg_infinity(), T::max);
    let lo = x.iter().copied().fold(T::infinity(), T::min);
    let ratio = |num: T, den: T| (den > T::zero()).then(|| num / den);
    Ok(SignalStats {
        rms,
        peak,
        crest: ratio(peak, rms),
        impulse: ratio(peak, mean_abs),
        margin: ratio(peak, sqrt_sum * sqrt_sum),
        shape: ratio(rms, mean_abs),
        peak_to_peak: hi - lo,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggFunc {
    Mean,
    Max,
    Min,
    Median,
    Rms,
    Crest,
    Peak,
    Impulse,
    Margin,
    Shape,
    PeakToPeak,
}

impl AggFunc {
    pub const ALL: [AggFunc; 11] = [
        AggFunc::Mean,
        AggFunc::Max,
        AggFunc::Min,
        AggFunc::Median,
        AggFunc::Rms,
        AggFunc::Crest,
        AggFunc::Peak,
        AggFunc::Impulse,
        AggFunc::Margin,
        AggFunc::Shape,
        AggFunc::PeakToPeak,
    ];

    /// Signal-processing functions, evaluated on group values minus the group mean.
    pub fn is_signal(self) -> bool {
        !matches!(self, AggFunc::Mean | AggFunc::Max | AggFunc::Min | AggFunc::Median)
    }

    fn label(self) -> &'static str {
        match self {
            AggFunc::Mean => "mean",
            AggFunc::Max => "max",
            AggFunc::Min => "min",
            AggFunc::Median => "median",
            AggFunc::Rms => "rms",
            AggFunc::Crest => "crest",
            AggFunc::Peak => "peak",
            AggFunc::Impulse => "impulse",
            AggFunc::Margin => "margin",
            AggFunc::Shape => "shape",
            AggFunc::PeakToPeak => "ptp",
        }
    }
}

/// Aggregation period: all points sharing the key form one group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupKey {
    #[serde(rename = "year-month-day")]
    YearMonthDay,
    #[serde(rename = "month-hour")]
    MonthHour,
}

impl GroupKey {
    fn key(self, tp: TimePoint) -> (i32, u32, u32) {
        match self {
            GroupKey::YearMonthDay => (tp.year(), tp.month(), tp.day()),
            GroupKey::MonthHour => (0, tp.month(), tp.hour()),
        }
    }

    fn label(self) -> &'static str {
        match self {
            GroupKey::YearMonthDay => "ymd",
            GroupKey::MonthHour => "mh",
        }
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupKey::YearMonthDay => "year-month-day",
            GroupKey::MonthHour => "month-hour",
        })
    }
}

impl FromStr for GroupKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['_', ' '], "-").as_str() {
            "year-month-day" | "ymd" => Ok(GroupKey::YearMonthDay),
            "month-hour" | "mh" => Ok(GroupKey::MonthHour),
            other => Err(invalid(format!("unknown aggregation group key `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggSpec {
    pub func: AggFunc,
    pub group: GroupKey,
    pub centered: bool,
}

impl AggSpec {
    pub fn new(func: AggFunc, group: GroupKey, centered: bool) -> Result<Self> {
        if func.is_signal() && !centered {
            return Err(invalid(format!("{} must be computed on centered values", func.label())));
        }
        Ok(Self { func, group, centered })
    }

    /// Shorthand that centers exactly the signal-processing functions.
    pub fn standard(func: AggFunc, group: GroupKey) -> Self {
        Self { func, group, centered: func.is_signal() }
    }

    /// Both periods times all eleven functions.
    pub fn defaults() -> Vec<AggSpec> {
        [GroupKey::YearMonthDay, GroupKey::MonthHour]
            .into_iter()
            .flat_map(|g| AggFunc::ALL.into_iter().map(move |f| AggSpec::standard(f, g)))
            .collect()
    }
}

/// Per-group aggregates broadcast back to every point, plus `actual - aggregate` columns.
///
/// A ratio factor that is undefined for a group (constant values, so the
/// centered signal is all zero) is encoded as 0.
pub fn aggregated_features<T: Scalar>(
    temps: &[HourlySeries<T>],
    specs: &[AggSpec],
) -> Result<FeatureMatrix<T>> {
    let index = common_index(temps)?;
    if specs.is_empty() {
        return Err(invalid("no aggregates requested"));
    }
    for spec in specs {
        AggSpec::new(spec.func, spec.group, spec.centered)?;
    }
    let points: Vec<TimePoint> = index.iter().collect();
    let mut groupings: Vec<(GroupKey, Vec<usize>, usize)> = Vec::new();
    for spec in specs {
        if groupings.iter().any(|(g, _, _)| *g == spec.group) {
            continue;
        }
        let mut ids: BTreeMap<(i32, u32, u32), usize> = BTreeMap::new();
        let mut member = Vec::with_capacity(points.len());
        for tp in &points {
            let next = ids.len();
            member.push(*ids.entry(spec.group.key(*tp)).or_insert(next));
        }
        let n_groups = ids.len();
        groupings.push((spec.group, member, n_groups));
    }

    let mut names = Vec::new();
    let mut cols = Vec::new();
    for s in temps {
        let x = s.values();
        for (group, member, n_groups) in &groupings {
            let mut buckets: Vec<Vec<T>> = vec![Vec::new(); *n_groups];
            for (v, &g) in x.iter().zip(member) {
                buckets[g].push(*v);
            }
            let summaries: Vec<GroupSummary<T>> = buckets.iter().map(|b| GroupSummary::of(b)).collect();
            for spec in specs.iter().filter(|sp| sp.group == *group) {
                let per_group: Vec<T> = summaries.iter().map(|g| g.get(spec.func)).collect();
                let agg: Vec<T> = member.iter().map(|&g| per_group[g]).collect();
                let diff: Vec<T> = x.iter().zip(&agg).map(|(&v, &a)| v - a).collect();
                names.push(format!("{}_agg_{}_{}", s.name(), spec.func.label(), group.label()));
                cols.push(agg);
                names.push(format!("{}_aggdiff_{}_{}", s.name(), spec.func.label(), group.label()));
                cols.push(diff);
            }
        }
    }
    let n = cols.len();
    FeatureMatrix::new(index, names, cols, vec![0; n])
}

struct GroupSummary<T: Scalar> {
    mean: T,
    max: T,
    min: T,
    median: T,
    signal: SignalStats<T>,
}

impl<T: Scalar> GroupSummary<T> {
    fn of(values: &[T]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        let mean = compensated_sum(values.iter().copied()) / T::of_usize(values.len());
        let centered: Vec<T> = values.iter().map(|&v| v - mean).collect();
        Self {
            mean,
            max: sorted[sorted.len() - 1],
            min: sorted[0],
            median: median_sorted(&sorted).expect("non-empty group"),
            signal: signal_stats(&centered).expect("non-empty group"),
        }
    }

    fn get(&self, f: AggFunc) -> T {
        let s = &self.signal;
        match f {
            AggFunc::Mean => self.mean,
            AggFunc::Max => self.max,
            AggFunc::Min => self.min,
            AggFunc::Median => self.median,
            AggFunc::Rms => s.rms,
            AggFunc::Peak => s.peak,
            AggFunc::PeakToPeak => s.peak_to_peak,
            AggFunc::Crest => s.crest.unwrap_or_else(T::zero),
            AggFunc::Impulse => s.impulse.unwrap_or_else(T::zero),
            AggFunc::Margin => s.margin.unwrap_or_else(T::zero),
            AggFunc::Shape => s.shape.unwrap_or_else(T::zero),
        }
    }
}

/// Which calendar columns to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalendarSet {
    None,
    Baseline,
    #[default]
    Full,
}

/// Declarative description of the feature blocks, in assembly order:
/// calendar, current temperatures, exogenous, lags, rolling, aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub calendar: CalendarSet,
    pub current_temperatures: bool,
    pub exogenous: bool,
    pub lags: Option<LagSpec>,
    pub rolling: Vec<RollingSpec>,
    pub aggregates: Vec<AggSpec>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            calendar: CalendarSet::Full,
            current_temperatures: true,
            exogenous: true,
            lags: Some(LagSpec::default()),
            rolling: RollingSpec::defaults(),
            aggregates: AggSpec::defaults(),
        }
    }
}

impl FeatureConfig {
    /// Calendar basics plus current temperatures.
    pub fn baseline() -> Self {
        Self {
            calendar: CalendarSet::Baseline,
            current_temperatures: true,
            exogenous: true,
            lags: None,
            rolling: Vec::new(),
            aggregates: Vec::new(),
        }
    }

    /// Steps of history needed before the first complete feature row.
    pub fn warmup_steps(&self, step_hours: u32) -> usize {
        let lag = self.lags.map_or(0, |l| l.max_lag);
        let roll = self
            .rolling
            .iter()
            .map(|r| r.window_hours.div_ceil(step_hours as usize))
            .max()
            .unwrap_or(0);
        lag.max(roll)
    }

    /// Whether a column belongs to the always-kept baseline (calendar and current values).
    pub fn is_baseline_column(name: &str) -> bool {
        CALENDAR_BASELINE.contains(&name)
            || !(name.contains("_lag") || name.contains("_roll_") || name.contains("_agg"))
    }

    pub fn build<T: Scalar>(
        &self,
        temperatures: &[HourlySeries<T>],
        exogenous: &[HourlySeries<T>],
        holidays: &HolidayCalendar,
    ) -> Result<FeatureMatrix<T>> {
        let index = common_index(temperatures)?;
        let mut blocks = Vec::new();
        match self.calendar {
            CalendarSet::None => {}
            CalendarSet::Baseline => {
                let names: Vec<String> = CALENDAR_BASELINE.iter().map(|s| s.to_string()).collect();
                blocks.push(calendar_features(&index, holidays)?.select(&names)?);
            }
            CalendarSet::Full => blocks.push(calendar_features(&index, holidays)?),
        }
        if self.current_temperatures {
            blocks.push(current_features(temperatures)?);
        }
        if self.exogenous && !exogenous.is_empty() {
            blocks.push(current_features(exogenous)?);
        }
        if let Some(lags) = self.lags {
            blocks.push(lag_features(temperatures, lags)?);
        }
        if !self.rolling.is_empty() {
            blocks.push(rolling_features(temperatures, &self.rolling)?);
        }
        if !self.aggregates.is_empty() {
            blocks.push(aggregated_features(temperatures, &self.aggregates)?);
        }
        if blocks.is_empty() {
            return Err(invalid("feature configuration selects no blocks"));
        }
        assemble(blocks)
    }
}
