//! CSV ingestion and report emission.
//!
//! Timestamps are ISO 8601 hour beginnings (`2002-01-01T00:00:00` is hour 1).
//! Numbers are written in shortest round-trip form, so reading back an
//! emitted file reproduces the values exactly.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hierarchy::HorizonReconciliation;
use crate::metrics::{gaussian_interval, ScoreReport, NOMINAL_COVERAGE};
use crate::scalar::Scalar;
use crate::selection::{Dendrogram, ImportanceReport};
use crate::series::{Dataset, DistForecast, HolidayCalendar, HourlySeries, PeakForecast};
use crate::time::{TimeIndex, TimePoint};

const TIMESTAMP_FORMATS: [&str; 4] = ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"];

pub fn parse_timestamp(s: &str) -> std::result::Result<TimePoint, String> {
    let s = s.trim();
    let dt = TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .ok_or_else(|| format!("cannot parse timestamp `{s}`"))?;
    if dt.minute() != 0 || dt.second() != 0 {
        return Err(format!("timestamp `{s}` is not on the hour"));
    }
    Ok(TimePoint::from_datetime(dt))
}

pub fn format_timestamp(tp: TimePoint) -> String {
    tp.to_datetime().format("%Y-%m-%dT%H:%M:%S").to_string()
}

fn fmt_num<T: Scalar>(v: T) -> String {
    format!("{v:?}")
}

fn parse_num<T: Scalar>(s: &str, row: usize, col: &str) -> Result<T> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Parse { row, msg: format!("column `{col}`: `{s}` is not a number") })?;
    if !v.is_finite() {
        return Err(Error::Parse { row, msg: format!("column `{col}`: value `{s}` is not finite") });
    }
    T::from_f64(v).ok_or_else(|| Error::Parse { row, msg: format!("column `{col}`: `{s}` out of range") })
}

/// Regular time series table: a `timestamp` column followed by numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table<T: Scalar = f64> {
    pub index: TimeIndex,
    pub columns: Vec<(String, Vec<T>)>,
}

impl<T: Scalar> Table<T> {
    pub fn column(&self, name: &str) -> Result<&[T]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::SchemaMismatch { missing: vec![name.to_string()] })
    }

    pub fn series(&self, name: &str) -> Result<HourlySeries<T>> {
        HourlySeries::with_step(name, self.index.start, self.index.step_hours, self.column(name)?.to_vec())
    }
}

/// Reads a table whose timestamps are strictly increasing and evenly spaced.
/// The spacing is taken from the first two rows. Row numbers in errors are
/// file line numbers (the header is line 1).
pub fn read_table<T: Scalar>(path: &Path) -> Result<Table<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers.first().map(String::as_str) != Some("timestamp") {
        return Err(Error::SchemaMismatch { missing: vec!["timestamp".into()] });
    }
    let names = &headers[1..];
    let mut columns: Vec<Vec<T>> = vec![Vec::new(); names.len()];
    let mut start: Option<TimePoint> = None;
    let mut prev: Option<TimePoint> = None;
    let mut step: Option<i64> = None;
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        if rec.len() != headers.len() {
            return Err(Error::Parse { row, msg: format!("expected {} fields, found {}", headers.len(), rec.len()) });
        }
        let tp = parse_timestamp(&rec[0]).map_err(|msg| Error::Parse { row, msg })?;
        if let Some(p) = prev {
            let d = tp.ordinal() - p.ordinal();
            if d <= 0 {
                return Err(Error::Parse { row, msg: format!("timestamp {} duplicated or out of order", format_timestamp(tp)) });
            }
            match step {
                None => step = Some(d),
                Some(s) if s != d => {
                    return Err(Error::Parse {
                        row,
                        msg: format!("gap before {}: expected a step of {s}h, found {d}h", format_timestamp(tp)),
                    })
                }
                _ => {}
            }
        } else {
            start = Some(tp);
        }
        prev = Some(tp);
        for (c, name) in names.iter().enumerate() {
            columns[c].push(parse_num(&rec[c + 1], row, name)?);
        }
    }
    let start = start.ok_or_else(|| Error::InsufficientData(format!("{} has no data rows", path.display())))?;
    let step = u32::try_from(step.unwrap_or(1)).map_err(|_| invalid("time step too large"))?;
    let index = TimeIndex::new(start, step, columns.first().map_or(0, Vec::len).max(1))?;
    Ok(Table { index, columns: names.iter().cloned().zip(columns).collect() })
}

pub fn write_table<T: Scalar>(path: &Path, index: &TimeIndex, columns: &[(&str, &[T])]) -> Result<()> {
    if columns.iter().any(|(_, c)| c.len() != index.len) {
        return Err(invalid("column lengths differ from the index"));
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["timestamp"];
    header.extend(columns.iter().map(|(n, _)| *n));
    w.write_record(&header)?;
    for (i, tp) in index.iter().enumerate() {
        let mut rec = vec![format_timestamp(tp)];
        rec.extend(columns.iter().map(|(_, c)| fmt_num(c[i])));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Column roles for [`ingest_csv`]. Columns not named as load, exogenous or
/// ignored are temperatures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestOptions {
    pub load_column: String,
    pub exogenous: Vec<String>,
    pub ignore: Vec<String>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self { load_column: "load".into(), exogenous: Vec::new(), ignore: Vec::new() }
    }
}

/// Reads an hourly dataset (`timestamp, load, temperatures...`) and an
/// optional holiday file.
pub fn ingest_csv<T: Scalar>(path: &Path, holidays: Option<&Path>, opts: &IngestOptions) -> Result<Dataset<T>> {
    let table: Table<T> = read_table(path)?;
    if table.index.step_hours != 1 {
        return Err(invalid(format!("{} is not hourly", path.display())));
    }
    let load = table.series(&opts.load_column)?;
    let mut temps = Vec::new();
    let mut exog = Vec::new();
    for (name, _) in &table.columns {
        if *name == opts.load_column || opts.ignore.contains(name) {
            continue;
        }
        let s = table.series(name)?;
        if opts.exogenous.contains(name) {
            exog.push(s);
        } else {
            temps.push(s);
        }
    }
    let missing: Vec<String> =
        opts.exogenous.iter().filter(|n| table.column(n).is_err()).cloned().collect();
    if !missing.is_empty() {
        return Err(Error::SchemaMismatch { missing });
    }
    let holidays = match holidays {
        Some(p) => read_holidays(p)?,
        None => HolidayCalendar::new(),
    };
    Dataset::new(load, temps, exog, holidays)
}

/// Writes `timestamp, load, temperatures..., exogenous...`.
pub fn write_dataset<T: Scalar>(path: &Path, ds: &Dataset<T>) -> Result<()> {
    let mut cols: Vec<(&str, &[T])> = vec![(ds.load.name(), ds.load.values())];
    cols.extend(ds.temperatures.iter().chain(&ds.exogenous).map(|s| (s.name(), s.values())));
    write_table(path, &ds.index(), &cols)
}

/// Reads temperature-like series (every non-timestamp column, minus `ignore`).
pub fn read_series<T: Scalar>(path: &Path, ignore: &[String]) -> Result<Vec<HourlySeries<T>>> {
    let table: Table<T> = read_table(path)?;
    table.columns.iter().filter(|(n, _)| !ignore.contains(n)).map(|(n, _)| table.series(n)).collect()
}

/// Holiday file with columns `date` and optional `name`.
pub fn read_holidays(path: &Path) -> Result<HolidayCalendar> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let date_col = headers
        .iter()
        .position(|h| h == "date")
        .ok_or_else(|| Error::SchemaMismatch { missing: vec!["date".into()] })?;
    let name_col = headers.iter().position(|h| h == "name");
    let mut cal = HolidayCalendar::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let date = NaiveDate::parse_from_str(&rec[date_col], "%Y-%m-%d")
            .map_err(|e| Error::Parse { row, msg: format!("date `{}`: {e}", &rec[date_col]) })?;
        let name = name_col.and_then(|c| rec.get(c)).filter(|s| !s.is_empty()).unwrap_or("holiday");
        cal.insert(date, name);
    }
    Ok(cal)
}

pub fn write_holidays(path: &Path, cal: &HolidayCalendar) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["date", "name"])?;
    for (d, n) in cal.iter() {
        w.write_record([d.format("%Y-%m-%d").to_string(), n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `timestamp, mean, stddev, lo90, hi90`.
pub fn write_forecast<T: Scalar>(path: &Path, dist: &DistForecast<T>) -> Result<()> {
    let (lo, hi) = gaussian_interval(dist, NOMINAL_COVERAGE)?;
    write_table(path, &dist.index, &[("mean", &dist.mean), ("stddev", &dist.stddev), ("lo90", &lo), ("hi90", &hi)])
}

pub fn read_forecast<T: Scalar>(path: &Path) -> Result<DistForecast<T>> {
    let t: Table<T> = read_table(path)?;
    DistForecast::new(t.index, t.column("mean")?.to_vec(), t.column("stddev")?.to_vec())
}

/// `date, peak_value, peak_hour`.
pub fn write_peaks<T: Scalar>(path: &Path, peaks: &[PeakForecast<T>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["date", "peak_value", "peak_hour"])?;
    for p in peaks {
        w.write_record([p.date.format("%Y-%m-%d").to_string(), fmt_num(p.peak_value), p.peak_hour.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_peaks<T: Scalar>(path: &Path) -> Result<Vec<PeakForecast<T>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        if rec.len() != 3 {
            return Err(Error::Parse { row, msg: "expected date, peak_value, peak_hour".into() });
        }
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .map_err(|e| Error::Parse { row, msg: format!("date `{}`: {e}", &rec[0]) })?;
        let peak_value = parse_num(&rec[1], row, "peak_value")?;
        let peak_hour: u32 = rec[2]
            .parse()
            .ok()
            .filter(|h| (1..=24).contains(h))
            .ok_or_else(|| Error::Parse { row, msg: format!("peak_hour `{}` not in 1..=24", &rec[2]) })?;
        out.push(PeakForecast { date, peak_value, peak_hour });
    }
    Ok(out)
}

/// One header row of metric names (plus `skill_<metric>` columns) and one row of values.
pub fn write_scores_csv<T: Scalar>(path: &Path, report: &ScoreReport<T>) -> Result<()> {
    let mut header: Vec<String> = ScoreReport::<T>::METRICS.iter().map(|s| s.to_string()).collect();
    let mut values: Vec<String> = report.values().iter().map(|v| fmt_num(*v)).collect();
    for (name, v) in &report.skill {
        header.push(format!("skill_{name}"));
        values.push(fmt_num(*v));
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&header)?;
    w.write_record(&values)?;
    w.flush()?;
    Ok(())
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

/// `cluster_id, members, mean_drop, std_drop, kept`; members are `;`-separated.
pub fn write_importance<T: Scalar>(
    path: &Path,
    report: &ImportanceReport<T>,
    kept: &std::collections::BTreeSet<usize>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["cluster_id", "members", "mean_drop", "std_drop", "kept"])?;
    for (i, c) in report.clusters.iter().enumerate() {
        w.write_record([
            c.id.to_string(),
            c.members.join(";"),
            fmt_num(report.mean_drop[i]),
            fmt_num(report.std_drop[i]),
            u8::from(kept.contains(&c.id)).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Dendrogram edge list. Ids below the leaf count are features, named in the
/// `*_name` columns; larger ids are earlier merges.
pub fn write_dendrogram(path: &Path, dg: &Dendrogram) -> Result<()> {
    let n = dg.names.len();
    let name = |id: usize| if id < n { dg.names[id].clone() } else { String::new() };
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["merge_id", "left", "right", "left_name", "right_name", "distance", "size"])?;
    for (i, m) in dg.merges.iter().enumerate() {
        w.write_record([
            (n + i).to_string(),
            m.left.to_string(),
            m.right.to_string(),
            name(m.left),
            name(m.right),
            fmt_num(m.distance),
            m.size.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per node and day: base and reconciled mean and variance.
pub fn write_reconcile_report<T: Scalar>(path: &Path, rec: &HorizonReconciliation<T>) -> Result<()> {
    let hs = &rec.structure;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["date", "node", "scale", "base_mean", "base_var", "rec_mean", "rec_var"])?;
    for (d, (base, day)) in rec.base.iter().zip(&rec.days).enumerate() {
        let date = rec.bottom.index.at(d * 24).date().format("%Y-%m-%d").to_string();
        for (r, label) in hs.labels.iter().enumerate() {
            w.write_record([
                date.clone(),
                label.clone(),
                hs.nodes[r].0.to_string(),
                fmt_num(base.mean[r]),
                fmt_num(base.variance[r]),
                fmt_num(day.mean[r]),
                fmt_num(day.variance[r]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
