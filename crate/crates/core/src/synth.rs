//! Seeded synthetic load and temperature data with known generating components.

use std::f64::consts::PI;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::{Dataset, HolidayCalendar, HourlySeries};
use crate::time::{TimeIndex, TimePoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub years: u32,
    pub start_year: i32,
    pub rng_seed: u64,
    /// MW at the first hour before seasonal and weather terms.
    pub base_load: f64,
    /// MW per hourly step.
    pub trend_slope: f64,
    pub daily_amplitude: f64,
    /// Weekend reduction in MW.
    pub weekly_amplitude: f64,
    pub annual_amplitude: f64,
    /// MW reduction on holidays.
    pub holiday_effect: f64,
    pub comfort_temp: f64,
    /// MW per degree below the comfort temperature.
    pub heating_sensitivity: f64,
    /// MW per degree above the comfort temperature.
    pub cooling_sensitivity: f64,
    pub temp_lag_hours: usize,
    pub noise_std: f64,
    pub n_stations: usize,
    pub n_noise_features: usize,
    pub temp_mean: f64,
    pub temp_annual_amplitude: f64,
    pub temp_daily_amplitude: f64,
    /// Per-station offsets are spread evenly over `[-spread, spread]`.
    pub station_spread: f64,
    pub ar_coefficient: f64,
    pub ar_std: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            years: 3,
            start_year: 2002,
            rng_seed: 0,
            base_load: 1000.0,
            trend_slope: 0.01,
            daily_amplitude: 150.0,
            weekly_amplitude: 60.0,
            annual_amplitude: 80.0,
            holiday_effect: 80.0,
            comfort_temp: 65.0,
            heating_sensitivity: 6.0,
            cooling_sensitivity: 10.0,
            temp_lag_hours: 3,
            noise_std: 15.0,
            n_stations: 4,
            n_noise_features: 2,
            temp_mean: 58.0,
            temp_annual_amplitude: 22.0,
            temp_daily_amplitude: 8.0,
            station_spread: 2.0,
            ar_coefficient: 0.95,
            ar_std: 1.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let amps = [
            self.daily_amplitude,
            self.weekly_amplitude,
            self.annual_amplitude,
            self.holiday_effect,
            self.temp_annual_amplitude,
            self.temp_daily_amplitude,
            self.noise_std,
            self.ar_std,
            self.station_spread,
            self.heating_sensitivity,
            self.cooling_sensitivity,
        ];
        if amps.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
            return Err(Error::Config("amplitudes, sensitivities and noise levels must be finite and >= 0".into()));
        }
        if self.years == 0 {
            return Err(Error::Config("years must be at least 1".into()));
        }
        if self.n_stations == 0 {
            return Err(Error::Config("at least one temperature station is required".into()));
        }
        if !(self.ar_coefficient.abs() < 1.0) {
            return Err(Error::Config("AR coefficient must lie in (-1, 1)".into()));
        }
        if NaiveDate::from_ymd_opt(self.start_year, 1, 1).is_none() {
            return Err(Error::Config(format!("start year {} out of range", self.start_year)));
        }
        Ok(())
    }
}

/// Generating components; `load = trend + seasonal + holiday + temperature_response + noise`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTruth {
    pub spec: SyntheticSpec,
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub holiday: Vec<f64>,
    pub temperature_response: Vec<f64>,
    pub noise: Vec<f64>,
    /// Station average that drives the temperature response (unlagged).
    pub driver_temperature: Vec<f64>,
}

/// New Year, Independence Day and Christmas of every covered year.
pub fn fixed_holidays(first_year: i32, last_year: i32) -> HolidayCalendar {
    let mut cal = HolidayCalendar::new();
    for y in first_year..=last_year {
        for (m, d, name) in [(1, 1, "new_year"), (7, 4, "independence_day"), (12, 25, "christmas")] {
            if let Some(date) = NaiveDate::from_ymd_opt(y, m, d) {
                cal.insert(date, name);
            }
        }
    }
    cal
}

fn normal(std: f64) -> Normal<f64> {
    Normal::new(0.0, std).expect("validated non-negative std")
}

pub fn gen_synthetic<T: Scalar>(spec: &SyntheticSpec) -> Result<(Dataset<T>, SyntheticTruth)> {
    spec.validate()?;
    let start = TimePoint::new(spec.start_year, 1, 1, 1)?;
    let end = TimePoint::new(spec.start_year + spec.years as i32, 1, 1, 1)?;
    let n = (end.ordinal() - start.ordinal()) as usize;
    let lag = spec.temp_lag_hours;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);

    // temperatures include `lag` burn-in hours before the start
    let total = n + lag;
    let t0 = start.add_hours(-(lag as i64));
    let innov = normal(spec.ar_std);
    let stationary = normal(spec.ar_std / (1.0 - spec.ar_coefficient * spec.ar_coefficient).sqrt());
    let mut stations = Vec::with_capacity(spec.n_stations);
    for s in 0..spec.n_stations {
        let offset = if spec.n_stations == 1 {
            0.0
        } else {
            -spec.station_spread + 2.0 * spec.station_spread * s as f64 / (spec.n_stations - 1) as f64
        };
        let mut e = stationary.sample(&mut rng);
        let mut v = Vec::with_capacity(total);
        for i in 0..total {
            if i > 0 {
                e = spec.ar_coefficient * e + innov.sample(&mut rng);
            }
            let tp = t0.add_hours(i as i64);
            let doy = f64::from(tp.date().ordinal());
            let h = f64::from(tp.hour());
            let annual = -spec.temp_annual_amplitude * (2.0 * PI * (doy - 15.0) / 365.25).cos();
            let daily = -spec.temp_daily_amplitude * (2.0 * PI * (h - 4.0) / 24.0).cos();
            v.push(spec.temp_mean + offset + annual + daily + e);
        }
        stations.push(v);
    }
    let driver: Vec<f64> =
        (0..total).map(|i| stations.iter().map(|s| s[i]).sum::<f64>() / spec.n_stations as f64).collect();

    let holidays = fixed_holidays(spec.start_year - 1, spec.start_year + spec.years as i32);
    let noise_dist = normal(spec.noise_std);
    let mut truth = SyntheticTruth {
        spec: spec.clone(),
        trend: Vec::with_capacity(n),
        seasonal: Vec::with_capacity(n),
        holiday: Vec::with_capacity(n),
        temperature_response: Vec::with_capacity(n),
        noise: Vec::with_capacity(n),
        driver_temperature: driver[lag..].to_vec(),
    };
    let mut load = Vec::with_capacity(n);
    for i in 0..n {
        let tp = start.add_hours(i as i64);
        let date = tp.date();
        let h = f64::from(tp.hour());
        let trend = spec.base_load + spec.trend_slope * (i + 1) as f64;
        let weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
        let seasonal = spec.daily_amplitude * (2.0 * PI * (h - 12.0) / 24.0).sin()
            - if weekend { spec.weekly_amplitude } else { 0.0 }
            + spec.annual_amplitude * (2.0 * PI * (f64::from(date.ordinal()) - 200.0) / 365.25).cos();
        let holiday = if holidays.contains(date) { -spec.holiday_effect } else { 0.0 };
        let temp = driver[i]; // index i of `driver` is hour i - lag relative to the start
        let response = spec.heating_sensitivity * (spec.comfort_temp - temp).max(0.0)
            + spec.cooling_sensitivity * (temp - spec.comfort_temp).max(0.0);
        let noise = noise_dist.sample(&mut rng);
        load.push(trend + seasonal + holiday + response + noise);
        truth.trend.push(trend);
        truth.seasonal.push(seasonal);
        truth.holiday.push(holiday);
        truth.temperature_response.push(response);
        truth.noise.push(noise);
    }
    let noise_features: Vec<Vec<f64>> =
        (0..spec.n_noise_features).map(|_| (0..n).map(|_| normal(1.0).sample(&mut rng)).collect()).collect();

    let to_t = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
    let load = HourlySeries::new("load", start, to_t(&load))?;
    let temperatures = stations
        .iter()
        .enumerate()
        .map(|(s, v)| HourlySeries::new(format!("T{}", s + 1), start, to_t(&v[lag..])))
        .collect::<Result<Vec<_>>>()?;
    let exogenous = noise_features
        .iter()
        .enumerate()
        .map(|(k, v)| HourlySeries::new(format!("noise{}", k + 1), start, to_t(v)))
        .collect::<Result<Vec<_>>>()?;
    debug_assert_eq!(load.index(), TimeIndex::hourly(start, n));
    Ok((Dataset::new(load, temperatures, exogenous, holidays)?, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::fit_trend;

    #[test]
    fn noiseless_without_weather_is_closed_form() {
        let spec = SyntheticSpec {
            years: 1,
            noise_std: 0.0,
            heating_sensitivity: 0.0,
            cooling_sensitivity: 0.0,
            ..Default::default()
        };
        let (ds, truth) = gen_synthetic::<f64>(&spec).unwrap();
        assert_eq!(ds.len(), 8760);
        for i in 0..ds.len() {
            let expected = truth.trend[i] + truth.seasonal[i] + truth.holiday[i];
            assert_eq!(ds.load.values()[i], expected);
        }
        // hour 18 of an ordinary weekday in spring
        let i = (31 + 28 + 14) * 24 + 17;
        let tp = ds.index().at(i);
        assert_eq!(tp.hour(), 18);
        let expected = 1000.0
            + 0.01 * (i + 1) as f64
            + 150.0
            + 80.0 * (2.0 * PI * (f64::from(tp.date().ordinal()) - 200.0) / 365.25).cos();
        assert!((ds.load.values()[i] - expected).abs() < 1e-9);
    }

    #[test]
    fn seeded_output_is_reproducible() {
        let spec = SyntheticSpec { years: 1, rng_seed: 42, ..Default::default() };
        let (a, ta) = gen_synthetic::<f64>(&spec).unwrap();
        let (b, tb) = gen_synthetic::<f64>(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        let (c, _) = gen_synthetic::<f64>(&SyntheticSpec { rng_seed: 43, ..spec }).unwrap();
        assert_ne!(a.load, c.load);
        assert_eq!(a.temperatures.len(), 4);
        assert_eq!(a.exogenous.len(), 2);
    }

    #[test]
    fn trend_is_recoverable_without_seasonality() {
        let spec = SyntheticSpec {
            years: 2,
            daily_amplitude: 0.0,
            weekly_amplitude: 0.0,
            annual_amplitude: 0.0,
            holiday_effect: 0.0,
            temp_annual_amplitude: 0.0,
            temp_daily_amplitude: 0.0,
            ..Default::default()
        };
        let (ds, _) = gen_synthetic::<f64>(&spec).unwrap();
        let tm = fit_trend(&ds.load).unwrap();
        assert!((tm.beta1 - 0.01).abs() < 0.05 * 0.01, "slope {}", tm.beta1);
    }

    #[test]
    fn invalid_specs() {
        assert!(SyntheticSpec { years: 0, ..Default::default() }.validate().is_err());
        assert!(SyntheticSpec { noise_std: -1.0, ..Default::default() }.validate().is_err());
        assert!(SyntheticSpec { ar_coefficient: 1.0, ..Default::default() }.validate().is_err());
    }
}
