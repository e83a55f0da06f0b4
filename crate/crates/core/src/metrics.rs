//! Point, peak and probabilistic scores.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::{compensated_sum, Scalar};
use crate::series::{argmax_first, daily_peaks, DistForecast, PeakForecast};

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal CDF through `erfc`, accurate in both tails.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal quantile: Acklam's rational approximation polished by one Halley step.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("quantile level {p} outside (0, 1)")));
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let p_low = 0.024_25;
    let x = if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    Ok(x - u / (1.0 + 0.5 * x * u))
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(invalid(format!("length mismatch: {a} actual vs {b} forecast values")));
    }
    if a == 0 {
        return Err(invalid("no values to score"));
    }
    Ok(())
}

/// Mean absolute percentage error, in percent.
pub fn mape<T: Scalar>(actual: &[T], forecast: &[T]) -> Result<T> {
    check_lengths(actual.len(), forecast.len())?;
    if let Some(i) = actual.iter().position(|y| *y == T::zero()) {
        return Err(invalid(format!("actual value at position {i} is zero; MAPE undefined")));
    }
    let total = compensated_sum(actual.iter().zip(forecast).map(|(&y, &f)| (y - f).abs() / y.abs()));
    Ok(total / T::of_usize(actual.len()) * T::lit(100.0))
}

/// MAPE of daily peak values; days must match one to one.
pub fn magnitude<T: Scalar>(actual: &[PeakForecast<T>], forecast: &[PeakForecast<T>]) -> Result<T> {
    check_lengths(actual.len(), forecast.len())?;
    if let Some((a, f)) = actual.iter().zip(forecast).find(|(a, f)| a.date != f.date) {
        return Err(invalid(format!("peak dates differ: {} vs {}", a.date, f.date)));
    }
    let a: Vec<T> = actual.iter().map(|p| p.peak_value).collect();
    let f: Vec<T> = forecast.iter().map(|p| p.peak_value).collect();
    mape(&a, &f)
}

fn check_hours(hours: &[u32]) -> Result<()> {
    match hours.iter().find(|h| !(1..=24).contains(*h)) {
        Some(h) => Err(invalid(format!("peak hour {h} outside 1..=24"))),
        None => Ok(()),
    }
}

/// Mean absolute peak-hour error.
pub fn timing_qual<T: Scalar>(actual_hours: &[u32], forecast_hours: &[u32]) -> Result<T> {
    check_lengths(actual_hours.len(), forecast_hours.len())?;
    check_hours(actual_hours)?;
    check_hours(forecast_hours)?;
    let total: u64 = actual_hours.iter().zip(forecast_hours).map(|(&a, &f)| u64::from(a.abs_diff(f))).sum();
    Ok(T::lit(total as f64) / T::of_usize(actual_hours.len()))
}

/// Cost of missing the peak hour by `delta` hours: `|d|` for 1, `2|d|` for 2..=4, 10 beyond, 0 on a hit.
pub fn timing_weight(delta: u32) -> u32 {
    match delta {
        0 => 0,
        1 => 1,
        2..=4 => 2 * delta,
        _ => 10,
    }
}

/// Mean of the non-uniform peak-hour cost.
pub fn timing_final<T: Scalar>(actual_hours: &[u32], forecast_hours: &[u32]) -> Result<T> {
    check_lengths(actual_hours.len(), forecast_hours.len())?;
    check_hours(actual_hours)?;
    check_hours(forecast_hours)?;
    let total: u64 = actual_hours
        .iter()
        .zip(forecast_hours)
        .map(|(&a, &f)| u64::from(timing_weight(a.abs_diff(f))))
        .sum();
    Ok(T::lit(total as f64) / T::of_usize(actual_hours.len()))
}

/// Peak-window profile error.
///
/// Each day is divided by its own maximum; absolute differences are summed
/// over the actual peak hour +-2 (clipped to the day) and averaged over days.
pub fn shape<T: Scalar>(actual: &[T], forecast: &[T]) -> Result<T> {
    check_lengths(actual.len(), forecast.len())?;
    if actual.len() % 24 != 0 {
        return Err(invalid("shape needs whole days of 24 hourly values"));
    }
    let days = actual.len() / 24;
    let mut total = T::zero();
    for (d, (a, f)) in actual.chunks_exact(24).zip(forecast.chunks_exact(24)).enumerate() {
        let (peak0, &amax) = argmax_first(a);
        let (_, &fmax) = argmax_first(f);
        if !(amax > T::zero()) || !(fmax > T::zero()) {
            return Err(invalid(format!("day {d}: daily maximum must be positive")));
        }
        let lo = peak0.saturating_sub(2);
        let hi = (peak0 + 2).min(23);
        for t in lo..=hi {
            total = total + (a[t] / amax - f[t] / fmax).abs();
        }
    }
    Ok(total / T::of_usize(days))
}

/// Closed-form CRPS of a Gaussian predictive distribution.
pub fn crps_gaussian<T: Scalar>(mu: T, sigma: T, y: T) -> Result<T> {
    if !(sigma > T::zero()) {
        return Err(invalid(format!("sigma must be positive, got {sigma}")));
    }
    let (m, s, y) = (mu.as_f64(), sigma.as_f64(), y.as_f64());
    let z = (y - m) / s;
    Ok(T::lit(s * (z * (2.0 * normal_cdf(z) - 1.0) + 2.0 * normal_pdf(z) - FRAC_1_SQRT_PI)))
}

/// Interval score of `[l, u]` at nominal coverage `1 - alpha`.
pub fn interval_score<T: Scalar>(l: T, u: T, y: T, alpha: T) -> Result<T> {
    if l > u {
        return Err(invalid(format!("interval lower bound {l} exceeds upper bound {u}")));
    }
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(invalid(format!("alpha {alpha} outside (0, 1)")));
    }
    let two_over = T::lit(2.0) / alpha;
    let mut score = u - l;
    if y < l {
        score = score + two_over * (l - y);
    }
    if y > u {
        score = score + two_over * (y - u);
    }
    Ok(score)
}

/// Percentage of observations inside their interval.
pub fn coverage<T: Scalar>(lo: &[T], hi: &[T], ys: &[T]) -> Result<T> {
    check_lengths(lo.len(), ys.len())?;
    check_lengths(hi.len(), ys.len())?;
    let inside = ys.iter().zip(lo.iter().zip(hi)).filter(|(y, (l, u))| *l <= *y && *y <= *u).count();
    Ok(T::of_usize(inside) / T::of_usize(ys.len()) * T::lit(100.0))
}

/// Symmetric percentage improvement of `m_new` over `m_origin`.
pub fn skill<T: Scalar>(m_origin: T, m_new: T) -> Result<T> {
    let den = (m_origin + m_new) / T::lit(2.0);
    if den == T::zero() {
        return Err(invalid("skill score undefined when both metrics sum to zero"));
    }
    Ok((m_origin - m_new) / den * T::lit(100.0))
}

/// Central Gaussian prediction interval `mu -+ z sigma` with the given coverage.
pub fn gaussian_interval<T: Scalar>(dist: &DistForecast<T>, coverage: f64) -> Result<(Vec<T>, Vec<T>)> {
    let z = T::lit(normal_quantile(0.5 + coverage / 2.0)?);
    let lo = dist.mean.iter().zip(&dist.stddev).map(|(&m, &s)| m - z * s).collect();
    let hi = dist.mean.iter().zip(&dist.stddev).map(|(&m, &s)| m + z * s).collect();
    Ok((lo, hi))
}

/// Nominal interval coverage used in reports.
pub const NOMINAL_COVERAGE: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ScoreReport<T: Scalar = f64> {
    pub mape_h: T,
    pub magnitude: T,
    pub timing_qual: T,
    pub timing_final: T,
    pub shape: T,
    pub crps_mean: T,
    pub interval_score_mean: T,
    pub coverage_pct: T,
    /// Skill of this forecast against a reference, per metric name.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skill: Vec<(String, T)>,
}

impl<T: Scalar> ScoreReport<T> {
    pub const METRICS: [&'static str; 8] = [
        "mape_h",
        "magnitude",
        "timing_qual",
        "timing_final",
        "shape",
        "crps_mean",
        "interval_score_mean",
        "coverage_pct",
    ];

    pub fn values(&self) -> [T; 8] {
        [
            self.mape_h,
            self.magnitude,
            self.timing_qual,
            self.timing_final,
            self.shape,
            self.crps_mean,
            self.interval_score_mean,
            self.coverage_pct,
        ]
    }

    /// Adds the skill of `self` relative to `reference` for every error metric (coverage excluded).
    /// A metric that is zero in both reports gets skill 0.
    pub fn with_skill_against(mut self, reference: &ScoreReport<T>) -> Self {
        self.skill = Self::METRICS
            .iter()
            .zip(reference.values().iter().zip(self.values()))
            .filter(|(name, _)| **name != "coverage_pct")
            .map(|(name, (&r, n))| (name.to_string(), skill(r, n).unwrap_or_else(|_| T::zero())))
            .collect();
        self
    }
}

/// Scores an hourly Gaussian forecast against hourly actuals covering whole days.
pub fn score_forecast<T: Scalar>(actual: &[T], forecast: &DistForecast<T>) -> Result<ScoreReport<T>> {
    check_lengths(actual.len(), forecast.mean.len())?;
    let actual_peaks = daily_peaks(&forecast.index, actual)?;
    let fc_peaks = daily_peaks(&forecast.index, &forecast.mean)?;
    let a_hours: Vec<u32> = actual_peaks.iter().map(|p| p.peak_hour).collect();
    let f_hours: Vec<u32> = fc_peaks.iter().map(|p| p.peak_hour).collect();
    let alpha = T::lit(1.0 - NOMINAL_COVERAGE);
    let (lo, hi) = gaussian_interval(forecast, NOMINAL_COVERAGE)?;
    let n = T::of_usize(actual.len());
    let crps = actual
        .iter()
        .zip(forecast.mean.iter().zip(&forecast.stddev))
        .map(|(&y, (&m, &s))| crps_gaussian(m, s, y))
        .collect::<Result<Vec<T>>>()?;
    let is = actual
        .iter()
        .zip(lo.iter().zip(&hi))
        .map(|(&y, (&l, &u))| interval_score(l, u, y, alpha))
        .collect::<Result<Vec<T>>>()?;
    Ok(ScoreReport {
        mape_h: mape(actual, &forecast.mean)?,
        magnitude: magnitude(&actual_peaks, &fc_peaks)?,
        timing_qual: timing_qual(&a_hours, &f_hours)?,
        timing_final: timing_final(&a_hours, &f_hours)?,
        shape: shape(actual, &forecast.mean)?,
        crps_mean: compensated_sum(crps) / n,
        interval_score_mean: compensated_sum(is) / n,
        coverage_pct: coverage(&lo, &hi, actual)?,
        skill: Vec::new(),
    })
}
