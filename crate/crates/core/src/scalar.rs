//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar the models and metrics are generic over (`f32` or `f64`).
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    /// Widens to `f64`.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    /// Converts a count into the scalar type.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Sum with Neumaier compensation; used wherever long accumulations feed a test tolerance.
pub fn compensated_sum<T: Scalar>(values: impl IntoIterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp = comp + ((sum - t) + v);
        } else {
            comp = comp + ((v - t) + sum);
        }
        sum = t;
    }
    sum + comp
}

/// Arithmetic mean; `None` on empty input.
pub fn mean<T: Scalar>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    Some(compensated_sum(values.iter().copied()) / T::of_usize(values.len()))
}

/// Population standard deviation (divisor `n`).
pub fn std_population<T: Scalar>(values: &[T]) -> Option<T> {
    let m = mean(values)?;
    let ss = compensated_sum(values.iter().map(|&v| (v - m) * (v - m)));
    Some((ss / T::of_usize(values.len())).sqrt())
}

/// Sample standard deviation (divisor `n - 1`); `None` when fewer than two values.
pub fn std_sample<T: Scalar>(values: &[T]) -> Option<T> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values)?;
    let ss = compensated_sum(values.iter().map(|&v| (v - m) * (v - m)));
    Some((ss / T::of_usize(values.len() - 1)).sqrt())
}

/// Median of an already sorted slice.
pub fn median_sorted<T: Scalar>(sorted: &[T]) -> Option<T> {
    let n = sorted.len();
    if n == 0 {
        return None;
    }
    if n % 2 == 1 {
        Some(sorted[n / 2])
    } else {
        Some((sorted[n / 2 - 1] + sorted[n / 2]) / T::lit(2.0))
    }
}

/// Empirical quantile with linear interpolation between order statistics
/// (the "type 7" definition used by numpy and R by default).
pub fn quantile<T: Scalar>(values: &[T], q: f64) -> Option<T> {
    if values.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::lit(pos - lo as f64);
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_statistics() {
        let v = [1.0_f64, 2.0, 3.0, 4.0];
        assert_eq!(mean(&v), Some(2.5));
        assert!((std_population(&v).unwrap() - 1.25_f64.sqrt()).abs() < 1e-15);
        assert!((std_sample(&v).unwrap() - (5.0_f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(median_sorted(&v), Some(2.5));
        assert_eq!(std_sample(&[1.0_f64]), None);
        assert_eq!(mean::<f64>(&[]), None);
    }

    #[test]
    fn quantile_interpolates() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(quantile(&v, 0.0), Some(1.0));
        assert_eq!(quantile(&v, 1.0), Some(100.0));
        assert!((quantile(&v, 0.02).unwrap() - 2.98).abs() < 1e-12);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16_f64, 1.0, -1e16];
        assert_eq!(compensated_sum(v), 1.0);
        let f: f32 = compensated_sum([0.5_f32, 0.25]);
        assert_eq!(f, 0.75);
    }
}
