//! Temporal hierarchies: block aggregation, the daily summing matrix, and
//! Gaussian reconciliation by generalised least squares.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::{compensated_sum, Scalar};
use crate::series::{DistForecast, HourlySeries};
use crate::time::TimeIndex;

pub const DEFAULT_SCALES: [usize; 5] = [1, 2, 4, 6, 12];

/// Non-overlapping block sums of `k` consecutive hours, aligned to day boundaries.
pub fn aggregate_series<T: Scalar>(s: &HourlySeries<T>, k: usize) -> Result<HourlySeries<T>> {
    if s.step_hours() != 1 {
        return Err(invalid("aggregation expects an hourly series"));
    }
    if k == 0 || 24 % k != 0 {
        return Err(invalid(format!("scale {k} does not divide 24")));
    }
    if (s.start().hour() as usize - 1) % k != 0 || s.len() % k != 0 {
        return Err(Error::Alignment(format!(
            "series `{}` starting {} with {} values is not aligned to {k}-hour blocks",
            s.name(),
            s.start(),
            s.len()
        )));
    }
    let values = s.values().chunks(k).map(|c| compensated_sum(c.iter().copied())).collect();
    HourlySeries::with_step(s.name(), s.start(), k as u32, values)
}

/// Summing matrix of one day. Rows are grouped by scale in descending order;
/// the last `day_hours` rows (scale 1) form the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyStructure {
    pub day_hours: usize,
    pub scales: Vec<usize>,
    /// `(scale, first bottom hour)` per row.
    pub nodes: Vec<(usize, usize)>,
    pub labels: Vec<String>,
}

impl HierarchyStructure {
    pub fn new(scales: &[usize]) -> Result<Self> {
        Self::with_day_length(scales, 24)
    }

    /// Structure over a day of `day_hours` bottom nodes (toy hierarchies use small values).
    pub fn with_day_length(scales: &[usize], day_hours: usize) -> Result<Self> {
        if day_hours == 0 {
            return Err(invalid("day length must be positive"));
        }
        let mut sc: Vec<usize> = scales.to_vec();
        sc.sort_unstable_by(|a, b| b.cmp(a));
        sc.dedup();
        if let Some(&k) = sc.iter().find(|&&k| k == 0 || day_hours % k != 0) {
            return Err(invalid(format!("scale {k} does not divide the day length {day_hours}")));
        }
        if sc.last() != Some(&1) {
            sc.push(1);
        }
        let mut nodes = Vec::new();
        let mut labels = Vec::new();
        for &k in &sc {
            for j in 0..day_hours / k {
                nodes.push((k, j * k));
                labels.push(format!("k{k}_{}", j + 1));
            }
        }
        Ok(Self { day_hours, scales: sc, nodes, labels })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Dense 0/1 summing matrix, `n_nodes x day_hours`.
    pub fn summing_matrix(&self) -> Vec<Vec<u8>> {
        self.nodes
            .iter()
            .map(|&(k, first)| (0..self.day_hours).map(|h| u8::from(h >= first && h < first + k)).collect())
            .collect()
    }

    /// Node values `S b` for bottom values `b`.
    pub fn aggregate<T: Scalar>(&self, bottom: &[T]) -> Vec<T> {
        self.nodes.iter().map(|&(k, first)| compensated_sum(bottom[first..first + k].iter().copied())).collect()
    }

    /// Row range of scale `k` within the node list.
    pub fn scale_rows(&self, k: usize) -> Option<std::ops::Range<usize>> {
        let start = self.nodes.iter().position(|&(s, _)| s == k)?;
        Some(start..start + self.day_hours / k)
    }
}

/// Base forecasts for every node of one day, in [`HierarchyStructure`] row order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BaseForecasts<T: Scalar = f64> {
    pub mean: Vec<T>,
    pub variance: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ReconciledForecasts<T: Scalar = f64> {
    pub mean: Vec<T>,
    pub variance: Vec<T>,
}

impl<T: Scalar> ReconciledForecasts<T> {
    /// The trailing `day_hours` nodes.
    pub fn bottom(&self, hs: &HierarchyStructure) -> (&[T], &[T]) {
        let s = self.mean.len() - hs.day_hours;
        (&self.mean[s..], &self.variance[s..])
    }
}

/// In-place Cholesky factor `L` (lower triangle) of a symmetric positive definite matrix.
fn cholesky<T: Scalar>(a: &mut [Vec<T>]) -> Result<()> {
    let n = a.len();
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d = d - a[j][k] * a[j][k];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::Singular("normal matrix of the reconciliation is not positive definite".into()));
        }
        let d = d.sqrt();
        a[j][j] = d;
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s = s - a[i][k] * a[j][k];
            }
            a[i][j] = s / d;
        }
    }
    Ok(())
}

fn cholesky_solve<T: Scalar>(l: &[Vec<T>], b: &[T]) -> Vec<T> {
    let n = l.len();
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] = y[i] - l[i][k] * y[k];
        }
        y[i] = y[i] / l[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] = y[i] - l[k][i] * y[k];
        }
        y[i] = y[i] / l[i][i];
    }
    y
}

/// GLS reconciliation with `W = diag(variance)`:
/// `b = (S' W^-1 S)^-1 S' W^-1 y`, node means `S b`, node covariance `S (S' W^-1 S)^-1 S'`.
pub fn reconcile<T: Scalar>(base: &BaseForecasts<T>, hs: &HierarchyStructure) -> Result<ReconciledForecasts<T>> {
    let n = hs.n_nodes();
    let m = hs.day_hours;
    if base.mean.len() != n || base.variance.len() != n {
        return Err(invalid(format!("expected {n} base forecasts, got {}", base.mean.len())));
    }
    if let Some(i) = base.variance.iter().position(|v| !(*v > T::zero()) || !v.is_finite()) {
        return Err(invalid(format!("base variance of node {} must be positive", hs.labels[i])));
    }
    if base.mean.iter().any(|v| !v.is_finite()) {
        return Err(invalid("base means must be finite"));
    }
    let mut p = vec![vec![T::zero(); m]; m];
    let mut rhs = vec![T::zero(); m];
    for (r, &(k, first)) in hs.nodes.iter().enumerate() {
        let w = T::one() / base.variance[r];
        for i in first..first + k {
            rhs[i] = rhs[i] + w * base.mean[r];
            for j in first..first + k {
                p[i][j] = p[i][j] + w;
            }
        }
    }
    cholesky(&mut p)?;
    let bottom = cholesky_solve(&p, &rhs);
    let mean = hs.aggregate(&bottom);
    // diag(S P^-1 S') = s_r' P^-1 s_r, computed via one solve per row
    let variance = hs
        .nodes
        .iter()
        .map(|&(k, first)| {
            let mut e = vec![T::zero(); m];
            e[first..first + k].iter_mut().for_each(|v| *v = T::one());
            let x = cholesky_solve(&p, &e);
            compensated_sum(x[first..first + k].iter().copied())
        })
        .collect();
    Ok(ReconciledForecasts { mean, variance })
}

/// Per-day reconciliation over a multi-day horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct HorizonReconciliation<T: Scalar = f64> {
    pub structure: HierarchyStructure,
    pub base: Vec<BaseForecasts<T>>,
    pub days: Vec<ReconciledForecasts<T>>,
    /// Hourly forecast with reconciled mean and `sqrt(diag V)` of the bottom nodes.
    pub bottom: DistForecast<T>,
}

impl<T: Scalar> HorizonReconciliation<T> {
    /// Reconciled forecast at scale `k` as a distribution on that scale's index.
    pub fn at_scale(&self, k: usize) -> Result<DistForecast<T>> {
        let rows = self.structure.scale_rows(k).ok_or_else(|| invalid(format!("scale {k} not in the hierarchy")))?;
        let mut mean = Vec::new();
        let mut sd = Vec::new();
        for d in &self.days {
            mean.extend_from_slice(&d.mean[rows.clone()]);
            sd.extend(d.variance[rows.clone()].iter().map(|v| v.sqrt()));
        }
        let index = TimeIndex::new(self.bottom.index.start, k as u32, mean.len())?;
        DistForecast::new(index, mean, sd)
    }
}

/// Reconciles per-scale forecasts day by day. `per_scale` must contain one
/// forecast for every scale of `hs`, each with `step_hours == scale` and
/// covering the same whole days.
pub fn reconcile_horizon<T: Scalar>(
    per_scale: &[(usize, DistForecast<T>)],
    hs: &HierarchyStructure,
) -> Result<HorizonReconciliation<T>> {
    if hs.day_hours != 24 {
        return Err(invalid("horizon reconciliation needs a 24-hour day structure"));
    }
    let find = |k: usize| {
        per_scale
            .iter()
            .find(|(s, _)| *s == k)
            .map(|(_, f)| f)
            .ok_or_else(|| Error::Alignment(format!("no forecast for scale {k}")))
    };
    let hourly = find(1)?;
    let start = hourly.index.start;
    if start.hour() != 1 || hourly.index.step_hours != 1 || hourly.index.len % 24 != 0 {
        return Err(Error::Alignment("hourly forecast must cover whole days".into()));
    }
    let n_days = hourly.index.len / 24;
    for &k in &hs.scales {
        let f = find(k)?;
        if f.index.start != start || f.index.step_hours as usize != k || f.index.len != n_days * 24 / k {
            return Err(Error::Alignment(format!(
                "scale {k} forecast does not cover the same {n_days} days as the hourly forecast"
            )));
        }
    }
    let base: Vec<BaseForecasts<T>> = (0..n_days)
        .map(|d| {
            let mut mean = Vec::with_capacity(hs.n_nodes());
            let mut variance = Vec::with_capacity(hs.n_nodes());
            for &(k, first) in &hs.nodes {
                let f = find(k).expect("checked above");
                let i = d * 24 / k + first / k;
                mean.push(f.mean[i]);
                variance.push(f.stddev[i] * f.stddev[i]);
            }
            BaseForecasts { mean, variance }
        })
        .collect();
    let days: Vec<ReconciledForecasts<T>> = base.par_iter().map(|b| reconcile(b, hs)).collect::<Result<_>>()?;
    let mut mean = Vec::with_capacity(n_days * 24);
    let mut sd = Vec::with_capacity(n_days * 24);
    for d in &days {
        let (m, v) = d.bottom(hs);
        mean.extend_from_slice(m);
        sd.extend(v.iter().map(|x| x.sqrt()));
    }
    let bottom = DistForecast::new(hourly.index, mean, sd)?;
    Ok(HorizonReconciliation { structure: hs.clone(), base, days, bottom })
}

/// Hierarchy settings for the training pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HierarchyConfig {
    pub scales: Vec<usize>,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        Self { scales: DEFAULT_SCALES.to_vec() }
    }
}
