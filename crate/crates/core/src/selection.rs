//! Permutation feature importance, clustered permutation importance, and the
//! correlation clustering that defines the clusters.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::frame::FeatureMatrix;
use crate::gbdt::TreeEnsemble;
use crate::scalar::{compensated_sum, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    #[default]
    Spearman,
    Pearson,
}

/// Pairwise correlations; undefined coefficients (zero variance) are `NaN`.
/// The diagonal is always 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CorrelationMatrix<T: Scalar = f64> {
    pub names: Vec<String>,
    pub rho: Vec<Vec<T>>,
}

/// Average ranks (1-based) with ties sharing the mean of their positions.
pub fn average_ranks<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    ranks_from_order(values, &order)
}

fn ranks_from_order<T: Scalar>(values: &[T], order: &[usize]) -> Vec<T> {
    let mut ranks = vec![T::zero(); values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share rank mean(i+1..=j)
        let r = T::lit((i + j + 1) as f64 / 2.0);
        for &o in &order[i..j] {
            ranks[o] = r;
        }
        i = j;
    }
    ranks
}

/// Centres and scales to unit norm; `None` for zero variance.
fn standardize<T: Scalar>(mut v: Vec<T>) -> Option<Vec<T>> {
    let n = T::of_usize(v.len());
    let mean = compensated_sum(v.iter().copied()) / n;
    v.iter_mut().for_each(|x| *x = *x - mean);
    let norm = compensated_sum(v.iter().map(|x| *x * *x)).sqrt();
    if !(norm > T::zero()) || v.iter().all(|x| *x == T::zero()) {
        return None;
    }
    v.iter_mut().for_each(|x| *x = *x / norm);
    Some(v)
}

/// Pairwise correlation over the rows where both columns are observed.
///
/// Spearman is Pearson on average ranks. Because missing cells only form a
/// warm-up prefix, pairs are processed grouped by the later of their two
/// prefix lengths, so each column is ranked once per distinct start row.
pub fn correlation_matrix<T: Scalar>(fm: &FeatureMatrix<T>, method: CorrelationMethod) -> Result<CorrelationMatrix<T>> {
    let d = fm.n_cols();
    let n = fm.n_rows();
    let warmup = fm.warmup();
    if let Some(c) = (0..d).find(|&c| n < warmup[c] + 2) {
        return Err(Error::InsufficientData(format!(
            "column `{}` has fewer than 2 observed rows",
            fm.names()[c]
        )));
    }
    let orders: Vec<Vec<usize>> = match method {
        CorrelationMethod::Pearson => Vec::new(),
        CorrelationMethod::Spearman => (0..d)
            .into_par_iter()
            .map(|c| {
                let col = fm.column(c);
                let mut o: Vec<usize> = (warmup[c]..n).collect();
                o.sort_by(|&a, &b| col[a].partial_cmp(&col[b]).expect("finite values"));
                o
            })
            .collect(),
    };
    let starts: BTreeSet<usize> = warmup.iter().copied().collect();
    let mut rho = vec![vec![T::nan(); d]; d];
    for &s in &starts {
        let active: Vec<usize> = (0..d).filter(|&c| warmup[c] <= s).collect();
        let z: Vec<Option<Vec<T>>> = active
            .par_iter()
            .map(|&c| {
                let col = fm.column(c);
                let v = match method {
                    CorrelationMethod::Pearson => col[s..].to_vec(),
                    CorrelationMethod::Spearman => {
                        let order: Vec<usize> = orders[c].iter().filter(|&&r| r >= s).map(|&r| r - s).collect();
                        ranks_from_order(&col[s..], &order)
                    }
                };
                standardize(v)
            })
            .collect();
        let pairs: Vec<(usize, usize)> = (0..active.len())
            .flat_map(|a| (0..active.len()).map(move |b| (a, b)))
            .filter(|&(a, b)| a < b && (warmup[active[a]] == s || warmup[active[b]] == s))
            .collect();
        let vals: Vec<T> = pairs
            .par_iter()
            .map(|&(a, b)| match (&z[a], &z[b]) {
                (Some(x), Some(y)) => {
                    let r = compensated_sum(x.iter().zip(y).map(|(p, q)| *p * *q));
                    r.max(-T::one()).min(T::one())
                }
                _ => T::nan(),
            })
            .collect();
        for (&(a, b), v) in pairs.iter().zip(vals) {
            rho[active[a]][active[b]] = v;
            rho[active[b]][active[a]] = v;
        }
    }
    for (c, row) in rho.iter_mut().enumerate() {
        row[c] = T::one();
    }
    Ok(CorrelationMatrix { names: fm.names().to_vec(), rho })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureCluster {
    pub id: usize,
    pub members: Vec<String>,
}

/// One agglomeration step. Leaves are `0..n`; the cluster formed by merge `i` has id `n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub names: Vec<String>,
    pub merges: Vec<Merge>,
}

/// Correlation distance: `1 - |rho|` (or `1 - rho` when `absolute` is false); undefined counts as 1.
pub fn correlation_distance<T: Scalar>(rho: T, absolute: bool) -> f64 {
    let r = rho.as_f64();
    if r.is_nan() {
        1.0
    } else if absolute {
        1.0 - r.abs()
    } else {
        1.0 - r
    }
}

/// Average-linkage agglomerative clustering. Ties between equal distances go
/// to the pair found first in row-major order of the active clusters.
pub fn dendrogram<T: Scalar>(cm: &CorrelationMatrix<T>, absolute: bool) -> Dendrogram {
    let d = cm.names.len();
    let mut dist: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { 0.0 } else { correlation_distance(cm.rho[i][j], absolute) }).collect())
        .collect();
    // slot -> (cluster id, size); slots of merged clusters are reused by the result
    let mut slots: Vec<Option<(usize, usize)>> = (0..d).map(|i| Some((i, 1))).collect();
    let mut merges = Vec::with_capacity(d.saturating_sub(1));
    for step in 0..d.saturating_sub(1) {
        let mut best = (f64::INFINITY, 0, 0);
        for i in 0..d {
            if slots[i].is_none() {
                continue;
            }
            for j in i + 1..d {
                if slots[j].is_some() && dist[i][j] < best.0 {
                    best = (dist[i][j], i, j);
                }
            }
        }
        let (delta, a, b) = best;
        let (ida, na) = slots[a].expect("active slot");
        let (idb, nb) = slots[b].expect("active slot");
        for k in 0..d {
            if k != a && k != b && slots[k].is_some() {
                let v = (na as f64 * dist[a][k] + nb as f64 * dist[b][k]) / (na + nb) as f64;
                dist[a][k] = v;
                dist[k][a] = v;
            }
        }
        slots[a] = Some((d + step, na + nb));
        slots[b] = None;
        merges.push(Merge { left: ida.min(idb), right: ida.max(idb), distance: delta, size: na + nb });
    }
    Dendrogram { names: cm.names.clone(), merges }
}

impl Dendrogram {
    /// Flat clusters joined by merges at distance `<= threshold`. Cluster ids
    /// follow the first member's column position; members keep column order.
    pub fn cut(&self, threshold: f64) -> Result<Vec<FeatureCluster>> {
        if !(threshold > 0.0 && threshold < 2.0) {
            return Err(invalid(format!("clustering threshold {threshold} outside (0, 2)")));
        }
        let d = self.names.len();
        let mut parent: Vec<usize> = (0..2 * d).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (i, m) in self.merges.iter().enumerate() {
            if m.distance <= threshold {
                let id = d + i;
                let l = find(&mut parent, m.left);
                let r = find(&mut parent, m.right);
                parent[l] = id;
                parent[r] = id;
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for leaf in 0..d {
            let root = find(&mut parent, leaf);
            groups.entry(root).or_default().push(leaf);
        }
        let mut members: Vec<Vec<usize>> = groups.into_values().collect();
        members.sort_by_key(|m| m[0]);
        Ok(members
            .into_iter()
            .enumerate()
            .map(|(id, m)| FeatureCluster { id, members: m.into_iter().map(|c| self.names[c].clone()).collect() })
            .collect())
    }
}

/// Average-linkage clusters on `1 - |rho|`, cut at `threshold`.
pub fn cluster_features<T: Scalar>(cm: &CorrelationMatrix<T>, threshold: f64) -> Result<Vec<FeatureCluster>> {
    dendrogram(cm, true).cut(threshold)
}

/// A fitted model that maps a feature matrix to one prediction per row.
pub trait Predictor<T: Scalar>: Sync {
    fn predict_rows(&self, fm: &FeatureMatrix<T>) -> Result<Vec<T>>;
}

impl<T: Scalar> Predictor<T> for TreeEnsemble<T> {
    fn predict_rows(&self, fm: &FeatureMatrix<T>) -> Result<Vec<T>> {
        self.raw_output(fm, 0)
    }
}

impl<T: Scalar, F> Predictor<T> for F
where
    F: Fn(&FeatureMatrix<T>) -> Result<Vec<T>> + Sync,
{
    fn predict_rows(&self, fm: &FeatureMatrix<T>) -> Result<Vec<T>> {
        self(fm)
    }
}

/// Negative mean squared error; higher is better.
pub fn neg_mse<T: Scalar>(y: &[T], pred: &[T]) -> Result<T> {
    if y.len() != pred.len() || y.is_empty() {
        return Err(invalid("scorer inputs must be non-empty and of equal length"));
    }
    Ok(-compensated_sum(y.iter().zip(pred).map(|(a, b)| (*a - *b) * (*a - *b))) / T::of_usize(y.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ImportanceReport<T: Scalar = f64> {
    pub clusters: Vec<FeatureCluster>,
    /// Unperturbed score per evaluation set (one per pooled fold).
    pub baseline_scores: Vec<T>,
    /// `drops[c][k]`: score decrease for cluster `c` in repetition `k`.
    pub drops: Vec<Vec<T>>,
    pub mean_drop: Vec<T>,
    /// Sample standard deviation (ddof 1); 0 with a single repetition.
    pub std_drop: Vec<T>,
    pub repetitions: usize,
}

impl<T: Scalar> ImportanceReport<T> {
    fn from_drops(clusters: Vec<FeatureCluster>, baseline_scores: Vec<T>, drops: Vec<Vec<T>>) -> Self {
        let repetitions = drops.first().map_or(0, Vec::len);
        let mut mean_drop = Vec::with_capacity(drops.len());
        let mut std_drop = Vec::with_capacity(drops.len());
        for d in &drops {
            let k = T::of_usize(d.len());
            let m = compensated_sum(d.iter().copied()) / k;
            let s = if d.len() > 1 {
                (compensated_sum(d.iter().map(|x| (*x - m) * (*x - m))) / (k - T::one())).sqrt()
            } else {
                T::zero()
            };
            mean_drop.push(m);
            std_drop.push(s);
        }
        Self { clusters, baseline_scores, drops, mean_drop, std_drop, repetitions }
    }

    /// Concatenates the repetitions of reports over the same clusters (e.g. CV folds).
    pub fn pool(reports: &[ImportanceReport<T>]) -> Result<Self> {
        let first = reports.first().ok_or_else(|| invalid("no reports to pool"))?;
        if reports.iter().any(|r| r.clusters != first.clusters) {
            return Err(invalid("pooled reports must share one cluster partition"));
        }
        let drops = (0..first.clusters.len())
            .map(|c| reports.iter().flat_map(|r| r.drops[c].iter().copied()).collect())
            .collect();
        let baselines = reports.iter().flat_map(|r| r.baseline_scores.iter().copied()).collect();
        Ok(Self::from_drops(first.clusters.clone(), baselines, drops))
    }

    /// Importance of cluster `id`.
    pub fn mean_drop_of(&self, id: usize) -> Option<T> {
        self.clusters.iter().position(|c| c.id == id).map(|p| self.mean_drop[p])
    }
}

/// Permutation importance of each column on its own.
pub fn pfi<T, M, S>(
    model: &M,
    features: &FeatureMatrix<T>,
    target: &[T],
    scorer: &S,
    repetitions: usize,
    rng_seed: u64,
) -> Result<ImportanceReport<T>>
where
    T: Scalar,
    M: Predictor<T> + ?Sized,
    S: Fn(&[T], &[T]) -> Result<T> + Sync,
{
    let clusters = features
        .names()
        .iter()
        .enumerate()
        .map(|(id, n)| FeatureCluster { id, members: vec![n.clone()] })
        .collect();
    permutation_importance(model, features, target, scorer, clusters, repetitions, rng_seed)
}

/// Clustered permutation importance: all columns of a cluster share one row
/// permutation per repetition.
pub fn cpfi<T, M, S>(
    model: &M,
    features: &FeatureMatrix<T>,
    target: &[T],
    scorer: &S,
    clusters: &[FeatureCluster],
    repetitions: usize,
    rng_seed: u64,
) -> Result<ImportanceReport<T>>
where
    T: Scalar,
    M: Predictor<T> + ?Sized,
    S: Fn(&[T], &[T]) -> Result<T> + Sync,
{
    let mut seen = BTreeSet::new();
    for c in clusters {
        if c.members.is_empty() {
            return Err(invalid(format!("cluster {} is empty", c.id)));
        }
        for m in &c.members {
            if !seen.insert(m.as_str()) {
                return Err(invalid(format!("feature `{m}` belongs to more than one cluster")));
            }
        }
    }
    permutation_importance(model, features, target, scorer, clusters.to_vec(), repetitions, rng_seed)
}

/// Row permutation for group `g` in repetition `k`. Depends only on
/// `(seed, g, k)`, so PFI and singleton CPFI draw identical permutations.
fn permutation(seed: u64, g: usize, k: usize, rows: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((g as u64) << 32) | k as u64);
    let mut p: Vec<usize> = (0..rows).collect();
    p.shuffle(&mut rng);
    p
}

fn permutation_importance<T, M, S>(
    model: &M,
    features: &FeatureMatrix<T>,
    target: &[T],
    scorer: &S,
    clusters: Vec<FeatureCluster>,
    repetitions: usize,
    rng_seed: u64,
) -> Result<ImportanceReport<T>>
where
    T: Scalar,
    M: Predictor<T> + ?Sized,
    S: Fn(&[T], &[T]) -> Result<T> + Sync,
{
    if repetitions == 0 {
        return Err(invalid("at least one repetition is required"));
    }
    if target.len() != features.n_rows() {
        return Err(invalid("target length differs from evaluation rows"));
    }
    let first = features.first_complete_row();
    let m = features.n_rows() - first;
    if m < 2 {
        return Err(Error::InsufficientData("evaluation set needs at least 2 complete rows".into()));
    }
    let eval = features.rows(first, m)?;
    let y = &target[first..];
    let positions: Vec<Vec<usize>> = clusters
        .iter()
        .map(|c| {
            c.members
                .iter()
                .map(|name| eval.column_position(name).ok_or_else(|| Error::SchemaMismatch { missing: vec![name.clone()] }))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    let base = scorer(y, &model.predict_rows(&eval)?)?;

    let drops: Vec<Vec<T>> = positions
        .par_iter()
        .enumerate()
        .map_init(
            || eval.clone(),
            |work, (g, cols)| -> Result<Vec<T>> {
                let mut out = Vec::with_capacity(repetitions);
                for k in 0..repetitions {
                    let perm = permutation(rng_seed, g, k, m);
                    for &c in cols {
                        let src = eval.column(c);
                        let dst = work.column_mut(c);
                        for (d, &p) in dst.iter_mut().zip(&perm) {
                            *d = src[p];
                        }
                    }
                    let score = scorer(y, &model.predict_rows(work)?);
                    for &c in cols {
                        work.column_mut(c).copy_from_slice(eval.column(c));
                    }
                    out.push(base - score?);
                }
                Ok(out)
            },
        )
        .collect::<Result<_>>()?;
    Ok(ImportanceReport::from_drops(clusters, vec![base], drops))
}

/// Ids of clusters whose importance clears three standard deviations above 0.
pub fn informative_clusters<T: Scalar>(report: &ImportanceReport<T>) -> Result<BTreeSet<usize>> {
    if report.repetitions < 2 {
        return Err(invalid("the 3-sigma rule needs at least 2 repetitions"));
    }
    Ok(report
        .clusters
        .iter()
        .zip(report.mean_drop.iter().zip(&report.std_drop))
        .filter(|(_, (m, s))| **m - T::lit(3.0) * **s > T::zero())
        .map(|(c, _)| c.id)
        .collect())
}

/// Settings for clustered permutation selection inside the training pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    pub enabled: bool,
    pub method: CorrelationMethod,
    pub threshold: f64,
    /// Use `1 - |rho|` so strongly anti-correlated features also cluster.
    pub absolute: bool,
    pub repetitions: usize,
    pub rng_seed: u64,
    /// Inner time-series folds on which importance is measured and pooled.
    pub inner_folds: usize,
    /// Columns removed by hand after selection.
    pub exclude: Vec<String>,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            method: CorrelationMethod::Spearman,
            threshold: 0.1,
            absolute: true,
            repetitions: 100,
            rng_seed: 0,
            inner_folds: 2,
            exclude: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::{TimeIndex, TimePoint};

    fn matrix(cols: Vec<(&str, Vec<f64>)>) -> FeatureMatrix<f64> {
        let n = cols[0].1.len();
        let idx = TimeIndex::hourly(TimePoint::new(2020, 1, 1, 1).unwrap(), n);
        let (names, cols): (Vec<String>, Vec<Vec<f64>>) = cols.into_iter().map(|(n, c)| (n.to_string(), c)).unzip();
        let w = vec![0; cols.len()];
        FeatureMatrix::new(idx, names, cols, w).unwrap()
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    #[test]
    fn correlation_examples() {
        let x: Vec<f64> = (1..=20).map(f64::from).collect();
        let fm = matrix(vec![
            ("x", x.clone()),
            ("two_x", x.iter().map(|v| 2.0 * v).collect()),
            ("cube", x.iter().map(|v| v.powi(3)).collect()),
            ("c", vec![3.0; 20]),
        ]);
        let p = correlation_matrix(&fm, CorrelationMethod::Pearson).unwrap();
        let s = correlation_matrix(&fm, CorrelationMethod::Spearman).unwrap();
        assert!((p.rho[0][1] - 1.0).abs() < 1e-12 && (s.rho[0][1] - 1.0).abs() < 1e-12);
        assert!((s.rho[0][2] - 1.0).abs() < 1e-12);
        assert!(p.rho[0][2] < 1.0 - 1e-6);
        assert!(p.rho[0][3].is_nan() && s.rho[3][0].is_nan());
        assert_eq!(s.rho[3][3], 1.0);
    }

    #[test]
    fn correlation_uses_rows_observed_in_both() {
        let x: Vec<f64> = (0..10).map(|i| ((i * 7) % 10) as f64).collect();
        let idx = TimeIndex::hourly(TimePoint::new(2020, 1, 1, 1).unwrap(), 10);
        let fm = FeatureMatrix::new(idx, vec!["a".into(), "b".into()], vec![x.clone(), x.clone()], vec![0, 4]).unwrap();
        let cm = correlation_matrix(&fm, CorrelationMethod::Spearman).unwrap();
        assert!((cm.rho[0][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn toy_clustering() {
        let cm = CorrelationMatrix {
            names: vec!["a".into(), "b".into(), "c".into()],
            rho: vec![vec![1.0, 1.0, 0.1], vec![1.0, 1.0, -0.05], vec![0.1, -0.05, 1.0]],
        };
        let cl = cluster_features(&cm, 0.1).unwrap();
        assert_eq!(cl.len(), 2);
        assert_eq!(cl[0].members, vec!["a", "b"]);
        assert_eq!(cl[1].members, vec!["c"]);
        let dg = dendrogram(&cm, true);
        // average of d(a,c)=0.9 and d(b,c)=0.95
        assert!((dg.merges[1].distance - 0.925).abs() < 1e-12);
        assert_eq!(dendrogram(&cm, true).cut(1.0).unwrap().len(), 1);
        assert!(cluster_features(&cm, 0.0).is_err());
    }

    #[test]
    fn ignored_feature_has_zero_importance() {
        let x1: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let x2: Vec<f64> = (0..50).map(|i| (i as f64 * 1.3).cos()).collect();
        let fm = matrix(vec![("x1", x1.clone()), ("x2", x2)]);
        let model = |m: &FeatureMatrix<f64>| Ok(m.column_by_name("x1").unwrap().to_vec());
        let rep = pfi(&model, &fm, &x1, &neg_mse, 100, 7).unwrap();
        assert!(rep.drops[1].iter().all(|&d| d == 0.0));
        assert!(rep.mean_drop[0] > 0.0);
        let once = pfi(&model, &fm, &x1, &neg_mse, 1, 7).unwrap();
        assert_eq!(once.mean_drop[1], 0.0);
        assert!(informative_clusters(&once).is_err());
        assert_eq!(informative_clusters(&rep).unwrap(), BTreeSet::from([0]));
    }

    #[test]
    fn singleton_cpfi_equals_pfi() {
        let x: Vec<Vec<f64>> = (0..3).map(|k| (0..40).map(|i| ((i * (k + 3)) % 11) as f64).collect()).collect();
        let y: Vec<f64> = (0..40).map(|i| x[0][i] + 0.5 * x[1][i]).collect();
        let fm = matrix(vec![("a", x[0].clone()), ("b", x[1].clone()), ("c", x[2].clone())]);
        let model = |m: &FeatureMatrix<f64>| {
            let (a, b) = (m.column(0), m.column(1));
            Ok(a.iter().zip(b).map(|(p, q)| p + 0.5 * q).collect())
        };
        let p = pfi(&model, &fm, &y, &neg_mse, 10, 3).unwrap();
        let singles: Vec<FeatureCluster> =
            ["a", "b", "c"].iter().enumerate().map(|(id, n)| FeatureCluster { id, members: vec![n.to_string()] }).collect();
        let c = cpfi(&model, &fm, &y, &neg_mse, &singles, 10, 3).unwrap();
        assert_eq!(p, c);
        let overlap = vec![singles[0].clone(), FeatureCluster { id: 1, members: vec!["a".into()] }];
        assert!(cpfi(&model, &fm, &y, &neg_mse, &overlap, 10, 3).is_err());
    }

    #[test]
    fn three_sigma_rule() {
        let mk = |mean: f64, std: f64| ImportanceReport::<f64> {
            clusters: vec![FeatureCluster { id: 4, members: vec!["x".into()] }],
            baseline_scores: vec![0.0],
            drops: vec![vec![]],
            mean_drop: vec![mean],
            std_drop: vec![std],
            repetitions: 10,
        };
        assert!(informative_clusters(&mk(5.0, 1.0)).unwrap().contains(&4));
        assert!(informative_clusters(&mk(2.0, 1.0)).unwrap().is_empty());
        assert!(informative_clusters(&mk(0.0, 0.0)).unwrap().is_empty());
    }

    #[test]
    fn pooling_concatenates_repetitions() {
        let cl = vec![FeatureCluster { id: 0, members: vec!["x".into()] }];
        let a = ImportanceReport::from_drops(cl.clone(), vec![1.0], vec![vec![1.0, 2.0]]);
        let b = ImportanceReport::from_drops(cl, vec![2.0], vec![vec![3.0]]);
        let p = ImportanceReport::pool(&[a, b]).unwrap();
        assert_eq!(p.repetitions, 3);
        assert_eq!(p.mean_drop[0], 2.0);
        assert_eq!(p.std_drop[0], 1.0);
    }
}
