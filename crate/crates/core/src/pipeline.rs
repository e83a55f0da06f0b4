//! Training and forecasting pipeline: log transform, linear detrending,
//! outlier weighting, feature assembly, optional clustered permutation
//! selection, and boosting. Also time-series cross-validation.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::features::FeatureConfig;
use crate::frame::FeatureMatrix;
use crate::gbdt::{fit_gbm, fit_gbm_lss, BoostConfig, Objective, TreeEnsemble};
use crate::hierarchy::{aggregate_series, HierarchyConfig};
use crate::metrics::{mape, score_forecast, ScoreReport};
use crate::scalar::{compensated_sum, quantile, Scalar};
use crate::selection::{
    correlation_matrix, cpfi, dendrogram, informative_clusters, Dendrogram, FeatureCluster, ImportanceReport,
    SelectionConfig,
};
use crate::series::{daily_peaks, Dataset, DistForecast, HolidayCalendar, HourlySeries, PeakForecast, PointForecast};
use crate::time::{TimeIndex, TimePoint};

/// Least-squares line `beta0 + beta1 * t` with `t = 1` at `origin`, counted in steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrendModel<T: Scalar = f64> {
    pub beta0: T,
    pub beta1: T,
    pub origin: TimePoint,
    pub step_hours: u32,
}

impl<T: Scalar> TrendModel<T> {
    /// Progressive time index of `tp` (1 at the origin).
    pub fn t_of(&self, tp: TimePoint) -> T {
        let steps = (tp.ordinal() - self.origin.ordinal()) as f64 / f64::from(self.step_hours);
        T::lit(steps + 1.0)
    }

    pub fn line(&self, index: &TimeIndex) -> Vec<T> {
        index.iter().map(|tp| self.beta0 + self.beta1 * self.t_of(tp)).collect()
    }
}

/// Ordinary least squares on `(t, y_t)`, `t = 1..=T`.
pub fn fit_trend<T: Scalar>(y: &HourlySeries<T>) -> Result<TrendModel<T>> {
    let n = y.len();
    if n < 2 {
        return Err(Error::InsufficientData("trend fit needs at least 2 points".into()));
    }
    let nt = T::of_usize(n);
    let t_mean = (nt + T::one()) / T::lit(2.0);
    let y_mean = compensated_sum(y.values().iter().copied()) / nt;
    let sxy = compensated_sum(
        y.values().iter().enumerate().map(|(i, &v)| (T::of_usize(i + 1) - t_mean) * (v - y_mean)),
    );
    // sum of (t - mean)^2 over 1..=n is n(n^2 - 1)/12
    let sxx = nt * (nt * nt - T::one()) / T::lit(12.0);
    let beta1 = sxy / sxx;
    Ok(TrendModel { beta0: y_mean - beta1 * t_mean, beta1, origin: y.start(), step_hours: y.step_hours() })
}

pub fn detrend<T: Scalar>(y: &HourlySeries<T>, tm: &TrendModel<T>) -> Result<HourlySeries<T>> {
    let line = tm.line(&y.index());
    y.map_values(y.values().iter().zip(line).map(|(v, l)| *v - l).collect())
}

pub fn retrend<T: Scalar>(forecast: &PointForecast<T>, tm: &TrendModel<T>) -> PointForecast<T> {
    let line = tm.line(&forecast.index);
    PointForecast { index: forecast.index, values: forecast.values.iter().zip(line).map(|(v, l)| *v + l).collect() }
}

/// Natural log; every value must be strictly positive.
pub fn log_transform<T: Scalar>(y: &HourlySeries<T>) -> Result<HourlySeries<T>> {
    if let Some(i) = y.values().iter().position(|v| !(*v > T::zero())) {
        return Err(Error::NonPositive { at: y.index().at(i).to_string(), value: y.values()[i].as_f64() });
    }
    y.map_values(y.values().iter().map(|v| v.ln()).collect())
}

pub fn inverse_log<T: Scalar>(y: &HourlySeries<T>) -> Result<HourlySeries<T>> {
    y.map_values(y.values().iter().map(|v| v.exp()).collect())
}

/// Weight 0 for targets strictly below the empirical `q`-quantile, 1 otherwise.
pub fn outlier_weights<T: Scalar>(y: &[T], q: f64) -> Result<Vec<T>> {
    if !(0.0..1.0).contains(&q) {
        return Err(invalid(format!("outlier quantile {q} outside [0, 1)")));
    }
    if q == 0.0 || y.is_empty() {
        return Ok(vec![T::one(); y.len()]);
    }
    let thr = quantile(y, q).ok_or_else(|| invalid("quantile of empty target"))?;
    Ok(y.iter().map(|v| if *v < thr { T::zero() } else { T::one() }).collect())
}

/// Length of each test block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldLength {
    /// A fixed number of time steps.
    Steps(usize),
    /// Calendar years; the last fold ends with the data.
    Years(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: TimeIndex,
    pub test: TimeIndex,
}

/// Expanding-window folds: the last `n_folds` blocks are test sets, and each
/// trains on everything before its test block.
pub fn ts_cv_folds(index: &TimeIndex, n_folds: usize, fold_length: FoldLength) -> Result<Vec<Fold>> {
    if n_folds == 0 {
        return Err(invalid("at least one fold is required"));
    }
    // boundaries[i]..boundaries[i + 1] is test block i
    let boundaries: Vec<usize> = match fold_length {
        FoldLength::Steps(len) => {
            if len == 0 {
                return Err(invalid("fold length must be positive"));
            }
            let total = n_folds.checked_mul(len).filter(|&t| t < index.len).ok_or_else(|| {
                Error::InsufficientData(format!("{n_folds} folds of {len} steps need more than {} steps", index.len))
            })?;
            (0..=n_folds).map(|f| index.len - total + f * len).collect()
        }
        FoldLength::Years(years) => {
            if years == 0 {
                return Err(invalid("fold length must be positive"));
            }
            let last = index.last().ok_or_else(|| Error::InsufficientData("empty index".into()))?;
            let mut b = vec![index.len];
            // the last block starts at the latest year boundary, so it may be a partial year
            let mut year = last.year() + 1;
            for _ in 0..n_folds {
                year -= years as i32;
                let boundary = TimePoint::new(year, 1, 1, 1)?;
                let pos = index.position(boundary).filter(|&p| p > 0).ok_or_else(|| {
                    Error::InsufficientData(format!("no training data before the fold starting {boundary}"))
                })?;
                b.push(pos);
            }
            b.reverse();
            b
        }
    };
    if boundaries[0] == 0 {
        return Err(Error::InsufficientData("first fold has no training data".into()));
    }
    boundaries
        .windows(2)
        .map(|w| {
            Ok(Fold { train: index.slice(0, w[0])?, test: index.slice(w[0], w[1] - w[0])? })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub n_folds: usize,
    pub fold_length: FoldLength,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self { n_folds: 3, fold_length: FoldLength::Years(1) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub log_transform: bool,
    pub detrend: bool,
    pub outlier_quantile: f64,
    /// Gaussian NLL boosting of `(mu, ln sigma)`; plain L2 boosting otherwise.
    pub distributional: bool,
    pub features: FeatureConfig,
    pub selection: SelectionConfig,
    pub boost: BoostConfig,
    pub hierarchy: HierarchyConfig,
    pub cv: CvConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            log_transform: true,
            detrend: true,
            outlier_quantile: 0.005,
            distributional: true,
            features: FeatureConfig::default(),
            selection: SelectionConfig::default(),
            boost: BoostConfig::default(),
            hierarchy: HierarchyConfig::default(),
            cv: CvConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.outlier_quantile) {
            return Err(Error::Config(format!("outlier_quantile {} outside [0, 1)", self.outlier_quantile)));
        }
        self.boost.validate().map_err(|e| Error::Config(e.to_string()))?;
        let sel = &self.selection;
        if sel.enabled && (!(sel.threshold > 0.0 && sel.threshold < 2.0) || sel.repetitions < 2 || sel.inner_folds == 0) {
            return Err(Error::Config("selection needs threshold in (0, 2), repetitions >= 2 and inner_folds >= 1".into()));
        }
        if self.hierarchy.scales.iter().any(|&k| k == 0 || 24 % k != 0) {
            return Err(Error::Config("hierarchy scales must divide 24".into()));
        }
        Ok(())
    }

    fn objective(&self) -> Objective {
        if self.distributional {
            Objective::GaussianNll
        } else {
            Objective::L2
        }
    }
}

/// Outcome of clustered permutation selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SelectionOutcome<T: Scalar = f64> {
    pub dendrogram: Dendrogram,
    pub clusters: Vec<FeatureCluster>,
    pub report: ImportanceReport<T>,
    pub kept_clusters: BTreeSet<usize>,
    pub kept_columns: Vec<String>,
}

/// Clustered permutation selection. Baseline columns are always kept and not
/// clustered; candidate clusters are kept when informative on pooled inner
/// folds. `to_original(row, native)` maps a model output at `row` back to the
/// scale of `y_original`, on which the negative MAPE scorer operates.
pub fn select_features<T, F>(
    fm: &FeatureMatrix<T>,
    target: &[T],
    y_original: &[T],
    to_original: &F,
    sel: &SelectionConfig,
    boost: &BoostConfig,
    objective: Objective,
) -> Result<SelectionOutcome<T>>
where
    T: Scalar,
    F: Fn(usize, T) -> T + Sync,
{
    let excluded: BTreeSet<&str> = sel.exclude.iter().map(String::as_str).collect();
    let names: Vec<String> = fm.names().iter().filter(|n| !excluded.contains(n.as_str())).cloned().collect();
    let baseline: Vec<String> = names.iter().filter(|n| FeatureConfig::is_baseline_column(n)).cloned().collect();
    let candidates: Vec<String> = names.iter().filter(|n| !FeatureConfig::is_baseline_column(n)).cloned().collect();
    let fm = fm.select(&names)?;
    if candidates.is_empty() {
        return Ok(SelectionOutcome {
            dendrogram: Dendrogram { names: Vec::new(), merges: Vec::new() },
            clusters: Vec::new(),
            report: ImportanceReport {
                clusters: Vec::new(),
                baseline_scores: Vec::new(),
                drops: Vec::new(),
                mean_drop: Vec::new(),
                std_drop: Vec::new(),
                repetitions: sel.repetitions,
            },
            kept_clusters: BTreeSet::new(),
            kept_columns: baseline,
        });
    }
    let cm = correlation_matrix(&fm.select(&candidates)?, sel.method)?;
    let dg = dendrogram(&cm, sel.absolute);
    let clusters = dg.cut(sel.threshold)?;

    let first = fm.first_complete_row();
    let usable = fm.n_rows() - first;
    let fold_len = usable / (sel.inner_folds + 1);
    if fold_len < 2 {
        return Err(Error::InsufficientData("too few complete rows for the inner selection folds".into()));
    }
    let folds = ts_cv_folds(fm.index(), sel.inner_folds, FoldLength::Steps(fold_len))?;
    let mut reports = Vec::with_capacity(folds.len());
    for (f, fold) in folds.iter().enumerate() {
        let n_train = fold.train.len;
        let train = fm.rows(0, n_train)?;
        let model = match objective {
            Objective::L2 => fit_gbm(&train, &target[..n_train], boost)?,
            Objective::GaussianNll => fit_gbm_lss(&train, &target[..n_train], boost)?,
        };
        let test = fm.rows(n_train, fold.test.len)?;
        let scorer = |y: &[T], pred: &[T]| -> Result<T> {
            let orig: Vec<T> = pred.iter().enumerate().map(|(i, &p)| to_original(n_train + i, p)).collect();
            Ok(-mape(y, &orig)?)
        };
        let y = &y_original[n_train..n_train + fold.test.len];
        let seed = sel.rng_seed.wrapping_add(f as u64);
        reports.push(cpfi(&model, &test, y, &scorer, &clusters, sel.repetitions, seed)?);
    }
    let report = ImportanceReport::pool(&reports)?;
    let kept_clusters = informative_clusters(&report)?;
    let keep: BTreeSet<&str> = clusters
        .iter()
        .filter(|c| kept_clusters.contains(&c.id))
        .flat_map(|c| c.members.iter().map(String::as_str))
        .collect();
    let kept_columns =
        names.iter().filter(|n| FeatureConfig::is_baseline_column(n) || keep.contains(n.as_str())).cloned().collect();
    Ok(SelectionOutcome { dendrogram: dg, clusters, report, kept_clusters, kept_columns })
}

/// Every fitted artifact of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrainedPipeline<T: Scalar = f64> {
    pub config: PipelineConfig,
    pub train_index: TimeIndex,
    pub trend: Option<TrendModel<T>>,
    pub outlier_threshold: Option<T>,
    pub zero_weight_rows: usize,
    pub selection: Option<SelectionOutcome<T>>,
    pub feature_names: Vec<String>,
    pub warmup_steps: usize,
    /// Weighted in-sample residual std on the model scale; the predictive std of L2 models.
    pub residual_std: T,
    pub model: TreeEnsemble<T>,
}

/// Trains on the whole dataset.
pub fn train_forecaster<T: Scalar>(ds: &Dataset<T>, cfg: &PipelineConfig) -> Result<TrainedPipeline<T>> {
    cfg.validate()?;
    let index = ds.index();
    let y_raw = ds.load.values();
    let transformed = if cfg.log_transform { log_transform(&ds.load)? } else { ds.load.clone() };
    let trend = if cfg.detrend { Some(fit_trend(&transformed)?) } else { None };
    let target: Vec<T> = match &trend {
        Some(tm) => detrend(&transformed, tm)?.into_values(),
        None => transformed.into_values(),
    };
    let mut fm = cfg.features.build(&ds.temperatures, &ds.exogenous, &ds.holidays)?;
    let warmup_steps = fm.first_complete_row();
    if warmup_steps >= index.len {
        return Err(Error::InsufficientData(format!(
            "{} steps of data do not cover the {warmup_steps}-step feature warm-up",
            index.len
        )));
    }
    let weights = outlier_weights(y_raw, cfg.outlier_quantile)?;
    let outlier_threshold = if cfg.outlier_quantile > 0.0 { quantile(y_raw, cfg.outlier_quantile) } else { None };
    let zero_weight_rows = weights.iter().filter(|w| **w == T::zero()).count();
    fm.set_weights(weights)?;

    let selection = if cfg.selection.enabled {
        let line = trend.as_ref().map(|tm| tm.line(&index));
        let log = cfg.log_transform;
        let to_original = |row: usize, v: T| {
            let v = match &line {
                Some(l) => v + l[row],
                None => v,
            };
            if log {
                v.exp()
            } else {
                v
            }
        };
        let out = select_features(&fm, &target, y_raw, &to_original, &cfg.selection, &cfg.boost, cfg.objective())?;
        fm = fm.select(&out.kept_columns)?;
        Some(out)
    } else if !cfg.selection.exclude.is_empty() {
        let keep: Vec<String> = fm.names().iter().filter(|n| !cfg.selection.exclude.contains(n)).cloned().collect();
        fm = fm.select(&keep)?;
        None
    } else {
        None
    };

    let model = match cfg.objective() {
        Objective::L2 => fit_gbm(&fm, &target, &cfg.boost)?,
        Objective::GaussianNll => fit_gbm_lss(&fm, &target, &cfg.boost)?,
    };
    let fitted = model.raw_output(&fm, 0)?;
    let first = fm.first_complete_row();
    let w = fm.weights();
    let sw = compensated_sum(w[first..].iter().copied());
    let ss = compensated_sum((first..target.len()).map(|r| w[r] * (target[r] - fitted[r]) * (target[r] - fitted[r])));
    let residual_std = (ss / sw).sqrt().max(T::min_positive_value());

    Ok(TrainedPipeline {
        config: cfg.clone(),
        train_index: index,
        trend,
        outlier_threshold,
        zero_weight_rows,
        selection,
        feature_names: fm.names().to_vec(),
        warmup_steps,
        residual_std,
        model,
    })
}

/// Point, distributional and peak forecasts over one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct HorizonForecast<T: Scalar = f64> {
    pub point: PointForecast<T>,
    pub dist: DistForecast<T>,
    /// Daily peaks; empty unless the horizon is hourly and covers whole days.
    pub peaks: Vec<PeakForecast<T>>,
}

impl<T: Scalar> TrainedPipeline<T> {
    pub fn step_hours(&self) -> u32 {
        self.train_index.step_hours
    }

    /// Target on the model scale: log (if active), then minus the trend.
    pub fn forward(&self, y: &HourlySeries<T>) -> Result<Vec<T>> {
        let z = if self.config.log_transform { log_transform(y)? } else { y.clone() };
        Ok(match &self.trend {
            Some(tm) => detrend(&z, tm)?.into_values(),
            None => z.into_values(),
        })
    }

    /// Inverse of [`forward`](Self::forward): add the trend, then exponentiate.
    pub fn inverse(&self, index: &TimeIndex, native: &[T]) -> Vec<T> {
        let with_trend: Vec<T> = match &self.trend {
            Some(tm) => native.iter().zip(tm.line(index)).map(|(v, l)| *v + l).collect(),
            None => native.to_vec(),
        };
        if self.config.log_transform {
            with_trend.into_iter().map(|v| v.exp()).collect()
        } else {
            with_trend
        }
    }

    /// Forecasts `horizon` from temperatures (and exogenous series) that cover
    /// the horizon plus the feature warm-up before it. Aggregate features are
    /// computed over the whole supplied span up to the horizon end.
    pub fn predict_horizon(
        &self,
        temperatures: &[HourlySeries<T>],
        exogenous: &[HourlySeries<T>],
        holidays: &HolidayCalendar,
        horizon: &TimeIndex,
    ) -> Result<HorizonForecast<T>> {
        if horizon.step_hours != self.step_hours() {
            return Err(invalid(format!(
                "horizon step {}h differs from the model's {}h",
                horizon.step_hours,
                self.step_hours()
            )));
        }
        let first = temperatures.first().ok_or_else(|| invalid("no temperature series supplied"))?;
        let avail = first.index();
        let need_start = horizon.start.ordinal() - (self.warmup_steps as i64) * i64::from(horizon.step_hours);
        let end = horizon.last().ok_or_else(|| invalid("empty horizon"))?;
        if avail.start.ordinal() > need_start {
            return Err(Error::InsufficientData(format!(
                "temperatures start {} but the features need {} steps of history before {}, i.e. from {}",
                avail.start,
                self.warmup_steps,
                horizon.start,
                TimePoint::from_ordinal(need_start)
            )));
        }
        let span_len = avail
            .position(end)
            .ok_or_else(|| Error::Alignment(format!("temperatures do not cover the horizon end {end}")))?
            + 1;
        let span = avail.slice(0, span_len)?;
        let offset = span
            .position(horizon.start)
            .ok_or_else(|| Error::Alignment(format!("temperatures are not aligned with the horizon start {}", horizon.start)))?;
        let temps: Vec<HourlySeries<T>> = temperatures.iter().map(|s| s.restrict(&span)).collect::<Result<_>>()?;
        let exog: Vec<HourlySeries<T>> = exogenous.iter().map(|s| s.restrict(&span)).collect::<Result<_>>()?;
        let fm = self.config.features.build(&temps, &exog, holidays)?;
        let fm = fm.select(&self.feature_names)?.rows(offset, horizon.len)?;
        let mu = self.model.raw_output(&fm, 0)?;
        let sigma_native: Vec<T> = match self.model.objective {
            Objective::GaussianNll => self.model.raw_output(&fm, 1)?.into_iter().map(|s| s.exp()).collect(),
            Objective::L2 => vec![self.residual_std; horizon.len],
        };
        let mean = self.inverse(horizon, &mu);
        // first-order propagation through exp: sd(e^X) ~ e^mu * sd(X)
        let stddev: Vec<T> = if self.config.log_transform {
            sigma_native.iter().zip(&mean).map(|(s, m)| (*s * *m).max(T::min_positive_value())).collect()
        } else {
            sigma_native.iter().map(|s| s.max(T::min_positive_value())).collect()
        };
        let point = PointForecast::new(*horizon, mean.clone())?;
        let dist = DistForecast::new(*horizon, mean, stddev)?;
        let peaks = if horizon.step_hours == 1 && horizon.start.hour() == 1 && horizon.len % 24 == 0 {
            daily_peaks(horizon, &point.values)?
        } else {
            Vec::new()
        };
        Ok(HorizonForecast { point, dist, peaks })
    }
}

/// Sums every series of an hourly dataset into `k`-hour blocks.
pub fn aggregate_dataset<T: Scalar>(ds: &Dataset<T>, k: usize) -> Result<Dataset<T>> {
    let agg = |v: &[HourlySeries<T>]| v.iter().map(|s| aggregate_series(s, k)).collect::<Result<Vec<_>>>();
    Dataset::new(aggregate_series(&ds.load, k)?, agg(&ds.temperatures)?, agg(&ds.exogenous)?, ds.holidays.clone())
}

/// One pipeline per hierarchy scale, trained on the block-summed dataset.
pub fn train_multiscale<T: Scalar>(ds: &Dataset<T>, cfg: &PipelineConfig) -> Result<Vec<(usize, TrainedPipeline<T>)>> {
    cfg.validate()?;
    let mut scales = cfg.hierarchy.scales.clone();
    if !scales.contains(&1) {
        scales.push(1);
    }
    scales.sort_unstable();
    scales.dedup();
    scales
        .into_par_iter()
        .map(|k| {
            let dk = if k == 1 { ds.clone() } else { aggregate_dataset(ds, k)? };
            Ok((k, train_forecaster(&dk, cfg)?))
        })
        .collect()
}

/// Forecasts every scale over an hourly horizon of whole days.
pub fn predict_multiscale<T: Scalar>(
    models: &[(usize, TrainedPipeline<T>)],
    temperatures: &[HourlySeries<T>],
    exogenous: &[HourlySeries<T>],
    holidays: &HolidayCalendar,
    horizon: &TimeIndex,
) -> Result<Vec<(usize, HorizonForecast<T>)>> {
    models
        .par_iter()
        .map(|(k, model)| {
            let k = *k;
            if k == 1 {
                return Ok((1, model.predict_horizon(temperatures, exogenous, holidays, horizon)?));
            }
            let agg = |v: &[HourlySeries<T>]| v.iter().map(|s| aggregate_series(s, k)).collect::<Result<Vec<_>>>();
            let hk = TimeIndex::new(horizon.start, k as u32, horizon.len / k)?;
            if horizon.len % k != 0 {
                return Err(Error::Alignment(format!("horizon of {} hours is not a multiple of {k}", horizon.len)));
            }
            Ok((k, model.predict_horizon(&agg(temperatures)?, &agg(exogenous)?, holidays, &hk)?))
        })
        .collect()
}

/// Out-of-sample result of one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FoldResult<T: Scalar = f64> {
    pub fold: Fold,
    pub forecast: HorizonForecast<T>,
    pub actual: Vec<T>,
    /// Present when the test block is hourly and covers whole days.
    pub scores: Option<ScoreReport<T>>,
}

/// Trains each fold on its training block only and forecasts the test block
/// from the dataset's temperatures. Folds run in parallel.
pub fn cross_validate<T: Scalar>(ds: &Dataset<T>, cfg: &PipelineConfig) -> Result<Vec<FoldResult<T>>> {
    let folds = ts_cv_folds(&ds.index(), cfg.cv.n_folds, cfg.cv.fold_length)?;
    folds
        .into_par_iter()
        .map(|fold| {
            let trained = train_forecaster(&ds.restrict(&fold.train)?, cfg)?;
            let upto = ds.index().slice(0, fold.train.len + fold.test.len)?;
            let visible = ds.restrict(&upto)?;
            let forecast = trained.predict_horizon(&visible.temperatures, &visible.exogenous, &ds.holidays, &fold.test)?;
            let actual = ds.load.restrict(&fold.test)?.into_values();
            let scores = if fold.test.step_hours == 1 && fold.test.start.hour() == 1 && fold.test.len % 24 == 0 {
                Some(score_forecast(&actual, &forecast.dist)?)
            } else {
                None
            };
            Ok(FoldResult { fold, forecast, actual, scores })
        })
        .collect()
}

/// Config-driven grid search: mean cross-validated CRPS per candidate booster
/// configuration. Returns the index of the best candidate and all scores.
pub fn grid_search<T: Scalar>(ds: &Dataset<T>, cfg: &PipelineConfig, candidates: &[BoostConfig]) -> Result<(usize, Vec<T>)> {
    if candidates.is_empty() {
        return Err(invalid("grid search needs at least one candidate"));
    }
    let mut scores = Vec::with_capacity(candidates.len());
    for cand in candidates {
        let c = PipelineConfig { boost: *cand, ..cfg.clone() };
        let folds = cross_validate(ds, &c)?;
        let crps: Vec<T> = folds
            .iter()
            .map(|f| f.scores.as_ref().map(|s| s.crps_mean).ok_or_else(|| invalid("grid search needs hourly whole-day folds")))
            .collect::<Result<_>>()?;
        scores.push(compensated_sum(crps.iter().copied()) / T::of_usize(crps.len()));
    }
    let best = scores
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite scores"))
        .map(|(i, _)| i)
        .expect("non-empty");
    Ok((best, scores))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: Vec<f64>) -> HourlySeries<f64> {
        HourlySeries::new("y", TimePoint::new(2002, 1, 1, 1).unwrap(), values).unwrap()
    }

    #[test]
    fn trend_examples() {
        let tm = fit_trend(&series(vec![2.0, 4.0, 6.0])).unwrap();
        assert!(tm.beta0.abs() < 1e-12 && (tm.beta1 - 2.0).abs() < 1e-12);
        assert!(detrend(&series(vec![2.0, 4.0, 6.0]), &tm).unwrap().values().iter().all(|v| v.abs() < 1e-12));
        let c = fit_trend(&series(vec![7.0; 10])).unwrap();
        assert_eq!((c.beta0, c.beta1), (7.0, 0.0));
        assert!(fit_trend(&series(vec![1.0])).is_err());
        let idx = TimeIndex::hourly(TimePoint::new(2002, 1, 1, 4).unwrap(), 2);
        let f = retrend(&PointForecast::new(idx, vec![0.0, 0.0]).unwrap(), &tm);
        assert_eq!(f.values, vec![8.0, 10.0]);
    }

    #[test]
    fn log_examples() {
        assert_eq!(log_transform(&series(vec![1.0])).unwrap().values(), &[0.0]);
        assert!((log_transform(&series(vec![std::f64::consts::E])).unwrap().values()[0] - 1.0).abs() < 1e-15);
        match log_transform(&series(vec![1.0, 0.0])) {
            Err(Error::NonPositive { at, .. }) => assert_eq!(at, "2002-01-01h02"),
            r => panic!("unexpected {r:?}"),
        }
    }

    #[test]
    fn outlier_examples() {
        let y: Vec<f64> = (1..=100).map(f64::from).collect();
        assert!(outlier_weights(&y, 0.0).unwrap().iter().all(|&w| w == 1.0));
        let w = outlier_weights(&y, 0.02).unwrap();
        assert_eq!(w.iter().filter(|&&v| v == 0.0).count(), 2);
        assert_eq!(&w[..3], &[0.0, 0.0, 1.0]);
        assert!(outlier_weights(&[5.0; 10], 0.3).unwrap().iter().all(|&w| w == 1.0));
        assert!(outlier_weights(&y, 1.0).is_err());
    }

    #[test]
    fn yearly_folds() {
        let start = TimePoint::new(2002, 1, 1, 1).unwrap();
        let end = TimePoint::new(2007, 1, 1, 1).unwrap();
        let idx = TimeIndex::hourly(start, (end.ordinal() - start.ordinal()) as usize);
        let folds = ts_cv_folds(&idx, 3, FoldLength::Years(1)).unwrap();
        let years: Vec<i32> = folds.iter().map(|f| f.test.start.year()).collect();
        assert_eq!(years, vec![2004, 2005, 2006]);
        assert_eq!(folds[0].test.len, 366 * 24);
        for f in &folds {
            assert_eq!(f.train.start, start);
            assert_eq!(f.train.len, (f.test.start.ordinal() - start.ordinal()) as usize);
            assert_eq!(f.test.last().unwrap().year(), f.test.start.year());
        }
        assert!(ts_cv_folds(&idx, 5, FoldLength::Years(1)).is_err());
    }

    #[test]
    fn step_folds() {
        let idx = TimeIndex::hourly(TimePoint::new(2002, 1, 1, 1).unwrap(), 100);
        let one = ts_cv_folds(&idx, 1, FoldLength::Steps(30)).unwrap();
        assert_eq!((one[0].train.len, one[0].test.len), (70, 30));
        let three = ts_cv_folds(&idx, 3, FoldLength::Steps(20)).unwrap();
        assert_eq!(three.iter().map(|f| f.train.len).collect::<Vec<_>>(), vec![40, 60, 80]);
        assert!(ts_cv_folds(&idx, 5, FoldLength::Steps(20)).is_err());
    }
}
