//! Gradient boosted regression trees.
//!
//! Two objectives are supported: weighted squared error, and the Gaussian
//! negative log-likelihood with one tree ensemble for the mean `mu` and one
//! for the log standard deviation `s = ln sigma`. Either can be trained with
//! DART dropout. Trees are grown with exact greedy split search on presorted
//! features and Newton leaf values.

mod tree;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::frame::FeatureMatrix;
use crate::scalar::{compensated_sum, Scalar};
use crate::series::{DistForecast, PointForecast};

pub use tree::{grow_tree, Presorted, Tree, TreeNode, TreeParams};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    L2,
    GaussianNll,
}

impl Objective {
    fn n_params(self) -> usize {
        match self {
            Objective::L2 => 1,
            Objective::GaussianNll => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DartConfig {
    pub enabled: bool,
    /// Probability of dropping each existing tree, in `[0, 1)`.
    pub drop_rate: f64,
    /// Drop one uniformly chosen tree when sampling drops none.
    pub fallback_one: bool,
    pub rng_seed: u64,
}

impl Default for DartConfig {
    fn default() -> Self {
        Self { enabled: false, drop_rate: 0.1, fallback_one: true, rng_seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostConfig {
    pub num_iterations: usize,
    pub learning_rate: f64,
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    pub lambda_l2: f64,
    pub min_sum_hessian: f64,
    /// Clip on leaf values; 0 disables.
    pub max_delta_step: f64,
    /// Clip on leaf values of the `ln sigma` trees; 0 disables. The Newton step
    /// on a leaf with small residuals overshoots its optimum without bound.
    pub max_log_scale_step: f64,
    pub dart: DartConfig,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            num_iterations: 500,
            learning_rate: 0.05,
            max_leaves: 31,
            min_samples_leaf: 20,
            lambda_l2: 0.0,
            min_sum_hessian: 0.0,
            max_delta_step: 0.0,
            max_log_scale_step: 1.0,
            dart: DartConfig::default(),
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(invalid(format!("learning rate {} outside (0, 1]", self.learning_rate)));
        }
        if self.max_leaves < 2 {
            return Err(invalid("max_leaves must be at least 2"));
        }
        if self.min_samples_leaf < 1 {
            return Err(invalid("min_samples_leaf must be at least 1"));
        }
        if [self.lambda_l2, self.min_sum_hessian, self.max_delta_step, self.max_log_scale_step].iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid(
                "lambda_l2, min_sum_hessian, max_delta_step and max_log_scale_step must be non-negative",
            ));
        }
        if !(0.0..1.0).contains(&self.dart.drop_rate) {
            return Err(invalid(format!("DART drop rate {} outside [0, 1)", self.dart.drop_rate)));
        }
        Ok(())
    }

    fn tree_params<T: Scalar>(&self) -> TreeParams<T> {
        TreeParams {
            max_leaves: self.max_leaves,
            min_samples_leaf: self.min_samples_leaf,
            lambda_l2: T::lit(self.lambda_l2),
            min_sum_hessian: T::lit(self.min_sum_hessian),
            max_delta_step: T::lit(self.max_delta_step),
        }
    }

    /// Tree parameters for each distribution parameter of `objective`.
    fn param_tree_params<T: Scalar>(&self, objective: Objective) -> Vec<TreeParams<T>> {
        let base = self.tree_params();
        match objective {
            Objective::L2 => vec![base],
            Objective::GaussianNll => {
                let cap = match (self.max_delta_step, self.max_log_scale_step) {
                    (a, 0.0) => a,
                    (0.0, b) => b,
                    (a, b) => a.min(b),
                };
                vec![base, TreeParams { max_delta_step: T::lit(cap), ..base }]
            }
        }
    }
}

/// Additive tree model. For [`Objective::GaussianNll`] `trees[0]` models `mu`
/// and `trees[1]` models `s = ln sigma`; both lists share `scales`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TreeEnsemble<T: Scalar = f64> {
    pub objective: Objective,
    pub feature_names: Vec<String>,
    pub base_scores: Vec<T>,
    pub trees: Vec<Vec<Tree<T>>>,
    pub scales: Vec<T>,
    pub config: BoostConfig,
    /// Weighted mean training loss after each iteration (index 0 is the base score alone).
    pub train_loss: Vec<f64>,
}

impl<T: Scalar> TreeEnsemble<T> {
    pub fn n_iterations(&self) -> usize {
        self.scales.len()
    }

    fn resolve_columns<'a>(&self, fm: &'a FeatureMatrix<T>) -> Result<Vec<&'a [T]>> {
        let mut missing = Vec::new();
        let mut cols = Vec::with_capacity(self.feature_names.len());
        for name in &self.feature_names {
            match fm.column_by_name(name) {
                Some(c) => cols.push(c),
                None => missing.push(name.clone()),
            }
        }
        if missing.is_empty() {
            Ok(cols)
        } else {
            Err(Error::SchemaMismatch { missing })
        }
    }

    /// Raw additive output of parameter `param` for every row.
    pub fn raw_output(&self, fm: &FeatureMatrix<T>, param: usize) -> Result<Vec<T>> {
        let cols = self.resolve_columns(fm)?;
        Ok(self.raw_output_cols(&cols, fm.n_rows(), param))
    }

    fn raw_output_cols(&self, cols: &[&[T]], n: usize, param: usize) -> Vec<T> {
        let base = self.base_scores[param];
        let trees = &self.trees[param];
        let eval_chunk = |start: usize, out: &mut [T]| {
            for (i, o) in out.iter_mut().enumerate() {
                let r = start + i;
                let mut acc = base;
                for (tree, &scale) in trees.iter().zip(&self.scales) {
                    acc = acc + scale * tree.predict_row(cols, r);
                }
                *o = acc;
            }
        };
        let mut out = vec![T::zero(); n];
        const CHUNK: usize = 512;
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| eval_chunk(c * CHUNK, chunk));
        out
    }

    /// Point prediction: the model output (L2) or the mean `mu` (Gaussian).
    pub fn predict(&self, fm: &FeatureMatrix<T>) -> Result<PointForecast<T>> {
        PointForecast::new(*fm.index(), self.raw_output(fm, 0)?)
    }

    /// Gaussian predictive distribution `(mu, sigma = exp(s))`; only for distributional models.
    pub fn predict_dist(&self, fm: &FeatureMatrix<T>) -> Result<DistForecast<T>> {
        if self.objective != Objective::GaussianNll {
            return Err(invalid("predict_dist needs a Gaussian NLL model"));
        }
        let mu = self.raw_output(fm, 0)?;
        let sigma = self.raw_output(fm, 1)?.into_iter().map(|s| s.exp().max(T::min_positive_value())).collect();
        DistForecast::new(*fm.index(), mu, sigma)
    }

    /// Total split gain per feature, summed over all trees and parameters.
    pub fn gain_importance(&self) -> Vec<(String, f64)> {
        let mut gains = vec![0.0; self.feature_names.len()];
        for tree in self.trees.iter().flatten() {
            for node in &tree.nodes {
                if let TreeNode::Split { feature, gain, .. } = node {
                    gains[*feature] += gain.as_f64();
                }
            }
        }
        self.feature_names.iter().cloned().zip(gains).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument { format: MODEL_FORMAT.to_string(), version: MODEL_VERSION, model: self.clone() };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument<T> = serde_json::from_str(text)?;
        if doc.format != MODEL_FORMAT {
            return Err(invalid(format!("unexpected model format `{}`", doc.format)));
        }
        if doc.version != MODEL_VERSION {
            return Err(invalid(format!("unsupported model version {}", doc.version)));
        }
        Ok(doc.model)
    }
}

pub const MODEL_FORMAT: &str = "loadfc-gbdt";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct ModelDocument<T: Scalar> {
    format: String,
    version: u32,
    model: TreeEnsemble<T>,
}

/// Gaussian negative log-likelihood of `y` under `N(mu, exp(s)^2)`.
pub fn gaussian_nll<T: Scalar>(y: T, mu: T, s: T) -> T {
    let r = y - mu;
    T::lit(LN_SQRT_2PI) + s + r * r / (T::lit(2.0) * (T::lit(2.0) * s).exp())
}

/// Gradients and hessians of the Gaussian NLL: `(d/dmu, d/ds, d2/dmu2, d2/ds2)`.
pub fn gaussian_nll_derivatives<T: Scalar>(y: T, mu: T, s: T) -> (T, T, T, T) {
    let r = y - mu;
    let inv_var = (T::lit(-2.0) * s).exp();
    let z2 = r * r * inv_var;
    (-r * inv_var, T::one() - z2, inv_var, T::lit(2.0) * z2)
}

/// Fits a single tree to weighted gradients and hessians. Masked rows and
/// zero-weight rows are excluded.
pub fn fit_tree<T: Scalar>(
    features: &FeatureMatrix<T>,
    gradients: &[T],
    hessians: &[T],
    weights: &[T],
    cfg: &BoostConfig,
) -> Result<Tree<T>> {
    let n = features.n_rows();
    if gradients.len() != n || hessians.len() != n || weights.len() != n {
        return Err(invalid("gradients, hessians and weights must match the feature rows"));
    }
    cfg.validate()?;
    let rows = training_rows(features, weights)?;
    let cols: Vec<&[T]> = features.columns().iter().map(Vec::as_slice).collect();
    let pre = Presorted::new(&cols, &rows);
    let wg: Vec<T> = gradients.iter().zip(weights).map(|(&g, &w)| g * w).collect();
    let wh: Vec<T> = hessians.iter().zip(weights).map(|(&h, &w)| h * w).collect();
    Ok(grow_tree(&cols, &pre, &wg, &wh, &cfg.tree_params()))
}

fn training_rows<T: Scalar>(fm: &FeatureMatrix<T>, weights: &[T]) -> Result<Vec<u32>> {
    if fm.n_rows() > u32::MAX as usize {
        return Err(invalid("too many rows"));
    }
    let first = fm.first_complete_row();
    let rows: Vec<u32> = (first..fm.n_rows()).filter(|&r| weights[r] > T::zero()).map(|r| r as u32).collect();
    if rows.is_empty() {
        return Err(Error::InsufficientData("no complete rows with positive weight".into()));
    }
    Ok(rows)
}

/// Incremental boosting state; each [`Booster::step`] adds one iteration.
pub struct Booster<'a, T: Scalar> {
    objective: Objective,
    cfg: BoostConfig,
    params: Vec<TreeParams<T>>,
    columns: Vec<&'a [T]>,
    names: Vec<String>,
    presorted: Presorted,
    rows: Vec<u32>,
    y: Vec<T>,
    w: Vec<T>,
    /// Current raw output per parameter, indexed by row id (only training rows are maintained).
    preds: Vec<Vec<T>>,
    base_scores: Vec<T>,
    trees: Vec<Vec<Tree<T>>>,
    scales: Vec<T>,
    rng: ChaCha8Rng,
    loss: Vec<f64>,
}

impl<'a, T: Scalar> Booster<'a, T> {
    /// Uses the matrix weights; rows inside the warm-up prefix are excluded.
    pub fn new(fm: &'a FeatureMatrix<T>, y: &[T], objective: Objective, cfg: BoostConfig) -> Result<Self> {
        cfg.validate()?;
        if y.len() != fm.n_rows() {
            return Err(invalid(format!("{} targets for {} feature rows", y.len(), fm.n_rows())));
        }
        if fm.n_cols() == 0 {
            return Err(invalid("no feature columns"));
        }
        let rows = training_rows(fm, fm.weights())?;
        if let Some(&r) = rows.iter().find(|&&r| !y[r as usize].is_finite()) {
            return Err(invalid(format!("target at row {r} is not finite")));
        }
        let columns: Vec<&[T]> = fm.columns().iter().map(Vec::as_slice).collect();
        let presorted = Presorted::new(&columns, &rows);
        let w = fm.weights().to_vec();
        let total_w = compensated_sum(rows.iter().map(|&r| w[r as usize]));
        let mean = compensated_sum(rows.iter().map(|&r| w[r as usize] * y[r as usize])) / total_w;
        let base_scores = match objective {
            Objective::L2 => vec![mean],
            Objective::GaussianNll => {
                let var = compensated_sum(rows.iter().map(|&r| {
                    let d = y[r as usize] - mean;
                    w[r as usize] * d * d
                })) / total_w;
                let floor = T::lit(1e-9) * (T::one() + mean.abs());
                vec![mean, var.sqrt().max(floor).ln()]
            }
        };
        let n = fm.n_rows();
        let preds = base_scores.iter().map(|&b| vec![b; n]).collect();
        let mut booster = Self {
            objective,
            cfg,
            params: cfg.param_tree_params(objective),
            columns,
            names: fm.names().to_vec(),
            presorted,
            rows,
            y: y.to_vec(),
            w,
            preds,
            base_scores,
            trees: vec![Vec::new(); objective.n_params()],
            scales: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(cfg.dart.rng_seed),
            loss: Vec::new(),
        };
        let l = booster.current_loss();
        booster.loss.push(l);
        Ok(booster)
    }

    /// Weighted mean loss on the training rows at the current state.
    pub fn current_loss(&self) -> f64 {
        let total_w = compensated_sum(self.rows.iter().map(|&r| self.w[r as usize]));
        let total = compensated_sum(self.rows.iter().map(|&r| {
            let r = r as usize;
            let l = match self.objective {
                Objective::L2 => {
                    let d = self.y[r] - self.preds[0][r];
                    T::lit(0.5) * d * d
                }
                Objective::GaussianNll => gaussian_nll(self.y[r], self.preds[0][r], self.preds[1][r]),
            };
            self.w[r] * l
        }));
        (total / total_w).as_f64()
    }

    fn sample_drop_set(&mut self) -> Vec<usize> {
        let n_trees = self.scales.len();
        if !self.cfg.dart.enabled || n_trees == 0 {
            return Vec::new();
        }
        let rate = self.cfg.dart.drop_rate;
        let mut drop: Vec<usize> = (0..n_trees).filter(|_| self.rng.gen::<f64>() < rate).collect();
        if drop.is_empty() && self.cfg.dart.fallback_one {
            drop.push(self.rng.gen_range(0..n_trees));
        }
        drop
    }

    fn tree_output(&self, param: usize, tree: usize) -> Vec<(usize, T)> {
        let t = &self.trees[param][tree];
        self.rows.iter().map(|&r| (r as usize, t.predict_row(&self.columns, r as usize))).collect()
    }

    /// One boosting iteration; with DART enabled the drop set is sampled first.
    pub fn step(&mut self) {
        let drop = self.sample_drop_set();
        self.step_with_drop(&drop);
    }

    /// One iteration with an explicit drop set (indices of existing iterations).
    ///
    /// Gradients are taken at the ensemble without the dropped trees; the new
    /// tree is scaled by `lr / (k + 1)` and each dropped tree by `k / (k + 1)`.
    pub fn step_with_drop(&mut self, drop: &[usize]) {
        let k = drop.len();
        let n_params = self.objective.n_params();
        // output of dropped trees, per parameter
        let mut dropped: Vec<Vec<(usize, Vec<(usize, T)>)>> = vec![Vec::new(); n_params];
        let mut eval = self.preds.clone();
        for p in 0..n_params {
            for &d in drop {
                let out = self.tree_output(p, d);
                for &(r, v) in &out {
                    eval[p][r] = eval[p][r] - self.scales[d] * v;
                }
                dropped[p].push((d, out));
            }
        }

        let n = self.y.len();
        let mut grads = vec![vec![T::zero(); n]; n_params];
        let mut hess = vec![vec![T::zero(); n]; n_params];
        for &r in &self.rows {
            let r = r as usize;
            let w = self.w[r];
            match self.objective {
                Objective::L2 => {
                    grads[0][r] = w * (eval[0][r] - self.y[r]);
                    hess[0][r] = w;
                }
                Objective::GaussianNll => {
                    let (gm, gs, hm, hs) = gaussian_nll_derivatives(self.y[r], eval[0][r], eval[1][r]);
                    grads[0][r] = w * gm;
                    grads[1][r] = w * gs;
                    hess[0][r] = w * hm;
                    hess[1][r] = w * hs;
                }
            }
        }
        let new_trees: Vec<Tree<T>> = (0..n_params)
            .map(|p| grow_tree(&self.columns, &self.presorted, &grads[p], &hess[p], &self.params[p]))
            .collect();

        let kt = T::of_usize(k);
        let new_scale = T::lit(self.cfg.learning_rate) / (kt + T::one());
        let shrink = kt / (kt + T::one());
        for (p, per_param) in dropped.iter().enumerate() {
            for (d, out) in per_param {
                let old = self.scales[*d];
                let delta = old - old * shrink;
                for &(r, v) in out {
                    self.preds[p][r] = self.preds[p][r] - delta * v;
                }
            }
        }
        for &d in drop {
            self.scales[d] = self.scales[d] * shrink;
        }
        for (p, tree) in new_trees.into_iter().enumerate() {
            for &r in &self.rows {
                let r = r as usize;
                self.preds[p][r] = self.preds[p][r] + new_scale * tree.predict_row(&self.columns, r);
            }
            self.trees[p].push(tree);
        }
        self.scales.push(new_scale);
        let l = self.current_loss();
        self.loss.push(l);
    }

    pub fn scales(&self) -> &[T] {
        &self.scales
    }

    pub fn n_iterations(&self) -> usize {
        self.scales.len()
    }

    pub fn finish(self) -> TreeEnsemble<T> {
        TreeEnsemble {
            objective: self.objective,
            feature_names: self.names,
            base_scores: self.base_scores,
            trees: self.trees,
            scales: self.scales,
            config: self.cfg,
            train_loss: self.loss,
        }
    }
}

/// Squared-error boosting. The base score is the weighted mean target.
pub fn fit_gbm<T: Scalar>(fm: &FeatureMatrix<T>, y: &[T], cfg: &BoostConfig) -> Result<TreeEnsemble<T>> {
    fit(fm, y, cfg, Objective::L2)
}

/// Gaussian NLL boosting of `(mu, ln sigma)`; base scores are the weighted mean and log std.
pub fn fit_gbm_lss<T: Scalar>(fm: &FeatureMatrix<T>, y: &[T], cfg: &BoostConfig) -> Result<TreeEnsemble<T>> {
    fit(fm, y, cfg, Objective::GaussianNll)
}

fn fit<T: Scalar>(fm: &FeatureMatrix<T>, y: &[T], cfg: &BoostConfig, objective: Objective) -> Result<TreeEnsemble<T>> {
    let mut booster = Booster::new(fm, y, objective, *cfg)?;
    for _ in 0..cfg.num_iterations {
        booster.step();
    }
    Ok(booster.finish())
}
