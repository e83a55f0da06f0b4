//! Second-order regression trees grown best-first with exact greedy split search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Tree node. Rows with `x[feature] < threshold` go left; `NaN` goes right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub enum TreeNode<T: Scalar = f64> {
    Split { feature: usize, threshold: T, left: usize, right: usize, gain: T },
    Leaf { value: T },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Tree<T: Scalar = f64> {
    /// Root at position 0.
    pub nodes: Vec<TreeNode<T>>,
}

impl<T: Scalar> Tree<T> {
    pub fn leaf(value: T) -> Self {
        Self { nodes: vec![TreeNode::Leaf { value }] }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    /// Evaluates the tree on row `r` of column-major data.
    #[inline]
    pub fn predict_row(&self, columns: &[&[T]], r: usize) -> T {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split { feature, threshold, left, right, .. } => {
                    i = if columns[*feature][r] < *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn feature_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            TreeNode::Split { feature, .. } => Some(*feature),
            TreeNode::Leaf { .. } => None,
        })
    }
}

/// Tree growth settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams<T: Scalar> {
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    pub lambda_l2: T,
    pub min_sum_hessian: T,
    /// Leaf values are clipped to `[-max_delta_step, max_delta_step]` when positive.
    pub max_delta_step: T,
}

/// Rows of the training set sorted by every feature, computed once per fit.
///
/// Only rows with positive weight are present; ties are ordered by row id.
#[derive(Debug, Clone)]
pub struct Presorted {
    lists: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new<T: Scalar>(columns: &[&[T]], rows: &[u32]) -> Self {
        let lists = columns
            .par_iter()
            .map(|col| {
                let mut l = rows.to_vec();
                l.sort_by(|&a, &b| {
                    col[a as usize]
                        .partial_cmp(&col[b as usize])
                        .expect("training features are finite")
                        .then(a.cmp(&b))
                });
                l
            })
            .collect();
        Self { lists }
    }

    pub fn n_rows(&self) -> usize {
        self.lists.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, Copy)]
struct SplitChoice<T> {
    feature: usize,
    threshold: T,
    gain: T,
    left_count: usize,
}

/// Rows of one node sorted by a feature, with the feature values alongside.
struct SortedRows<T> {
    rows: Vec<u32>,
    values: Vec<T>,
}

struct LeafWork<T: Scalar> {
    node: usize,
    lists: Vec<SortedRows<T>>,
    g: T,
    h: T,
    best: Option<SplitChoice<T>>,
}

fn leaf_value<T: Scalar>(g: T, h: T, p: &TreeParams<T>) -> T {
    let den = h + p.lambda_l2;
    if den <= T::zero() {
        return T::zero();
    }
    let v = -g / den;
    if p.max_delta_step > T::zero() {
        v.max(-p.max_delta_step).min(p.max_delta_step)
    } else {
        v
    }
}

fn score<T: Scalar>(g: T, h: T, lambda: T) -> T {
    let den = h + lambda;
    if den <= T::zero() {
        T::zero()
    } else {
        g * g / den
    }
}

fn best_for_feature<T: Scalar>(
    feature: usize,
    sorted: &SortedRows<T>,
    gh: &[[T; 2]],
    g: T,
    h: T,
    p: &TreeParams<T>,
) -> Option<SplitChoice<T>> {
    let (list, vals) = (&sorted.rows, &sorted.values);
    let n = list.len();
    if n < 2 || vals[0] >= vals[n - 1] {
        return None;
    }
    let parent = score(g, h, p.lambda_l2);
    let tol = T::lit(1e-10) * (parent.abs() + T::epsilon());
    let mut best: Option<SplitChoice<T>> = None;
    let (mut gl, mut hl) = (T::zero(), T::zero());
    let min_leaf = p.min_samples_leaf.max(1);
    for i in 0..n - 1 {
        let [gr_, hr_] = gh[list[i] as usize];
        gl = gl + gr_;
        hl = hl + hr_;
        let left_count = i + 1;
        if n - left_count < min_leaf {
            break;
        }
        let v = vals[i];
        let next = vals[i + 1];
        if next <= v || left_count < min_leaf {
            continue;
        }
        let (gr, hr) = (g - gl, h - hl);
        if hl < p.min_sum_hessian || hr < p.min_sum_hessian {
            continue;
        }
        let gain = score(gl, hl, p.lambda_l2) + score(gr, hr, p.lambda_l2) - parent;
        if gain > tol && best.map_or(true, |b| gain > b.gain) {
            let mut threshold = v + (next - v) / T::lit(2.0);
            if threshold <= v {
                threshold = next;
            }
            best = Some(SplitChoice { feature, threshold, gain, left_count });
        }
    }
    best
}

fn find_split<T: Scalar>(
    lists: &[SortedRows<T>],
    gh: &[[T; 2]],
    g: T,
    h: T,
    p: &TreeParams<T>,
) -> Option<SplitChoice<T>> {
    let n = lists.first().map_or(0, |l| l.rows.len());
    if n < 2 * p.min_samples_leaf.max(1) {
        return None;
    }
    let eval = |f: usize| best_for_feature(f, &lists[f], gh, g, h, p);
    let per_feature: Vec<Option<SplitChoice<T>>> = if n * lists.len() > 20_000 && rayon::current_num_threads() > 1 {
        (0..lists.len()).into_par_iter().map(eval).collect()
    } else {
        (0..lists.len()).map(eval).collect()
    };
    // strict improvement keeps the lowest feature id on ties
    per_feature.into_iter().flatten().fold(None, |acc: Option<SplitChoice<T>>, c| match acc {
        Some(a) if c.gain <= a.gain => Some(a),
        _ => Some(c),
    })
}

/// Stable partition of a node's sorted lists by the `go_left` row flags.
fn partition<T: Scalar>(lists: Vec<SortedRows<T>>, go_left: &[bool], left_count: usize) -> (Vec<SortedRows<T>>, Vec<SortedRows<T>>) {
    let mut left = Vec::with_capacity(lists.len());
    let mut right = Vec::with_capacity(lists.len());
    for list in lists {
        let n_right = list.rows.len() - left_count;
        let mut l = SortedRows { rows: Vec::with_capacity(left_count), values: Vec::with_capacity(left_count) };
        let mut r = SortedRows { rows: Vec::with_capacity(n_right), values: Vec::with_capacity(n_right) };
        for (&row, &v) in list.rows.iter().zip(&list.values) {
            let dst = if go_left[row as usize] { &mut l } else { &mut r };
            dst.rows.push(row);
            dst.values.push(v);
        }
        left.push(l);
        right.push(r);
    }
    (left, right)
}

/// Grows one tree on weighted gradients and hessians.
///
/// `wg[r] = w_r g_r` and `wh[r] = w_r h_r` are indexed by row id; only rows in
/// `presorted` take part. Leaf values are the Newton step `-G / (H + lambda)`.
pub fn grow_tree<T: Scalar>(
    columns: &[&[T]],
    presorted: &Presorted,
    wg: &[T],
    wh: &[T],
    p: &TreeParams<T>,
) -> Tree<T> {
    let gh: Vec<[T; 2]> = wg.iter().zip(wh).map(|(&g, &h)| [g, h]).collect();
    let lists: Vec<SortedRows<T>> = presorted
        .lists
        .iter()
        .zip(columns)
        .map(|(l, col)| SortedRows { rows: l.clone(), values: l.iter().map(|&r| col[r as usize]).collect() })
        .collect();
    let (g, h) = match lists.first() {
        Some(l) => l.rows.iter().fold((T::zero(), T::zero()), |(g, h), &r| (g + wg[r as usize], h + wh[r as usize])),
        None => return Tree::leaf(T::zero()),
    };
    let mut nodes = vec![TreeNode::Leaf { value: leaf_value(g, h, p) }];
    let best = find_split(&lists, &gh, g, h, p);
    let mut open = vec![LeafWork { node: 0, lists, g, h, best }];
    let mut n_leaves = 1;
    let mut go_left = vec![false; wg.len()];

    while n_leaves < p.max_leaves {
        // highest gain first; ties resolved towards the earliest created node
        let pick = open
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.best.map(|b| (i, b.gain, l.node)))
            .fold(None, |acc: Option<(usize, T, usize)>, c| match acc {
                Some(a) if c.1 < a.1 || (c.1 == a.1 && c.2 > a.2) => Some(a),
                _ => Some(c),
            });
        let Some((slot, _, _)) = pick else { break };
        let leaf = open.swap_remove(slot);
        let split = leaf.best.expect("picked leaf has a split");

        let left_rows: Vec<u32> = leaf.lists[split.feature].rows[..split.left_count].to_vec();
        let (mut gl, mut hl) = (T::zero(), T::zero());
        for &r in &left_rows {
            go_left[r as usize] = true;
            gl = gl + wg[r as usize];
            hl = hl + wh[r as usize];
        }
        let (left_lists, right_lists) = partition(leaf.lists, &go_left, split.left_count);
        for &r in &left_rows {
            go_left[r as usize] = false;
        }
        let (gr, hr) = (leaf.g - gl, leaf.h - hl);

        let left_id = nodes.len();
        let right_id = left_id + 1;
        nodes.push(TreeNode::Leaf { value: leaf_value(gl, hl, p) });
        nodes.push(TreeNode::Leaf { value: leaf_value(gr, hr, p) });
        nodes[leaf.node] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: left_id,
            right: right_id,
            gain: split.gain,
        };
        n_leaves += 1;

        let best_l = find_split(&left_lists, &gh, gl, hl, p);
        let best_r = find_split(&right_lists, &gh, gr, hr, p);
        open.push(LeafWork { node: left_id, lists: left_lists, g: gl, h: hl, best: best_l });
        open.push(LeafWork { node: right_id, lists: right_lists, g: gr, h: hr, best: best_r });
    }
    Tree { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(max_leaves: usize) -> TreeParams<f64> {
        TreeParams {
            max_leaves,
            min_samples_leaf: 1,
            lambda_l2: 0.0,
            min_sum_hessian: 0.0,
            max_delta_step: 0.0,
        }
    }

    fn fit(cols: &[Vec<f64>], g: &[f64], h: &[f64], w: &[f64], p: &TreeParams<f64>) -> Tree<f64> {
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let rows: Vec<u32> = (0..g.len() as u32).filter(|&r| w[r as usize] > 0.0).collect();
        let pre = Presorted::new(&refs, &rows);
        let wg: Vec<f64> = g.iter().zip(w).map(|(a, b)| a * b).collect();
        let wh: Vec<f64> = h.iter().zip(w).map(|(a, b)| a * b).collect();
        grow_tree(&refs, &pre, &wg, &wh, p)
    }

    #[test]
    fn constant_gradient_gives_single_leaf() {
        let cols = vec![(0..50).map(f64::from).collect::<Vec<_>>()];
        let t = fit(&cols, &[0.7; 50], &[1.0; 50], &[1.0; 50], &params(31));
        assert_eq!(t.nodes.len(), 1);
        match t.nodes[0] {
            TreeNode::Leaf { value } => assert!((value + 0.7).abs() < 1e-12),
            _ => panic!("expected a leaf"),
        }
    }

    #[test]
    fn step_target_split_matches_exhaustive_search() {
        let x: Vec<f64> = vec![0.3, 1.2, 0.9, 2.5, 3.1, 2.8, 0.1, 3.7];
        let target: Vec<f64> = x.iter().map(|&v| if v < 2.0 { 1.0 } else { 5.0 }).collect();
        let g: Vec<f64> = target.iter().map(|t| -t).collect();
        let h = vec![1.0; x.len()];
        let t = fit(&[x.clone()], &g, &h, &[1.0; 8], &params(2));

        // oracle: every midpoint between distinct sorted values
        let mut sorted = x.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (mut best_gain, mut best_thr) = (f64::MIN, 0.0);
        let total: f64 = g.iter().sum();
        for w in sorted.windows(2) {
            let thr = (w[0] + w[1]) / 2.0;
            let (gl, nl) = x.iter().zip(&g).filter(|(v, _)| **v < thr).fold((0.0, 0.0), |a, (_, g)| (a.0 + g, a.1 + 1.0));
            let nr = 8.0 - nl;
            let gain = gl * gl / nl + (total - gl).powi(2) / nr - total * total / 8.0;
            if gain > best_gain {
                best_gain = gain;
                best_thr = thr;
            }
        }
        match &t.nodes[0] {
            TreeNode::Split { feature, threshold, left, right, .. } => {
                assert_eq!(*feature, 0);
                assert!((threshold - best_thr).abs() < 1e-12);
                assert_eq!(t.nodes[*left], TreeNode::Leaf { value: 1.0 });
                assert_eq!(t.nodes[*right], TreeNode::Leaf { value: 5.0 });
            }
            n => panic!("expected split, got {n:?}"),
        }
    }

    #[test]
    fn zero_weight_rows_do_not_matter() {
        let x: Vec<f64> = (0..40).map(|i| (i * 7 % 40) as f64).collect();
        let g: Vec<f64> = x.iter().map(|v| (v * 0.3).sin()).collect();
        let h = vec![1.0; 40];
        let mut w = vec![1.0; 40];
        for i in (0..40).step_by(3) {
            w[i] = 0.0;
        }
        let a = fit(&[x.clone()], &g, &h, &w, &params(6));
        let mut x2 = x.clone();
        let mut g2 = g.clone();
        for i in (0..40).step_by(3) {
            x2[i] = 1e6 * (i as f64 - 17.0);
            g2[i] = -1e3;
        }
        let b = fit(&[x2], &g2, &h, &w, &params(6));
        assert_eq!(a, b);
    }

    #[test]
    fn respects_leaf_limits() {
        let x: Vec<f64> = (0..100).map(f64::from).collect();
        let g: Vec<f64> = x.iter().map(|v| (v * 0.37).sin()).collect();
        let p = TreeParams { min_samples_leaf: 10, ..params(5) };
        let t = fit(&[x.clone()], &g, &[1.0; 100], &[1.0; 100], &p);
        assert!(t.n_leaves() <= 5);
        let cols: Vec<&[f64]> = vec![&x];
        let mut counts = std::collections::HashMap::new();
        for r in 0..100 {
            *counts.entry(t.predict_row(&cols, r).to_bits()).or_insert(0) += 1;
        }
        assert!(counts.values().all(|&c| c >= 10));
    }

    #[test]
    fn ties_prefer_lowest_feature() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let g: Vec<f64> = x.iter().map(|&v| if v < 10.0 { -1.0 } else { 1.0 }).collect();
        let t = fit(&[x.clone(), x.clone()], &g, &[1.0; 20], &[1.0; 20], &params(2));
        assert!(matches!(t.nodes[0], TreeNode::Split { feature: 0, .. }));
    }
}
