//! Column-major feature matrix with a warm-up missing mask and row weights.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::time::TimeIndex;

/// Named feature columns over a time index.
///
/// Missing cells can only form a leading prefix of each column (lag and
/// rolling warm-up), so the mask is stored as one prefix length per column.
/// Missing cells hold `NaN`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FeatureMatrix<T: Scalar = f64> {
    index: TimeIndex,
    names: Vec<String>,
    columns: Vec<Vec<T>>,
    warmup: Vec<usize>,
    weights: Vec<T>,
}

impl<T: Scalar> FeatureMatrix<T> {
    /// Builds a matrix with unit weights. `warmup[c]` leading cells of column `c` are missing.
    pub fn new(
        index: TimeIndex,
        names: Vec<String>,
        mut columns: Vec<Vec<T>>,
        warmup: Vec<usize>,
    ) -> Result<Self> {
        if names.len() != columns.len() || warmup.len() != columns.len() {
            return Err(Error::InvalidInput("names, columns and warm-up lengths differ".into()));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        for ((name, col), &w) in names.iter().zip(columns.iter_mut()).zip(&warmup) {
            if col.len() != index.len {
                return Err(Error::InvalidInput(format!(
                    "column `{name}` has {} rows, index has {}",
                    col.len(),
                    index.len
                )));
            }
            for v in col.iter_mut().take(w) {
                *v = T::nan();
            }
            if col.iter().skip(w).any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "column `{name}` has non-finite values outside its warm-up prefix"
                )));
            }
        }
        let weights = vec![T::one(); index.len];
        Ok(Self { index, names, columns, warmup, weights })
    }

    /// A matrix with no columns, useful as an assembly seed.
    pub fn empty(index: TimeIndex) -> Self {
        Self { index, names: Vec::new(), columns: Vec::new(), warmup: Vec::new(), weights: vec![T::one(); index.len] }
    }

    pub fn index(&self) -> &TimeIndex {
        &self.index
    }
    pub fn n_rows(&self) -> usize {
        self.index.len
    }
    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }
    pub fn names(&self) -> &[String] {
        &self.names
    }
    pub fn columns(&self) -> &[Vec<T>] {
        &self.columns
    }
    pub fn column(&self, c: usize) -> &[T] {
        &self.columns[c]
    }
    pub fn warmup(&self) -> &[usize] {
        &self.warmup
    }
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn column_position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column_by_name(&self, name: &str) -> Option<&[T]> {
        self.column_position(name).map(|c| self.columns[c].as_slice())
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        row < self.warmup[col]
    }

    /// Full boolean mask, `mask[col][row]`.
    pub fn missing_mask(&self) -> Vec<Vec<bool>> {
        self.warmup.iter().map(|&w| (0..self.n_rows()).map(|r| r < w).collect()).collect()
    }

    /// First row where every column is observed (the union of all masks ends here).
    pub fn first_complete_row(&self) -> usize {
        self.warmup.iter().copied().max().unwrap_or(0).min(self.n_rows())
    }

    pub fn row_is_complete(&self, row: usize) -> bool {
        row >= self.first_complete_row()
    }

    pub fn set_weights(&mut self, weights: Vec<T>) -> Result<()> {
        if weights.len() != self.n_rows() {
            return Err(Error::InvalidInput("weight vector length differs from rows".into()));
        }
        if weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidInput("weights must be finite and non-negative".into()));
        }
        self.weights = weights;
        Ok(())
    }

    /// Mutable access for in-place permutation; names and mask are unaffected.
    pub(crate) fn column_mut(&mut self, c: usize) -> &mut Vec<T> {
        &mut self.columns[c]
    }

    /// Keeps the named columns, in the given order.
    pub fn select(&self, names: &[String]) -> Result<Self> {
        let mut missing = Vec::new();
        let mut pos = Vec::with_capacity(names.len());
        for n in names {
            match self.column_position(n) {
                Some(p) => pos.push(p),
                None => missing.push(n.clone()),
            }
        }
        if !missing.is_empty() {
            return Err(Error::SchemaMismatch { missing });
        }
        Ok(Self {
            index: self.index,
            names: names.to_vec(),
            columns: pos.iter().map(|&p| self.columns[p].clone()).collect(),
            warmup: pos.iter().map(|&p| self.warmup[p]).collect(),
            weights: self.weights.clone(),
        })
    }

    /// Rows `offset..offset + len`.
    pub fn rows(&self, offset: usize, len: usize) -> Result<Self> {
        let index = self.index.slice(offset, len)?;
        Ok(Self {
            index,
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c[offset..offset + len].to_vec()).collect(),
            warmup: self.warmup.iter().map(|&w| w.saturating_sub(offset).min(len)).collect(),
            weights: self.weights[offset..offset + len].to_vec(),
        })
    }

    /// Row-major copy of one row.
    pub fn row(&self, r: usize) -> Vec<T> {
        self.columns.iter().map(|c| c[r]).collect()
    }
}

/// Column-wise concatenation of blocks sharing one time index. Weights come from the first block.
pub fn assemble<T: Scalar>(blocks: Vec<FeatureMatrix<T>>) -> Result<FeatureMatrix<T>> {
    let mut iter = blocks.into_iter();
    let mut out = iter
        .next()
        .ok_or_else(|| Error::InvalidInput("no feature blocks to assemble".into()))?;
    let mut seen: HashSet<String> = out.names.iter().cloned().collect();
    for block in iter {
        if block.index != out.index {
            return Err(Error::Alignment("feature blocks have different time indices".into()));
        }
        for name in &block.names {
            if !seen.insert(name.clone()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        out.names.extend(block.names);
        out.columns.extend(block.columns);
        out.warmup.extend(block.warmup);
    }
    Ok(out)
}
