//! Dense numeric containers, label encodings, and the p-norm distance
//! primitives the rest of the crate builds on.

use crate::error::{Error, Result};

/// Norm exponent used by the distance-based features.
///
/// `P1` and `P2` distances return the p-th power of the norm (sum of absolute
/// differences, sum of squared differences). `PInf` returns the max-norm
/// itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormExponent {
    P1,
    P2,
    PInf,
}

impl NormExponent {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(NormExponent::P1),
            "2" => Ok(NormExponent::P2),
            "inf" | "Inf" | "INF" => Ok(NormExponent::PInf),
            other => Err(Error::InvalidParameter(format!(
                "norm exponent must be 1, 2 or inf, got {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for NormExponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormExponent::P1 => write!(f, "1"),
            NormExponent::P2 => write!(f, "2"),
            NormExponent::PInf => write!(f, "inf"),
        }
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index, value });
        }
    }
    Ok(())
}

/// A non-empty vector of finite feature values.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    entries: Vec<f64>,
}

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput("vector must have at least one entry"));
        }
        check_finite(&entries)?;
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.entries
    }
}

impl AsRef<[f64]> for Vector {
    fn as_ref(&self) -> &[f64] {
        &self.entries
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.entries[i]
    }
}

/// Dense row-major matrix of finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyInput("matrix must have at least one row and column"));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                left: data.len(),
                right: rows * cols,
            });
        }
        check_finite(&data)?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("matrix must have at least one row"));
        }
        let cols = rows[0].len();
        for row in &rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    left: row.len(),
                    right: cols,
                });
            }
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        Self::from_vec(data.len() / cols.max(1), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }
}

/// Class labels. Binary problems use {+1, -1}; multi-class problems use 1..=M.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labels {
    values: Vec<i32>,
}

impl Labels {
    pub fn new(values: Vec<i32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("labels must have at least one entry"));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[i32] {
        &self.values
    }

    /// Distinct labels in ascending order.
    pub fn classes(&self) -> Vec<i32> {
        let mut classes = self.values.clone();
        classes.sort_unstable();
        classes.dedup();
        classes
    }

    /// True when every label is +1 or -1 and both occur.
    pub fn is_binary(&self) -> bool {
        self.classes() == [-1, 1]
    }

    pub fn select(&self, indices: &[usize]) -> Labels {
        Labels {
            values: indices.iter().map(|&i| self.values[i]).collect(),
        }
    }
}

/// A feature matrix paired with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Labels,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Labels) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::DimensionMismatch {
                left: features.rows(),
                right: labels.len(),
            });
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Row indices carrying the given label, in ascending order.
    pub fn class_indices(&self, label: i32) -> Vec<usize> {
        self.labels
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(_, &y)| y == label)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: self.labels.select(indices),
        }
    }

    /// Errors unless labels are exactly {+1, -1} with both present.
    pub fn require_binary(&self) -> Result<()> {
        if !self.labels.is_binary() {
            return Err(Error::Label(format!(
                "binary {{+1, -1}} labels required, found classes {:?}",
                self.labels.classes()
            )));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn dot(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| a * b).sum()
}

#[inline]
pub(crate) fn p_distance_unchecked(x: &[f64], a: &[f64], p: NormExponent) -> f64 {
    match p {
        NormExponent::P1 => x.iter().zip(a).map(|(xi, ai)| (xi - ai).abs()).sum(),
        NormExponent::P2 => x.iter().zip(a).map(|(xi, ai)| (xi - ai) * (xi - ai)).sum(),
        NormExponent::PInf => x
            .iter()
            .zip(a)
            .map(|(xi, ai)| (xi - ai).abs())
            .fold(0.0, f64::max),
    }
}

/// Distance feature between `x` and anchor `a`: the p-th power of the p-norm
/// for p in {1, 2}, the max-norm itself for p = inf.
pub fn p_distance(x: &[f64], a: &[f64], p: NormExponent) -> Result<f64> {
    if x.len() != a.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: a.len(),
        });
    }
    Ok(p_distance_unchecked(x, a, p))
}

/// Index of the anchor row closest to `x` under the p-norm; ties resolve to
/// the lowest index.
pub fn nearest_anchor(x: &[f64], anchors: &Matrix, p: NormExponent) -> Result<usize> {
    if x.len() != anchors.cols() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: anchors.cols(),
        });
    }
    let mut best = 0;
    let mut best_dist = p_distance_unchecked(x, anchors.row(0), p);
    for i in 1..anchors.rows() {
        let d = p_distance_unchecked(x, anchors.row(i), p);
        if d < best_dist {
            best = i;
            best_dist = d;
        }
    }
    Ok(best)
}
