//! Sequential minimal optimization for kernel SVMs with maximal-violating-
//! pair working-set selection.
//!
//! The full Gram matrix is precomputed (single-precision storage) for
//! training sets up to 20000 samples; larger sets are rejected. One
//! iteration updates one dual pair; training stops when the largest KKT
//! violation falls to the tolerance.

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{eval_kernel, KernelSpec};
use crate::solver::{KernelModel, SvmHyper};

const GRAM_ROW_LIMIT: usize = 20_000;
const TAU: f64 = 1e-12;

/// A trained kernel model plus its optimization trace.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFit {
    pub model: KernelModel,
    pub converged: bool,
    pub pair_updates: usize,
    /// Dual objective Σα − ½αᵀQα at the final iterate.
    pub dual_objective: f64,
    /// Final dual variables, one per training sample.
    pub alphas: Vec<f64>,
}

/// Label-signed Gram matrix Q_ij = y_i y_j K_ij in single precision.
fn signed_gram(data: &Dataset, kernel: &KernelSpec) -> Result<Vec<f32>> {
    let m = data.len();
    if m > GRAM_ROW_LIMIT {
        return Err(Error::GramTooLarge {
            rows: m,
            limit: GRAM_ROW_LIMIT,
        });
    }
    let y = data.labels.as_slice();
    let rows: Vec<&[f64]> = data.features.iter_rows().collect();
    let mut q = vec![0.0f32; m * m];
    q.par_chunks_mut(m).enumerate().try_for_each(|(i, row)| {
        for (j, slot) in row.iter_mut().enumerate() {
            let k = eval_kernel(kernel, rows[i], rows[j])?;
            *slot = (f64::from(y[i] * y[j]) * k) as f32;
        }
        Ok::<(), Error>(())
    })?;
    Ok(q)
}

/// Trains on binary {+1, −1} labels. On an exhausted iteration budget the
/// current iterate is returned with `converged` false.
pub fn train_kernel_svm(
    data: &Dataset,
    kernel: &KernelSpec,
    hyper: &SvmHyper,
) -> Result<KernelFit> {
    data.require_binary()?;
    hyper.validate()?;
    let m = data.len();
    let c = hyper.c;
    let max_updates = hyper.max_iter.unwrap_or(100 * m);
    let y: Vec<f64> = data.labels.as_slice().iter().map(|&v| f64::from(v)).collect();

    let q = signed_gram(data, kernel)?;
    let q_diag: Vec<f64> = (0..m).map(|i| f64::from(q[i * m + i])).collect();

    let mut alphas = vec![0.0f64; m];
    let mut grad = vec![-1.0f64; m];
    let mut converged = false;
    let mut pair_updates = 0;

    while pair_updates < max_updates {
        // Maximal violating pair over I_up and I_low.
        let mut i = usize::MAX;
        let mut max_up = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut min_low = f64::INFINITY;
        for t in 0..m {
            let value = -y[t] * grad[t];
            let positive = y[t] > 0.0;
            let in_up = if positive { alphas[t] < c } else { alphas[t] > 0.0 };
            let in_low = if positive { alphas[t] > 0.0 } else { alphas[t] < c };
            if in_up && value > max_up {
                max_up = value;
                i = t;
            }
            if in_low && value < min_low {
                min_low = value;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || max_up - min_low <= hyper.tol {
            converged = true;
            break;
        }

        let qi = &q[i * m..(i + 1) * m];
        let qj = &q[j * m..(j + 1) * m];
        let old_i = alphas[i];
        let old_j = alphas[j];

        if y[i] != y[j] {
            let mut quad = q_diag[i] + q_diag[j] + 2.0 * f64::from(qi[j]);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = old_i - old_j;
            alphas[i] = old_i + delta;
            alphas[j] = old_j + delta;
            if diff > 0.0 {
                if alphas[j] < 0.0 {
                    alphas[j] = 0.0;
                    alphas[i] = diff;
                }
            } else if alphas[i] < 0.0 {
                alphas[i] = 0.0;
                alphas[j] = -diff;
            }
            if diff > 0.0 {
                if alphas[i] > c {
                    alphas[i] = c;
                    alphas[j] = c - diff;
                }
            } else if alphas[j] > c {
                alphas[j] = c;
                alphas[i] = c + diff;
            }
        } else {
            let mut quad = q_diag[i] + q_diag[j] - 2.0 * f64::from(qi[j]);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let total = old_i + old_j;
            alphas[i] = old_i - delta;
            alphas[j] = old_j + delta;
            if total > c {
                if alphas[i] > c {
                    alphas[i] = c;
                    alphas[j] = total - c;
                }
            } else if alphas[j] < 0.0 {
                alphas[j] = 0.0;
                alphas[i] = total;
            }
            if total > c {
                if alphas[j] > c {
                    alphas[j] = c;
                    alphas[i] = total - c;
                }
            } else if alphas[i] < 0.0 {
                alphas[i] = 0.0;
                alphas[j] = total;
            }
        }

        let delta_i = alphas[i] - old_i;
        let delta_j = alphas[j] - old_j;
        for t in 0..m {
            grad[t] += f64::from(qi[t]) * delta_i + f64::from(qj[t]) * delta_j;
        }
        pair_updates += 1;
    }

    // Bias from free support vectors, midpoint of the bound products
    // otherwise.
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    for t in 0..m {
        let yg = y[t] * grad[t];
        if alphas[t] > 0.0 && alphas[t] < c {
            free_sum += yg;
            free_count += 1;
        } else {
            let at_zero = alphas[t] <= 0.0;
            let treats_as_upper = (at_zero && y[t] > 0.0) || (!at_zero && y[t] < 0.0);
            if treats_as_upper {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        }
    }
    let rho = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        (upper + lower) / 2.0
    };
    let bias = -rho;

    let dual_objective = alphas
        .iter()
        .zip(&grad)
        .map(|(&a, &g)| a - 0.5 * a * (g + 1.0))
        .sum::<f64>();

    let support_indices: Vec<usize> = (0..m).filter(|&t| alphas[t] > 0.0).collect();
    let model = KernelModel {
        kernel: kernel.clone(),
        dim: data.dim(),
        support_vectors: support_indices
            .iter()
            .map(|&t| data.features.row(t).to_vec())
            .collect(),
        support_labels: support_indices
            .iter()
            .map(|&t| data.labels.as_slice()[t])
            .collect(),
        support_alphas: support_indices.iter().map(|&t| alphas[t]).collect(),
        support_indices,
        bias,
    };
    Ok(KernelFit {
        model,
        converged,
        pair_updates,
        dual_objective,
        alphas,
    })
}
