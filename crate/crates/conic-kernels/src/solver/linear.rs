//! Dual coordinate descent for the L2-regularized L1-hinge linear SVM.
//!
//! The bias is handled by an appended constant feature of value 1, so the
//! dual is box-constrained only. One epoch visits every coordinate in a
//! seeded random permutation; training stops when the largest projected
//! gradient magnitude over an epoch drops to the tolerance.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{dot, Dataset};
use crate::error::Result;
use crate::solver::{LinearModel, SvmHyper};

/// A trained linear model plus its optimization trace.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub model: LinearModel,
    pub converged: bool,
    pub epochs: usize,
    /// Dual objective Σα − ½‖w‖² recorded after each epoch.
    pub dual_objectives: Vec<f64>,
    pub seed: u64,
    /// Final dual variables, one per training sample.
    pub alphas: Vec<f64>,
}

#[inline]
fn decision_augmented(w: &[f64], x: &[f64]) -> f64 {
    dot(&w[..x.len()], x) + w[x.len()]
}

/// Trains on binary {+1, −1} labels. On an exhausted iteration budget the
/// best-so-far model is returned with `converged` false.
pub fn train_linear_svm(data: &Dataset, hyper: &SvmHyper) -> Result<LinearFit> {
    data.require_binary()?;
    hyper.validate()?;
    let m = data.len();
    let d = data.dim();
    let c = hyper.c;
    let max_epochs = hyper.max_iter.unwrap_or(10 * m);

    let y: Vec<f64> = data.labels.as_slice().iter().map(|&v| f64::from(v)).collect();
    let q_diag: Vec<f64> = data
        .features
        .iter_rows()
        .map(|x| dot(x, x) + 1.0)
        .collect();

    let mut alphas = vec![0.0; m];
    let mut w = vec![0.0; d + 1];
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut dual_objectives = Vec::new();
    let mut converged = false;
    let mut epochs = 0;

    for _ in 0..max_epochs {
        epochs += 1;
        order.shuffle(&mut rng);
        let mut max_violation: f64 = 0.0;
        for &i in &order {
            let x = data.features.row(i);
            let g = y[i] * decision_augmented(&w, x) - 1.0;
            let pg = if alphas[i] <= 0.0 {
                g.min(0.0)
            } else if alphas[i] >= c {
                g.max(0.0)
            } else {
                g
            };
            max_violation = max_violation.max(pg.abs());
            if pg.abs() > 1e-12 {
                let old = alphas[i];
                let updated = (old - g / q_diag[i]).clamp(0.0, c);
                alphas[i] = updated;
                let step = (updated - old) * y[i];
                for (wj, &xj) in w.iter_mut().zip(x) {
                    *wj += step * xj;
                }
                w[d] += step;
            }
        }
        let alpha_sum: f64 = alphas.iter().sum();
        dual_objectives.push(alpha_sum - 0.5 * dot(&w, &w));
        if max_violation <= hyper.tol {
            converged = true;
            break;
        }
    }

    let bias = w[d];
    w.truncate(d);
    Ok(LinearFit {
        model: LinearModel { weights: w, bias },
        converged,
        epochs,
        dual_objectives,
        seed: hyper.seed,
        alphas,
    })
}
