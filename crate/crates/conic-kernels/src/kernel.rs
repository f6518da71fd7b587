//! Kernel evaluation and Gram matrix assembly for the distance-augmented
//! kernels and the linear, RBF, and polynomial baselines.
//!
//! The distance-augmented kernels are computed from their closed forms
//! (inner product plus a product of anchor distances), independently of the
//! explicit feature maps, so the two paths can be checked against each other.

use rayon::prelude::*;

use crate::data::{dot, p_distance_unchecked, Matrix, NormExponent, Vector};
use crate::error::{Error, Result};

/// Kernel function selector.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
    Poly { degree: u32 },
    /// xᵀz plus the product of p-distances to a shared anchor.
    ConicSingle { p: NormExponent, anchor: Vector },
    /// xᵀz plus the summed per-coordinate distance products.
    ConicCoordinatewise { p: NormExponent, anchor: Vector },
}

impl KernelSpec {
    fn validate(&self, d: usize) -> Result<()> {
        match self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { gamma } => {
                if *gamma > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "RBF bandwidth must be positive, got {gamma}"
                    )))
                }
            }
            KernelSpec::Poly { degree } => {
                if *degree >= 1 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(
                        "polynomial degree must be at least 1".into(),
                    ))
                }
            }
            KernelSpec::ConicSingle { anchor, .. }
            | KernelSpec::ConicCoordinatewise { anchor, .. } => {
                if anchor.len() == d {
                    Ok(())
                } else {
                    Err(Error::DimensionMismatch {
                        left: anchor.len(),
                        right: d,
                    })
                }
            }
        }
    }
}

#[inline]
fn coordinate_feature(delta: f64, p: NormExponent) -> f64 {
    let a = delta.abs();
    match p {
        NormExponent::P1 | NormExponent::PInf => a,
        NormExponent::P2 => a * a,
    }
}

#[inline]
fn eval_unchecked(spec: &KernelSpec, x: &[f64], z: &[f64]) -> f64 {
    match spec {
        KernelSpec::Linear => dot(x, z),
        KernelSpec::Rbf { gamma } => {
            let sq = p_distance_unchecked(x, z, NormExponent::P2);
            (-gamma * sq).exp()
        }
        KernelSpec::Poly { degree } => (dot(x, z) + 1.0).powi(*degree as i32),
        KernelSpec::ConicSingle { p, anchor } => {
            let a = anchor.as_slice();
            dot(x, z) + p_distance_unchecked(x, a, *p) * p_distance_unchecked(z, a, *p)
        }
        KernelSpec::ConicCoordinatewise { p, anchor } => {
            let a = anchor.as_slice();
            let mut acc = dot(x, z);
            for ((xi, zi), ai) in x.iter().zip(z).zip(a) {
                acc += coordinate_feature(xi - ai, *p) * coordinate_feature(zi - ai, *p);
            }
            acc
        }
    }
}

/// Evaluates the kernel on one pair of samples.
pub fn eval_kernel(spec: &KernelSpec, x: &[f64], z: &[f64]) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: z.len(),
        });
    }
    spec.validate(x.len())?;
    Ok(eval_unchecked(spec, x, z))
}

/// Dense matrix of kernel evaluations, entry (i, j) pairing row i of `x`
/// with row j of `z`.
pub fn gram_matrix(spec: &KernelSpec, x: &Matrix, z: &Matrix) -> Result<Matrix> {
    if x.cols() != z.cols() {
        return Err(Error::DimensionMismatch {
            left: x.cols(),
            right: z.cols(),
        });
    }
    spec.validate(x.cols())?;
    let z_rows: Vec<&[f64]> = z.iter_rows().collect();
    let data: Vec<f64> = x
        .iter_rows()
        .collect::<Vec<_>>()
        .par_iter()
        .flat_map_iter(|xi| z_rows.iter().map(move |zj| eval_unchecked(spec, xi, zj)))
        .collect();
    Matrix::from_vec(x.rows(), z.rows(), data)
}
