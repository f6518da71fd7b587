//! Random Fourier feature and Nystroem approximations of the RBF kernel.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use rayon::prelude::*;

use crate::data::{dot, Matrix};
use crate::error::{Error, Result};
use crate::kernel::{gram_matrix, KernelSpec};

/// Which approximation to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApproxMethod {
    Fourier,
    Nystrom,
}

/// Configuration shared by both approximations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxSpec {
    pub method: ApproxMethod,
    pub gamma: f64,
    pub dim: usize,
    pub seed: u64,
}

impl ApproxSpec {
    fn validate(&self) -> Result<()> {
        if self.gamma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "RBF bandwidth must be positive, got {}",
                self.gamma
            )));
        }
        if self.dim < 1 {
            return Err(Error::InvalidParameter(
                "transformed dimension must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Frozen random Fourier transform: D frequencies and phases.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierState {
    frequencies: Matrix,
    phases: Vec<f64>,
}

impl FourierState {
    pub fn output_dim(&self) -> usize {
        self.frequencies.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.frequencies.cols()
    }
}

/// Draws D frequency rows from the Gaussian with covariance 2γ·I plus D
/// phases uniform on [0, 2π). Deterministic in the seed.
pub fn fit_fourier(spec: &ApproxSpec, d: usize) -> Result<FourierState> {
    spec.validate()?;
    if d < 1 {
        return Err(Error::EmptyInput("input dimension must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, (2.0 * spec.gamma).sqrt())
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut freq = Vec::with_capacity(spec.dim * d);
    for _ in 0..spec.dim * d {
        freq.push(normal.sample(&mut rng));
    }
    let uniform = Uniform::new(0.0, 2.0 * std::f64::consts::PI)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let phases: Vec<f64> = (0..spec.dim).map(|_| uniform.sample(&mut rng)).collect();
    Ok(FourierState {
        frequencies: Matrix::from_vec(spec.dim, d, freq)?,
        phases,
    })
}

/// Feature rows z(x) with entries sqrt(2/D)·cos(ω_jᵀx + b_j).
pub fn transform_fourier(state: &FourierState, x: &Matrix) -> Result<Matrix> {
    if x.cols() != state.input_dim() {
        return Err(Error::DimensionMismatch {
            left: x.cols(),
            right: state.input_dim(),
        });
    }
    let scale = (2.0 / state.output_dim() as f64).sqrt();
    let rows: Vec<&[f64]> = x.iter_rows().collect();
    let data: Vec<f64> = rows
        .par_iter()
        .flat_map_iter(|xi| {
            state
                .frequencies
                .iter_rows()
                .zip(&state.phases)
                .map(move |(w, b)| scale * (dot(w, xi) + b).cos())
        })
        .collect();
    Matrix::from_vec(x.rows(), state.output_dim(), data)
}

/// Frozen Nystroem transform: landmarks plus the truncated inverse square
/// root of their RBF Gram.
#[derive(Debug, Clone, PartialEq)]
pub struct NystromState {
    landmarks: Matrix,
    /// landmarks.rows() x rank, columns are u_r / sqrt(λ_r).
    projection: Matrix,
    gamma: f64,
}

impl NystromState {
    pub fn output_dim(&self) -> usize {
        self.projection.cols()
    }

    pub fn input_dim(&self) -> usize {
        self.landmarks.cols()
    }

    pub fn landmarks(&self) -> &Matrix {
        &self.landmarks
    }
}

/// Samples D landmark rows uniformly without replacement (seeded), then
/// eigendecomposes their RBF Gram, truncating eigenvalues below
/// 1e-12 times the largest. Deterministic in the seed.
pub fn fit_nystrom(spec: &ApproxSpec, x: &Matrix) -> Result<NystromState> {
    spec.validate()?;
    if spec.dim > x.rows() {
        return Err(Error::InvalidParameter(format!(
            "requested {} landmarks from {} rows",
            spec.dim,
            x.rows()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, x.rows(), spec.dim).into_vec();
    picked.sort_unstable();
    let landmarks = x.select_rows(&picked);

    let gram = gram_matrix(&KernelSpec::Rbf { gamma: spec.gamma }, &landmarks, &landmarks)?;
    let eigen = DMatrix::from_row_slice(spec.dim, spec.dim, gram.as_slice()).symmetric_eigen();
    let lambda_max = eigen.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut kept: Vec<(f64, usize)> = eigen
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l >= 1e-12 * lambda_max && l > 0.0)
        .map(|(i, &l)| (l, i))
        .collect();
    kept.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let rank = kept.len();

    let mut projection = vec![0.0; spec.dim * rank];
    for (col, &(lambda, idx)) in kept.iter().enumerate() {
        let inv_sqrt = 1.0 / lambda.sqrt();
        for row in 0..spec.dim {
            projection[row * rank + col] = eigen.eigenvectors[(row, idx)] * inv_sqrt;
        }
    }
    Ok(NystromState {
        landmarks,
        projection: Matrix::from_vec(spec.dim, rank, projection)?,
        gamma: spec.gamma,
    })
}

/// Feature rows z(x) whose inner products approximate the RBF kernel,
/// exactly reproducing it on landmark pairs when nothing was truncated.
pub fn transform_nystrom(state: &NystromState, x: &Matrix) -> Result<Matrix> {
    if x.cols() != state.input_dim() {
        return Err(Error::DimensionMismatch {
            left: x.cols(),
            right: state.input_dim(),
        });
    }
    let cross = gram_matrix(
        &KernelSpec::Rbf { gamma: state.gamma },
        x,
        &state.landmarks,
    )?;
    let rank = state.projection.cols();
    let n_landmarks = state.landmarks.rows();
    let rows: Vec<&[f64]> = cross.iter_rows().collect();
    let data: Vec<f64> = rows
        .par_iter()
        .flat_map_iter(|k_x| {
            (0..rank).map(move |r| {
                (0..n_landmarks)
                    .map(|l| k_x[l] * state.projection.get(l, r))
                    .sum::<f64>()
            })
        })
        .collect();
    Matrix::from_vec(x.rows(), rank, data)
}

/// Mean absolute entrywise difference between the approximate Gram
/// (inner products of transformed rows) and the exact RBF Gram.
pub fn mean_abs_gram_error(transformed: &Matrix, exact: &Matrix) -> f64 {
    let m = transformed.rows();
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..m {
            let approx = dot(transformed.row(i), transformed.row(j));
            total += (approx - exact.get(i, j)).abs();
        }
    }
    total / (m * m) as f64
}
