//! Benchmark protocol: standardization, stratified splits, two-fold inner
//! grid search, and the per-fold train/score pipeline with wall-clock
//! timing that includes mapping time.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::anchors::{anchor_sets, AnchorStrategy};
use crate::approx::{
    fit_fourier, fit_nystrom, transform_fourier, transform_nystrom, ApproxMethod, ApproxSpec,
    FourierState, NystromState,
};
use crate::data::{Dataset, Labels, Matrix, NormExponent, Vector};
use crate::error::{Error, Result};
use crate::feature_map::{map_dataset, AnchorSet, FeatureMapSpec};
use crate::kernel::KernelSpec;
use crate::solver::{
    train_kernel_svm, train_linear_svm, KernelModel, LinearModel, SvmHyper,
};

pub(crate) fn mix_seed(seed: u64, salt: u64) -> u64 {
    seed ^ salt.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Per-feature standardization statistics fitted on training data only.
/// Uses the population (divide-by-m) standard deviation; zero-variance
/// features store std 1 so scaling is always defined.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalerState {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

pub fn fit_scaler(train: &Dataset) -> ScalerState {
    let m = train.len() as f64;
    let d = train.dim();
    let mut means = vec![0.0; d];
    for row in train.features.iter_rows() {
        for (mean, &v) in means.iter_mut().zip(row) {
            *mean += v;
        }
    }
    for mean in &mut means {
        *mean /= m;
    }
    let mut vars = vec![0.0; d];
    for row in train.features.iter_rows() {
        for ((var, &mean), &v) in vars.iter_mut().zip(&means).zip(row) {
            let delta = v - mean;
            *var += delta * delta;
        }
    }
    let stds = vars
        .into_iter()
        .map(|v| {
            let std = (v / m).sqrt();
            if std > 0.0 {
                std
            } else {
                1.0
            }
        })
        .collect();
    ScalerState { means, stds }
}

pub fn apply_scaler(state: &ScalerState, data: &Dataset) -> Result<Dataset> {
    if data.dim() != state.means.len() {
        return Err(Error::DimensionMismatch {
            left: data.dim(),
            right: state.means.len(),
        });
    }
    let rows: Vec<Vec<f64>> = data
        .features
        .iter_rows()
        .map(|row| {
            row.iter()
                .zip(&state.means)
                .zip(&state.stds)
                .map(|((&v, &mean), &std)| (v - mean) / std)
                .collect()
        })
        .collect();
    Dataset::new(Matrix::from_rows(rows)?, data.labels.clone())
}

/// Stratified k-fold partitions: per class, a seeded shuffle followed by
/// round-robin fold assignment, so fold class counts differ from exact
/// proportionality by at most one sample.
pub fn stratified_kfold(
    data: &Dataset,
    k: usize,
    seed: u64,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "cross validation needs at least 2 folds, got {k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_test: Vec<Vec<usize>> = vec![Vec::new(); k];
    for label in data.labels.classes() {
        let mut members = data.class_indices(label);
        if members.len() < k {
            return Err(Error::ClassTooSmall {
                label,
                count: members.len(),
                required: k,
            });
        }
        members.shuffle(&mut rng);
        for (t, idx) in members.into_iter().enumerate() {
            fold_test[t % k].push(idx);
        }
    }
    let m = data.len();
    Ok(fold_test
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let mut in_test = vec![false; m];
            for &i in &test {
                in_test[i] = true;
            }
            let train: Vec<usize> = (0..m).filter(|&i| !in_test[i]).collect();
            (train, test)
        })
        .collect())
}

/// Stratified train/test split taking round(fraction * class size) samples
/// of each class into the training side.
pub fn holdout_split(
    data: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&train_fraction) || train_fraction == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for label in data.labels.classes() {
        let mut members = data.class_indices(label);
        if members.len() < 2 {
            return Err(Error::ClassTooSmall {
                label,
                count: members.len(),
                required: 2,
            });
        }
        members.shuffle(&mut rng);
        let take = (train_fraction * members.len() as f64).round() as usize;
        train.extend_from_slice(&members[..take]);
        test.extend_from_slice(&members[take..]);
    }
    if test.is_empty() {
        return Err(Error::InvalidParameter(
            "train fraction leaves no test samples".into(),
        ));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Which classifier family a benchmark cell runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    /// One appended nearest-anchor distance.
    Single,
    /// One appended per-coordinate distance per input dimension.
    Coordinatewise,
    /// Two appended distances, one per anchor set.
    TwoSets,
    /// One appended distance per anchor set (at least two sets).
    MultiSets,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Linear,
    Poly,
    Rbf,
    Fourier { dim: usize },
    Nystrom { dim: usize },
    Map { p: NormExponent, kind: MapKind },
}

impl Method {
    /// Parses a method token: lin, pol, rbf, rff[:D], nystrom[:D], or
    /// phi_<p>_<kind> with p in {1, 2, inf} and kind in {1, d, 2, m}.
    pub fn parse(token: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidParameter(format!(
                "unknown method {token:?} (expected lin, pol, rbf, rff[:D], \
                 nystrom[:D], or phi_<p>_<kind>)"
            ))
        };
        match token {
            "lin" => return Ok(Method::Linear),
            "pol" => return Ok(Method::Poly),
            "rbf" => return Ok(Method::Rbf),
            _ => {}
        }
        if let Some(rest) = token.strip_prefix("rff") {
            let dim = parse_dim_suffix(rest).ok_or_else(bad)?;
            return Ok(Method::Fourier { dim });
        }
        if let Some(rest) = token.strip_prefix("nystrom") {
            let dim = parse_dim_suffix(rest).ok_or_else(bad)?;
            return Ok(Method::Nystrom { dim });
        }
        if let Some(rest) = token.strip_prefix("phi_") {
            let (p_token, kind_token) = rest.rsplit_once('_').ok_or_else(bad)?;
            let p = NormExponent::parse(p_token).map_err(|_| bad())?;
            let kind = match kind_token {
                "1" => MapKind::Single,
                "d" => MapKind::Coordinatewise,
                "2" => MapKind::TwoSets,
                "m" => MapKind::MultiSets,
                _ => return Err(bad()),
            };
            return Ok(Method::Map { p, kind });
        }
        Err(bad())
    }

    pub fn name(&self) -> String {
        match self {
            Method::Linear => "lin".into(),
            Method::Poly => "pol".into(),
            Method::Rbf => "rbf".into(),
            Method::Fourier { dim } => format!("rff:{dim}"),
            Method::Nystrom { dim } => format!("nystrom:{dim}"),
            Method::Map { p, kind } => {
                let kind = match kind {
                    MapKind::Single => "1",
                    MapKind::Coordinatewise => "d",
                    MapKind::TwoSets => "2",
                    MapKind::MultiSets => "m",
                };
                format!("phi_{p}_{kind}")
            }
        }
    }

    /// The norm exponent for conic methods, if any.
    pub fn norm(&self) -> Option<NormExponent> {
        match self {
            Method::Map { p, .. } => Some(*p),
            _ => None,
        }
    }
}

const DEFAULT_APPROX_DIM: usize = 256;

fn parse_dim_suffix(rest: &str) -> Option<usize> {
    if rest.is_empty() {
        return Some(DEFAULT_APPROX_DIM);
    }
    rest.strip_prefix(':')?.parse().ok().filter(|&d| d >= 1)
}

/// Hyperparameter grids searched with inner cross validation.
#[derive(Debug, Clone, PartialEq)]
pub struct Grids {
    pub c: Vec<f64>,
    pub gamma: Vec<f64>,
    pub q: Vec<u32>,
}

impl Default for Grids {
    fn default() -> Self {
        let powers: Vec<f64> = (-5..=4).map(|i| 10f64.powi(i)).collect();
        Grids {
            c: powers.clone(),
            gamma: powers,
            q: vec![2, 3, 4],
        }
    }
}

/// One grid cell / final hyperparameter choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChosenHyper {
    pub c: f64,
    pub gamma: Option<f64>,
    pub q: Option<u32>,
}

/// How anchors are produced for conic methods.
#[derive(Debug, Clone, PartialEq)]
pub enum AnchorChoice {
    /// The zero vector of the scaled space (the training mean).
    ScaledZero,
    Strategy(AnchorStrategy),
    /// Pre-supplied sets, e.g. read from a file.
    Sets(Vec<AnchorSet>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalMode {
    KFold(usize),
    HoldOut(f64),
}

/// Everything one benchmark cell needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub method: Method,
    pub grids: Grids,
    pub mode: EvalMode,
    pub inner_folds: usize,
    pub seed: u64,
    pub anchors: AnchorChoice,
    pub sequential: bool,
    pub tol: f64,
}

impl ExperimentPlan {
    pub fn new(method: Method, seed: u64) -> Self {
        Self {
            method,
            grids: Grids::default(),
            mode: EvalMode::KFold(10),
            inner_folds: 2,
            seed,
            anchors: AnchorChoice::ScaledZero,
            sequential: false,
            tol: 1e-4,
        }
    }
}

pub(crate) fn resolve_anchor_sets(
    choice: &AnchorChoice,
    scaled_train: &Dataset,
) -> Result<Vec<AnchorSet>> {
    match choice {
        AnchorChoice::ScaledZero => {
            Ok(vec![AnchorSet::singleton(vec![0.0; scaled_train.dim()])?])
        }
        AnchorChoice::Strategy(strategy) => anchor_sets(scaled_train, strategy),
        AnchorChoice::Sets(sets) => {
            for set in sets {
                if set.dim() != scaled_train.dim() {
                    return Err(Error::DimensionMismatch {
                        left: set.dim(),
                        right: scaled_train.dim(),
                    });
                }
            }
            Ok(sets.clone())
        }
    }
}

pub(crate) fn build_map_spec(
    p: NormExponent,
    kind: MapKind,
    sets: Vec<AnchorSet>,
) -> Result<FeatureMapSpec> {
    match kind {
        MapKind::Single => {
            let mut rows: Vec<Vec<f64>> = Vec::new();
            for set in &sets {
                rows.extend(set.anchors().iter_rows().map(|r| r.to_vec()));
            }
            Ok(FeatureMapSpec::SingleDistance {
                p,
                anchors: AnchorSet::from_rows(rows)?,
            })
        }
        MapKind::Coordinatewise => {
            if sets.len() != 1 || sets[0].len() != 1 {
                return Err(Error::InvalidParameter(format!(
                    "the coordinatewise map takes exactly one anchor, got {} set(s) with {} total anchor(s)",
                    sets.len(),
                    sets.iter().map(|s| s.len()).sum::<usize>()
                )));
            }
            Ok(FeatureMapSpec::Coordinatewise {
                p,
                anchor: Vector::new(sets[0].anchors().row(0).to_vec())?,
            })
        }
        MapKind::TwoSets => {
            if sets.len() != 2 {
                return Err(Error::InvalidParameter(format!(
                    "the two-set map takes exactly two anchor sets, got {}",
                    sets.len()
                )));
            }
            let mut it = sets.into_iter();
            Ok(FeatureMapSpec::TwoAnchor {
                p,
                first: it.next().unwrap(),
                second: it.next().unwrap(),
            })
        }
        MapKind::MultiSets => {
            if sets.len() < 2 {
                return Err(Error::InvalidParameter(format!(
                    "the multi-set map takes at least two anchor sets, got {}",
                    sets.len()
                )));
            }
            Ok(FeatureMapSpec::MultiAnchor { p, sets })
        }
    }
}

/// One-vs-rest training over explicit features; a binary dataset trains a
/// single +1-vs-−1 model.
fn train_linear_set(
    train: &Dataset,
    c: f64,
    tol: f64,
    seed: u64,
) -> Result<(Vec<(i32, LinearModel)>, bool)> {
    let hyper = SvmHyper {
        c,
        tol,
        max_iter: None,
        seed,
    };
    if train.labels.is_binary() {
        let fit = train_linear_svm(train, &hyper)?;
        return Ok((vec![(1, fit.model)], fit.converged));
    }
    let classes = train.labels.classes();
    if classes.len() < 2 {
        return Err(Error::Label("training needs at least two classes".into()));
    }
    let mut models = Vec::with_capacity(classes.len());
    let mut converged = true;
    for class in classes {
        let labels: Vec<i32> = train
            .labels
            .as_slice()
            .iter()
            .map(|&y| if y == class { 1 } else { -1 })
            .collect();
        let relabeled = Dataset::new(train.features.clone(), Labels::new(labels)?)?;
        let fit = train_linear_svm(&relabeled, &hyper)?;
        converged &= fit.converged;
        models.push((class, fit.model));
    }
    Ok((models, converged))
}

fn train_kernel_set(
    train: &Dataset,
    kernel: &KernelSpec,
    c: f64,
    tol: f64,
    seed: u64,
) -> Result<(Vec<(i32, KernelModel)>, bool)> {
    let hyper = SvmHyper {
        c,
        tol,
        max_iter: None,
        seed,
    };
    if train.labels.is_binary() {
        let fit = train_kernel_svm(train, kernel, &hyper)?;
        return Ok((vec![(1, fit.model)], fit.converged));
    }
    let classes = train.labels.classes();
    if classes.len() < 2 {
        return Err(Error::Label("training needs at least two classes".into()));
    }
    let mut models = Vec::with_capacity(classes.len());
    let mut converged = true;
    for class in classes {
        let labels: Vec<i32> = train
            .labels
            .as_slice()
            .iter()
            .map(|&y| if y == class { 1 } else { -1 })
            .collect();
        let relabeled = Dataset::new(train.features.clone(), Labels::new(labels)?)?;
        let fit = train_kernel_svm(&relabeled, kernel, &hyper)?;
        converged &= fit.converged;
        models.push((class, fit.model));
    }
    Ok((models, converged))
}

/// Binary models predict by sign; one-vs-rest lists predict the class of
/// maximal decision value, first (lowest) class winning ties.
fn predict_linear_set(models: &[(i32, LinearModel)], x: &Matrix) -> Result<Labels> {
    if models.len() == 1 {
        return crate::solver::predict_linear(&models[0].1, x);
    }
    let mut out = Vec::with_capacity(x.rows());
    for row in x.iter_rows() {
        let mut best = models[0].0;
        let mut best_value = f64::NEG_INFINITY;
        for (class, model) in models {
            let value = model.decision_value(row)?;
            if value > best_value {
                best_value = value;
                best = *class;
            }
        }
        out.push(best);
    }
    Labels::new(out)
}

fn predict_kernel_set(models: &[(i32, KernelModel)], x: &Matrix) -> Result<Labels> {
    if models.len() == 1 {
        return crate::solver::predict_kernel(&models[0].1, x);
    }
    let mut out = Vec::with_capacity(x.rows());
    for row in x.iter_rows() {
        let mut best = models[0].0;
        let mut best_value = f64::NEG_INFINITY;
        for (class, model) in models {
            let value = model.decision_value(row)?;
            if value > best_value {
                best_value = value;
                best = *class;
            }
        }
        out.push(best);
    }
    Labels::new(out)
}

fn accuracy_percent(predicted: &Labels, actual: &Labels) -> f64 {
    let correct = predicted
        .as_slice()
        .iter()
        .zip(actual.as_slice())
        .filter(|(a, b)| a == b)
        .count();
    100.0 * correct as f64 / actual.len() as f64
}

/// The trained state of one fold. Mapping metadata lives beside the models
/// so test data can be pushed through the identical transformation.
#[derive(Debug, Clone, PartialEq)]
pub enum Pipeline {
    Linear {
        map: Option<FeatureMapSpec>,
        models: Vec<(i32, LinearModel)>,
    },
    Fourier {
        state: FourierState,
        models: Vec<(i32, LinearModel)>,
    },
    Nystrom {
        state: NystromState,
        models: Vec<(i32, LinearModel)>,
    },
    Kernel {
        models: Vec<(i32, KernelModel)>,
    },
}

/// Scaler, pipeline, chosen hyperparameters, and timing for one fold,
/// fitted from training rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedFold {
    pub scaler: ScalerState,
    pub pipeline: Pipeline,
    pub chosen: ChosenHyper,
    pub cell_scores: Vec<(ChosenHyper, f64)>,
    pub feature_dim: usize,
    pub converged: bool,
    pub map_seconds: f64,
    pub fit_seconds: f64,
    pub grid_seconds: f64,
}

fn grid_cells(method: &Method, grids: &Grids) -> Vec<ChosenHyper> {
    let mut cells = Vec::new();
    match method {
        Method::Linear | Method::Map { .. } => {
            for &c in &grids.c {
                cells.push(ChosenHyper { c, gamma: None, q: None });
            }
        }
        Method::Rbf | Method::Fourier { .. } | Method::Nystrom { .. } => {
            for &c in &grids.c {
                for &gamma in &grids.gamma {
                    cells.push(ChosenHyper { c, gamma: Some(gamma), q: None });
                }
            }
        }
        Method::Poly => {
            for &c in &grids.c {
                for &q in &grids.q {
                    cells.push(ChosenHyper { c, gamma: None, q: Some(q) });
                }
            }
        }
    }
    cells
}

/// Per-cell accuracy for one inner train/test pair.
fn cell_accuracy(
    method: &Method,
    cell: &ChosenHyper,
    train: &Dataset,
    test: &Dataset,
    tol: f64,
    seed: u64,
    approx_seed: u64,
) -> Result<f64> {
    match method {
        Method::Linear | Method::Map { .. } => {
            let (models, _) = train_linear_set(train, cell.c, tol, seed)?;
            let predicted = predict_linear_set(&models, &test.features)?;
            Ok(accuracy_percent(&predicted, &test.labels))
        }
        Method::Rbf => {
            let kernel = KernelSpec::Rbf { gamma: cell.gamma.expect("rbf cell") };
            let (models, _) = train_kernel_set(train, &kernel, cell.c, tol, seed)?;
            let predicted = predict_kernel_set(&models, &test.features)?;
            Ok(accuracy_percent(&predicted, &test.labels))
        }
        Method::Poly => {
            let kernel = KernelSpec::Poly { degree: cell.q.expect("poly cell") };
            let (models, _) = train_kernel_set(train, &kernel, cell.c, tol, seed)?;
            let predicted = predict_kernel_set(&models, &test.features)?;
            Ok(accuracy_percent(&predicted, &test.labels))
        }
        Method::Fourier { dim } => {
            let spec = ApproxSpec {
                method: ApproxMethod::Fourier,
                gamma: cell.gamma.expect("fourier cell"),
                dim: *dim,
                seed: approx_seed,
            };
            let state = fit_fourier(&spec, train.dim())?;
            let mapped_train =
                Dataset::new(transform_fourier(&state, &train.features)?, train.labels.clone())?;
            let mapped_test =
                Dataset::new(transform_fourier(&state, &test.features)?, test.labels.clone())?;
            let (models, _) = train_linear_set(&mapped_train, cell.c, tol, seed)?;
            let predicted = predict_linear_set(&models, &mapped_test.features)?;
            Ok(accuracy_percent(&predicted, &mapped_test.labels))
        }
        Method::Nystrom { dim } => {
            let spec = ApproxSpec {
                method: ApproxMethod::Nystrom,
                gamma: cell.gamma.expect("nystrom cell"),
                dim: (*dim).min(train.len()),
                seed: approx_seed,
            };
            let state = fit_nystrom(&spec, &train.features)?;
            let mapped_train =
                Dataset::new(transform_nystrom(&state, &train.features)?, train.labels.clone())?;
            let mapped_test =
                Dataset::new(transform_nystrom(&state, &test.features)?, test.labels.clone())?;
            let (models, _) = train_linear_set(&mapped_train, cell.c, tol, seed)?;
            let predicted = predict_linear_set(&models, &mapped_test.features)?;
            Ok(accuracy_percent(&predicted, &mapped_test.labels))
        }
    }
}

/// Grid search outcome: the winning cell plus every cell's mean inner
/// accuracy in enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub chosen: ChosenHyper,
    pub cell_scores: Vec<(ChosenHyper, f64)>,
    pub seconds: f64,
}

/// Picks the grid cell with the highest mean stratified inner-CV accuracy
/// on `train` (already scaled; conic methods are evaluated on the mapping
/// given in `prepared_map`). Ties go to the first cell in enumeration
/// order: C ascending, then gamma ascending, then q ascending.
fn grid_search_prepared(
    train: &Dataset,
    prepared_map: Option<&FeatureMapSpec>,
    plan: &ExperimentPlan,
    fold_salt: u64,
) -> Result<GridOutcome> {
    let started = Instant::now();
    let cells = grid_cells(&plan.method, &plan.grids);
    if cells.is_empty() {
        return Err(Error::InvalidParameter("empty hyperparameter grid".into()));
    }
    if cells.len() == 1 {
        return Ok(GridOutcome {
            chosen: cells[0],
            cell_scores: vec![(cells[0], f64::NAN)],
            seconds: started.elapsed().as_secs_f64(),
        });
    }

    let search_data = match prepared_map {
        Some(map) => map_dataset(map, train)?,
        None => train.clone(),
    };
    let splits = stratified_kfold(
        &search_data,
        plan.inner_folds,
        mix_seed(plan.seed, fold_salt.wrapping_add(0x1111)),
    )?;
    let pairs: Vec<(Dataset, Dataset)> = splits
        .iter()
        .map(|(train_idx, test_idx)| {
            (search_data.select(train_idx), search_data.select(test_idx))
        })
        .collect();
    let solver_seed = mix_seed(plan.seed, fold_salt);
    let approx_seed = plan.seed;

    let evaluate = |cell: &ChosenHyper| -> Result<f64> {
        let mut total = 0.0;
        for (inner_train, inner_test) in &pairs {
            total += cell_accuracy(
                &plan.method,
                cell,
                inner_train,
                inner_test,
                plan.tol,
                solver_seed,
                approx_seed,
            )?;
        }
        Ok(total / pairs.len() as f64)
    };

    let scores: Result<Vec<f64>> = if plan.sequential {
        cells.iter().map(evaluate).collect()
    } else {
        cells.par_iter().map(evaluate).collect()
    };
    let scores = scores?;

    let mut best = 0;
    for (i, score) in scores.iter().enumerate() {
        if *score > scores[best] {
            best = i;
        }
    }
    Ok(GridOutcome {
        chosen: cells[best],
        cell_scores: cells.into_iter().zip(scores).collect(),
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// Standalone grid search over a training set that is scaled internally,
/// mirroring the per-fold pipeline.
pub fn grid_search(train: &Dataset, plan: &ExperimentPlan) -> Result<GridOutcome> {
    let scaler = fit_scaler(train);
    let scaled = apply_scaler(&scaler, train)?;
    let prepared = prepare_map(&scaled, plan)?;
    grid_search_prepared(&scaled, prepared.as_ref(), plan, 0)
}

fn prepare_map(scaled_train: &Dataset, plan: &ExperimentPlan) -> Result<Option<FeatureMapSpec>> {
    match plan.method {
        Method::Map { p, kind } => {
            let sets = resolve_anchor_sets(&plan.anchors, scaled_train)?;
            Ok(Some(build_map_spec(p, kind, sets)?))
        }
        _ => Ok(None),
    }
}

/// Fits scaler, anchors, grid choice, and final models from training rows
/// only. `fold_salt` decorrelates inner splits across outer folds.
pub fn fit_fold(train: &Dataset, plan: &ExperimentPlan, fold_salt: u64) -> Result<FittedFold> {
    let scaler = fit_scaler(train);
    let scaled = apply_scaler(&scaler, train)?;
    let solver_seed = mix_seed(plan.seed, fold_salt);

    let map_spec = prepare_map(&scaled, plan)?;
    let grid = grid_search_prepared(&scaled, map_spec.as_ref(), plan, fold_salt)?;
    let chosen = grid.chosen;

    let mut map_seconds = 0.0;
    let (pipeline, fit_seconds, converged, feature_dim) = match &plan.method {
        Method::Linear | Method::Map { .. } => {
            let map_started = Instant::now();
            let mapped = match &map_spec {
                Some(spec) => {
                    let mapped = map_dataset(spec, &scaled)?;
                    map_seconds = map_started.elapsed().as_secs_f64();
                    mapped
                }
                None => scaled.clone(),
            };
            let dim = mapped.dim();
            let fit_started = Instant::now();
            let (models, converged) = train_linear_set(&mapped, chosen.c, plan.tol, solver_seed)?;
            (
                Pipeline::Linear {
                    map: map_spec.clone(),
                    models,
                },
                fit_started.elapsed().as_secs_f64(),
                converged,
                dim,
            )
        }
        Method::Rbf => {
            let kernel = KernelSpec::Rbf { gamma: chosen.gamma.expect("rbf cell") };
            let fit_started = Instant::now();
            let (models, converged) =
                train_kernel_set(&scaled, &kernel, chosen.c, plan.tol, solver_seed)?;
            (
                Pipeline::Kernel { models },
                fit_started.elapsed().as_secs_f64(),
                converged,
                scaled.dim(),
            )
        }
        Method::Poly => {
            let kernel = KernelSpec::Poly { degree: chosen.q.expect("poly cell") };
            let fit_started = Instant::now();
            let (models, converged) =
                train_kernel_set(&scaled, &kernel, chosen.c, plan.tol, solver_seed)?;
            (
                Pipeline::Kernel { models },
                fit_started.elapsed().as_secs_f64(),
                converged,
                scaled.dim(),
            )
        }
        Method::Fourier { dim } => {
            let spec = ApproxSpec {
                method: ApproxMethod::Fourier,
                gamma: chosen.gamma.expect("fourier cell"),
                dim: *dim,
                seed: plan.seed,
            };
            let map_started = Instant::now();
            let state = fit_fourier(&spec, scaled.dim())?;
            let features = transform_fourier(&state, &scaled.features)?;
            map_seconds = map_started.elapsed().as_secs_f64();
            let mapped = Dataset::new(features, scaled.labels.clone())?;
            let dim = mapped.dim();
            let fit_started = Instant::now();
            let (models, converged) = train_linear_set(&mapped, chosen.c, plan.tol, solver_seed)?;
            (
                Pipeline::Fourier { state, models },
                fit_started.elapsed().as_secs_f64(),
                converged,
                dim,
            )
        }
        Method::Nystrom { dim } => {
            let spec = ApproxSpec {
                method: ApproxMethod::Nystrom,
                gamma: chosen.gamma.expect("nystrom cell"),
                dim: (*dim).min(scaled.len()),
                seed: plan.seed,
            };
            let map_started = Instant::now();
            let state = fit_nystrom(&spec, &scaled.features)?;
            let features = transform_nystrom(&state, &scaled.features)?;
            map_seconds = map_started.elapsed().as_secs_f64();
            let mapped = Dataset::new(features, scaled.labels.clone())?;
            let dim = mapped.dim();
            let fit_started = Instant::now();
            let (models, converged) = train_linear_set(&mapped, chosen.c, plan.tol, solver_seed)?;
            (
                Pipeline::Nystrom { state, models },
                fit_started.elapsed().as_secs_f64(),
                converged,
                dim,
            )
        }
    };

    Ok(FittedFold {
        scaler,
        pipeline,
        chosen,
        cell_scores: grid.cell_scores,
        feature_dim,
        converged,
        map_seconds,
        fit_seconds,
        grid_seconds: grid.seconds,
    })
}

/// Accuracy (percent) of a fitted fold on held-out rows.
pub fn score_fold(fold: &FittedFold, test: &Dataset) -> Result<f64> {
    let scaled = apply_scaler(&fold.scaler, test)?;
    let predicted = match &fold.pipeline {
        Pipeline::Linear { map, models } => {
            let mapped = match map {
                Some(spec) => map_dataset(spec, &scaled)?,
                None => scaled.clone(),
            };
            predict_linear_set(models, &mapped.features)?
        }
        Pipeline::Fourier { state, models } => {
            let features = transform_fourier(state, &scaled.features)?;
            predict_linear_set(models, &features)?
        }
        Pipeline::Nystrom { state, models } => {
            let features = transform_nystrom(state, &scaled.features)?;
            predict_linear_set(models, &features)?
        }
        Pipeline::Kernel { models } => predict_kernel_set(models, &scaled.features)?,
    };
    Ok(accuracy_percent(&predicted, &test.labels))
}

/// One benchmark row: a method run on a dataset under the plan's protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkResult {
    pub dataset: String,
    pub method: String,
    pub p: Option<NormExponent>,
    pub accuracy: f64,
    pub train_seconds: f64,
    pub grid_seconds: f64,
    pub chosen: ChosenHyper,
    pub fold_accuracies: Vec<f64>,
    pub feature_dim: usize,
    pub seed: u64,
    pub converged: bool,
}

const TIMING_RERUN_THRESHOLD: f64 = 0.1;

fn run_fold(
    data: &Dataset,
    train_idx: &[usize],
    test_idx: &[usize],
    plan: &ExperimentPlan,
    fold_salt: u64,
) -> Result<(FittedFold, f64)> {
    let train = data.select(train_idx);
    let test = data.select(test_idx);
    let mut fitted = fit_fold(&train, plan, fold_salt)?;
    if fitted.map_seconds + fitted.fit_seconds < TIMING_RERUN_THRESHOLD {
        // Cheap cells rerun once so cold-start noise cannot flip timing
        // comparisons; results are identical by determinism.
        let rerun = fit_fold(&train, plan, fold_salt)?;
        fitted.map_seconds = rerun.map_seconds;
        fitted.fit_seconds = rerun.fit_seconds;
    }
    let accuracy = score_fold(&fitted, &test)?;
    Ok((fitted, accuracy))
}

fn modal_choice(folds: &[(FittedFold, f64)]) -> ChosenHyper {
    let mut best = folds[0].0.chosen;
    let mut best_count = 0;
    for (fold, _) in folds {
        let count = folds
            .iter()
            .filter(|(other, _)| other.chosen == fold.chosen)
            .count();
        if count > best_count {
            best_count = count;
            best = fold.chosen;
        }
    }
    best
}

/// Runs the full protocol for one method on one dataset: outer folds or a
/// stratified holdout, scaling and anchors from training rows, two-fold
/// inner grid search, timed mapping and final fit, accuracy on held-out
/// rows. `train_seconds` is mapping plus final fit, averaged across folds;
/// grid search time is reported separately.
pub fn run_benchmark(data: &Dataset, name: &str, plan: &ExperimentPlan) -> Result<BenchmarkResult> {
    let splits: Vec<(Vec<usize>, Vec<usize>)> = match plan.mode {
        EvalMode::KFold(k) => stratified_kfold(data, k, plan.seed)?,
        EvalMode::HoldOut(fraction) => vec![holdout_split(data, fraction, plan.seed)?],
    };
    let outcomes: Result<Vec<(FittedFold, f64)>> = if plan.sequential {
        splits
            .iter()
            .enumerate()
            .map(|(i, (train, test))| run_fold(data, train, test, plan, i as u64))
            .collect()
    } else {
        splits
            .par_iter()
            .enumerate()
            .map(|(i, (train, test))| run_fold(data, train, test, plan, i as u64))
            .collect()
    };
    let outcomes = outcomes?;
    summarize(name, plan, outcomes)
}

/// Same protocol against a user-provided test split: the whole `train`
/// dataset plays the single outer fold.
pub fn run_benchmark_split(
    train: &Dataset,
    test: &Dataset,
    name: &str,
    plan: &ExperimentPlan,
) -> Result<BenchmarkResult> {
    if train.dim() != test.dim() {
        return Err(Error::DimensionMismatch {
            left: train.dim(),
            right: test.dim(),
        });
    }
    let mut fitted = fit_fold(train, plan, 0)?;
    if fitted.map_seconds + fitted.fit_seconds < TIMING_RERUN_THRESHOLD {
        let rerun = fit_fold(train, plan, 0)?;
        fitted.map_seconds = rerun.map_seconds;
        fitted.fit_seconds = rerun.fit_seconds;
    }
    let accuracy = score_fold(&fitted, test)?;
    summarize(name, plan, vec![(fitted, accuracy)])
}

fn summarize(
    name: &str,
    plan: &ExperimentPlan,
    outcomes: Vec<(FittedFold, f64)>,
) -> Result<BenchmarkResult> {
    let folds = outcomes.len() as f64;
    let fold_accuracies: Vec<f64> = outcomes.iter().map(|(_, acc)| *acc).collect();
    let accuracy = fold_accuracies.iter().sum::<f64>() / folds;
    let train_seconds = outcomes
        .iter()
        .map(|(fold, _)| fold.map_seconds + fold.fit_seconds)
        .sum::<f64>()
        / folds;
    let grid_seconds = outcomes.iter().map(|(fold, _)| fold.grid_seconds).sum::<f64>() / folds;
    let chosen = modal_choice(&outcomes);
    let converged = outcomes.iter().all(|(fold, _)| fold.converged);
    let feature_dim = outcomes[0].0.feature_dim;
    Ok(BenchmarkResult {
        dataset: name.to_string(),
        method: plan.method.name(),
        p: plan.method.norm(),
        accuracy,
        train_seconds,
        grid_seconds,
        chosen,
        fold_accuracies,
        feature_dim,
        seed: plan.seed,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn dataset(rows: Vec<Vec<f64>>, labels: Vec<i32>) -> Dataset {
        Dataset::new(
            Matrix::from_rows(rows).unwrap(),
            Labels::new(labels).unwrap(),
        )
        .unwrap()
    }

    fn blobs(m_per_class: usize, gap: f64, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..m_per_class {
            rows.push(vec![
                gap + rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ]);
            labels.push(1);
            rows.push(vec![
                -gap + rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ]);
            labels.push(-1);
        }
        dataset(rows, labels)
    }

    #[test]
    fn scaler_standardizes_two_point_column() {
        let data = dataset(vec![vec![0.0], vec![2.0]], vec![-1, 1]);
        let scaler = fit_scaler(&data);
        let scaled = apply_scaler(&scaler, &data).unwrap();
        assert_eq!(scaled.features.row(0), &[-1.0]);
        assert_eq!(scaled.features.row(1), &[1.0]);
    }

    #[test]
    fn constant_column_scales_to_zero_with_unit_std() {
        let data = dataset(vec![vec![5.0], vec![5.0]], vec![-1, 1]);
        let scaler = fit_scaler(&data);
        assert_eq!(scaler.stds, vec![1.0]);
        let scaled = apply_scaler(&scaler, &data).unwrap();
        assert_eq!(scaled.features.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn unseen_values_use_train_statistics() {
        let train = dataset(vec![vec![0.0], vec![2.0]], vec![-1, 1]);
        let scaler = fit_scaler(&train);
        let test = dataset(vec![vec![4.0]], vec![1]);
        let scaled = apply_scaler(&scaler, &test).unwrap();
        assert_eq!(scaled.features.row(0), &[3.0]);
    }

    #[test]
    fn scaled_train_mean_is_zero() {
        let data = blobs(30, 2.0, 3);
        let scaler = fit_scaler(&data);
        let scaled = apply_scaler(&scaler, &data).unwrap();
        let mean_set = crate::anchors::global_mean(&scaled).unwrap();
        for &v in mean_set.anchors().row(0) {
            assert!(v.abs() <= 1e-12);
        }
    }

    #[test]
    fn balanced_folds_hold_one_of_each_class() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let labels: Vec<i32> = (0..10).map(|i| if i < 5 { 1 } else { -1 }).collect();
        let data = dataset(rows, labels);
        let folds = stratified_kfold(&data, 5, 42).unwrap();
        for (_, test) in &folds {
            assert_eq!(test.len(), 2);
            let classes: Vec<i32> = test.iter().map(|&i| data.labels.as_slice()[i]).collect();
            assert!(classes.contains(&1) && classes.contains(&-1));
        }
    }

    #[test]
    fn folds_partition_the_index_range() {
        let data = blobs(13, 1.0, 9);
        let folds = stratified_kfold(&data, 4, 7).unwrap();
        let mut seen = vec![false; data.len()];
        for (train, test) in &folds {
            for &i in test {
                assert!(!seen[i], "index {i} in two test folds");
                seen[i] = true;
            }
            let mut all: Vec<usize> = train.iter().chain(test).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..data.len()).collect::<Vec<_>>());
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn folds_are_deterministic_in_seed() {
        let data = blobs(12, 1.0, 4);
        assert_eq!(
            stratified_kfold(&data, 3, 11).unwrap(),
            stratified_kfold(&data, 3, 11).unwrap()
        );
    }

    #[test]
    fn undersized_class_is_rejected() {
        let data = dataset(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![1, 1, 1, -1],
        );
        assert!(stratified_kfold(&data, 2, 0).is_err());
    }

    #[test]
    fn holdout_splits_proportionally() {
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let labels: Vec<i32> = (0..100).map(|i| if i < 50 { 1 } else { -1 }).collect();
        let data = dataset(rows, labels);
        let (train, test) = holdout_split(&data, 0.7, 42).unwrap();
        assert_eq!(train.len(), 70);
        assert_eq!(test.len(), 30);
        let train_pos = train.iter().filter(|&&i| data.labels.as_slice()[i] == 1).count();
        assert_eq!(train_pos, 35);
        let test_pos = test.iter().filter(|&&i| data.labels.as_slice()[i] == 1).count();
        assert_eq!(test_pos, 15);
    }

    #[test]
    fn holdout_rounds_per_class() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let labels: Vec<i32> = (0..10).map(|i| if i < 7 { 1 } else { -1 }).collect();
        let data = dataset(rows, labels);
        let (train, test) = holdout_split(&data, 0.7, 1).unwrap();
        let train_pos = train.iter().filter(|&&i| data.labels.as_slice()[i] == 1).count();
        let train_neg = train.len() - train_pos;
        assert_eq!(train_pos, 5);
        assert_eq!(train_neg, 2);
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn method_tokens_round_trip() {
        for token in [
            "lin", "pol", "rbf", "rff:64", "nystrom:128", "phi_1_1", "phi_2_d", "phi_inf_2",
            "phi_1_m",
        ] {
            let method = Method::parse(token).unwrap();
            assert_eq!(method.name(), token);
        }
        assert_eq!(
            Method::parse("rff").unwrap(),
            Method::Fourier { dim: DEFAULT_APPROX_DIM }
        );
        assert!(Method::parse("bogus").is_err());
        assert!(Method::parse("phi_3_1").is_err());
    }

    #[test]
    fn default_grids_match_the_protocol() {
        let grids = Grids::default();
        assert_eq!(grids.c.len(), 10);
        assert_eq!(grids.c[0], 1e-5);
        assert_eq!(grids.c[9], 1e4);
        assert_eq!(grids.gamma, grids.c);
        assert_eq!(grids.q, vec![2, 3, 4]);
    }

    #[test]
    fn single_cell_grid_is_chosen_without_search() {
        let data = blobs(10, 2.0, 5);
        let mut plan = ExperimentPlan::new(Method::Linear, 42);
        plan.grids = Grids {
            c: vec![1.0],
            gamma: vec![],
            q: vec![],
        };
        let outcome = grid_search(&data, &plan).unwrap();
        assert_eq!(outcome.chosen, ChosenHyper { c: 1.0, gamma: None, q: None });
    }

    #[test]
    fn grid_search_never_picks_a_strictly_worse_cell() {
        let data = blobs(20, 3.0, 8);
        let mut plan = ExperimentPlan::new(Method::Linear, 42);
        plan.grids = Grids {
            c: vec![1e-5, 1.0],
            gamma: vec![],
            q: vec![],
        };
        let outcome = grid_search(&data, &plan).unwrap();
        let best_score = outcome
            .cell_scores
            .iter()
            .map(|(_, s)| *s)
            .fold(f64::NEG_INFINITY, f64::max);
        let chosen_score = outcome
            .cell_scores
            .iter()
            .find(|(cell, _)| *cell == outcome.chosen)
            .unwrap()
            .1;
        assert_eq!(chosen_score, best_score);
        assert_eq!(chosen_score, 100.0);
    }

    #[test]
    fn grid_ties_resolve_to_the_first_cell() {
        let data = blobs(20, 4.0, 2);
        let mut plan = ExperimentPlan::new(Method::Linear, 7);
        plan.grids = Grids {
            c: vec![1.0, 10.0, 100.0],
            gamma: vec![],
            q: vec![],
        };
        let outcome = grid_search(&data, &plan).unwrap();
        let all_equal = outcome
            .cell_scores
            .iter()
            .all(|(_, s)| *s == outcome.cell_scores[0].1);
        assert!(all_equal, "expected a tie across cells");
        assert_eq!(outcome.chosen.c, 1.0);
    }

    #[test]
    fn linear_benchmark_on_separable_data_is_perfect() {
        let data = blobs(20, 4.0, 6);
        let mut plan = ExperimentPlan::new(Method::Linear, 42);
        plan.mode = EvalMode::KFold(5);
        plan.grids.c = vec![1.0];
        let result = run_benchmark(&data, "toy", &plan).unwrap();
        assert_eq!(result.accuracy, 100.0);
        assert_eq!(result.fold_accuracies.len(), 5);
        assert_eq!(result.feature_dim, 2);
    }

    #[test]
    fn single_distance_map_records_extra_dimension() {
        let data = blobs(15, 2.0, 1);
        let mut plan = ExperimentPlan::new(
            Method::Map { p: NormExponent::P1, kind: MapKind::Single },
            42,
        );
        plan.mode = EvalMode::HoldOut(0.7);
        plan.grids.c = vec![1.0];
        let result = run_benchmark(&data, "toy", &plan).unwrap();
        assert_eq!(result.feature_dim, 3);
        assert_eq!(result.method, "phi_1_1");
    }

    #[test]
    fn kfold_accuracy_is_the_mean_of_fold_accuracies() {
        let mut data = blobs(20, 1.2, 10);
        // Flip a few labels so folds disagree.
        let mut labels = data.labels.as_slice().to_vec();
        labels[0] = -labels[0];
        labels[7] = -labels[7];
        data = Dataset::new(data.features.clone(), Labels::new(labels).unwrap()).unwrap();
        let mut plan = ExperimentPlan::new(Method::Linear, 3);
        plan.mode = EvalMode::KFold(4);
        plan.grids.c = vec![1.0];
        let result = run_benchmark(&data, "noisy", &plan).unwrap();
        let mean = result.fold_accuracies.iter().sum::<f64>() / 4.0;
        assert!((result.accuracy - mean).abs() < 1e-12);
        let distinct = result
            .fold_accuracies
            .iter()
            .any(|&a| (a - result.fold_accuracies[0]).abs() > 1e-12);
        assert!(distinct, "fold accuracies unexpectedly identical");
    }

    #[test]
    fn perturbing_test_rows_leaves_the_fitted_fold_unchanged() {
        let data = blobs(20, 1.5, 12);
        let (train_idx, test_idx) = holdout_split(&data, 0.7, 9).unwrap();
        let mut plan = ExperimentPlan::new(
            Method::Map { p: NormExponent::P2, kind: MapKind::Single },
            9,
        );
        plan.grids.c = vec![0.1, 1.0];

        let baseline = fit_fold(&data.select(&train_idx), &plan, 0).unwrap();

        let mut rows: Vec<Vec<f64>> = data.features.iter_rows().map(|r| r.to_vec()).collect();
        for &i in &test_idx {
            rows[i][0] += 1000.0;
            rows[i][1] -= 500.0;
        }
        let perturbed = Dataset::new(Matrix::from_rows(rows).unwrap(), data.labels.clone()).unwrap();
        let refit = fit_fold(&perturbed.select(&train_idx), &plan, 0).unwrap();

        assert_eq!(baseline.scaler, refit.scaler);
        assert_eq!(baseline.pipeline, refit.pipeline);
        assert_eq!(baseline.chosen, refit.chosen);
    }

    #[test]
    fn benchmarks_are_deterministic_in_plan_and_seed() {
        let data = blobs(15, 1.0, 20);
        for method in [
            Method::Linear,
            Method::Rbf,
            Method::Fourier { dim: 16 },
            Method::Nystrom { dim: 8 },
            Method::Map { p: NormExponent::P1, kind: MapKind::Coordinatewise },
        ] {
            let mut plan = ExperimentPlan::new(method, 17);
            plan.mode = EvalMode::KFold(3);
            plan.grids = Grids {
                c: vec![0.1, 1.0],
                gamma: vec![0.2, 1.0],
                q: vec![2],
            };
            let a = run_benchmark(&data, "toy", &plan).unwrap();
            let b = run_benchmark(&data, "toy", &plan).unwrap();
            assert_eq!(a.accuracy, b.accuracy, "{method:?}");
            assert_eq!(a.fold_accuracies, b.fold_accuracies, "{method:?}");
            assert_eq!(a.chosen, b.chosen, "{method:?}");
        }
    }

    #[test]
    fn two_class_one_vs_rest_matches_the_binary_path() {
        let binary = blobs(40, 2.0, 30);
        let multiclass = Dataset::new(
            binary.features.clone(),
            Labels::new(
                binary
                    .labels
                    .as_slice()
                    .iter()
                    .map(|&y| if y == 1 { 2 } else { 1 })
                    .collect(),
            )
            .unwrap(),
        )
        .unwrap();

        let scaler = fit_scaler(&binary);
        let scaled_binary = apply_scaler(&scaler, &binary).unwrap();
        let scaled_multi = apply_scaler(&scaler, &multiclass).unwrap();
        let sets = crate::anchors::class_means(&scaled_multi).unwrap();
        let spec = build_map_spec(NormExponent::P1, MapKind::MultiSets, sets).unwrap();
        let mapped_binary = map_dataset(&spec, &scaled_binary).unwrap();
        let mapped_multi = map_dataset(&spec, &scaled_multi).unwrap();

        let (binary_models, _) = train_linear_set(&mapped_binary, 1.0, 1e-4, 0).unwrap();
        let (ovr_models, _) = train_linear_set(&mapped_multi, 1.0, 1e-4, 0).unwrap();
        assert_eq!(binary_models.len(), 1);
        assert_eq!(ovr_models.len(), 2);

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let probes: Vec<Vec<f64>> = (0..500)
            .map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
            .collect();
        let probe_data = Dataset::new(
            Matrix::from_rows(probes).unwrap(),
            Labels::new(vec![1; 500]).unwrap(),
        )
        .unwrap();
        let mapped_probes = map_dataset(&spec, &apply_scaler(&scaler, &probe_data).unwrap()).unwrap();

        let binary_pred = predict_linear_set(&binary_models, &mapped_probes.features).unwrap();
        let ovr_pred = predict_linear_set(&ovr_models, &mapped_probes.features).unwrap();
        let agree = binary_pred
            .as_slice()
            .iter()
            .zip(ovr_pred.as_slice())
            .filter(|(&b, &o)| (b == 1) == (o == 2))
            .count();
        assert!(agree >= 490, "only {agree} of 500 probes agreed");
    }

    #[test]
    fn provided_test_split_is_scored_directly() {
        let train = blobs(20, 3.0, 40);
        let test = blobs(10, 3.0, 41);
        let mut plan = ExperimentPlan::new(Method::Linear, 1);
        plan.grids.c = vec![1.0];
        let result = run_benchmark_split(&train, &test, "toy", &plan).unwrap();
        assert_eq!(result.accuracy, 100.0);
        assert_eq!(result.fold_accuracies.len(), 1);
    }

    #[test]
    fn coordinatewise_map_rejects_multi_anchor_strategies() {
        let data = blobs(10, 2.0, 2);
        let mut plan = ExperimentPlan::new(
            Method::Map { p: NormExponent::P1, kind: MapKind::Coordinatewise },
            0,
        );
        plan.anchors = AnchorChoice::Strategy(AnchorStrategy::ClassMeans);
        plan.grids.c = vec![1.0];
        plan.mode = EvalMode::HoldOut(0.7);
        assert!(run_benchmark(&data, "toy", &plan).is_err());
    }

    #[test]
    fn two_set_map_uses_class_means() {
        let data = blobs(15, 2.5, 14);
        let mut plan = ExperimentPlan::new(
            Method::Map { p: NormExponent::P2, kind: MapKind::TwoSets },
            5,
        );
        plan.anchors = AnchorChoice::Strategy(AnchorStrategy::ClassMeans);
        plan.grids.c = vec![1.0];
        plan.mode = EvalMode::HoldOut(0.7);
        let result = run_benchmark(&data, "toy", &plan).unwrap();
        assert_eq!(result.feature_dim, 4);
    }
}
