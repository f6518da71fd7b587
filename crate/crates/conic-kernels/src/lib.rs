//! Low-dimensional distance-based feature maps, their induced kernels,
//! from-scratch SVM solvers, separability certificates, kernel approximation
//! baselines, and a benchmark harness.

pub mod anchors;
pub mod approx;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod feature_map;
pub mod io;
pub mod kernel;
pub mod separability;
pub mod solver;

pub use approx::{
    fit_fourier, fit_nystrom, mean_abs_gram_error, transform_fourier, transform_nystrom,
    ApproxMethod, ApproxSpec, FourierState, NystromState,
};
pub use data::{nearest_anchor, p_distance, Dataset, Labels, Matrix, NormExponent, Vector};
pub use error::{Error, Result};
pub use eval::{
    apply_scaler, fit_fold, fit_scaler, grid_search, holdout_split, run_benchmark,
    run_benchmark_split, score_fold, stratified_kfold, AnchorChoice, BenchmarkResult, ChosenHyper,
    EvalMode, ExperimentPlan, FittedFold, Grids, MapKind, Method, ScalerState,
};
pub use feature_map::{map_dataset, map_sample, output_dim, AnchorSet, FeatureMapSpec};
pub use io::{load_csv, load_libsvm, render_markdown_table, write_libsvm, write_report};
pub use kernel::{eval_kernel, gram_matrix, KernelSpec};
pub use separability::{
    check_coordinatewise, check_multi_anchor, check_single_anchor, FiredCondition,
    SeparabilityReport,
};
pub use solver::{
    predict_kernel, predict_linear, recover_primal_weights, train_kernel_svm, train_linear_svm,
    KernelFit, KernelModel, LinearFit, LinearModel, SvmHyper,
};
