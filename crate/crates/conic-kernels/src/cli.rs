//! Command-line interface: `bench`, `separability`, `approx-compare`, and
//! `map` subcommands over libsvm/CSV datasets.
//!
//! Exit codes: 0 success, 1 negative analytical result (a dataset found
//! non-separable), 2 usage or data error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::anchors::AnchorStrategy;
use crate::data::{Dataset, NormExponent, Vector};
use crate::error::{Error, Result};
use crate::eval::{
    build_map_spec, resolve_anchor_sets, run_benchmark, run_benchmark_split, AnchorChoice,
    BenchmarkResult, EvalMode, ExperimentPlan, Grids, MapKind, Method,
};
use crate::feature_map::{map_dataset, AnchorSet, FeatureMapSpec};
use crate::io::{load_csv, load_libsvm, render_markdown_table, write_libsvm, write_report};
use crate::separability::{check_coordinatewise, check_multi_anchor, SeparabilityReport};

const DEFAULT_SEED: u64 = 42;
const SEED_ENV: &str = "CONIC_KERNELS_SEED";

#[derive(Parser)]
#[command(
    name = "conic-kernels",
    version,
    about = "Distance-based feature maps, conic kernels, and SVM benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run (dataset x method) benchmark cells and write a CSV/markdown report
    Bench(BenchArgs),
    /// Check the distance-separability conditions and print the witness
    Separability(SeparabilityArgs),
    /// Sweep approximation dimensions against exact and mapped baselines
    ApproxCompare(ApproxArgs),
    /// Write a mapped dataset as libsvm text
    Map(MapArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DataFormat {
    Libsvm,
    Csv,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset path(s), comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    data: Vec<PathBuf>,

    /// Input format
    #[arg(long, value_enum, default_value = "libsvm")]
    format: DataFormat,

    /// Label column name (CSV input only)
    #[arg(long, default_value = "label")]
    label_column: String,

    /// Explicit feature dimension (libsvm input whose trailing features are
    /// all zero)
    #[arg(long)]
    dim: Option<usize>,
}

impl DataArgs {
    fn load_one(&self, path: &Path) -> Result<Dataset> {
        match self.format {
            DataFormat::Libsvm => load_libsvm(path, self.dim),
            DataFormat::Csv => load_csv(path, &self.label_column),
        }
    }

    fn load_all(&self) -> Result<Vec<(String, Dataset)>> {
        self.data
            .iter()
            .map(|path| Ok((dataset_name(path), self.load_one(path)?)))
            .collect()
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,

    /// Method tokens, comma separated: lin, pol, rbf, rff[:D], nystrom[:D],
    /// phi_<p>_<kind> with p in {1,2,inf} and kind in {1,d,2,m}
    #[arg(long, value_delimiter = ',', required = true)]
    methods: Vec<String>,

    /// Held-out test file scored instead of outer cross validation
    /// (requires exactly one --data path)
    #[arg(long)]
    test: Option<PathBuf>,

    /// Outer cross-validation folds
    #[arg(long, conflicts_with_all = ["holdout", "test"])]
    folds: Option<usize>,

    /// Stratified holdout train fraction instead of k-fold
    #[arg(long, conflicts_with = "test")]
    holdout: Option<f64>,

    #[command(flatten)]
    anchors: AnchorArgs,

    /// Override for the C grid, comma separated
    #[arg(long = "grid-C", value_delimiter = ',')]
    grid_c: Option<Vec<f64>>,

    /// Override for the gamma grid, comma separated
    #[arg(long = "grid-gamma", value_delimiter = ',')]
    grid_gamma: Option<Vec<f64>>,

    /// Override for the polynomial degree grid, comma separated
    #[arg(long = "grid-q", value_delimiter = ',')]
    grid_q: Option<Vec<u32>>,

    #[command(flatten)]
    run: RunArgs,

    /// Report CSV path
    #[arg(long, default_value = "bench_report.csv")]
    out: PathBuf,

    /// Also write the accuracy table as markdown
    #[arg(long)]
    markdown: Option<PathBuf>,
}

#[derive(Args)]
struct AnchorArgs {
    /// Anchor source for conic methods: mean, class-means, kmeans:<k>,
    /// filtered:<q>, or file:<csv path> (one anchor per row). Defaults to
    /// the zero vector of the standardized space.
    #[arg(long)]
    anchors: Option<String>,

    /// Norm exponent used by anchor filtering and the separability/map
    /// subcommands
    #[arg(long, default_value = "2")]
    p: String,
}

impl AnchorArgs {
    fn norm(&self) -> Result<NormExponent> {
        NormExponent::parse(&self.p)
    }

    fn choice(&self, seed: u64) -> Result<AnchorChoice> {
        let Some(token) = &self.anchors else {
            return Ok(AnchorChoice::ScaledZero);
        };
        let bad = || {
            Error::InvalidParameter(format!(
                "unknown anchor source {token:?} (expected mean, class-means, \
                 kmeans:<k>, filtered:<q>, or file:<path>)"
            ))
        };
        match token.as_str() {
            "mean" => return Ok(AnchorChoice::Strategy(AnchorStrategy::GlobalMean)),
            "class-means" => return Ok(AnchorChoice::Strategy(AnchorStrategy::ClassMeans)),
            _ => {}
        }
        if let Some(k) = token.strip_prefix("kmeans:") {
            let k: usize = k.parse().map_err(|_| bad())?;
            return Ok(AnchorChoice::Strategy(AnchorStrategy::ClassKMeans {
                k,
                seed,
                max_iter: 100,
            }));
        }
        if let Some(q) = token.strip_prefix("filtered:") {
            let quantile: f64 = q.parse().map_err(|_| bad())?;
            return Ok(AnchorChoice::Strategy(AnchorStrategy::FilteredSamples {
                quantile,
                p: self.norm()?,
            }));
        }
        if let Some(path) = token.strip_prefix("file:") {
            let set = AnchorSet::read_csv(Path::new(path))?;
            let sets = set
                .anchors()
                .iter_rows()
                .map(|row| AnchorSet::singleton(row.to_vec()))
                .collect::<Result<Vec<_>>>()?;
            return Ok(AnchorChoice::Sets(sets));
        }
        Err(bad())
    }
}

#[derive(Args)]
struct RunArgs {
    /// Random seed (CONIC_KERNELS_SEED overrides the default)
    #[arg(long)]
    seed: Option<u64>,

    /// Run every cell, fold, and grid point serially (timing-grade runs)
    #[arg(long)]
    sequential: bool,

    /// Worker threads (default: all available cores)
    #[arg(long)]
    workers: Option<usize>,

    /// Print per-cell detail
    #[arg(long)]
    verbose: bool,
}

impl RunArgs {
    fn seed(&self) -> u64 {
        if let Some(seed) = self.seed {
            return seed;
        }
        std::env::var(SEED_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(DEFAULT_SEED)
    }

    fn configure_pool(&self) {
        let threads = if self.sequential {
            1
        } else {
            match self.workers {
                Some(w) if w >= 1 => w,
                _ => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            }
        };
        // Ignore the error from configuring twice (tests call run() repeatedly).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

#[derive(Args)]
struct SeparabilityArgs {
    #[command(flatten)]
    data: DataArgs,

    #[command(flatten)]
    anchors: AnchorArgs,

    /// Which map family to certify: 1 (nearest-anchor distance),
    /// d (per-coordinate distances), m (one distance per anchor set)
    #[arg(long = "map", default_value = "1")]
    map_kind: String,

    /// Standardize features before the check
    #[arg(long)]
    scale: bool,

    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct ApproxArgs {
    #[command(flatten)]
    data: DataArgs,

    /// Transformed dimensions to sweep, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 8, 16, 64, 256, 1024])]
    dims: Vec<usize>,

    /// Fixed soft-margin parameter
    #[arg(long = "c", default_value_t = 1.0)]
    c: f64,

    /// Fixed kernel width
    #[arg(long, default_value_t = 0.2)]
    gamma: f64,

    /// Stratified holdout train fraction
    #[arg(long, default_value_t = 0.7)]
    holdout: f64,

    /// Output CSV path
    #[arg(long, default_value = "approx_compare.csv")]
    out: PathBuf,

    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct MapArgs {
    #[command(flatten)]
    data: DataArgs,

    #[command(flatten)]
    anchors: AnchorArgs,

    /// Which map to apply: identity, 1, d, 2, or m
    #[arg(long = "map", default_value = "1")]
    map_kind: String,

    /// Standardize features (statistics from this file) before mapping
    #[arg(long)]
    scale: bool,

    /// Output libsvm path
    #[arg(long, required = true)]
    out: PathBuf,

    #[command(flatten)]
    run: RunArgs,
}

/// Parses arguments from the process environment and runs one subcommand.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.exit_code() == 0 { 0 } else { 2 };
        }
    };
    let outcome = match cli.command {
        Command::Bench(args) => cmd_bench(args),
        Command::Separability(args) => cmd_separability(args),
        Command::ApproxCompare(args) => cmd_approx_compare(args),
        Command::Map(args) => cmd_map(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn invocation_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn config_comments(seed: u64, extra: Vec<String>) -> Vec<String> {
    let mut lines = vec![
        format!("conic-kernels v{}", env!("CARGO_PKG_VERSION")),
        format!("command: {}", invocation_line()),
        format!("seed: {seed}"),
    ];
    lines.extend(extra);
    lines
}

fn parse_map_kind(token: &str) -> Result<Option<MapKind>> {
    match token {
        "identity" => Ok(None),
        "1" => Ok(Some(MapKind::Single)),
        "d" => Ok(Some(MapKind::Coordinatewise)),
        "2" => Ok(Some(MapKind::TwoSets)),
        "m" => Ok(Some(MapKind::MultiSets)),
        _ => Err(Error::InvalidParameter(format!(
            "unknown map kind {token:?} (expected identity, 1, d, 2, or m)"
        ))),
    }
}

fn cmd_bench(args: BenchArgs) -> Result<i32> {
    let seed = args.run.seed();
    args.run.configure_pool();

    // All usage validation happens before any dataset work.
    let methods = args
        .methods
        .iter()
        .map(|token| Method::parse(token))
        .collect::<Result<Vec<Method>>>()?;
    let anchors = args.anchors.choice(seed)?;
    let mode = match (args.folds, args.holdout) {
        (Some(k), None) => EvalMode::KFold(k),
        (None, Some(f)) => EvalMode::HoldOut(f),
        (None, None) => EvalMode::KFold(10),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    };
    let mut grids = Grids::default();
    if let Some(c) = args.grid_c {
        grids.c = c;
    }
    if let Some(gamma) = args.grid_gamma {
        grids.gamma = gamma;
    }
    if let Some(q) = args.grid_q {
        grids.q = q;
    }
    if args.test.is_some() && args.data.data.len() != 1 {
        return Err(Error::InvalidParameter(
            "--test requires exactly one --data path".into(),
        ));
    }

    let datasets = args.data.load_all()?;
    let test = match &args.test {
        Some(path) => {
            let (train_dim, test_set) = (datasets[0].1.dim(), args.data.load_one(path)?);
            // Re-read with an explicit dimension when sparse trailing zeros
            // make the two files disagree.
            let test_set = if test_set.dim() < train_dim && args.data.format == DataFormat::Libsvm
            {
                load_libsvm(path, Some(train_dim))?
            } else {
                test_set
            };
            Some(test_set)
        }
        None => None,
    };

    let mut results: Vec<BenchmarkResult> = Vec::new();
    let mut failures = 0usize;
    for (name, dataset) in &datasets {
        for method in &methods {
            let mut plan = ExperimentPlan::new(*method, seed);
            plan.grids = grids.clone();
            plan.mode = mode;
            plan.anchors = anchors.clone();
            plan.sequential = args.run.sequential;
            let outcome = match &test {
                Some(test_set) => run_benchmark_split(dataset, test_set, name, &plan),
                None => run_benchmark(dataset, name, &plan),
            };
            match outcome {
                Ok(result) => {
                    if args.run.verbose {
                        println!(
                            "{name} {}: accuracy {:.2}, train {:.4}s, grid {:.4}s, C={}{}{}",
                            result.method,
                            result.accuracy,
                            result.train_seconds,
                            result.grid_seconds,
                            result.chosen.c,
                            result
                                .chosen
                                .gamma
                                .map(|g| format!(", gamma={g}"))
                                .unwrap_or_default(),
                            result
                                .chosen
                                .q
                                .map(|q| format!(", q={q}"))
                                .unwrap_or_default(),
                        );
                    }
                    if !result.converged {
                        eprintln!(
                            "warning: {name} {} hit its iteration budget before \
                             reaching tolerance",
                            result.method
                        );
                    }
                    results.push(result);
                }
                Err(e) => {
                    failures += 1;
                    eprintln!("error: cell {name} x {} failed: {e}", method.name());
                }
            }
        }
    }

    let comments = config_comments(
        seed,
        vec![
            format!(
                "mode: {}",
                match mode {
                    EvalMode::KFold(k) => format!("{k}-fold cross validation"),
                    EvalMode::HoldOut(f) => format!("holdout train fraction {f}"),
                }
            ),
            format!("grid C: {:?}", grids.c),
            format!("grid gamma: {:?}", grids.gamma),
            format!("grid q: {:?}", grids.q),
        ],
    );
    write_report(&results, &args.out, args.markdown.as_deref(), &comments)?;
    print!("{}", render_markdown_table(&results, &[]));
    println!("report written to {}", args.out.display());
    Ok(if failures == 0 { 0 } else { 2 })
}

fn scale_in_place(data: &Dataset) -> Result<Dataset> {
    let scaler = crate::eval::fit_scaler(data);
    crate::eval::apply_scaler(&scaler, data)
}

fn cmd_separability(args: SeparabilityArgs) -> Result<i32> {
    let seed = args.run.seed();
    args.run.configure_pool();
    let p = args.anchors.norm()?;
    let kind = parse_map_kind(&args.map_kind)?.ok_or_else(|| {
        Error::InvalidParameter("the identity map has no separability condition".into())
    })?;
    let choice = args.anchors.choice(seed)?;

    if args.data.data.len() != 1 {
        return Err(Error::InvalidParameter(
            "separability takes exactly one --data path".into(),
        ));
    }
    let dataset = args.data.load_one(&args.data.data[0])?;
    let dataset = if args.scale { scale_in_place(&dataset)? } else { dataset };

    let sets = resolve_anchor_sets(&choice, &dataset)?;
    let reports: Vec<(String, SeparabilityReport)> = match kind {
        MapKind::Coordinatewise => {
            if sets.len() != 1 || sets[0].len() != 1 {
                return Err(Error::InvalidParameter(
                    "the coordinatewise condition takes exactly one anchor".into(),
                ));
            }
            let anchor = Vector::new(sets[0].anchors().row(0).to_vec())?;
            vec![(
                "per-coordinate distances".into(),
                check_coordinatewise(&dataset, &anchor, p)?,
            )]
        }
        MapKind::Single => {
            let merged = merge_sets(&sets)?;
            vec![(
                "nearest-anchor distance".into(),
                check_multi_anchor(&dataset, &merged, p)?,
            )]
        }
        MapKind::TwoSets | MapKind::MultiSets => sets
            .iter()
            .enumerate()
            .map(|(j, set)| {
                Ok((
                    format!("anchor set {j}"),
                    check_multi_anchor(&dataset, set, p)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?,
    };

    let mut any_separable = false;
    for (title, report) in &reports {
        println!("== {title} ==");
        print!("{}", report.render());
        any_separable |= report.separable;
    }
    Ok(if any_separable { 0 } else { 1 })
}

fn merge_sets(sets: &[AnchorSet]) -> Result<AnchorSet> {
    let mut rows = Vec::new();
    for set in sets {
        rows.extend(set.anchors().iter_rows().map(|r| r.to_vec()));
    }
    AnchorSet::from_rows(rows)
}

fn cmd_approx_compare(args: ApproxArgs) -> Result<i32> {
    let seed = args.run.seed();
    args.run.configure_pool();
    if args.data.data.len() != 1 {
        return Err(Error::InvalidParameter(
            "approx-compare takes exactly one --data path".into(),
        ));
    }
    let name = dataset_name(&args.data.data[0]);
    let dataset = args.data.load_one(&args.data.data[0])?;
    let (train_idx, _) = crate::eval::holdout_split(&dataset, args.holdout, seed)?;
    let train_rows = train_idx.len();

    let single_cell = |method: Method| {
        let mut plan = ExperimentPlan::new(method, seed);
        plan.mode = EvalMode::HoldOut(args.holdout);
        plan.sequential = args.run.sequential;
        plan.grids = Grids {
            c: vec![args.c],
            gamma: vec![args.gamma],
            q: vec![2],
        };
        plan
    };

    let mut methods: Vec<Method> = vec![
        Method::Linear,
        Method::Map { p: NormExponent::P2, kind: MapKind::Single },
        Method::Map { p: NormExponent::P1, kind: MapKind::Coordinatewise },
        Method::Rbf,
    ];
    for &dim in &args.dims {
        methods.push(Method::Fourier { dim });
    }
    for &dim in &args.dims {
        if dim > train_rows {
            eprintln!(
                "warning: skipping nystrom:{dim} ({dim} landmarks exceed the \
                 {train_rows} training rows)"
            );
            continue;
        }
        methods.push(Method::Nystrom { dim });
    }

    let mut rows = Vec::new();
    let mut failures = 0usize;
    for method in methods {
        match run_benchmark(&dataset, &name, &single_cell(method)) {
            Ok(result) => {
                if args.run.verbose {
                    println!(
                        "{}: dim {}, accuracy {:.2}, train {:.4}s",
                        result.method, result.feature_dim, result.accuracy, result.train_seconds
                    );
                }
                rows.push(format!(
                    "{},{},{:.4},{:.4}",
                    result.method, result.feature_dim, result.accuracy, result.train_seconds
                ));
            }
            Err(e) => {
                failures += 1;
                eprintln!("error: cell {} failed: {e}", method.name());
            }
        }
    }

    let mut out = String::new();
    for comment in config_comments(
        seed,
        vec![
            format!("C: {}", args.c),
            format!("gamma: {}", args.gamma),
            format!("holdout train fraction: {}", args.holdout),
        ],
    ) {
        out.push_str("# ");
        out.push_str(&comment);
        out.push('\n');
    }
    out.push_str("method,D,accuracy,train_seconds\n");
    for row in &rows {
        out.push_str(row);
        out.push('\n');
    }
    std::fs::write(&args.out, &out).map_err(|e| Error::Io {
        path: args.out.display().to_string(),
        source: e,
    })?;
    println!("sweep written to {}", args.out.display());
    Ok(if failures == 0 { 0 } else { 2 })
}

fn cmd_map(args: MapArgs) -> Result<i32> {
    let seed = args.run.seed();
    args.run.configure_pool();
    let p = args.anchors.norm()?;
    if args.data.data.len() != 1 {
        return Err(Error::InvalidParameter(
            "map takes exactly one --data path".into(),
        ));
    }
    let dataset = args.data.load_one(&args.data.data[0])?;
    let dataset = if args.scale { scale_in_place(&dataset)? } else { dataset };

    let spec = match parse_map_kind(&args.map_kind)? {
        None => FeatureMapSpec::Identity,
        Some(kind) => {
            let sets = resolve_anchor_sets(&args.anchors.choice(seed)?, &dataset)?;
            build_map_spec(p, kind, sets)?
        }
    };
    let mapped = map_dataset(&spec, &dataset)?;

    let comments = config_comments(
        seed,
        vec![
            format!("map: {}", args.map_kind),
            format!("p: {p}"),
            format!("scaled: {}", args.scale),
            format!("input dimension: {}", dataset.dim()),
            format!("output dimension: {}", mapped.dim()),
        ],
    );
    write_libsvm(&args.out, &mapped, &comments)?;
    println!(
        "mapped {} rows from dimension {} to {} -> {}",
        mapped.len(),
        dataset.dim(),
        mapped.dim(),
        args.out.display()
    );
    Ok(0)
}
