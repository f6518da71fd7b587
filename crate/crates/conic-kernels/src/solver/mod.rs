//! From-scratch SVM training: dual coordinate descent over explicit
//! features, SMO over kernels, primal weight recovery, prediction, and a
//! versioned flat-text model format.

mod linear;
mod smo;

pub use linear::{train_linear_svm, LinearFit};
pub use smo::{train_kernel_svm, KernelFit};

use crate::data::{dot, Labels, Matrix, NormExponent, Vector};
use crate::error::{Error, Result};
use crate::feature_map::{map_sample, output_dim, FeatureMapSpec};
use crate::kernel::{eval_kernel, KernelSpec};

/// Training hyperparameters shared by both solvers. `max_iter` counts
/// epochs for coordinate descent and pair updates for SMO; `None` picks the
/// solver default (10·m epochs, 100·m pair updates). The seed drives the
/// per-epoch coordinate permutation and is recorded in the fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmHyper {
    pub c: f64,
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub seed: u64,
}

impl SvmHyper {
    pub fn new(c: f64) -> Self {
        Self {
            c,
            tol: 1e-4,
            max_iter: None,
            seed: 0,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.c <= 0.0 || !self.c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "regularization C must be positive, got {}",
                self.c
            )));
        }
        if self.tol <= 0.0 || !self.tol.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == Some(0) {
            return Err(Error::InvalidParameter(
                "iteration budget must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Hyperplane over a (possibly mapped) feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                left: x.len(),
                right: self.weights.len(),
            });
        }
        Ok(dot(&self.weights, x) + self.bias)
    }
}

/// Kernel expansion over its support vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelModel {
    pub kernel: KernelSpec,
    pub dim: usize,
    /// Support rows of the training set, one per positive alpha.
    pub support_vectors: Vec<Vec<f64>>,
    pub support_labels: Vec<i32>,
    pub support_alphas: Vec<f64>,
    pub support_indices: Vec<usize>,
    pub bias: f64,
}

impl KernelModel {
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: x.len(),
                right: self.dim,
            });
        }
        let mut value = self.bias;
        for ((sv, &y), &alpha) in self
            .support_vectors
            .iter()
            .zip(&self.support_labels)
            .zip(&self.support_alphas)
        {
            value += alpha * f64::from(y) * eval_kernel(&self.kernel, sv, x)?;
        }
        Ok(value)
    }
}

fn labels_from_decisions(values: impl Iterator<Item = f64>) -> Result<Labels> {
    Labels::new(values.map(|v| if v >= 0.0 { 1 } else { -1 }).collect())
}

/// Predicts +1 where wᵀx + b ≥ 0 and −1 elsewhere.
pub fn predict_linear(model: &LinearModel, x: &Matrix) -> Result<Labels> {
    if x.cols() != model.weights.len() {
        return Err(Error::DimensionMismatch {
            left: x.cols(),
            right: model.weights.len(),
        });
    }
    labels_from_decisions(x.iter_rows().map(|row| dot(&model.weights, row) + model.bias))
}

/// Predicts +1 where the kernel expansion is ≥ 0 and −1 elsewhere.
pub fn predict_kernel(model: &KernelModel, x: &Matrix) -> Result<Labels> {
    let values: Result<Vec<f64>> = x.iter_rows().map(|row| model.decision_value(row)).collect();
    labels_from_decisions(values?.into_iter())
}

fn map_matches_kernel(kernel: &KernelSpec, map: &FeatureMapSpec) -> Result<()> {
    let describe = |k: &KernelSpec, m: &FeatureMapSpec| {
        Error::KernelMapMismatch(format!("kernel {k:?} does not induce map {m:?}"))
    };
    match (kernel, map) {
        (KernelSpec::Linear, FeatureMapSpec::Identity) => Ok(()),
        (
            KernelSpec::ConicSingle { p, anchor },
            FeatureMapSpec::SingleDistance { p: mp, anchors },
        ) if p == mp && anchors.len() == 1 && anchors.anchors().row(0) == anchor.as_slice() => {
            Ok(())
        }
        (
            KernelSpec::ConicCoordinatewise { p, anchor },
            FeatureMapSpec::Coordinatewise { p: mp, anchor: ma },
        ) if p == mp && ma == anchor => Ok(()),
        (KernelSpec::Rbf { .. }, _) => Err(Error::NoExplicitMap(
            "the RBF kernel has no finite explicit map".into(),
        )),
        (KernelSpec::Poly { .. }, _) => Err(Error::NoExplicitMap(
            "primal recovery for the polynomial kernel is not supported".into(),
        )),
        (k, m) => Err(describe(k, m)),
    }
}

/// Rebuilds the primal hyperplane w = Σ α_i y_i φ(x_i) of a kernel model
/// whose kernel is the inner product of an explicit map.
pub fn recover_primal_weights(model: &KernelModel, map: &FeatureMapSpec) -> Result<LinearModel> {
    map_matches_kernel(&model.kernel, map)?;
    let mut weights = vec![0.0; output_dim(map, model.dim)];
    for ((sv, &y), &alpha) in model
        .support_vectors
        .iter()
        .zip(&model.support_labels)
        .zip(&model.support_alphas)
    {
        let mapped = map_sample(map, &Vector::new(sv.clone())?)?;
        let coef = alpha * f64::from(y);
        for (w, &f) in weights.iter_mut().zip(mapped.as_slice()) {
            *w += coef * f;
        }
    }
    Ok(LinearModel {
        weights,
        bias: model.bias,
    })
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn norm_token(p: NormExponent) -> &'static str {
    match p {
        NormExponent::P1 => "1",
        NormExponent::P2 => "2",
        NormExponent::PInf => "inf",
    }
}

fn kernel_header(spec: &KernelSpec) -> String {
    match spec {
        KernelSpec::Linear => "linear".to_string(),
        KernelSpec::Rbf { gamma } => format!("rbf {}", fmt17(*gamma)),
        KernelSpec::Poly { degree } => format!("poly {degree}"),
        KernelSpec::ConicSingle { p, anchor } => format!(
            "conic-single {} {}",
            norm_token(*p),
            anchor
                .as_slice()
                .iter()
                .map(|v| fmt17(*v))
                .collect::<Vec<_>>()
                .join(",")
        ),
        KernelSpec::ConicCoordinatewise { p, anchor } => format!(
            "conic-coordinatewise {} {}",
            norm_token(*p),
            anchor
                .as_slice()
                .iter()
                .map(|v| fmt17(*v))
                .collect::<Vec<_>>()
                .join(",")
        ),
    }
}

fn parse_kernel_header(line: &str, lineno: usize) -> Result<KernelSpec> {
    let err = |message: String| Error::Parse {
        line: lineno,
        message,
    };
    let mut parts = line.split_whitespace();
    let kind = parts.next().ok_or_else(|| err("missing kernel kind".into()))?;
    let parse_anchor = |token: &str| -> Result<Vector> {
        let values: std::result::Result<Vec<f64>, _> =
            token.split(',').map(|t| t.parse::<f64>()).collect();
        Vector::new(values.map_err(|e| err(format!("bad anchor: {e}")))?)
    };
    match kind {
        "linear" => Ok(KernelSpec::Linear),
        "rbf" => {
            let gamma = parts
                .next()
                .ok_or_else(|| err("missing bandwidth".into()))?
                .parse::<f64>()
                .map_err(|e| err(e.to_string()))?;
            Ok(KernelSpec::Rbf { gamma })
        }
        "poly" => {
            let degree = parts
                .next()
                .ok_or_else(|| err("missing degree".into()))?
                .parse::<u32>()
                .map_err(|e| err(e.to_string()))?;
            Ok(KernelSpec::Poly { degree })
        }
        "conic-single" | "conic-coordinatewise" => {
            let p = NormExponent::parse(parts.next().ok_or_else(|| err("missing norm".into()))?)?;
            let anchor = parse_anchor(parts.next().ok_or_else(|| err("missing anchor".into()))?)?;
            if kind == "conic-single" {
                Ok(KernelSpec::ConicSingle { p, anchor })
            } else {
                Ok(KernelSpec::ConicCoordinatewise { p, anchor })
            }
        }
        other => Err(err(format!("unknown kernel kind {other:?}"))),
    }
}

impl LinearModel {
    /// Versioned flat text: header, bias, then one weight per line with 17
    /// significant digits.
    pub fn to_text(&self) -> String {
        let mut out = format!("linear-model v1 dim={}\n", self.weights.len());
        out.push_str(&format!("bias {}\n", fmt17(self.bias)));
        for w in &self.weights {
            out.push_str(&fmt17(*w));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let err = |line: usize, message: String| Error::Parse { line: line + 1, message };
        let (i, header) = lines
            .next()
            .ok_or_else(|| err(0, "empty model text".into()))?;
        let dim: usize = header
            .strip_prefix("linear-model v1 dim=")
            .ok_or_else(|| err(i, "bad header".into()))?
            .parse()
            .map_err(|e| err(i, format!("{e}")))?;
        let (i, bias_line) = lines.next().ok_or_else(|| err(1, "missing bias".into()))?;
        let bias: f64 = bias_line
            .strip_prefix("bias ")
            .ok_or_else(|| err(i, "bad bias line".into()))?
            .parse()
            .map_err(|e| err(i, format!("{e}")))?;
        let mut weights = Vec::with_capacity(dim);
        for (i, line) in lines {
            weights.push(line.parse::<f64>().map_err(|e| err(i, format!("{e}")))?);
        }
        if weights.len() != dim {
            return Err(Error::Parse {
                line: 0,
                message: format!("expected {dim} weights, found {}", weights.len()),
            });
        }
        Ok(Self { weights, bias })
    }
}

impl KernelModel {
    /// Versioned flat text: header lines, then one support vector per line
    /// as `alpha label x1,x2,...` with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = format!("kernel-model v1 dim={} nsv={}\n", self.dim, self.support_alphas.len());
        out.push_str(&format!("kernel {}\n", kernel_header(&self.kernel)));
        out.push_str(&format!("bias {}\n", fmt17(self.bias)));
        for ((sv, &y), (&alpha, &idx)) in self
            .support_vectors
            .iter()
            .zip(&self.support_labels)
            .zip(self.support_alphas.iter().zip(&self.support_indices))
        {
            let coords: Vec<String> = sv.iter().map(|v| fmt17(*v)).collect();
            out.push_str(&format!("{} {} {} {}\n", fmt17(alpha), y, idx, coords.join(",")));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse { line, message };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| err(1, "empty model text".into()))?;
        let rest = header
            .strip_prefix("kernel-model v1 dim=")
            .ok_or_else(|| err(1, "bad header".into()))?;
        let (dim_str, nsv_str) = rest
            .split_once(" nsv=")
            .ok_or_else(|| err(1, "bad header".into()))?;
        let dim: usize = dim_str.parse().map_err(|e| err(1, format!("{e}")))?;
        let nsv: usize = nsv_str.parse().map_err(|e| err(1, format!("{e}")))?;
        let kernel_line = lines.next().ok_or_else(|| err(2, "missing kernel line".into()))?;
        let kernel = parse_kernel_header(
            kernel_line
                .strip_prefix("kernel ")
                .ok_or_else(|| err(2, "bad kernel line".into()))?,
            2,
        )?;
        let bias_line = lines.next().ok_or_else(|| err(3, "missing bias".into()))?;
        let bias: f64 = bias_line
            .strip_prefix("bias ")
            .ok_or_else(|| err(3, "bad bias line".into()))?
            .parse()
            .map_err(|e| err(3, format!("{e}")))?;
        let mut support_vectors = Vec::with_capacity(nsv);
        let mut support_labels = Vec::with_capacity(nsv);
        let mut support_alphas = Vec::with_capacity(nsv);
        let mut support_indices = Vec::with_capacity(nsv);
        for (offset, line) in lines.enumerate() {
            let lineno = offset + 4;
            let mut parts = line.split_whitespace();
            let alpha: f64 = parts
                .next()
                .ok_or_else(|| err(lineno, "missing alpha".into()))?
                .parse()
                .map_err(|e| err(lineno, format!("{e}")))?;
            let label: i32 = parts
                .next()
                .ok_or_else(|| err(lineno, "missing label".into()))?
                .parse()
                .map_err(|e| err(lineno, format!("{e}")))?;
            let index: usize = parts
                .next()
                .ok_or_else(|| err(lineno, "missing index".into()))?
                .parse()
                .map_err(|e| err(lineno, format!("{e}")))?;
            let coords: std::result::Result<Vec<f64>, _> = parts
                .next()
                .ok_or_else(|| err(lineno, "missing coordinates".into()))?
                .split(',')
                .map(|t| t.parse::<f64>())
                .collect();
            support_vectors.push(coords.map_err(|e| err(lineno, format!("{e}")))?);
            support_labels.push(label);
            support_alphas.push(alpha);
            support_indices.push(index);
        }
        if support_alphas.len() != nsv {
            return Err(err(
                0,
                format!("expected {nsv} support vectors, found {}", support_alphas.len()),
            ));
        }
        Ok(Self {
            kernel,
            dim,
            support_vectors,
            support_labels,
            support_alphas,
            support_indices,
            bias,
        })
    }
}
