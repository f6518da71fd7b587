//! Explicit feature maps that append p-norm distances to anchor points while
//! keeping the original features intact.
//!
//! Four families are supported on top of the identity map: a single appended
//! distance (d+1 dimensions), one appended distance per coordinate (2d), one
//! distance per anchor set for two sets (d+2) or M sets (d+M). Sets with
//! several anchors resolve per sample to the nearest member.

use std::path::Path;

use rayon::prelude::*;

use crate::data::{p_distance_unchecked, Dataset, Matrix, NormExponent, Vector};
use crate::error::{Error, Result};

/// Non-empty collection of anchor points sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    anchors: Matrix,
}

impl AnchorSet {
    pub fn new(anchors: Matrix) -> Self {
        Self { anchors }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Ok(Self::new(Matrix::from_rows(rows)?))
    }

    pub fn singleton(anchor: Vec<f64>) -> Result<Self> {
        Self::from_rows(vec![anchor])
    }

    pub fn dim(&self) -> usize {
        self.anchors.cols()
    }

    pub fn len(&self) -> usize {
        self.anchors.rows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn anchors(&self) -> &Matrix {
        &self.anchors
    }

    /// Distance from `x` to the nearest member of the set.
    pub fn nearest_distance(&self, x: &[f64], p: NormExponent) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: x.len(),
                right: self.dim(),
            });
        }
        Ok(self
            .anchors
            .iter_rows()
            .map(|a| p_distance_unchecked(x, a, p))
            .fold(f64::INFINITY, f64::min))
    }

    /// Reads one anchor per line from a headerless CSV file.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let wrap = |e: std::io::Error| Error::Io {
            path: path.display().to_string(),
            source: e,
        };
        let file = std::fs::File::open(path).map_err(wrap)?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(file);
        let mut rows = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Parse {
                line: line + 1,
                message: e.to_string(),
            })?;
            let row: Result<Vec<f64>> = record
                .iter()
                .map(|field| {
                    field.parse::<f64>().map_err(|_| Error::Parse {
                        line: line + 1,
                        message: format!("not a number: {field:?}"),
                    })
                })
                .collect();
            rows.push(row?);
        }
        if rows.is_empty() {
            return Err(Error::EmptyInput("anchor file has no rows"));
        }
        Self::from_rows(rows)
    }

    /// Writes one anchor per line as a headerless CSV file.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let wrap = |e: std::io::Error| Error::Io {
            path: path.display().to_string(),
            source: e,
        };
        let file = std::fs::File::create(path).map_err(wrap)?;
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(file);
        for anchor in self.anchors.iter_rows() {
            let record: Vec<String> = anchor.iter().map(|v| format!("{v:.17e}")).collect();
            writer
                .write_record(&record)
                .map_err(|e| Error::Io {
                    path: path.display().to_string(),
                    source: std::io::Error::other(e),
                })?;
        }
        writer.flush().map_err(wrap)
    }
}

/// Which distances get appended to the raw features.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMapSpec {
    /// No appended features.
    Identity,
    /// One appended entry: distance to the nearest anchor of the set.
    SingleDistance { p: NormExponent, anchors: AnchorSet },
    /// d appended entries: per-coordinate distance to one fixed anchor.
    Coordinatewise { p: NormExponent, anchor: Vector },
    /// Two appended entries, one nearest-member distance per set.
    TwoAnchor {
        p: NormExponent,
        first: AnchorSet,
        second: AnchorSet,
    },
    /// M appended entries, one nearest-member distance per set. Needs M >= 2.
    MultiAnchor {
        p: NormExponent,
        sets: Vec<AnchorSet>,
    },
}

impl FeatureMapSpec {
    /// Input dimension the map was built for; `None` for Identity.
    pub fn input_dim(&self) -> Option<usize> {
        match self {
            FeatureMapSpec::Identity => None,
            FeatureMapSpec::SingleDistance { anchors, .. } => Some(anchors.dim()),
            FeatureMapSpec::Coordinatewise { anchor, .. } => Some(anchor.len()),
            FeatureMapSpec::TwoAnchor { first, .. } => Some(first.dim()),
            FeatureMapSpec::MultiAnchor { sets, .. } => Some(sets[0].dim()),
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        let check = |set_dim: usize| {
            if set_dim != d {
                Err(Error::DimensionMismatch {
                    left: set_dim,
                    right: d,
                })
            } else {
                Ok(())
            }
        };
        match self {
            FeatureMapSpec::Identity => Ok(()),
            FeatureMapSpec::SingleDistance { anchors, .. } => check(anchors.dim()),
            FeatureMapSpec::Coordinatewise { anchor, .. } => check(anchor.len()),
            FeatureMapSpec::TwoAnchor { first, second, .. } => {
                check(first.dim())?;
                check(second.dim())
            }
            FeatureMapSpec::MultiAnchor { sets, .. } => {
                if sets.len() < 2 {
                    return Err(Error::InvalidParameter(format!(
                        "multi-anchor map needs at least 2 anchor sets, got {}",
                        sets.len()
                    )));
                }
                for set in sets {
                    check(set.dim())?;
                }
                Ok(())
            }
        }
    }

    pub fn norm_exponent(&self) -> Option<NormExponent> {
        match self {
            FeatureMapSpec::Identity => None,
            FeatureMapSpec::SingleDistance { p, .. }
            | FeatureMapSpec::Coordinatewise { p, .. }
            | FeatureMapSpec::TwoAnchor { p, .. }
            | FeatureMapSpec::MultiAnchor { p, .. } => Some(*p),
        }
    }
}

/// Dimension of the mapped feature vectors for input dimension `d`.
pub fn output_dim(spec: &FeatureMapSpec, d: usize) -> usize {
    match spec {
        FeatureMapSpec::Identity => d,
        FeatureMapSpec::SingleDistance { .. } => d + 1,
        FeatureMapSpec::Coordinatewise { .. } => 2 * d,
        FeatureMapSpec::TwoAnchor { .. } => d + 2,
        FeatureMapSpec::MultiAnchor { sets, .. } => d + sets.len(),
    }
}

fn map_into(spec: &FeatureMapSpec, x: &[f64], out: &mut Vec<f64>) {
    out.extend_from_slice(x);
    match spec {
        FeatureMapSpec::Identity => {}
        FeatureMapSpec::SingleDistance { p, anchors } => {
            out.push(anchors.nearest_distance(x, *p).expect("validated dims"));
        }
        FeatureMapSpec::Coordinatewise { p, anchor } => {
            for (xi, ai) in x.iter().zip(anchor.as_slice()) {
                let delta = (xi - ai).abs();
                out.push(match p {
                    NormExponent::P1 | NormExponent::PInf => delta,
                    NormExponent::P2 => delta * delta,
                });
            }
        }
        FeatureMapSpec::TwoAnchor { p, first, second } => {
            out.push(first.nearest_distance(x, *p).expect("validated dims"));
            out.push(second.nearest_distance(x, *p).expect("validated dims"));
        }
        FeatureMapSpec::MultiAnchor { p, sets } => {
            for set in sets {
                out.push(set.nearest_distance(x, *p).expect("validated dims"));
            }
        }
    }
}

/// Maps one sample. The first d output entries are `x` itself.
pub fn map_sample(spec: &FeatureMapSpec, x: &Vector) -> Result<Vector> {
    spec.validate(x.len())?;
    let mut out = Vec::with_capacity(output_dim(spec, x.len()));
    map_into(spec, x.as_slice(), &mut out);
    Vector::new(out)
}

/// Maps every row of a dataset, keeping labels and row order.
pub fn map_dataset(spec: &FeatureMapSpec, data: &Dataset) -> Result<Dataset> {
    let d = data.dim();
    spec.validate(d)?;
    let out_dim = output_dim(spec, d);
    let rows: Vec<&[f64]> = data.features.iter_rows().collect();
    let mapped: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|x| {
            let mut out = Vec::with_capacity(out_dim);
            map_into(spec, x, &mut out);
            out
        })
        .collect();
    let features = Matrix::from_rows(mapped)?;
    Dataset::new(features, data.labels.clone())
}
