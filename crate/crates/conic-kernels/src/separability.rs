//! Linear-separability certificates for distance-mapped data.
//!
//! Each check compares class-wise extrema of a distance quantity: with
//! μ the smallest value on one side and ν the largest on the other, a
//! strict ordering μ > ν certifies separability in the mapped space, and
//! the witness hyperplane puts unit weight on the distance feature with the
//! threshold at the midpoint (μ+ν)/2. Comparisons are exact; the report
//! carries the gap μ−ν so callers can apply their own tolerance.

use crate::data::{p_distance_unchecked, Dataset, NormExponent, Vector};
use crate::error::{Error, Result};
use crate::feature_map::AnchorSet;
use crate::solver::LinearModel;

/// Which strict ordering certified separability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiredCondition {
    /// Positive-class distances all exceed negative-class distances.
    PlusAbove,
    /// Positive-class distances all fall below negative-class distances.
    PlusBelow,
    None,
}

impl std::fmt::Display for FiredCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FiredCondition::PlusAbove => write!(f, "plus-above"),
            FiredCondition::PlusBelow => write!(f, "plus-below"),
            FiredCondition::None => write!(f, "none"),
        }
    }
}

/// Outcome of a separability check, with the witness hyperplane over the
/// mapped feature space when one exists.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparabilityReport {
    pub separable: bool,
    pub fired_condition: FiredCondition,
    /// Smallest distance on the far side (min over the class the condition
    /// puts above). For a non-separable report, the extrema of the closer
    /// of the two orderings.
    pub mu: f64,
    /// Largest distance on the near side.
    pub nu: f64,
    /// Zero-based feature index, set by the coordinatewise check.
    pub dimension: Option<usize>,
    pub witness: Option<LinearModel>,
}

impl SeparabilityReport {
    pub fn gap(&self) -> f64 {
        self.mu - self.nu
    }

    /// Half the gap: the witness's guaranteed margin over the mapped
    /// training samples.
    pub fn margin(&self) -> f64 {
        0.5 * (self.mu - self.nu)
    }

    /// Flat key-value block for terminal display.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("separable: {}\n", self.separable));
        out.push_str(&format!("condition: {}\n", self.fired_condition));
        out.push_str(&format!("mu: {}\n", self.mu));
        out.push_str(&format!("nu: {}\n", self.nu));
        out.push_str(&format!("gap: {}\n", self.gap()));
        if let Some(dim) = self.dimension {
            out.push_str(&format!("feature-index: {dim}\n"));
        }
        if let Some(witness) = &self.witness {
            out.push_str(&format!("witness-bias: {}\n", witness.bias));
            let weights: Vec<String> = witness.weights.iter().map(|w| w.to_string()).collect();
            out.push_str(&format!("witness-weights: {}\n", weights.join(",")));
        }
        out
    }
}

struct Extrema {
    min_pos: f64,
    max_pos: f64,
    min_neg: f64,
    max_neg: f64,
}

fn extrema(distances: &[f64], labels: &[i32]) -> Extrema {
    let mut e = Extrema {
        min_pos: f64::INFINITY,
        max_pos: f64::NEG_INFINITY,
        min_neg: f64::INFINITY,
        max_neg: f64::NEG_INFINITY,
    };
    for (&dist, &label) in distances.iter().zip(labels) {
        if label > 0 {
            e.min_pos = e.min_pos.min(dist);
            e.max_pos = e.max_pos.max(dist);
        } else {
            e.min_neg = e.min_neg.min(dist);
            e.max_neg = e.max_neg.max(dist);
        }
    }
    e
}

/// Confirms the witness classifies every sample strictly; only ulp-scale
/// gaps can fail here, and they surface as an error rather than a bogus
/// certificate.
fn verify_witness(
    distances: &[f64],
    labels: &[i32],
    sign: f64,
    bias: f64,
) -> Result<()> {
    for (&dist, &label) in distances.iter().zip(labels) {
        let value = sign * dist + bias;
        let ok = if label > 0 { value > 0.0 } else { value < 0.0 };
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "witness verification failed: distance gap too small for \
                 floating point (value {value} for label {label})"
            )));
        }
    }
    Ok(())
}

fn build_report(
    distances: &[f64],
    labels: &[i32],
    out_dim: usize,
    weight_index: usize,
    dimension: Option<usize>,
) -> Result<Option<SeparabilityReport>> {
    let e = extrema(distances, labels);
    let gap_above = e.min_pos - e.max_neg;
    let gap_below = e.min_neg - e.max_pos;

    let (fired, mu, nu, sign) = if gap_above > 0.0 {
        (FiredCondition::PlusAbove, e.min_pos, e.max_neg, 1.0)
    } else if gap_below > 0.0 {
        (FiredCondition::PlusBelow, e.min_neg, e.max_pos, -1.0)
    } else if dimension.is_some() {
        // Coordinatewise scan keeps looking at later dimensions.
        return Ok(None);
    } else {
        return Ok(Some(not_separable_fallback(distances, labels)));
    };

    let bias = -sign * 0.5 * (mu + nu);
    verify_witness(distances, labels, sign, bias)?;
    let mut weights = vec![0.0; out_dim];
    weights[weight_index] = sign;
    Ok(Some(SeparabilityReport {
        separable: true,
        fired_condition: fired,
        mu,
        nu,
        dimension,
        witness: Some(LinearModel { weights, bias }),
    }))
}

fn not_separable_fallback(distances: &[f64], labels: &[i32]) -> SeparabilityReport {
    let e = extrema(distances, labels);
    let gap_above = e.min_pos - e.max_neg;
    let gap_below = e.min_neg - e.max_pos;
    if gap_above >= gap_below {
        SeparabilityReport {
            separable: false,
            fired_condition: FiredCondition::None,
            mu: e.min_pos,
            nu: e.max_neg,
            dimension: None,
            witness: None,
        }
    } else {
        SeparabilityReport {
            separable: false,
            fired_condition: FiredCondition::None,
            mu: e.min_neg,
            nu: e.max_pos,
            dimension: None,
            witness: None,
        }
    }
}

fn check_distances(data: &Dataset, distances: &[f64]) -> Result<SeparabilityReport> {
    let labels = data.labels.as_slice();
    let report = build_report(distances, labels, data.dim() + 1, data.dim(), None)?;
    Ok(report.expect("anchor checks always produce a report"))
}

/// Checks whether p-distances to one fixed anchor strictly order the two
/// classes; the witness lives in the (d+1)-dimensional mapped space.
pub fn check_single_anchor(
    data: &Dataset,
    anchor: &Vector,
    p: NormExponent,
) -> Result<SeparabilityReport> {
    data.require_binary()?;
    if anchor.len() != data.dim() {
        return Err(Error::DimensionMismatch {
            left: anchor.len(),
            right: data.dim(),
        });
    }
    let distances: Vec<f64> = data
        .features
        .iter_rows()
        .map(|x| p_distance_unchecked(x, anchor.as_slice(), p))
        .collect();
    check_distances(data, &distances)
}

/// Scans feature dimensions in order and returns the first whose
/// per-coordinate distances strictly order the classes; the witness lives
/// in the 2d-dimensional mapped space with unit weight on the appended
/// feature of the firing dimension.
pub fn check_coordinatewise(
    data: &Dataset,
    anchor: &Vector,
    p: NormExponent,
) -> Result<SeparabilityReport> {
    data.require_binary()?;
    if anchor.len() != data.dim() {
        return Err(Error::DimensionMismatch {
            left: anchor.len(),
            right: data.dim(),
        });
    }
    let d = data.dim();
    let labels = data.labels.as_slice();
    let mut first_distances: Option<Vec<f64>> = None;
    for dim in 0..d {
        let a = anchor[dim];
        let distances: Vec<f64> = data
            .features
            .iter_rows()
            .map(|x| {
                let delta = (x[dim] - a).abs();
                match p {
                    NormExponent::P1 | NormExponent::PInf => delta,
                    NormExponent::P2 => delta * delta,
                }
            })
            .collect();
        if let Some(report) = build_report(&distances, labels, 2 * d, d + dim, Some(dim))? {
            return Ok(report);
        }
        if first_distances.is_none() {
            first_distances = Some(distances);
        }
    }
    Ok(not_separable_fallback(&first_distances.expect("d >= 1"), labels))
}

/// Applies the single-anchor conditions to per-sample nearest-member
/// distances over an anchor set.
pub fn check_multi_anchor(
    data: &Dataset,
    anchors: &AnchorSet,
    p: NormExponent,
) -> Result<SeparabilityReport> {
    data.require_binary()?;
    if anchors.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            left: anchors.dim(),
            right: data.dim(),
        });
    }
    let distances: Result<Vec<f64>> = data
        .features
        .iter_rows()
        .map(|x| anchors.nearest_distance(x, p))
        .collect();
    check_distances(data, &distances?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Labels, Matrix};
    use crate::feature_map::{map_dataset, FeatureMapSpec};
    use crate::solver::{predict_linear, train_linear_svm, SvmHyper};

    fn dataset(rows: Vec<Vec<f64>>, labels: Vec<i32>) -> Dataset {
        Dataset::new(
            Matrix::from_rows(rows).unwrap(),
            Labels::new(labels).unwrap(),
        )
        .unwrap()
    }

    fn ring(radius: f64, count: usize) -> Vec<Vec<f64>> {
        (0..count)
            .map(|i| {
                let angle = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
                vec![radius * angle.cos(), radius * angle.sin()]
            })
            .collect()
    }

    #[test]
    fn inner_positives_fire_the_second_condition() {
        let mut rows = ring(1.0, 5);
        let mut labels = vec![1; 5];
        rows.extend(ring(3.0, 5));
        labels.extend(vec![-1; 5]);
        let data = dataset(rows, labels);
        let report =
            check_single_anchor(&data, &Vector::new(vec![0.0, 0.0]).unwrap(), NormExponent::P2)
                .unwrap();
        assert!(report.separable);
        assert_eq!(report.fired_condition, FiredCondition::PlusBelow);
        assert!((report.mu - 9.0).abs() < 1e-9);
        assert!((report.nu - 1.0).abs() < 1e-9);
    }

    #[test]
    fn interleaved_radii_are_not_separable() {
        let mut rows = ring(1.0, 4);
        let mut labels = vec![1; 4];
        rows.extend(ring(3.0, 4));
        labels.extend(vec![1; 4]);
        rows.extend(ring(2.0, 4));
        labels.extend(vec![-1; 4]);
        let data = dataset(rows, labels);
        let report =
            check_single_anchor(&data, &Vector::new(vec![0.0, 0.0]).unwrap(), NormExponent::P2)
                .unwrap();
        assert!(!report.separable);
        assert_eq!(report.fired_condition, FiredCondition::None);
        assert!(report.witness.is_none());
        assert!(report.gap() <= 0.0);
    }

    #[test]
    fn outer_positives_fire_the_first_condition_with_a_sound_witness() {
        let mut rows = ring(4.0, 6);
        let mut labels = vec![1; 6];
        rows.extend(ring(1.5, 6));
        labels.extend(vec![-1; 6]);
        let data = dataset(rows.clone(), labels.clone());
        let anchor = Vector::new(vec![0.0, 0.0]).unwrap();
        let report = check_single_anchor(&data, &anchor, NormExponent::P2).unwrap();
        assert!(report.separable);
        assert_eq!(report.fired_condition, FiredCondition::PlusAbove);

        let witness = report.witness.as_ref().unwrap();
        let map = FeatureMapSpec::SingleDistance {
            p: NormExponent::P2,
            anchors: AnchorSet::singleton(anchor.into_vec()).unwrap(),
        };
        let mapped = map_dataset(&map, &data).unwrap();
        let predicted = predict_linear(witness, &mapped.features).unwrap();
        assert_eq!(predicted.as_slice(), data.labels.as_slice());
        for (row, &label) in mapped.features.iter_rows().zip(data.labels.as_slice()) {
            let value = witness.decision_value(row).unwrap();
            assert!(f64::from(label) * value >= report.margin() - 1e-9);
        }
    }

    #[test]
    fn coordinatewise_gap_in_the_first_feature() {
        let data = dataset(
            vec![
                vec![2.0, 5.0],
                vec![-3.0, -7.0],
                vec![0.0, 100.0],
                vec![0.0, -100.0],
            ],
            vec![1, 1, -1, -1],
        );
        let anchor = Vector::new(vec![0.0, 0.0]).unwrap();
        let report = check_coordinatewise(&data, &anchor, NormExponent::P1).unwrap();
        assert!(report.separable);
        assert_eq!(report.dimension, Some(0));
        assert_eq!(report.fired_condition, FiredCondition::PlusAbove);
        let witness = report.witness.as_ref().unwrap();
        assert_eq!(witness.weights.len(), 4);
        assert_eq!(witness.weights[2], 1.0);
    }

    #[test]
    fn scan_reports_the_first_separating_dimension() {
        // Both features separate; index 0 must win.
        let data = dataset(
            vec![vec![5.0, 5.0], vec![-5.0, -5.0], vec![0.5, 0.5], vec![-0.5, -0.5]],
            vec![1, 1, -1, -1],
        );
        let anchor = Vector::new(vec![0.0, 0.0]).unwrap();
        let report = check_coordinatewise(&data, &anchor, NormExponent::P2).unwrap();
        assert!(report.separable);
        assert_eq!(report.dimension, Some(0));
    }

    #[test]
    fn no_dimension_separates() {
        let data = dataset(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![0.0, 0.0]],
            vec![1, 1, -1, -1],
        );
        let anchor = Vector::new(vec![0.0, 0.0]).unwrap();
        let report = check_coordinatewise(&data, &anchor, NormExponent::P1).unwrap();
        assert!(!report.separable);
        assert!(report.witness.is_none());
        assert_eq!(report.dimension, None);
    }

    #[test]
    fn negative_class_anchors_fire_the_first_condition() {
        let data = dataset(
            vec![
                vec![5.0, 5.0],
                vec![6.0, 4.0],
                vec![0.0, 0.0],
                vec![1.0, 0.0],
            ],
            vec![1, 1, -1, -1],
        );
        let anchors =
            AnchorSet::from_rows(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let report = check_multi_anchor(&data, &anchors, NormExponent::P1).unwrap();
        assert!(report.separable);
        assert_eq!(report.fired_condition, FiredCondition::PlusAbove);
        assert_eq!(report.nu, 0.0);
    }

    #[test]
    fn singleton_set_matches_single_anchor_check() {
        let data = dataset(
            vec![vec![3.0, 0.0], vec![0.0, 4.0], vec![0.5, 0.0], vec![0.0, 0.5]],
            vec![1, 1, -1, -1],
        );
        let anchor = vec![0.25, 0.25];
        let from_set = check_multi_anchor(
            &data,
            &AnchorSet::singleton(anchor.clone()).unwrap(),
            NormExponent::P1,
        )
        .unwrap();
        let from_single =
            check_single_anchor(&data, &Vector::new(anchor).unwrap(), NormExponent::P1).unwrap();
        assert_eq!(from_set, from_single);
    }

    #[test]
    fn tied_extrema_fail_strictness() {
        // min over positives equals max over negatives at distance 1.
        let data = dataset(
            vec![vec![1.0, 0.0], vec![2.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.5]],
            vec![1, 1, -1, -1],
        );
        let report = check_single_anchor(
            &data,
            &Vector::new(vec![0.0, 0.0]).unwrap(),
            NormExponent::P2,
        )
        .unwrap();
        assert!(!report.separable);
        assert_eq!(report.gap(), 0.0);
    }

    #[test]
    fn separable_report_trains_to_full_accuracy() {
        let mut rows = ring(3.0, 8);
        let mut labels = vec![1; 8];
        rows.extend(ring(1.0, 8));
        labels.extend(vec![-1; 8]);
        let data = dataset(rows, labels);
        let anchor = Vector::new(vec![0.0, 0.0]).unwrap();
        let report = check_single_anchor(&data, &anchor, NormExponent::P2).unwrap();
        assert!(report.separable);
        let map = FeatureMapSpec::SingleDistance {
            p: NormExponent::P2,
            anchors: AnchorSet::singleton(anchor.into_vec()).unwrap(),
        };
        let mapped = map_dataset(&map, &data).unwrap();
        let fit = train_linear_svm(&mapped, &SvmHyper::new(1e4)).unwrap();
        let predicted = predict_linear(&fit.model, &mapped.features).unwrap();
        assert_eq!(predicted.as_slice(), mapped.labels.as_slice());
    }

    #[test]
    fn extra_anchors_never_increase_distances() {
        let data = dataset(
            vec![vec![1.0, 2.0], vec![-3.0, 0.5], vec![4.0, -1.0], vec![0.0, 0.0]],
            vec![1, 1, -1, -1],
        );
        let small = AnchorSet::from_rows(vec![vec![0.0, 0.0]]).unwrap();
        let large =
            AnchorSet::from_rows(vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![-2.0, 0.0]]).unwrap();
        for p in [NormExponent::P1, NormExponent::P2, NormExponent::PInf] {
            for row in data.features.iter_rows() {
                let before = small.nearest_distance(row, p).unwrap();
                let after = large.nearest_distance(row, p).unwrap();
                assert!(after <= before);
            }
        }
    }

    #[test]
    fn report_renders_key_value_lines() {
        let data = dataset(
            vec![vec![3.0, 0.0], vec![4.0, 0.0], vec![0.5, 0.0], vec![0.25, 0.0]],
            vec![1, 1, -1, -1],
        );
        let report = check_single_anchor(
            &data,
            &Vector::new(vec![0.0, 0.0]).unwrap(),
            NormExponent::P1,
        )
        .unwrap();
        let text = report.render();
        assert!(text.contains("separable: true"));
        assert!(text.contains("condition: plus-above"));
        assert!(text.contains("witness-bias:"));
    }

    #[test]
    fn single_class_input_is_rejected() {
        let data = dataset(vec![vec![0.0], vec![1.0]], vec![1, 1]);
        let anchor = Vector::new(vec![0.0]).unwrap();
        assert!(check_single_anchor(&data, &anchor, NormExponent::P1).is_err());
        assert!(check_coordinatewise(&data, &anchor, NormExponent::P1).is_err());
        let set = AnchorSet::singleton(vec![0.0]).unwrap();
        assert!(check_multi_anchor(&data, &set, NormExponent::P1).is_err());
    }
}
