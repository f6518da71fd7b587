//! Anchor selection strategies: global mean, per-class means, per-class
//! k-means centroids, and nearest-neighbor distance filtered samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{p_distance_unchecked, Dataset, NormExponent};
use crate::error::{Error, Result};
use crate::feature_map::AnchorSet;

/// How anchor sets are produced from training data.
#[derive(Debug, Clone, PartialEq)]
pub enum AnchorStrategy {
    GlobalMean,
    ClassMeans,
    ClassKMeans { k: usize, seed: u64, max_iter: usize },
    FilteredSamples { quantile: f64, p: NormExponent },
}

fn column_mean(rows: &[&[f64]], d: usize) -> Vec<f64> {
    let mut mean = vec![0.0; d];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(*row) {
            *m += v;
        }
    }
    let m = rows.len() as f64;
    for v in &mut mean {
        *v /= m;
    }
    mean
}

fn class_rows<'a>(data: &'a Dataset, label: i32) -> Vec<&'a [f64]> {
    data.class_indices(label)
        .into_iter()
        .map(|i| data.features.row(i))
        .collect()
}

fn require_two_classes(data: &Dataset) -> Result<Vec<i32>> {
    let classes = data.labels.classes();
    if classes.len() < 2 {
        return Err(Error::Label(format!(
            "at least two classes required, found {:?}",
            classes
        )));
    }
    Ok(classes)
}

/// Singleton anchor set holding the columnwise mean of all samples.
pub fn global_mean(data: &Dataset) -> Result<AnchorSet> {
    let rows: Vec<&[f64]> = data.features.iter_rows().collect();
    AnchorSet::singleton(column_mean(&rows, data.dim()))
}

/// One singleton anchor set per class, ordered by ascending label.
pub fn class_means(data: &Dataset) -> Result<Vec<AnchorSet>> {
    let classes = require_two_classes(data)?;
    classes
        .into_iter()
        .map(|label| {
            let rows = class_rows(data, label);
            AnchorSet::singleton(column_mean(&rows, data.dim()))
        })
        .collect()
}

fn squared_euclidean(x: &[f64], c: &[f64]) -> f64 {
    p_distance_unchecked(x, c, NormExponent::P2)
}

fn lloyd(rows: &[&[f64]], d: usize, k: usize, rng: &mut ChaCha8Rng, max_iter: usize) -> Vec<Vec<f64>> {
    let k = k.min(rows.len());
    let init = rand::seq::index::sample(rng, rows.len(), k);
    let mut centroids: Vec<Vec<f64>> = init.iter().map(|i| rows[i].to_vec()).collect();
    let mut assignment = vec![usize::MAX; rows.len()];
    for _ in 0..max_iter {
        let mut changed = false;
        for (i, row) in rows.iter().enumerate() {
            let mut best = 0;
            let mut best_dist = squared_euclidean(row, &centroids[0]);
            for (c, centroid) in centroids.iter().enumerate().skip(1) {
                let dist = squared_euclidean(row, centroid);
                if dist < best_dist {
                    best = c;
                    best_dist = dist;
                }
            }
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; d]; centroids.len()];
        let mut counts = vec![0usize; centroids.len()];
        for (i, row) in rows.iter().enumerate() {
            counts[assignment[i]] += 1;
            for (s, v) in sums[assignment[i]].iter_mut().zip(*row) {
                *s += v;
            }
        }
        let mut kept = Vec::with_capacity(centroids.len());
        let mut remap = vec![usize::MAX; centroids.len()];
        for (c, count) in counts.iter().enumerate() {
            if *count > 0 {
                remap[c] = kept.len();
                let mut mean = sums[c].clone();
                for v in &mut mean {
                    *v /= *count as f64;
                }
                kept.push(mean);
            }
        }
        for a in &mut assignment {
            *a = remap[*a];
        }
        centroids = kept;
        if !changed {
            break;
        }
    }
    centroids
}

/// One anchor set of up to `k` Lloyd centroids per class, ordered by
/// ascending label. Initial centroids are drawn uniformly without
/// replacement from the class's samples; empty clusters are dropped.
/// Deterministic in (data, k, seed, max_iter).
pub fn class_kmeans(data: &Dataset, k: usize, seed: u64, max_iter: usize) -> Result<Vec<AnchorSet>> {
    if k < 1 {
        return Err(Error::InvalidParameter("k-means needs k >= 1".into()));
    }
    if max_iter < 1 {
        return Err(Error::InvalidParameter("k-means needs max_iter >= 1".into()));
    }
    let classes = require_two_classes(data)?;
    let d = data.dim();
    classes
        .into_iter()
        .enumerate()
        .map(|(position, label)| {
            let rows = class_rows(data, label);
            let stream = seed ^ (position as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let mut rng = ChaCha8Rng::seed_from_u64(stream);
            let centroids = lloyd(&rows, d, k, &mut rng, max_iter);
            AnchorSet::from_rows(centroids)
        })
        .collect()
}

/// Quantile of already-sorted values by linear interpolation between
/// adjacent order statistics.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q * (n - 1) as f64;
    let lower = h.floor() as usize;
    if lower + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lower as f64;
    sorted[lower] + frac * (sorted[lower + 1] - sorted[lower])
}

fn nn_distances(rows: &[&[f64]], p: NormExponent) -> Vec<f64> {
    if rows.len() == 1 {
        return vec![0.0];
    }
    rows.iter()
        .enumerate()
        .map(|(i, x)| {
            rows.iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, other)| p_distance_unchecked(x, other, p))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

fn filter_class(rows: &[&[f64]], d: usize, threshold: f64, p: NormExponent) -> Result<AnchorSet> {
    let distances = nn_distances(rows, p);
    let retained: Vec<Vec<f64>> = rows
        .iter()
        .zip(&distances)
        .filter(|(_, &dist)| dist >= threshold)
        .map(|(row, _)| row.to_vec())
        .collect();
    if retained.is_empty() {
        return AnchorSet::singleton(column_mean(rows, d));
    }
    AnchorSet::from_rows(retained)
}

/// One anchor set per class (ascending label): the class samples whose
/// within-class nearest-neighbor p-distance is at or above the given
/// quantile of that class's distance distribution. A set emptied by the
/// filter falls back to the singleton class mean.
pub fn filtered_sample_anchors(
    data: &Dataset,
    quantile: f64,
    p: NormExponent,
) -> Result<Vec<AnchorSet>> {
    if !(0.0..1.0).contains(&quantile) {
        return Err(Error::InvalidParameter(format!(
            "filter quantile must lie in [0, 1), got {quantile}"
        )));
    }
    let classes = require_two_classes(data)?;
    let d = data.dim();
    classes
        .into_iter()
        .map(|label| {
            let rows = class_rows(data, label);
            let mut distances = nn_distances(&rows, p);
            distances.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let threshold = quantile_sorted(&distances, quantile);
            filter_class(&rows, d, threshold, p)
        })
        .collect()
}

/// Produces the anchor sets for a strategy, one or more sets depending on
/// the variant.
pub fn anchor_sets(data: &Dataset, strategy: &AnchorStrategy) -> Result<Vec<AnchorSet>> {
    match strategy {
        AnchorStrategy::GlobalMean => Ok(vec![global_mean(data)?]),
        AnchorStrategy::ClassMeans => class_means(data),
        AnchorStrategy::ClassKMeans { k, seed, max_iter } => {
            class_kmeans(data, *k, *seed, *max_iter)
        }
        AnchorStrategy::FilteredSamples { quantile, p } => {
            filtered_sample_anchors(data, *quantile, *p)
        }
    }
}
