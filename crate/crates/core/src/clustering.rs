//! K-Means over standardized country indicators, with Elbow-based selection
//! of the cluster count.
//!
//! Everything here is deterministic given the seed: nearest-center ties go
//! to the lowest center index, empty clusters are repaired by promoting the
//! point farthest from its assigned center, and best-of-restarts ties keep
//! the earliest restart.

use crate::linalg::squared_distance;
use crate::series::CountryProfile;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ClusteringError {
    #[error("need at least 2 profiles, got {0}")]
    TooFewProfiles(usize),
    #[error("k = {k} exceeds the {distinct} distinct points")]
    KExceedsPoints { k: usize, distinct: usize },
    #[error("invalid k range [{k_min}, {k_max}] over {distinct} distinct points")]
    InvalidRange {
        k_min: usize,
        k_max: usize,
        distinct: usize,
    },
    #[error("unknown country {0}")]
    UnknownCountry(String),
}

/// How initial centers are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMethod {
    /// Distance-weighted seeding: each next center is sampled with
    /// probability proportional to its squared distance from the centers
    /// chosen so far.
    #[default]
    KmeansPlusPlus,
    /// Plain uniform sampling of k distinct points.
    Uniform,
}

/// One fitted K-Means run.
#[derive(Debug, Clone, PartialEq)]
pub struct KmeansFit {
    pub k: usize,
    pub centers: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Sum of squared distances from each point to its assigned center.
    pub distortion: f64,
    /// Distortion recorded after initialization and after every
    /// assign+update iteration; non-increasing along the run.
    pub distortion_trace: Vec<f64>,
    pub iterations: usize,
}

/// A fitted model keyed by country id.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    pub centers: Vec<Vec<f64>>,
    pub assignments: BTreeMap<String, usize>,
    pub distortion: f64,
}

impl ClusterModel {
    /// Couples a fit with the country ids its points came from. Panics if
    /// the fit is inconsistent (wrong label count, an empty cluster, or a
    /// distortion that does not match its centers and labels).
    pub fn from_fit(ids: &[String], points: &[Vec<f64>], fit: KmeansFit) -> ClusterModel {
        assert_eq!(ids.len(), fit.labels.len(), "one label per country");
        let mut sizes = vec![0usize; fit.k];
        for &label in &fit.labels {
            assert!(label < fit.k, "label {label} out of range");
            sizes[label] += 1;
        }
        assert!(sizes.iter().all(|&s| s > 0), "empty cluster in fit");
        let recomputed = distortion(points, &fit.centers, &fit.labels);
        let scale = recomputed.abs().max(1.0);
        assert!(
            (recomputed - fit.distortion).abs() <= 1e-9 * scale,
            "distortion {} does not match recomputed {}",
            fit.distortion,
            recomputed
        );
        let assignments = ids
            .iter()
            .cloned()
            .zip(fit.labels.iter().copied())
            .collect();
        ClusterModel {
            k: fit.k,
            centers: fit.centers,
            assignments,
            distortion: fit.distortion,
        }
    }
}

/// All countries sharing `country_id`'s cluster, including itself.
pub fn cluster_of(
    model: &ClusterModel,
    country_id: &str,
) -> Result<BTreeSet<String>, ClusteringError> {
    let &cluster = model
        .assignments
        .get(country_id)
        .ok_or_else(|| ClusteringError::UnknownCountry(country_id.to_string()))?;
    Ok(model
        .assignments
        .iter()
        .filter(|(_, &c)| c == cluster)
        .map(|(id, _)| id.clone())
        .collect())
}

/// Z-scores every indicator column over the profile set, using the
/// population variance. Zero-variance columns map to all-zeros so they
/// cannot dominate nor poison distances.
pub fn standardize(profiles: &[CountryProfile]) -> Result<Vec<Vec<f64>>, ClusteringError> {
    if profiles.len() < 2 {
        return Err(ClusteringError::TooFewProfiles(profiles.len()));
    }
    let dim = profiles[0].indicators.len();
    assert!(
        profiles.iter().all(|p| p.indicators.len() == dim),
        "profiles must share one indicator schema"
    );
    let n = profiles.len() as f64;
    let mut means = vec![0.0; dim];
    for profile in profiles {
        for (m, v) in means.iter_mut().zip(&profile.indicators) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut stds = vec![0.0; dim];
    for profile in profiles {
        for ((s, v), m) in stds.iter_mut().zip(&profile.indicators).zip(&means) {
            let d = v - m;
            *s += d * d;
        }
    }
    for s in &mut stds {
        *s = (*s / n).sqrt();
    }
    Ok(profiles
        .iter()
        .map(|p| {
            p.indicators
                .iter()
                .zip(&means)
                .zip(&stds)
                .map(|((v, m), s)| if *s == 0.0 { 0.0 } else { (v - m) / s })
                .collect()
        })
        .collect())
}

fn count_distinct(points: &[Vec<f64>]) -> usize {
    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    for p in points {
        if !distinct.iter().any(|q| *q == p) {
            distinct.push(p);
        }
    }
    distinct.len()
}

/// Nearest center index, ties to the lowest index.
fn nearest_center(point: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_dist = squared_distance(point, &centers[0]);
    for (idx, center) in centers.iter().enumerate().skip(1) {
        let dist = squared_distance(point, center);
        if dist < best_dist {
            best = idx;
            best_dist = dist;
        }
    }
    best
}

fn assign(points: &[Vec<f64>], centers: &[Vec<f64>]) -> Vec<usize> {
    points.iter().map(|p| nearest_center(p, centers)).collect()
}

fn distortion(points: &[Vec<f64>], centers: &[Vec<f64>], labels: &[usize]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| squared_distance(p, &centers[l]))
        .sum()
}

/// Moves each empty cluster's center onto the point farthest from its
/// assigned center, stealing only from clusters that keep ≥ 1 member.
fn repair_empty_clusters(points: &[Vec<f64>], centers: &mut [Vec<f64>], labels: &mut [usize]) {
    let k = centers.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut farthest: Option<(usize, f64)> = None;
        for (idx, point) in points.iter().enumerate() {
            if sizes[labels[idx]] < 2 {
                continue;
            }
            let dist = squared_distance(point, &centers[labels[idx]]);
            match farthest {
                Some((_, best)) if dist <= best => {}
                _ => farthest = Some((idx, dist)),
            }
        }
        let (idx, _) = farthest.expect("a donor cluster with two members must exist");
        centers[empty] = points[idx].clone();
        labels[idx] = empty;
    }
}

fn update_centers(points: &[Vec<f64>], labels: &[usize], k: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut centers = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (point, &label) in points.iter().zip(labels) {
        counts[label] += 1;
        for (c, v) in centers[label].iter_mut().zip(point) {
            *c += v;
        }
    }
    for (center, &count) in centers.iter_mut().zip(&counts) {
        if count > 0 {
            for c in center.iter_mut() {
                *c /= count as f64;
            }
        }
    }
    centers
}

/// Lloyd iterations from explicit starting centers, run until the
/// assignments stabilize or `max_iter` is reached.
fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>, max_iter: usize) -> KmeansFit {
    let k = centers.len();
    let dim = points[0].len();
    let mut labels = assign(points, &centers);
    repair_empty_clusters(points, &mut centers, &mut labels);
    let mut trace = vec![distortion(points, &centers, &labels)];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let new_centers = update_centers(points, &labels, k, dim);
        let mut new_labels = assign(points, &new_centers);
        let mut new_centers = new_centers;
        repair_empty_clusters(points, &mut new_centers, &mut new_labels);
        trace.push(distortion(points, &new_centers, &new_labels));
        let stable = new_labels == labels;
        centers = new_centers;
        labels = new_labels;
        if stable {
            break;
        }
    }
    let final_distortion = distortion(points, &centers, &labels);
    KmeansFit {
        k,
        centers,
        labels,
        distortion: final_distortion,
        distortion_trace: trace,
        iterations,
    }
}

fn init_kmeans_plusplus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..points.len())].clone());
    while centers.len() < k {
        let weights: Vec<f64> = points
            .iter()
            .map(|p| {
                centers
                    .iter()
                    .map(|c| squared_distance(p, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = weights.iter().sum();
        debug_assert!(total > 0.0, "k exceeds the number of distinct points");
        let mut draw = rng.random::<f64>() * total;
        let mut chosen = points.len() - 1;
        for (idx, w) in weights.iter().enumerate() {
            if draw < *w {
                chosen = idx;
                break;
            }
            draw -= w;
        }
        centers.push(points[chosen].clone());
    }
    centers
}

fn init_uniform(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    while centers.len() < k {
        let candidate = &points[rng.random_range(0..points.len())];
        if !centers.iter().any(|c| c == candidate) {
            centers.push(candidate.clone());
        }
    }
    centers
}

/// Lloyd's algorithm with seeded initialization. Iterates until the
/// assignments stabilize or `max_iter` passes; the result is deterministic
/// given `(points, k, seed)`.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<KmeansFit, ClusteringError> {
    kmeans_with_init(points, k, seed, max_iter, InitMethod::KmeansPlusPlus)
}

/// [`kmeans`] with an explicit initialization method.
pub fn kmeans_with_init(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
    init: InitMethod,
) -> Result<KmeansFit, ClusteringError> {
    assert!(k > 0, "k must be positive");
    assert!(!points.is_empty(), "no points to cluster");
    let distinct = count_distinct(points);
    if k > distinct {
        return Err(ClusteringError::KExceedsPoints { k, distinct });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = match init {
        InitMethod::KmeansPlusPlus => init_kmeans_plusplus(points, k, &mut rng),
        InitMethod::Uniform => init_uniform(points, k, &mut rng),
    };
    Ok(lloyd(points, centers, max_iter))
}

/// Distortion-vs-k scan with the selected knee.
#[derive(Debug, Clone, PartialEq)]
pub struct ElbowScan {
    pub k_values: Vec<usize>,
    pub distortions: Vec<f64>,
    pub selected_k: usize,
}

/// An elbow scan together with the best fit found at every k.
#[derive(Debug, Clone, PartialEq)]
pub struct ElbowOutcome {
    pub scan: ElbowScan,
    /// `fits[i]` is the best run at `scan.k_values[i]`.
    pub fits: Vec<KmeansFit>,
}

impl ElbowOutcome {
    /// The fit at the selected k.
    pub fn selected_fit(&self) -> &KmeansFit {
        let idx = self
            .scan
            .k_values
            .iter()
            .position(|&k| k == self.scan.selected_k)
            .expect("selected_k is drawn from k_values");
        &self.fits[idx]
    }
}

fn mix_seed(base: u64, k: u64, restart: u64) -> u64 {
    // splitmix64 over a simple combination, to decorrelate runs.
    let mut z = base
        ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ restart.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Splits the previous best solution by adding the point farthest from its
/// assigned center as an extra starting center. The first assignment pass
/// can then only improve on the (k−1)-cluster distortion, which keeps the
/// best-of-runs curve non-increasing in k.
fn split_centers(points: &[Vec<f64>], previous: &KmeansFit) -> Vec<Vec<f64>> {
    let mut centers = previous.centers.clone();
    let mut farthest = 0;
    let mut farthest_dist = -1.0;
    for (idx, point) in points.iter().enumerate() {
        let dist = squared_distance(point, &previous.centers[previous.labels[idx]]);
        if dist > farthest_dist {
            farthest = idx;
            farthest_dist = dist;
        }
    }
    centers.push(points[farthest].clone());
    centers
}

/// Knee of a distortion curve: after normalizing both axes to \[0, 1\],
/// picks the point with the maximum perpendicular distance to the chord
/// joining the curve's endpoints. Ties go to the smallest k.
fn select_knee(k_values: &[usize], distortions: &[f64]) -> usize {
    let first_k = k_values[0] as f64;
    let last_k = *k_values.last().unwrap() as f64;
    let first_j = distortions[0];
    let last_j = *distortions.last().unwrap();
    let j_range = first_j - last_j;
    if j_range <= 0.0 {
        // Flat curve: no knee, keep the most parsimonious k.
        return k_values[0];
    }
    let mut best_k = k_values[0];
    let mut best_dist = f64::NEG_INFINITY;
    for (&k, &j) in k_values.iter().zip(distortions) {
        let u = (k as f64 - first_k) / (last_k - first_k);
        let v = (j - last_j) / j_range;
        // Chord runs from (0, 1) to (1, 0); distance below it is
        // proportional to 1 − u − v.
        let dist = 1.0 - u - v;
        if dist > best_dist {
            best_dist = dist;
            best_k = k;
        }
    }
    best_k
}

/// Scans k over `[k_min, k_max]`, fitting `restarts` seeded runs per k
/// (plus one run warm-started by splitting the previous best) and keeping
/// the lowest distortion, then selects the knee of the distortion curve.
pub fn elbow_select(
    points: &[Vec<f64>],
    k_min: usize,
    k_max: usize,
    seed: u64,
    restarts: usize,
    max_iter: usize,
    init: InitMethod,
) -> Result<ElbowOutcome, ClusteringError> {
    assert!(restarts > 0, "need at least one restart");
    let distinct = count_distinct(points);
    if k_min < 1 || k_min >= k_max || k_max > distinct {
        return Err(ClusteringError::InvalidRange {
            k_min,
            k_max,
            distinct,
        });
    }
    let mut k_values = Vec::new();
    let mut distortions = Vec::new();
    let mut fits: Vec<KmeansFit> = Vec::new();
    for k in k_min..=k_max {
        let mut best: Option<KmeansFit> = None;
        for restart in 0..restarts {
            let run_seed = mix_seed(seed, k as u64, restart as u64);
            let fit = kmeans_with_init(points, k, run_seed, max_iter, init)?;
            // Strict comparison keeps the earliest restart on ties.
            if best.as_ref().is_none_or(|b| fit.distortion < b.distortion) {
                best = Some(fit);
            }
        }
        if let Some(previous) = fits.last() {
            let warm = lloyd(points, split_centers(points, previous), max_iter);
            if best.as_ref().is_none_or(|b| warm.distortion < b.distortion) {
                best = Some(warm);
            }
        }
        let best = best.unwrap();
        k_values.push(k);
        distortions.push(best.distortion);
        fits.push(best);
    }
    let selected_k = select_knee(&k_values, &distortions);
    Ok(ElbowOutcome {
        scan: ElbowScan {
            k_values,
            distortions,
            selected_k,
        },
        fits,
    })
}
