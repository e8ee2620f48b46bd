//! Lloyd's Kmeans with Forgy initialisation, deterministic multi-restart
//! selection and the k-sweep used for elbow plots.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{member_sums, AsHourly, ClusteringResult, Hourly, MeanLoadProfile, Method, MethodParams, HOURS};

pub const DEFAULT_RESTARTS: usize = 1000;
pub const DEFAULT_MAX_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KmeansParams {
    pub k: usize,
    pub n_restarts: usize,
    pub base_seed: u64,
    pub max_iters: usize,
}

impl KmeansParams {
    pub fn new(k: usize, base_seed: u64) -> Self {
        Self {
            k,
            n_restarts: DEFAULT_RESTARTS,
            base_seed,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }

    pub fn with_restarts(mut self, n_restarts: usize) -> Self {
        self.n_restarts = n_restarts;
        self
    }

    pub fn validate(&self, n_points: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Parameter("k must be at least 1".into()));
        }
        if self.n_restarts == 0 || self.max_iters == 0 {
            return Err(Error::Parameter("n_restarts and max_iters must be positive".into()));
        }
        if self.k > n_points {
            return Err(Error::Parameter(format!("k = {} exceeds the {n_points} available profiles", self.k)));
        }
        Ok(())
    }
}

/// Euclidean distance. Panics if the lengths differ.
pub fn euclidean_distance(c: &[f64], p: &[f64]) -> f64 {
    assert_eq!(c.len(), p.len(), "euclidean_distance: length mismatch");
    c.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

#[inline]
pub(crate) fn squared_distance(a: &Hourly, b: &Hourly) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Raw output of one Lloyd run over bare vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct KmeansFit {
    pub centroids: Vec<Hourly>,
    pub labels: Vec<usize>,
    pub wcss: f64,
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every assignment and every recentering step.
    pub wcss_trace: Vec<f64>,
}

fn nearest(p: &Hourly, centroids: &[Hourly]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(p, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn objective(points: &[Hourly], labels: &[usize], centroids: &[Hourly]) -> f64 {
    points.iter().zip(labels).map(|(p, &l)| squared_distance(p, &centroids[l])).sum()
}

fn means(points: &[Hourly], labels: &[usize], centroids: &mut [Hourly]) {
    let (sums, counts) = member_sums(centroids.len(), labels, points);
    for ((c, s), n) in centroids.iter_mut().zip(sums).zip(counts) {
        if n > 0 {
            *c = s.map(|v| v / n as f64);
        }
    }
}

/// Assigns every point to its nearest centre, then refills empty clusters
/// with the point farthest from its centre.
fn assign(points: &[Hourly], centroids: &mut [Hourly]) -> Vec<usize> {
    let k = centroids.len();
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, centroids)).collect();
    let mut counts = vec![0usize; k];
    for &l in &labels {
        counts[l] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut donor = None;
        let mut far = f64::NEG_INFINITY;
        for (i, p) in points.iter().enumerate() {
            if counts[labels[i]] < 2 {
                continue;
            }
            let d = squared_distance(p, &centroids[labels[i]]);
            if d > far {
                far = d;
                donor = Some(i);
            }
        }
        let i = donor.expect("n >= k guarantees a cluster with two or more members");
        counts[labels[i]] -= 1;
        counts[empty] = 1;
        labels[i] = empty;
        centroids[empty] = points[i];
    }
    labels
}

/// One Lloyd run from a Forgy start drawn with `seed`.
pub fn lloyd_points(points: &[Hourly], k: usize, seed: u64, max_iters: usize) -> Result<KmeansFit> {
    if k == 0 || k > points.len() {
        return Err(Error::Parameter(format!("k = {k} must lie in 1..={}", points.len())));
    }
    if max_iters == 0 {
        return Err(Error::Parameter("max_iters must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<Hourly> = index::sample(&mut rng, points.len(), k).into_iter().map(|i| points[i]).collect();

    let mut labels = assign(points, &mut centroids);
    let mut trace = vec![objective(points, &labels, &centroids)];
    let mut iterations = 0;
    let mut converged = false;
    loop {
        means(points, &labels, &mut centroids);
        trace.push(objective(points, &labels, &centroids));
        if iterations == max_iters {
            break;
        }
        iterations += 1;
        let next = assign(points, &mut centroids);
        trace.push(objective(points, &next, &centroids));
        if next == labels {
            converged = true;
            break;
        }
        labels = next;
    }
    means(points, &labels, &mut centroids);
    let wcss = objective(points, &labels, &centroids);
    Ok(KmeansFit {
        centroids,
        labels,
        wcss,
        seed,
        iterations,
        converged,
        wcss_trace: trace,
    })
}

/// Runs seeds `base_seed + 0 .. base_seed + n_restarts - 1` and keeps the
/// lowest WCSS, ties going to the lowest offset.
pub fn best_of_restarts_points(points: &[Hourly], params: &KmeansParams) -> Result<KmeansFit> {
    params.validate(points.len())?;
    let fits = (0..params.n_restarts as u64)
        .into_par_iter()
        .map(|offset| lloyd_points(points, params.k, params.base_seed.wrapping_add(offset), params.max_iters))
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<KmeansFit> = None;
    for fit in fits {
        match &best {
            Some(b) if fit.wcss >= b.wcss => {}
            _ => best = Some(fit),
        }
    }
    Ok(best.expect("at least one restart"))
}

fn vectors(profiles: &[MeanLoadProfile]) -> Vec<Hourly> {
    profiles.iter().map(|p| *p.hourly()).collect()
}

fn to_result(profiles: &[MeanLoadProfile], fit: KmeansFit, params: &KmeansParams) -> ClusteringResult {
    ClusteringResult {
        method: Method::Kmeans,
        k: params.k,
        empty: vec![false; params.k],
        centroids: fit.centroids,
        household_ids: profiles.iter().map(|p| p.household_id.clone()).collect(),
        assignments: fit.labels,
        seed: fit.seed,
        params: MethodParams::Kmeans(params.clone()),
    }
}

/// A single Lloyd run over household profiles.
pub fn lloyd(profiles: &[MeanLoadProfile], params: &KmeansParams, seed: u64) -> Result<ClusteringResult> {
    params.validate(profiles.len())?;
    let fit = lloyd_points(&vectors(profiles), params.k, seed, params.max_iters)?;
    Ok(to_result(profiles, fit, params))
}

pub fn best_of_restarts(profiles: &[MeanLoadProfile], params: &KmeansParams) -> Result<ClusteringResult> {
    let fit = best_of_restarts_points(&vectors(profiles), params)?;
    Ok(to_result(profiles, fit, params))
}

/// Sum of squared Euclidean distances from each profile to its assigned
/// centroid.
pub fn wcss<P: AsHourly>(result: &ClusteringResult, profiles: &[P]) -> f64 {
    profiles
        .iter()
        .zip(&result.assignments)
        .map(|(p, &a)| squared_distance(p.hourly(), &result.centroids[a]))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElbowPoint {
    pub k: usize,
    pub wcss: f64,
}

/// Best-of-restarts WCSS for every k in `k_min..=k_max`.
pub fn sweep_k(profiles: &[MeanLoadProfile], k_min: usize, k_max: usize, params: &KmeansParams) -> Result<Vec<ElbowPoint>> {
    if k_min == 0 || k_min > k_max {
        return Err(Error::Parameter(format!("invalid k range {k_min}..={k_max}")));
    }
    if k_max > profiles.len() {
        return Err(Error::Parameter(format!("k_max = {k_max} exceeds the {} profiles", profiles.len())));
    }
    let points = vectors(profiles);
    (k_min..=k_max)
        .map(|k| {
            let p = KmeansParams { k, ..params.clone() };
            best_of_restarts_points(&points, &p).map(|fit| ElbowPoint { k, wcss: fit.wcss })
        })
        .collect()
}

/// Hour-wise mean of a set of vectors.
pub fn hourly_mean<P: AsHourly>(points: &[P]) -> Hourly {
    let mut m = [0.0; HOURS];
    for p in points {
        for (s, v) in m.iter_mut().zip(p.hourly()) {
            *s += v;
        }
    }
    m.map(|s| s / points.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec24(head: &[f64]) -> Hourly {
        let mut v = [0.0; HOURS];
        v[..head.len()].copy_from_slice(head);
        v
    }

    #[test]
    fn distance_examples() {
        let a = vec24(&[0.3, 0.7]);
        assert_eq!(euclidean_distance(&a, &a), 0.0);
        let ones = [1.0; HOURS];
        let zeros = [0.0; HOURS];
        assert!((euclidean_distance(&ones, &zeros) - 4.898_979_485_566_356).abs() < 1e-12);
        assert_eq!(euclidean_distance(&vec24(&[0.0, 1.0]), &vec24(&[1.0, 1.0])), 1.0);
    }

    #[test]
    #[should_panic(expected = "length mismatch")]
    fn distance_length_mismatch_panics() {
        euclidean_distance(&[0.0; 3], &[0.0; 4]);
    }

    #[test]
    fn k_one_gives_global_mean() {
        let pts = vec![vec24(&[0.0, 1.0]), vec24(&[1.0, 0.0]), vec24(&[0.5, 0.5])];
        let fit = lloyd_points(&pts, 1, 3, 300).unwrap();
        let m = hourly_mean(&pts);
        for (a, b) in fit.centroids[0].iter().zip(&m) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn k_equals_n_gives_zero_wcss() {
        let pts: Vec<Hourly> = (0..6).map(|i| vec24(&[i as f64 / 10.0, 1.0])).collect();
        let fit = lloyd_points(&pts, 6, 11, 300).unwrap();
        assert_eq!(fit.wcss, 0.0);
        let mut labels = fit.labels.clone();
        labels.sort();
        labels.dedup();
        assert_eq!(labels.len(), 6);
    }

    #[test]
    fn four_point_example() {
        let pts = vec![vec24(&[0.0, 0.0]), vec24(&[0.1, 0.0]), vec24(&[1.0, 1.0]), vec24(&[0.9, 1.0])];
        let fit = best_of_restarts_points(&pts, &KmeansParams::new(2, 0).with_restarts(20)).unwrap();
        assert_eq!(fit.labels[0], fit.labels[1]);
        assert_eq!(fit.labels[2], fit.labels[3]);
        assert_ne!(fit.labels[0], fit.labels[2]);
        let low = fit.centroids[fit.labels[0]];
        let high = fit.centroids[fit.labels[2]];
        assert!((low[0] - 0.05).abs() < 1e-12 && low[1] == 0.0);
        assert!((high[0] - 0.95).abs() < 1e-12 && high[1] == 1.0);
        assert!((fit.wcss - 0.01).abs() < 1e-12);
    }

    #[test]
    fn too_many_clusters_is_an_error() {
        let pts = vec![vec24(&[0.0]); 2];
        assert!(matches!(lloyd_points(&pts, 3, 0, 10), Err(Error::Parameter(_))));
    }

    #[test]
    fn duplicate_starts_are_repaired() {
        // All points identical: every Forgy start duplicates, so all but one
        // cluster begin empty and must be refilled.
        let pts = vec![vec24(&[0.4, 0.6]); 7];
        let fit = lloyd_points(&pts, 4, 1, 300).unwrap();
        let mut counts = [0; 4];
        for &l in &fit.labels {
            counts[l] += 1;
        }
        assert!(counts.iter().all(|&c| c > 0));
        assert_eq!(fit.wcss, 0.0);
    }

    #[test]
    fn single_restart_equals_lloyd() {
        let pts: Vec<Hourly> = (0..12).map(|i| vec24(&[(i % 5) as f64 / 5.0, (i % 3) as f64 / 3.0])).collect();
        let best = best_of_restarts_points(&pts, &KmeansParams::new(3, 77).with_restarts(1)).unwrap();
        let one = lloyd_points(&pts, 3, 77, DEFAULT_MAX_ITERS).unwrap();
        assert_eq!(best, one);
    }

    #[test]
    fn wcss_of_two_member_cluster_is_half_squared_distance() {
        let a = vec24(&[0.0, 0.2, 0.9]);
        let b = vec24(&[0.6, 0.2, 0.1]);
        let fit = lloyd_points(&[a, b], 1, 0, 10).unwrap();
        let d = euclidean_distance(&a, &b);
        assert!((fit.wcss - d * d / 2.0).abs() < 1e-12);
    }
}
