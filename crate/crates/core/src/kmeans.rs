//! Lloyd's k-means with k-means++ seeding.
//!
//! Distances are squared Euclidean; inertia is the sum of squared distances
//! from each point to its assigned centroid. Assignment ties go to the lower
//! centroid index, so a run is a pure function of `(points, k, seed)`.

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KMeansError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("need at least k={k} points, got {points}")]
    TooFewPoints { points: usize, k: usize },
    #[error("point {index} has {got} dims, expected {expected}")]
    RaggedPoints { index: usize, expected: usize, got: usize },
    #[error("max_iter must be at least 1")]
    ZeroIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeans {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after every assignment step, ending with the final one.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

impl KMeans {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KScanRow {
    pub k: usize,
    pub inertia: f64,
    pub silhouette: f64,
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_points(points: &[Vec<f64>]) -> Result<(), KMeansError> {
    let expected = points.first().map_or(0, Vec::len);
    for (index, p) in points.iter().enumerate() {
        if p.len() != expected {
            return Err(KMeansError::RaggedPoints { index, expected, got: p.len() });
        }
    }
    Ok(())
}

/// Clusters `points` into `k` groups.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<KMeans, KMeansError> {
    if k == 0 {
        return Err(KMeansError::ZeroK);
    }
    if max_iter == 0 {
        return Err(KMeansError::ZeroIterations);
    }
    if points.len() < k {
        return Err(KMeansError::TooFewPoints { points: points.len(), k });
    }
    check_points(points)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = Vec::with_capacity(k);
    extend_plus_plus(points, &mut centroids, k, &mut rng);
    Ok(lloyd(points, centroids, max_iter, tol))
}

/// Adds k-means++ centres until there are `k`.
fn extend_plus_plus(points: &[Vec<f64>], centroids: &mut Vec<Vec<f64>>, k: usize, rng: &mut ChaCha8Rng) {
    if centroids.is_empty() && k > 0 {
        let first = rng.random_range(0..points.len());
        centroids.push(points[first].clone());
    }
    while centroids.len() < k {
        let weights: Vec<f64> = points
            .iter()
            .map(|p| {
                centroids
                    .iter()
                    .map(|c| squared_distance(p, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = weights.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                acc += w;
                if acc > target && *w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // every point already coincides with a centre
            centroids.len() % points.len()
        };
        centroids.push(points[pick].clone());
    }
}

/// Nearest-centroid assignment. Empty clusters take the point farthest from
/// its own centroid among clusters that can spare one.
fn assign(points: &[Vec<f64>], centroids: &mut [Vec<f64>]) -> (Vec<usize>, f64) {
    let k = centroids.len();
    let mut labels = Vec::with_capacity(points.len());
    let mut dists = Vec::with_capacity(points.len());
    for p in points {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (j, c) in centroids.iter().enumerate() {
            let d = squared_distance(p, c);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        labels.push(best);
        dists.push(best_d);
    }

    let mut sizes = vec![0usize; k];
    for &l in &labels {
        sizes[l] += 1;
    }
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let donor = (0..points.len())
            .filter(|&i| sizes[labels[i]] > 1)
            .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
        let Some(i) = donor else { break };
        sizes[labels[i]] -= 1;
        sizes[empty] += 1;
        labels[i] = empty;
        dists[i] = 0.0;
        centroids[empty] = points[i].clone();
    }

    let inertia = dists.iter().sum();
    (labels, inertia)
}

fn update(points: &[Vec<f64>], labels: &[usize], old: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = old.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; dim]; old.len()];
    let mut counts = vec![0usize; old.len()];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(p) {
            *s += x;
        }
    }
    sums.into_iter()
        .zip(counts)
        .zip(old)
        .map(|((mut s, n), prev)| {
            if n == 0 {
                prev.clone()
            } else {
                s.iter_mut().for_each(|x| *x /= n as f64);
                s
            }
        })
        .collect()
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iter: usize, tol: f64) -> KMeans {
    let mut history = Vec::new();
    let mut iterations = 0;
    for _ in 0..max_iter {
        let (labels, inertia) = assign(points, &mut centroids);
        history.push(inertia);
        let next = update(points, &labels, &centroids);
        let shift = next
            .iter()
            .zip(&centroids)
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        iterations += 1;
        if shift < tol || shift == 0.0 {
            break;
        }
    }
    // final assignment against the converged centroids
    let (assignments, inertia) = assign(points, &mut centroids);
    history.push(inertia);
    KMeans { assignments, centroids, inertia, inertia_history: history, iterations }
}

/// Mean silhouette coefficient (Euclidean). Points in singleton clusters
/// score 0; a single cluster scores 0.
pub fn silhouette(points: &[Vec<f64>], assignments: &[usize], k: usize) -> f64 {
    let n = points.len();
    if n == 0 || k < 2 {
        return 0.0;
    }
    let mut sizes = vec![0usize; k];
    for &a in assignments {
        sizes[a] += 1;
    }
    let mut total = 0.0;
    for i in 0..n {
        let own = assignments[i];
        if sizes[own] <= 1 {
            continue;
        }
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if i != j {
                sums[assignments[j]] += squared_distance(&points[i], &points[j]).sqrt();
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if b.is_finite() {
            let denom = a.max(b);
            if denom > 0.0 {
                total += (b - a) / denom;
            }
        }
    }
    total / n as f64
}

/// Best of `n_init` seeded runs by final inertia. Run 0 uses `seed`
/// itself, so `n_init = 1` is the same as [`kmeans`].
pub fn kmeans_restarts(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    n_init: usize,
    max_iter: usize,
    tol: f64,
) -> Result<KMeans, KMeansError> {
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut best = kmeans(points, k, seed, max_iter, tol)?;
    for _ in 1..n_init {
        let run = kmeans(points, k, seeds.random(), max_iter, tol)?;
        if run.inertia < best.inertia {
            best = run;
        }
    }
    Ok(best)
}

/// Runs k-means for every k in `k_range` and reports inertia and silhouette.
///
/// Each k warm-starts from the previous k's centroids plus one k-means++
/// centre, which keeps inertia non-increasing in k. No k is selected.
pub fn scan_k(
    points: &[Vec<f64>],
    k_range: RangeInclusive<usize>,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<Vec<KScanRow>, KMeansError> {
    let (lo, hi) = (*k_range.start(), *k_range.end());
    if lo == 0 {
        return Err(KMeansError::ZeroK);
    }
    if max_iter == 0 {
        return Err(KMeansError::ZeroIterations);
    }
    if points.len() < hi {
        return Err(KMeansError::TooFewPoints { points: points.len(), k: hi });
    }
    check_points(points)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = Vec::new();
    let mut rows = Vec::new();
    for k in lo..=hi {
        extend_plus_plus(points, &mut centroids, k, &mut rng);
        let run = lloyd(points, centroids, max_iter, tol);
        rows.push(KScanRow {
            k,
            inertia: run.inertia,
            silhouette: silhouette(points, &run.assignments, k),
        });
        centroids = run.centroids;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(centers: &[[f64; 2]], per: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut pts = Vec::new();
        let mut labels = Vec::new();
        for (l, c) in centers.iter().enumerate() {
            for _ in 0..per {
                pts.push(vec![
                    c[0] + rng.random_range(-0.5..0.5),
                    c[1] + rng.random_range(-0.5..0.5),
                ]);
                labels.push(l);
            }
        }
        (pts, labels)
    }

    #[test]
    fn two_blobs_are_recovered() {
        let (pts, truth) = blobs(&[[0.0, 0.0], [50.0, 50.0]], 20);
        let run = kmeans(&pts, 2, 7, 100, 1e-9).unwrap();
        let first = run.assignments[0];
        for (a, t) in run.assignments.iter().zip(&truth) {
            assert_eq!(*a == first, *t == 0);
        }
    }

    #[test]
    fn k_equals_n_gives_zero_inertia() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 3.0], vec![5.0, 5.0]];
        let run = kmeans(&pts, 4, 3, 10, 0.0).unwrap();
        assert_eq!(run.inertia, 0.0);
        let mut a = run.assignments.clone();
        a.sort();
        a.dedup();
        assert_eq!(a.len(), 4);
    }

    #[test]
    fn restarts_keep_the_best_run() {
        let (pts, _) = blobs(&[[0.0, 0.0], [5.0, 0.0], [0.0, 5.0], [5.0, 5.0], [2.5, 9.0]], 20);
        let single = kmeans(&pts, 5, 3, 100, 1e-9).unwrap();
        assert_eq!(kmeans_restarts(&pts, 5, 3, 1, 100, 1e-9).unwrap(), single);
        let best = kmeans_restarts(&pts, 5, 3, 8, 100, 1e-9).unwrap();
        assert!(best.inertia <= single.inertia);
        assert_eq!(best, kmeans_restarts(&pts, 5, 3, 8, 100, 1e-9).unwrap());
    }

    #[test]
    fn same_seed_same_result() {
        let (pts, _) = blobs(&[[0.0, 0.0], [5.0, 1.0], [2.0, 9.0]], 15);
        assert_eq!(kmeans(&pts, 3, 11, 50, 1e-6).unwrap(), kmeans(&pts, 3, 11, 50, 1e-6).unwrap());
    }

    #[test]
    fn too_few_points() {
        let pts = vec![vec![0.0]];
        assert_eq!(
            kmeans(&pts, 2, 0, 10, 0.0).unwrap_err(),
            KMeansError::TooFewPoints { points: 1, k: 2 }
        );
        assert_eq!(kmeans(&pts, 0, 0, 10, 0.0).unwrap_err(), KMeansError::ZeroK);
    }

    #[test]
    fn empty_cluster_is_repaired() {
        // duplicates force k-means++ to reuse a point; repair must still
        // leave every cluster non-empty
        let pts = vec![vec![0.0], vec![0.0], vec![0.0], vec![10.0]];
        let run = kmeans(&pts, 3, 1, 10, 0.0).unwrap();
        assert!(run.cluster_sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn inertia_never_increases() {
        let (pts, _) = blobs(&[[0.0, 0.0], [3.0, 0.0], [0.0, 3.0], [3.0, 3.0]], 25);
        for seed in 0..20 {
            let run = kmeans(&pts, 4, seed, 100, 0.0).unwrap();
            for w in run.inertia_history.windows(2) {
                assert!(w[1] <= w[0], "seed {seed}: {:?}", run.inertia_history);
            }
        }
    }

    #[test]
    fn scan_reports_every_k_with_monotone_inertia() {
        let (pts, _) = blobs(&[[0.0, 0.0], [30.0, 0.0], [0.0, 30.0]], 12);
        let rows = scan_k(&pts, 2..=6, 5, 100, 1e-9).unwrap();
        assert_eq!(rows.iter().map(|r| r.k).collect::<Vec<_>>(), vec![2, 3, 4, 5, 6]);
        for w in rows.windows(2) {
            assert!(w[1].inertia <= w[0].inertia);
        }
        let best = rows.iter().max_by(|a, b| a.silhouette.total_cmp(&b.silhouette)).unwrap();
        assert_eq!(best.k, 3);
    }

    #[test]
    fn silhouette_of_perfect_split_is_high() {
        let pts = vec![vec![0.0], vec![0.1], vec![10.0], vec![10.1]];
        let s = silhouette(&pts, &[0, 0, 1, 1], 2);
        // a = 0.1, b ~= 10 for every point
        assert!(s > 0.98);
    }
}
