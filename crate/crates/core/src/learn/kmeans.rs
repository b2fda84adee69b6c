use nalgebra::DMatrix;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded_rng;

/// Rounds of Lloyd on the rank-reduced rows used to settle the seeds.
const INIT_ROUNDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub assignments: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub iterations: usize,
    pub objective: f64,
    pub converged: bool,
}

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = dist2(point, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Sum of squared distances from each point to its assigned center.
pub fn kmeans_objective(points: &[Vec<f64>], assignments: &[usize], centers: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &a)| dist2(p, &centers[a]))
        .sum()
}

fn means(points: &[Vec<f64>], assignments: &[usize], centers: &mut [Vec<f64>]) -> Vec<usize> {
    let dim = points[0].len();
    let mut sizes = vec![0usize; centers.len()];
    let mut sums = vec![vec![0.0; dim]; centers.len()];
    for (p, &a) in points.iter().zip(assignments) {
        sizes[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (c, center) in centers.iter_mut().enumerate() {
        if sizes[c] > 0 {
            *center = sums[c].iter().map(|s| s / sizes[c] as f64).collect();
        }
    }
    sizes
}

/// Lloyd iterations from the given centers until assignments stop changing
/// or `max_iter` rounds. An emptied cluster is reseeded at the point
/// farthest from its current center.
pub fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>, max_iter: usize) -> ClusteringResult {
    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(p, &centers).0).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let sizes = means(points, &assignments, &mut centers);
        for c in 0..centers.len() {
            if sizes[c] == 0 {
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        dist2(&points[a], &centers[assignments[a]])
                            .total_cmp(&dist2(&points[b], &centers[assignments[b]]))
                    })
                    .unwrap_or(0);
                log::debug!("cluster {c} emptied; reseeding at point {far}");
                centers[c] = points[far].clone();
                assignments[far] = c;
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centers).0).collect();
        if next == assignments {
            converged = true;
            break;
        }
        assignments = next;
    }
    let objective = kmeans_objective(points, &assignments, &centers);
    ClusteringResult {
        assignments,
        centers,
        iterations,
        objective,
        converged,
    }
}

/// Lloyd started from a given partition (its means become the centers).
pub fn lloyd_from_assignment(points: &[Vec<f64>], assignment: &[usize], num_clusters: usize, max_iter: usize) -> ClusteringResult {
    let dim = points[0].len();
    let mut centers = vec![vec![0.0; dim]; num_clusters];
    means(points, assignment, &mut centers);
    lloyd(points, centers, max_iter)
}

/// Greedy k-means++: each new center is the best of `2 + ln k` candidates
/// drawn proportionally to squared distance.
fn kmeans_pp(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seeded_rng(seed, 0);
    let n = points.len();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut closest: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = closest.iter().sum();
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let cand = if total > 0.0 {
                let mut target = rng.random::<f64>() * total;
                let mut idx = n - 1;
                for (i, d) in closest.iter().enumerate() {
                    if target < *d {
                        idx = i;
                        break;
                    }
                    target -= d;
                }
                idx
            } else {
                rng.random_range(0..n)
            };
            let updated: Vec<f64> = points
                .iter()
                .zip(&closest)
                .map(|(p, c)| c.min(dist2(p, &points[cand])))
                .collect();
            let potential: f64 = updated.iter().sum();
            if best.as_ref().is_none_or(|b| potential < b.0) {
                best = Some((potential, cand, updated));
            }
        }
        let (_, idx, updated) = best.expect("at least one trial");
        centers.push(points[idx].clone());
        closest = updated;
    }
    centers
}

/// K-means with spectral initialization: seeds come from k-means++ plus a
/// few Lloyd rounds on the rank-`num_clusters` SVD approximation of the
/// stacked features, then Lloyd runs on the original rows.
pub fn kmeans_spectral(features: &[Vec<f64>], num_clusters: usize, seed: u64, max_iter: usize) -> Result<ClusteringResult> {
    let n = features.len();
    if num_clusters < 2 || n < num_clusters {
        return Err(Error::InvalidConfig(format!(
            "need n >= num_clusters >= 2, got n = {n}, num_clusters = {num_clusters}"
        )));
    }
    let k = features[0].len();
    if k == 0 || features.iter().any(|f| f.len() != k) {
        return Err(Error::InvalidConfig("features must share a nonzero dimension".into()));
    }
    if features.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("features must be finite".into()));
    }
    let f = DMatrix::from_fn(n, k, |i, j| features[i][j]);
    let reduced: Vec<Vec<f64>> = if num_clusters >= k {
        features.to_vec()
    } else {
        let svd = f.svd(true, true);
        let (u, v) = (svd.u.expect("u requested"), svd.v_t.expect("v requested"));
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let mut approx = DMatrix::<f64>::zeros(n, k);
        for &r in &order[..num_clusters] {
            approx += svd.singular_values[r] * u.column(r) * v.row(r);
        }
        (0..n).map(|i| approx.row(i).iter().copied().collect()).collect()
    };
    let seeds = kmeans_pp(&reduced, num_clusters, seed);
    let init = lloyd(&reduced, seeds, INIT_ROUNDS);
    Ok(lloyd(features, init.centers, max_iter))
}
