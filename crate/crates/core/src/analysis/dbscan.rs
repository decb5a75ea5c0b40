use alloc::collections::VecDeque;
use alloc::vec::Vec;

use super::AnalysisError;
use crate::nn::Matrix;

/// Label of points that belong to no cluster.
pub const NOISE: i64 = -1;
const UNVISITED: i64 = -2;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn region(points: &Matrix, i: usize, eps_sq: f64, out: &mut Vec<usize>) {
    out.clear();
    let p = points.row(i);
    out.extend((0..points.rows()).filter(|&j| sq_dist(p, points.row(j)) <= eps_sq));
}

/// Density-based clustering of the rows of `points`.
///
/// A point is core when at least `min_samples` points, itself included, lie
/// within Euclidean distance `eps`. Clusters are grown breadth-first from the
/// lowest-index unassigned core point and numbered from 0 in that order; a
/// border point joins the first cluster that reaches it. Unreached points get
/// [`NOISE`].
pub fn cluster_dbscan(points: &Matrix, eps: f64, min_samples: usize) -> Result<Vec<i64>, AnalysisError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(AnalysisError::InvalidParameter("eps must be positive"));
    }
    if min_samples == 0 {
        return Err(AnalysisError::InvalidParameter("min_samples must be at least 1"));
    }
    let eps_sq = eps * eps;
    let n = points.rows();
    let mut labels = alloc::vec![UNVISITED; n];
    let mut neighbors = Vec::new();
    let mut queue = VecDeque::new();
    let mut next = 0;
    for i in 0..n {
        if labels[i] != UNVISITED {
            continue;
        }
        region(points, i, eps_sq, &mut neighbors);
        if neighbors.len() < min_samples {
            labels[i] = NOISE;
            continue;
        }
        let c = next;
        next += 1;
        labels[i] = c;
        queue.extend(neighbors.iter().copied());
        while let Some(j) = queue.pop_front() {
            if labels[j] == NOISE {
                labels[j] = c;
            }
            if labels[j] != UNVISITED {
                continue;
            }
            labels[j] = c;
            region(points, j, eps_sq, &mut neighbors);
            if neighbors.len() >= min_samples {
                queue.extend(neighbors.iter().copied());
            }
        }
    }
    Ok(labels)
}

pub fn cluster_count(labels: &[i64]) -> usize {
    labels.iter().copied().max().map_or(0, |m| (m + 1).max(0) as usize)
}

/// Distance from every row to its `k`-th nearest other row.
pub fn kth_neighbor_distances(points: &Matrix, k: usize) -> Result<Vec<f64>, AnalysisError> {
    let n = points.rows();
    if k == 0 || k >= n {
        return Err(AnalysisError::InvalidParameter("neighbor rank must lie in 1..n"));
    }
    let mut best = alloc::vec![f64::INFINITY; k];
    Ok((0..n)
        .map(|i| {
            best.iter_mut().for_each(|b| *b = f64::INFINITY);
            let p = points.row(i);
            for j in (0..n).filter(|&j| j != i) {
                let d = sq_dist(p, points.row(j));
                if d < best[k - 1] {
                    let pos = best.partition_point(|&b| b <= d);
                    best.copy_within(pos..k - 1, pos + 1);
                    best[pos] = d;
                }
            }
            libm::sqrt(best[k - 1])
        })
        .collect())
}

/// Linearly interpolated quantile of `values`, `q` in `[0, 1]`.
pub fn quantile(values: &[f64], q: f64) -> Result<f64, AnalysisError> {
    if values.is_empty() || !(0.0..=1.0).contains(&q) {
        return Err(AnalysisError::InvalidParameter("quantile needs data and q in [0, 1]"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Ok(sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Neighborhood radius taken from the data: the `q` quantile of the
/// distances to each point's `k`-th nearest neighbor.
pub fn default_eps(points: &Matrix, k: usize, q: f64) -> Result<f64, AnalysisError> {
    quantile(&kth_neighbor_distances(points, k)?, q)
}
