//! Cluster detection (DBSCAN) and polarization metrics.

use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;

use crate::model::{dist_sq, euclidean};

/// DBSCAN labeling of a point set. `labels[i]` is the cluster of point `i`,
/// `None` for noise. Cluster ids are dense, `0..n_clusters`, numbered in
/// order of discovery along the ascending point-index scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterLabeling {
    pub labels: Vec<Option<usize>>,
    pub n_clusters: usize,
    pub eps: f64,
    pub min_pts: usize,
}

impl ClusterLabeling {
    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }

    /// Member indices per cluster, each ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.n_clusters];
        for (idx, label) in self.labels.iter().enumerate() {
            if let Some(c) = *label {
                members[c].push(idx);
            }
        }
        members
    }
}

/// Per-iteration snapshot of the population geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    pub iteration: u64,
    pub n_clusters: usize,
    /// Mean over clusters of the mean squared distance to the cluster
    /// centroid. Zero when no cluster was found.
    pub avg_cluster_variance: f64,
    /// Mean pairwise distance between cluster centroids; `None` below two
    /// clusters.
    pub avg_inter_cluster_dist: Option<f64>,
    /// Smallest pairwise distance between cluster centroids.
    pub min_inter_cluster_dist: Option<f64>,
    /// Sum of distances over all unordered point pairs.
    pub pairwise_spread: f64,
    pub pool_size: usize,
}

/// Grid over cells of side `eps`: every neighbor within `eps` of a point
/// lives in one of the 3^d cells around it.
struct GridIndex {
    cells: HashMap<Vec<i64>, Vec<usize>>,
    dim: usize,
    eps: f64,
}

impl GridIndex {
    fn build<P: AsRef<[f64]>>(points: &[P], eps: f64) -> Self {
        let dim = points.first().map_or(0, |p| p.as_ref().len());
        let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (idx, p) in points.iter().enumerate() {
            cells.entry(cell_of(p.as_ref(), eps)).or_default().push(idx);
        }
        GridIndex { cells, dim, eps }
    }

    /// Indices within `eps` of point `idx`, itself included, ascending.
    fn neighbors<P: AsRef<[f64]>>(&self, points: &[P], idx: usize) -> Vec<usize> {
        let pos = points[idx].as_ref();
        let center = cell_of(pos, self.eps);
        let eps_sq = self.eps * self.eps;
        let mut found = Vec::new();
        let mut offset = vec![-1i64; self.dim];
        let mut probe = vec![0i64; self.dim];
        loop {
            for d in 0..self.dim {
                probe[d] = center[d] + offset[d];
            }
            if let Some(cell) = self.cells.get(&probe) {
                for &cand in cell {
                    if dist_sq(pos, points[cand].as_ref()) <= eps_sq {
                        found.push(cand);
                    }
                }
            }
            // Odometer over {-1, 0, 1}^dim.
            let mut d = 0;
            loop {
                if d == self.dim {
                    found.sort_unstable();
                    return found;
                }
                offset[d] += 1;
                if offset[d] <= 1 {
                    break;
                }
                offset[d] = -1;
                d += 1;
            }
        }
    }
}

fn cell_of(pos: &[f64], eps: f64) -> Vec<i64> {
    pos.iter().map(|x| (x / eps).floor() as i64).collect()
}

/// DBSCAN over `points`. A point is a core point when at least `min_pts`
/// points (itself included) lie within distance `eps` of it. Clusters grow
/// from core points in ascending index order; a border point reachable from
/// several clusters joins the one that reaches it first. Everything
/// unclaimed is noise. The result is a pure function of the input order.
pub fn dbscan<P: AsRef<[f64]>>(points: &[P], eps: f64, min_pts: usize) -> ClusterLabeling {
    assert!(eps > 0.0 && eps.is_finite(), "eps must be positive, got {eps}");
    assert!(min_pts >= 1, "min_pts must be at least 1");
    let n = points.len();
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut n_clusters = 0;
    if n == 0 {
        return ClusterLabeling { labels, n_clusters, eps, min_pts };
    }

    let grid = GridIndex::build(points, eps);
    let mut visited = vec![false; n];
    let mut queue: VecDeque<usize> = VecDeque::new();

    for start in 0..n {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let neighborhood = grid.neighbors(points, start);
        if neighborhood.len() < min_pts {
            continue; // noise unless a later cluster claims it as border
        }
        let cluster = n_clusters;
        n_clusters += 1;
        labels[start] = Some(cluster);
        queue.extend(neighborhood);
        while let Some(p) = queue.pop_front() {
            if labels[p].is_none() {
                labels[p] = Some(cluster);
            }
            if !visited[p] {
                visited[p] = true;
                let reach = grid.neighbors(points, p);
                if reach.len() >= min_pts {
                    queue.extend(reach);
                }
            }
        }
    }

    ClusterLabeling { labels, n_clusters, eps, min_pts }
}

/// Centroids of the labeled clusters, indexed by cluster id. Noise points do
/// not contribute.
pub fn cluster_centroids<P: AsRef<[f64]>>(points: &[P], labeling: &ClusterLabeling) -> Vec<Vec<f64>> {
    assert_eq!(points.len(), labeling.labels.len(), "labeling does not match point set");
    let dim = points.first().map_or(0, |p| p.as_ref().len());
    let mut sums = vec![vec![0.0; dim]; labeling.n_clusters];
    let mut counts = vec![0usize; labeling.n_clusters];
    for (p, label) in points.iter().zip(&labeling.labels) {
        if let Some(c) = *label {
            for (s, x) in sums[c].iter_mut().zip(p.as_ref()) {
                *s += x;
            }
            counts[c] += 1;
        }
    }
    for (sum, &count) in sums.iter_mut().zip(&counts) {
        debug_assert!(count > 0, "empty cluster id");
        for s in sum.iter_mut() {
            *s /= count as f64;
        }
    }
    sums
}

/// Mean over clusters of the within-cluster mean squared distance to the
/// centroid. Noise points are excluded. Zero when there are no clusters.
pub fn cluster_variance<P: AsRef<[f64]>>(points: &[P], labeling: &ClusterLabeling) -> f64 {
    if labeling.n_clusters == 0 {
        return 0.0;
    }
    let centroids = cluster_centroids(points, labeling);
    let mut sq_sums = vec![0.0; labeling.n_clusters];
    let mut counts = vec![0usize; labeling.n_clusters];
    for (p, label) in points.iter().zip(&labeling.labels) {
        if let Some(c) = *label {
            sq_sums[c] += dist_sq(p.as_ref(), &centroids[c]);
            counts[c] += 1;
        }
    }
    let mut total = 0.0;
    for (sq, &count) in sq_sums.iter().zip(&counts) {
        total += sq / count as f64;
    }
    total / labeling.n_clusters as f64
}

/// `(average, minimum)` pairwise distance between cluster centroids, or
/// `None` when fewer than two clusters exist.
pub fn inter_cluster_distances<P: AsRef<[f64]>>(
    points: &[P],
    labeling: &ClusterLabeling,
) -> Option<(f64, f64)> {
    if labeling.n_clusters < 2 {
        return None;
    }
    let centroids = cluster_centroids(points, labeling);
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut pairs = 0usize;
    for i in 0..centroids.len() {
        for j in (i + 1)..centroids.len() {
            let d = euclidean(&centroids[i], &centroids[j]);
            sum += d;
            min = min.min(d);
            pairs += 1;
        }
    }
    Some((sum / pairs as f64, min))
}

/// Sum of Euclidean distances over all unordered point pairs. Computed as a
/// fixed-order reduction, so the result is identical on any thread count.
/// One dimension reduces to absolute differences and runs in n log n via the
/// sorted prefix form.
pub fn pairwise_spread<P: AsRef<[f64]> + Sync>(points: &[P]) -> f64 {
    if points.first().is_some_and(|p| p.as_ref().len() == 1) {
        let mut xs: Vec<f64> = points.iter().map(|p| p.as_ref()[0]).collect();
        xs.sort_unstable_by(f64::total_cmp);
        let n = xs.len();
        return xs
            .iter()
            .enumerate()
            .map(|(i, x)| (2.0 * i as f64 - (n - 1) as f64) * x)
            .sum();
    }
    let partials: Vec<f64> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let pi = points[i].as_ref();
            let mut acc = 0.0;
            for pj in &points[i + 1..] {
                acc += euclidean(pi, pj.as_ref());
            }
            acc
        })
        .collect();
    partials.iter().sum()
}

/// All metrics of one population snapshot.
pub fn compute_metrics<P: AsRef<[f64]> + Sync>(
    points: &[P],
    eps: f64,
    min_pts: usize,
    iteration: u64,
    pool_size: usize,
) -> MetricsRecord {
    let labeling = dbscan(points, eps, min_pts);
    let inter = inter_cluster_distances(points, &labeling);
    MetricsRecord {
        iteration,
        n_clusters: labeling.n_clusters,
        avg_cluster_variance: cluster_variance(points, &labeling),
        avg_inter_cluster_dist: inter.map(|(avg, _)| avg),
        min_inter_cluster_dist: inter.map(|(_, min)| min),
        pairwise_spread: pairwise_spread(points),
        pool_size,
    }
}
