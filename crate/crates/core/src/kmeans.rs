//! Classical Lloyd k-means, used as the utilitarian baseline and as the
//! starting point of the fair refinement.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{check_centroids, sq_dist, CentroidSet, ClusterAssignment, FeatureMatrix};
use crate::error::{Error, Result};

/// Safety cap on Lloyd iterations.
pub const DEFAULT_LLOYD_MAX_ITERS: usize = 300;

/// Outcome of [`lloyd`].
#[derive(Debug, Clone, PartialEq)]
pub struct LloydResult {
    pub assignment: ClusterAssignment,
    pub centroids: CentroidSet,
    /// Number of mean-update steps performed.
    pub iterations: usize,
    /// Raw k-means objective after every mean update.
    pub objective_trace: Vec<f64>,
    /// False when the iteration cap was hit before a fixed point.
    pub converged: bool,
}

fn cmp_rows(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Index of the first occurrence of every distinct row, ascending.
pub fn distinct_rows(data: &FeatureMatrix) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..data.n()).collect();
    // stable: the first member of each run of equal rows has the smallest index
    idx.sort_by(|&a, &b| cmp_rows(data.row(a), data.row(b)));
    idx.dedup_by(|a, b| cmp_rows(data.row(*a), data.row(*b)).is_eq());
    idx.sort_unstable();
    idx
}

/// Picks `k` distinct data rows uniformly at random without replacement.
pub fn init_centroids(data: &FeatureMatrix, k: usize, seed: u64) -> Result<CentroidSet> {
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1"));
    }
    let distinct = distinct_rows(data);
    if k > distinct.len() {
        return Err(Error::Initialization {
            k,
            distinct_rows: distinct.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = index::sample(&mut rng, distinct.len(), k);
    let mut values = Vec::with_capacity(k * data.d());
    for p in picks.iter() {
        values.extend_from_slice(data.row(distinct[p]));
    }
    CentroidSet::new(k, data.d(), values)
}

/// Nearest centroid per object (ties to the lowest index), then reseeds any
/// empty cluster with the object farthest from its assigned centroid.
pub fn assign_nearest(data: &FeatureMatrix, centroids: &CentroidSet) -> Result<ClusterAssignment> {
    if centroids.d() != data.d() {
        return Err(Error::ShapeMismatch {
            what: "centroid dimension",
            expected: data.d(),
            found: centroids.d(),
        });
    }
    let k = centroids.k();
    if k > data.n() {
        return Err(Error::Initialization {
            k,
            distinct_rows: data.n(),
        });
    }
    let mut labels = Vec::with_capacity(data.n());
    let mut dist = Vec::with_capacity(data.n());
    let mut sizes = vec![0usize; k];
    for x in data.rows() {
        let mut best = 0;
        let mut best_d = sq_dist(x, centroids.centroid(0));
        for c in 1..k {
            let dc = sq_dist(x, centroids.centroid(c));
            if dc < best_d {
                best = c;
                best_d = dc;
            }
        }
        labels.push(best);
        dist.push(best_d);
        sizes[best] += 1;
    }

    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut donor: Option<usize> = None;
        for i in 0..labels.len() {
            if sizes[labels[i]] <= 1 {
                continue;
            }
            if donor.is_none_or(|j| dist[i] > dist[j]) {
                donor = Some(i);
            }
        }
        let i = donor.ok_or(Error::EmptyCluster(empty))?;
        sizes[labels[i]] -= 1;
        labels[i] = empty;
        sizes[empty] += 1;
        // a reseeded object sits alone; never pick it again
        dist[i] = f64::NEG_INFINITY;
    }
    ClusterAssignment::new(labels, k)
}

/// Arithmetic mean of every cluster.
pub fn recompute_means(
    data: &FeatureMatrix,
    assignment: &ClusterAssignment,
) -> Result<CentroidSet> {
    if assignment.len() != data.n() {
        return Err(Error::ShapeMismatch {
            what: "cluster assignment",
            expected: data.n(),
            found: assignment.len(),
        });
    }
    let (k, d) = (assignment.k(), data.d());
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for (i, x) in data.rows().enumerate() {
        let c = assignment.cluster_of(i);
        counts[c] += 1;
        for (acc, v) in sums[c * d..(c + 1) * d].iter_mut().zip(x) {
            *acc += v;
        }
    }
    for c in 0..k {
        if counts[c] == 0 {
            return Err(Error::EmptyCluster(c));
        }
        let inv = counts[c] as f64;
        for v in &mut sums[c * d..(c + 1) * d] {
            *v /= inv;
        }
    }
    CentroidSet::new(k, d, sums)
}

/// Sum of squared distances to the assigned centroids, optionally divided by `n`.
pub fn kmeans_objective(
    data: &FeatureMatrix,
    assignment: &ClusterAssignment,
    centroids: &CentroidSet,
    normalized: bool,
) -> Result<f64> {
    if assignment.len() != data.n() {
        return Err(Error::ShapeMismatch {
            what: "cluster assignment",
            expected: data.n(),
            found: assignment.len(),
        });
    }
    check_centroids(data, assignment, centroids)?;
    let total: f64 = data
        .rows()
        .enumerate()
        .map(|(i, x)| sq_dist(x, centroids.centroid(assignment.cluster_of(i))))
        .sum();
    Ok(if normalized {
        total / data.n() as f64
    } else {
        total
    })
}

/// Lloyd iterations from `init` until the assignment stops changing or
/// `max_iters` mean updates have run.
pub fn lloyd_from(
    data: &FeatureMatrix,
    init: CentroidSet,
    max_iters: usize,
) -> Result<LloydResult> {
    if max_iters == 0 {
        return Err(Error::Invalid("max_iters must be at least 1"));
    }
    let mut centroids = init;
    let mut assignment = assign_nearest(data, &centroids)?;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        centroids = recompute_means(data, &assignment)?;
        iterations += 1;
        trace.push(kmeans_objective(data, &assignment, &centroids, false)?);
        let next = assign_nearest(data, &centroids)?;
        if next == assignment {
            converged = true;
            break;
        }
        assignment = next;
    }
    if !converged {
        // leave the pair consistent: centroids are the means of the returned assignment
        centroids = recompute_means(data, &assignment)?;
    }
    Ok(LloydResult {
        assignment,
        centroids,
        iterations,
        objective_trace: trace,
        converged,
    })
}

/// Seeded Lloyd k-means.
pub fn lloyd(data: &FeatureMatrix, k: usize, seed: u64, max_iters: usize) -> Result<LloydResult> {
    let init = init_centroids(data, k, seed)?;
    lloyd_from(data, init, max_iters)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> FeatureMatrix {
        FeatureMatrix::new(xs.len(), 1, xs.to_vec()).unwrap()
    }

    #[test]
    fn nearest_on_a_line() {
        let data = line(&[0.0, 2.0, 10.0, 12.0]);
        let mu = CentroidSet::new(2, 1, vec![1.0, 11.0]).unwrap();
        assert_eq!(assign_nearest(&data, &mu).unwrap().labels(), &[0, 0, 1, 1]);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let data = line(&[5.0, 0.0, 20.0, 10.0]);
        let mu = CentroidSet::new(3, 1, vec![0.0, 20.0, 10.0]).unwrap();
        // object 0 is equidistant to clusters 0 and 2
        assert_eq!(assign_nearest(&data, &mu).unwrap().cluster_of(0), 0);
    }

    #[test]
    fn empty_cluster_is_reseeded_with_farthest_object() {
        let data = line(&[0.0, 1.0, 2.0, 9.0]);
        let mu = CentroidSet::new(2, 1, vec![1.0, 100.0]).unwrap();
        let a = assign_nearest(&data, &mu).unwrap();
        assert_eq!(a.labels(), &[0, 0, 0, 1]);
    }

    #[test]
    fn means_of_pair_and_singleton() {
        let data = line(&[0.0, 2.0, 7.0]);
        let a = ClusterAssignment::new(vec![0, 0, 1], 2).unwrap();
        let mu = recompute_means(&data, &a).unwrap();
        assert_eq!(mu.values(), &[1.0, 7.0]);
    }

    #[test]
    fn objective_on_two_blobs() {
        let data = line(&[0.0, 2.0, 10.0, 12.0]);
        let a = ClusterAssignment::new(vec![0, 0, 1, 1], 2).unwrap();
        let mu = CentroidSet::new(2, 1, vec![1.0, 11.0]).unwrap();
        assert_eq!(kmeans_objective(&data, &a, &mu, false).unwrap(), 4.0);
        assert_eq!(kmeans_objective(&data, &a, &mu, true).unwrap(), 1.0);
        let at = CentroidSet::new(2, 1, vec![0.0, 10.0]).unwrap();
        let pts = line(&[0.0, 0.0, 10.0, 10.0]);
        assert_eq!(kmeans_objective(&pts, &a, &at, false).unwrap(), 0.0);
    }

    #[test]
    fn lloyd_separates_two_blobs() {
        let data = line(&[0.0, 2.0, 10.0, 12.0]);
        for seed in 0..20 {
            let r = lloyd(&data, 2, seed, DEFAULT_LLOYD_MAX_ITERS).unwrap();
            let l = r.assignment.labels();
            assert_eq!(l[0], l[1]);
            assert_eq!(l[2], l[3]);
            assert_ne!(l[0], l[2]);
            let mut mu = r.centroids.values().to_vec();
            mu.sort_by(f64::total_cmp);
            assert_eq!(mu, [1.0, 11.0]);
        }
    }

    #[test]
    fn k_one_is_global_mean_in_one_iteration() {
        let data = line(&[1.0, 2.0, 6.0]);
        let r = lloyd(&data, 1, 7, DEFAULT_LLOYD_MAX_ITERS).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.centroids.values(), &[3.0]);
    }

    #[test]
    fn init_with_k_equal_n_is_a_permutation() {
        let data = line(&[3.0, 1.0, 4.0, 1.5, 9.0]);
        let mu = init_centroids(&data, 5, 11).unwrap();
        let mut got = mu.values().to_vec();
        got.sort_by(f64::total_cmp);
        assert_eq!(got, [1.0, 1.5, 3.0, 4.0, 9.0]);
    }

    #[test]
    fn init_is_deterministic_and_rejects_large_k() {
        let data = line(&[0.0, 0.0, 1.0]);
        assert_eq!(
            init_centroids(&data, 2, 3).unwrap(),
            init_centroids(&data, 2, 3).unwrap()
        );
        assert_eq!(
            init_centroids(&data, 3, 3).unwrap_err(),
            Error::Initialization {
                k: 3,
                distinct_rows: 2
            }
        );
    }

    #[test]
    fn every_row_is_picked_by_some_seed() {
        let data = line(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let mut hits = [0usize; 10];
        for seed in 0..1000 {
            let mu = init_centroids(&data, 2, seed).unwrap();
            for &v in mu.values() {
                hits[v as usize] += 1;
            }
        }
        // 2000 draws over 10 rows; each row expects 200
        assert!(hits.iter().all(|&h| h > 0), "{hits:?}");
    }
}
