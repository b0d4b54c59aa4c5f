//! Naive reference implementations and random instances shared by the
//! integration tests. Nothing here calls into the incremental code paths.
#![allow(dead_code, clippy::needless_range_loop)]

use fairkm_core::{CentroidSet, ClusterAssignment, FeatureMatrix, GroupLabels};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub data: FeatureMatrix,
    pub labels: GroupLabels,
    pub assignment: ClusterAssignment,
    pub centroids: CentroidSet,
}

/// Random instance with every cluster and every group non-empty.
/// Centroids are cluster means jittered by up to `jitter` per coordinate.
pub fn random_instance(
    seed: u64,
    max_n: usize,
    max_d: usize,
    max_k: usize,
    max_g: usize,
) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(1..=max_k);
    let g = rng.gen_range(1..=max_g);
    let d = rng.gen_range(1..=max_d);
    let n = rng.gen_range((k.max(g) + 2)..=max_n.max(k.max(g) + 2));
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| rng.gen_range(-4.0..4.0)).collect())
        .collect();
    let mut clusters = Vec::with_capacity(n);
    let mut groups = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n * d);
    for i in 0..n {
        let c = if i < k { i } else { rng.gen_range(0..k) };
        let s = if i < g {
            g - 1 - i
        } else {
            rng.gen_range(0..g)
        };
        // groups get different spreads so losses differ
        let spread = 0.5 + s as f64;
        for j in 0..d {
            values.push(centers[c][j] + spread * rng.gen_range(-1.0..1.0));
        }
        clusters.push(c);
        groups.push(s);
    }
    let data = FeatureMatrix::new(n, d, values).unwrap();
    let labels = GroupLabels::from_indices(groups).unwrap();
    let assignment = ClusterAssignment::new(clusters, k).unwrap();
    let mut mu = naive_means(&data, &assignment);
    for v in mu.iter_mut().flatten() {
        *v += rng.gen_range(-0.5..0.5);
    }
    let centroids = CentroidSet::from_rows(&mu).unwrap();
    Instance {
        data,
        labels,
        assignment,
        centroids,
    }
}

pub fn naive_means(data: &FeatureMatrix, a: &ClusterAssignment) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; data.d()]; a.k()];
    let mut counts = vec![0.0; a.k()];
    for i in 0..data.n() {
        let c = a.cluster_of(i);
        counts[c] += 1.0;
        for j in 0..data.d() {
            out[c][j] += data.row(i)[j];
        }
    }
    for c in 0..a.k() {
        for v in &mut out[c] {
            *v /= counts[c];
        }
    }
    out
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    let mut t = 0.0;
    for j in 0..a.len() {
        t += (a[j] - b[j]) * (a[j] - b[j]);
    }
    t
}

/// Mean squared distance of group `s` members of cluster `c` to `mu`, by direct summation.
pub fn naive_group_loss(
    data: &FeatureMatrix,
    labels: &GroupLabels,
    clusters: &[usize],
    c: usize,
    s: usize,
    mu: &[f64],
) -> Option<f64> {
    let mut total = 0.0;
    let mut m = 0usize;
    for i in 0..data.n() {
        if clusters[i] == c && labels.group_of(i) == s {
            total += dist2(data.row(i), mu);
            m += 1;
        }
    }
    (m > 0).then(|| total / m as f64)
}

/// Sum over clusters of the worst present group's loss, recomputed from scratch.
pub fn naive_j(
    data: &FeatureMatrix,
    labels: &GroupLabels,
    clusters: &[usize],
    centroids: &CentroidSet,
) -> f64 {
    let mut j = 0.0;
    for c in 0..centroids.k() {
        let mut worst = f64::NEG_INFINITY;
        for s in 0..labels.g() {
            if let Some(l) = naive_group_loss(data, labels, clusters, c, s, centroids.centroid(c)) {
                worst = worst.max(l);
            }
        }
        j += worst;
    }
    j
}

/// Scalar log-sum-exp relaxation of cluster `c` at centroid `mu`, straightforward form.
pub fn naive_cluster_j_approx(
    data: &FeatureMatrix,
    labels: &GroupLabels,
    clusters: &[usize],
    c: usize,
    mu: &[f64],
    phi: f64,
) -> f64 {
    let losses: Vec<f64> = (0..labels.g())
        .filter_map(|s| naive_group_loss(data, labels, clusters, c, s, mu))
        .collect();
    let m = losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + losses
        .iter()
        .map(|l| (phi * (l - m)).exp())
        .sum::<f64>()
        .ln()
        / phi
}

pub fn sizes(clusters: &[usize], k: usize) -> Vec<usize> {
    let mut s = vec![0; k];
    for &c in clusters {
        s[c] += 1;
    }
    s
}
