//! Fairness and utility measures evaluated directly from the data.
//!
//! Everything here recomputes distances object by object; it shares no code
//! path with the incremental statistics used by the optimiser.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::{
    check_centroids, check_consistent, sq_dist, CentroidSet, ClusterAssignment, FeatureMatrix,
    GroupLabels,
};
use crate::error::{Error, Result};

/// Reported disparity when the best-off group's loss is (numerically) zero.
pub const CD_CAP: f64 = 1e6;
/// Minimum loss below which a disparity ratio is treated as degenerate.
pub const CD_MIN_LOSS: f64 = 1e-12;

/// A disparity value, flagged when the ratio had a vanishing denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Disparity {
    pub value: f64,
    pub degenerate: bool,
}

/// Percentage gap between the worst-off and best-off present groups of one cluster.
pub fn cluster_disparity(losses: &[Option<f64>]) -> Disparity {
    let mut present = losses.iter().flatten().copied();
    let Some(first) = present.next() else {
        return Disparity {
            value: 0.0,
            degenerate: false,
        };
    };
    let (lo, hi) = present.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi <= lo {
        Disparity {
            value: 0.0,
            degenerate: false,
        }
    } else if lo < CD_MIN_LOSS {
        Disparity {
            value: CD_CAP,
            degenerate: true,
        }
    } else {
        Disparity {
            value: 100.0 * (hi - lo) / lo,
            degenerate: false,
        }
    }
}

/// Mean of per-cluster disparities; degenerate if any input is.
pub fn average_cluster_disparity(per_cluster: &[Disparity]) -> Disparity {
    if per_cluster.is_empty() {
        return Disparity {
            value: 0.0,
            degenerate: false,
        };
    }
    let sum: f64 = per_cluster.iter().map(|d| d.value).sum();
    Disparity {
        value: sum / per_cluster.len() as f64,
        degenerate: per_cluster.iter().any(|d| d.degenerate),
    }
}

/// Mean squared centroid distance of every (cluster, group) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupLossTable {
    k: usize,
    g: usize,
    counts: Vec<usize>,
    losses: Vec<Option<f64>>,
}

impl GroupLossTable {
    pub fn compute(
        data: &FeatureMatrix,
        labels: &GroupLabels,
        assignment: &ClusterAssignment,
        centroids: &CentroidSet,
    ) -> Result<Self> {
        check_consistent(data, labels, assignment)?;
        check_centroids(data, assignment, centroids)?;
        let (k, g) = (assignment.k(), labels.g());
        let mut counts = vec![0usize; k * g];
        let mut totals = vec![0.0; k * g];
        for (i, x) in data.rows().enumerate() {
            let c = assignment.cluster_of(i);
            let cell = c * g + labels.group_of(i);
            counts[cell] += 1;
            totals[cell] += sq_dist(x, centroids.centroid(c));
        }
        let losses = counts
            .iter()
            .zip(&totals)
            .map(|(&n, &t)| (n > 0).then(|| t / n as f64))
            .collect();
        Ok(Self {
            k,
            g,
            counts,
            losses,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn loss(&self, c: usize, s: usize) -> Option<f64> {
        self.losses[c * self.g + s]
    }

    pub fn count(&self, c: usize, s: usize) -> usize {
        self.counts[c * self.g + s]
    }

    pub fn cluster(&self, c: usize) -> &[Option<f64>] {
        &self.losses[c * self.g..(c + 1) * self.g]
    }

    pub fn losses(&self) -> &[Option<f64>] {
        &self.losses
    }

    pub fn cluster_disparity(&self, c: usize) -> Disparity {
        cluster_disparity(self.cluster(c))
    }

    pub fn average_cluster_disparity(&self) -> Disparity {
        let per: Vec<_> = (0..self.k).map(|c| self.cluster_disparity(c)).collect();
        average_cluster_disparity(&per)
    }

    /// Sum over clusters of the worst present group's loss.
    pub fn worst_group_sum(&self) -> f64 {
        (0..self.k)
            .map(|c| {
                self.cluster(c)
                    .iter()
                    .flatten()
                    .copied()
                    .fold(0.0, f64::max)
            })
            .sum()
    }

    /// Total squared distance over all objects divided by `n`.
    pub fn kmeans_normalized(&self) -> f64 {
        let n: usize = self.counts.iter().sum();
        let total: f64 = self
            .counts
            .iter()
            .zip(&self.losses)
            .map(|(&m, l)| l.map_or(0.0, |l| l * m as f64))
            .sum();
        total / n as f64
    }
}

/// Worst group's mean squared centroid distance taken over the whole assignment.
pub fn fair_kmeans_objective(
    data: &FeatureMatrix,
    labels: &GroupLabels,
    assignment: &ClusterAssignment,
    centroids: &CentroidSet,
) -> Result<f64> {
    check_consistent(data, labels, assignment)?;
    check_centroids(data, assignment, centroids)?;
    let g = labels.g();
    let mut totals = vec![0.0; g];
    let mut sizes = vec![0usize; g];
    for (i, x) in data.rows().enumerate() {
        let s = labels.group_of(i);
        sizes[s] += 1;
        totals[s] += sq_dist(x, centroids.centroid(assignment.cluster_of(i)));
    }
    let mut worst = f64::NEG_INFINITY;
    for s in 0..g {
        if sizes[s] == 0 {
            return Err(Error::EmptyGroup(s));
        }
        worst = worst.max(totals[s] / sizes[s] as f64);
    }
    Ok(worst)
}

/// Everything reported for one clustering.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricReport {
    pub k: usize,
    pub g: usize,
    /// Average cluster disparity, in percent.
    pub acd: f64,
    pub acd_degenerate: bool,
    /// k-means objective divided by the number of objects.
    pub kmeans_objective: f64,
    /// Worst-group objective divided by the number of clusters.
    pub our_objective: f64,
    pub fair_kmeans_objective: f64,
    pub cluster_disparities: Vec<f64>,
    /// Row-major `k x g`; `None` where the group is absent from the cluster.
    pub group_losses: Vec<Option<f64>>,
}

pub fn metric_report(
    data: &FeatureMatrix,
    labels: &GroupLabels,
    assignment: &ClusterAssignment,
    centroids: &CentroidSet,
) -> Result<MetricReport> {
    let table = GroupLossTable::compute(data, labels, assignment, centroids)?;
    let per: Vec<_> = (0..table.k()).map(|c| table.cluster_disparity(c)).collect();
    let acd = average_cluster_disparity(&per);
    Ok(MetricReport {
        k: table.k(),
        g: table.g(),
        acd: acd.value,
        acd_degenerate: acd.degenerate,
        kmeans_objective: table.kmeans_normalized(),
        our_objective: table.worst_group_sum() / table.k() as f64,
        fair_kmeans_objective: fair_kmeans_objective(data, labels, assignment, centroids)?,
        cluster_disparities: per.iter().map(|d| d.value).collect(),
        group_losses: table.losses().to_vec(),
    })
}
