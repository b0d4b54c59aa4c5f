//! Per-(cluster, group) sufficient statistics.
//!
//! Each cell stores the member count, the coordinate sum and the sum of squared
//! norms. For a fixed centroid `mu` the cell's squared-distance total follows from
//! `sum_sq - 2 mu . sum_x + count |mu|^2`, so moving one object costs O(d).

use alloc::vec;
use alloc::vec::Vec;

use crate::data::{check_consistent, dot, ClusterAssignment, FeatureMatrix, GroupLabels};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SuffStats {
    k: usize,
    g: usize,
    d: usize,
    count: Vec<usize>,
    sum_x: Vec<f64>,
    sum_sq: Vec<f64>,
    cluster_size: Vec<usize>,
}

impl SuffStats {
    pub fn build(
        data: &FeatureMatrix,
        labels: &GroupLabels,
        assignment: &ClusterAssignment,
    ) -> Result<Self> {
        check_consistent(data, labels, assignment)?;
        let (k, g, d) = (assignment.k(), labels.g(), data.d());
        let mut stats = Self {
            k,
            g,
            d,
            count: vec![0; k * g],
            sum_x: vec![0.0; k * g * d],
            sum_sq: vec![0.0; k * g],
            cluster_size: vec![0; k],
        };
        for (i, x) in data.rows().enumerate() {
            stats.add(assignment.cluster_of(i), labels.group_of(i), x);
        }
        Ok(stats)
    }

    #[inline]
    fn cell(&self, c: usize, s: usize) -> usize {
        c * self.g + s
    }

    fn add(&mut self, c: usize, s: usize, x: &[f64]) {
        let cell = self.cell(c, s);
        self.count[cell] += 1;
        self.cluster_size[c] += 1;
        self.sum_sq[cell] += dot(x, x);
        for (acc, v) in self.sum_x[cell * self.d..(cell + 1) * self.d]
            .iter_mut()
            .zip(x)
        {
            *acc += v;
        }
    }

    fn remove(&mut self, c: usize, s: usize, x: &[f64]) {
        let cell = self.cell(c, s);
        self.count[cell] -= 1;
        self.cluster_size[c] -= 1;
        let sums = &mut self.sum_x[cell * self.d..(cell + 1) * self.d];
        if self.count[cell] == 0 {
            // an empty cell is exactly zero, not accumulated residue
            self.sum_sq[cell] = 0.0;
            sums.fill(0.0);
        } else {
            self.sum_sq[cell] -= dot(x, x);
            for (acc, v) in sums.iter_mut().zip(x) {
                *acc -= v;
            }
        }
    }

    /// Moves object `i` between clusters in O(d).
    ///
    /// The caller guarantees `i` currently sits in `from`; the statistics do not
    /// track individual memberships.
    pub fn move_object(
        &mut self,
        i: usize,
        from: usize,
        to: usize,
        data: &FeatureMatrix,
        labels: &GroupLabels,
    ) -> Result<()> {
        if from >= self.k || to >= self.k {
            return Err(Error::OutOfRange {
                what: "cluster",
                index: from.max(to),
                bound: self.k,
            });
        }
        if i >= data.n() {
            return Err(Error::OutOfRange {
                what: "object",
                index: i,
                bound: data.n(),
            });
        }
        if from == to || self.cluster_size[from] <= 1 {
            return Err(Error::RejectedMove {
                object: i,
                from,
                to,
            });
        }
        let s = labels.group_of(i);
        if self.count(from, s) == 0 {
            return Err(Error::Invalid(
                "object's group is absent from the source cluster",
            ));
        }
        let x = data.row(i);
        self.remove(from, s, x);
        self.add(to, s, x);
        Ok(())
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn g(&self) -> usize {
        self.g
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn count(&self, c: usize, s: usize) -> usize {
        self.count[self.cell(c, s)]
    }

    #[inline]
    pub fn sum_x(&self, c: usize, s: usize) -> &[f64] {
        let cell = self.cell(c, s);
        &self.sum_x[cell * self.d..(cell + 1) * self.d]
    }

    #[inline]
    pub fn sum_sq(&self, c: usize, s: usize) -> f64 {
        self.sum_sq[self.cell(c, s)]
    }

    #[inline]
    pub fn cluster_size(&self, c: usize) -> usize {
        self.cluster_size[c]
    }

    /// `sum ||x - mu||^2` over the cell's members.
    pub fn sq_dist_total(&self, c: usize, s: usize, mu: &[f64]) -> f64 {
        let n = self.count(c, s);
        if n == 0 {
            return 0.0;
        }
        let v = self.sum_sq(c, s) - 2.0 * dot(mu, self.sum_x(c, s)) + n as f64 * dot(mu, mu);
        v.max(0.0)
    }

    /// Mean squared distance of the cell's members to `mu`; `None` for an empty cell.
    pub fn group_loss(&self, c: usize, s: usize, mu: &[f64]) -> Option<f64> {
        let n = self.count(c, s);
        (n > 0).then(|| self.sq_dist_total(c, s, mu) / n as f64)
    }
}
