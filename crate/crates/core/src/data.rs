//! Value types shared by every stage of the pipeline.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Squared Euclidean distance between two equally sized slices.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let t = x - y;
            t * t
        })
        .sum()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_finite(what: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { what, index }),
        None => Ok(()),
    }
}

/// Dense row-major `n x d` matrix of finite features.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureMatrix {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("feature matrix needs at least one row"));
        }
        if d == 0 {
            return Err(Error::Invalid("feature matrix needs at least one column"));
        }
        if values.len() != n * d {
            return Err(Error::ShapeMismatch {
                what: "feature matrix values",
                expected: n * d,
                found: values.len(),
            });
        }
        check_finite("feature matrix", &values)?;
        Ok(Self { n, d, values })
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * d);
        for r in rows {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::ShapeMismatch {
                    what: "feature matrix row",
                    expected: d,
                    found: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), d, values)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.d)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            if i >= self.n {
                return Err(Error::OutOfRange {
                    what: "row",
                    index: i,
                    bound: self.n,
                });
            }
            values.extend_from_slice(self.row(i));
        }
        Self::new(indices.len(), self.d, values)
    }
}

/// Sensitive-group membership of every object.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupLabels {
    labels: Vec<usize>,
    names: Vec<String>,
}

impl GroupLabels {
    /// Every group in `names` must be used by at least one object.
    pub fn new(labels: Vec<usize>, names: Vec<String>) -> Result<Self> {
        let g = names.len();
        if g == 0 {
            return Err(Error::Invalid("at least one group is required"));
        }
        let mut seen = vec![false; g];
        for &s in &labels {
            if s >= g {
                return Err(Error::OutOfRange {
                    what: "group",
                    index: s,
                    bound: g,
                });
            }
            seen[s] = true;
        }
        if let Some(s) = seen.iter().position(|&b| !b) {
            return Err(Error::EmptyGroup(s));
        }
        Ok(Self { labels, names })
    }

    /// Convenience constructor naming groups `0..g`.
    pub fn from_indices(labels: Vec<usize>) -> Result<Self> {
        let g = labels.iter().copied().max().map_or(0, |m| m + 1);
        let names = (0..g).map(|s| alloc::format!("{s}")).collect();
        Self::new(labels, names)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of groups.
    #[inline]
    pub fn g(&self) -> usize {
        self.names.len()
    }

    #[inline]
    pub fn group_of(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.g()];
        for &s in &self.labels {
            c[s] += 1;
        }
        c
    }

    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let labels = indices
            .iter()
            .map(|&i| {
                self.labels.get(i).copied().ok_or(Error::OutOfRange {
                    what: "object",
                    index: i,
                    bound: self.labels.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels, self.names.clone())
    }
}

/// Object-to-cluster map with `k` non-empty clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    k: usize,
}

impl ClusterAssignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Invalid("k must be at least 1"));
        }
        let mut sizes = vec![0usize; k];
        for &c in &labels {
            if c >= k {
                return Err(Error::OutOfRange {
                    what: "cluster",
                    index: c,
                    bound: k,
                });
            }
            sizes[c] += 1;
        }
        if let Some(c) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::EmptyCluster(c));
        }
        Ok(Self { labels, k })
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn cluster_of(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &c in &self.labels {
            s[c] += 1;
        }
        s
    }

    /// Reassigns one object. Callers keep clusters non-empty.
    pub(crate) fn set(&mut self, i: usize, c: usize) {
        self.labels[i] = c;
    }
}

/// `k x d` centroid matrix.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CentroidSet {
    k: usize,
    d: usize,
    values: Vec<f64>,
}

impl CentroidSet {
    pub fn new(k: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if k == 0 || d == 0 {
            return Err(Error::Invalid("centroid set needs k >= 1 and d >= 1"));
        }
        if values.len() != k * d {
            return Err(Error::ShapeMismatch {
                what: "centroid values",
                expected: k * d,
                found: values.len(),
            });
        }
        check_finite("centroids", &values)?;
        Ok(Self { k, d, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * d);
        for r in rows {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::ShapeMismatch {
                    what: "centroid row",
                    expected: d,
                    found: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), d, values)
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn centroid(&self, c: usize) -> &[f64] {
        &self.values[c * self.d..(c + 1) * self.d]
    }

    #[inline]
    pub(crate) fn centroid_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.values[c * self.d..(c + 1) * self.d]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Checks that a data matrix, group labels and an assignment describe the same objects.
pub(crate) fn check_consistent(
    data: &FeatureMatrix,
    labels: &GroupLabels,
    assignment: &ClusterAssignment,
) -> Result<()> {
    if labels.len() != data.n() {
        return Err(Error::ShapeMismatch {
            what: "group labels",
            expected: data.n(),
            found: labels.len(),
        });
    }
    if assignment.len() != data.n() {
        return Err(Error::ShapeMismatch {
            what: "cluster assignment",
            expected: data.n(),
            found: assignment.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_centroids(
    data: &FeatureMatrix,
    assignment: &ClusterAssignment,
    centroids: &CentroidSet,
) -> Result<()> {
    if centroids.d() != data.d() {
        return Err(Error::ShapeMismatch {
            what: "centroid dimension",
            expected: data.d(),
            found: centroids.d(),
        });
    }
    if centroids.k() != assignment.k() {
        return Err(Error::ShapeMismatch {
            what: "centroid count",
            expected: assignment.k(),
            found: centroids.k(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_features() {
        let err = FeatureMatrix::new(2, 1, vec![0.0, f64::NAN]).unwrap_err();
        assert_eq!(
            err,
            Error::NonFinite {
                what: "feature matrix",
                index: 1
            }
        );
    }

    #[test]
    fn rejects_empty_cluster_and_unused_group() {
        assert_eq!(
            ClusterAssignment::new(vec![0, 0, 2], 3).unwrap_err(),
            Error::EmptyCluster(1)
        );
        let names = vec![String::from("a"), String::from("b")];
        assert_eq!(
            GroupLabels::new(vec![0, 0], names).unwrap_err(),
            Error::EmptyGroup(1)
        );
    }

    #[test]
    fn rows_are_row_major() {
        let m = FeatureMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(m.row(1), &[3.0, 4.0]);
        assert_eq!(sq_dist(m.row(0), m.row(1)), 8.0);
    }
}
