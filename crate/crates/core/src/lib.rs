//! Cluster-level group representativity fairness for centroid clustering.
//!
//! The crate is `no_std` (it needs `alloc`) and contains the numerical core:
//!
//! * [`data`]: feature matrix, group labels, assignments and centroids;
//! * [`stats`]: per-(cluster, group) sufficient statistics with O(d) moves;
//! * [`kmeans`]: seeded Lloyd k-means, the baseline and initialiser;
//! * [`fair`]: the worst-off-group refinement (greedy reassignment plus
//!   smoothed gradient steps on the centroids) and its stopping rule;
//! * [`metrics`]: cluster disparity, average cluster disparity and the
//!   objectives used for reporting.
//!
//! IO, dataset preprocessing and the experiment runner live in the `fairkm`
//! crate.
#![no_std]

extern crate alloc;

pub mod data;
pub mod error;
pub mod fair;
pub mod kmeans;
pub mod metrics;
pub mod smooth;
pub mod stats;

pub use data::{CentroidSet, ClusterAssignment, FeatureMatrix, GroupLabels};
pub use error::{Error, Result};
pub use fair::{run_fair, FairParams, FairRunState, IterationRecord, StopMode};
pub use kmeans::{lloyd, LloydResult};
pub use metrics::{metric_report, Disparity, MetricReport};
pub use stats::SuffStats;
