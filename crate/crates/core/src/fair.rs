//! Worst-off-group refinement of a centroid clustering.
//!
//! Starting from an existing clustering, every iteration runs
//!
//! 1. a reassignment pass: objects are visited in index order and moved to the
//!    first cluster (in index order) that strictly lowers `J`, the sum over
//!    clusters of the worst present group's mean squared centroid distance.
//!    Centroids stay fixed for the whole pass.
//! 2. a centroid pass: each centroid takes one gradient step on the
//!    log-sum-exp relaxation of `J` with the assignment held fixed.
//!
//! Groups with no member in a cluster take no part in that cluster's max,
//! log-sum-exp or softmax weights.

use alloc::vec;
use alloc::vec::Vec;

use libm::log;

use crate::data::{check_centroids, check_consistent, sq_dist, CentroidSet, ClusterAssignment};
use crate::data::{FeatureMatrix, GroupLabels};
use crate::error::{Error, Result};
use crate::metrics::{average_cluster_disparity, cluster_disparity, Disparity};
use crate::smooth::{smooth_max, softmax_weights};
use crate::stats::SuffStats;

/// Reassignment passes between full rebuilds of the sufficient statistics.
pub const REBUILD_EVERY: usize = 50;

/// How a run decides to terminate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum StopMode {
    /// Run exactly `max_iters` iterations.
    Fixed,
    /// Stop once the windowed utility loss exceeds the windowed fairness gain,
    /// or at `max_iters`.
    Contrastive,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FairParams {
    pub k: usize,
    /// Sharpness of the smooth max.
    pub phi: f64,
    /// Gradient step size.
    pub eta: f64,
    pub max_iters: usize,
    pub stop_window: usize,
    pub stop_mode: StopMode,
}

impl FairParams {
    /// `phi = 3`, `eta = 0.01`, 200 iterations, window 10, fixed stopping.
    pub fn new(k: usize) -> Self {
        Self {
            k,
            phi: 3.0,
            eta: 0.01,
            max_iters: 200,
            stop_window: 10,
            stop_mode: StopMode::Fixed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Invalid("k must be at least 1"));
        }
        if !(self.phi > 0.0 && self.phi.is_finite()) {
            return Err(Error::Invalid("phi must be positive and finite"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Invalid("eta must be positive and finite"));
        }
        if self.max_iters == 0 {
            return Err(Error::Invalid("max_iters must be at least 1"));
        }
        if self.stop_window == 0 {
            return Err(Error::Invalid("stop_window must be at least 1"));
        }
        Ok(())
    }
}

/// Snapshot taken after each iteration (and once for the starting point).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationRecord {
    /// Sum over clusters of the worst present group's loss (not divided by k).
    pub j: f64,
    pub j_approx: f64,
    /// k-means objective divided by n.
    pub kmeans_normalized: f64,
    pub acd: f64,
    pub acd_degenerate: bool,
    /// Row-major `k x g` group losses.
    pub losses: Vec<Option<f64>>,
    /// Objects moved by this iteration's reassignment pass.
    pub moves: usize,
}

/// Loss of every present group in cluster `c` around `mu`.
fn present_losses(stats: &SuffStats, c: usize, mu: &[f64], out: &mut Vec<(usize, f64)>) {
    out.clear();
    for s in 0..stats.g() {
        if let Some(l) = stats.group_loss(c, s, mu) {
            out.push((s, l));
        }
    }
}

/// Log-sum-exp relaxation of cluster `c`'s worst-group loss at centroid `mu`.
pub fn cluster_j_approx(stats: &SuffStats, c: usize, mu: &[f64], phi: f64) -> f64 {
    let mut buf = Vec::with_capacity(stats.g());
    present_losses(stats, c, mu, &mut buf);
    smooth_max(buf.iter().map(|&(_, l)| l), phi).unwrap_or(0.0)
}

/// Gradient of [`cluster_j_approx`] with respect to `mu`.
///
/// `-2 sum_s w_s (mean_s - mu)` with `w` the softmax of `phi * loss` over the
/// groups present in the cluster.
pub fn cluster_gradient(stats: &SuffStats, c: usize, mu: &[f64], phi: f64) -> Vec<f64> {
    let mut buf = Vec::with_capacity(stats.g());
    present_losses(stats, c, mu, &mut buf);
    let losses: Vec<f64> = buf.iter().map(|&(_, l)| l).collect();
    let mut weights = vec![0.0; losses.len()];
    softmax_weights(&losses, phi, &mut weights);
    let mut grad = vec![0.0; mu.len()];
    for (&(s, _), &w) in buf.iter().zip(&weights) {
        let n = stats.count(c, s) as f64;
        for ((g, &sx), &m) in grad.iter_mut().zip(stats.sum_x(c, s)).zip(mu) {
            *g += w * (sx / n - m);
        }
    }
    for g in &mut grad {
        *g *= -2.0;
    }
    grad
}

/// The contrastive / fixed stopping test.
///
/// `initial` is the record of the starting clustering and `history[t - 1]` the
/// record after iteration `t`. Percentages compare iteration `t` with
/// iteration `t - window`.
pub fn should_stop(
    initial: &IterationRecord,
    history: &[IterationRecord],
    window: usize,
    max_iters: usize,
    mode: StopMode,
) -> Result<bool> {
    let t = history.len();
    if t >= max_iters {
        return Ok(true);
    }
    if mode == StopMode::Fixed || t < window || t == 0 {
        return Ok(false);
    }
    let past = if t == window {
        initial
    } else {
        &history[t - window - 1]
    };
    let now = &history[t - 1];
    if past.j.is_nan() || past.j <= 0.0 {
        return Err(Error::DegenerateObjective {
            what: "fairness objective at window start",
            value: past.j,
        });
    }
    if past.kmeans_normalized.is_nan() || past.kmeans_normalized <= 0.0 {
        return Err(Error::DegenerateObjective {
            what: "k-means objective at window start",
            value: past.kmeans_normalized,
        });
    }
    let fairness_gain = 100.0 * (past.j - now.j) / past.j;
    let utility_loss =
        100.0 * (now.kmeans_normalized - past.kmeans_normalized) / past.kmeans_normalized;
    Ok(utility_loss > fairness_gain)
}

struct MoveEffect {
    group: usize,
    from_max: f64,
    to_max: f64,
    delta: f64,
}

/// Mutable state of one refinement run.
#[derive(Debug, Clone)]
pub struct FairRunState {
    assignment: ClusterAssignment,
    centroids: CentroidSet,
    stats: SuffStats,
    iteration: usize,
    initial: Option<IterationRecord>,
    history: Vec<IterationRecord>,
    // k x g losses at the current centroids, kept in step with `stats`
    losses: Vec<Option<f64>>,
    cluster_max: Vec<f64>,
    passes_since_rebuild: usize,
}

impl FairRunState {
    pub fn new(
        data: &FeatureMatrix,
        labels: &GroupLabels,
        assignment: ClusterAssignment,
        centroids: CentroidSet,
    ) -> Result<Self> {
        check_consistent(data, labels, &assignment)?;
        check_centroids(data, &assignment, &centroids)?;
        let stats = SuffStats::build(data, labels, &assignment)?;
        let (k, g) = (assignment.k(), labels.g());
        let mut state = Self {
            assignment,
            centroids,
            stats,
            iteration: 0,
            initial: None,
            history: Vec::new(),
            losses: vec![None; k * g],
            cluster_max: vec![0.0; k],
            passes_since_rebuild: 0,
        };
        state.refresh_losses();
        Ok(state)
    }

    pub fn assignment(&self) -> &ClusterAssignment {
        &self.assignment
    }

    pub fn centroids(&self) -> &CentroidSet {
        &self.centroids
    }

    pub fn stats(&self) -> &SuffStats {
        &self.stats
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Record of the starting clustering, once [`run_fair`] has taken it.
    pub fn initial(&self) -> Option<&IterationRecord> {
        self.initial.as_ref()
    }

    pub fn history(&self) -> &[IterationRecord] {
        &self.history
    }

    pub fn k(&self) -> usize {
        self.assignment.k()
    }

    pub fn g(&self) -> usize {
        self.stats.g()
    }

    /// Consumes the state, returning the final clustering.
    pub fn into_parts(self) -> (ClusterAssignment, CentroidSet) {
        (self.assignment, self.centroids)
    }

    fn refresh_cell(&mut self, c: usize, s: usize) {
        let g = self.g();
        self.losses[c * g + s] = self.stats.group_loss(c, s, self.centroids.centroid(c));
    }

    fn refresh_cluster_max(&mut self, c: usize) {
        let g = self.g();
        self.cluster_max[c] = self.losses[c * g..(c + 1) * g]
            .iter()
            .flatten()
            .copied()
            .fold(0.0, f64::max);
    }

    fn refresh_losses(&mut self) {
        for c in 0..self.k() {
            for s in 0..self.g() {
                self.refresh_cell(c, s);
            }
            self.refresh_cluster_max(c);
        }
    }

    /// Mean squared centroid distance of group `s` inside cluster `c`;
    /// `None` when the group has no member there.
    pub fn group_loss(&self, c: usize, s: usize) -> Option<f64> {
        self.losses[c * self.g() + s]
    }

    /// Losses of every group in cluster `c`.
    pub fn cluster_losses(&self, c: usize) -> &[Option<f64>] {
        let g = self.g();
        &self.losses[c * g..(c + 1) * g]
    }

    /// Present group with the largest loss in cluster `c`, lowest index on ties.
    pub fn worst_group(&self, c: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (s, l) in self.cluster_losses(c).iter().enumerate() {
            if let Some(l) = *l {
                if best.is_none_or(|(_, b)| l > b) {
                    best = Some((s, l));
                }
            }
        }
        best.map(|(s, _)| s)
    }

    /// Sum over clusters of the worst present group's loss.
    pub fn objective_j(&self) -> f64 {
        self.cluster_max.iter().sum()
    }

    pub fn objective_j_approx(&self, phi: f64) -> f64 {
        (0..self.k())
            .map(|c| cluster_j_approx(&self.stats, c, self.centroids.centroid(c), phi))
            .sum()
    }

    pub fn cluster_disparity(&self, c: usize) -> Disparity {
        cluster_disparity(self.cluster_losses(c))
    }

    pub fn average_cluster_disparity(&self) -> Disparity {
        let per: Vec<_> = (0..self.k()).map(|c| self.cluster_disparity(c)).collect();
        average_cluster_disparity(&per)
    }

    /// k-means objective over `n` from the sufficient statistics.
    pub fn kmeans_normalized(&self) -> f64 {
        let mut total = 0.0;
        let mut n = 0usize;
        for c in 0..self.k() {
            let mu = self.centroids.centroid(c);
            for s in 0..self.g() {
                total += self.stats.sq_dist_total(c, s, mu);
                n += self.stats.count(c, s);
            }
        }
        total / n as f64
    }

    fn check_move(&self, data: &FeatureMatrix, i: usize, to: usize) -> Result<usize> {
        if i >= data.n() {
            return Err(Error::OutOfRange {
                what: "object",
                index: i,
                bound: data.n(),
            });
        }
        if to >= self.k() {
            return Err(Error::OutOfRange {
                what: "cluster",
                index: to,
                bound: self.k(),
            });
        }
        let from = self.assignment.cluster_of(i);
        if from == to || self.stats.cluster_size(from) <= 1 {
            return Err(Error::RejectedMove {
                object: i,
                from,
                to,
            });
        }
        Ok(from)
    }

    fn move_effect(
        &self,
        x: &[f64],
        s: usize,
        from: usize,
        to: usize,
        dist_from: f64,
    ) -> MoveEffect {
        let g = self.g();
        let n_from = self.stats.count(from, s);
        let n_to = self.stats.count(to, s);

        let from_loss = if n_from > 1 {
            let total = self.losses[from * g + s].unwrap_or(0.0) * n_from as f64 - dist_from;
            Some(total.max(0.0) / (n_from - 1) as f64)
        } else {
            None
        };
        let to_total = self.losses[to * g + s].map_or(0.0, |l| l * n_to as f64)
            + sq_dist(x, self.centroids.centroid(to));
        let to_loss = to_total / (n_to + 1) as f64;

        let max_with = |c: usize, replaced: Option<f64>| -> f64 {
            let mut m = replaced.unwrap_or(f64::NEG_INFINITY);
            for (t, l) in self.losses[c * g..(c + 1) * g].iter().enumerate() {
                if t != s {
                    if let Some(l) = *l {
                        m = m.max(l);
                    }
                }
            }
            m
        };
        let from_max = max_with(from, from_loss);
        let to_max = max_with(to, Some(to_loss));
        let delta = (from_max - self.cluster_max[from]) + (to_max - self.cluster_max[to]);
        MoveEffect {
            group: s,
            from_max,
            to_max,
            delta,
        }
    }

    /// Change in `J` from moving object `i` into cluster `to`, centroids fixed.
    /// Touches only the two affected clusters.
    pub fn delta_j_move(
        &self,
        data: &FeatureMatrix,
        labels: &GroupLabels,
        i: usize,
        to: usize,
    ) -> Result<f64> {
        let from = self.check_move(data, i, to)?;
        let x = data.row(i);
        let dist_from = sq_dist(x, self.centroids.centroid(from));
        Ok(self
            .move_effect(x, labels.group_of(i), from, to, dist_from)
            .delta)
    }

    fn commit_move(
        &mut self,
        data: &FeatureMatrix,
        labels: &GroupLabels,
        i: usize,
        from: usize,
        to: usize,
        effect: &MoveEffect,
    ) -> Result<()> {
        self.stats.move_object(i, from, to, data, labels)?;
        self.assignment.set(i, to);
        self.refresh_cell(from, effect.group);
        self.refresh_cell(to, effect.group);
        self.cluster_max[from] = effect.from_max;
        self.cluster_max[to] = effect.to_max;
        Ok(())
    }

    /// Applies a legal move regardless of its effect on `J`.
    pub fn apply_move(
        &mut self,
        data: &FeatureMatrix,
        labels: &GroupLabels,
        i: usize,
        to: usize,
    ) -> Result<()> {
        let from = self.check_move(data, i, to)?;
        self.stats.move_object(i, from, to, data, labels)?;
        self.assignment.set(i, to);
        let s = labels.group_of(i);
        self.refresh_cell(from, s);
        self.refresh_cell(to, s);
        self.refresh_cluster_max(from);
        self.refresh_cluster_max(to);
        Ok(())
    }

    /// One greedy reassignment pass; returns the number of committed moves.
    pub fn reassign_estep(&mut self, data: &FeatureMatrix, labels: &GroupLabels) -> Result<usize> {
        check_consistent(data, labels, &self.assignment)?;
        let mut moves = 0;
        for i in 0..data.n() {
            let x = data.row(i);
            let s = labels.group_of(i);
            let mut from = self.assignment.cluster_of(i);
            let mut dist_from = sq_dist(x, self.centroids.centroid(from));
            for to in 0..self.k() {
                if to == from || self.stats.cluster_size(from) <= 1 {
                    continue;
                }
                let effect = self.move_effect(x, s, from, to, dist_from);
                if effect.delta < 0.0 {
                    self.commit_move(data, labels, i, from, to, &effect)?;
                    moves += 1;
                    from = to;
                    dist_from = sq_dist(x, self.centroids.centroid(from));
                }
            }
        }
        self.passes_since_rebuild += 1;
        if self.passes_since_rebuild >= REBUILD_EVERY {
            self.stats = SuffStats::build(data, labels, &self.assignment)?;
            self.passes_since_rebuild = 0;
            self.refresh_losses();
        }
        Ok(moves)
    }

    /// Gradient of the relaxed objective with respect to centroid `c`.
    pub fn gradient_mu(&self, c: usize, phi: f64) -> Vec<f64> {
        cluster_gradient(&self.stats, c, self.centroids.centroid(c), phi)
    }

    /// One gradient step per centroid, in cluster order.
    pub fn mstep_update(&mut self, phi: f64, eta: f64) {
        for c in 0..self.k() {
            let grad = self.gradient_mu(c, phi);
            for (m, g) in self.centroids.centroid_mut(c).iter_mut().zip(&grad) {
                *m -= eta * g;
            }
        }
        self.refresh_losses();
    }

    pub fn record(&self, phi: f64, moves: usize) -> IterationRecord {
        let acd = self.average_cluster_disparity();
        IterationRecord {
            j: self.objective_j(),
            j_approx: self.objective_j_approx(phi),
            kmeans_normalized: self.kmeans_normalized(),
            acd: acd.value,
            acd_degenerate: acd.degenerate,
            losses: self.losses.clone(),
            moves,
        }
    }

    /// Upper bound on the smooth-max slack of cluster `c`: `ln(groups present) / phi`.
    pub fn smoothing_slack(&self, c: usize, phi: f64) -> f64 {
        let present = self.cluster_losses(c).iter().flatten().count();
        log(present as f64) / phi
    }
}

/// Refines `init` until the stopping rule fires.
pub fn run_fair(
    data: &FeatureMatrix,
    labels: &GroupLabels,
    params: &FairParams,
    init: (ClusterAssignment, CentroidSet),
) -> Result<FairRunState> {
    params.validate()?;
    if init.0.k() != params.k {
        return Err(Error::ShapeMismatch {
            what: "initial clustering k",
            expected: params.k,
            found: init.0.k(),
        });
    }
    let mut state = FairRunState::new(data, labels, init.0, init.1)?;
    let initial = state.record(params.phi, 0);
    state.initial = Some(initial);
    loop {
        let moves = state.reassign_estep(data, labels)?;
        state.mstep_update(params.phi, params.eta);
        let rec = state.record(params.phi, moves);
        state.history.push(rec);
        state.iteration += 1;
        let initial = state.initial.as_ref().expect("set above");
        if should_stop(
            initial,
            &state.history,
            params.stop_window,
            params.max_iters,
            params.stop_mode,
        )? {
            break;
        }
    }
    Ok(state)
}
