//! Multi-seed experiment campaigns: Lloyd baseline vs. fair refinement.

use std::path::PathBuf;

use fairkm_core::fair::{run_fair, FairParams, IterationRecord, StopMode};
use fairkm_core::kmeans::{lloyd, DEFAULT_LLOYD_MAX_ITERS};
use fairkm_core::{metric_report, FeatureMatrix, GroupLabels, MetricReport};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{load_csv, DatasetSchema, ProcessedDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    /// Preset name or schema file path.
    pub schema: String,
    /// Overrides the schema's sensitive column.
    pub sensitive: Option<String>,
    pub k: usize,
    pub phi: f64,
    pub eta: f64,
    pub runs: usize,
    pub base_seed: u64,
    pub max_iters: usize,
    pub stop_mode: StopMode,
    pub stop_window: usize,
    pub lloyd_max_iters: usize,
    /// Seeded row subsample taken after preprocessing.
    pub subsample: Option<usize>,
    /// Cluster whose per-iteration trace is kept for every seed.
    pub trace_cluster: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(dataset: impl Into<PathBuf>, schema: impl Into<String>) -> Self {
        Self {
            dataset: dataset.into(),
            schema: schema.into(),
            sensitive: None,
            k: 5,
            phi: 3.0,
            eta: 0.01,
            runs: 100,
            base_seed: 0,
            max_iters: 200,
            stop_mode: StopMode::Fixed,
            stop_window: 10,
            lloyd_max_iters: DEFAULT_LLOYD_MAX_ITERS,
            subsample: None,
            trace_cluster: None,
            out_dir: None,
        }
    }

    pub fn fair_params(&self) -> FairParams {
        FairParams {
            k: self.k,
            phi: self.phi,
            eta: self.eta,
            max_iters: self.max_iters,
            stop_window: self.stop_window,
            stop_mode: self.stop_mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Argument("runs must be at least 1".into()));
        }
        if self.lloyd_max_iters == 0 {
            return Err(Error::Argument("lloyd_max_iters must be at least 1".into()));
        }
        if let Some(c) = self.trace_cluster {
            if c >= self.k {
                return Err(Error::Argument(format!(
                    "trace cluster {c} out of range for k = {}",
                    self.k
                )));
            }
        }
        self.fair_params().validate()?;
        Ok(())
    }

    /// Loads the dataset under the configured schema (and subsample).
    pub fn load(&self) -> Result<ProcessedDataset> {
        let mut schema = DatasetSchema::resolve(&self.schema)?;
        if let Some(s) = &self.sensitive {
            schema = schema.with_sensitive(s)?;
        }
        let full = load_csv(&self.dataset, &schema)?;
        match self.subsample {
            Some(m) => full.subsample(m, self.base_seed),
            None => Ok(full),
        }
    }
}

/// The iteration trace of one run: starting record plus one per iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub initial: IterationRecord,
    pub history: Vec<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub lloyd_iterations: usize,
    pub fair_iterations: usize,
    pub baseline: MetricReport,
    pub fair: MetricReport,
    #[serde(skip)]
    pub trace: Option<RunTrace>,
}

/// Across-seed means of the reported measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub acd: f64,
    pub kmeans_objective: f64,
    pub our_objective: f64,
    pub fair_kmeans_objective: f64,
}

impl MetricMeans {
    pub fn of<'a>(reports: impl ExactSizeIterator<Item = &'a MetricReport>) -> Self {
        let n = reports.len() as f64;
        let mut m = Self {
            acd: 0.0,
            kmeans_objective: 0.0,
            our_objective: 0.0,
            fair_kmeans_objective: 0.0,
        };
        for r in reports {
            m.acd += r.acd;
            m.kmeans_objective += r.kmeans_objective;
            m.our_objective += r.our_objective;
            m.fair_kmeans_objective += r.fair_kmeans_objective;
        }
        m.acd /= n;
        m.kmeans_objective /= n;
        m.our_objective /= n;
        m.fair_kmeans_objective /= n;
        m
    }

    /// Percentage change of `self` relative to `reference`.
    pub fn pct_change_from(&self, reference: &Self) -> Self {
        Self {
            acd: pct_change(reference.acd, self.acd),
            kmeans_objective: pct_change(reference.kmeans_objective, self.kmeans_objective),
            our_objective: pct_change(reference.our_objective, self.our_objective),
            fair_kmeans_objective: pct_change(
                reference.fair_kmeans_objective,
                self.fair_kmeans_objective,
            ),
        }
    }
}

/// `100 (value - reference) / reference`; zero when both are zero.
pub fn pct_change(reference: f64, value: f64) -> f64 {
    if value == reference {
        0.0
    } else {
        100.0 * (value - reference) / reference
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub d: usize,
    pub g: usize,
    pub sensitive: String,
    pub group_names: Vec<String>,
    pub group_counts: Vec<usize>,
    pub rows_total: usize,
    pub rows_dropped: usize,
}

impl DatasetSummary {
    pub fn of(ds: &ProcessedDataset) -> Self {
        Self {
            n: ds.n(),
            d: ds.d(),
            g: ds.g(),
            sensitive: ds.sensitive.clone(),
            group_names: ds.labels.names().to_vec(),
            group_counts: ds.labels.counts(),
            rows_total: ds.rows_total,
            rows_dropped: ds.rows_dropped,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub config: ExperimentConfig,
    pub dataset: Option<DatasetSummary>,
    pub group_names: Vec<String>,
    pub seeds: Vec<SeedOutcome>,
    /// Seeds abandoned on a degenerate objective.
    pub skipped_seeds: Vec<u64>,
    pub baseline_mean: MetricMeans,
    pub fair_mean: MetricMeans,
    /// Fair method relative to the baseline, in percent.
    pub pct_change: MetricMeans,
}

fn run_seed(
    data: &FeatureMatrix,
    labels: &GroupLabels,
    config: &ExperimentConfig,
    seed: u64,
) -> fairkm_core::Result<SeedOutcome> {
    let base = lloyd(data, config.k, seed, config.lloyd_max_iters)?;
    let baseline = metric_report(data, labels, &base.assignment, &base.centroids)?;
    let state = run_fair(
        data,
        labels,
        &config.fair_params(),
        (base.assignment, base.centroids),
    )?;
    let fair = metric_report(data, labels, state.assignment(), state.centroids())?;
    let trace = config.trace_cluster.map(|_| RunTrace {
        initial: state
            .initial()
            .cloned()
            .expect("run_fair records the start"),
        history: state.history().to_vec(),
    });
    Ok(SeedOutcome {
        seed,
        lloyd_iterations: base.iterations,
        fair_iterations: state.iteration(),
        baseline,
        fair,
        trace,
    })
}

/// Runs every seed on an already loaded dataset. Seeds run in parallel;
/// results are ordered by seed.
pub fn run_campaign_on(
    data: &FeatureMatrix,
    labels: &GroupLabels,
    config: &ExperimentConfig,
) -> Result<CampaignReport> {
    config.validate()?;
    let seeds: Vec<u64> = (0..config.runs as u64)
        .map(|o| config.base_seed + o)
        .collect();
    let results: Vec<(u64, fairkm_core::Result<SeedOutcome>)> = seeds
        .par_iter()
        .map(|&seed| (seed, run_seed(data, labels, config, seed)))
        .collect();

    let mut outcomes = Vec::with_capacity(results.len());
    let mut skipped = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(o) => {
                info!(
                    "seed {seed}: ACD {:.4} -> {:.4} ({} lloyd / {} fair iterations)",
                    o.baseline.acd, o.fair.acd, o.lloyd_iterations, o.fair_iterations
                );
                outcomes.push(o);
            }
            Err(e @ fairkm_core::Error::DegenerateObjective { .. }) => {
                warn!("seed {seed} skipped: {e}");
                skipped.push(seed);
            }
            Err(e) => return Err(e.into()),
        }
    }
    if outcomes.is_empty() {
        return Err(Error::Argument("every seed was skipped".into()));
    }
    let baseline_mean = MetricMeans::of(outcomes.iter().map(|o| &o.baseline));
    let fair_mean = MetricMeans::of(outcomes.iter().map(|o| &o.fair));
    Ok(CampaignReport {
        config: config.clone(),
        dataset: None,
        group_names: labels.names().to_vec(),
        seeds: outcomes,
        skipped_seeds: skipped,
        baseline_mean,
        pct_change: fair_mean.pct_change_from(&baseline_mean),
        fair_mean,
    })
}

/// Loads the configured dataset and runs the campaign on it.
pub fn run_campaign(config: &ExperimentConfig) -> Result<CampaignReport> {
    config.validate()?;
    let ds = config.load()?;
    info!(
        "loaded {}: n = {}, d = {}, g = {} ({} rows dropped)",
        config.dataset.display(),
        ds.n(),
        ds.d(),
        ds.g(),
        ds.rows_dropped
    );
    let mut report = run_campaign_on(&ds.data, &ds.labels, config)?;
    report.dataset = Some(DatasetSummary::of(&ds));
    Ok(report)
}
