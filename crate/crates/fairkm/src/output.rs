//! CSV and JSON artefacts of a campaign.
//!
//! Layout under the output directory:
//!
//! * `tables/{acd,kmeans,ours,fair_kmeans}.csv`: `method,value,pct_change`
//! * `per_seed.csv`: one [`MetricRow`] per (seed, method)
//! * `trace_seed<seed>_cluster<c>.csv`: per-iteration trace, when requested
//! * `campaign.json`: configuration, dataset summary, means and changes

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use fairkm_core::fair::{FairRunState, IterationRecord};
use fairkm_core::MetricReport;
use serde::Serialize;

use crate::campaign::{CampaignReport, MetricMeans, RunTrace};
use crate::error::{Error, Result};

/// Flat CSV form of a [`MetricReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub seed: u64,
    pub method: String,
    pub acd: f64,
    pub acd_degenerate: bool,
    pub kmeans_objective: f64,
    pub our_objective: f64,
    pub fair_kmeans_objective: f64,
    pub iterations: usize,
    /// Per-cluster disparities joined with `;`.
    pub cluster_disparities: String,
}

impl MetricRow {
    pub fn new(seed: u64, method: &str, iterations: usize, r: &MetricReport) -> Self {
        Self {
            seed,
            method: method.to_string(),
            acd: r.acd,
            acd_degenerate: r.acd_degenerate,
            kmeans_objective: r.kmeans_objective,
            our_objective: r.our_objective,
            fair_kmeans_objective: r.fair_kmeans_objective,
            iterations,
            cluster_disparities: r
                .cluster_disparities
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(";"),
        }
    }
}

pub const BASELINE_METHOD: &str = "classical_kmeans";
pub const FAIR_METHOD: &str = "ours";

fn create(path: &Path) -> Result<fs::File> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

fn fmt_pct(p: f64) -> String {
    if p == 0.0 {
        "0.00%".to_string()
    } else {
        format!("{p:+.2}%")
    }
}

/// `(method, value, formatted pct change)`.
pub type TableRow = (String, f64, String);

type Measure = fn(&MetricMeans) -> f64;

/// Table files in the order `acd`, `kmeans`, `ours`, `fair_kmeans`.
pub fn table_rows(report: &CampaignReport) -> Vec<(&'static str, [TableRow; 2])> {
    let pick: [(&str, Measure); 4] = [
        ("acd", |m| m.acd),
        ("kmeans", |m| m.kmeans_objective),
        ("ours", |m| m.our_objective),
        ("fair_kmeans", |m| m.fair_kmeans_objective),
    ];
    pick.iter()
        .map(|&(name, f)| {
            (
                name,
                [
                    (
                        BASELINE_METHOD.to_string(),
                        f(&report.baseline_mean),
                        fmt_pct(0.0),
                    ),
                    (
                        FAIR_METHOD.to_string(),
                        f(&report.fair_mean),
                        fmt_pct(f(&report.pct_change)),
                    ),
                ],
            )
        })
        .collect()
}

/// Writes the four comparison tables; returns their paths.
pub fn render_tables(report: &CampaignReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for (name, rows) in table_rows(report) {
        let path = out_dir.join("tables").join(format!("{name}.csv"));
        let mut w = csv::Writer::from_writer(create(&path)?);
        w.write_record(["method", "value", "pct_change"])?;
        for (method, value, pct) in rows {
            w.write_record([method, format!("{value:.6}"), pct])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn write_per_seed(report: &CampaignReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for o in &report.seeds {
        w.serialize(MetricRow::new(
            o.seed,
            BASELINE_METHOD,
            o.lloyd_iterations,
            &o.baseline,
        ))?;
        w.serialize(MetricRow::new(
            o.seed,
            FAIR_METHOD,
            o.fair_iterations,
            &o.fair,
        ))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Per-iteration trace of one cluster as CSV: `iteration`, one `loss_<group>`
/// column per group (empty where the group is absent), `j`,
/// `kmeans_objective`, `acd`. One row per iteration of `history`.
pub fn write_trace<W: Write>(
    history: &[IterationRecord],
    group_names: &[String],
    k: usize,
    cluster: usize,
    out: W,
) -> Result<()> {
    if cluster >= k {
        return Err(Error::Argument(format!(
            "trace cluster {cluster} out of range for k = {k}"
        )));
    }
    let g = group_names.len();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["iteration".to_string()];
    header.extend(group_names.iter().map(|s| format!("loss_{s}")));
    header.extend(["j", "kmeans_objective", "acd"].map(String::from));
    w.write_record(&header)?;
    for (t, rec) in history.iter().enumerate() {
        let mut row = vec![(t + 1).to_string()];
        row.extend(
            rec.losses[cluster * g..(cluster + 1) * g]
                .iter()
                .map(|l| l.map_or_else(String::new, |v| v.to_string())),
        );
        row.push(rec.j.to_string());
        row.push(rec.kmeans_normalized.to_string());
        row.push(rec.acd.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<trace output>", e))?;
    Ok(())
}

/// Writes the trace of a finished run to `path`.
pub fn emit_trace(
    state: &FairRunState,
    group_names: &[String],
    cluster: usize,
    path: &Path,
) -> Result<()> {
    if cluster >= state.k() {
        return Err(Error::Argument(format!(
            "trace cluster {cluster} out of range for k = {}",
            state.k()
        )));
    }
    write_trace(
        state.history(),
        group_names,
        state.k(),
        cluster,
        create(path)?,
    )
}

/// Worst-off group of `cluster` at the start and after every iteration.
pub fn worst_group_sequence(trace: &RunTrace, g: usize, cluster: usize) -> Vec<Option<usize>> {
    std::iter::once(&trace.initial)
        .chain(&trace.history)
        .map(|rec| {
            let mut best: Option<(usize, f64)> = None;
            for (s, l) in rec.losses[cluster * g..(cluster + 1) * g]
                .iter()
                .enumerate()
            {
                if let Some(l) = *l {
                    if best.is_none_or(|(_, b)| l > b) {
                        best = Some((s, l));
                    }
                }
            }
            best.map(|(s, _)| s)
        })
        .collect()
}

#[derive(Serialize)]
struct Environment {
    package: &'static str,
    version: &'static str,
    os: &'static str,
    arch: &'static str,
}

#[derive(Serialize)]
struct CampaignJson<'a> {
    config: &'a crate::campaign::ExperimentConfig,
    environment: Environment,
    dataset: &'a Option<crate::campaign::DatasetSummary>,
    group_names: &'a [String],
    seeds: Vec<u64>,
    skipped_seeds: &'a [u64],
    classical_kmeans_mean: &'a MetricMeans,
    ours_mean: &'a MetricMeans,
    pct_change: &'a MetricMeans,
}

pub fn campaign_json(report: &CampaignReport) -> Result<String> {
    let doc = CampaignJson {
        config: &report.config,
        environment: Environment {
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
        },
        dataset: &report.dataset,
        group_names: &report.group_names,
        seeds: report.seeds.iter().map(|o| o.seed).collect(),
        skipped_seeds: &report.skipped_seeds,
        classical_kmeans_mean: &report.baseline_mean,
        ours_mean: &report.fair_mean,
        pct_change: &report.pct_change,
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Writes every artefact of `report` under `out_dir`.
pub fn write_outputs(report: &CampaignReport, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    render_tables(report, out_dir)?;
    write_per_seed(report, &out_dir.join("per_seed.csv"))?;
    if let Some(cluster) = report.config.trace_cluster {
        for o in &report.seeds {
            if let Some(trace) = &o.trace {
                let path = out_dir.join(format!("trace_seed{}_cluster{cluster}.csv", o.seed));
                write_trace(
                    &trace.history,
                    &report.group_names,
                    report.config.k,
                    cluster,
                    create(&path)?,
                )?;
            }
        }
    }
    let json = campaign_json(report)?;
    let path = out_dir.join("campaign.json");
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(())
}
