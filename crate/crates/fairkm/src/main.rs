use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fairkm::campaign::{run_campaign, ExperimentConfig};
use fairkm::output::{table_rows, write_outputs};
use fairkm::{DatasetSchema, Error, Result};
use fairkm_core::fair::StopMode;

#[derive(Parser)]
#[command(name = "fairkm", version, about = "Cluster-level group-fair k-means")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Stop {
    Fixed,
    Contrastive,
}

impl From<Stop> for StopMode {
    fn from(s: Stop) -> Self {
        match s {
            Stop::Fixed => StopMode::Fixed,
            Stop::Contrastive => StopMode::Contrastive,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run Lloyd and the fair refinement over a range of seeds.
    Run {
        #[arg(long)]
        dataset: PathBuf,
        /// Preset name (adult, creditcard) or schema file.
        #[arg(long)]
        schema: String,
        /// Overrides the schema's sensitive column.
        #[arg(long)]
        sensitive: Option<String>,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 3.0)]
        phi: f64,
        #[arg(long, default_value_t = 0.01)]
        eta: f64,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        /// First seed; run `r` uses `seed + r`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        max_iters: usize,
        #[arg(long, value_enum, default_value_t = Stop::Fixed)]
        stop: Stop,
        #[arg(long, default_value_t = 10)]
        stop_window: usize,
        #[arg(long, default_value_t = fairkm_core::kmeans::DEFAULT_LLOYD_MAX_ITERS)]
        lloyd_max_iters: usize,
        /// Cluster on a seeded subsample of this many rows.
        #[arg(long)]
        subsample: Option<usize>,
        /// Per-iteration trace of one cluster, as `cluster=<index>`.
        #[arg(long, value_parser = parse_trace)]
        trace: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Load a dataset and report its shape.
    Ingest {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        schema: String,
        #[arg(long)]
        sensitive: Option<String>,
        /// Print per-group counts and feature names.
        #[arg(long)]
        audit: bool,
        /// Write the processed matrix as CSV.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

fn parse_trace(s: &str) -> std::result::Result<usize, String> {
    let v = s.strip_prefix("cluster=").unwrap_or(s);
    v.parse()
        .map_err(|_| format!("expected `cluster=<index>`, got `{s}`"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            dataset,
            schema,
            sensitive,
            k,
            phi,
            eta,
            runs,
            seed,
            max_iters,
            stop,
            stop_window,
            lloyd_max_iters,
            subsample,
            trace,
            out,
        } => {
            let config = ExperimentConfig {
                sensitive,
                k,
                phi,
                eta,
                runs,
                base_seed: seed,
                max_iters,
                stop_mode: stop.into(),
                stop_window,
                lloyd_max_iters,
                subsample,
                trace_cluster: trace,
                out_dir: Some(out.clone()),
                ..ExperimentConfig::new(dataset, schema)
            };
            let report = run_campaign(&config)?;
            write_outputs(&report, &out)?;
            for (name, rows) in table_rows(&report) {
                for (method, value, pct) in rows {
                    println!("{name:<12} {method:<17} {value:>14.6} {pct:>9}");
                }
            }
            if !report.skipped_seeds.is_empty() {
                println!("skipped seeds: {:?}", report.skipped_seeds);
            }
            Ok(())
        }
        Command::Ingest {
            dataset,
            schema,
            sensitive,
            audit,
            dump,
        } => {
            let mut s = DatasetSchema::resolve(&schema)?;
            if let Some(name) = &sensitive {
                s = s.with_sensitive(name)?;
            }
            let ds = fairkm::load_csv(&dataset, &s)?;
            println!(
                "n = {}  d = {}  g = {}  (rows {} total, {} dropped)",
                ds.n(),
                ds.d(),
                ds.g(),
                ds.rows_total,
                ds.rows_dropped
            );
            if audit {
                println!("groups of `{}`:", ds.sensitive);
                for (name, count) in ds.labels.names().iter().zip(ds.labels.counts()) {
                    println!("  {name:<24} {count}");
                }
                println!("features:");
                for name in &ds.feature_names {
                    println!("  {name}");
                }
            }
            if let Some(path) = dump {
                let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
                ds.write_csv(std::io::BufWriter::new(file))?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
