//! Dataset ingestion, multi-seed experiment campaigns and report writers for
//! cluster-level fair k-means. The numerical work lives in `fairkm-core`.

pub mod campaign;
pub mod error;
pub mod ingest;
pub mod output;

pub use campaign::{run_campaign, run_campaign_on, CampaignReport, ExperimentConfig};
pub use error::{Error, Result};
pub use ingest::{load_csv, DatasetSchema, ProcessedDataset};
