//! Schema-driven CSV ingestion.
//!
//! Rows carrying a missing-value token in any used column are dropped.
//! Continuous columns are standardised over the retained rows (population
//! standard deviation); categorical columns become one indicator column per
//! category seen anywhere in the raw file, sorted lexicographically.

mod schema;

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use fairkm_core::{FeatureMatrix, GroupLabels};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use schema::{ColumnSpec, DatasetSchema, Role};

use crate::error::{Error, Result};

/// Feature matrix and group labels ready for clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedDataset {
    pub data: FeatureMatrix,
    pub labels: GroupLabels,
    pub feature_names: Vec<String>,
    pub sensitive: String,
    pub rows_total: usize,
    pub rows_dropped: usize,
}

impl ProcessedDataset {
    pub fn n(&self) -> usize {
        self.data.n()
    }

    pub fn d(&self) -> usize {
        self.data.d()
    }

    pub fn g(&self) -> usize {
        self.labels.g()
    }

    /// Seeded uniform subsample of `size` rows (kept in file order).
    pub fn subsample(&self, size: usize, seed: u64) -> Result<Self> {
        if size == 0 {
            return Err(Error::Argument("subsample size must be positive".into()));
        }
        if size >= self.n() {
            return Ok(self.clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = index::sample(&mut rng, self.n(), size).into_vec();
        rows.sort_unstable();
        Ok(Self {
            data: self.data.select_rows(&rows)?,
            labels: self.labels.select(&rows)?,
            feature_names: self.feature_names.clone(),
            sensitive: self.sensitive.clone(),
            rows_total: self.rows_total,
            rows_dropped: self.rows_dropped,
        })
    }

    /// Writes the features plus a trailing group column as CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = self.feature_names.clone();
        header.push(self.sensitive.clone());
        w.write_record(&header)?;
        for (i, row) in self.data.rows().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(self.labels.names()[self.labels.group_of(i)].clone());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}

/// Zero mean, unit population variance.
pub fn standardize(column: &[f64]) -> Result<Vec<f64>> {
    let degenerate = |reason: &str| Error::Preprocess {
        column: String::new(),
        reason: reason.into(),
    };
    if column.is_empty() {
        return Err(degenerate("empty column"));
    }
    let n = column.len() as f64;
    let mean = column.iter().sum::<f64>() / n;
    let var = column.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if !sd.is_finite() || sd <= 0.0 {
        return Err(degenerate("zero variance"));
    }
    Ok(column.iter().map(|v| (v - mean) / sd).collect())
}

/// Indicator encoding against a fixed category list. Values outside the list
/// encode as all zeros.
pub fn one_hot_with<S: AsRef<str>>(column: &[S], categories: &[String]) -> Vec<Vec<u8>> {
    column
        .iter()
        .map(|v| {
            categories
                .iter()
                .map(|c| u8::from(c == v.as_ref()))
                .collect()
        })
        .collect()
}

/// One indicator column per distinct value, ordered lexicographically.
pub fn one_hot<S: AsRef<str>>(column: &[S]) -> (Vec<String>, Vec<Vec<u8>>) {
    let categories: Vec<String> = column
        .iter()
        .map(|v| v.as_ref().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let rows = one_hot_with(column, &categories);
    (categories, rows)
}

struct UsedColumn<'a> {
    spec: &'a ColumnSpec,
    index: usize,
    missing: Option<&'a str>,
}

/// Loads and preprocesses `path` according to `schema`.
pub fn load_csv(path: &Path, schema: &DatasetSchema) -> Result<ProcessedDataset> {
    schema.validate()?;
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(schema.delimiter as u8)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(std::io::BufReader::new(file));
    let mut records = reader.records();
    for _ in 0..schema.skip_rows {
        if records.next().transpose()?.is_none() {
            return Err(Error::Schema("file ends inside skip_rows".into()));
        }
    }

    let mut used = Vec::new();
    let width;
    if schema.header {
        let header = records
            .next()
            .transpose()?
            .ok_or_else(|| Error::Schema("missing header row".into()))?;
        width = header.len();
        for spec in &schema.columns {
            let index = header
                .iter()
                .position(|h| h == spec.name)
                .ok_or_else(|| Error::Schema(format!("unknown column `{}`", spec.name)))?;
            used.push(UsedColumn {
                spec,
                index,
                missing: schema.missing_token(spec),
            });
        }
    } else {
        width = schema.columns.len();
        for (index, spec) in schema.columns.iter().enumerate() {
            used.push(UsedColumn {
                spec,
                index,
                missing: schema.missing_token(spec),
            });
        }
    }
    used.retain(|c| c.spec.role != Role::Drop);

    // raw cells of the used columns, one Vec per column
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); used.len()];
    let mut keep = Vec::new();
    let mut rows_total = 0usize;
    for rec in records {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows_total += 1;
        if rec.len() != width {
            return Err(Error::Schema(format!(
                "record {} has {} fields, expected {width}",
                rows_total,
                rec.len()
            )));
        }
        let mut complete = true;
        for (col, out) in used.iter().zip(cells.iter_mut()) {
            let v = &rec[col.index];
            if col.missing == Some(v) {
                complete = false;
            }
            out.push(v.to_string());
        }
        keep.push(complete);
    }
    let retained: Vec<usize> = (0..rows_total).filter(|&r| keep[r]).collect();
    if retained.is_empty() {
        return Err(Error::Schema("no complete rows remain".into()));
    }

    let n = retained.len();
    let mut feature_names = Vec::new();
    let mut feature_cols: Vec<Vec<f64>> = Vec::new();
    let mut group_col: Option<(usize, &str)> = None;
    for (ci, col) in used.iter().enumerate() {
        let name = &col.spec.name;
        match col.spec.role {
            Role::Continuous => {
                let values = retained
                    .iter()
                    .map(|&r| {
                        cells[ci][r].parse::<f64>().map_err(|_| Error::Preprocess {
                            column: name.clone(),
                            reason: format!("`{}` is not a number", cells[ci][r]),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let z = standardize(&values).map_err(|e| match e {
                    Error::Preprocess { reason, .. } => Error::Preprocess {
                        column: name.clone(),
                        reason,
                    },
                    other => other,
                })?;
                feature_names.push(name.clone());
                feature_cols.push(z);
            }
            Role::Categorical => {
                let categories: Vec<String> = cells[ci]
                    .iter()
                    .filter(|v| col.missing != Some(v.as_str()))
                    .cloned()
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                let column: Vec<&str> = retained.iter().map(|&r| cells[ci][r].as_str()).collect();
                let encoded = one_hot_with(&column, &categories);
                for (j, cat) in categories.iter().enumerate() {
                    feature_names.push(format!("{name}={cat}"));
                    feature_cols.push(encoded.iter().map(|row| f64::from(row[j])).collect());
                }
            }
            Role::Sensitive => group_col = Some((ci, name.as_str())),
            Role::Drop => unreachable!("dropped columns are filtered out"),
        }
    }

    let (gi, gname) = group_col.expect("validated schema has a sensitive column");
    let names: Vec<String> = retained
        .iter()
        .map(|&r| cells[gi][r].clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if names.len() < 2 {
        return Err(Error::DegenerateGroup {
            column: gname.to_string(),
        });
    }
    let labels: Vec<usize> = retained
        .iter()
        .map(|&r| {
            names
                .binary_search(&cells[gi][r])
                .expect("name collected above")
        })
        .collect();

    let d = feature_cols.len();
    let mut values = Vec::with_capacity(n * d);
    for r in 0..n {
        values.extend(feature_cols.iter().map(|c| c[r]));
    }
    Ok(ProcessedDataset {
        data: FeatureMatrix::new(n, d, values)?,
        labels: GroupLabels::new(labels, names)?,
        feature_names,
        sensitive: gname.to_string(),
        rows_total,
        rows_dropped: rows_total - n,
    })
}
