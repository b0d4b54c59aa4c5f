//! Declarative column roles for CSV ingestion.
//!
//! Schemas are TOML files:
//!
//! ```toml
//! header = true        # first (non-skipped) record names the columns
//! skip_rows = 0        # records to discard before the header / data
//! delimiter = ","
//! missing = "?"        # default missing-value token, optional
//!
//! [[columns]]
//! name = "workclass"
//! role = "categorical" # continuous | categorical | sensitive | drop
//! missing = "?"        # per-column override, optional
//! ```
//!
//! Without a header row the `columns` list must name every column of the file
//! in order. With a header, columns missing from the list are dropped.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ADULT: &str = include_str!("../../presets/adult.toml");
const CREDITCARD: &str = include_str!("../../presets/creditcard.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    #[serde(alias = "continuous_feature")]
    Continuous,
    #[serde(alias = "categorical_feature")]
    Categorical,
    Sensitive,
    Drop,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    pub name: String,
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missing: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSchema {
    #[serde(default = "default_true")]
    pub header: bool,
    #[serde(default)]
    pub skip_rows: usize,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missing: Option<String>,
    pub columns: Vec<ColumnSpec>,
}

fn default_true() -> bool {
    true
}

fn default_delimiter() -> char {
    ','
}

impl DatasetSchema {
    pub fn parse(text: &str) -> Result<Self> {
        let schema: Self = toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Built-in schema by name: `adult` or `creditcard`.
    pub fn preset(name: &str) -> Option<Self> {
        let text = match name.to_ascii_lowercase().as_str() {
            "adult" => ADULT,
            "creditcard" | "credit-card" | "credit_card" => CREDITCARD,
            _ => return None,
        };
        Some(Self::parse(text).expect("bundled presets are valid"))
    }

    /// A preset name, or else a path to a schema file.
    pub fn resolve(spec: &str) -> Result<Self> {
        match Self::preset(spec) {
            Some(s) => Ok(s),
            None => Self::from_file(Path::new(spec)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sensitive = self
            .columns
            .iter()
            .filter(|c| c.role == Role::Sensitive)
            .count();
        if sensitive != 1 {
            return Err(Error::Schema(format!(
                "exactly one sensitive column is required, found {sensitive}"
            )));
        }
        if !self
            .columns
            .iter()
            .any(|c| matches!(c.role, Role::Continuous | Role::Categorical))
        {
            return Err(Error::Schema(
                "at least one feature column is required".into(),
            ));
        }
        for (i, c) in self.columns.iter().enumerate() {
            if self.columns[..i].iter().any(|o| o.name == c.name) {
                return Err(Error::Schema(format!("column `{}` listed twice", c.name)));
            }
        }
        if !self.delimiter.is_ascii() {
            return Err(Error::Schema("delimiter must be an ASCII character".into()));
        }
        Ok(())
    }

    pub fn sensitive_column(&self) -> &str {
        &self
            .columns
            .iter()
            .find(|c| c.role == Role::Sensitive)
            .expect("validated")
            .name
    }

    /// Makes `name` the sensitive column; the previous one is dropped.
    pub fn with_sensitive(mut self, name: &str) -> Result<Self> {
        if !self.columns.iter().any(|c| c.name == name) {
            return Err(Error::Schema(format!("unknown sensitive column `{name}`")));
        }
        for c in &mut self.columns {
            if c.name == name {
                c.role = Role::Sensitive;
            } else if c.role == Role::Sensitive {
                c.role = Role::Drop;
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub(crate) fn missing_token<'a>(&'a self, col: &'a ColumnSpec) -> Option<&'a str> {
        col.missing.as_deref().or(self.missing.as_deref())
    }
}
