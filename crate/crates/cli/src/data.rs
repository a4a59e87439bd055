//! The abstract critical-data file.
//!
//! ```toml
//! [[points]]
//! label = "y1"
//! K = 1.0
//! lapK = -3.0
//! A = 0.0
//! morse = 3
//!
//! [[pairs]]
//! i = "y1"
//! j = "y2"
//! G = 0.4
//!
//! [[mu]]
//! labels = ["y1", "y2"]
//! k = 1
//! value = 0
//! ```

use std::path::Path;

use crcurv_core::criterion::{AbstractCriticalData, MuTable, PairData, PointData};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointRow {
    pub label: String,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "lapK")]
    pub lap_k: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub morse: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairRow {
    pub i: String,
    pub j: String,
    #[serde(rename = "G")]
    pub g: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuRow {
    pub labels: Vec<String>,
    pub k: u32,
    pub value: u8,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbstractFile {
    #[serde(default)]
    pub points: Vec<PointRow>,
    #[serde(default)]
    pub pairs: Vec<PairRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mu: Vec<MuRow>,
}

impl AbstractFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|source| CliError::Toml { path: path.to_path_buf(), source })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
        Self::parse(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("abstract data always serializes")
    }

    pub fn from_data(data: &AbstractCriticalData) -> Self {
        AbstractFile {
            points: data
                .points
                .iter()
                .map(|p| PointRow { label: p.label.clone(), k: p.k, lap_k: p.lap_k, a: p.a, morse: p.morse })
                .collect(),
            pairs: data.pairs.iter().map(|p| PairRow { i: p.i.clone(), j: p.j.clone(), g: p.g }).collect(),
            mu: Vec::new(),
        }
    }

    pub fn critical_data(&self) -> Result<AbstractCriticalData> {
        let points = self
            .points
            .iter()
            .map(|p| PointData { label: p.label.clone(), k: p.k, lap_k: p.lap_k, a: p.a, morse: p.morse })
            .collect();
        let pairs = self.pairs.iter().map(|p| PairData { i: p.i.clone(), j: p.j.clone(), g: p.g }).collect();
        Ok(AbstractCriticalData::new(points, pairs)?)
    }

    /// `None` when the file has no mu table.
    pub fn mu_table(&self) -> Result<Option<MuTable>> {
        if self.mu.is_empty() {
            return Ok(None);
        }
        let mut t = MuTable::new();
        for row in &self.mu {
            for l in &row.labels {
                if !self.points.iter().any(|p| &p.label == l) {
                    return Err(CliError::Usage(format!("mu entry names unknown label {l}")));
                }
            }
            t.insert(&row.labels, row.k, row.value)?;
        }
        Ok(Some(t))
    }
}
