use std::path::{Path, PathBuf};

use crcurv_core::calibration::CalibrationConfig;
use crcurv_core::criterion::CriterionConfig;
use crcurv_core::flow::FlowConfig;
use crcurv_core::quadrature::QuadratureConfig;
use crcurv_core::sphere::{CurvatureFamily, FinderConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Geometric,
    Abstract,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Gradient norm accepted as a critical point.
    pub criticality: f64,
    pub degeneracy: f64,
    /// Relative (C1) eigenvalue tolerance.
    pub eigenvalue: f64,
    /// Zero band for the 𝒦₊ margin.
    pub margin: f64,
    pub quadrature: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { criticality: 1e-10, degeneracy: 1e-6, eigenvalue: 1e-8, margin: 1e-8, quadrature: 1e-4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSettings {
    pub start: f64,
    pub exit_factor: f64,
    pub samples: usize,
    pub max_time: f64,
}

impl Default for FlowSettings {
    fn default() -> Self {
        let d = FlowConfig::default();
        FlowSettings { start: d.start, exit_factor: d.exit_factor, samples: d.samples, max_time: d.max_time }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub k_expr: Option<String>,
    pub family: Option<CurvatureFamily>,
    pub data: Option<PathBuf>,
    pub seed: u64,
    /// Quadrature refinement levels.
    pub refine: usize,
    pub starts: usize,
    pub out: Option<PathBuf>,
    pub tolerances: Tolerances,
    pub flow: FlowSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Geometric,
            k_expr: None,
            family: None,
            data: None,
            seed: 0,
            refine: 3,
            starts: 200,
            out: None,
            tolerances: Tolerances::default(),
            flow: FlowSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|source| CliError::Toml { path: path.to_path_buf(), source })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        for (name, v) in [
            ("criticality", t.criticality),
            ("degeneracy", t.degeneracy),
            ("eigenvalue", t.eigenvalue),
            ("margin", t.margin),
            ("quadrature", t.quadrature),
            ("flow.start", self.flow.start),
            ("flow.max_time", self.flow.max_time),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CliError::Usage(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.flow.exit_factor > 1.0) {
            return Err(CliError::Usage("flow.exit_factor must exceed 1".into()));
        }
        if self.refine < 2 {
            return Err(CliError::Usage("refine must be at least 2 (a gap needs two levels)".into()));
        }
        if self.starts == 0 || self.flow.samples == 0 {
            return Err(CliError::Usage("starts and flow.samples must be positive".into()));
        }
        if self.k_expr.is_some() && self.family.is_some() {
            return Err(CliError::Usage("give either k_expr or family, not both".into()));
        }
        Ok(())
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig { levels: self.refine, tol: self.tolerances.quadrature, ..QuadratureConfig::default() }
    }

    pub fn calibration(&self) -> CalibrationConfig {
        CalibrationConfig { quadrature: self.quadrature(), ..CalibrationConfig::default() }
    }

    pub fn finder(&self) -> FinderConfig {
        FinderConfig {
            starts: self.starts,
            grad_tol: self.tolerances.criticality,
            degeneracy_tol: self.tolerances.degeneracy,
            seed: self.seed,
            ..FinderConfig::default()
        }
    }

    pub fn criterion(&self) -> CriterionConfig {
        CriterionConfig { margin_tol: self.tolerances.margin, eig_tol: self.tolerances.eigenvalue, ..Default::default() }
    }

    pub fn flow_config(&self) -> FlowConfig {
        FlowConfig {
            start: self.flow.start,
            exit_factor: self.flow.exit_factor,
            samples: self.flow.samples,
            max_time: self.flow.max_time,
            ..FlowConfig::default()
        }
    }
}
