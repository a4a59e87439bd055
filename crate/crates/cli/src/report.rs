use crcurv_core::bubbles::ExpansionReport;
use crcurv_core::criterion::{CriterionReport, TupleVerdict};
use crcurv_core::flow::{Terminal, TupleClass};
use crcurv_core::sphere::{C0Verdict, CriticalPointRecord};
use crcurv_core::Calibration;
use serde::Serialize;

use crate::config::Mode;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub constant: &'static str,
    pub method: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationBlock {
    pub c1: f64,
    pub c1_residual: f64,
    pub kappa: f64,
    pub volume_factor: f64,
    pub vectorfield_sign: f64,
    pub quarter_r: f64,
    pub chart_distance_constant: f64,
    pub s: f64,
    pub s_gap: f64,
    pub s_levels: Vec<f64>,
    pub c2: f64,
    pub c2_gap: f64,
    pub c2_levels: Vec<f64>,
    pub c_g: f64,
    pub c_g_gap: f64,
    pub provenance: Vec<Provenance>,
}

impl CalibrationBlock {
    pub fn from_calibration(c: &Calibration) -> Self {
        let last = |v: &[f64]| v.last().copied().unwrap_or(f64::NAN);
        CalibrationBlock {
            c1: c.c1,
            c1_residual: c.c1_residual,
            kappa: c.kappa,
            volume_factor: c.convention.volume_factor,
            vectorfield_sign: c.convention.vectorfield_sign,
            quarter_r: c.quarter_r,
            chart_distance_constant: c.chart_distance_constant,
            s: c.s,
            s_gap: last(&c.s_gaps),
            s_levels: c.s_levels.clone(),
            c2: c.c2,
            c2_gap: last(&c.c2_gaps),
            c2_levels: c.c2_levels.clone(),
            c_g: c.c_g,
            c_g_gap: c.c_g_gap,
            provenance: vec![
                Provenance { constant: "c1", method: "bubble identity solved at one point, certified at sampled points" },
                Provenance { constant: "kappa", method: "pullback of Im(conj(xi) dxi) through the Cayley chart" },
                Provenance { constant: "volume_factor", method: "theta0 ^ dtheta0 against dx dy dt" },
                Provenance { constant: "quarter_r", method: "conformal sublaplacian of the constant 1" },
                Provenance { constant: "chart_distance_constant", method: "Richardson limit of d(cayley(p), cayley(0))/|p|" },
                Provenance { constant: "s", method: "Heisenberg-polar quadrature, last two levels" },
                Provenance { constant: "c2", method: "Heisenberg-polar quadrature, last two levels" },
                Provenance { constant: "c_g", method: "L(1) paired with the sphere integral of 1/d^2" },
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowSummary {
    pub labels: Vec<String>,
    pub class: TupleClass,
    pub rho: f64,
    pub terminal: Terminal,
    pub terminal_norm: f64,
    pub final_time: f64,
    pub agrees_with_f1: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub mode: Mode,
    pub k: Option<String>,
    pub seed: u64,
    pub refine: usize,
    pub calibration: CalibrationBlock,
    pub critical_points: Vec<CriticalPointRecord>,
    pub coverage_warning: bool,
    pub c0: C0Verdict,
    pub k_plus: Vec<String>,
    pub tuples: Vec<TupleVerdict>,
    pub criterion: CriterionReport,
    pub flow: Vec<FlowSummary>,
    pub expansions: Vec<ExpansionReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub measured: serde_json::Value,
    pub threshold: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub calibration: CalibrationBlock,
    pub checks: Vec<Check>,
    pub expansions: Vec<ExpansionReport>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowReport {
    pub schema_version: u32,
    pub classifications: Vec<FlowSummary>,
    pub all_agree: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FailureReport {
    pub schema_version: u32,
    pub status: &'static str,
    pub kind: &'static str,
    pub exit_code: i32,
    pub message: String,
    pub details: serde_json::Value,
}

impl FailureReport {
    pub fn from_error(e: &CliError) -> Self {
        use crcurv_core::Error as E;
        let (kind, details) = match e {
            CliError::Core(E::C0Violation { reason, record }) => {
                ("c0_violation", serde_json::json!({ "reason": reason, "record": record }))
            }
            CliError::Core(E::C1Violation { labels, rho }) => {
                ("c1_violation", serde_json::json!({ "labels": labels, "rho": rho }))
            }
            CliError::Core(E::Consistency(m)) => ("consistency", serde_json::json!({ "reason": m })),
            CliError::Calibration(inner) => ("calibration", serde_json::json!({ "reason": inner.to_string() })),
            CliError::Verification(m) => ("verification", serde_json::json!({ "reason": m })),
            _ => ("error", serde_json::Value::Null),
        };
        FailureReport {
            schema_version: SCHEMA_VERSION,
            status: "failed",
            kind,
            exit_code: e.exit_code(),
            message: e.to_string(),
            details,
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}
