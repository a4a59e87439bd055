use std::io::Write;
use std::path::Path;

use crcurv_core::bubbles::{
    exact_bubble_residuals, functional_j, h_profile, verify_expansion, Bubble, BubbleConfiguration, HProfile,
    DEFAULT_CUTOFF_RADIUS,
};
use crcurv_core::criterion::{
    build_matrix, check_theorem_general, check_theorem_main, enumerate_f1, least_eigenvalue, AbstractCriticalData,
    Enumeration, F1Entry, MuTable,
};
use crcurv_core::flow::{alpha_equilibrium, classify_matrix, TrajectoryRecord};
use crcurv_core::heisenberg::Derivatives;
use crcurv_core::sphere::{
    check_c0, critical_data, find_critical_points, halton_sphere_points, CriticalPointRecord, CurvatureFamily,
    CurvatureFunction, GreenData,
};
use crcurv_core::{Calibration, SpherePoint};
use serde_json::json;

use crate::config::{Mode, RunConfig};
use crate::data::AbstractFile;
use crate::error::{CliError, Result};
use crate::kexpr::parse_k;
use crate::report::{
    CalibrationBlock, Check, FlowReport, FlowSummary, RunReport, VerifyReport, SCHEMA_VERSION,
};

pub fn calibrate(cfg: &RunConfig) -> Result<Calibration> {
    cfg.validate()?;
    Calibration::compute(&cfg.calibration()).map_err(CliError::Calibration)
}

pub fn curvature(cfg: &RunConfig) -> Result<CurvatureFunction> {
    match (&cfg.k_expr, &cfg.family) {
        (Some(e), _) => parse_k(e),
        (None, Some(f)) => Ok(CurvatureFunction::from_family(f.clone())?),
        (None, None) => Err(CliError::Usage("geometric mode needs --k-expr or a family in the config".into())),
    }
}

/// Critical data, optional μ table and the geometric side products.
pub struct Prepared {
    pub data: AbstractCriticalData,
    pub mu: Option<MuTable>,
    pub k: Option<String>,
    pub records: Vec<CriticalPointRecord>,
    pub coverage_warning: bool,
}

pub fn prepare(cfg: &RunConfig, calib: &Calibration) -> Result<Prepared> {
    match cfg.mode {
        Mode::Abstract => {
            let path = cfg.data.as_ref().ok_or_else(|| CliError::Usage("abstract mode needs --data".into()))?;
            let file = AbstractFile::load(path)?;
            Ok(Prepared {
                data: file.critical_data()?,
                mu: file.mu_table()?,
                k: None,
                records: Vec::new(),
                coverage_warning: false,
            })
        }
        Mode::Geometric => {
            let k = curvature(cfg)?;
            let green = GreenData::standard(calib);
            let search = find_critical_points(&k, &green, calib, &cfg.finder())?;
            let c0 = check_c0(&search.records, cfg.tolerances.margin);
            if !c0.pass {
                let record = search.records.iter().find(|r| r.degenerate || r.kplus_margin.abs() <= cfg.tolerances.margin);
                return Err(crcurv_core::Error::C0Violation {
                    reason: c0.violations.join("; "),
                    record: record.cloned().map(Box::new),
                }
                .into());
            }
            Ok(Prepared {
                data: critical_data(&search.records, &green)?,
                mu: None,
                k: Some(k.descriptor().to_string()),
                records: search.records,
                coverage_warning: search.coverage_warning,
            })
        }
    }
}

fn tuple_indices(data: &AbstractCriticalData, labels: &[String]) -> Result<Vec<usize>> {
    labels
        .iter()
        .map(|l| data.index_of(l).ok_or_else(|| CliError::Usage(format!("unknown label {l}"))))
        .collect()
}

/// Flow classification of every diagonalized tuple.
pub fn classify_all(
    cfg: &RunConfig,
    data: &AbstractCriticalData,
    en: &Enumeration,
) -> Result<Vec<(FlowSummary, TrajectoryRecord)>> {
    let fc = cfg.flow_config();
    let mut out = Vec::new();
    for v in en.verdicts.iter().filter(|v| !v.pruned) {
        out.push(classify_labels(data, &v.labels, &fc, Some(v.in_f1))?);
    }
    Ok(out)
}

fn classify_labels(
    data: &AbstractCriticalData,
    labels: &[String],
    fc: &crcurv_core::flow::FlowConfig,
    in_f1: Option<bool>,
) -> Result<(FlowSummary, TrajectoryRecord)> {
    let idx = tuple_indices(data, labels)?;
    let m = build_matrix(data, &idx)?;
    let rho = least_eigenvalue(&m)?;
    let (class, t) = classify_matrix(&m.entries, rho, fc)?;
    let attained = class == crcurv_core::flow::TupleClass::CriticalPointAtInfinity;
    let agrees = in_f1.map_or(attained == (rho > 0.0), |f| f == attained);
    if !agrees {
        return Err(crcurv_core::Error::Consistency(format!("flow and F1 membership disagree on {labels:?}")).into());
    }
    Ok((
        FlowSummary {
            labels: labels.to_vec(),
            class,
            rho,
            terminal: t.terminal,
            terminal_norm: t.terminal_norm,
            final_time: t.final_time,
            agrees_with_f1: agrees,
        },
        t,
    ))
}

pub fn analyze_with(cfg: &RunConfig, calib: &Calibration) -> Result<RunReport> {
    let prep = prepare(cfg, calib)?;
    let en = enumerate_f1(&prep.data, &cfg.criterion())?;
    let f1 = F1Entry::from_enumeration(&en);
    let criterion = match &prep.mu {
        Some(mu) => check_theorem_general(&f1, mu)?,
        None => check_theorem_main(&f1),
    };
    let flow = classify_all(cfg, &prep.data, &en)?.into_iter().map(|(s, _)| s).collect();
    let c0 = match cfg.mode {
        Mode::Geometric => check_c0(&prep.records, cfg.tolerances.margin),
        Mode::Abstract => crcurv_core::sphere::C0Verdict { pass: true, violations: Vec::new() },
    };
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        mode: cfg.mode,
        k: prep.k,
        seed: cfg.seed,
        refine: cfg.refine,
        calibration: CalibrationBlock::from_calibration(calib),
        critical_points: prep.records,
        coverage_warning: prep.coverage_warning,
        c0,
        k_plus: en.k_plus.clone(),
        tuples: en.verdicts,
        criterion,
        flow,
        expansions: Vec::new(),
    })
}

pub fn analyze(cfg: &RunConfig) -> Result<RunReport> {
    let calib = calibrate(cfg)?;
    analyze_with(cfg, &calib)
}

pub fn export_abstract(cfg: &RunConfig) -> Result<AbstractFile> {
    if cfg.mode != Mode::Geometric {
        return Err(CliError::Usage("export-abstract works from a geometric K".into()));
    }
    let calib = calibrate(cfg)?;
    let prep = prepare(cfg, &calib)?;
    Ok(AbstractFile::from_data(&prep.data))
}

pub struct FlowOutput {
    pub report: FlowReport,
    pub trajectories: Vec<TrajectoryRecord>,
}

/// Classifies either the selected tuple or every diagonalized tuple.
pub fn flow(cfg: &RunConfig, tuple: Option<&[String]>) -> Result<FlowOutput> {
    let calib = calibrate(cfg)?;
    let prep = prepare(cfg, &calib)?;
    let en = enumerate_f1(&prep.data, &cfg.criterion())?;
    let pairs = match tuple {
        Some(labels) => {
            let mut sorted: Vec<String> = labels.to_vec();
            sorted.sort();
            let v = en.verdicts.iter().find(|v| {
                let mut l = v.labels.clone();
                l.sort();
                l == sorted
            });
            let in_f1 = match v {
                Some(v) => Some(v.in_f1),
                None => {
                    return Err(CliError::Usage(format!("{labels:?} is not a tuple of distinct K+ points")));
                }
            };
            vec![classify_labels(&prep.data, labels, &cfg.flow_config(), in_f1)?]
        }
        None => classify_all(cfg, &prep.data, &en)?,
    };
    let all_agree = pairs.iter().all(|(s, _)| s.agrees_with_f1);
    let (classifications, trajectories) = pairs.into_iter().unzip();
    Ok(FlowOutput { report: FlowReport { schema_version: SCHEMA_VERSION, classifications, all_agree }, trajectories })
}

/// Columns `s, Λ_1…Λ_p, ΛᵀMΛ`.
pub fn write_trajectory_csv<W: Write>(w: W, t: &TrajectoryRecord) -> Result<()> {
    let p = t.samples.first().map_or(0, |s| s.lambda.len());
    let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    let mut header = vec!["s".to_string()];
    header.extend((1..=p).map(|i| format!("lambda_{i}")));
    header.push("energy".into());
    wr.write_record(&header)?;
    for smp in &t.samples {
        let mut row = vec![smp.s.to_string()];
        row.extend(smp.lambda.iter().map(|v| v.to_string()));
        row.push(smp.energy.to_string());
        wr.write_record(&row)?;
    }
    wr.flush().map_err(|e| CliError::Csv(e.into()))?;
    Ok(())
}

/// Columns `gauge_radius, H, lambda`.
pub fn write_profile_csv<W: Write>(w: W, profiles: &[HProfile]) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    wr.write_record(["gauge_radius", "H", "lambda"])?;
    for p in profiles {
        for s in &p.samples {
            wr.write_record([s.gauge_radius.to_string(), s.value.to_string(), s.lambda.to_string()])?;
        }
    }
    wr.flush().map_err(|e| CliError::Csv(e.into()))?;
    Ok(())
}

pub fn profile_radii() -> Vec<f64> {
    (0..=120).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 120.0)).collect()
}

fn check(name: &str, pass: bool, measured: serde_json::Value, threshold: &str) -> Check {
    Check { name: name.into(), pass, measured, threshold: threshold.into() }
}

fn antipode(a: SpherePoint) -> SpherePoint {
    let r = a.reals();
    SpherePoint::from_reals([-r[0], -r[1], -r[2], -r[3]]).expect("unit vector")
}

pub struct VerifyOutput {
    pub report: VerifyReport,
    pub profiles: Vec<HProfile>,
}

/// The bubble, profile, inner-product and expansion suites on the standard sphere.
pub fn verify(cfg: &RunConfig) -> Result<VerifyOutput> {
    let calib = calibrate(cfg)?;
    let q = cfg.quadrature();
    let mut checks = Vec::new();
    let mut expansions = Vec::new();
    let places = halton_sphere_points(8, cfg.seed.wrapping_add(11));

    let b = Bubble::new(places[0], 3.0)?;
    let pts = halton_sphere_points(1000, cfg.seed.wrapping_add(12));
    let an = exact_bubble_residuals(&b, &pts, &calib, Derivatives::Analytic)?;
    let an_max = an.iter().cloned().fold(0.0, f64::max);
    checks.push(check("bubble_identity_analytic", an_max < 1e-8, json!(an_max), "< 1e-8"));
    let fd = exact_bubble_residuals(&b, &pts[..500], &calib, Derivatives::FiniteDifference { step: None })?;
    let fd_max = fd.iter().cloned().fold(0.0, f64::max);
    checks.push(check("bubble_identity_finite_differences", fd_max < 1e-4, json!(fd_max), "< 1e-4"));

    let radii = profile_radii();
    let profiles: Vec<HProfile> = [10.0, 20.0, 40.0, 80.0]
        .iter()
        .map(|&l| Bubble::new(places[1], l).map(|b| h_profile(&b, &radii, DEFAULT_CUTOFF_RADIUS, &calib)))
        .collect::<crcurv_core::Result<_>>()?;
    let sups: Vec<f64> = profiles.iter().map(|p| p.sup).collect();
    let bounded = sups.iter().all(|s| s.is_finite()) && sups[3] <= 1.5 * sups[0];
    checks.push(check("h_profile_bounded", bounded, json!(sups), "sup(80) <= 1.5 sup(10)"));
    let centers: Vec<f64> = profiles.iter().map(|p| p.at_center).collect();
    let at_center_ok = centers.iter().all(|v| v.abs() < 1e-12);
    checks.push(check("h_at_center_vanishes", at_center_ok, json!(centers), "|H(a)| < 1e-12"));

    let one = CurvatureFunction::from_family(CurvatureFamily::Constant { c: 1.0 })?;
    let expected = calib.s.sqrt();
    let mut js = Vec::new();
    for (i, a) in places[2..7].iter().enumerate() {
        let lam = [1.5, 4.0, 9.0, 17.0, 33.0][i];
        let c = BubbleConfiguration::new(vec![1.0], vec![Bubble::new(*a, lam)?])?;
        js.push(functional_j(&c, &one, &calib, &q)?.value);
    }
    let lo = js.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = js.iter().cloned().fold(0.0, f64::max);
    let spread = (hi - lo) / expected;
    let off = js.iter().map(|j| (j - expected).abs() / expected).fold(0.0, f64::max);
    checks.push(check(
        "single_bubble_j_constant",
        spread < 1e-3 && off < 1e-3,
        json!({ "values": js, "spread": spread, "expected": expected, "max_relative_error": off }),
        "spread < 1e-3 and |J - S^(1/2)| / S^(1/2) < 1e-3",
    ));

    let single = BubbleConfiguration::new(vec![1.0], vec![Bubble::new(places[7], 40.0)?])?;
    let e1 = verify_expansion(&single, &one, &calib, &q)?;
    checks.push(check("expansion_p1_gap", e1.relative_gap < 1e-3, json!(e1.relative_gap), "< 1e-3 at lambda = 40"));
    expansions.push(e1);

    let a = places[1];
    let alphas = alpha_equilibrium(&[1.0, 1.0])?;
    let mut pair_reports = Vec::new();
    for lam in [20.0, 40.0] {
        let c = BubbleConfiguration::new(alphas.clone(), vec![Bubble::new(a, lam)?, Bubble::new(antipode(a), lam)?])?;
        pair_reports.push(verify_expansion(&c, &one, &calib, &q)?);
    }
    let (g20, g40) = (pair_reports[0].relative_gap, pair_reports[1].relative_gap);
    checks.push(check(
        "expansion_gap_decreases",
        g40 < g20,
        json!({ "gap_20": g20, "gap_40": g40 }),
        "gap(40) < gap(20)",
    ));
    let c20 = pair_reports[0].c_ij[0].value;
    let c40 = pair_reports[1].c_ij[0].value;
    let sym = pair_reports
        .iter()
        .map(|r| (r.inner_products[0].value - r.inner_products[1].value).abs() / r.inner_products[0].value)
        .fold(0.0, f64::max);
    checks.push(check(
        "interaction_constant_stable",
        c20 > 0.0 && c40 > 0.0 && (c40 / c20 - 1.0).abs() < 0.01 && sym < 1e-6,
        json!({ "c_ij_20": c20, "c_ij_40": c40, "asymmetry": sym }),
        "c_ij > 0, |c(40)/c(20) - 1| < 0.01, asymmetry < 1e-6",
    ));
    let norm_err = pair_reports[1].self_norms.iter().map(|n| (n - calib.s).abs() / calib.s).fold(0.0, f64::max);
    checks.push(check("self_norm_is_s", norm_err < 1e-6, json!(norm_err), "|<d,d> - S| / S < 1e-6"));
    expansions.extend(pair_reports);

    let pass = checks.iter().all(|c| c.pass);
    Ok(VerifyOutput {
        report: VerifyReport {
            schema_version: SCHEMA_VERSION,
            calibration: CalibrationBlock::from_calibration(&calib),
            checks,
            expansions,
            pass,
        },
        profiles,
    })
}

pub fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Write { path: p.to_path_buf(), source }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Write { path: "<stdout>".into(), source })
        }
    }
}
