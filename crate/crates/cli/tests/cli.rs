use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use crcurv::data::{AbstractFile, MuRow, PairRow, PointRow};
use crcurv::exit;
use crcurv::kexpr::parse_k;
use crcurv_core::Jet;
use proptest::prelude::*;
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn crcurv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crcurv")).args(args).output().expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let o = crcurv(args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn failure(args: &[&str]) -> (i32, Value) {
    let o = crcurv(args);
    let err = String::from_utf8(o.stderr).unwrap();
    let json = &err[err.find('{').expect("failure report on stderr")..];
    (o.status.code().unwrap(), serde_json::from_str(json).unwrap())
}

fn summary(r: &Value) -> &str {
    r["criterion"]["conclusion"]["summary"].as_str().unwrap()
}

#[test]
fn abstract_scenarios() {
    let strong = ok_json(&["analyze", "--data", data("two_maxima_strong.toml").to_str().unwrap()]);
    assert_eq!(summary(&strong), "exists; morse <= 1; count >= 1");
    assert_eq!(strong["criterion"]["minimal_k"], 1);

    let weak = ok_json(&["analyze", "--data", data("two_maxima_weak.toml").to_str().unwrap()]);
    assert_eq!(summary(&weak), "inconclusive");
    let iotas: Vec<u64> =
        weak["criterion"]["f1"].as_array().unwrap().iter().map(|e| e["iota"].as_u64().unwrap()).collect();
    assert_eq!(iotas, [0, 0, 1]);

    let single = ok_json(&["analyze", "--data", data("single_maximum.toml").to_str().unwrap()]);
    assert_eq!(summary(&single), "inconclusive");
    assert_eq!(single["k_plus"], serde_json::json!(["max"]));

    let mu = ok_json(&["analyze", "--data", data("two_maxima_weak_mu.toml").to_str().unwrap()]);
    assert_eq!(mu["criterion"]["minimal_k"], 1);
}

#[test]
fn geometric_run_survives_export_and_reanalysis() {
    let geo = ok_json(&["analyze", "--k-expr", "2 + x2"]);
    assert_eq!(geo["critical_points"].as_array().unwrap().len(), 2);
    assert_eq!(geo["k_plus"].as_array().unwrap().len(), 1);
    assert_eq!(summary(&geo), "inconclusive");

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("exported.toml");
    let o = crcurv(&["export-abstract", "--k-expr", "2 + x2", "--out", file.to_str().unwrap()]);
    assert!(o.status.success());
    let back = ok_json(&["analyze", "--data", file.to_str().unwrap()]);
    assert_eq!(geo["criterion"], back["criterion"]);
    assert_eq!(geo["tuples"], back["tuples"]);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let strong = data("two_maxima_strong.toml");
    let a = crcurv(&["analyze", "--data", strong.to_str().unwrap(), "--seed", "7"]);
    let b = crcurv(&["analyze", "--data", strong.to_str().unwrap(), "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let a = crcurv(&["calibrate"]);
    let b = crcurv(&["calibrate"]);
    assert_eq!(a.stdout, b.stdout);
    let c: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(c["c1_residual"].as_f64().unwrap() < 1e-8);
    assert!(c["s_gap"].as_f64().unwrap() < 1e-4);
    assert!(c["c2_gap"].as_f64().unwrap() < 1e-4);
}

#[test]
fn failures_map_to_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let borderline = dir.path().join("borderline.toml");
    let text = std::fs::read_to_string(data("two_maxima_weak.toml")).unwrap().replace("G = 0.4", "G = 0.5");
    std::fs::write(&borderline, text).unwrap();

    let (code, j) = failure(&["analyze", "--data", borderline.to_str().unwrap()]);
    assert_eq!(code, exit::C1_VIOLATION);
    assert_eq!(j["kind"], "c1_violation");
    assert_eq!(j["details"]["labels"], serde_json::json!(["y1", "y2"]));

    let (code, j) = failure(&["analyze", "--k-expr", "2"]);
    assert_eq!(code, exit::C0_VIOLATION);
    assert_eq!(j["kind"], "c0_violation");

    let (code, j) = failure(&["analyze", "--k-expr", "2 + * x1"]);
    assert_eq!(code, exit::INPUT);
    assert!(j["message"].as_str().unwrap().contains("position"));

    let (code, _) = failure(&["analyze", "--k-expr", "x1"]);
    assert_eq!(code, exit::INPUT);

    let (code, _) = failure(&["analyze", "--data", "/nonexistent/file.toml"]);
    assert_eq!(code, exit::INPUT);

    let codes = [
        exit::SUCCESS,
        exit::INPUT,
        exit::C0_VIOLATION,
        exit::C1_VIOLATION,
        exit::CALIBRATION,
        exit::CONSISTENCY,
    ];
    for (i, a) in codes.iter().enumerate() {
        assert!(codes[i + 1..].iter().all(|b| a != b));
    }
}

#[test]
fn flow_csv_and_classification() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("weak.csv");
    let weak = ok_json(&[
        "flow",
        "--data",
        data("two_maxima_weak.toml").to_str().unwrap(),
        "--tuple",
        "y1,y2",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    let c = &weak["classifications"][0];
    assert_eq!(c["terminal"], "converged_to_infinity");
    assert_eq!(c["agrees_with_f1"], true);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "s,lambda_1,lambda_2,energy");
    assert_eq!(lines.len(), crcurv::config::FlowSettings::default().samples + 1);

    let strong =
        ok_json(&["flow", "--data", data("two_maxima_strong.toml").to_str().unwrap(), "--tuple", "y1,y2"]);
    assert_eq!(strong["classifications"][0]["terminal"], "exited");
    assert_eq!(strong["all_agree"], true);
}

fn fd_gradient(f: impl Fn([f64; 4]) -> f64, x: [f64; 4]) -> [f64; 4] {
    let h = 1e-5;
    let mut g = [0.0; 4];
    for i in 0..4 {
        let (mut a, mut b) = (x, x);
        a[i] += h;
        b[i] -= h;
        g[i] = (f(a) - f(b)) / (2.0 * h);
    }
    g
}

const EXPRESSIONS: [&str; 5] = [
    "2 + x2",
    "3 + x1*y2 - 0.5*y1^2",
    "exp(0.3*x1) + cos(y2)",
    "sqrt(4 + x1*x2) / (2 + sin(y1))",
    "ln(5 + x2^3) + pi*y1*y2",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expression_derivatives_match_finite_differences(
        which in 0..EXPRESSIONS.len(),
        r in prop::array::uniform4(-1.0..1.0f64),
    ) {
        let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(n > 0.1);
        let x = r.map(|v| v / n);
        let k = parse_k(EXPRESSIONS[which]).unwrap();
        let field = k.field();
        let jet = field.jet4(Jet::<4>::vars(x)).unwrap();
        let fd = fd_gradient(|p| field.value(p), x);
        for i in 0..4 {
            prop_assert!((jet.g[i] - fd[i]).abs() < 1e-6 * (1.0 + fd[i].abs()), "{} d{i}: {} vs {}", EXPRESSIONS[which], jet.g[i], fd[i]);
            let row = fd_gradient(|p| field.jet4(Jet::<4>::vars(p)).unwrap().g[i], x);
            for j in 0..4 {
                prop_assert!((jet.h[i][j] - row[j]).abs() < 1e-6 * (1.0 + row[j].abs()));
            }
        }
    }

    #[test]
    fn abstract_file_round_trips(
        pts in prop::collection::vec((-5.0..5.0f64, -8.0..8.0f64, 0.0..1.0f64, 0u8..=3), 1..6),
        g in prop::collection::vec(0.0..1.0f64, 15),
        mu in prop::collection::vec((0u32..5, 0u8..3), 0..4),
    ) {
        let label = |i: usize| format!("p{i}");
        let points: Vec<PointRow> = pts
            .iter()
            .enumerate()
            .map(|(i, &(k, lap_k, a, morse))| PointRow { label: label(i), k, lap_k, a, morse })
            .collect();
        let mut pairs = Vec::new();
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                pairs.push(PairRow { i: label(i), j: label(j), g: g[pairs.len()] });
            }
        }
        let mu = mu.into_iter().map(|(k, value)| MuRow { labels: vec![label(0)], k, value }).collect();
        let file = AbstractFile { points, pairs, mu };
        let back = AbstractFile::parse(&file.to_toml(), Path::new("mem")).unwrap();
        prop_assert_eq!(back, file);
    }
}

#[test]
fn k_expression_value_at_a_pole() {
    let k = parse_k("2 + x2").unwrap();
    assert_eq!(k.value(crcurv_core::SpherePoint::from_reals([0.0, 0.0, 1.0, 0.0]).unwrap()), 3.0);
}
