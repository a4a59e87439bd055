//! The interaction-matrix criterion: 𝒦₊, M(τ_p), ρ(τ_p), F₁, ι(τ_p), the
//! Euler–Hopf sums and the existence verdicts.
//!
//! Tuples are unordered subsets of 𝒦₊; they are encoded as bitmasks over the
//! 𝒦₊ indices during enumeration.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::eigen::{asymmetry, symmetric_eigen};
use crate::{Error, Result};

pub const SCHEMA_TUPLE_CONVENTION: &str = "unordered";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointData {
    pub label: String,
    pub k: f64,
    pub lap_k: f64,
    pub a: f64,
    pub morse: u8,
}

impl PointData {
    /// `−Δ_θK/3K − 2A`.
    pub fn margin(&self) -> f64 {
        -self.lap_k / (3.0 * self.k) - 2.0 * self.a
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairData {
    pub i: String,
    pub j: String,
    pub g: f64,
}

/// Critical data with no geometric origin required.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbstractCriticalData {
    pub points: Vec<PointData>,
    /// `G(y_i, y_j)` for every unordered pair.
    pub pairs: Vec<PairData>,
    #[serde(skip)]
    g: Vec<Vec<f64>>,
}

impl AbstractCriticalData {
    pub fn new(points: Vec<PointData>, pairs: Vec<PairData>) -> Result<Self> {
        let n = points.len();
        let mut index = BTreeMap::new();
        for (i, p) in points.iter().enumerate() {
            if index.insert(p.label.clone(), i).is_some() {
                return Err(Error::Input(format!("duplicate label {}", p.label)));
            }
            if !(p.k > 0.0) || !p.k.is_finite() {
                return Err(Error::Input(format!("{}: K must be positive, got {}", p.label, p.k)));
            }
            if !p.lap_k.is_finite() || !p.a.is_finite() {
                return Err(Error::Input(format!("{}: non-finite data", p.label)));
            }
            if p.morse > 3 {
                return Err(Error::Input(format!("{}: Morse index {} outside 0..3", p.label, p.morse)));
            }
        }
        let mut g = vec![vec![f64::NAN; n]; n];
        for pr in &pairs {
            let i = *index.get(&pr.i).ok_or_else(|| Error::Input(format!("pair names unknown label {}", pr.i)))?;
            let j = *index.get(&pr.j).ok_or_else(|| Error::Input(format!("pair names unknown label {}", pr.j)))?;
            if i == j {
                return Err(Error::Input(format!("pair ({}, {}) repeats a label", pr.i, pr.j)));
            }
            if !(pr.g > 0.0) || !pr.g.is_finite() {
                return Err(Error::Input(format!("G({}, {}) must be positive, got {}", pr.i, pr.j, pr.g)));
            }
            if !g[i][j].is_nan() && g[i][j] != pr.g {
                return Err(Error::Input(format!("G({}, {}) given twice with different values", pr.i, pr.j)));
            }
            g[i][j] = pr.g;
            g[j][i] = pr.g;
        }
        for i in 0..n {
            for j in 0..i {
                if g[i][j].is_nan() {
                    return Err(Error::Input(format!(
                        "missing G({}, {})",
                        points[j].label, points[i].label
                    )));
                }
            }
        }
        Ok(AbstractCriticalData { points, pairs, g })
    }

    pub fn g(&self, i: usize, j: usize) -> f64 {
        self.g[i][j]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.points.iter().position(|p| p.label == label)
    }

    /// Same data with every `(Δ_θK, A, G)` multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let points = self
            .points
            .iter()
            .map(|p| PointData { lap_k: p.lap_k * c, a: p.a * c, ..p.clone() })
            .collect();
        let pairs = self.pairs.iter().map(|p| PairData { g: p.g * c, ..p.clone() }).collect();
        Self::new(points, pairs)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionConfig {
    pub margin_tol: f64,
    /// Relative (C1) tolerance: `|ρ| < tol · max(1, max|M_ij|)` is a violation.
    pub eig_tol: f64,
    pub cap: usize,
}

impl Default for CriterionConfig {
    fn default() -> Self {
        CriterionConfig { margin_tol: 1e-8, eig_tol: 1e-8, cap: 20 }
    }
}

/// Indices of the points of 𝒦₊.
pub fn k_plus_filter(data: &AbstractCriticalData, margin_tol: f64) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, p) in data.points.iter().enumerate() {
        let m = p.margin();
        if !(libm::fabs(m) > margin_tol) {
            return Err(Error::C0Violation {
                reason: format!("{}: margin {m:e} within ±{margin_tol:e} of zero", p.label),
                record: None,
            });
        }
        if m > 0.0 {
            out.push(i);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionMatrix {
    pub labels: Vec<String>,
    pub entries: Vec<Vec<f64>>,
}

/// `M_ii = −Δ_θK(y_i)/3K(y_i)² − 2A_i/K(y_i)`,
/// `M_ij = −2G(y_i, y_j)/(K(y_i)K(y_j))^{1/2}`.
pub fn build_matrix(data: &AbstractCriticalData, tuple: &[usize]) -> Result<InteractionMatrix> {
    for (n, &i) in tuple.iter().enumerate() {
        if i >= data.points.len() {
            return Err(Error::Precondition(format!("point index {i} out of range")));
        }
        if tuple[..n].contains(&i) {
            return Err(Error::Precondition(format!("label {} repeated in tuple", data.points[i].label)));
        }
    }
    let p = tuple.len();
    let mut m = vec![vec![0.0; p]; p];
    for (a, &i) in tuple.iter().enumerate() {
        let pi = &data.points[i];
        m[a][a] = -pi.lap_k / (3.0 * pi.k * pi.k) - 2.0 * pi.a / pi.k;
        for (b, &j) in tuple.iter().enumerate().take(a) {
            let v = -2.0 * data.g(i, j) / libm::sqrt(pi.k * data.points[j].k);
            m[a][b] = v;
            m[b][a] = v;
        }
    }
    Ok(InteractionMatrix { labels: tuple.iter().map(|&i| data.points[i].label.clone()).collect(), entries: m })
}

pub fn least_eigenvalue(m: &InteractionMatrix) -> Result<f64> {
    let asym = asymmetry(&m.entries);
    if asym > 1e-12 {
        return Err(Error::Consistency(format!("interaction matrix asymmetric by {asym:e}")));
    }
    if m.entries.is_empty() {
        return Err(Error::Precondition("empty tuple".into()));
    }
    Ok(symmetric_eigen(&m.entries).values[0])
}

/// `ι(τ_p) = p − 1 + Σ(3 − m_i)`.
pub fn index_iota(morse: &[u8]) -> u32 {
    assert!(!morse.is_empty(), "ι of an empty tuple");
    morse.len() as u32 - 1 + morse.iter().map(|m| 3 - *m as u32).sum::<u32>()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TupleVerdict {
    /// Labels in 𝒦₊ order.
    pub labels: Vec<String>,
    /// Least eigenvalue, or for pruned tuples an upper bound for it.
    pub rho: f64,
    pub in_f1: bool,
    pub iota: u32,
    /// Not diagonalized: a sub-tuple already failed.
    pub pruned: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Enumeration {
    pub k_plus: Vec<String>,
    pub verdicts: Vec<TupleVerdict>,
}

impl Enumeration {
    pub fn f1(&self) -> impl Iterator<Item = &TupleVerdict> {
        self.verdicts.iter().filter(|v| v.in_f1)
    }
}

fn c1_scale(m: &InteractionMatrix) -> f64 {
    m.entries.iter().flatten().fold(1.0f64, |a, v| a.max(libm::fabs(*v)))
}

fn mask_members(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|b| mask & (1 << b) != 0).collect()
}

/// Enumerates all nonempty subsets of 𝒦₊ by increasing size. A subset with
/// a sub-tuple outside F₁ is pruned without diagonalization (interlacing of
/// principal submatrices forbids it from being positive definite).
pub fn enumerate_f1(data: &AbstractCriticalData, cfg: &CriterionConfig) -> Result<Enumeration> {
    enumerate(data, cfg, true)
}

/// Same as [`enumerate_f1`] but diagonalizes every subset.
pub fn enumerate_f1_unpruned(data: &AbstractCriticalData, cfg: &CriterionConfig) -> Result<Enumeration> {
    enumerate(data, cfg, false)
}

fn enumerate(data: &AbstractCriticalData, cfg: &CriterionConfig, prune: bool) -> Result<Enumeration> {
    let kp = k_plus_filter(data, cfg.margin_tol)?;
    let n = kp.len();
    if n > cfg.cap || n > 30 {
        return Err(Error::CapExceeded { count: n, cap: cfg.cap.min(30) });
    }
    let total = 1usize << n;
    let mut rho = vec![f64::NAN; total];
    let mut ok = vec![false; total];
    let mut by_size: Vec<Vec<u32>> = vec![Vec::new(); n + 1];
    for mask in 1..total as u32 {
        by_size[mask.count_ones() as usize].push(mask);
    }
    let mut verdicts = Vec::with_capacity(total.saturating_sub(1));
    for size in 1..=n {
        for &mask in &by_size[size] {
            let members = mask_members(mask, n);
            let mut bound = f64::INFINITY;
            let mut blocked = false;
            if size > 1 {
                for &b in &members {
                    let sub = (mask & !(1 << b)) as usize;
                    bound = bound.min(rho[sub]);
                    blocked |= !ok[sub];
                }
            }
            let tuple: Vec<usize> = members.iter().map(|&b| kp[b]).collect();
            let iota = index_iota(&tuple.iter().map(|&i| data.points[i].morse).collect::<Vec<_>>());
            let labels: Vec<String> = tuple.iter().map(|&i| data.points[i].label.clone()).collect();
            if prune && blocked {
                rho[mask as usize] = bound;
                verdicts.push(TupleVerdict { labels, rho: bound, in_f1: false, iota, pruned: true });
                continue;
            }
            let m = build_matrix(data, &tuple)?;
            let r = least_eigenvalue(&m)?;
            if libm::fabs(r) < cfg.eig_tol * c1_scale(&m) {
                return Err(Error::C1Violation { labels, rho: r });
            }
            rho[mask as usize] = r;
            ok[mask as usize] = r > 0.0;
            verdicts.push(TupleVerdict { labels, rho: r, in_f1: r > 0.0, iota, pruned: false });
        }
    }
    Ok(Enumeration { k_plus: kp.iter().map(|&i| data.points[i].label.clone()).collect(), verdicts })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumEntry {
    pub k: u32,
    pub s_k: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerHopfSums {
    /// Largest ι over F₁ (absent when F₁ is empty).
    pub l_sharp: Option<u32>,
    /// `S_k = Σ_{ι ≤ k−1} (−1)^ι` for `k = 0, …, l_# + 1`.
    pub sums: Vec<SumEntry>,
}

impl EulerHopfSums {
    /// `S_k` for any k (constant beyond `l_# + 1`).
    pub fn at(&self, k: u32) -> i64 {
        let last = self.sums.last().expect("sums always contain k = 0");
        if k >= last.k {
            last.s_k
        } else {
            self.sums[k as usize].s_k
        }
    }

    pub fn total(&self) -> i64 {
        self.sums.last().map_or(0, |e| e.s_k)
    }
}

fn sign(iota: u32) -> i64 {
    if iota % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn euler_hopf_sums(iotas: &[u32]) -> EulerHopfSums {
    let l_sharp = iotas.iter().copied().max();
    let kmax = l_sharp.map_or(0, |l| l + 1);
    let sums = (0..=kmax)
        .map(|k| SumEntry { k, s_k: iotas.iter().filter(|&&i| i + 1 <= k).map(|&i| sign(i)).sum() })
        .collect();
    EulerHopfSums { l_sharp, sums }
}

/// F₁ entry as consumed by the verdict functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct F1Entry {
    pub labels: Vec<String>,
    pub iota: u32,
    pub rho: f64,
}

impl F1Entry {
    pub fn from_enumeration(e: &Enumeration) -> Vec<F1Entry> {
        e.f1().map(|v| F1Entry { labels: v.labels.clone(), iota: v.iota, rho: v.rho }).collect()
    }
}

/// Intersection numbers `μ_k(τ_p)` keyed by the sorted label set and k.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MuTable {
    entries: BTreeMap<(Vec<String>, u32), u8>,
}

impl MuTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, labels: &[String], k: u32, value: u8) -> Result<()> {
        if value > 1 {
            return Err(Error::Input(format!("μ value must be 0 or 1, got {value}")));
        }
        self.entries.insert((sorted(labels), k), value);
        Ok(())
    }

    pub fn get(&self, labels: &[String], k: u32) -> Option<u8> {
        self.entries.get(&(sorted(labels), k)).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn sorted(labels: &[String]) -> Vec<String> {
    let mut v = labels.to_vec();
    v.sort();
    v
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KVerdict {
    pub k: u32,
    pub s_k: i64,
    /// `S_k ≠ 1`.
    pub condition1: bool,
    /// No F₁ tuple has ι = k (or, with μ, every such tuple has μ_k = 0).
    pub condition2: bool,
    pub admissible: bool,
    /// Tuples with ι = k that block condition 2.
    pub blocking: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conclusion {
    pub exists_solution: bool,
    pub morse_bound: Option<u32>,
    pub multiplicity_bound: Option<i64>,
    pub summary: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorollaryVerdict {
    pub total: i64,
    pub exists_solution: bool,
    pub multiplicity_bound: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub theorem: String,
    pub tuple_convention: String,
    pub f1: Vec<F1Entry>,
    pub l_sharp: Option<u32>,
    pub sums: Vec<SumEntry>,
    pub per_k: Vec<KVerdict>,
    pub minimal_k: Option<u32>,
    pub conclusion: Conclusion,
    pub corollary: CorollaryVerdict,
}

fn conclude(k: Option<u32>, sums: &EulerHopfSums) -> Conclusion {
    match k {
        Some(k) => {
            let m = (1 - sums.at(k)).abs();
            Conclusion {
                exists_solution: true,
                morse_bound: Some(k),
                multiplicity_bound: Some(m),
                summary: format!("exists; morse <= {k}; count >= {m}"),
            }
        }
        None => Conclusion {
            exists_solution: false,
            morse_bound: None,
            multiplicity_bound: None,
            summary: String::from("inconclusive"),
        },
    }
}

fn report(theorem: &str, f1: &[F1Entry], mu: Option<&MuTable>) -> Result<CriterionReport> {
    let iotas: Vec<u32> = f1.iter().map(|e| e.iota).collect();
    let sums = euler_hopf_sums(&iotas);
    let kmax = sums.l_sharp.map_or(0, |l| l + 1);
    let mut per_k = Vec::new();
    for k in 0..=kmax {
        let s_k = sums.at(k);
        let mut blocking = Vec::new();
        for e in f1.iter().filter(|e| e.iota == k) {
            match mu {
                None => blocking.push(e.labels.clone()),
                Some(t) => match t.get(&e.labels, k) {
                    Some(0) => {}
                    Some(_) => blocking.push(e.labels.clone()),
                    None => {
                        // Only needed when condition 1 already holds. At k = 0 the
                        // entry is undefined and falls back to blocking.
                        if s_k != 1 && k > 0 {
                            return Err(Error::IncompleteMu { labels: e.labels.clone(), k });
                        }
                        blocking.push(e.labels.clone());
                    }
                },
            }
        }
        let condition1 = s_k != 1;
        let condition2 = blocking.is_empty();
        per_k.push(KVerdict { k, s_k, condition1, condition2, admissible: condition1 && condition2, blocking });
    }
    let minimal_k = per_k.iter().find(|v| v.admissible).map(|v| v.k);
    let total = sums.total();
    let corollary = CorollaryVerdict {
        total,
        exists_solution: total != 1,
        multiplicity_bound: (total != 1).then(|| (1 - total).abs()),
    };
    Ok(CriterionReport {
        theorem: theorem.into(),
        tuple_convention: SCHEMA_TUPLE_CONVENTION.into(),
        f1: f1.to_vec(),
        l_sharp: sums.l_sharp,
        conclusion: conclude(minimal_k, &sums),
        sums: sums.sums,
        per_k,
        minimal_k,
        corollary,
    })
}

/// Conditions 1–2 of the main existence theorem for every k in `0..=l_#+1`.
pub fn check_theorem_main(f1: &[F1Entry]) -> CriterionReport {
    report("main", f1, None).expect("no μ lookups without a μ table")
}

/// The total-sum test.
pub fn check_corollary(f1: &[F1Entry]) -> CorollaryVerdict {
    check_theorem_main(f1).corollary
}

/// Condition 2 replaced by vanishing intersection numbers.
pub fn check_theorem_general(f1: &[F1Entry], mu: &MuTable) -> Result<CriterionReport> {
    report("general", f1, Some(mu))
}
