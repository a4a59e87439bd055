use std::collections::BTreeSet;

use crcurv_core::criterion::*;
use crcurv_core::Error;
use proptest::prelude::*;

#[derive(Clone, Debug)]
struct Raw {
    points: Vec<(f64, f64, f64, u8)>,
    g: Vec<f64>,
}

fn raw() -> impl Strategy<Value = Raw> {
    (1usize..=8).prop_flat_map(|n| {
        (
            prop::collection::vec((0.5..3.0f64, -8.0..2.0f64, 0.0..0.3f64, 0u8..=3), n),
            prop::collection::vec(0.01..0.6f64, n * (n - 1) / 2),
        )
            .prop_map(|(points, g)| Raw { points, g })
    })
}

fn build(r: &Raw, order: &[usize]) -> AbstractCriticalData {
    let label = |i: usize| format!("p{i}");
    let points = order
        .iter()
        .map(|&i| {
            let (k, lap_k, a, morse) = r.points[i];
            PointData { label: label(i), k, lap_k, a, morse }
        })
        .collect();
    let n = r.points.len();
    let mut pairs = Vec::new();
    let mut c = 0;
    for i in 0..n {
        for j in i + 1..n {
            pairs.push(PairData { i: label(i), j: label(j), g: r.g[c] });
            c += 1;
        }
    }
    AbstractCriticalData::new(points, pairs).unwrap()
}

fn f1_sets(e: &Enumeration) -> BTreeSet<BTreeSet<String>> {
    e.f1().map(|v| v.labels.iter().cloned().collect()).collect()
}

fn enumerate_or_skip(d: &AbstractCriticalData) -> Option<Enumeration> {
    match enumerate_f1(d, &CriterionConfig::default()) {
        Ok(e) => Some(e),
        Err(Error::C1Violation { .. }) | Err(Error::C0Violation { .. }) => None,
        Err(e) => panic!("{e}"),
    }
}

/// Roots of the characteristic polynomial of a symmetric matrix of size ≤ 3.
fn least_root(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        1 => m[0][0],
        2 => {
            let (a, b, c) = (m[0][0], m[0][1], m[1][1]);
            0.5 * (a + c) - (0.25 * (a - c) * (a - c) + b * b).sqrt()
        }
        3 => {
            let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
            let p1 = m[0][1].powi(2) + m[0][2].powi(2) + m[1][2].powi(2);
            let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
            let p = (p2 / 6.0).sqrt();
            if p == 0.0 {
                return q;
            }
            let b: Vec<Vec<f64>> = (0..3)
                .map(|i| (0..3).map(|j| (m[i][j] - if i == j { q } else { 0.0 }) / p).collect())
                .collect();
            let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
                + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
            let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
            q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
        }
        _ => unreachable!(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn f1_is_closed_under_subtuples(r in raw()) {
        let d = build(&r, &(0..r.points.len()).collect::<Vec<_>>());
        let Some(e) = enumerate_or_skip(&d) else { return Ok(()) };
        let sets = f1_sets(&e);
        for s in &sets {
            for drop in s {
                let mut sub = s.clone();
                sub.remove(drop);
                if !sub.is_empty() {
                    prop_assert!(sets.contains(&sub), "{sub:?} missing below {s:?}");
                }
            }
        }
    }

    #[test]
    fn pruning_matches_brute_force(r in raw()) {
        let d = build(&r, &(0..r.points.len()).collect::<Vec<_>>());
        let Some(e) = enumerate_or_skip(&d) else { return Ok(()) };
        let full = enumerate_f1_unpruned(&d, &CriterionConfig::default()).unwrap();
        prop_assert_eq!(f1_sets(&e), f1_sets(&full));
        for (a, b) in e.verdicts.iter().zip(&full.verdicts) {
            prop_assert_eq!(&a.labels, &b.labels);
            prop_assert_eq!(a.iota, b.iota);
            if a.pruned {
                prop_assert!(b.rho <= a.rho + 1e-12, "pruned bound {} below true {}", a.rho, b.rho);
            } else {
                prop_assert_eq!(a.rho, b.rho);
            }
        }
    }

    #[test]
    fn least_eigenvalue_matches_characteristic_roots(r in raw()) {
        let d = build(&r, &(0..r.points.len()).collect::<Vec<_>>());
        let n = d.points.len();
        for mask in 1u32..(1 << n.min(6)) {
            let t: Vec<usize> = (0..n).filter(|b| mask & (1 << b) != 0).collect();
            if t.len() > 3 {
                continue;
            }
            let m = build_matrix(&d, &t).unwrap();
            let scale = m.entries.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs()));
            let got = least_eigenvalue(&m).unwrap();
            prop_assert!((got - least_root(&m.entries)).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn euler_hopf_sums_match_direct_sum(iotas in prop::collection::vec(0u32..12, 0..30)) {
        let s = euler_hopf_sums(&iotas);
        for k in 0..16u32 {
            let direct: i64 = iotas.iter().filter(|&&i| i < k).map(|&i| if i % 2 == 0 { 1 } else { -1 }).sum();
            prop_assert_eq!(s.at(k), direct);
        }
        let total: i64 = iotas.iter().map(|&i| if i % 2 == 0 { 1 } else { -1 }).sum();
        prop_assert_eq!(s.total(), total);
        prop_assert_eq!(s.l_sharp, iotas.iter().copied().max());
    }

    #[test]
    fn relabeling_changes_nothing(r in raw(), seed in any::<u64>()) {
        let n = r.points.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a = build(&r, &(0..n).collect::<Vec<_>>());
        let b = build(&r, &order);
        let (Some(ea), Some(eb)) = (enumerate_or_skip(&a), enumerate_or_skip(&b)) else { return Ok(()) };
        prop_assert_eq!(f1_sets(&ea), f1_sets(&eb));
        let key = |e: &Enumeration| {
            let mut v: Vec<(BTreeSet<String>, u32, i64)> = e
                .verdicts
                .iter()
                .filter(|v| !v.pruned)
                .map(|v| (v.labels.iter().cloned().collect(), v.iota, (v.rho * 1e9).round() as i64))
                .collect();
            v.sort();
            v
        };
        prop_assert_eq!(key(&ea), key(&eb));
        let ra = check_theorem_main(&F1Entry::from_enumeration(&ea));
        let rb = check_theorem_main(&F1Entry::from_enumeration(&eb));
        prop_assert_eq!(ra.conclusion, rb.conclusion);
        prop_assert_eq!(ra.sums, rb.sums);
    }

    #[test]
    fn common_scaling_preserves_verdicts(r in raw(), c in 0.05..20.0f64) {
        let a = build(&r, &(0..r.points.len()).collect::<Vec<_>>());
        let b = a.scaled(c).unwrap();
        let (Some(ea), Some(eb)) = (enumerate_or_skip(&a), enumerate_or_skip(&b)) else { return Ok(()) };
        prop_assert_eq!(&ea.k_plus, &eb.k_plus);
        prop_assert_eq!(f1_sets(&ea), f1_sets(&eb));
        for (x, y) in ea.verdicts.iter().zip(&eb.verdicts) {
            if !x.pruned && !y.pruned {
                prop_assert!((y.rho - c * x.rho).abs() < 1e-9 * (1.0 + (c * x.rho).abs()));
            }
        }
        let ra = check_theorem_main(&F1Entry::from_enumeration(&ea));
        let rb = check_theorem_main(&F1Entry::from_enumeration(&eb));
        prop_assert_eq!(ra.per_k, rb.per_k);
        prop_assert_eq!(ra.conclusion, rb.conclusion);
    }

    #[test]
    fn sums_settle_on_the_corollary_total(r in raw()) {
        let d = build(&r, &(0..r.points.len()).collect::<Vec<_>>());
        let Some(e) = enumerate_or_skip(&d) else { return Ok(()) };
        let f1 = F1Entry::from_enumeration(&e);
        let rep = check_theorem_main(&f1);
        let last = rep.sums.last().unwrap();
        prop_assert_eq!(last.s_k, rep.corollary.total);
        let s = euler_hopf_sums(&f1.iter().map(|x| x.iota).collect::<Vec<_>>());
        for k in last.k..last.k + 5 {
            prop_assert_eq!(s.at(k), rep.corollary.total);
        }
        if let Some(k) = rep.minimal_k {
            prop_assert!(rep.conclusion.exists_solution);
            prop_assert_eq!(rep.conclusion.multiplicity_bound, Some((1 - s.at(k)).abs()));
        }
    }
}

#[test]
fn general_theorem_without_entries_at_the_tested_index_reduces_to_main() {
    let pt = |l: &str, morse| PointData { label: l.into(), k: 1.0, lap_k: -3.0, a: 0.0, morse };
    let d = AbstractCriticalData::new(
        vec![pt("a", 3), pt("b", 3)],
        vec![PairData { i: "a".into(), j: "b".into(), g: 0.6 }],
    )
    .unwrap();
    let f1 = F1Entry::from_enumeration(&enumerate_f1(&d, &CriterionConfig::default()).unwrap());
    let main = check_theorem_main(&f1);
    let general = check_theorem_general(&f1, &MuTable::new()).unwrap();
    assert_eq!(main.per_k, general.per_k);
    assert_eq!(main.conclusion, general.conclusion);
}
