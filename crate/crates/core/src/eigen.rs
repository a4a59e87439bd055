//! Cyclic Jacobi diagonalization of small dense symmetric matrices.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Clone, Debug, PartialEq)]
pub struct Eigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// `vectors[k]` is a unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

/// Largest asymmetry `|a_ij − a_ji|`.
pub fn asymmetry(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            m = m.max(libm::fabs(a[i][j] - a[j][i]));
        }
    }
    m
}

/// Eigen-decomposition by cyclic Jacobi sweeps. Only the lower triangle of
/// `a` is read.
pub fn symmetric_eigen(a: &[Vec<f64>]) -> Eigen {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if j <= i { a[i][j] } else { a[j][i] }).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..100 {
        let mut off = 0.0;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let s = m[i][j] * m[i][j];
                total += s;
                if i != j {
                    off += s;
                }
            }
        }
        if off <= 1e-32 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = libm::copysign(1.0, theta) / (libm::fabs(theta) + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i][i].total_cmp(&m[j][j]));
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = order.iter().map(|&k| (0..n).map(|i| v[i][k]).collect()).collect();
    Eigen { values, vectors }
}

pub fn least_eigenvalue(a: &[Vec<f64>]) -> f64 {
    if a.is_empty() {
        return f64::NAN;
    }
    symmetric_eigen(a).values[0]
}

/// Cholesky test for positive definiteness (used as a cheap pre-check).
pub fn is_positive_definite(a: &[Vec<f64>]) -> bool {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > 0.0) {
                    return false;
                }
                l[i][i] = libm::sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    true
}
