//! Linearized dynamics near infinity: `dΛ/ds = −M Λ` on the inverse
//! concentration scales, integrated with an adaptive Dormand–Prince pair.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::criterion::{build_matrix, least_eigenvalue, AbstractCriticalData};
use crate::{Error, Result};

/// α with `α_i² K_i` all equal and `Σ α_i² = 1`.
pub fn alpha_equilibrium(k: &[f64]) -> Result<Vec<f64>> {
    if k.is_empty() || k.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Input("K values must be positive".into()));
    }
    let raw: Vec<f64> = k.iter().map(|v| 1.0 / libm::sqrt(*v)).collect();
    let n = libm::sqrt(raw.iter().map(|a| a * a).sum::<f64>());
    Ok(raw.into_iter().map(|a| a / n).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    /// Canonical start `Λ_i`.
    pub start: f64,
    /// Exit once `|Λ| > exit_factor · |Λ₀|`.
    pub exit_factor: f64,
    /// Converged once `|Λ| < converge_tol`.
    pub converge_tol: f64,
    pub max_time: f64,
    pub max_steps: usize,
    pub rtol: f64,
    pub atol: f64,
    /// Rows in the resampled trajectory.
    pub samples: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            start: 1e-2,
            exit_factor: 10.0,
            converge_tol: 1e-6,
            max_time: 1e7,
            max_steps: 2_000_000,
            rtol: 1e-8,
            atol: 1e-14,
            samples: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    ConvergedToInfinity,
    Exited,
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub s: f64,
    pub lambda: Vec<f64>,
    /// `ΛᵀMΛ`.
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub samples: Vec<FlowSample>,
    pub terminal: Terminal,
    pub terminal_norm: f64,
    pub final_time: f64,
    pub steps: usize,
}

fn matvec(m: &[Vec<f64>], x: &[f64], out: &mut [f64]) {
    for (o, row) in out.iter_mut().zip(m) {
        *o = -row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

fn norm(x: &[f64]) -> f64 {
    libm::sqrt(x.iter().map(|v| v * v).sum())
}

fn energy(m: &[Vec<f64>], x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (i, row) in m.iter().enumerate() {
        for (j, a) in row.iter().enumerate() {
            acc += x[i] * a * x[j];
        }
    }
    acc
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

// One accepted step with its continuous extension.
struct Dense {
    s0: f64,
    h: f64,
    r: [Vec<f64>; 5],
}

impl Dense {
    fn at(&self, s: f64) -> Vec<f64> {
        let th = ((s - self.s0) / self.h).clamp(0.0, 1.0);
        let th1 = 1.0 - th;
        let r = &self.r;
        (0..r[0].len())
            .map(|i| r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i]))))
            .collect()
    }
}

/// Integrates `dΛ/ds = −MΛ` from `lambda0` and classifies the end state.
pub fn integrate(m: &[Vec<f64>], lambda0: &[f64], cfg: &FlowConfig) -> Result<TrajectoryRecord> {
    let n = lambda0.len();
    if m.len() != n || m.iter().any(|r| r.len() != n) || n == 0 {
        return Err(Error::Input("matrix and start vector sizes differ".into()));
    }
    if lambda0.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Input("flow start must be strictly positive".into()));
    }
    let n0 = norm(lambda0);
    let mut x = lambda0.to_vec();
    let mut s = 0.0;
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut xn = vec![0.0; n];
    let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(libm::fabs(*v))).max(1e-300);
    let mut h = 0.01 / scale;
    let mut dense: Vec<Dense> = Vec::new();
    matvec(m, &x, &mut k[0]);
    let mut steps = 0;
    let terminal = loop {
        let nx = norm(&x);
        if nx < cfg.converge_tol {
            break Terminal::ConvergedToInfinity;
        }
        if nx > cfg.exit_factor * n0 {
            break Terminal::Exited;
        }
        if s >= cfg.max_time || steps >= cfg.max_steps {
            break Terminal::BudgetExhausted;
        }
        if h < 1e-14 * (1.0 + s) / scale {
            return Err(Error::Integration(format!("step size underflow at s = {s}")));
        }
        let step = h.min(cfg.max_time - s);
        for st in 1..7 {
            for i in 0..n {
                let mut acc = x[i];
                for (j, kj) in k.iter().enumerate().take(st) {
                    acc += step * A[st][j] * kj[i];
                }
                tmp[i] = acc;
            }
            matvec(m, &tmp, &mut k[st]);
        }
        // The seventh stage is evaluated at the fifth-order solution.
        xn.copy_from_slice(&tmp);
        let mut err = 0.0f64;
        for i in 0..n {
            let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum::<f64>() * step;
            let sc = cfg.atol + cfg.rtol * libm::fabs(x[i]).max(libm::fabs(xn[i]));
            err = err.max(libm::fabs(e) / sc);
        }
        steps += 1;
        if err <= 1.0 {
            let r1: Vec<f64> = (0..n).map(|i| xn[i] - x[i]).collect();
            let r2: Vec<f64> = (0..n).map(|i| step * k[0][i] - r1[i]).collect();
            let r3: Vec<f64> = (0..n).map(|i| r1[i] - step * k[6][i] - r2[i]).collect();
            let r4: Vec<f64> = (0..n).map(|i| step * (0..7).map(|j| D[j] * k[j][i]).sum::<f64>()).collect();
            dense.push(Dense { s0: s, h: step, r: [x.clone(), r1, r2, r3, r4] });
            s = if step < h { cfg.max_time } else { s + step };
            x.copy_from_slice(&xn);
            let k6 = k[6].clone();
            k[0].copy_from_slice(&k6);
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * libm::pow(err, -0.2)).clamp(0.2, 5.0) };
        h = if step < h { h.max(step * fac) } else { step * fac };
    };
    let samples = resample(m, &dense, lambda0, s, cfg.samples);
    Ok(TrajectoryRecord { samples, terminal, terminal_norm: norm(&x), final_time: s, steps })
}

/// Samples the continuous extension at uniform times on `[0, end]`.
fn resample(m: &[Vec<f64>], dense: &[Dense], x0: &[f64], end: f64, count: usize) -> Vec<FlowSample> {
    let mut out = Vec::with_capacity(count);
    let mut seg = 0;
    for r in 0..count {
        let s = if count <= 1 { end } else { end * r as f64 / (count - 1) as f64 };
        while seg + 1 < dense.len() && dense[seg].s0 + dense[seg].h < s {
            seg += 1;
        }
        let lambda = if dense.is_empty() { x0.to_vec() } else { dense[seg].at(s) };
        let e = energy(m, &lambda);
        out.push(FlowSample { s, lambda, energy: e });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TupleClass {
    CriticalPointAtInfinity,
    NotAttained,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub labels: Vec<alloc::string::String>,
    pub class: TupleClass,
    pub rho: f64,
    pub trajectory: TrajectoryRecord,
}

/// Classifies a tuple by running the flow from the canonical start; the
/// answer must agree with the sign of ρ.
pub fn classify_tuple(data: &AbstractCriticalData, tuple: &[usize], cfg: &FlowConfig) -> Result<Classification> {
    let m = build_matrix(data, tuple)?;
    let rho = least_eigenvalue(&m)?;
    classify_matrix(&m.entries, rho, cfg).map(|(class, trajectory)| Classification {
        labels: m.labels,
        class,
        rho,
        trajectory,
    })
}

pub fn classify_matrix(m: &[Vec<f64>], rho: f64, cfg: &FlowConfig) -> Result<(TupleClass, TrajectoryRecord)> {
    let start = vec![cfg.start; m.len()];
    let t = integrate(m, &start, cfg)?;
    let class = match t.terminal {
        Terminal::ConvergedToInfinity => TupleClass::CriticalPointAtInfinity,
        _ => TupleClass::NotAttained,
    };
    if (class == TupleClass::CriticalPointAtInfinity) != (rho > 0.0) {
        return Err(Error::Consistency(format!(
            "flow classification {class:?} disagrees with ρ = {rho:e} (terminal {:?})",
            t.terminal
        )));
    }
    Ok((class, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_examples() {
        let a = alpha_equilibrium(&[2.0, 2.0, 2.0]).unwrap();
        assert!(a.iter().all(|v| (v - 1.0 / 3f64.sqrt()).abs() < 1e-15));
        let a = alpha_equilibrium(&[1.0, 4.0]).unwrap();
        assert!((a[0] / a[1] - 2.0).abs() < 1e-15);
        assert!((a[0] * a[0] - 4.0 * a[1] * a[1]).abs() < 1e-15);
    }

    #[test]
    fn identity_decays_exponentially() {
        let m = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let t = integrate(&m, &[0.01, 0.02], &FlowConfig::default()).unwrap();
        assert_eq!(t.terminal, Terminal::ConvergedToInfinity);
        let n0 = (0.01f64.powi(2) + 0.02f64.powi(2)).sqrt();
        for smp in &t.samples {
            let n = norm(&smp.lambda);
            assert!((n - n0 * (-smp.s).exp()).abs() < 1e-7 * n0, "s = {}", smp.s);
        }
        assert_eq!(t.samples.len(), FlowConfig::default().samples);
    }

    #[test]
    fn unstable_direction_exits() {
        let m = vec![vec![1.0, 0.0], vec![0.0, -1.0]];
        let t = integrate(&m, &[0.01, 0.01], &FlowConfig::default()).unwrap();
        assert_eq!(t.terminal, Terminal::Exited);
    }

    #[test]
    fn energy_is_monotone_for_psd() {
        let m = vec![vec![2.0, -0.5], vec![-0.5, 1.0]];
        let t = integrate(&m, &[0.01, 0.03], &FlowConfig::default()).unwrap();
        for w in t.samples.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-18);
        }
    }

    #[test]
    fn time_rescaling() {
        let m = vec![vec![1.5, -0.4], vec![-0.4, 0.7]];
        let m3: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|v| 3.0 * v).collect()).collect();
        let cfg = FlowConfig { rtol: 1e-10, max_time: 3.0, ..Default::default() };
        let a = integrate(&m, &[0.01, 0.01], &cfg).unwrap();
        let b = integrate(&m3, &[0.01, 0.01], &FlowConfig { max_time: 1.0, ..cfg }).unwrap();
        assert_eq!(a.terminal, Terminal::BudgetExhausted);
        assert_eq!((a.final_time, b.final_time), (3.0, 1.0));
        for (x, y) in a.samples.iter().zip(&b.samples) {
            for i in 0..2 {
                assert!((x.lambda[i] - y.lambda[i]).abs() < 1e-8);
            }
        }
    }
}
