//! Quadrature on H¹ and on S³.
//!
//! H¹ integrals use Heisenberg-polar coordinates
//! `z = R cos β e^{iφ}`, `t = R² sin β` with `dx dy dt = R³ cos β (1 + sin²β) dR dβ dφ`.
//! Every coordinate function is analytic in (R, β, φ), so Gauss–Legendre in β,
//! the trapezoid rule in φ, and Gauss–Legendre panels in R converge
//! geometrically. For the whole space, R is compactified by `R = s/(1 − s)`
//! and [0, 1) is split into dyadic panels `[1 − 2^{-k}, 1 − 2^{-k-1}]`, which
//! resolves every scale from the bubble core to the far field.
//!
//! S³ integrals are split by a smooth partition of unity among a set of focus
//! points. Each piece is pulled back through the chart centered at its focus,
//! dilated by the focus scale, and integrated as an H¹ integral.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::heisenberg::{conformal_factor, Chart, ContactConvention, GaugeBall, HPoint};
use crate::sphere::{cr_distance, SpherePoint};
use crate::{Error, Result};

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if libm::fabs(dz) < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Node counts for one refinement level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HRule {
    /// Gauss–Legendre nodes per radial panel.
    pub radial_nodes: usize,
    /// Number of dyadic radial panels before the final tail panel.
    pub radial_panels: usize,
    pub beta_nodes: usize,
    pub phi_nodes: usize,
}

impl HRule {
    pub fn level(base: &HRule, level: usize) -> HRule {
        let m = 1usize << level;
        HRule {
            radial_nodes: base.radial_nodes * m,
            radial_panels: base.radial_panels,
            beta_nodes: base.beta_nodes * m,
            phi_nodes: base.phi_nodes * m,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub base: HRule,
    /// Levels evaluated (each doubles every node count).
    pub levels: usize,
    /// Required relative gap between the last two levels.
    pub tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            base: HRule { radial_nodes: 8, radial_panels: 44, beta_nodes: 16, phi_nodes: 16 },
            levels: 3,
            tol: 1e-4,
        }
    }
}

impl QuadratureConfig {
    fn validate(&self) -> Result<()> {
        let b = &self.base;
        if self.levels < 2
            || b.radial_nodes == 0
            || b.beta_nodes == 0
            || b.phi_nodes == 0
            || !(self.tol > 0.0)
        {
            return Err(Error::Config(
                "quadrature needs at least two levels, nonzero node counts and a positive tolerance".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    /// Value at the finest level.
    pub value: f64,
    /// Value at the level before.
    pub previous: f64,
    /// `|value − previous| / max(|value|, ∫|f|)`.
    pub gap: f64,
    /// Values at every level, coarsest first.
    pub levels: Vec<f64>,
    /// Gaps between successive levels.
    pub gaps: Vec<f64>,
}

impl QuadratureResult {
    fn from_levels(vals: Vec<f64>, abs: Vec<f64>) -> Self {
        let n = vals.len();
        let gaps: Vec<f64> = (1..n)
            .map(|i| {
                let scale = libm::fabs(vals[i]).max(abs[i]).max(f64::MIN_POSITIVE);
                libm::fabs(vals[i] - vals[i - 1]) / scale
            })
            .collect();
        QuadratureResult {
            value: vals[n - 1],
            previous: vals[n - 2],
            gap: gaps[n - 2],
            levels: vals,
            gaps,
        }
    }

    fn check(self, tol: f64) -> Result<Self> {
        if self.gap <= tol && self.value.is_finite() {
            Ok(self)
        } else {
            Err(Error::Quadrature { value: self.value, previous: self.previous, gap: self.gap })
        }
    }
}

/// One H¹ node set: points in polar coordinates with their weights
/// (Jacobian included, volume factor excluded).
struct PolarGrid {
    beta: Vec<(f64, f64, f64)>, // (cos β, sin β, weight · cos β (1 + sin²β))
    phi: Vec<(f64, f64)>,       // (cos φ, sin φ), weight 2π/n each
    phi_w: f64,
}

impl PolarGrid {
    fn new(rule: &HRule) -> Self {
        let (bx, bw) = gauss_legendre(rule.beta_nodes);
        let beta = bx
            .iter()
            .zip(&bw)
            .map(|(&x, &w)| {
                let b = 0.5 * PI * x;
                let (s, c) = (libm::sin(b), libm::cos(b));
                (c, s, 0.5 * PI * w * c * (1.0 + s * s))
            })
            .collect();
        let n = rule.phi_nodes;
        let phi = (0..n)
            .map(|k| {
                let p = 2.0 * PI * (k as f64 + 0.5) / n as f64;
                (libm::cos(p), libm::sin(p))
            })
            .collect();
        PolarGrid { beta, phi, phi_w: 2.0 * PI / n as f64 }
    }

    /// Calls `visit(point, weight)` for every node at radius R with radial
    /// weight `wr` (the R³ factor is applied here).
    fn shell(&self, r: f64, wr: f64, mut visit: impl FnMut(HPoint, f64)) {
        let r3 = r * r * r * wr * self.phi_w;
        for &(cb, sb, wb) in &self.beta {
            let rho = r * cb;
            let t = r * r * sb;
            for &(cp, sp) in &self.phi {
                visit(HPoint::new(rho * cp, rho * sp, t), r3 * wb);
            }
        }
    }
}

/// Radial nodes `(R, weight)` over the compactified half line.
fn whole_space_radial(rule: &HRule) -> Vec<(f64, f64)> {
    let (gx, gw) = gauss_legendre(rule.radial_nodes);
    let mut out = Vec::with_capacity((rule.radial_panels + 1) * rule.radial_nodes);
    // Work in e = 1 − s so that nodes near s = 1 keep full precision.
    let mut ea = 1.0;
    for k in 0..=rule.radial_panels {
        let eb = if k == rule.radial_panels { 0.0 } else { libm::ldexp(1.0, -(k as i32) - 1) };
        let half = 0.5 * (ea - eb);
        for (&x, &w) in gx.iter().zip(&gw) {
            let e = eb + half * (1.0 - x);
            out.push(((1.0 - e) / e, half * w / (e * e)));
        }
        ea = eb;
    }
    out
}

/// Region for [`quadrature_h`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HRegion {
    Ball(GaugeBall),
    Whole,
}

/// One level of `∫ f · volume_factor dx dy dt`; returns (∫f, ∫|f|).
pub fn quadrature_h_rule<F: Fn(HPoint) -> f64 + ?Sized>(
    f: &F,
    region: HRegion,
    conv: &ContactConvention,
    rule: &HRule,
) -> (f64, f64) {
    let grid = PolarGrid::new(rule);
    let mut acc = 0.0;
    let mut abs = 0.0;
    match region {
        HRegion::Whole => {
            for (r, wr) in whole_space_radial(rule) {
                grid.shell(r, wr, |p, w| {
                    let v = f(p) * w;
                    acc += v;
                    abs += libm::fabs(v);
                });
            }
        }
        HRegion::Ball(ball) => {
            // R runs to the gauge sphere along each (β, φ) ray.
            let (gx, gw) = gauss_legendre(rule.radial_nodes);
            for &(cb, sb, wb) in &grid.beta {
                let n = libm::sqrt(libm::sqrt(cb * cb * cb * cb + sb * sb));
                let rmax = ball.radius / n;
                for (&x, &w) in gx.iter().zip(&gw) {
                    let r = 0.5 * rmax * (x + 1.0);
                    let wr = 0.5 * rmax * w * r * r * r * wb * grid.phi_w;
                    let rho = r * cb;
                    let t = r * r * sb;
                    for &(cp, sp) in &grid.phi {
                        let q = HPoint::new(rho * cp, rho * sp, t);
                        let v = f(conv.translate(ball.center, q)) * wr;
                        acc += v;
                        abs += libm::fabs(v);
                    }
                }
            }
        }
    }
    (acc * conv.volume_factor, abs * conv.volume_factor)
}

/// `∫ f θ₀∧dθ₀` over a gauge ball or all of H¹, evaluated at successive
/// refinement levels until the last two agree to `cfg.tol`.
pub fn quadrature_h<F: Fn(HPoint) -> f64 + ?Sized>(
    f: &F,
    region: HRegion,
    conv: &ContactConvention,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult> {
    cfg.validate()?;
    let mut vals = Vec::new();
    let mut abs = Vec::new();
    for l in 0..cfg.levels {
        let (v, a) = quadrature_h_rule(f, region, conv, &HRule::level(&cfg.base, l));
        if !v.is_finite() {
            return Err(Error::Evaluation("non-finite integrand in quadrature".into()));
        }
        vals.push(v);
        abs.push(a);
    }
    QuadratureResult::from_levels(vals, abs).check(cfg.tol)
}

/// A point around which a sphere integrand concentrates, with its scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Focus {
    pub center: SpherePoint,
    pub scale: f64,
}

/// Geometric data needed to turn chart integrals into sphere integrals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphereMeasure {
    pub kappa: f64,
    pub convention: ContactConvention,
}

fn one_minus_inner_sq(x: &SpherePoint, a: &SpherePoint) -> f64 {
    (Complex64::new(1.0, 0.0) - x.inner(a)).norm_sqr()
}

/// Partition weight of focus `i` at x: `∏_{k≠i} D_k / Σ_j ∏_{k≠j} D_k` with
/// `D_k = |1 − ⟨x, a_k⟩|⁶`.
fn partition_weight(x: &SpherePoint, centers: &[SpherePoint], i: usize, d: &mut [f64]) -> f64 {
    if centers.len() == 1 {
        return 1.0;
    }
    for (k, a) in centers.iter().enumerate() {
        let q = one_minus_inner_sq(x, a);
        d[k] = q * q * q;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..centers.len() {
        let mut prod = 1.0;
        for (k, dk) in d.iter().enumerate() {
            if k != j {
                prod *= dk;
            }
        }
        if j == i {
            num = prod;
        }
        den += prod;
    }
    num / den
}

/// Merges foci closer than 1e-8 (keeping the larger scale); an empty list
/// becomes a single unit-scale focus at (0, 1).
fn normalize_foci(foci: &[Focus]) -> Vec<Focus> {
    let mut out: Vec<Focus> = Vec::new();
    for f in foci {
        if let Some(g) = out.iter_mut().find(|g| cr_distance(g.center, f.center) < 1e-8) {
            g.scale = g.scale.max(f.scale);
        } else {
            out.push(*f);
        }
    }
    if out.is_empty() {
        out.push(Focus { center: SpherePoint::north(), scale: 1.0 });
    }
    out
}

/// One level of `∫_{S³} f dv` for an integrand with `n` components written
/// into the output slice; returns the integrals and the integrals of the
/// absolute values.
pub fn integrate_sphere_rule<F: Fn(SpherePoint, &mut [f64]) + ?Sized>(
    f: &F,
    n: usize,
    foci: &[Focus],
    measure: &SphereMeasure,
    rule: &HRule,
) -> (Vec<f64>, Vec<f64>) {
    let foci = normalize_foci(foci);
    let centers: Vec<SpherePoint> = foci.iter().map(|f| f.center).collect();
    let grid = PolarGrid::new(rule);
    let radial = whole_space_radial(rule);
    let mut acc = vec![0.0; n];
    let mut abs = vec![0.0; n];
    let mut buf = vec![0.0; n];
    let mut d = vec![0.0; centers.len()];
    for (i, focus) in foci.iter().enumerate() {
        let chart = Chart::centered_at(focus.center);
        let inv = 1.0 / focus.scale;
        let jac = measure.convention.volume_factor * inv * inv * inv * inv;
        for &(r, wr) in &radial {
            grid.shell(r, wr, |q, w| {
                let p = q.dilate(inv);
                let u = conformal_factor(p, measure.kappa);
                let x = chart.to_sphere(p);
                let pw = partition_weight(&x, &centers, i, &mut d);
                if pw == 0.0 {
                    return;
                }
                let u2 = u * u;
                let wt = w * jac * u2 * u2 * pw;
                f(x, &mut buf);
                for k in 0..n {
                    let c = buf[k] * wt;
                    acc[k] += c;
                    abs[k] += libm::fabs(c);
                }
            });
        }
    }
    (acc, abs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorQuadrature {
    pub value: Vec<f64>,
    /// Largest relative gap between the last two levels over components.
    pub gap: f64,
    pub gaps: Vec<f64>,
}

/// `∫_{S³} f dv` at successive levels until the last two agree to `cfg.tol`
/// in every component (relative to `max(|∫f|, ∫|f|)`).
pub fn integrate_sphere<F: Fn(SpherePoint, &mut [f64]) + ?Sized>(
    f: &F,
    n: usize,
    foci: &[Focus],
    measure: &SphereMeasure,
    cfg: &QuadratureConfig,
) -> Result<VectorQuadrature> {
    cfg.validate()?;
    let mut prev: Option<Vec<f64>> = None;
    let mut gaps = Vec::new();
    for l in 0..cfg.levels {
        let (v, a) = integrate_sphere_rule(f, n, foci, measure, &HRule::level(&cfg.base, l));
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Evaluation("non-finite integrand in sphere quadrature".into()));
        }
        if let Some(p) = &prev {
            let mut g = 0.0f64;
            for k in 0..n {
                let scale = libm::fabs(v[k]).max(a[k]).max(f64::MIN_POSITIVE);
                g = g.max(libm::fabs(v[k] - p[k]) / scale);
            }
            gaps.push(g);
        }
        if l + 1 == cfg.levels {
            let gap = *gaps.last().unwrap_or(&0.0);
            if !(gap <= cfg.tol) {
                return Err(Error::Quadrature {
                    value: v[0],
                    previous: prev.as_ref().map_or(f64::NAN, |p| p[0]),
                    gap,
                });
            }
            return Ok(VectorQuadrature { value: v, gap, gaps });
        }
        prev = Some(v);
    }
    unreachable!("validate() guarantees at least two levels")
}

/// `∫_{S³} f dv` by a product rule in Hopf coordinates
/// `ξ = (cos η e^{iφ₁}, sin η e^{iφ₂})`, where `dv = 2 sin η cos η dη dφ₁ dφ₂`
/// for the contact form `Im(ξ̄·dξ)`. Only suitable for smooth integrands.
pub fn integrate_hopf<F: Fn(SpherePoint) -> f64 + ?Sized>(f: &F, eta_nodes: usize, phi_nodes: usize) -> f64 {
    let (x, w) = gauss_legendre(eta_nodes);
    let dphi = 2.0 * PI / phi_nodes as f64;
    let mut acc = 0.0;
    for (&xe, &we) in x.iter().zip(&w) {
        let eta = 0.25 * PI * (xe + 1.0);
        let (s, c) = (libm::sin(eta), libm::cos(eta));
        let weight = 0.25 * PI * we * 2.0 * s * c * dphi * dphi;
        for i in 0..phi_nodes {
            let p1 = dphi * i as f64;
            for k in 0..phi_nodes {
                let p2 = dphi * k as f64;
                let x = SpherePoint::new_unchecked([Complex64::from_polar(c, p1), Complex64::from_polar(s, p2)]);
                acc += weight * f(x);
            }
        }
    }
    acc
}

/// Lebesgue volume of the unit gauge ball (closed form `π² / 2`).
pub fn unit_gauge_ball_lebesgue_volume() -> f64 {
    PI * PI / 2.0
}
