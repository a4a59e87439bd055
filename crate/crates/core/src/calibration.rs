//! One-time calibration of every normalization constant.
//!
//! The horizontal frame fixes the volume factor of θ₀∧dθ₀; the bubble
//! equation `Δ_{θ₀}δ = δ³` fixes c₁; the pull-back of the sphere contact form
//! `Im(ξ̄·dξ)` through the Cayley chart fixes κ; `L_θ(1)` gives ¼R_θ; and the
//! Green normalization c_G follows from reproducing the constant function.

use alloc::format;
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bubbles::heisenberg_bubble;
use crate::heisenberg::{
    cayley, cayley_generic, gauge_norm, sublaplacian_h, ContactConvention, Derivatives, HField, HPoint,
};
use crate::quadrature::{integrate_sphere, quadrature_h, Focus, HRegion, QuadratureConfig, SphereMeasure};
use crate::scalar::{Jet, Scalar};
use crate::sphere::{conformal_sublaplacian, cr_distance, CurvatureFamily, SpherePoint};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub quadrature: QuadratureConfig,
    /// Points used to certify the bubble identity.
    pub residual_points: usize,
    pub residual_tol: f64,
    pub seed: u64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig { quadrature: QuadratureConfig::default(), residual_points: 1000, residual_tol: 1e-8, seed: 7 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub convention: ContactConvention,
    pub c1: f64,
    /// Max relative residual of the bubble identity over the sample.
    pub c1_residual: f64,
    pub kappa: f64,
    /// Max of `|θ(X)|, |θ(Y)|` relative to `θ(∂t)` and the relative spread of κ.
    pub kappa_residual: f64,
    /// `L_θ(1)`.
    pub quarter_r: f64,
    /// `lim d(cayley(p), cayley(0)) / |p|` as `p → 0`.
    pub chart_distance_constant: f64,
    pub s: f64,
    pub s_levels: Vec<f64>,
    pub s_gaps: Vec<f64>,
    pub c2: f64,
    pub c2_levels: Vec<f64>,
    pub c2_gaps: Vec<f64>,
    pub c_g: f64,
    pub c_g_gap: f64,
}

impl Calibration {
    pub fn measure(&self) -> SphereMeasure {
        SphereMeasure { kappa: self.kappa, convention: self.convention }
    }

    pub fn compute(cfg: &CalibrationConfig) -> Result<Self> {
        let convention = ContactConvention::from_sign(1.0)?;
        let (c1, c1_residual) = calibrate_c1(&convention, 1.0, cfg)?;
        let (kappa, kappa_residual) = calibrate_kappa(&convention)?;
        let mut calib = Calibration {
            convention,
            c1,
            c1_residual,
            kappa,
            kappa_residual,
            quarter_r: f64::NAN,
            chart_distance_constant: chart_distance_constant(),
            s: f64::NAN,
            s_levels: Vec::new(),
            s_gaps: Vec::new(),
            c2: f64::NAN,
            c2_levels: Vec::new(),
            c2_gaps: Vec::new(),
            c_g: f64::NAN,
            c_g_gap: f64::NAN,
        };
        calib.quarter_r = quarter_r(&calib)?;
        let (s, c2) = constants_s_c2(c1, &convention, &cfg.quadrature)?;
        calib.s = s.value;
        calib.s_levels = s.levels;
        calib.s_gaps = s.gaps;
        calib.c2 = c2.value;
        calib.c2_levels = c2.levels;
        calib.c2_gaps = c2.gaps;
        let a = SpherePoint::north();
        let inv_d2 = integrate_sphere(
            &|x: SpherePoint, out: &mut [f64]| {
                let d = cr_distance(a, x);
                out[0] = 1.0 / (d * d);
            },
            1,
            &[Focus { center: a, scale: 1.0 }],
            &calib.measure(),
            &cfg.quadrature,
        )?;
        calib.c_g = 1.0 / (calib.quarter_r * inv_d2.value[0]);
        calib.c_g_gap = inv_d2.gap;
        Ok(calib)
    }
}

/// Deterministic uniform sample of a gauge ball centered at the identity.
pub fn sample_gauge_ball(n: usize, radius: f64, seed: u64) -> Vec<HPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = move || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = HPoint::new(radius * unit(), radius * unit(), radius * radius * unit());
        if gauge_norm(p) <= radius {
            out.push(p);
        }
    }
    out
}

struct ShapeField {
    lambda: f64,
}

impl HField for ShapeField {
    fn value(&self, p: HPoint) -> f64 {
        heisenberg_bubble(p.coords(), 1.0, self.lambda)
    }
    fn jet(&self, p: HPoint) -> Option<Jet<3>> {
        Some(heisenberg_bubble(Jet::<3>::vars(p.coords()), 1.0, self.lambda))
    }
}

/// Solves `Δ(c δ₁) = (c δ₁)³` at one interior point for c, then certifies
/// the identity on a sample of points.
pub fn calibrate_c1(conv: &ContactConvention, lambda: f64, cfg: &CalibrationConfig) -> Result<(f64, f64)> {
    if !(lambda > 0.0) {
        return Err(Error::Config("calibration scale must be positive".into()));
    }
    let shape = ShapeField { lambda };
    let p0 = HPoint::new(0.31 / lambda, -0.17 / lambda, 0.23 / (lambda * lambda));
    let lap = sublaplacian_h(&shape, p0, conv, Derivatives::Analytic)?;
    let f = shape.value(p0);
    if !(lap > 0.0) {
        return Err(Error::Convention { what: "bubble sign (Δδ must be positive)".into(), residual: lap });
    }
    let c1 = libm::sqrt(lap / (f * f * f));
    let mut worst = 0.0f64;
    for p in sample_gauge_ball(cfg.residual_points, 2.0 / libm::sqrt(lambda), cfg.seed) {
        let d = shape.value(p) * c1;
        let l = sublaplacian_h(&shape, p, conv, Derivatives::Analytic)? * c1;
        worst = worst.max(libm::fabs(l - d * d * d) / (d * d * d));
    }
    if !(worst < cfg.residual_tol) {
        return Err(Error::Convention { what: "bubble identity".into(), residual: worst });
    }
    Ok((c1, worst))
}

/// κ from `cayley*(Im ξ̄·dξ) = u_C² θ₀`, with a check that the pull-back
/// annihilates the horizontal frame.
pub fn calibrate_kappa(conv: &ContactConvention) -> Result<(f64, f64)> {
    let s = conv.vectorfield_sign;
    let mut k2 = Vec::new();
    let mut worst = 0.0f64;
    for p in sample_gauge_ball(50, 1.5, 3) {
        let c = cayley_generic(Jet::<3>::vars(p.coords()));
        // Im(ξ̄ dξ) = Σ a db − b da over the pairs (a, b) = (Re ξ_j, Im ξ_j).
        let mut w = [0.0; 3];
        for j in 0..2 {
            let (a, b) = (&c[2 * j], &c[2 * j + 1]);
            for k in 0..3 {
                w[k] += a.v * b.g[k] - b.v * a.g[k];
            }
        }
        let (x, y) = (p.x(), p.y());
        let wx = w[0] + 2.0 * s * y * w[2];
        let wy = w[1] - 2.0 * s * x * w[2];
        worst = worst.max(libm::fabs(wx) / w[2]).max(libm::fabs(wy) / w[2]);
        let den = {
            let a = 1.0 + p.z.norm_sqr();
            a * a + p.t * p.t
        };
        if !(w[2] > 0.0) {
            return Err(Error::Convention { what: "orientation of the Cayley chart".into(), residual: w[2] });
        }
        k2.push(w[2] * den);
    }
    let mean = k2.iter().sum::<f64>() / k2.len() as f64;
    for v in &k2 {
        worst = worst.max(libm::fabs(v - mean) / mean);
    }
    if !(worst < 1e-10) {
        return Err(Error::Convention { what: "Cayley chart is not CR for this frame".into(), residual: worst });
    }
    Ok((libm::sqrt(mean), worst))
}

/// `L_θ(1)` at several points; they must agree.
fn quarter_r(calib: &Calibration) -> Result<f64> {
    let one = CurvatureFamily::Constant { c: 1.0 };
    let pts = [
        SpherePoint::north(),
        SpherePoint::from_reals([0.3, -0.5, 0.6, 0.2])?,
        SpherePoint::from_reals([-0.9, 0.1, -0.2, -0.3])?,
    ];
    let vals: Vec<f64> = pts
        .iter()
        .map(|x| conformal_sublaplacian(&one, *x, calib, Derivatives::Analytic))
        .collect::<Result<_>>()?;
    let spread = vals.iter().map(|v| libm::fabs(v - vals[0])).fold(0.0, f64::max);
    if spread > 1e-10 * libm::fabs(vals[0]) {
        return Err(Error::Convention { what: format!("L(1) is not constant: {vals:?}"), residual: spread });
    }
    Ok(vals[0])
}

// The ratio is 2 + O(|p|²) along dilations, so one Richardson step suffices.
fn chart_distance_constant() -> f64 {
    let ratio = |s: f64| {
        let p = HPoint::new(0.6, -0.4, 0.5).dilate(s);
        cr_distance(cayley(p), cayley(HPoint::IDENTITY)) / gauge_norm(p)
    };
    (4.0 * ratio(5e-4) - ratio(1e-3)) / 3.0
}

/// `S = c₁⁴ ∫ |1+|z|²−it|^{-4}` and `c₂ = c₁³ ∫ |1+|z|²−it|^{-3}` over H¹.
pub fn constants_s_c2(
    c1: f64,
    conv: &ContactConvention,
    cfg: &QuadratureConfig,
) -> Result<(crate::quadrature::QuadratureResult, crate::quadrature::QuadratureResult)> {
    let w2 = |p: HPoint| {
        let a = 1.0 + p.z.norm_sqr();
        a * a + p.t * p.t
    };
    let c14 = c1 * c1 * c1 * c1;
    let c13 = c1 * c1 * c1;
    let s = quadrature_h(&|p: HPoint| c14 / (w2(p) * w2(p)), HRegion::Whole, conv, cfg)?;
    let c2 = quadrature_h(&|p: HPoint| c13 * Scalar::powf(w2(p), -1.5), HRegion::Whole, conv, cfg)?;
    Ok((s, c2))
}

#[cfg(test)]
pub(crate) fn test_calibration() -> &'static Calibration {
    static CELL: std::sync::OnceLock<Calibration> = std::sync::OnceLock::new();
    CELL.get_or_init(|| Calibration::compute(&CalibrationConfig::default()).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn constants_match_closed_forms() {
        let c = test_calibration();
        assert_eq!(c.convention.volume_factor, 4.0);
        assert!((c.c1 - 2.0).abs() < 1e-12, "c1 = {}", c.c1);
        assert!((c.kappa - 2f64.sqrt()).abs() < 1e-12);
        assert!((c.quarter_r - 2.0).abs() < 1e-9, "{}", c.quarter_r);
        assert!((c.chart_distance_constant - 2.0).abs() < 1e-8);
        assert!((c.s - 16.0 * PI * PI).abs() < 1e-8 * c.s);
        assert!((c.c2 - 64.0 * PI).abs() < 1e-8 * c.c2);
        assert!(c.c1_residual < 1e-8);
    }

    #[test]
    fn c1_is_scale_independent() {
        let conv = ContactConvention::STANDARD;
        let cfg = CalibrationConfig { residual_points: 50, ..Default::default() };
        let (a, _) = calibrate_c1(&conv, 1.0, &cfg).unwrap();
        let (b, _) = calibrate_c1(&conv, 7.0, &cfg).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn wrong_frame_is_rejected() {
        let conv = ContactConvention::from_sign(-1.0).unwrap();
        assert!(matches!(calibrate_kappa(&conv), Err(Error::Convention { .. })));
    }
}
