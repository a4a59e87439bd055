//! Bubbles on H¹ and S³, their interactions, the functional J and its
//! expansion near infinity.
//!
//! In the chart centered at a, the exact sphere bubble is `δ̃ = δ_(0,λ) / u_C`,
//! which in ambient terms reads
//! `δ̃_(a,λ)(x) = (2c₁λ/κ) / |(1 + ⟨x,a⟩) + λ²(1 − ⟨x,a⟩)|`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::calibration::Calibration;
use crate::heisenberg::{Chart, HPoint};
use crate::quadrature::{integrate_sphere, Focus, QuadratureConfig};
use crate::scalar::Scalar;
use crate::sphere::{cr_distance, CurvatureFunction, GenericAmbient, SpherePoint};
use crate::{Error, Result};

/// `c₁λ |1 + λ²(|z|² − it)|^{-1}` in real coordinates (x, y, t).
pub fn heisenberg_bubble<T: Scalar>(p: [T; 3], c1: f64, lambda: f64) -> T {
    let [x, y, t] = p;
    let l2 = lambda * lambda;
    let a = (x * x + y * y) * l2 + 1.0;
    let b = t * l2;
    (a * a + b * b).powf(-0.5) * (c1 * lambda)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bubble {
    pub center: SpherePoint,
    pub lambda: f64,
    pub chart: Chart,
}

impl Bubble {
    pub fn new(center: SpherePoint, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Input(format!("bubble scale must be positive, got {lambda}")));
        }
        Ok(Bubble { center, lambda, chart: Chart::centered_at(center) })
    }

    pub fn exact(&self, calib: &Calibration) -> ExactBubble {
        ExactBubble { a: self.center.reals(), lambda: self.lambda, amplitude: 2.0 * calib.c1 * self.lambda / calib.kappa }
    }
}

/// `δ_(a,λ)(x)` evaluated in the chart of the bubble.
pub fn delta(b: &Bubble, x: SpherePoint, calib: &Calibration) -> Result<f64> {
    let p = b.chart.from_sphere(x)?;
    Ok(heisenberg_bubble(p.coords(), calib.c1, b.lambda))
}

/// The exact sphere bubble as an ambient field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactBubble {
    pub a: [f64; 4],
    pub lambda: f64,
    /// `2c₁λ/κ`.
    pub amplitude: f64,
}

impl ExactBubble {
    /// Fast path for `f64`.
    #[inline]
    pub fn at(&self, x: &SpherePoint) -> f64 {
        let s = x.inner(&SpherePoint::new_unchecked([
            num_complex::Complex64::new(self.a[0], self.a[1]),
            num_complex::Complex64::new(self.a[2], self.a[3]),
        ]));
        let l2 = self.lambda * self.lambda;
        let re = 1.0 + s.re + l2 * (1.0 - s.re);
        let im = s.im * (1.0 - l2);
        self.amplitude / libm::sqrt(re * re + im * im)
    }
}

impl GenericAmbient for ExactBubble {
    fn eval<T: Scalar>(&self, x: [T; 4]) -> T {
        let a = self.a;
        let sr = x[0] * a[0] + x[1] * a[1] + x[2] * a[2] + x[3] * a[3];
        let si = x[1] * a[0] - x[0] * a[1] + x[3] * a[2] - x[2] * a[3];
        let l2 = self.lambda * self.lambda;
        let re = sr * (1.0 - l2) + (1.0 + l2);
        let im = si * (1.0 - l2);
        (re * re + im * im).powf(-0.5) * self.amplitude
    }

    fn describe(&self) -> String {
        format!("exact bubble at {:?}, λ = {}", self.a, self.lambda)
    }
}

pub fn delta_exact(b: &Bubble, x: SpherePoint, calib: &Calibration) -> f64 {
    b.exact(calib).at(&x)
}

/// Quintic smoothstep cutoff: 1 on [0, r/2], 0 on [r, ∞).
pub fn cutoff(d: f64, r: f64) -> f64 {
    if d <= 0.5 * r {
        1.0
    } else if d >= r {
        0.0
    } else {
        let t = (d - 0.5 * r) / (0.5 * r);
        1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }
}

pub const DEFAULT_CUTOFF_RADIUS: f64 = 0.5;

/// `δ̂ = χ(d(a, x)) · δ_(a,λ)/u_C`, supported in the ball of radius r.
pub fn delta_hat(b: &Bubble, x: SpherePoint, r: f64, calib: &Calibration) -> f64 {
    let c = cutoff(cr_distance(b.center, x), r);
    if c == 0.0 {
        0.0
    } else {
        c * delta_exact(b, x, calib)
    }
}

/// `H_(a,λ)(x) = λ(δ̃ − δ̂)(x)`.
pub fn h_value(b: &Bubble, x: SpherePoint, r: f64, calib: &Calibration) -> f64 {
    b.lambda * (delta_exact(b, x, calib) - delta_hat(b, x, r, calib))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HSample {
    pub gauge_radius: f64,
    pub value: f64,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HProfile {
    pub lambda: f64,
    pub samples: Vec<HSample>,
    /// Largest |H| over the samples.
    pub sup: f64,
    /// `H(a)`.
    pub at_center: f64,
}

/// Samples `H` along chart rays at the given gauge radii; each sample keeps
/// the value of largest magnitude over a few ray directions.
pub fn h_profile(b: &Bubble, radii: &[f64], r: f64, calib: &Calibration) -> HProfile {
    let dirs = [(1.0, 0.0), (0.0, 1.0), (0.6, 0.8), (-0.8, 0.6)];
    let mut samples = Vec::with_capacity(radii.len());
    let mut sup = 0.0f64;
    for &g in radii {
        let mut best = 0.0f64;
        for &(cb, sb) in &dirs {
            let n = libm::sqrt(libm::sqrt(cb * cb * cb * cb + sb * sb));
            let rr = g / n;
            let p = HPoint::new(rr * cb, 0.0, rr * rr * sb);
            let v = h_value(b, b.chart.to_sphere(p), r, calib);
            if libm::fabs(v) > libm::fabs(best) {
                best = v;
            }
        }
        sup = sup.max(libm::fabs(best));
        samples.push(HSample { gauge_radius: g, value: best, lambda: b.lambda });
    }
    HProfile { lambda: b.lambda, samples, sup, at_center: h_value(b, b.center, r, calib) }
}

/// `ε_ij = (λ_i/λ_j + λ_j/λ_i + λ_iλ_j d(a_i, a_j)²)^{-1}`.
pub fn eps_ij(bi: &Bubble, bj: &Bubble) -> f64 {
    let d = cr_distance(bi.center, bj.center);
    1.0 / (bi.lambda / bj.lambda + bj.lambda / bi.lambda + bi.lambda * bj.lambda * d * d)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BubbleConfiguration {
    pub alphas: Vec<f64>,
    pub bubbles: Vec<Bubble>,
}

impl BubbleConfiguration {
    pub fn new(alphas: Vec<f64>, bubbles: Vec<Bubble>) -> Result<Self> {
        if alphas.len() != bubbles.len() || alphas.is_empty() {
            return Err(Error::Input("configuration needs matching, nonempty α and bubble lists".into()));
        }
        if alphas.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::Input("all α must be positive".into()));
        }
        for i in 0..bubbles.len() {
            for j in 0..i {
                if cr_distance(bubbles[i].center, bubbles[j].center) < 1e-12 {
                    return Err(Error::Input(format!("bubble centers {j} and {i} coincide")));
                }
            }
        }
        Ok(BubbleConfiguration { alphas, bubbles })
    }

    pub fn len(&self) -> usize {
        self.bubbles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bubbles.is_empty()
    }

    /// `max_{i,j} |α_i²K(a_i) / α_j²K(a_j) − 1|`.
    pub fn balance_residual(&self, k: &CurvatureFunction) -> f64 {
        let v: Vec<f64> = self.alphas.iter().zip(&self.bubbles).map(|(a, b)| a * a * k.value(b.center)).collect();
        let mut m = 0.0f64;
        for x in &v {
            for y in &v {
                m = m.max(libm::fabs(x / y - 1.0));
            }
        }
        m
    }

    fn foci(&self) -> Vec<Focus> {
        self.bubbles.iter().map(|b| Focus { center: b.center, scale: b.lambda }).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JValue {
    pub value: f64,
    /// `∫ u L_θ u`.
    pub numerator: f64,
    /// `∫ K u⁴`.
    pub denominator_sq: f64,
    pub quadrature_gap: f64,
}

/// `J(u) = ∫ u L_θu / (∫ K u⁴)^{1/2}` for `u = Σ α_i δ̃_i`, using
/// `L_θδ̃_j = δ̃_j³` in the numerator.
pub fn functional_j(
    cfg: &BubbleConfiguration,
    k: &CurvatureFunction,
    calib: &Calibration,
    q: &QuadratureConfig,
) -> Result<JValue> {
    let ex: Vec<ExactBubble> = cfg.bubbles.iter().map(|b| b.exact(calib)).collect();
    let alphas = &cfg.alphas;
    let f = |x: SpherePoint, out: &mut [f64]| {
        let mut u = 0.0;
        let mut lu = 0.0;
        for (a, b) in alphas.iter().zip(&ex) {
            let d = b.at(&x);
            u += a * d;
            lu += a * d * d * d;
        }
        let u2 = u * u;
        out[0] = u * lu;
        out[1] = k.value(x) * u2 * u2;
    };
    let r = integrate_sphere(&f, 2, &cfg.foci(), &calib.measure(), q)?;
    Ok(JValue {
        value: r.value[0] / libm::sqrt(r.value[1]),
        numerator: r.value[0],
        denominator_sq: r.value[1],
        quadrature_gap: r.gap,
    })
}

/// `(⟨δ̃_i, δ̃_j⟩, ⟨δ̃_j, δ̃_i⟩) = (∫ δ̃_j³ δ̃_i, ∫ δ̃_i³ δ̃_j)`.
pub fn inner_product_bubbles(
    bi: &Bubble,
    bj: &Bubble,
    calib: &Calibration,
    q: &QuadratureConfig,
) -> Result<(f64, f64, f64)> {
    let (ei, ej) = (bi.exact(calib), bj.exact(calib));
    let f = |x: SpherePoint, out: &mut [f64]| {
        let (a, b) = (ei.at(&x), ej.at(&x));
        out[0] = b * b * b * a;
        out[1] = a * a * a * b;
    };
    let foci = [Focus { center: bi.center, scale: bi.lambda }, Focus { center: bj.center, scale: bj.lambda }];
    let r = integrate_sphere(&f, 2, &foci, &calib.measure(), q)?;
    Ok((r.value[0], r.value[1], r.gap))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairValue {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub lambdas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub measured_j: f64,
    /// `SΣα_i² / (SΣα_i⁴K(a_i))^{1/2}`.
    pub predicted_leading: f64,
    /// Leading term times `[1 − γ₁⁻¹ Σ_{i≠j} α_iα_j c_ij ε_ij]`.
    pub predicted: f64,
    pub gamma1: f64,
    pub beta1: f64,
    pub eps: Vec<PairValue>,
    pub inner_products: Vec<PairValue>,
    /// Measured `⟨δ̃_i, δ̃_j⟩ / ε_ij`.
    pub c_ij: Vec<PairValue>,
    /// Measured `‖δ̃_i‖²`.
    pub self_norms: Vec<f64>,
    pub relative_gap: f64,
    pub balance_residual: f64,
    pub quadrature_gap: f64,
}

/// Compares the measured J of a configuration with the expansion near
/// infinity (no w-component), using the measured interaction constants.
pub fn verify_expansion(
    cfg: &BubbleConfiguration,
    k: &CurvatureFunction,
    calib: &Calibration,
    q: &QuadratureConfig,
) -> Result<ExpansionReport> {
    let p = cfg.len();
    let ex: Vec<ExactBubble> = cfg.bubbles.iter().map(|b| b.exact(calib)).collect();
    let alphas = &cfg.alphas;
    // Layout: [⟨δ̃_i, δ̃_j⟩ = ∫δ̃_j³δ̃_i for all (i, j)], ∫ u L u, ∫ K u⁴.
    let n = p * p + 2;
    let f = |x: SpherePoint, out: &mut [f64]| {
        let mut d = [0.0f64; 16];
        let mut u = 0.0;
        let mut lu = 0.0;
        for (i, b) in ex.iter().enumerate() {
            d[i] = b.at(&x);
            u += alphas[i] * d[i];
            lu += alphas[i] * d[i] * d[i] * d[i];
        }
        for i in 0..p {
            for j in 0..p {
                out[i * p + j] = d[j] * d[j] * d[j] * d[i];
            }
        }
        let u2 = u * u;
        out[p * p] = u * lu;
        out[p * p + 1] = k.value(x) * u2 * u2;
    };
    if p > 16 {
        return Err(Error::Input("at most 16 bubbles are supported".into()));
    }
    let r = integrate_sphere(&f, n, &cfg.foci(), &calib.measure(), q)?;
    let measured_j = r.value[p * p] / libm::sqrt(r.value[p * p + 1]);
    let s = calib.s;
    let kv: Vec<f64> = cfg.bubbles.iter().map(|b| k.value(b.center)).collect();
    let gamma1: f64 = s * alphas.iter().map(|a| a * a).sum::<f64>();
    let beta1: f64 = s * alphas.iter().zip(&kv).map(|(a, k)| a * a * a * a * k).sum::<f64>();
    let predicted_leading = gamma1 / libm::sqrt(beta1);
    let mut eps = Vec::new();
    let mut inner = Vec::new();
    let mut cij = Vec::new();
    let mut interaction = 0.0;
    for i in 0..p {
        for j in 0..p {
            if i == j {
                continue;
            }
            let e = eps_ij(&cfg.bubbles[i], &cfg.bubbles[j]);
            let ip = r.value[i * p + j];
            interaction += alphas[i] * alphas[j] * ip;
            eps.push(PairValue { i, j, value: e });
            inner.push(PairValue { i, j, value: ip });
            cij.push(PairValue { i, j, value: ip / e });
        }
    }
    let predicted = predicted_leading * (1.0 - interaction / gamma1);
    let self_norms = (0..p).map(|i| r.value[i * p + i]).collect();
    Ok(ExpansionReport {
        lambdas: cfg.bubbles.iter().map(|b| b.lambda).collect(),
        alphas: alphas.clone(),
        measured_j,
        predicted_leading,
        predicted,
        gamma1,
        beta1,
        eps,
        inner_products: inner,
        c_ij: cij,
        self_norms,
        relative_gap: libm::fabs(measured_j - predicted) / libm::fabs(predicted),
        balance_residual: cfg.balance_residual(k),
        quadrature_gap: r.gap,
    })
}

/// Relative PDE residuals `|L_θδ̃ − δ̃³| / δ̃³` at the given points.
pub fn exact_bubble_residuals(
    b: &Bubble,
    points: &[SpherePoint],
    calib: &Calibration,
    how: crate::heisenberg::Derivatives,
) -> Result<Vec<f64>> {
    let ex = b.exact(calib);
    let mut out = vec![0.0; points.len()];
    for (o, x) in out.iter_mut().zip(points) {
        let l = crate::sphere::conformal_sublaplacian(&ex, *x, calib, how)?;
        let d = ex.at(x);
        *o = libm::fabs(l - d * d * d) / (d * d * d);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::test_calibration;
    use crate::heisenberg::Derivatives;
    use crate::sphere::{halton_sphere_points, CurvatureFamily};
    use proptest::prelude::*;

    #[test]
    fn delta_at_center_and_dilation() {
        let c = test_calibration();
        let a = SpherePoint::from_reals([0.2, -0.4, 0.5, 0.7]).unwrap();
        let b = Bubble::new(a, 3.0).unwrap();
        assert!((delta(&b, a, c).unwrap() - c.c1 * 3.0).abs() < 1e-12);
        let p = [0.3, -0.2, 0.4];
        let lhs = heisenberg_bubble(p, c.c1, 5.0);
        let rhs = 5.0 * heisenberg_bubble([5.0 * p[0], 5.0 * p[1], 25.0 * p[2]], c.c1, 1.0);
        assert!((lhs - rhs).abs() < 1e-13 * lhs);
    }

    #[test]
    fn chart_and_global_forms_agree() {
        let c = test_calibration();
        let a = SpherePoint::from_reals([0.2, -0.4, 0.5, 0.7]).unwrap();
        let b = Bubble::new(a, 4.0).unwrap();
        for x in halton_sphere_points(50, 1) {
            let p = b.chart.from_sphere(x).unwrap();
            let u = crate::heisenberg::conformal_factor(p, c.kappa);
            let chart = delta(&b, x, c).unwrap() / u;
            let global = delta_exact(&b, x, c);
            assert!((chart - global).abs() < 1e-10 * global);
        }
    }

    #[test]
    fn exact_bubble_solves_the_equation() {
        let c = test_calibration();
        let b = Bubble::new(SpherePoint::from_reals([0.1, 0.3, -0.6, 0.2]).unwrap(), 2.5).unwrap();
        let pts = halton_sphere_points(40, 5);
        let r = exact_bubble_residuals(&b, &pts, c, Derivatives::Analytic).unwrap();
        assert!(r.iter().all(|v| *v < 1e-9), "{r:?}");
    }

    #[test]
    fn eps_examples() {
        let a = SpherePoint::north();
        let b1 = Bubble::new(a, 5.0).unwrap();
        assert_eq!(eps_ij(&b1, &b1), 0.5);
        let far = Bubble::new(SpherePoint::south(), 5.0).unwrap();
        assert_eq!(eps_ij(&b1, &far), eps_ij(&far, &b1));
    }

    #[test]
    fn single_bubble_energy_is_s() {
        let c = test_calibration();
        let k = CurvatureFunction::from_family(CurvatureFamily::Constant { c: 2.0 }).unwrap();
        let q = QuadratureConfig { tol: 1e-8, ..Default::default() };
        for (a, l) in [([0.3, 0.1, -0.5, 0.8], 1.0), ([-0.6, 0.2, 0.1, 0.4], 30.0)] {
            let b = Bubble::new(SpherePoint::from_reals(a).unwrap(), l).unwrap();
            let cfg = BubbleConfiguration::new(vec![1.0], vec![b]).unwrap();
            let j = functional_j(&cfg, &k, c, &q).unwrap();
            let expect = (c.s / 2.0).sqrt();
            assert!((j.value - expect).abs() < 1e-8 * expect, "{} vs {expect}", j.value);
        }
    }

    #[test]
    fn cutoff_profile() {
        assert_eq!(cutoff(0.1, 0.5), 1.0);
        assert_eq!(cutoff(0.5, 0.5), 0.0);
        assert!((cutoff(0.375, 0.5) - 0.5).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn eps_in_range_and_symmetric(l1 in 0.1..100.0f64, l2 in 0.1..100.0f64, a in prop::array::uniform4(-1.0..1.0f64)) {
            prop_assume!(a.iter().map(|v| v * v).sum::<f64>() > 1e-3);
            let b1 = Bubble::new(SpherePoint::north(), l1).unwrap();
            let b2 = Bubble::new(SpherePoint::from_reals(a).unwrap(), l2).unwrap();
            let e = eps_ij(&b1, &b2);
            prop_assert!(e > 0.0 && e <= 0.5);
            prop_assert_eq!(e, eps_ij(&b2, &b1));
        }
    }
}
