//! The Heisenberg group H¹ = C × R, its sublaplacian, and the Cayley chart
//! onto S³ minus the pole (0, −1).
//!
//! Horizontal fields are `X = ∂x + 2σy∂t`, `Y = ∂y − 2σx∂t` with σ the
//! convention sign (σ = +1 by default), and the sublaplacian is the positive
//! operator `Δ = −(X² + Y²)`. The group law matching these fields is
//! `(z, t)·(z', t') = (z + z', t + t' + 2σ Im(z z̄'))`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::scalar::{Jet, Scalar};
use crate::sphere::SpherePoint;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HPoint {
    pub z: Complex64,
    pub t: f64,
}

impl HPoint {
    pub const IDENTITY: HPoint = HPoint { z: Complex64 { re: 0.0, im: 0.0 }, t: 0.0 };

    pub fn new(x: f64, y: f64, t: f64) -> Self {
        HPoint { z: Complex64::new(x, y), t }
    }

    pub fn x(&self) -> f64 {
        self.z.re
    }

    pub fn y(&self) -> f64 {
        self.z.im
    }

    pub fn coords(&self) -> [f64; 3] {
        [self.z.re, self.z.im, self.t]
    }

    pub fn is_finite(&self) -> bool {
        self.z.re.is_finite() && self.z.im.is_finite() && self.t.is_finite()
    }

    pub fn inverse(&self) -> HPoint {
        HPoint { z: -self.z, t: -self.t }
    }

    /// Anisotropic dilation `(z, t) ↦ (λz, λ²t)`.
    pub fn dilate(&self, lambda: f64) -> HPoint {
        HPoint { z: self.z * lambda, t: self.t * lambda * lambda }
    }
}

/// `(|z|⁴ + t²)^{1/4}`.
pub fn gauge_norm(p: HPoint) -> f64 {
    let r2 = p.z.norm_sqr();
    libm::sqrt(libm::sqrt(r2 * r2 + p.t * p.t))
}

/// Left translation `p·q` under the standard (σ = +1) group law.
pub fn group_translate(p: HPoint, q: HPoint) -> HPoint {
    ContactConvention::STANDARD.translate(p, q)
}

/// Left-invariant gauge distance `|p⁻¹q|`.
pub fn gauge_distance(p: HPoint, q: HPoint) -> f64 {
    gauge_norm(group_translate(p.inverse(), q))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeBall {
    pub center: HPoint,
    pub radius: f64,
}

impl GaugeBall {
    pub fn new(center: HPoint, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::Config("gauge ball radius must be finite and nonnegative".into()));
        }
        Ok(GaugeBall { center, radius })
    }

    pub fn contains(&self, p: HPoint) -> bool {
        gauge_distance(self.center, p) <= self.radius
    }
}

/// Normalization of the contact form θ₀ and of the horizontal frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactConvention {
    /// Jacobian of θ₀∧dθ₀ against dx dy dt.
    pub volume_factor: f64,
    /// σ in `X = ∂x + 2σy∂t`, `Y = ∂y − 2σx∂t`.
    pub vectorfield_sign: f64,
}

impl ContactConvention {
    pub const STANDARD: ContactConvention =
        ContactConvention { volume_factor: 4.0, vectorfield_sign: 1.0 };

    /// Derives the volume factor from the frame: with θ₀(∂t) = 1 and
    /// θ₀(X) = θ₀(Y) = 0, `θ₀∧dθ₀(∂x, ∂y, ∂t) = |θ₀([X, Y])|`.
    pub fn from_sign(vectorfield_sign: f64) -> Result<Self> {
        if vectorfield_sign != 1.0 && vectorfield_sign != -1.0 {
            return Err(Error::Config("vectorfield sign must be +1 or -1".into()));
        }
        let c = ContactConvention { volume_factor: 1.0, vectorfield_sign };
        let bracket = c.bracket_t_component(HPoint::new(0.3, -0.7, 0.2));
        Ok(ContactConvention { volume_factor: libm::fabs(bracket), vectorfield_sign })
    }

    /// t-component of `[X, Y]` at `p`, computed from the frame coefficients.
    pub fn bracket_t_component(&self, p: HPoint) -> f64 {
        let s = self.vectorfield_sign;
        let [x, y, _t] = Jet::<3>::vars(p.coords());
        // X = ∂x + a ∂t, Y = ∂y + b ∂t
        let a = y * (2.0 * s);
        let b = x * (-2.0 * s);
        let xb = b.g[0] + a.v * b.g[2];
        let ya = a.g[1] + b.v * a.g[2];
        xb - ya
    }

    pub fn translate(&self, p: HPoint, q: HPoint) -> HPoint {
        let cross = (p.z * q.z.conj()).im;
        HPoint { z: p.z + q.z, t: p.t + q.t + 2.0 * self.vectorfield_sign * cross }
    }

    /// `−(X² + Y²)f` from the Euclidean gradient and Hessian of `f` at `p`.
    pub fn sublaplacian_from_jet(&self, p: HPoint, j: &Jet<3>) -> f64 {
        let s = self.vectorfield_sign;
        let (x, y) = (p.x(), p.y());
        let h = &j.h;
        let xx = h[0][0] + 4.0 * s * y * h[0][2] + 4.0 * y * y * h[2][2];
        let yy = h[1][1] - 4.0 * s * x * h[1][2] + 4.0 * x * x * h[2][2];
        -(xx + yy)
    }
}

impl Default for ContactConvention {
    fn default() -> Self {
        Self::STANDARD
    }
}

/// A scalar field on H¹, optionally with exact derivatives.
pub trait HField {
    fn value(&self, p: HPoint) -> f64;

    /// Value, gradient and Hessian in (x, y, t), when available.
    fn jet(&self, _p: HPoint) -> Option<Jet<3>> {
        None
    }
}

impl<F: Fn(HPoint) -> f64> HField for F {
    fn value(&self, p: HPoint) -> f64 {
        self(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Derivatives {
    /// Use the field's jet; fall back to finite differences without one.
    Analytic,
    /// Central differences along the horizontal group lines. `None` selects
    /// the default step `1e-4 · max(1, |p|)`.
    FiniteDifference { step: Option<f64> },
}

pub fn default_fd_step(p: HPoint) -> f64 {
    1e-4 * gauge_norm(p).max(1.0)
}

/// `Δ_{θ₀} f(p)`.
pub fn sublaplacian_h<F: HField + ?Sized>(
    f: &F,
    p: HPoint,
    conv: &ContactConvention,
    how: Derivatives,
) -> Result<f64> {
    let step = match how {
        Derivatives::Analytic => {
            if let Some(j) = f.jet(p) {
                let v = conv.sublaplacian_from_jet(p, &j);
                return finite(v);
            }
            default_fd_step(p)
        }
        Derivatives::FiniteDifference { step } => step.unwrap_or_else(|| default_fd_step(p)),
    };
    if !(step > 0.0) {
        return Err(Error::Config("finite-difference step must be positive".into()));
    }
    let s = conv.vectorfield_sign;
    let (x, y, t) = (p.x(), p.y(), p.t);
    let f0 = f.value(p);
    let xp = f.value(HPoint::new(x + step, y, t + 2.0 * s * y * step));
    let xm = f.value(HPoint::new(x - step, y, t - 2.0 * s * y * step));
    let yp = f.value(HPoint::new(x, y + step, t - 2.0 * s * x * step));
    let ym = f.value(HPoint::new(x, y - step, t + 2.0 * s * x * step));
    let v = -((xp + xm + yp + ym) - 4.0 * f0) / (step * step);
    finite(v)
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation("non-finite field value in sublaplacian".into()))
    }
}

/// `1 + |z|² − it`, the complex gauge of the Cayley chart.
fn cayley_denominator(p: HPoint) -> Complex64 {
    Complex64::new(1.0 + p.z.norm_sqr(), -p.t)
}

/// `(2z/(1+|z|²−it), (1−|z|²+it)/(1+|z|²−it))`.
pub fn cayley(p: HPoint) -> SpherePoint {
    let w = cayley_denominator(p);
    let xi1 = p.z * 2.0 / w;
    let xi2 = Complex64::new(1.0 - p.z.norm_sqr(), p.t) / w;
    SpherePoint::new_unchecked([xi1, xi2])
}

pub fn cayley_inv(xi: SpherePoint) -> Result<HPoint> {
    let d = Complex64::new(1.0, 0.0) + xi.xi[1];
    if d.norm() < 1e-14 {
        return Err(Error::Pole);
    }
    let w = Complex64::new(2.0, 0.0) / d;
    let z = xi.xi[0] / d;
    Ok(HPoint { z, t: -w.im })
}

/// Cayley transform on real components, generic over the scalar type.
/// Returns `[Re ξ₁, Im ξ₁, Re ξ₂, Im ξ₂]`.
pub fn cayley_generic<T: Scalar>(p: [T; 3]) -> [T; 4] {
    let [x, y, t] = p;
    let rho = x * x + y * y;
    // w = (1 + ρ) − i t, 1/w = w̄/|w|²
    let wr = rho + 1.0;
    let wi = -t;
    let n = (wr * wr + wi * wi).recip();
    let (ir, ii) = (wr * n, -wi * n);
    let xi1r = (x * ir - y * ii) * 2.0;
    let xi1i = (x * ii + y * ir) * 2.0;
    [xi1r, xi1i, ir * 2.0 - 1.0, ii * 2.0]
}

/// Conformal factor `κ / |1 + |z|² − it|` of the Cayley chart: the pulled-back
/// sphere contact form equals `u_C² θ₀`.
pub fn conformal_factor(p: HPoint, kappa: f64) -> f64 {
    kappa / cayley_denominator(p).norm()
}

pub fn conformal_factor_generic<T: Scalar>(p: [T; 3], kappa: f64) -> T {
    let [x, y, t] = p;
    let wr = x * x + y * y + 1.0;
    (wr * wr + t * t).powf(-0.5) * kappa
}

/// A unitary of C² composed with the Cayley transform: a chart of S³ whose
/// origin is a chosen point and whose pole is the antipode of that point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Chart {
    /// `u` maps the chart center to (0, 1).
    u: [[Complex64; 2]; 2],
}

impl Chart {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Chart { u: [[one, zero], [zero, one]] }
    }

    pub fn centered_at(y: SpherePoint) -> Self {
        let [y1, y2] = y.xi;
        Chart { u: [[y2, -y1], [y1.conj(), y2.conj()]] }
    }

    /// Same center, rotated by `e^{iφ}` in the horizontal direction.
    pub fn with_phase(mut self, phi: f64) -> Self {
        let e = Complex64::from_polar(1.0, phi);
        self.u[0][0] *= e;
        self.u[0][1] *= e;
        self
    }

    pub fn center(&self) -> SpherePoint {
        self.unrotate([Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
    }

    fn rotate(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.u[0][0] * v[0] + self.u[0][1] * v[1],
            self.u[1][0] * v[0] + self.u[1][1] * v[1],
        ]
    }

    fn unrotate(&self, v: [Complex64; 2]) -> SpherePoint {
        SpherePoint::new_unchecked([
            self.u[0][0].conj() * v[0] + self.u[1][0].conj() * v[1],
            self.u[0][1].conj() * v[0] + self.u[1][1].conj() * v[1],
        ])
    }

    pub fn to_sphere(&self, p: HPoint) -> SpherePoint {
        self.unrotate(cayley(p).xi)
    }

    pub fn from_sphere(&self, x: SpherePoint) -> Result<HPoint> {
        cayley_inv(SpherePoint::new_unchecked(self.rotate(x.xi)))
    }

    /// Chart map on real components, generic over the scalar type.
    pub fn to_ambient_generic<T: Scalar>(&self, p: [T; 3]) -> [T; 4] {
        let c = cayley_generic(p);
        let xi = [(c[0], c[1]), (c[2], c[3])];
        let mut out = [T::cst(0.0); 4];
        for i in 0..2 {
            let mut re = T::cst(0.0);
            let mut im = T::cst(0.0);
            for (j, &(xr, xi_)) in xi.iter().enumerate() {
                let a = self.u[j][i].conj();
                re = re + xr * a.re - xi_ * a.im;
                im = im + xr * a.im + xi_ * a.re;
            }
            out[2 * i] = re;
            out[2 * i + 1] = im;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt() -> impl Strategy<Value = HPoint> {
        (-3.0..3.0f64, -3.0..3.0f64, -5.0..5.0f64).prop_map(|(x, y, t)| HPoint::new(x, y, t))
    }

    #[test]
    fn gauge_norm_examples() {
        assert_eq!(gauge_norm(HPoint::IDENTITY), 0.0);
        assert!((gauge_norm(HPoint::new(0.6, 0.8, 0.0)) - 1.0).abs() < 1e-15);
        assert!((gauge_norm(HPoint::new(0.0, 0.0, 4.0)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn translate_identity_and_inverse() {
        let p = HPoint::new(0.3, -1.2, 0.7);
        assert_eq!(group_translate(HPoint::IDENTITY, p), p);
        let e = group_translate(p, p.inverse());
        assert!(gauge_norm(e) < 1e-15);
    }

    #[test]
    fn volume_factor_from_bracket() {
        let c = ContactConvention::from_sign(1.0).unwrap();
        assert_eq!(c.volume_factor, 4.0);
        let c = ContactConvention::from_sign(-1.0).unwrap();
        assert_eq!(c.volume_factor, 4.0);
        assert!(ContactConvention::from_sign(0.5).is_err());
    }

    #[test]
    fn sublaplacian_of_constants_and_rho() {
        let conv = ContactConvention::STANDARD;
        let one = |_p: HPoint| 1.0;
        for p in [HPoint::IDENTITY, HPoint::new(1.0, 2.0, -3.0)] {
            let v = sublaplacian_h(&one, p, &conv, Derivatives::FiniteDifference { step: None }).unwrap();
            assert!(v.abs() < 1e-6);
        }
        // |z|²: X²ρ = Y²ρ = 2 by hand, so Δρ = −4 everywhere.
        fn rho<T: Scalar>(p: [T; 3]) -> T {
            p[0] * p[0] + p[1] * p[1]
        }
        for p in [HPoint::IDENTITY, HPoint::new(-0.4, 1.5, 2.0)] {
            let a = conv.sublaplacian_from_jet(p, &rho(Jet::vars(p.coords())));
            let b = sublaplacian_h(&|q: HPoint| rho(q.coords()), p, &conv, Derivatives::FiniteDifference { step: Some(1e-3) }).unwrap();
            assert!((a + 4.0).abs() < 1e-12);
            assert!((b + 4.0).abs() < 1e-6);
        }
    }

    #[test]
    fn bad_step_is_config_error() {
        let conv = ContactConvention::STANDARD;
        let r = sublaplacian_h(&|_p: HPoint| 1.0, HPoint::IDENTITY, &conv, Derivatives::FiniteDifference { step: Some(0.0) });
        assert!(matches!(r, Err(Error::Config(_))));
        let r = sublaplacian_h(&|_p: HPoint| f64::NAN, HPoint::IDENTITY, &conv, Derivatives::FiniteDifference { step: None });
        assert!(matches!(r, Err(Error::Evaluation(_))));
    }

    #[test]
    fn cayley_examples() {
        let o = cayley(HPoint::IDENTITY);
        assert!(o.xi[0].norm() < 1e-16);
        assert!((o.xi[1] - Complex64::new(1.0, 0.0)).norm() < 1e-16);
        let pole = SpherePoint::new_unchecked([Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0)]);
        assert_eq!(cayley_inv(pole), Err(Error::Pole));
        assert!((conformal_factor(HPoint::IDENTITY, 1.7) - 1.7).abs() < 1e-16);
        assert!(conformal_factor(HPoint::new(1e3, 0.0, 1e6), 1.0) < 1e-5);
    }

    #[test]
    fn generic_chart_matches_complex_chart() {
        let y = SpherePoint::from_reals([0.3, -0.5, 0.6, 0.2]).unwrap();
        let chart = Chart::centered_at(y).with_phase(0.4);
        let p = HPoint::new(0.2, -0.9, 1.3);
        let a = chart.to_sphere(p).reals();
        let b = chart.to_ambient_generic::<f64>(p.coords());
        for i in 0..4 {
            assert!((a[i] - b[i]).abs() < 1e-14);
        }
        let c = chart.center();
        assert!(crate::sphere::cr_distance(c, y) < 1e-7);
    }

    proptest! {
        #[test]
        fn gauge_dilation_homogeneity(p in pt(), l in 0.01..50.0f64) {
            let a = gauge_norm(p.dilate(l));
            let b = l * gauge_norm(p);
            prop_assert!((a - b).abs() <= 1e-13 * b.max(1e-300));
        }

        #[test]
        fn gauge_distance_left_invariant(p in pt(), q1 in pt(), q2 in pt()) {
            let a = gauge_distance(group_translate(p, q1), group_translate(p, q2));
            let b = gauge_distance(q1, q2);
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + b));
        }

        #[test]
        fn cayley_lands_on_sphere_and_inverts(p in pt()) {
            let xi = cayley(p);
            let n = xi.xi[0].norm_sqr() + xi.xi[1].norm_sqr();
            prop_assert!((n - 1.0).abs() < 1e-12);
            let back = cayley_inv(xi).unwrap();
            prop_assert!((back.z - p.z).norm() < 1e-10 && (back.t - p.t).abs() < 1e-10 * (1.0 + p.t.abs()));
        }
    }
}
