//! The standard CR sphere S³ ⊂ C²: curvature candidates, critical points with
//! Morse data, the sublaplacian of K at its critical points, and the Green
//! kernel of the conformal sublaplacian.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calibration::Calibration;
use crate::criterion::{AbstractCriticalData, PairData, PointData};
use crate::eigen::symmetric_eigen;
use crate::heisenberg::{conformal_factor_generic, Chart, HPoint};
use crate::scalar::{Jet, Scalar};
use crate::{Error, Result};

/// A point of S³, stored as a pair of complex numbers of unit total norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub xi: [Complex64; 2],
}

impl SpherePoint {
    /// Normalizes onto the sphere.
    pub fn new(xi: [Complex64; 2]) -> Result<Self> {
        let n = libm::sqrt(xi[0].norm_sqr() + xi[1].norm_sqr());
        if !(n > 1e-300) || !n.is_finite() {
            return Err(Error::Input("cannot normalize a zero or non-finite vector onto S³".into()));
        }
        Ok(SpherePoint { xi: [xi[0] / n, xi[1] / n] })
    }

    pub fn new_unchecked(xi: [Complex64; 2]) -> Self {
        SpherePoint { xi }
    }

    pub fn from_reals(r: [f64; 4]) -> Result<Self> {
        Self::new([Complex64::new(r[0], r[1]), Complex64::new(r[2], r[3])])
    }

    /// `[Re ξ₁, Im ξ₁, Re ξ₂, Im ξ₂]`.
    pub fn reals(&self) -> [f64; 4] {
        [self.xi[0].re, self.xi[0].im, self.xi[1].re, self.xi[1].im]
    }

    pub fn north() -> Self {
        SpherePoint::new_unchecked([Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
    }

    pub fn south() -> Self {
        SpherePoint::new_unchecked([Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0)])
    }

    /// Hermitian product `ξ₁η̄₁ + ξ₂η̄₂`.
    pub fn inner(&self, other: &SpherePoint) -> Complex64 {
        self.xi[0] * other.xi[0].conj() + self.xi[1] * other.xi[1].conj()
    }

    pub fn apply_unitary(&self, u: &[[Complex64; 2]; 2]) -> SpherePoint {
        SpherePoint::new_unchecked([
            u[0][0] * self.xi[0] + u[0][1] * self.xi[1],
            u[1][0] * self.xi[0] + u[1][1] * self.xi[1],
        ])
    }
}

/// `(2|1 − ⟨ξ, η⟩|)^{1/2}`.
pub fn cr_distance(xi: SpherePoint, eta: SpherePoint) -> f64 {
    let w = Complex64::new(1.0, 0.0) - xi.inner(&eta);
    libm::sqrt(2.0 * w.norm())
}

/// A scalar field on C² ≅ R⁴ written once for any [`Scalar`].
pub trait GenericAmbient {
    fn eval<T: Scalar>(&self, x: [T; 4]) -> T;
    fn describe(&self) -> String;
}

/// Object-safe view of a field on C², with optional exact derivatives.
pub trait AmbientField: Send + Sync {
    fn value(&self, x: [f64; 4]) -> f64;
    fn jet3(&self, _x: [Jet<3>; 4]) -> Option<Jet<3>> {
        None
    }
    fn jet4(&self, _x: [Jet<4>; 4]) -> Option<Jet<4>> {
        None
    }
    fn describe(&self) -> String;
}

impl<G: GenericAmbient + Send + Sync> AmbientField for G {
    fn value(&self, x: [f64; 4]) -> f64 {
        self.eval(x)
    }
    fn jet3(&self, x: [Jet<3>; 4]) -> Option<Jet<3>> {
        Some(self.eval(x))
    }
    fn jet4(&self, x: [Jet<4>; 4]) -> Option<Jet<4>> {
        Some(self.eval(x))
    }
    fn describe(&self) -> String {
        GenericAmbient::describe(self)
    }
}

/// Built-in curvature families: `c + b·x + xᵀAx` in the ambient reals
/// `x = (Re ξ₁, Im ξ₁, Re ξ₂, Im ξ₂)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CurvatureFamily {
    Constant { c: f64 },
    Affine { c: f64, b: [f64; 4] },
    Quadric { c: f64, b: [f64; 4], a: [[f64; 4]; 4] },
}

impl GenericAmbient for CurvatureFamily {
    fn eval<T: Scalar>(&self, x: [T; 4]) -> T {
        let lin = |c: f64, b: &[f64; 4]| {
            let mut acc = T::cst(c);
            for i in 0..4 {
                if b[i] != 0.0 {
                    acc = acc + x[i] * b[i];
                }
            }
            acc
        };
        match self {
            CurvatureFamily::Constant { c } => T::cst(*c),
            CurvatureFamily::Affine { c, b } => lin(*c, b),
            CurvatureFamily::Quadric { c, b, a } => {
                let mut acc = lin(*c, b);
                for i in 0..4 {
                    for k in 0..4 {
                        if a[i][k] != 0.0 {
                            acc = acc + x[i] * x[k] * a[i][k];
                        }
                    }
                }
                acc
            }
        }
    }

    fn describe(&self) -> String {
        match self {
            CurvatureFamily::Constant { c } => format!("constant({c})"),
            CurvatureFamily::Affine { c, b } => format!("affine(c={c}, b={b:?})"),
            CurvatureFamily::Quadric { c, b, a } => format!("quadric(c={c}, b={b:?}, a={a:?})"),
        }
    }
}

/// A positive curvature candidate K on S³.
pub struct CurvatureFunction {
    field: Box<dyn AmbientField>,
    descriptor: String,
}

impl core::fmt::Debug for CurvatureFunction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("CurvatureFunction").field("descriptor", &self.descriptor).finish()
    }
}

pub const POSITIVITY_SAMPLES: usize = 10_000;

impl CurvatureFunction {
    /// Wraps a field after checking positivity on 10⁴ quasi-random points.
    pub fn new(field: Box<dyn AmbientField>) -> Result<Self> {
        let descriptor = field.describe();
        for x in halton_sphere_points(POSITIVITY_SAMPLES, 0) {
            let v = field.value(x.reals());
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Input(format!(
                    "K = {descriptor} is not positive at {:?} (value {v})",
                    x.reals()
                )));
            }
        }
        Ok(CurvatureFunction { field, descriptor })
    }

    pub fn from_family(f: CurvatureFamily) -> Result<Self> {
        Self::new(Box::new(f))
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn field(&self) -> &dyn AmbientField {
        self.field.as_ref()
    }

    pub fn value(&self, x: SpherePoint) -> f64 {
        self.field.value(x.reals())
    }
}

/// The i-th point of the 3-dimensional Halton sequence (bases 2, 3, 5).
pub fn halton3(i: usize) -> [f64; 3] {
    fn radical_inverse(mut i: usize, base: usize) -> f64 {
        let mut f = 1.0;
        let mut r = 0.0;
        while i > 0 {
            f /= base as f64;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    }
    [radical_inverse(i, 2), radical_inverse(i, 3), radical_inverse(i, 5)]
}

/// Area-preserving map from the unit cube to S³ (Hopf coordinates).
pub fn cube_to_sphere(u: [f64; 3]) -> SpherePoint {
    let c = libm::sqrt(1.0 - u[0]);
    let s = libm::sqrt(u[0]);
    SpherePoint::new_unchecked([
        Complex64::from_polar(c, 2.0 * PI * u[1]),
        Complex64::from_polar(s, 2.0 * PI * u[2]),
    ])
}

/// Quasi-random points of S³; a nonzero seed applies a random shift
/// (Cranley–Patterson rotation) to the Halton sequence.
pub fn halton_sphere_points(n: usize, seed: u64) -> Vec<SpherePoint> {
    let shift = if seed == 0 {
        [0.0; 3]
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = [0.0; 3];
        for v in s.iter_mut() {
            *v = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        }
        s
    };
    (1..=n)
        .map(|i| {
            let h = halton3(i);
            let mut u = [0.0; 3];
            for k in 0..3 {
                let v = h[k] + shift[k];
                u[k] = v - libm::floor(v);
            }
            cube_to_sphere(u)
        })
        .collect()
}

/// Orthonormal basis of the tangent space at ξ: the Reeb direction iξ and the
/// two horizontal directions (−ξ̄₂, ξ̄₁), i(−ξ̄₂, ξ̄₁).
pub fn tangent_basis(x: &[f64; 4]) -> [[f64; 4]; 3] {
    let [a, b, c, d] = *x;
    [[-b, a, -d, c], [-c, d, a, -b], [-d, -c, b, a]]
}

fn dot4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Retraction `ξ ↦ (ξ + Σ vₖeₖ)/|·|`.
fn retract(x: &[f64; 4], basis: &[[f64; 4]; 3], v: [f64; 3]) -> [f64; 4] {
    let mut y = *x;
    for k in 0..3 {
        for i in 0..4 {
            y[i] += v[k] * basis[k][i];
        }
    }
    let n = libm::sqrt(dot4(&y, &y));
    [y[0] / n, y[1] / n, y[2] / n, y[3] / n]
}

/// Riemannian gradient and Hessian of K at ξ, in the basis of [`tangent_basis`].
pub fn tangent_derivatives(field: &dyn AmbientField, x: &[f64; 4]) -> ([f64; 3], [[f64; 3]; 3]) {
    let basis = tangent_basis(x);
    if let Some(j) = field.jet4(Jet::<4>::vars(*x)) {
        let normal = dot4(&j.g, x);
        let mut g = [0.0; 3];
        let mut h = [[0.0; 3]; 3];
        for k in 0..3 {
            g[k] = dot4(&j.g, &basis[k]);
            for l in 0..3 {
                let mut acc = 0.0;
                for i in 0..4 {
                    for m in 0..4 {
                        acc += basis[k][i] * j.h[i][m] * basis[l][m];
                    }
                }
                h[k][l] = acc - if k == l { normal } else { 0.0 };
            }
        }
        return (g, h);
    }
    // Second-order behaviour of the retraction reproduces the Riemannian
    // Hessian, so plain central differences in v are intrinsic.
    let f = |v: [f64; 3]| field.value(retract(x, &basis, v));
    let hg = 1e-5;
    let hh = 1e-4;
    let f0 = f([0.0; 3]);
    let mut g = [0.0; 3];
    let mut h = [[0.0; 3]; 3];
    for k in 0..3 {
        let mut e = [0.0; 3];
        e[k] = hg;
        g[k] = (f(e) - f([-e[0], -e[1], -e[2]])) / (2.0 * hg);
        let mut e = [0.0; 3];
        e[k] = hh;
        h[k][k] = (f(e) - 2.0 * f0 + f([-e[0], -e[1], -e[2]])) / (hh * hh);
        for l in 0..k {
            let mut pp = [0.0; 3];
            pp[k] = hh;
            pp[l] = hh;
            let mut pm = pp;
            pm[l] = -hh;
            let mut mp = pp;
            mp[k] = -hh;
            let mm = [-pp[0], -pp[1], -pp[2]];
            let v = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * hh * hh);
            h[k][l] = v;
            h[l][k] = v;
        }
    }
    (g, h)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointRecord {
    pub label: String,
    pub location: SpherePoint,
    pub k_value: f64,
    pub grad_norm: f64,
    pub hessian_eigs: [f64; 3],
    pub morse_index: u8,
    pub sublap_k: f64,
    pub a_value: f64,
    pub kplus_member: bool,
    pub kplus_margin: f64,
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinderConfig {
    pub starts: usize,
    pub grad_tol: f64,
    pub dedup_radius: f64,
    /// Relative threshold `|λ_min| ≥ tol · max|λ|` for nondegeneracy.
    pub degeneracy_tol: f64,
    pub max_newton_iters: usize,
    pub max_step: f64,
    pub seed: u64,
}

impl Default for FinderConfig {
    fn default() -> Self {
        FinderConfig {
            starts: 200,
            grad_tol: 1e-10,
            dedup_radius: 1e-5,
            degeneracy_tol: 1e-6,
            max_newton_iters: 100,
            max_step: 0.3,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalSearch {
    pub records: Vec<CriticalPointRecord>,
    /// Fewer than two critical points were found (a Morse function on S³
    /// has at least a maximum and a minimum).
    pub coverage_warning: bool,
}

/// Newton iteration on S³ from one start; returns the converged point.
pub fn newton_on_sphere(
    field: &dyn AmbientField,
    start: SpherePoint,
    cfg: &FinderConfig,
) -> Option<([f64; 4], f64)> {
    let mut x = start.reals();
    for _ in 0..cfg.max_newton_iters {
        let (g, h) = tangent_derivatives(field, &x);
        let gn = libm::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
        if !gn.is_finite() {
            return None;
        }
        if gn < cfg.grad_tol {
            return Some((x, gn));
        }
        let eig = symmetric_eigen(&[h[0].to_vec(), h[1].to_vec(), h[2].to_vec()]);
        let scale = eig.values.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v))).max(1e-300);
        let mut v = [0.0; 3];
        for (k, &lam) in eig.values.iter().enumerate() {
            let u = &eig.vectors[k];
            let proj = u[0] * g[0] + u[1] * g[1] + u[2] * g[2];
            let lam = if libm::fabs(lam) < 1e-12 * scale { 1e-12 * scale } else { lam };
            for i in 0..3 {
                v[i] -= proj / lam * u[i];
            }
        }
        let vn = libm::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        if vn > cfg.max_step {
            for c in v.iter_mut() {
                *c *= cfg.max_step / vn;
            }
        }
        x = retract(&x, &tangent_basis(&x), v);
    }
    let (g, _) = tangent_derivatives(field, &x);
    let gn = libm::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
    (gn < cfg.grad_tol).then_some((x, gn))
}

/// Morse data at a point: sorted Hessian spectrum, index, degeneracy flag.
fn morse_data(field: &dyn AmbientField, x: &[f64; 4], degeneracy_tol: f64) -> ([f64; 3], u8, bool) {
    let (_, h) = tangent_derivatives(field, x);
    let eig = symmetric_eigen(&[h[0].to_vec(), h[1].to_vec(), h[2].to_vec()]);
    let mut vals = [eig.values[0], eig.values[1], eig.values[2]];
    vals.sort_by(|a, b| a.total_cmp(b));
    let max = vals.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
    let min = vals.iter().fold(f64::INFINITY, |m, v| m.min(libm::fabs(*v)));
    let degenerate = max == 0.0 || min < degeneracy_tol * max;
    let index = vals.iter().filter(|v| **v < 0.0).count() as u8;
    (vals, index, degenerate)
}

/// Multistart Newton search for the critical points of K with full Morse
/// data, `Δ_θK`, `A` and the 𝒦₊ margin `−Δ_θK/3K − 2A`.
pub fn find_critical_points(
    k: &CurvatureFunction,
    green: &GreenData,
    calib: &Calibration,
    cfg: &FinderConfig,
) -> Result<CriticalSearch> {
    if !(cfg.grad_tol > 0.0 && cfg.dedup_radius > 0.0 && cfg.degeneracy_tol > 0.0) {
        return Err(Error::Config("finder tolerances must be positive".into()));
    }
    let field = k.field();
    let mut found: Vec<([f64; 4], f64)> = halton_sphere_points(cfg.starts, cfg.seed)
        .into_iter()
        .filter_map(|s| newton_on_sphere(field, s, cfg))
        .collect();
    // Deterministic reduction: best-converged first, then coordinates.
    found.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| cmp_coords(&a.0, &b.0)));
    let mut kept: Vec<([f64; 4], f64)> = Vec::new();
    for (x, gn) in found {
        let p = SpherePoint::from_reals(x)?;
        // Chordal, not the gauge distance: the latter grows like the square
        // root of a Reeb offset and would keep Newton round-off apart.
        let dup = kept.iter().any(|(y, _)| {
            let r = p.reals();
            libm::sqrt((0..4).map(|i| (r[i] - y[i]) * (r[i] - y[i])).sum::<f64>()) < cfg.dedup_radius
        });
        if !dup {
            kept.push((p.reals(), gn));
        }
    }
    let mut records = Vec::with_capacity(kept.len());
    for (x, gn) in kept {
        let location = SpherePoint::from_reals(x)?;
        let (hessian_eigs, morse_index, degenerate) = morse_data(field, &x, cfg.degeneracy_tol);
        let k_value = field.value(x);
        let mut rec = CriticalPointRecord {
            label: String::new(),
            location,
            k_value,
            grad_norm: gn,
            hessian_eigs,
            morse_index,
            sublap_k: f64::NAN,
            a_value: 0.0,
            kplus_member: false,
            kplus_margin: f64::NAN,
            degenerate,
        };
        if degenerate {
            return Err(Error::C0Violation {
                reason: format!(
                    "degenerate critical point at {:?} (Hessian spectrum {:?})",
                    x, hessian_eigs
                ),
                record: Some(Box::new(rec)),
            });
        }
        rec.sublap_k = sublaplacian_k_at(k, location, calib, 1e-6)?;
        records.push(rec);
    }
    records.sort_by(|a, b| {
        b.k_value
            .total_cmp(&a.k_value)
            .then_with(|| cmp_coords(&a.location.reals(), &b.location.reals()))
    });
    for (i, rec) in records.iter_mut().enumerate() {
        rec.label = format!("y{i}");
        rec.a_value = green.regular_part(&rec.label);
        rec.kplus_margin = -rec.sublap_k / (3.0 * rec.k_value) - 2.0 * rec.a_value;
        rec.kplus_member = rec.kplus_margin > 0.0;
    }
    let coverage_warning = records.len() < 2;
    Ok(CriticalSearch { records, coverage_warning })
}

fn cmp_coords(a: &[f64; 4], b: &[f64; 4]) -> core::cmp::Ordering {
    for i in 0..4 {
        let c = a[i].total_cmp(&b[i]);
        if c != core::cmp::Ordering::Equal {
            return c;
        }
    }
    core::cmp::Ordering::Equal
}

/// Pullback of an ambient field through a chart, as a field on H¹.
pub struct ChartPullback<'a> {
    pub field: &'a dyn AmbientField,
    pub chart: Chart,
}

impl crate::heisenberg::HField for ChartPullback<'_> {
    fn value(&self, p: HPoint) -> f64 {
        self.field.value(self.chart.to_ambient_generic::<f64>(p.coords()))
    }
    fn jet(&self, p: HPoint) -> Option<Jet<3>> {
        self.field.jet3(self.chart.to_ambient_generic(Jet::<3>::vars(p.coords())))
    }
}

/// `Δ_θK(y)` at a critical point y, with the sign convention that it is
/// negative at a nondegenerate maximum.
///
/// The chart is re-centered so that y sits at the Cayley origin, where the
/// conformal factor has vanishing horizontal gradient; the conformal law
/// then reduces to `Δ_θK(y) = u_C(0)⁻² (X² + Y²)(K∘chart)(0)`.
pub fn sublaplacian_k_at(
    k: &CurvatureFunction,
    y: SpherePoint,
    calib: &Calibration,
    crit_tol: f64,
) -> Result<f64> {
    sublaplacian_k_in_chart(k, Chart::centered_at(y), calib, crit_tol)
}

pub fn sublaplacian_k_in_chart(
    k: &CurvatureFunction,
    chart: Chart,
    calib: &Calibration,
    crit_tol: f64,
) -> Result<f64> {
    let y = chart.center();
    let (g, _) = tangent_derivatives(k.field(), &y.reals());
    let gn = libm::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
    if !(gn < crit_tol) {
        return Err(Error::Precondition(format!(
            "Δ_θK requested at a non-critical point (|∇K| = {gn:e})"
        )));
    }
    let pull = ChartPullback { field: k.field(), chart };
    let pos = crate::heisenberg::sublaplacian_h(
        &pull,
        HPoint::IDENTITY,
        &calib.convention,
        crate::heisenberg::Derivatives::Analytic,
    )?;
    Ok(-pos / (calib.kappa * calib.kappa))
}

/// The conformal sublaplacian `L_θ f(x) = Δ_θ f(x) + ¼R_θ f(x)` (positive
/// sublaplacian convention), evaluated through the chart centered at x:
/// `L_θ f(x) = u_C(0)⁻³ Δ_{θ₀}(u_C · f∘chart)(0)`.
pub fn conformal_sublaplacian(
    field: &dyn AmbientField,
    x: SpherePoint,
    calib: &Calibration,
    how: crate::heisenberg::Derivatives,
) -> Result<f64> {
    let chart = Chart::centered_at(x);
    let kappa = calib.kappa;
    struct Weighted<'a> {
        field: &'a dyn AmbientField,
        chart: Chart,
        kappa: f64,
    }
    impl crate::heisenberg::HField for Weighted<'_> {
        fn value(&self, p: HPoint) -> f64 {
            let c = p.coords();
            conformal_factor_generic(c, self.kappa) * self.field.value(self.chart.to_ambient_generic(c))
        }
        fn jet(&self, p: HPoint) -> Option<Jet<3>> {
            let v = Jet::<3>::vars(p.coords());
            let f = self.field.jet3(self.chart.to_ambient_generic(v))?;
            Some(conformal_factor_generic(v, self.kappa) * f)
        }
    }
    let w = Weighted { field, chart, kappa };
    let d = crate::heisenberg::sublaplacian_h(&w, HPoint::IDENTITY, &calib.convention, how)?;
    Ok(d / (kappa * kappa * kappa))
}

/// Regular part of the Green kernel at the critical points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RegularPart {
    /// The model sphere: A ≡ 0.
    Zero,
    /// User-supplied values keyed by point label (missing labels read as 0).
    Values(BTreeMap<String, f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenData {
    pub c_g: f64,
    pub regular_part: RegularPart,
}

impl GreenData {
    pub fn standard(calib: &Calibration) -> Self {
        GreenData { c_g: calib.c_g, regular_part: RegularPart::Zero }
    }

    pub fn regular_part(&self, label: &str) -> f64 {
        match &self.regular_part {
            RegularPart::Zero => 0.0,
            RegularPart::Values(m) => m.get(label).copied().unwrap_or(0.0),
        }
    }
}

/// `G(a, x) = c_G / (2|1 − ⟨x, a⟩|) = c_G / d(a, x)²`.
pub fn greens_function(g: &GreenData, a: SpherePoint, x: SpherePoint) -> Result<f64> {
    let w = (Complex64::new(1.0, 0.0) - x.inner(&a)).norm();
    if w < 1e-14 {
        return Err(Error::Singularity);
    }
    Ok(g.c_g / (2.0 * w))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct C0Verdict {
    pub pass: bool,
    pub violations: Vec<String>,
}

/// Nondegeneracy and nonzero 𝒦₊ margins.
pub fn check_c0(records: &[CriticalPointRecord], margin_tol: f64) -> C0Verdict {
    let mut violations = Vec::new();
    if records.is_empty() {
        violations.push("no critical points".into());
    }
    for r in records {
        if r.degenerate {
            violations.push(format!("{}: degenerate critical point", r.label));
        }
        if !(libm::fabs(r.kplus_margin) > margin_tol) {
            violations.push(format!("{}: margin {:e} within ±{margin_tol:e} of zero", r.label, r.kplus_margin));
        }
    }
    C0Verdict { pass: violations.is_empty(), violations }
}

/// The criterion's input for the detected critical points, with
/// `G(y_i, y_j)` from the Green data.
pub fn critical_data(records: &[CriticalPointRecord], green: &GreenData) -> Result<AbstractCriticalData> {
    let points = records
        .iter()
        .map(|r| PointData { label: r.label.clone(), k: r.k_value, lap_k: r.sublap_k, a: r.a_value, morse: r.morse_index })
        .collect();
    let mut pairs = Vec::new();
    for (i, a) in records.iter().enumerate() {
        for b in &records[i + 1..] {
            pairs.push(PairData {
                i: a.label.clone(),
                j: b.label.clone(),
                g: greens_function(green, a.location, b.location)?,
            });
        }
    }
    AbstractCriticalData::new(points, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::test_calibration;
    use proptest::prelude::*;

    fn two_point_k() -> CurvatureFunction {
        CurvatureFunction::from_family(CurvatureFamily::Affine { c: 2.0, b: [0.0, 0.0, 1.0, 0.0] }).unwrap()
    }

    #[test]
    fn distance_examples() {
        let a = SpherePoint::from_reals([1.0, 0.0, 0.0, 0.0]).unwrap();
        let b = SpherePoint::north();
        assert_eq!(cr_distance(a, a), 0.0);
        assert!((cr_distance(a, b) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn positivity_rejects_sign_changing_k() {
        let k = CurvatureFunction::from_family(CurvatureFamily::Affine { c: 0.0, b: [1.0, 0.0, 0.0, 0.0] });
        assert!(matches!(k, Err(Error::Input(_))));
    }

    #[test]
    fn constant_k_is_degenerate() {
        let calib = test_calibration();
        let k = CurvatureFunction::from_family(CurvatureFamily::Constant { c: 1.0 }).unwrap();
        let r = find_critical_points(&k, &GreenData::standard(calib), calib, &FinderConfig::default());
        assert!(matches!(r, Err(Error::C0Violation { .. })));
    }

    #[test]
    fn height_function_has_max_and_min() {
        let calib = test_calibration();
        let k = two_point_k();
        let s = find_critical_points(&k, &GreenData::standard(calib), calib, &FinderConfig::default()).unwrap();
        assert_eq!(s.records.len(), 2);
        assert!(!s.coverage_warning);
        let max = &s.records[0];
        let min = &s.records[1];
        assert!(cr_distance(max.location, SpherePoint::north()) < 1e-6);
        assert!(cr_distance(min.location, SpherePoint::south()) < 1e-6);
        assert_eq!(max.morse_index, 3);
        assert_eq!(min.morse_index, 0);
        assert!((max.k_value - 3.0).abs() < 1e-12);
        // Δ_θK at the max is negative; the two charts below agree.
        assert!(max.sublap_k < 0.0);
        assert!(max.kplus_member && !min.kplus_member);
        let v = check_c0(&s.records, 1e-8);
        assert!(v.pass, "{:?}", v.violations);
    }

    #[test]
    fn sublaplacian_is_chart_independent() {
        let calib = test_calibration();
        let k = two_point_k();
        let y = SpherePoint::north();
        let a = sublaplacian_k_in_chart(&k, Chart::centered_at(y), calib, 1e-8).unwrap();
        let b = sublaplacian_k_in_chart(&k, Chart::centered_at(y).with_phase(1.1), calib, 1e-8).unwrap();
        assert!((a - b).abs() <= 1e-6 * a.abs());
    }

    #[test]
    fn sublaplacian_requires_critical_point() {
        let calib = test_calibration();
        let k = two_point_k();
        let p = SpherePoint::from_reals([1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(sublaplacian_k_at(&k, p, calib, 1e-8), Err(Error::Precondition(_))));
    }

    #[test]
    fn finite_difference_derivatives_match_jets() {
        struct NoJet(CurvatureFamily);
        impl AmbientField for NoJet {
            fn value(&self, x: [f64; 4]) -> f64 {
                self.0.eval(x)
            }
            fn describe(&self) -> String {
                "no-jet".into()
            }
        }
        let fam = CurvatureFamily::Quadric {
            c: 3.0,
            b: [0.2, -0.1, 0.5, 0.3],
            a: [[0.3, 0.1, 0.0, 0.0], [0.1, -0.2, 0.0, 0.1], [0.0, 0.0, 0.4, 0.0], [0.0, 0.1, 0.0, -0.1]],
        };
        let x = SpherePoint::from_reals([0.4, -0.3, 0.7, 0.2]).unwrap().reals();
        let (g1, h1) = tangent_derivatives(&fam, &x);
        let (g2, h2) = tangent_derivatives(&NoJet(fam.clone()), &x);
        for i in 0..3 {
            assert!((g1[i] - g2[i]).abs() < 1e-8);
            for k in 0..3 {
                assert!((h1[i][k] - h2[i][k]).abs() < 1e-5, "{i}{k}: {} {}", h1[i][k], h2[i][k]);
            }
        }
    }

    #[test]
    fn green_kernel_properties() {
        let g = GreenData { c_g: 0.3, regular_part: RegularPart::Zero };
        let a = SpherePoint::from_reals([0.1, 0.5, -0.3, 0.8]).unwrap();
        let x = SpherePoint::from_reals([-0.6, 0.2, 0.4, 0.1]).unwrap();
        let gax = greens_function(&g, a, x).unwrap();
        let gxa = greens_function(&g, x, a).unwrap();
        assert!((gax - gxa).abs() < 1e-15 * gax);
        let d = cr_distance(a, x);
        assert!((gax * d * d - 0.3).abs() < 1e-14);
        assert_eq!(greens_function(&g, a, a), Err(Error::Singularity));
    }

    #[test]
    fn c0_examples() {
        let calib = test_calibration();
        let k = two_point_k();
        let mut s = find_critical_points(&k, &GreenData::standard(calib), calib, &FinderConfig::default()).unwrap();
        s.records[1].kplus_margin = 0.0;
        let v = check_c0(&s.records, 1e-8);
        assert!(!v.pass);
        assert!(v.violations[0].starts_with("y1"));
        let v = check_c0(&[], 1e-8);
        assert_eq!(v.violations, vec![String::from("no critical points")]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn distance_unitary_invariant(a in prop::array::uniform4(-1.0..1.0f64), b in prop::array::uniform4(-1.0..1.0f64), th in 0.0..6.3f64, ph in 0.0..6.3f64) {
            prop_assume!(a.iter().map(|v| v * v).sum::<f64>() > 1e-3 && b.iter().map(|v| v * v).sum::<f64>() > 1e-3);
            let p = SpherePoint::from_reals(a).unwrap();
            let q = SpherePoint::from_reals(b).unwrap();
            let (c, s) = (th.cos(), th.sin());
            let e = Complex64::from_polar(1.0, ph);
            let u = [[e * c, -Complex64::new(s, 0.0)], [e * s, Complex64::new(c, 0.0)]];
            let d0 = cr_distance(p, q);
            let d1 = cr_distance(p.apply_unitary(&u), q.apply_unitary(&u));
            prop_assert!((d0 - d1).abs() < 1e-7);
            prop_assert!((cr_distance(p, q) - cr_distance(q, p)).abs() < 1e-15);
        }
    }
}
