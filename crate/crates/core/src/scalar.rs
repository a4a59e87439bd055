//! Scalars that can be pushed through the geometric formulas.
//!
//! [`Jet`] is a second-order forward-mode number: it carries a value, its
//! gradient and its Hessian with respect to `N` seed variables. Every map in
//! the crate (Cayley transform, unitary re-centering, curvature expressions)
//! is written against [`Scalar`], so evaluating it on jets yields exact first
//! and second derivatives.

use core::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    fn value(&self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn powf(self, e: f64) -> Self;
    fn powi(self, n: i32) -> Self;

    fn recip(self) -> Self {
        Self::cst(1.0) / self
    }
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        libm::sqrt(self)
    }
    fn exp(self) -> Self {
        libm::exp(self)
    }
    fn ln(self) -> Self {
        libm::log(self)
    }
    fn sin(self) -> Self {
        libm::sin(self)
    }
    fn cos(self) -> Self {
        libm::cos(self)
    }
    fn powf(self, e: f64) -> Self {
        libm::pow(self, e)
    }
    fn powi(self, n: i32) -> Self {
        let mut base = if n < 0 { 1.0 / self } else { self };
        let mut k = n.unsigned_abs();
        let mut acc = 1.0;
        while k > 0 {
            if k & 1 == 1 {
                acc *= base;
            }
            base *= base;
            k >>= 1;
        }
        acc
    }
}

/// Value, gradient and Hessian of a scalar with respect to `N` variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<const N: usize> {
    pub v: f64,
    pub g: [f64; N],
    pub h: [[f64; N]; N],
}

impl<const N: usize> Jet<N> {
    pub fn constant(v: f64) -> Self {
        Jet { v, g: [0.0; N], h: [[0.0; N]; N] }
    }

    /// The `i`-th seed variable at value `v`.
    pub fn var(v: f64, i: usize) -> Self {
        let mut j = Self::constant(v);
        j.g[i] = 1.0;
        j
    }

    /// Seeds all `N` variables at once.
    pub fn vars(p: [f64; N]) -> [Self; N] {
        let mut out = [Self::constant(0.0); N];
        for i in 0..N {
            out[i] = Self::var(p[i], i);
        }
        out
    }

    /// Chain rule for a unary map with derivatives `d1`, `d2` at `self.v`.
    fn chain(&self, f: f64, d1: f64, d2: f64) -> Self {
        let mut out = Self::constant(f);
        for i in 0..N {
            out.g[i] = d1 * self.g[i];
            for k in 0..N {
                out.h[i][k] = d1 * self.h[i][k] + d2 * self.g[i] * self.g[k];
            }
        }
        out
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..N {
            self.g[i] += o.g[i];
            for k in 0..N {
                self.h[i][k] += o.h[i][k];
            }
        }
        self
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(mut self) -> Self {
        self.v = -self.v;
        for i in 0..N {
            self.g[i] = -self.g[i];
            for k in 0..N {
                self.h[i][k] = -self.h[i][k];
            }
        }
        self
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut out = Self::constant(self.v * o.v);
        for i in 0..N {
            out.g[i] = self.v * o.g[i] + o.v * self.g[i];
            for k in 0..N {
                out.h[i][k] = self.v * o.h[i][k]
                    + o.v * self.h[i][k]
                    + self.g[i] * o.g[k]
                    + self.g[k] * o.g[i];
            }
        }
        out
    }
}

impl<const N: usize> Div for Jet<N> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<const N: usize> Add<f64> for Jet<N> {
    type Output = Self;
    fn add(mut self, c: f64) -> Self {
        self.v += c;
        self
    }
}

impl<const N: usize> Sub<f64> for Jet<N> {
    type Output = Self;
    fn sub(mut self, c: f64) -> Self {
        self.v -= c;
        self
    }
}

impl<const N: usize> Mul<f64> for Jet<N> {
    type Output = Self;
    fn mul(mut self, c: f64) -> Self {
        self.v *= c;
        for i in 0..N {
            self.g[i] *= c;
            for k in 0..N {
                self.h[i][k] *= c;
            }
        }
        self
    }
}

impl<const N: usize> Div<f64> for Jet<N> {
    type Output = Self;
    fn div(self, c: f64) -> Self {
        self * (1.0 / c)
    }
}

impl<const N: usize> Scalar for Jet<N> {
    fn cst(v: f64) -> Self {
        Self::constant(v)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }
    fn sqrt(self) -> Self {
        let s = libm::sqrt(self.v);
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }
    fn exp(self) -> Self {
        let e = libm::exp(self.v);
        self.chain(e, e, e)
    }
    fn ln(self) -> Self {
        self.chain(libm::log(self.v), 1.0 / self.v, -1.0 / (self.v * self.v))
    }
    fn sin(self) -> Self {
        let (s, c) = (libm::sin(self.v), libm::cos(self.v));
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = (libm::sin(self.v), libm::cos(self.v));
        self.chain(c, -s, -c)
    }
    fn powf(self, e: f64) -> Self {
        let f = libm::pow(self.v, e);
        let d1 = e * libm::pow(self.v, e - 1.0);
        let d2 = e * (e - 1.0) * libm::pow(self.v, e - 2.0);
        self.chain(f, d1, d2)
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::constant(1.0),
            1 => self,
            2 => self * self,
            _ => {
                let f = Scalar::powi(self.v, n);
                let d1 = n as f64 * Scalar::powi(self.v, n - 1);
                let d2 = (n * (n - 1)) as f64 * Scalar::powi(self.v, n - 2);
                self.chain(f, d1, d2)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: impl Fn([f64; 2]) -> f64, j: Jet<2>, p: [f64; 2]) {
        let h = 1e-4;
        for i in 0..2 {
            let mut a = p;
            let mut b = p;
            a[i] += h;
            b[i] -= h;
            let g = (f(a) - f(b)) / (2.0 * h);
            assert!((g - j.g[i]).abs() < 1e-6 * (1.0 + g.abs()), "grad {i}: {g} vs {}", j.g[i]);
            for k in 0..2 {
                let mut pp = p;
                let mut pm = p;
                let mut mp = p;
                let mut mm = p;
                pp[i] += h;
                pp[k] += h;
                pm[i] += h;
                pm[k] -= h;
                mp[i] -= h;
                mp[k] += h;
                mm[i] -= h;
                mm[k] -= h;
                let hk = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
                assert!((hk - j.h[i][k]).abs() < 1e-5 * (1.0 + hk.abs()), "hess {i}{k}: {hk} vs {}", j.h[i][k]);
            }
        }
    }

    #[test]
    fn jet_matches_finite_differences() {
        let p = [0.7, -0.3];
        let f = |x: [f64; 2]| {
            let (a, b) = (x[0], x[1]);
            (a * b + 2.0).sqrt() * (b.cos() + a.sin()) / (1.0 + a * a).powf(1.5) + (a - b).exp() * (3.0 + b).ln()
                - (a + 2.0).powi(-3)
        };
        let [a, b] = Jet::<2>::vars(p);
        let j = ((a * b + 2.0).sqrt() * (b.cos() + a.sin())) / (a * a + 1.0).powf(1.5)
            + (a - b).exp() * (b + 3.0).ln()
            - (a + 2.0).powi(-3);
        assert!((j.v - f(p)).abs() < 1e-14);
        fd_check(f, j, p);
    }

    #[test]
    fn f64_powi_matches_repeated_product() {
        assert_eq!(Scalar::powi(2.0_f64, 10), 1024.0);
        assert!((Scalar::powi(2.0_f64, -3) - 0.125).abs() < 1e-16);
        assert_eq!(Scalar::powi(5.0_f64, 0), 1.0);
    }
}
