//! Exact forward-mode differentiation.
//!
//! [`Dual<T, N>`] carries a value together with its partial derivatives in
//! `N` independent directions. Because the component type `T` is itself any
//! [`Scalar`], duals nest: `Dual<Dual<f64, 4>, 4>` yields a full 4x4 Hessian
//! in one evaluation, and deeper nestings give the mixed third and fourth
//! order fiber derivatives the curvature pipeline needs. All geometry code
//! is written once against [`Scalar`] and evaluated at whatever depth is
//! required.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Real-like number type the geometry pipeline is generic over.
pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;

    /// Innermost real value.
    fn re(&self) -> f64;

    fn recip(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }

    fn one() -> Self {
        Self::cst(1.0)
    }

    fn powi(self, n: i32) -> Self {
        if n < 0 {
            return self.powi(-n).recip();
        }
        let mut acc = Self::one();
        for _ in 0..n {
            acc *= self;
        }
        acc
    }
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn re(&self) -> f64 {
        *self
    }
    #[inline]
    fn recip(self) -> Self {
        1.0 / self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// A number `re + Σ eps[k]·ε_k` with nilpotent, mutually annihilating ε_k.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T, const N: usize> {
    pub re: T,
    pub eps: [T; N],
}

impl<T: Scalar, const N: usize> Dual<T, N> {
    pub fn constant(re: T) -> Self {
        Self {
            re,
            eps: [T::zero(); N],
        }
    }

    /// Independent variable seeded in direction `k`.
    pub fn variable(re: T, k: usize) -> Self {
        let mut eps = [T::zero(); N];
        eps[k] = T::one();
        Self { re, eps }
    }

    /// Applies a scalar function with known value and derivative at `re`.
    #[inline]
    fn chain(self, value: T, deriv: T) -> Self {
        let mut eps = self.eps;
        for e in eps.iter_mut() {
            *e *= deriv;
        }
        Self { re: value, eps }
    }
}

/// Seeds a 4-vector as independent variables in directions `offset..offset + 4`.
pub fn seed<T: Scalar, const N: usize>(v: &[T; 4], offset: usize) -> [Dual<T, N>; 4] {
    std::array::from_fn(|k| Dual::variable(v[k], offset + k))
}

/// Embeds a 4-vector as constants.
pub fn lift<T: Scalar, const N: usize>(v: &[T; 4]) -> [Dual<T, N>; 4] {
    std::array::from_fn(|k| Dual::constant(v[k]))
}

impl<T: Scalar, const N: usize> Add for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self {
            re: self.re + rhs.re,
            eps: std::array::from_fn(|k| self.eps[k] + rhs.eps[k]),
        }
    }
}

impl<T: Scalar, const N: usize> Sub for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self {
            re: self.re - rhs.re,
            eps: std::array::from_fn(|k| self.eps[k] - rhs.eps[k]),
        }
    }
}

impl<T: Scalar, const N: usize> Mul for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self {
            re: self.re * rhs.re,
            eps: std::array::from_fn(|k| self.re * rhs.eps[k] + self.eps[k] * rhs.re),
        }
    }
}

impl<T: Scalar, const N: usize> Div for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<T: Scalar, const N: usize> Neg for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self {
            re: -self.re,
            eps: std::array::from_fn(|k| -self.eps[k]),
        }
    }
}

impl<T: Scalar, const N: usize> AddAssign for Dual<T, N> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<T: Scalar, const N: usize> SubAssign for Dual<T, N> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<T: Scalar, const N: usize> MulAssign for Dual<T, N> {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl<T: Scalar, const N: usize> Add<f64> for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: f64) -> Self {
        Self {
            re: self.re + rhs,
            eps: self.eps,
        }
    }
}

impl<T: Scalar, const N: usize> Sub<f64> for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: f64) -> Self {
        Self {
            re: self.re - rhs,
            eps: self.eps,
        }
    }
}

impl<T: Scalar, const N: usize> Mul<f64> for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        Self {
            re: self.re * rhs,
            eps: std::array::from_fn(|k| self.eps[k] * rhs),
        }
    }
}

impl<T: Scalar, const N: usize> Div<f64> for Dual<T, N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: f64) -> Self {
        self * (1.0 / rhs)
    }
}

impl<T: Scalar, const N: usize> Scalar for Dual<T, N> {
    fn cst(v: f64) -> Self {
        Self::constant(T::cst(v))
    }

    fn re(&self) -> f64 {
        self.re.re()
    }

    fn recip(self) -> Self {
        let r = self.re.recip();
        self.chain(r, -(r * r))
    }

    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, s.recip() * 0.5)
    }

    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }

    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }

    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }

    fn ln(self) -> Self {
        self.chain(self.re.ln(), self.re.recip())
    }
}

/// Second-order jet type: value, gradient and Hessian in four directions.
pub type Hyper4 = Dual<Dual<f64, 4>, 4>;

/// Seeds a point for Hessian evaluation.
pub fn hyper_seed(v: &[f64; 4]) -> [Hyper4; 4] {
    std::array::from_fn(|k| Dual {
        re: Dual::variable(v[k], k),
        eps: std::array::from_fn(|j| {
            if j == k {
                Dual::constant(1.0)
            } else {
                Dual::constant(0.0)
            }
        }),
    })
}

/// Gradient of a [`Hyper4`] result.
pub fn hyper_gradient(h: &Hyper4) -> [f64; 4] {
    std::array::from_fn(|k| h.re.eps[k])
}

/// Hessian of a [`Hyper4`] result.
pub fn hyper_hessian(h: &Hyper4) -> [[f64; 4]; 4] {
    std::array::from_fn(|j| std::array::from_fn(|k| h.eps[j].eps[k]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f<S: Scalar>(x: S, y: S) -> S {
        (x * y).sin() + x.powi(3) / y + (x * x + y * y).sqrt() * (y * 0.5).exp() - (x + 2.0).ln()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let (x, y) = (0.7, 1.3);
        let d = f(Dual::<f64, 2>::variable(x, 0), Dual::variable(y, 1));
        let h = 1e-6;
        let fx = (f(x + h, y) - f(x - h, y)) / (2.0 * h);
        let fy = (f(x, y + h) - f(x, y - h)) / (2.0 * h);
        assert!((d.re - f(x, y)).abs() < 1e-15);
        assert!((d.eps[0] - fx).abs() < 1e-8);
        assert!((d.eps[1] - fy).abs() < 1e-8);
    }

    #[test]
    fn nested_duals_give_symmetric_hessian() {
        let p = hyper_seed(&[0.3, 1.1, -0.4, 2.0]);
        let v = p[0] * p[1] * p[1] + (p[2] * p[3]).cos() + p[0].recip() * p[3];
        let hess = hyper_hessian(&v);
        for j in 0..4 {
            for k in 0..4 {
                assert!((hess[j][k] - hess[k][j]).abs() < 1e-14);
            }
        }
        // d²/dx0 dx1 of x0 x1² = 2 x1
        assert!((hess[0][1] - 2.0 * 1.1).abs() < 1e-14);
        // d²/dx1² = 2 x0
        assert!((hess[1][1] - 0.6).abs() < 1e-14);
        // d²(x3/x0)/dx0² = 2 x3 / x0³
        assert!((hess[0][0] - 2.0 * 2.0 / 0.3f64.powi(3)).abs() < 1e-10);
    }

    #[test]
    fn powi_handles_negative_exponents() {
        let x = Dual::<f64, 1>::variable(2.0, 0);
        let y = x.powi(-2);
        assert!((y.re - 0.25).abs() < 1e-15);
        assert!((y.eps[0] + 0.25).abs() < 1e-15);
    }
}
