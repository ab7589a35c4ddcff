//! Forward-mode dual numbers.
//!
//! Two carriers implement [`Scalar`]:
//!
//! * [`Jet`]: value plus gradient. Used wherever only first derivatives are
//!   needed (Christoffel symbols, Poisson brackets, pullback forms).
//! * [`Dual2`]: value, gradient and Hessian, propagated in one pass.
//!
//! `f64` also implements [`Scalar`] so every generic routine in the crate has
//! a plain numeric path.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed by the expression evaluator and the generic linear
/// algebra routines.
///
/// Elementary functions are expressed through [`Scalar::chain`], which takes
/// the value and first two derivatives of a univariate function at
/// `self.value()`. Implementors that do not track second derivatives ignore
/// the last argument.
pub trait Scalar:
    Clone
    + fmt::Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;

    fn value(&self) -> f64;

    /// Compose with a univariate function `f` given `f(v)`, `f'(v)`, `f''(v)`.
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self;

    fn scale(&self, s: f64) -> Self {
        let v = self.value();
        self.chain(s * v, s, 0.0)
    }

    fn recip(&self) -> Self {
        let v = self.value();
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.chain(s, c, -s)
    }

    fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.chain(c, -s, -c)
    }

    fn exp(&self) -> Self {
        let e = self.value().exp();
        self.chain(e, e, e)
    }

    fn ln(&self) -> Self {
        let v = self.value();
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    fn sqrt(&self) -> Self {
        let v = self.value();
        let r = v.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * v))
    }

    fn abs(&self) -> Self {
        let v = self.value();
        let s = if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.chain(v.abs(), s, 0.0)
    }

    fn powi(&self, n: i32) -> Self {
        let v = self.value();
        let nf = n as f64;
        let f1 = if n == 0 { 0.0 } else { nf * v.powi(n - 1) };
        let f2 = if n == 0 || n == 1 {
            0.0
        } else {
            nf * (nf - 1.0) * v.powi(n - 2)
        };
        self.chain(v.powi(n), f1, f2)
    }

    /// Real power with a constant exponent. Callers guarantee `value() > 0`.
    fn powf(&self, p: f64) -> Self {
        let v = self.value();
        self.chain(v.powf(p), p * v.powf(p - 1.0), p * (p - 1.0) * v.powf(p - 2.0))
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }

    fn value(&self) -> f64 {
        *self
    }

    fn chain(&self, f0: f64, _f1: f64, _f2: f64) -> Self {
        f0
    }

    fn scale(&self, s: f64) -> Self {
        s * self
    }

    fn recip(&self) -> Self {
        1.0 / self
    }
}

/// First-order dual number with a dynamically sized gradient.
///
/// A gradient shorter than its partner in a binary operation is treated as
/// zero-padded, so constants can be created with an empty gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d: Vec<f64>,
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Jet { v, d: Vec::new() }
    }

    /// Independent variable number `index` out of `len`.
    pub fn variable(v: f64, index: usize, len: usize) -> Self {
        let mut d = vec![0.0; len];
        d[index] = 1.0;
        Jet { v, d }
    }

    /// Seed a slice of values as variables `offset..offset + values.len()`.
    pub fn seed(values: &[f64], offset: usize, len: usize) -> Vec<Jet> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| Jet::variable(v, offset + i, len))
            .collect()
    }

    /// Partial derivative number `i`, zero when not tracked.
    pub fn partial(&self, i: usize) -> f64 {
        self.d.get(i).copied().unwrap_or(0.0)
    }

    /// Gradient padded to `len` entries.
    pub fn gradient(&self, len: usize) -> Vec<f64> {
        (0..len).map(|i| self.partial(i)).collect()
    }

    fn zip_with(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let n = a.len().max(b.len());
        (0..n)
            .map(|i| f(a.get(i).copied().unwrap_or(0.0), b.get(i).copied().unwrap_or(0.0)))
            .collect()
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        Jet {
            v: self.v + rhs.v,
            d: Jet::zip_with(&self.d, &rhs.d, |a, b| a + b),
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        Jet {
            v: self.v - rhs.v,
            d: Jet::zip_with(&self.d, &rhs.d, |a, b| a - b),
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let (u, w) = (self.v, rhs.v);
        Jet {
            v: u * w,
            d: Jet::zip_with(&self.d, &rhs.d, |a, b| w * a + u * b),
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        let (u, w) = (self.v, rhs.v);
        let q = u / w;
        Jet {
            v: q,
            d: Jet::zip_with(&self.d, &rhs.d, |a, b| (a - q * b) / w),
        }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet {
            v: -self.v,
            d: self.d.into_iter().map(|x| -x).collect(),
        }
    }
}

impl Scalar for Jet {
    fn from_f64(v: f64) -> Self {
        Jet::constant(v)
    }

    fn value(&self) -> f64 {
        self.v
    }

    fn chain(&self, f0: f64, f1: f64, _f2: f64) -> Self {
        Jet {
            v: f0,
            d: self.d.iter().map(|x| f1 * x).collect(),
        }
    }
}

/// Second-order dual number over `n` variables.
///
/// `hess` is stored row-major and is kept exactly symmetric: every update
/// computes the upper triangle and mirrors it.
#[derive(Clone, Debug, PartialEq)]
pub struct Dual2 {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl Dual2 {
    pub fn constant(value: f64, n: usize) -> Self {
        Dual2 {
            value,
            grad: vec![0.0; n],
            hess: vec![0.0; n * n],
        }
    }

    pub fn variable(value: f64, index: usize, n: usize) -> Self {
        let mut d = Dual2::constant(value, n);
        d.grad[index] = 1.0;
        d
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn hess_at(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }

    // Constants built through `from_f64` carry no storage; widen them to
    // match the partner operand.
    fn widen(self, n: usize) -> Self {
        if self.grad.len() == n {
            self
        } else {
            debug_assert!(self.grad.is_empty());
            Dual2::constant(self.value, n)
        }
    }

    fn align(a: Dual2, b: Dual2) -> (Dual2, Dual2) {
        let n = a.dim().max(b.dim());
        (a.widen(n), b.widen(n))
    }

    fn fill_symmetric(n: usize, f: impl Fn(usize, usize) -> f64) -> Vec<f64> {
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                h[i * n + j] = v;
                h[j * n + i] = v;
            }
        }
        h
    }
}

impl Add for Dual2 {
    type Output = Dual2;
    fn add(self, rhs: Dual2) -> Dual2 {
        let (a, b) = Dual2::align(self, rhs);
        Dual2 {
            value: a.value + b.value,
            grad: a.grad.iter().zip(&b.grad).map(|(x, y)| x + y).collect(),
            hess: a.hess.iter().zip(&b.hess).map(|(x, y)| x + y).collect(),
        }
    }
}

impl Sub for Dual2 {
    type Output = Dual2;
    fn sub(self, rhs: Dual2) -> Dual2 {
        let (a, b) = Dual2::align(self, rhs);
        Dual2 {
            value: a.value - b.value,
            grad: a.grad.iter().zip(&b.grad).map(|(x, y)| x - y).collect(),
            hess: a.hess.iter().zip(&b.hess).map(|(x, y)| x - y).collect(),
        }
    }
}

impl Mul for Dual2 {
    type Output = Dual2;
    fn mul(self, rhs: Dual2) -> Dual2 {
        let (a, b) = Dual2::align(self, rhs);
        let n = a.dim();
        let (u, w) = (a.value, b.value);
        let hess = Dual2::fill_symmetric(n, |i, j| {
            u * b.hess[i * n + j]
                + w * a.hess[i * n + j]
                + (a.grad[i] * b.grad[j] + b.grad[i] * a.grad[j])
        });
        Dual2 {
            value: u * w,
            grad: a.grad.iter().zip(&b.grad).map(|(x, y)| w * x + u * y).collect(),
            hess,
        }
    }
}

impl Div for Dual2 {
    type Output = Dual2;
    fn div(self, rhs: Dual2) -> Dual2 {
        self * rhs.recip()
    }
}

impl Neg for Dual2 {
    type Output = Dual2;
    fn neg(self) -> Dual2 {
        Dual2 {
            value: -self.value,
            grad: self.grad.into_iter().map(|x| -x).collect(),
            hess: self.hess.into_iter().map(|x| -x).collect(),
        }
    }
}

impl Scalar for Dual2 {
    fn from_f64(v: f64) -> Self {
        Dual2 {
            value: v,
            grad: Vec::new(),
            hess: Vec::new(),
        }
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let n = self.dim();
        let g = &self.grad;
        let h = &self.hess;
        Dual2 {
            value: f0,
            grad: g.iter().map(|x| f1 * x).collect(),
            hess: Dual2::fill_symmetric(n, |i, j| f1 * h[i * n + j] + f2 * (g[i] * g[j])),
        }
    }
}
