//! Scalar abstraction shared by the plain, dual-number and series right-hand sides.

use std::ops::{Add, Mul, Neg, Sub};

use crate::taylor::TruncatedSeries;

/// Arithmetic needed to evaluate a vector field once and reuse the code for
/// plain states, first derivatives and jets.
pub trait PhaseScalar:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + Add<f64, Output = Self>
{
    fn powf(&self, a: f64) -> Self;
    fn sin_cos(&self) -> (Self, Self);
    /// Constant with the same shape (degree, number of directions) as `self`.
    fn lift(&self, c: f64) -> Self;
}

impl PhaseScalar for f64 {
    fn powf(&self, a: f64) -> Self {
        f64::powf(*self, a)
    }
    fn sin_cos(&self) -> (Self, Self) {
        f64::sin_cos(*self)
    }
    fn lift(&self, c: f64) -> Self {
        c
    }
}

impl PhaseScalar for TruncatedSeries<f64> {
    fn powf(&self, a: f64) -> Self {
        // A collision puts the constant term at zero; NaN lets the integrator report it.
        TruncatedSeries::powf(self, a)
            .unwrap_or_else(|_| TruncatedSeries::constant(f64::NAN, self.degree()))
    }
    fn sin_cos(&self) -> (Self, Self) {
        TruncatedSeries::sin_cos(self)
    }
    fn lift(&self, c: f64) -> Self {
        TruncatedSeries::constant(c, self.degree())
    }
}

/// Forward-mode dual number with `N` derivative directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<const N: usize> {
    pub v: f64,
    pub d: [f64; N],
}

impl<const N: usize> Dual<N> {
    pub fn constant(v: f64) -> Self {
        Self { v, d: [0.0; N] }
    }

    pub fn variable(v: f64, i: usize) -> Self {
        let mut d = [0.0; N];
        d[i] = 1.0;
        Self { v, d }
    }

    fn chain(&self, v: f64, dv: f64) -> Self {
        let mut d = self.d;
        d.iter_mut().for_each(|x| *x *= dv);
        Self { v, d }
    }
}

impl<const N: usize> Add for Dual<N> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..N {
            self.d[i] += o.d[i];
        }
        self
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Self;
    fn sub(mut self, o: Self) -> Self {
        self.v -= o.v;
        for i in 0..N {
            self.d[i] -= o.d[i];
        }
        self
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut d = [0.0; N];
        for i in 0..N {
            d[i] = self.d[i] * o.v + self.v * o.d[i];
        }
        Self { v: self.v * o.v, d }
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.chain(-self.v, -1.0)
    }
}

impl<const N: usize> Mul<f64> for Dual<N> {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        self.chain(self.v * c, c)
    }
}

impl<const N: usize> Add<f64> for Dual<N> {
    type Output = Self;
    fn add(mut self, c: f64) -> Self {
        self.v += c;
        self
    }
}

impl<const N: usize> PhaseScalar for Dual<N> {
    fn powf(&self, a: f64) -> Self {
        let p = self.v.powf(a);
        self.chain(p, a * p / self.v)
    }
    fn sin_cos(&self) -> (Self, Self) {
        let (s, c) = self.v.sin_cos();
        (self.chain(s, c), self.chain(c, -s))
    }
    fn lift(&self, c: f64) -> Self {
        Self::constant(c)
    }
}
