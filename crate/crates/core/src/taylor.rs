//! Truncated univariate power series and the automatic-differentiation
//! recurrences used for jet transport.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("division by a series with zero constant term")]
    DivisionByZero,
    #[error("non-integer power of a series whose constant term is not positive")]
    DomainError,
}

/// Coefficient field of a series. Implemented for `f64` and `Complex64`.
pub trait Coeff:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    fn zero() -> Self;
    fn from_f64(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn is_positive_real(self) -> bool;
    fn powf(self, a: f64) -> Self;
    fn sin_cos(self) -> (Self, Self);
    fn is_finite(self) -> bool;
}

impl Coeff for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn is_positive_real(self) -> bool {
        self > 0.0
    }
    fn powf(self, a: f64) -> Self {
        f64::powf(self, a)
    }
    fn sin_cos(self) -> (Self, Self) {
        f64::sin_cos(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Coeff for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn is_positive_real(self) -> bool {
        self.im == 0.0 && self.re > 0.0
    }
    fn powf(self, a: f64) -> Self {
        Complex64::powf(self, a)
    }
    fn sin_cos(self) -> (Self, Self) {
        (self.sin(), self.cos())
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Polynomial `c_0 + c_1 s + ... + c_d s^d`, all arithmetic truncated at degree `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TruncatedSeries<T = f64> {
    coeffs: Vec<T>,
}

/// Four series, one per phase-space coordinate.
pub type SeriesVector<T = f64> = [TruncatedSeries<T>; 4];

impl<T: Coeff> TruncatedSeries<T> {
    /// Builds a series from its coefficients; the degree is `coeffs.len() - 1`.
    ///
    /// # Panics
    /// If `coeffs` is empty.
    pub fn new(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least one coefficient");
        Self { coeffs }
    }

    pub fn zero(degree: usize) -> Self {
        Self { coeffs: vec![T::zero(); degree + 1] }
    }

    pub fn constant(c: T, degree: usize) -> Self {
        let mut s = Self::zero(degree);
        s.coeffs[0] = c;
        s
    }

    /// `c + s`, the independent variable shifted by `c`.
    pub fn variable(c: T, degree: usize) -> Self {
        let mut s = Self::constant(c, degree);
        if degree > 0 {
            s.coeffs[1] = T::from_f64(1.0);
        }
        s
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [T] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn coeff(&self, i: usize) -> T {
        self.coeffs.get(i).copied().unwrap_or_else(T::zero)
    }

    /// Copy with degree changed, padding with zeros or dropping high orders.
    pub fn with_degree(&self, degree: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(degree + 1, T::zero());
        Self { coeffs: c }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Horner evaluation at `s`.
    pub fn eval(&self, s: T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * s + c)
    }

    pub fn scale(&self, a: T) -> Self {
        Self { coeffs: self.coeffs.iter().map(|&c| c * a).collect() }
    }

    fn check(&self, other: &Self) -> Result<(), SeriesError> {
        if self.degree() == other.degree() {
            Ok(())
        } else {
            Err(SeriesError::DegreeMismatch(self.degree(), other.degree()))
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check(other)?;
        Ok(Self { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| a + b).collect() })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check(other)?;
        Ok(Self { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| a - b).collect() })
    }

    /// Cauchy product truncated at the common degree.
    pub fn checked_mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check(other)?;
        let d = self.degree();
        let (f, g) = (&self.coeffs, &other.coeffs);
        let coeffs = (0..=d)
            .map(|i| {
                let mut acc = T::zero();
                for j in 0..=i {
                    acc += f[j] * g[i - j];
                }
                acc
            })
            .collect();
        Ok(Self { coeffs })
    }

    /// Quotient by the recurrence `d_i = (f_i - sum_{j<i} d_j g_{i-j}) / g_0`.
    pub fn checked_div(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check(other)?;
        let g = &other.coeffs;
        if g[0].modulus() == 0.0 {
            return Err(SeriesError::DivisionByZero);
        }
        let mut d: Vec<T> = Vec::with_capacity(g.len());
        for i in 0..g.len() {
            let mut acc = self.coeffs[i];
            for j in 0..i {
                acc = acc - d[j] * g[i - j];
            }
            d.push(acc / g[0]);
        }
        Ok(Self { coeffs: d })
    }

    /// `self^alpha`. Non-integer exponents need a positive constant term; integer
    /// exponents with a zero constant term fall back to repeated products.
    pub fn powf(&self, alpha: f64) -> Result<Self, SeriesError> {
        let f = &self.coeffs;
        let d = self.degree();
        let integer = alpha.fract() == 0.0;
        if f[0].modulus() == 0.0 {
            if !integer {
                return Err(SeriesError::DomainError);
            }
            if alpha < 0.0 {
                return Err(SeriesError::DivisionByZero);
            }
            return Ok(self.powi(alpha as u32));
        }
        if !integer && !f[0].is_positive_real() {
            return Err(SeriesError::DomainError);
        }
        let mut h: Vec<T> = Vec::with_capacity(d + 1);
        h.push(f[0].powf(alpha));
        for k in 1..=d {
            let mut acc = T::zero();
            for j in 1..=k {
                acc += f[j] * h[k - j] * T::from_f64(alpha * j as f64 - (k - j) as f64);
            }
            h.push(acc / (f[0] * T::from_f64(k as f64)));
        }
        Ok(Self { coeffs: h })
    }

    fn powi(&self, n: u32) -> Self {
        let mut result = Self::constant(T::from_f64(1.0), self.degree());
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = &result * &base;
            }
            base = &base * &base;
            n >>= 1;
        }
        result
    }

    /// Joint `(sin f, cos f)` recurrence.
    pub fn sin_cos(&self) -> (Self, Self) {
        let f = &self.coeffs;
        let d = self.degree();
        let (s0, c0) = f[0].sin_cos();
        let mut s = Vec::with_capacity(d + 1);
        let mut c = Vec::with_capacity(d + 1);
        s.push(s0);
        c.push(c0);
        for k in 1..=d {
            let mut sk = T::zero();
            let mut ck = T::zero();
            for j in 1..=k {
                let jf = f[j] * T::from_f64(j as f64);
                sk += jf * c[k - j];
                ck = ck - jf * s[k - j];
            }
            let inv = T::from_f64(1.0 / k as f64);
            s.push(sk * inv);
            c.push(ck * inv);
        }
        (Self { coeffs: s }, Self { coeffs: c })
    }
}

// Operator forms panic on degree mismatch; use the `checked_*` methods to recover.
macro_rules! binop {
    ($tr:ident, $m:ident, $checked:ident) => {
        impl<T: Coeff> $tr for &TruncatedSeries<T> {
            type Output = TruncatedSeries<T>;
            fn $m(self, rhs: Self) -> TruncatedSeries<T> {
                self.$checked(rhs).expect("series operands must share a degree")
            }
        }
        impl<T: Coeff> $tr for TruncatedSeries<T> {
            type Output = TruncatedSeries<T>;
            fn $m(self, rhs: Self) -> TruncatedSeries<T> {
                (&self).$m(&rhs)
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);
binop!(Div, div, checked_div);

impl<T: Coeff> Neg for TruncatedSeries<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { coeffs: self.coeffs.into_iter().map(|c| -c).collect() }
    }
}

impl<T: Coeff> Mul<T> for TruncatedSeries<T> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        self.scale(rhs)
    }
}

impl<T: Coeff> Add<T> for TruncatedSeries<T> {
    type Output = Self;
    fn add(mut self, rhs: T) -> Self {
        self.coeffs[0] += rhs;
        self
    }
}
