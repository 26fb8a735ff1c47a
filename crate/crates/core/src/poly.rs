//! Real polynomials in ascending powers of `s`.

use std::fmt;
use std::ops::{Add, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients smaller than this fraction of the largest one are dropped
/// from the top end.
pub const TRIM_TOLERANCE: f64 = 1e-14;

/// A polynomial with real coefficients, `coeffs[i]` multiplying `s^i`.
///
/// The leading coefficient is nonzero after trimming; the zero polynomial is
/// stored as `[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::EmptyPolynomial);
        }
        if let Some((index, &value)) = coeffs.iter().enumerate().find(|(_, c)| !c.is_finite()) {
            return Err(Error::NonFiniteCoefficient { index, value });
        }
        Ok(Self::trimmed(coeffs))
    }

    /// Builds from coefficients already known to be finite and non-empty.
    pub(crate) fn trimmed(mut coeffs: Vec<f64>) -> Self {
        debug_assert!(!coeffs.is_empty());
        let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if scale == 0.0 {
            return Self { coeffs: vec![0.0] };
        }
        while coeffs.len() > 1 && coeffs.last().unwrap().abs() <= TRIM_TOLERANCE * scale {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::trimmed(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// Monic polynomial `∏ (s − r)`. Conjugate pairs must both be present for
    /// the result to be real; imaginary residue is discarded.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut acc = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (i, &a) in acc.iter().enumerate() {
                next[i + 1] += a;
                next[i] -= a * r;
            }
            acc = next;
        }
        Self::trimmed(acc.into_iter().map(|c| c.re).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `s^i`, zero beyond the degree.
    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Horner evaluation at a complex point.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// `Σ |c_i| |s|^i`, the natural scale of rounding error in `eval(s)`.
    pub fn eval_magnitude_bound(&self, s: Complex64) -> f64 {
        let r = s.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c.abs())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::constant(0.0);
        }
        Self::trimmed(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::trimmed(self.coeffs.iter().map(|c| c * k).collect())
    }

    /// Coefficient convolution.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::trimmed(out)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::trimmed((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    /// Every root, as a complete multiset. See [`crate::roots`].
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        crate::roots::poly_roots(self)
    }

    /// `P(s)·P(−s)` for a polynomial normalized to a unit constant term.
    ///
    /// Only even powers survive. The coefficient of `s^{2x}` is
    /// `Σ_{i<x} (−1)^i 2 p_i p_{2x−i} + (−1)^x p_x²`; odd coefficients are
    /// exactly zero.
    pub fn spectral_square(&self) -> Result<Self> {
        let c0 = self.coeffs[0];
        if (c0 - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(c0));
        }
        let n = self.degree();
        let mut out = vec![0.0; 2 * n + 1];
        for x in 0..=n {
            let sign = |i: usize| if i.is_multiple_of(2) { 1.0 } else { -1.0 };
            let cross: f64 = (0..x)
                .map(|i| sign(i) * 2.0 * self.coeff(i) * self.coeff(2 * x - i))
                .sum();
            out[2 * x] = cross + sign(x) * self.coeff(x) * self.coeff(x);
        }
        Ok(Self::trimmed(out))
    }

    /// Even part `[c0, c2, c4, ...]` read as a polynomial in `x = s²`.
    pub fn even_in_s_squared(&self) -> Self {
        Self::trimmed(self.coeffs.iter().step_by(2).copied().collect())
    }

    /// Odd part divided by `s`, `[c1, c3, ...]`, as a polynomial in `x = s²`.
    pub fn odd_in_s_squared(&self) -> Self {
        let odd: Vec<f64> = self.coeffs.iter().skip(1).step_by(2).copied().collect();
        if odd.is_empty() {
            Self::constant(0.0)
        } else {
            Self::trimmed(odd)
        }
    }
}

impl TryFrom<Vec<f64>> for Polynomial {
    type Error = Error;

    fn try_from(coeffs: Vec<f64>) -> Result<Self> {
        Self::new(coeffs)
    }
}

impl From<Polynomial> for Vec<f64> {
    fn from(p: Polynomial) -> Self {
        p.coeffs
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::mul(self, rhs)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::add(self, rhs)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 && self.coeffs.len() > 1 {
                continue;
            }
            if !first {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            first = false;
            match i {
                0 => write!(f, "{}", c.abs())?,
                1 => write!(f, "{}·s", c.abs())?,
                _ => write!(f, "{}·s^{}", c.abs(), i)?,
            }
        }
        Ok(())
    }
}
