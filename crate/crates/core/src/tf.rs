//! Rational SISO transfer functions `N(s)/D(s)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// A proper rational transfer function. No pole-zero cancellation is ever
/// performed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTf")]
pub struct TransferFunction {
    num: Polynomial,
    den: Polynomial,
}

#[derive(Deserialize)]
struct RawTf {
    num: Polynomial,
    den: Polynomial,
}

impl TryFrom<RawTf> for TransferFunction {
    type Error = Error;

    fn try_from(raw: RawTf) -> Result<Self> {
        Self::new(raw.num, raw.den)
    }
}

/// `G(s) = K · N(s)/D(s)` with `N(0) = D(0) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub gain: f64,
    pub shape: TransferFunction,
}

impl TransferFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        if !num.is_zero() && num.degree() > den.degree() {
            return Err(Error::Improper {
                num: num.degree(),
                den: den.degree(),
            });
        }
        Ok(Self { num, den })
    }

    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(Polynomial::new(num.to_vec())?, Polynomial::new(den.to_vec())?)
    }

    pub fn gain(k: f64) -> Self {
        Self {
            num: Polynomial::constant(k),
            den: Polynomial::one(),
        }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn order(&self) -> usize {
        self.den.degree()
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.num.eval(s) / self.den.eval(s)
    }

    pub fn freq_response(&self, omega: f64) -> Complex64 {
        self.eval(Complex64::new(0.0, omega))
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    pub fn dc_gain(&self) -> Result<f64> {
        let d0 = self.den.coeff(0);
        if d0 == 0.0 {
            return Err(Error::PoleAtOrigin);
        }
        Ok(self.num.coeff(0) / d0)
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        if self.den.degree() == 0 {
            return Ok(Vec::new());
        }
        self.den.roots()
    }

    /// Cascade `g1·g2`.
    pub fn series(&self, other: &Self) -> Self {
        Self {
            num: &self.num * &other.num,
            den: &self.den * &other.den,
        }
    }

    /// Negative feedback `G/(1 + G·H)` with `self` as `G`.
    pub fn close_loop(&self, feedback: &Self) -> Result<Self> {
        let num = &self.num * &feedback.den;
        let den = &(&self.den * &feedback.den) + &(&self.num * &feedback.num);
        if den.is_zero() {
            return Err(Error::DegenerateLoop);
        }
        Self::new(num, den)
    }

    /// Splits off the DC gain so that both polynomials start with 1.
    pub fn normalize(&self) -> Result<Normalized> {
        let b0 = self.den.coeff(0);
        if b0 == 0.0 {
            return Err(Error::ZeroConstantTerm);
        }
        let a0 = self.num.coeff(0);
        if a0 == 0.0 {
            return Err(Error::ZeroDcGain);
        }
        let shape = Self {
            num: self.num.scale(1.0 / a0),
            den: self.den.scale(1.0 / b0),
        };
        Ok(Normalized {
            gain: a0 / b0,
            shape,
        })
    }
}
