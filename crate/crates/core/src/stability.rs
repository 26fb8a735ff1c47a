//! Hurwitz checks and the even/odd "stability equation" factorization.
//!
//! A Hurwitz polynomial `D(s)` splits into an even part and an odd part,
//!
//! ```text
//! D_e(s) = e0 · ∏ (1 + s²/z_i²)
//! D_o(s) = e1 · s · ∏ (1 + s²/p_i²)
//! ```
//!
//! with real positive `z_i²`, `p_i²` that interlace as
//! `z1² < p1² < z2² < p2² < ...`. Truncating both products to the lowest
//! frequency factors and adding them back gives a lower-order polynomial
//! that is Hurwitz again.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Roots closer to the imaginary axis than this (relative to their modulus)
/// count as marginal, i.e. not stable.
pub const STABILITY_MARGIN: f64 = 1e-9;
/// A root `x` of the even/odd polynomial in `s²` counts as real when
/// `|Im x| ≤ REALNESS_TOLERANCE · (1 + |Re x|)`.
pub const REALNESS_TOLERANCE: f64 = 1e-8;

/// True iff every root lies strictly in the open left half-plane.
pub fn is_stable(p: &Polynomial) -> Result<bool> {
    let roots = p.roots()?;
    Ok(roots.iter().all(|z| z.re < -STABILITY_MARGIN * z.norm()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityFactorization {
    pub e0: f64,
    pub e1: f64,
    /// Ascending.
    pub z_sq: Vec<f64>,
    /// Ascending.
    pub p_sq: Vec<f64>,
}

impl StabilityFactorization {
    /// `e0 · ∏_{i<keep} (1 + s²/z_i²)`.
    pub fn even_part(&self, keep: usize) -> Polynomial {
        self.z_sq
            .iter()
            .take(keep)
            .fold(Polynomial::constant(self.e0), |acc, &z2| {
                acc.mul(&Polynomial::trimmed(vec![1.0, 0.0, 1.0 / z2]))
            })
    }

    /// `e1 · s · ∏_{i<keep} (1 + s²/p_i²)`.
    pub fn odd_part(&self, keep: usize) -> Polynomial {
        self.p_sq
            .iter()
            .take(keep)
            .fold(Polynomial::trimmed(vec![0.0, self.e1]), |acc, &p2| {
                acc.mul(&Polynomial::trimmed(vec![1.0, 0.0, 1.0 / p2]))
            })
    }

    /// Degree of the polynomial that was factored.
    pub fn degree(&self) -> usize {
        2 * self.z_sq.len().max(self.p_sq.len())
            + usize::from(self.p_sq.len() >= self.z_sq.len())
    }

    /// Recombines the lowest-frequency factors into a degree-`r` polynomial:
    /// `⌊r/2⌋` even factors and `⌊(r−1)/2⌋` odd factors.
    pub fn truncate(&self, r: usize) -> Result<Polynomial> {
        if r == 0 || r > self.degree() {
            return Err(Error::BadOrder(format!(
                "order {r} outside 1..={}",
                self.degree()
            )));
        }
        Ok(self.even_part(r / 2).add(&self.odd_part((r - 1) / 2)))
    }

    pub fn is_interlaced(&self) -> bool {
        let mut merged = Vec::with_capacity(self.z_sq.len() + self.p_sq.len());
        for i in 0..self.z_sq.len().max(self.p_sq.len()) {
            if let Some(&z) = self.z_sq.get(i) {
                merged.push(z);
            }
            if let Some(&p) = self.p_sq.get(i) {
                merged.push(p);
            }
        }
        merged.len() == self.z_sq.len() + self.p_sq.len()
            && self.z_sq.len() >= self.p_sq.len()
            && self.z_sq.len() <= self.p_sq.len() + 1
            && merged.windows(2).all(|w| w[0] < w[1])
            && merged.iter().all(|&v| v > 0.0)
    }
}

/// Factors `d` into its stability equations.
pub fn even_odd_factor(d: &Polynomial) -> Result<StabilityFactorization> {
    let n = d.degree();
    let d0 = d.coeff(0);
    let d1 = d.coeff(1);
    if d0 == 0.0 {
        return Err(Error::ZeroConstantTerm);
    }
    if n == 0 {
        return Err(Error::NotFactorable("constant polynomial".into()));
    }
    if d1 == 0.0 {
        return Err(Error::NotFactorable("s coefficient is zero".into()));
    }
    if d0.signum() != d1.signum() {
        return Err(Error::NotFactorable(
            "constant and s coefficients differ in sign".into(),
        ));
    }

    let even = d.even_in_s_squared();
    let odd = d.odd_in_s_squared();
    let z_sq = negated_real_roots(&even, "even")?;
    let p_sq = negated_real_roots(&odd, "odd")?;
    if z_sq.len() != n / 2 || p_sq.len() != (n - 1) / 2 {
        return Err(Error::NotFactorable(format!(
            "expected {} even and {} odd factors, found {} and {}",
            n / 2,
            (n - 1) / 2,
            z_sq.len(),
            p_sq.len()
        )));
    }
    let f = StabilityFactorization {
        e0: d0,
        e1: d1,
        z_sq,
        p_sq,
    };
    if !f.is_interlaced() {
        return Err(Error::NotFactorable(format!(
            "factors do not interlace: z² = {:?}, p² = {:?}",
            f.z_sq, f.p_sq
        )));
    }
    Ok(f)
}

/// Roots `x` of `q(x)` mapped to `−x`, which must all be real and positive.
fn negated_real_roots(q: &Polynomial, part: &str) -> Result<Vec<f64>> {
    if q.degree() == 0 {
        return Ok(Vec::new());
    }
    let roots: Vec<Complex64> = q.roots()?;
    let mut out = Vec::with_capacity(roots.len());
    for x in roots {
        if x.im.abs() > REALNESS_TOLERANCE * (1.0 + x.re.abs()) {
            return Err(Error::NotFactorable(format!(
                "{part} part has a complex root {x} in s²"
            )));
        }
        if x.re >= 0.0 {
            return Err(Error::NotFactorable(format!(
                "{part} part has a non-negative root {} in s²",
                x.re
            )));
        }
        out.push(-x.re);
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}
