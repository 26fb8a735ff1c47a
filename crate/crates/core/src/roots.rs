//! Simultaneous root finding (Aberth–Ehrlich iteration).

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::poly::Polynomial;

pub const MAX_ITERATIONS: usize = 500;
pub const UPDATE_TOLERANCE: f64 = 1e-12;
/// Accepted backward error of a root: `|p(z)| ≤ RESIDUAL_TOLERANCE · Σ|c_i||z|^i`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

const SEED: u64 = 0x0005_eed0_fa11_2007;
const POLISH_STEPS: usize = 3;

/// All complex roots of `p`, counted with multiplicity.
///
/// Exact zeros (vanishing low-order coefficients) are split off first. The
/// rest are found together from starting points spread over a circle of
/// radius `1 + max |c_i / c_n|` with seeded angular jitter, so results are
/// reproducible.
pub fn poly_roots(p: &Polynomial) -> Result<Vec<Complex64>> {
    if p.degree() == 0 {
        return Err(Error::BadOrder("root finding needs degree ≥ 1".into()));
    }
    let zeros = p.coeffs().iter().take_while(|&&c| c == 0.0).count();
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
    let reduced = Polynomial::trimmed(p.coeffs()[zeros..].to_vec());
    match reduced.degree() {
        0 => {}
        1 => roots.push(Complex64::new(-reduced.coeff(0) / reduced.coeff(1), 0.0)),
        _ => roots.extend(aberth(&reduced)?),
    }
    Ok(roots)
}

fn aberth(p: &Polynomial) -> Result<Vec<Complex64>> {
    let n = p.degree();
    let lead = p.leading();
    let monic: Vec<f64> = p.coeffs().iter().map(|c| c / lead).collect();
    let monic = Polynomial::trimmed(monic);
    let dp = monic.derivative();

    let radius = 1.0
        + monic.coeffs()[..n]
            .iter()
            .fold(0.0_f64, |m, c| m.max(c.abs()));
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let jitter: f64 = rng.gen_range(-0.25..0.25);
            let angle = TAU * (k as f64 + 0.5 + jitter) / n as f64;
            Complex64::from_polar(radius, angle)
        })
        .collect();
    let mut done = vec![false; n];

    for _ in 0..MAX_ITERATIONS {
        let mut all_done = true;
        for k in 0..n {
            if done[k] {
                continue;
            }
            let pz = monic.eval(z[k]);
            if pz == Complex64::new(0.0, 0.0) {
                done[k] = true;
                continue;
            }
            let ratio = pz / dp.eval(z[k]);
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != k)
                .map(|j| (z[k] - z[j]).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !step.is_finite() {
                // Collision or vanishing derivative: nudge and retry.
                z[k] *= Complex64::from_polar(1.0 + 1e-6, 1e-3);
                all_done = false;
                continue;
            }
            z[k] -= step;
            if step.norm() <= UPDATE_TOLERANCE * z[k].norm().max(f64::MIN_POSITIVE) {
                done[k] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            break;
        }
    }

    let mut worst = 0.0_f64;
    for zk in z.iter_mut() {
        polish(&monic, &dp, zk);
        let scale = monic.eval_magnitude_bound(*zk);
        let rel = monic.eval(*zk).norm() / scale;
        worst = worst.max(rel);
    }
    if worst.is_nan() || worst > RESIDUAL_TOLERANCE {
        return Err(Error::NonConvergence {
            iterations: MAX_ITERATIONS,
            residual: worst,
        });
    }
    Ok(z)
}

/// A few Newton steps, each kept only if it lowers the residual.
fn polish(p: &Polynomial, dp: &Polynomial, z: &mut Complex64) {
    let mut best = p.eval(*z).norm();
    for _ in 0..POLISH_STEPS {
        if best == 0.0 {
            return;
        }
        let candidate = *z - p.eval(*z) / dp.eval(*z);
        if !candidate.is_finite() {
            return;
        }
        let r = p.eval(candidate).norm();
        if r < best {
            best = r;
            *z = candidate;
        } else {
            return;
        }
    }
}

/// Sorts roots by real part, then imaginary part. Handy for comparisons.
pub fn sort_roots(roots: &mut [Complex64]) {
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}
