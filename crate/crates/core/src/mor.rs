//! Mixed model-order reduction.
//!
//! The reduced denominator comes from truncating the stability equations of
//! the original denominator. The reduced numerator is then chosen so that
//! the low-order coefficients of `|G(jω)|² / |G_r(jω)|²` match those of 1.
//! Optionally, the `s` coefficient of the reduced denominator is raised by
//! `n`% and its `s²` coefficient lowered by the same percentage.
//!
//! All matching happens on the DC-normalized shapes
//! `G(s) = K·(1 + A1 s + ...)/(1 + B1 s + ...)`, so the reduced model
//! always carries the original DC gain `K` unchanged.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::sim;
use crate::stability::{even_odd_factor, is_stable, StabilityFactorization, REALNESS_TOLERANCE};
use crate::tf::TransferFunction;

/// Frequency grid used to score candidate numerators and report the
/// magnitude-ratio residual.
pub const RESIDUAL_OMEGA_MIN: f64 = 0.1;
pub const RESIDUAL_OMEGA_MAX: f64 = 1e4;
pub const RESIDUAL_POINTS_PER_DECADE: usize = 60;

/// Largest adjustment accepted by [`adjust_step3`], in percent.
pub const MAX_ADJUST_PERCENT: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "percent", rename_all = "snake_case")]
pub enum Adjust {
    None,
    Fixed(f64),
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for PercentGrid {
    fn default() -> Self {
        Self {
            start: 1.0,
            stop: 15.0,
            step: 0.5,
        }
    }
}

impl PercentGrid {
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }

    fn validate(&self) -> Result<()> {
        let ok = self.start >= 1.0
            && self.stop <= MAX_ADJUST_PERCENT
            && self.start <= self.stop
            && self.step > 0.0
            && self.step.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "auto grid {self:?} must lie within [1, 15] with a positive step"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    pub target_order: usize,
    pub numerator_order: usize,
    pub adjust: Adjust,
    pub auto_grid: PercentGrid,
    /// Horizon of the step responses compared in auto mode; defaults to five
    /// of the original system's slowest time constants.
    pub ise_horizon: Option<f64>,
}

impl ReductionConfig {
    /// Order `r` with the default numerator order `r − 1` and no adjustment.
    pub fn new(target_order: usize) -> Self {
        Self {
            target_order,
            numerator_order: target_order.saturating_sub(1),
            adjust: Adjust::None,
            auto_grid: PercentGrid::default(),
            ise_horizon: None,
        }
    }

    pub fn with_numerator_order(mut self, q: usize) -> Self {
        self.numerator_order = q;
        self
    }

    pub fn with_adjust(mut self, adjust: Adjust) -> Self {
        self.adjust = adjust;
        self
    }

    fn validate(&self, input_order: usize) -> Result<()> {
        let r = self.target_order;
        if r == 0 || r > input_order {
            return Err(Error::BadOrder(format!(
                "target order {r} must be in 1..={input_order}"
            )));
        }
        if self.numerator_order >= r {
            return Err(Error::BadOrder(format!(
                "numerator order {} must be below the target order {r}",
                self.numerator_order
            )));
        }
        match self.adjust {
            Adjust::Fixed(n) => check_percent(n)?,
            Adjust::Auto => self.auto_grid.validate()?,
            Adjust::None => {}
        }
        if let Some(h) = self.ise_horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidArgument(format!("ise horizon {h} must be positive")));
            }
        }
        Ok(())
    }
}

/// One equated pair of `s^{2x}` coefficients of the two spectral squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchedCondition {
    pub x: usize,
    pub l: f64,
    pub m: f64,
}

/// `ε(ω) = |G(jω)|² / |G_r(jω)|² − 1` summarized over the residual grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualSummary {
    pub max_abs: f64,
    pub omega_at_max: f64,
    pub at_lowest_omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionResult {
    pub reduced: TransferFunction,
    pub dc_gain: f64,
    pub factorization: StabilityFactorization,
    /// Reduced denominator before any percentage adjustment.
    pub truncated_denominator: Polynomial,
    pub matched_conditions: Vec<MatchedCondition>,
    pub residual: ResidualSummary,
    pub chosen_n: Option<f64>,
    /// `(n, ise)` for every grid point scored in auto mode.
    pub auto_scores: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

fn check_percent(n: f64) -> Result<()> {
    if n > 0.0 && n <= MAX_ADJUST_PERCENT {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "adjustment {n}% outside (0, {MAX_ADJUST_PERCENT}]"
        )))
    }
}

/// Step 1: the order-`r` denominator from the stability equations of `den`.
pub fn reduce_denominator(den: &Polynomial, r: usize) -> Result<Polynomial> {
    let n = den.degree();
    if r == 0 || r >= n {
        return Err(Error::BadOrder(format!("reduced order {r} must be in 1..{n}")));
    }
    even_odd_factor(den)?.truncate(r)
}

/// Step 3: scale the `s` coefficient by `1 + n/100` and the `s²` coefficient
/// by `1 − n/100`.
pub fn adjust_step3(d_r: &Polynomial, percent: f64) -> Result<Polynomial> {
    if d_r.degree() < 2 {
        return Err(Error::BadOrder(format!(
            "adjustment needs a denominator of degree ≥ 2, got {}",
            d_r.degree()
        )));
    }
    check_percent(percent)?;
    let mut c = d_r.coeffs().to_vec();
    c[1] *= 1.0 + percent / 100.0;
    c[2] *= 1.0 - percent / 100.0;
    Ok(Polynomial::trimmed(c))
}

/// Step 2: the reduced numerator `1 + C1 s + ... + Cq s^q`.
///
/// `g` must be DC-normalized and `d_r[0] = 1`. With `m(s) = N(s)·D_r(s)` and
/// `l(s) = D(s)·N_r(s)`, the coefficients of `s^{2x}` in `m(s)m(−s)` and
/// `l(s)l(−s)` are equated for `x = 1..q`. Because the spectral square is
/// multiplicative, this fixes the spectral square of `N_r` up to `s^{2q}`
/// by a triangular solve; `N_r` itself follows in closed form for `q = 1`
/// and from a biquadratic in `C1` for `q = 2`. Among the real solutions the
/// one with the smallest magnitude-ratio residual wins, ties going to the
/// coefficient signs of the original numerator.
pub fn match_numerator(g: &TransferFunction, d_r: &Polynomial, q: usize) -> Result<Polynomial> {
    for c0 in [g.num().coeff(0), g.den().coeff(0), d_r.coeff(0)] {
        if (c0 - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(c0));
        }
    }
    if q > d_r.degree() {
        return Err(Error::BadOrder(format!(
            "numerator order {q} exceeds reduced denominator degree {}",
            d_r.degree()
        )));
    }
    if q == 0 {
        return Ok(Polynomial::one());
    }
    if q > 2 {
        return Err(Error::Unsupported(format!(
            "numerator matching for q = {q} (only q ≤ 2 is solved)"
        )));
    }

    let (sigma, scale) = target_spectral_square(g, d_r, q)?;
    let candidates = match q {
        1 => solve_first_order(sigma[1], scale[1])?,
        _ => solve_second_order(sigma[1], sigma[2])?,
    };
    select_candidate(g, d_r, candidates)
}

/// Coefficients `σ_{2x}`, `x = 0..=q`, of the spectral square the reduced
/// numerator must have, with the magnitude of the terms each was formed from.
fn target_spectral_square(
    g: &TransferFunction,
    d_r: &Polynomial,
    q: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let alpha = g.den().spectral_square()?;
    let target = g.num().mul(d_r).spectral_square()?;
    let mut sigma = vec![1.0];
    let mut scale = vec![1.0];
    for x in 1..=q {
        let terms = (0..x).map(|j| alpha.coeff(2 * (x - j)) * sigma[j]);
        let known: f64 = terms.clone().sum();
        let magnitude: f64 = terms.map(f64::abs).sum();
        sigma.push(target.coeff(2 * x) - known);
        scale.push(target.coeff(2 * x).abs() + magnitude);
    }
    Ok((sigma, scale))
}

fn solve_first_order(sigma2: f64, scale: f64) -> Result<Vec<Vec<f64>>> {
    // 1 − C1² s² must equal 1 + σ2 s²; cancellation noise below the
    // rounding level of the terms counts as zero.
    let c1_sq = -sigma2;
    if c1_sq < -1e-12 * scale {
        return Err(Error::MatchInfeasible {
            detail: "C1² is negative".into(),
            discriminant: c1_sq,
        });
    }
    let c1 = c1_sq.max(0.0).sqrt();
    if c1 == 0.0 {
        Ok(vec![vec![1.0, 0.0]])
    } else {
        Ok(vec![vec![1.0, c1], vec![1.0, -c1]])
    }
}

fn solve_second_order(sigma2: f64, sigma4: f64) -> Result<Vec<Vec<f64>>> {
    // 2C2 − C1² = σ2 and C2² = σ4; eliminating C2 gives
    // C1⁴ + 2σ2 C1² + σ2² − 4σ4 = 0.
    let quartic = Polynomial::trimmed(vec![sigma2 * sigma2 - 4.0 * sigma4, 0.0, 2.0 * sigma2, 0.0, 1.0]);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for root in quartic.roots()? {
        if root.im.abs() > REALNESS_TOLERANCE * (1.0 + root.re.abs()) {
            continue;
        }
        let c1 = root.re;
        let c2 = 0.5 * (sigma2 + c1 * c1);
        let cand = vec![1.0, c1, c2];
        let dup = out.iter().any(|o| {
            o.iter()
                .zip(&cand)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + a.abs()))
        });
        if !dup {
            out.push(cand);
        }
    }
    if out.is_empty() {
        let discriminant = if sigma4 < 0.0 {
            16.0 * sigma4
        } else {
            -sigma2 + 2.0 * sigma4.sqrt()
        };
        return Err(Error::MatchInfeasible {
            detail: "no real C1 solves the biquadratic".into(),
            discriminant,
        });
    }
    Ok(out)
}

fn select_candidate(g: &TransferFunction, d_r: &Polynomial, mut cands: Vec<Vec<f64>>) -> Result<Polynomial> {
    // Deterministic order before scoring: lexicographically descending.
    cands.sort_by(|a, b| {
        b.iter()
            .zip(a)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let grid = residual_grid();
    let mut best: Option<(f64, usize, Polynomial)> = None;
    for c in cands {
        let num = Polynomial::trimmed(c);
        let reduced = TransferFunction::new(num.clone(), d_r.clone())?;
        let score = residual_summary(g, &reduced, &grid).max_abs;
        let agreement = sign_agreement(g.num(), &num);
        let better = match &best {
            None => true,
            Some((s, a, _)) => {
                let tie = (score - s).abs() <= 1e-9 * score.max(*s) + 1e-15;
                if tie {
                    agreement > *a
                } else {
                    score < *s
                }
            }
        };
        if better {
            best = Some((score, agreement, num));
        }
    }
    Ok(best.expect("at least one candidate").2)
}

/// Number of coefficients `C_i` (i ≥ 1) with the sign of `A_i`; a zero or
/// missing `A_i` counts as positive.
fn sign_agreement(original: &Polynomial, candidate: &Polynomial) -> usize {
    (1..=candidate.degree())
        .filter(|&i| {
            let a = original.coeff(i);
            let c = candidate.coeff(i);
            if a < 0.0 {
                c <= 0.0
            } else {
                c >= 0.0
            }
        })
        .count()
}

fn residual_grid() -> Vec<f64> {
    sim::log_grid(RESIDUAL_OMEGA_MIN, RESIDUAL_OMEGA_MAX, RESIDUAL_POINTS_PER_DECADE)
        .expect("static grid")
}

fn residual_summary(g: &TransferFunction, reduced: &TransferFunction, grid: &[f64]) -> ResidualSummary {
    let eps = |w: f64| {
        let s = Complex64::new(0.0, w);
        g.eval(s).norm_sqr() / reduced.eval(s).norm_sqr() - 1.0
    };
    let mut summary = ResidualSummary {
        max_abs: 0.0,
        omega_at_max: grid[0],
        at_lowest_omega: eps(grid[0]).abs(),
    };
    for &w in grid {
        let e = eps(w).abs();
        if e > summary.max_abs || e.is_nan() {
            summary.max_abs = e;
            summary.omega_at_max = w;
        }
    }
    summary
}

/// `(L_{2x}, M_{2x})` for `x = 1..=q`, recomputed from the final polynomials.
pub fn matched_conditions(
    g: &TransferFunction,
    d_r: &Polynomial,
    n_r: &Polynomial,
) -> Result<Vec<MatchedCondition>> {
    let l = g.num().mul(d_r).spectral_square()?;
    let m = g.den().mul(n_r).spectral_square()?;
    Ok((1..=n_r.degree())
        .map(|x| MatchedCondition {
            x,
            l: l.coeff(2 * x),
            m: m.coeff(2 * x),
        })
        .collect())
}

/// Runs the whole reduction: normalize, truncate the denominator, match the
/// numerator, optionally adjust, restore the gain.
pub fn reduce(g: &TransferFunction, cfg: &ReductionConfig) -> Result<ReductionResult> {
    let n = g.order();
    cfg.validate(n)?;
    if !is_stable(g.den())? {
        return Err(Error::Unstable(format!("denominator {} has a root with Re ≥ 0", g.den())));
    }
    let normalized = g.normalize()?;
    let k = normalized.gain;
    let shape = &normalized.shape;

    let factorization = even_odd_factor(shape.den())?;
    let d_r = if cfg.target_order == n {
        shape.den().clone()
    } else {
        factorization.truncate(cfg.target_order)?
    };
    let n_r = match_numerator(shape, &d_r, cfg.numerator_order)?;
    let conditions = matched_conditions(shape, &d_r, &n_r)?;

    let mut warnings = Vec::new();
    let mut auto_scores = Vec::new();
    let (d_final, chosen_n) = match cfg.adjust {
        Adjust::None => (d_r.clone(), None),
        Adjust::Fixed(p) => (adjust_step3(&d_r, p)?, Some(p)),
        Adjust::Auto => {
            let horizon = match cfg.ise_horizon {
                Some(h) => h,
                None => sim::default_horizon(g)?.0,
            };
            let mut best: Option<(f64, f64, Polynomial)> = None;
            for p in cfg.auto_grid.values() {
                match score_adjustment(g, k, &n_r, &d_r, p, horizon) {
                    Ok((score, d)) => {
                        auto_scores.push((p, score));
                        if best.as_ref().is_none_or(|(s, _, _)| score < *s) {
                            best = Some((score, p, d));
                        }
                    }
                    Err(e) => warnings.push(format!("adjustment {p}% skipped: {e}")),
                }
            }
            match best {
                Some((_, p, d)) => (d, Some(p)),
                None => {
                    warnings.push("no adjustment could be scored; returning the unadjusted model".into());
                    (d_r.clone(), None)
                }
            }
        }
    };

    let reduced_shape = TransferFunction::new(n_r.clone(), d_final.clone())?;
    let residual = residual_summary(shape, &reduced_shape, &residual_grid());
    let reduced = TransferFunction::new(n_r.scale(k), d_final)?;
    if !is_stable(reduced.den())? {
        warnings.push("reduced denominator is not Hurwitz".into());
    }

    Ok(ReductionResult {
        reduced,
        dc_gain: k,
        factorization,
        truncated_denominator: d_r,
        matched_conditions: conditions,
        residual,
        chosen_n,
        auto_scores,
        warnings,
    })
}

fn score_adjustment(
    g: &TransferFunction,
    k: f64,
    n_r: &Polynomial,
    d_r: &Polynomial,
    percent: f64,
    horizon: f64,
) -> Result<(f64, Polynomial)> {
    let d = adjust_step3(d_r, percent)?;
    let candidate = TransferFunction::new(n_r.scale(k), d.clone())?;
    let fast = [g, &candidate]
        .iter()
        .filter_map(|tf| sim::time_constants(tf).ok().flatten())
        .map(|(fast, _)| fast)
        .fold(f64::INFINITY, f64::min);
    let dt = if fast.is_finite() { fast / 20.0 } else { horizon / 1000.0 };
    let dt = dt.min(horizon / 10.0);
    let a = sim::step_response(g, horizon, dt)?;
    let b = sim::step_response(&candidate, horizon, dt)?;
    Ok((sim::ise(&a, &b)?, d))
}
