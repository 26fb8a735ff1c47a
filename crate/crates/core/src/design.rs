//! Current-controller gain design.
//!
//! Both design paths place the closed-loop characteristic polynomial of a
//! second-order loop model at a requested damping ratio; they differ in how
//! that second-order model is obtained. The conventional path uses the
//! hand simplifications `(1 + sTm) ≈ sTm` and `Tc ≈ T2`; the reduction path
//! reduces the third-order loop shape with [`crate::mor::reduce`].

use num_complex::Complex64;
use serde::Serialize;

use crate::drive::DerivedDriveModel;
use crate::error::{Error, Result};
use crate::mor::{self, ReductionConfig, ReductionResult};
use crate::poly::Polynomial;
use crate::sim;
use crate::stability::is_stable;
use crate::tf::TransferFunction;

/// Loop gain and controller gain quoted with the reference drive in the
/// literature. Neither follows from the loop equations with the stated
/// constants; kept only for side-by-side reporting.
pub const PUBLISHED_K: f64 = 357.192;
pub const PUBLISHED_KC: f64 = 35.719;
/// Integral square error quoted for the reference drive's reduced model.
pub const PUBLISHED_ISE: f64 = 0.0204;
/// Hand-tuned controller gain quoted for the reference drive.
pub const PUBLISHED_TUNED_KC: f64 = 3.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignMethod {
    Conventional,
    Mor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    pub method: DesignMethod,
    pub k: f64,
    pub kc: f64,
    pub tc: f64,
    pub reduced_model: Option<ReductionResult>,
    /// Roots of the second-order design characteristic polynomial.
    pub closed_loop_poles: Vec<(f64, f64)>,
    pub achieved_zeta: f64,
    pub natural_frequency: f64,
    /// Poles of the full current loop (integrator and back-EMF zero kept)
    /// at the designed `Kc`.
    pub full_loop_poles: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub kc: f64,
    pub stable: bool,
    pub overshoot_pct: Option<f64>,
    pub settling_time_2pct: Option<f64>,
    pub rise_time_10_90: Option<f64>,
    /// ISE of the current response against the ideal step `1/Hc`.
    pub ise_vs_reference: Option<f64>,
}

/// Damping ratio and natural frequency of a pole pair.
pub fn pair_damping(a: Complex64, b: Complex64) -> (f64, f64) {
    let wn = (a * b).re.abs().sqrt();
    let zeta = -(a + b).re / (2.0 * wn);
    (zeta, wn)
}

/// The quadratic in `K` whose roots place `d(s) + K·c(s)` at damping `zeta`.
///
/// For `d2 s² + d1 s + d0` and `c2 s² + c1 s + c0` the condition is
/// `(d1 + K c1)² = 4ζ² (d2 + K c2)(d0 + K c0)`. Coefficients are returned in
/// ascending powers of `K`.
pub fn damping_condition(d: &Polynomial, c: &Polynomial, zeta: f64) -> [f64; 3] {
    let (d0, d1, d2) = (d.coeff(0), d.coeff(1), d.coeff(2));
    let (c0, c1, c2) = (c.coeff(0), c.coeff(1), c.coeff(2));
    let z4 = 4.0 * zeta * zeta;
    [
        d1 * d1 - z4 * d2 * d0,
        2.0 * d1 * c1 - z4 * (d2 * c0 + d0 * c2),
        c1 * c1 - z4 * c2 * c0,
    ]
}

/// Smallest positive `K` placing `d(s) + K·c(s)` (both of degree ≤ 2) at
/// damping `zeta` with all closed-loop coefficients positive.
pub fn gain_for_damping(d: &Polynomial, c: &Polynomial, zeta: f64) -> Result<f64> {
    if d.degree() != 2 || c.degree() > 2 {
        return Err(Error::BadOrder(format!(
            "damping placement needs a quadratic denominator and numerator of degree ≤ 2, got {} and {}",
            d.degree(),
            c.degree()
        )));
    }
    let [q0, q1, q2] = damping_condition(d, c, zeta);
    let scale = q0.abs() + q1.abs() + q2.abs();
    let roots: Vec<f64> = if q2.abs() <= 1e-14 * scale {
        if q1 == 0.0 {
            return Err(Error::NoPositiveGain("damping condition is independent of K".into()));
        }
        vec![-q0 / q1]
    } else {
        let disc = q1 * q1 - 4.0 * q2 * q0;
        if disc < 0.0 {
            let re = -q1 / (2.0 * q2);
            let im = (-disc).sqrt() / (2.0 * q2.abs());
            return Err(Error::NoRealGain {
                discriminant: disc,
                roots: vec![(re, im), (re, -im)],
            });
        }
        let sq = disc.sqrt();
        // Cancellation-free pair.
        let t = -0.5 * (q1 + q1.signum() * sq);
        if t == 0.0 {
            vec![0.0]
        } else {
            vec![t / q2, q0 / t]
        }
    };
    let admissible = |k: f64| {
        k > 1e-12
            && (0..=2).all(|i| d.coeff(i) + k * c.coeff(i) > 0.0)
    };
    roots
        .iter()
        .copied()
        .filter(|&k| admissible(k))
        .min_by(f64::total_cmp)
        .ok_or_else(|| {
            Error::NoPositiveGain(format!("candidate gains {roots:?} are not positive and stabilizing"))
        })
}

fn pole_pairs(p: &[Complex64]) -> Vec<(f64, f64)> {
    p.iter().map(|z| (z.re, z.im)).collect()
}

fn finish_report(
    model: &DerivedDriveModel,
    method: DesignMethod,
    k: f64,
    characteristic: &Polynomial,
    reduced_model: Option<ReductionResult>,
) -> Result<DesignReport> {
    let poles = characteristic.roots()?;
    let (achieved_zeta, natural_frequency) = pair_damping(poles[0], poles[1]);
    let kc = model.kc_from_k(k);
    let full = model.closed_current_loop(kc)?;
    let full_poles = full.poles()?;

    let mut warnings = Vec::new();
    if !is_stable(characteristic)? {
        warnings.push("design characteristic polynomial is not Hurwitz".into());
    }
    if !is_stable(full.den())? {
        warnings.push(format!("full current loop is unstable at Kc = {kc}"));
    }
    if let Some(r) = &reduced_model {
        warnings.extend(r.warnings.iter().cloned());
    }
    Ok(DesignReport {
        method,
        k,
        kc,
        tc: model.tc,
        reduced_model,
        closed_loop_poles: pole_pairs(&poles),
        achieved_zeta,
        natural_frequency,
        full_loop_poles: pole_pairs(&full_poles),
        warnings,
    })
}

/// Design on `K/((1 + sT1)(1 + sTr))`, the loop left after `(1 + sTm) ≈ sTm`
/// and `Tc ≈ T2`. The damping match gives
/// `K = (T1 + Tr)² / (4ζ² T1 Tr) − 1`; `Kc` uses the model's own `Tc`.
pub fn design_conventional(model: &DerivedDriveModel) -> Result<DesignReport> {
    let (t1, tr, zeta) = (model.t1, model.tr, model.params.zeta);
    let k = (t1 + tr).powi(2) / (4.0 * zeta * zeta * t1 * tr) - 1.0;
    if k.is_nan() || k <= 0.0 {
        return Err(Error::NoPositiveGain(format!("K = {k}")));
    }
    let characteristic = Polynomial::trimmed(vec![1.0 + k, t1 + tr, t1 * tr]);
    finish_report(model, DesignMethod::Conventional, k, &characteristic, None)
}

/// Design on the order-2 reduction of the loop shape
/// `(1 + sTc)/((1 + sT1)(1 + sT2)(1 + sTr))`.
pub fn design_via_mor(model: &DerivedDriveModel, cfg: &ReductionConfig) -> Result<DesignReport> {
    if cfg.target_order != 2 {
        return Err(Error::BadOrder(format!(
            "controller design reduces to order 2, got {}",
            cfg.target_order
        )));
    }
    let reduction = mor::reduce(&model.loop_shape, cfg)?;
    let normalized = reduction.reduced.normalize()?;
    let (d, c) = (normalized.shape.den(), normalized.shape.num());
    // The loop shape has unit DC gain, so K multiplies the normalized numerator.
    let k = gain_for_damping(d, c, model.params.zeta)? / normalized.gain;
    let characteristic = d.add(&c.scale(k * normalized.gain));
    finish_report(model, DesignMethod::Mor, k, &characteristic, Some(reduction))
}

/// Closes the full current loop at `kc` and measures its unit-step response.
pub fn evaluate_gain(model: &DerivedDriveModel, kc: f64) -> Result<SweepPoint> {
    let unstable = SweepPoint {
        kc,
        stable: false,
        overshoot_pct: None,
        settling_time_2pct: None,
        rise_time_10_90: None,
        ise_vs_reference: None,
    };
    let cl = model.closed_current_loop(kc)?;
    if !is_stable(cl.den())? {
        return Ok(unstable);
    }
    let (t_final, dt) = sim::default_horizon(&cl)?;
    let trace = sim::step_response(&cl, t_final, dt)?;
    let reference = 1.0 / model.hc;
    let ise = sim::ise_against_level(&trace, reference);
    let metrics = sim::response_metrics(&trace)?;
    Ok(SweepPoint {
        kc,
        stable: true,
        overshoot_pct: Some(metrics.overshoot_pct),
        settling_time_2pct: Some(metrics.settling_2pct_s),
        rise_time_10_90: Some(metrics.rise_10_90_s),
        ise_vs_reference: Some(ise),
    })
}

/// Linear grid of `steps` controller gains from `kc_min` to `kc_max`.
///
/// A point whose simulation fails is reported with its metrics absent; the
/// sweep itself carries on.
pub fn sweep_gain(
    model: &DerivedDriveModel,
    kc_min: f64,
    kc_max: f64,
    steps: usize,
) -> Result<Vec<SweepPoint>> {
    if !(kc_min > 0.0 && kc_max > kc_min && kc_max.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < kc_min < kc_max, got {kc_min}, {kc_max}"
        )));
    }
    if steps < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 steps, got {steps}")));
    }
    let span = kc_max - kc_min;
    Ok((0..steps)
        .map(|i| {
            let kc = if i + 1 == steps {
                kc_max
            } else {
                kc_min + span * i as f64 / (steps - 1) as f64
            };
            evaluate_gain(model, kc).unwrap_or(SweepPoint {
                kc,
                stable: true,
                overshoot_pct: None,
                settling_time_2pct: None,
                rise_time_10_90: None,
                ise_vs_reference: None,
            })
        })
        .collect())
}

/// Full drive against its reduced model, both open- and closed-loop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionComparison {
    pub k: f64,
    pub kc: f64,
    /// Unit-gain loop shape against its reduction.
    pub open_loop_ise: f64,
    pub open_loop_horizon_s: f64,
    /// Full current loop against the closed reduced loop, current per
    /// command volt.
    pub closed_loop_ise: f64,
    pub closed_loop_horizon_s: f64,
    pub dt_s: f64,
    /// Largest open-loop magnitude gap over `[0.1, 1/T2]` rad/s.
    pub max_mag_gap_db: f64,
    pub full_closed_loop: TransferFunction,
    pub reduced_closed_loop: TransferFunction,
}

/// Compares the reduction of the loop shape with the drive it stands for at
/// loop gain `k`.
///
/// The closed-loop pair is the full current loop (PI controller, converter,
/// motor, transducer feedback) against `K·Gr/Hc` closed around `Hc`, both
/// driven by a unit step command over five of the full loop's slowest time
/// constants.
pub fn compare_reduction(
    model: &DerivedDriveModel,
    reduction: &ReductionResult,
    k: f64,
) -> Result<ReductionComparison> {
    let kc = model.kc_from_k(k);
    let shape = &model.loop_shape;
    let reduced = &reduction.reduced;

    let full_cl = model.closed_current_loop(kc)?;
    let reduced_cl = reduced
        .scale(k / model.hc)
        .close_loop(&TransferFunction::gain(model.hc))?;

    let fastest = [shape, reduced, &full_cl, &reduced_cl]
        .iter()
        .map(|g| sim::time_constants(g).map(|t| t.map_or(f64::INFINITY, |(f, _)| f)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let dt = fastest / 20.0;

    let open_horizon = sim::default_horizon(shape)?.0;
    let open_loop_ise = sim::ise(
        &sim::step_response(shape, open_horizon, dt)?,
        &sim::step_response(reduced, open_horizon, dt)?,
    )?;

    let closed_horizon = sim::default_horizon(&full_cl)?.0;
    let closed_loop_ise = sim::ise(
        &sim::step_response(&full_cl, closed_horizon, dt)?,
        &sim::step_response(&reduced_cl, closed_horizon, dt)?,
    )?;

    let grid = sim::log_grid(0.1, 1.0 / model.t2, 60)?;
    let max_mag_gap_db = grid
        .iter()
        .map(|&w| {
            let a = shape.freq_response(w).norm();
            let b = reduced.freq_response(w).norm();
            (20.0 * (a / b).log10()).abs()
        })
        .fold(0.0, f64::max);

    Ok(ReductionComparison {
        k,
        kc,
        open_loop_ise,
        open_loop_horizon_s: open_horizon,
        closed_loop_ise,
        closed_loop_horizon_s: closed_horizon,
        dt_s: dt,
        max_mag_gap_db,
        full_closed_loop: full_cl,
        reduced_closed_loop: reduced_cl,
    })
}
