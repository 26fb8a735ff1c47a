//! Step responses, Bode grids, response metrics and integral square error.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tf::TransferFunction;

/// Fraction of trailing samples used to estimate the final value.
pub const FINAL_WINDOW: f64 = 0.05;
/// Settling band, relative to the final value.
pub const SETTLING_BAND: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepTrace {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub dt: f64,
    pub input_amplitude: f64,
    /// Set when `dt` exceeds a tenth of the fastest time constant.
    pub stiffness_warning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BodeTrace {
    pub omega: Vec<f64>,
    pub mag_db: Vec<f64>,
    pub phase_deg: Vec<f64>,
    /// Grid indices where the response is unbounded (pole on the jω axis).
    pub singular: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResponseMetrics {
    pub overshoot_pct: f64,
    pub settling_2pct_s: f64,
    pub rise_10_90_s: f64,
    pub final_value: f64,
}

/// Smallest and largest time constants implied by the poles: `1/|p|` for the
/// fastest and `1/|Re p|` for the slowest. `None` for a pure gain.
pub fn time_constants(g: &TransferFunction) -> Result<Option<(f64, f64)>> {
    let poles = g.poles()?;
    if poles.is_empty() {
        return Ok(None);
    }
    let fastest = poles.iter().map(|p| p.norm()).fold(0.0_f64, f64::max);
    let slowest = poles.iter().map(|p| p.re.abs()).fold(f64::INFINITY, f64::min);
    Ok(Some((1.0 / fastest, 1.0 / slowest)))
}

/// Default `(t_final, dt)`: five slowest time constants, a twentieth of the
/// fastest.
pub fn default_horizon(g: &TransferFunction) -> Result<(f64, f64)> {
    match time_constants(g)? {
        None => Ok((1.0, 0.01)),
        Some((fast, slow)) if fast.is_finite() && slow.is_finite() && fast > 0.0 => {
            Ok((5.0 * slow, fast / 20.0))
        }
        Some(_) => Err(Error::InvalidArgument(
            "no default horizon for a system with poles on the imaginary axis".into(),
        )),
    }
}

/// Controllable canonical form of a proper transfer function with a monic
/// denominator `s^n + α_{n−1}s^{n−1} + ... + α_0`.
struct Companion {
    alpha: Vec<f64>,
    c: Vec<f64>,
    d: f64,
}

impl Companion {
    fn new(g: &TransferFunction) -> Self {
        let n = g.den().degree();
        let lead = g.den().leading();
        let alpha: Vec<f64> = (0..n).map(|i| g.den().coeff(i) / lead).collect();
        let d = g.num().coeff(n) / lead;
        let c = (0..n)
            .map(|i| g.num().coeff(i) / lead - d * alpha[i])
            .collect();
        Self { alpha, c, d }
    }

    fn derivative(&self, x: &[f64], u: f64, dx: &mut [f64]) {
        let n = x.len();
        dx[..n - 1].copy_from_slice(&x[1..]);
        dx[n - 1] = u - self.alpha.iter().zip(x).map(|(a, xi)| a * xi).sum::<f64>();
    }

    fn output(&self, x: &[f64], u: f64) -> f64 {
        self.c.iter().zip(x).map(|(c, xi)| c * xi).sum::<f64>() + self.d * u
    }
}

/// Unit-step response integrated with classical fixed-step RK4.
///
/// The grid ends exactly at `t_final`; the step used is the largest
/// `t_final / k` not above `dt`, and is reported in [`StepTrace::dt`].
pub fn step_response(g: &TransferFunction, t_final: f64, dt: f64) -> Result<StepTrace> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if !(t_final >= 10.0 * dt && t_final.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "t_final = {t_final} must be at least 10·dt = {}",
            10.0 * dt
        )));
    }
    let steps = ((t_final / dt) * (1.0 - 1e-12)).ceil() as usize;
    let dt = t_final / steps as f64;
    let mut t: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
    t[steps] = t_final;
    let u = 1.0;

    let n = g.den().degree();
    if n == 0 {
        let y0 = g.num().coeff(0) / g.den().coeff(0);
        return Ok(StepTrace {
            y: vec![y0 * u; t.len()],
            t,
            dt,
            input_amplitude: u,
            stiffness_warning: false,
        });
    }

    let stiffness_warning = match time_constants(g)? {
        Some((fast, _)) => dt > fast / 10.0,
        None => false,
    };

    let sys = Companion::new(g);
    let mut x = vec![0.0; n];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut y = Vec::with_capacity(t.len());
    y.push(sys.output(&x, u));
    for &ti in &t[1..] {
        sys.derivative(&x, u, &mut k1);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        sys.derivative(&tmp, u, &mut k2);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        sys.derivative(&tmp, u, &mut k3);
        for i in 0..n {
            tmp[i] = x[i] + dt * k3[i];
        }
        sys.derivative(&tmp, u, &mut k4);
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let yi = sys.output(&x, u);
        if !yi.is_finite() {
            return Err(Error::SimulationDiverged { t: ti });
        }
        y.push(yi);
    }
    Ok(StepTrace {
        t,
        y,
        dt,
        input_amplitude: u,
        stiffness_warning,
    })
}

/// Log-spaced grid from `omega_min` to `omega_max`, both included.
pub fn log_grid(omega_min: f64, omega_max: f64, points_per_decade: usize) -> Result<Vec<f64>> {
    if !(omega_min > 0.0 && omega_max > omega_min && omega_max.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < omega_min < omega_max, got {omega_min}, {omega_max}"
        )));
    }
    if points_per_decade == 0 {
        return Err(Error::InvalidArgument("points per decade must be ≥ 1".into()));
    }
    let (lo, hi) = (omega_min.log10(), omega_max.log10());
    let intervals = ((hi - lo) * points_per_decade as f64 - 1e-9).ceil().max(1.0) as usize;
    Ok((0..=intervals)
        .map(|i| {
            if i == intervals {
                omega_max
            } else {
                10f64.powf(lo + (hi - lo) * i as f64 / intervals as f64)
            }
        })
        .collect())
}

pub fn bode(
    g: &TransferFunction,
    omega_min: f64,
    omega_max: f64,
    points_per_decade: usize,
) -> Result<BodeTrace> {
    let omega = log_grid(omega_min, omega_max, points_per_decade)?;
    let mut mag_db = Vec::with_capacity(omega.len());
    let mut phase_deg: Vec<f64> = Vec::with_capacity(omega.len());
    let mut singular = Vec::new();
    for (i, &w) in omega.iter().enumerate() {
        let h = g.freq_response(w);
        if !h.is_finite() {
            singular.push(i);
            mag_db.push(f64::INFINITY);
            phase_deg.push(phase_deg.last().copied().unwrap_or(0.0));
            continue;
        }
        mag_db.push(20.0 * h.norm().log10());
        let mut ph = h.arg().to_degrees();
        if let Some(&prev) = phase_deg.last() {
            while ph - prev > 180.0 {
                ph -= 360.0;
            }
            while ph - prev < -180.0 {
                ph += 360.0;
            }
        }
        phase_deg.push(ph);
    }
    Ok(BodeTrace {
        omega,
        mag_db,
        phase_deg,
        singular,
    })
}

/// Trapezoidal integral of the squared difference of two traces.
pub fn ise(a: &StepTrace, b: &StepTrace) -> Result<f64> {
    if a.t.len() != b.t.len() {
        return Err(Error::GridMismatch(format!(
            "{} vs {} samples",
            a.t.len(),
            b.t.len()
        )));
    }
    if (a.dt - b.dt).abs() > 1e-12 * a.dt.abs().max(b.dt.abs()) {
        return Err(Error::GridMismatch(format!("dt {} vs {}", a.dt, b.dt)));
    }
    if a.y.len() < 2 {
        return Ok(0.0);
    }
    let sq: Vec<f64> = a.y.iter().zip(&b.y).map(|(p, q)| (p - q) * (p - q)).collect();
    let interior: f64 = sq[1..sq.len() - 1].iter().sum();
    Ok(a.dt * (interior + 0.5 * (sq[0] + sq[sq.len() - 1])))
}

/// ISE of a trace against a constant reference level.
pub fn ise_against_level(a: &StepTrace, level: f64) -> f64 {
    let reference = StepTrace {
        y: vec![level; a.y.len()],
        ..a.clone()
    };
    ise(a, &reference).expect("identical grids")
}

/// Overshoot, 2% settling time and 10–90% rise time of a settled trace.
pub fn response_metrics(tr: &StepTrace) -> Result<ResponseMetrics> {
    let n = tr.y.len();
    if n < 20 {
        return Err(Error::NotSettled("trace too short".into()));
    }
    let window = ((n as f64 * FINAL_WINDOW).ceil() as usize).max(1);
    let tail = &tr.y[n - window..];
    let final_value = tail.iter().sum::<f64>() / window as f64;
    if !final_value.is_finite() || final_value == 0.0 {
        return Err(Error::NotSettled(format!("final value {final_value}")));
    }
    let band = SETTLING_BAND * final_value.abs();
    if tail.iter().any(|y| (y - final_value).abs() > band) {
        return Err(Error::NotSettled(
            "trailing samples leave the ±2% band around their mean".into(),
        ));
    }

    // Work on the response normalized to a positive final value.
    let sign = final_value.signum();
    let r: Vec<f64> = tr.y.iter().map(|y| sign * y / final_value.abs()).collect();

    let (peak_idx, peak) = r
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    let overshoot_pct = if peak_idx >= n - window {
        0.0
    } else {
        ((peak - 1.0) * 100.0).max(0.0)
    };

    let settling_2pct_s = match r.iter().rposition(|v| (v - 1.0).abs() > SETTLING_BAND) {
        None => 0.0,
        Some(i) => crossing(&tr.t, &r, i, |v| (v - 1.0).abs() - SETTLING_BAND),
    };

    let rise_10_90_s = first_crossing(&tr.t, &r, 0.9)
        .zip(first_crossing(&tr.t, &r, 0.1))
        .map(|(hi, lo)| hi - lo)
        .ok_or_else(|| Error::NotSettled("response never crosses 10%/90%".into()))?;

    Ok(ResponseMetrics {
        overshoot_pct,
        settling_2pct_s,
        rise_10_90_s,
        final_value,
    })
}

/// Time where `f` changes sign between samples `i` and `i + 1`, by linear
/// interpolation.
fn crossing(t: &[f64], r: &[f64], i: usize, f: impl Fn(f64) -> f64) -> f64 {
    if i + 1 >= r.len() {
        return t[i];
    }
    let (a, b) = (f(r[i]), f(r[i + 1]));
    if a == b {
        return t[i];
    }
    t[i] + (t[i + 1] - t[i]) * a / (a - b)
}

fn first_crossing(t: &[f64], r: &[f64], level: f64) -> Option<f64> {
    if r[0] >= level {
        return Some(t[0]);
    }
    let i = r.windows(2).position(|w| w[0] < level && w[1] >= level)?;
    Some(crossing(t, r, i, |v| v - level))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tf(n: &[f64], d: &[f64]) -> TransferFunction {
        TransferFunction::from_coeffs(n, d).unwrap()
    }

    fn second_order(zeta: f64, wn: f64) -> TransferFunction {
        tf(&[1.0], &[1.0, 2.0 * zeta / wn, 1.0 / (wn * wn)])
    }

    #[test]
    fn first_order_step() {
        let tr = step_response(&tf(&[1.0], &[1.0, 1.0]), 1.0, 1e-3).unwrap();
        assert_eq!(tr.t.len(), 1001);
        assert!((tr.y.last().unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-6);
        assert!(!tr.stiffness_warning);
    }

    #[test]
    fn pure_gain_step() {
        let tr = step_response(&TransferFunction::gain(2.0), 1.0, 0.01).unwrap();
        assert!(tr.y.iter().all(|&y| y == 2.0));
    }

    #[test]
    fn feedthrough_is_handled() {
        // (1 + 2s)/(1 + s) = 2 − 1/(1 + s): jumps to 2, decays to 1
        let tr = step_response(&tf(&[1.0, 2.0], &[1.0, 1.0]), 10.0, 1e-3).unwrap();
        assert_eq!(tr.y[0], 2.0);
        assert!((tr.y.last().unwrap() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn underdamped_overshoot_matches_damping() {
        // wn = 10, zeta = 0.25
        let g = tf(&[1.0], &[1.0, 0.05, 0.01]);
        let poles = g.poles().unwrap();
        let wn = (poles[0] * poles[1]).re.sqrt();
        let zeta = -(poles[0] + poles[1]).re / (2.0 * wn);
        let oracle = 100.0 * (-std::f64::consts::PI * zeta / (1.0 - zeta * zeta).sqrt()).exp();
        let (t_final, dt) = default_horizon(&g).unwrap();
        let tr = step_response(&g, t_final * 4.0, dt).unwrap();
        let m = response_metrics(&tr).unwrap();
        assert!((m.final_value - 1.0).abs() < 1e-3);
        assert!((m.overshoot_pct - oracle).abs() < 0.01 * oracle, "{} vs {oracle}", m.overshoot_pct);
    }

    #[test]
    fn reduced_drive_quadratic_is_overdamped() {
        // Real poles (zeta ≈ 1.32): no overshoot, settles to the DC gain.
        let g = tf(&[1.0], &[1.0, 0.12988, 0.00241749]);
        assert!(g.poles().unwrap().iter().all(|p| p.im == 0.0));
        let (t_final, dt) = default_horizon(&g).unwrap();
        let m = response_metrics(&step_response(&g, 2.0 * t_final, dt).unwrap()).unwrap();
        assert_eq!(m.overshoot_pct, 0.0);
        assert!((m.final_value - 1.0).abs() < 5e-3);
    }

    #[test]
    fn stiffness_is_flagged() {
        let tr = step_response(&tf(&[1.0], &[1.0, 0.01]), 1.0, 0.01).unwrap();
        assert!(tr.stiffness_warning);
    }

    #[test]
    fn divergence_is_reported() {
        let err = step_response(&tf(&[1.0], &[-1.0, 1e-3]), 10.0, 0.01).unwrap_err();
        assert!(matches!(err, Error::SimulationDiverged { .. }));
    }

    #[test]
    fn argument_checks() {
        let g = tf(&[1.0], &[1.0, 1.0]);
        assert!(step_response(&g, 1.0, 0.0).is_err());
        assert!(step_response(&g, 0.05, 0.01).is_err());
        assert!(bode(&g, 0.0, 10.0, 10).is_err());
        assert!(bode(&g, 10.0, 1.0, 10).is_err());
    }

    #[test]
    fn bode_corner() {
        let tr = bode(&tf(&[1.0], &[1.0, 1.0]), 0.1, 10.0, 10).unwrap();
        assert_eq!(tr.omega.len(), 21);
        let i = tr.omega.iter().position(|&w| (w - 1.0).abs() < 1e-12).unwrap();
        assert!((tr.mag_db[i] - (-3.0103)).abs() < 0.01);
        assert!((tr.phase_deg[i] - (-45.0)).abs() < 0.01);
    }

    #[test]
    fn bode_of_gain_is_flat() {
        let tr = bode(&TransferFunction::gain(2.0), 1.0, 100.0, 5).unwrap();
        assert!(tr.mag_db.iter().all(|m| (m - 20.0 * 2f64.log10()).abs() < 1e-12));
        assert!(tr.phase_deg.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn bode_unwraps_phase() {
        // 1/(1+s)^4 sweeps through −360°
        let g = tf(&[1.0], &[1.0, 4.0, 6.0, 4.0, 1.0]);
        let tr = bode(&g, 0.01, 1000.0, 20).unwrap();
        assert!(tr.phase_deg.windows(2).all(|w| (w[1] - w[0]).abs() < 180.0));
        assert!(*tr.phase_deg.last().unwrap() < -300.0);
    }

    #[test]
    fn bode_flags_imaginary_axis_poles() {
        let g = tf(&[1.0], &[1.0, 0.0, 1.0]);
        let tr = bode(&g, 0.1, 10.0, 10).unwrap();
        assert_eq!(tr.singular.len(), 1);
        assert!(tr.mag_db[tr.singular[0]].is_infinite());
    }

    #[test]
    fn ise_examples() {
        let a = step_response(&tf(&[1.0], &[1.0, 1.0]), 40.0, 1e-3).unwrap();
        let b = step_response(&tf(&[1.0], &[1.0, 2.0]), 40.0, 1e-3).unwrap();
        assert_eq!(ise(&a, &a).unwrap(), 0.0);
        // ∫ (e^{−t/2} − e^{−t})² dt = 1 − 4/3 + 1/2
        assert!((ise(&a, &b).unwrap() - 1.0 / 6.0).abs() < 1e-3);
        assert_eq!(ise(&a, &b).unwrap(), ise(&b, &a).unwrap());
        let c = step_response(&tf(&[1.0], &[1.0, 1.0]), 20.0, 1e-3).unwrap();
        assert!(matches!(ise(&a, &c), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn metrics_first_order() {
        let tr = step_response(&tf(&[1.0], &[1.0, 1.0]), 10.0, 1e-3).unwrap();
        let m = response_metrics(&tr).unwrap();
        assert_eq!(m.overshoot_pct, 0.0);
        // ln 9 for 10–90%
        assert!((m.rise_10_90_s - 9f64.ln()).abs() < 1e-3);
    }

    #[test]
    fn metrics_second_order_overshoot() {
        let zeta = 0.707;
        let oracle = 100.0 * (-std::f64::consts::PI * zeta / (1.0 - zeta * zeta).sqrt()).exp();
        let tr = step_response(&second_order(zeta, 10.0), 3.0, 1e-3).unwrap();
        let m = response_metrics(&tr).unwrap();
        assert!((m.overshoot_pct - oracle).abs() < 0.5, "{}", m.overshoot_pct);
        assert!((oracle - 4.3).abs() < 0.5);
    }

    #[test]
    fn metrics_reject_diverging_traces() {
        let tr = StepTrace {
            t: (0..100).map(|i| i as f64 * 0.1).collect(),
            y: (0..100).map(|i| (i as f64 * 0.1).exp()).collect(),
            dt: 0.1,
            input_amplitude: 1.0,
            stiffness_warning: false,
        };
        assert!(matches!(response_metrics(&tr), Err(Error::NotSettled(_))));
    }
}
