//! Converter-fed DC motor drive: nameplate data to current-loop transfer
//! functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::tf::TransferFunction;

/// Average DC output of a three-phase fully controlled bridge per volt of
/// line voltage.
pub const BRIDGE_VOLTAGE_RATIO: f64 = 1.35;
pub const DEFAULT_CONVERTER_DELAY_S: f64 = 0.00138;
pub const DEFAULT_ZETA: f64 = 0.707;

fn default_tr() -> f64 {
    DEFAULT_CONVERTER_DELAY_S
}

fn default_zeta() -> f64 {
    DEFAULT_ZETA
}

/// Nameplate and design inputs, SI units throughout.
///
/// Rated speed, the tachogenerator constants and the supply frequency are
/// carried for completeness but do not enter the current-loop design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotorDriveParams {
    pub rated_voltage_v: f64,
    pub rated_current_a: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rated_speed_rpm: Option<f64>,
    pub ra_ohm: f64,
    pub la_h: f64,
    pub j_kgm2: f64,
    pub bt_nm_per_rad_s: f64,
    pub kb_v_per_rad_s: f64,
    pub supply_line_voltage_v: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supply_frequency_hz: Option<f64>,
    pub vcm_v: f64,
    pub imax_a: f64,
    #[serde(default = "default_tr")]
    pub tr_s: f64,
    pub tc_s: f64,
    #[serde(default = "default_zeta")]
    pub zeta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tacho_gain_v_per_rad_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tacho_time_constant_s: Option<f64>,
}

impl MotorDriveParams {
    /// 220 V, 8.3 A, 1470 rpm separately excited motor on a 230 V line.
    pub fn reference_drive() -> Self {
        Self {
            rated_voltage_v: 220.0,
            rated_current_a: 8.3,
            rated_speed_rpm: Some(1470.0),
            ra_ohm: 4.0,
            la_h: 0.072,
            j_kgm2: 0.0607,
            bt_nm_per_rad_s: 0.0869,
            kb_v_per_rad_s: 1.26,
            supply_line_voltage_v: 230.0,
            supply_frequency_hz: Some(50.0),
            vcm_v: 10.0,
            imax_a: 20.0,
            tr_s: DEFAULT_CONVERTER_DELAY_S,
            tc_s: 0.03,
            zeta: DEFAULT_ZETA,
            tacho_gain_v_per_rad_s: Some(0.065),
            tacho_time_constant_s: Some(0.002),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rated_voltage_v", self.rated_voltage_v),
            ("rated_current_a", self.rated_current_a),
            ("ra_ohm", self.ra_ohm),
            ("la_h", self.la_h),
            ("j_kgm2", self.j_kgm2),
            ("bt_nm_per_rad_s", self.bt_nm_per_rad_s),
            ("kb_v_per_rad_s", self.kb_v_per_rad_s),
            ("supply_line_voltage_v", self.supply_line_voltage_v),
            ("vcm_v", self.vcm_v),
            ("imax_a", self.imax_a),
            ("tr_s", self.tr_s),
            ("tc_s", self.tc_s),
            ("zeta", self.zeta),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive and finite, got {v}")));
            }
        }
        let optional = [
            ("rated_speed_rpm", self.rated_speed_rpm),
            ("supply_frequency_hz", self.supply_frequency_hz),
            ("tacho_gain_v_per_rad_s", self.tacho_gain_v_per_rad_s),
            ("tacho_time_constant_s", self.tacho_time_constant_s),
        ];
        for (name, v) in optional {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::param(name, format!("must be positive and finite, got {v}")));
                }
            }
        }
        if self.zeta > 1.0 {
            return Err(Error::param("zeta", format!("must lie in (0, 1], got {}", self.zeta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedDriveModel {
    pub params: MotorDriveParams,
    /// Motor gain, A/V.
    pub k1: f64,
    pub t1: f64,
    pub t2: f64,
    /// Mechanical time constant `J/Bt`.
    pub tm: f64,
    pub kr: f64,
    pub tr: f64,
    pub tc: f64,
    /// Current transducer gain, V/A.
    pub hc: f64,
    pub rated_control_voltage: f64,
    /// Armature current per armature voltage.
    pub motor_tf: TransferFunction,
    pub converter_tf: TransferFunction,
    /// Speed per armature current.
    pub speed_tf: TransferFunction,
    /// Full current loop gain with unit controller gain (type 1).
    pub loop_gain: TransferFunction,
    /// Simplified loop shape `(1+sTc)/((1+sT1)(1+sT2)(1+sTr))`, unit gain.
    pub loop_shape: TransferFunction,
}

fn lag(tau: f64) -> Polynomial {
    Polynomial::trimmed(vec![1.0, tau])
}

pub fn derive_model(p: &MotorDriveParams) -> Result<DerivedDriveModel> {
    p.validate()?;
    let (ra, la, j, bt, kb) = (p.ra_ohm, p.la_h, p.j_kgm2, p.bt_nm_per_rad_s, p.kb_v_per_rad_s);

    let k1 = bt / (kb * kb + ra * bt);

    // J·La s² + (Bt·La + J·Ra) s + (Kb² + Ra·Bt)
    let (a, b, c) = (j * la, bt * la + j * ra, kb * kb + ra * bt);
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Err(Error::ComplexMotorPoles { discriminant: disc });
    }
    let sq = disc.sqrt();
    // Roots −(b ± √disc)/(2a); the cancellation-free forms are used for each.
    let fast = (b + sq) / (2.0 * a);
    let slow = 2.0 * c / (b + sq);
    let (t1, t2) = (1.0 / slow, 1.0 / fast);

    let tm = j / bt;
    let kr = BRIDGE_VOLTAGE_RATIO * p.supply_line_voltage_v / p.vcm_v;
    let rated_control_voltage = p.rated_voltage_v / kr;
    let hc = rated_control_voltage / p.imax_a;
    let (tr, tc) = (p.tr_s, p.tc_s);

    if !(tr < t2 && t2 < t1) {
        return Err(Error::TimeConstantOrdering { tr, t2, t1 });
    }

    let motor_den = lag(t1).mul(&lag(t2));
    let motor_tf = TransferFunction::new(lag(tm).scale(k1), motor_den.clone())?;
    let converter_tf = TransferFunction::new(Polynomial::constant(kr), lag(tr))?;
    let speed_tf = TransferFunction::new(Polynomial::constant(kb / bt), lag(tm))?;

    let lg_num = lag(tc).mul(&lag(tm)).scale(k1 * kr * hc / tc);
    let lg_den = Polynomial::trimmed(vec![0.0, 1.0]).mul(&motor_den).mul(&lag(tr));
    let loop_gain = TransferFunction::new(lg_num, lg_den)?;
    let loop_shape = TransferFunction::new(lag(tc), motor_den.mul(&lag(tr)))?;

    Ok(DerivedDriveModel {
        params: p.clone(),
        k1,
        t1,
        t2,
        tm,
        kr,
        tr,
        tc,
        hc,
        rated_control_voltage,
        motor_tf,
        converter_tf,
        speed_tf,
        loop_gain,
        loop_shape,
    })
}

impl DerivedDriveModel {
    /// `K1·Hc·Kr·Tm/Tc`, the factor between controller gain and loop gain.
    fn gain_ratio(&self) -> f64 {
        self.k1 * self.hc * self.kr * self.tm / self.tc
    }

    /// Loop gain `K = K1·Kc·Kr·Hc·Tm/Tc`.
    pub fn k_from_kc(&self, kc: f64) -> f64 {
        kc * self.gain_ratio()
    }

    /// Controller gain `Kc = K·Tc/(K1·Hc·Kr·Tm)`.
    pub fn kc_from_k(&self, k: f64) -> f64 {
        k * self.tc / (self.k1 * self.hc * self.kr * self.tm)
    }

    /// Simplified loop shape scaled by `K`.
    pub fn loop_gain_with_k(&self, k: f64) -> Result<TransferFunction> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::param("K", format!("loop gain must be positive, got {k}")));
        }
        Ok(self.loop_shape.scale(k))
    }

    /// PI controller `Kc(1 + sTc)/(sTc)`.
    pub fn controller(&self, kc: f64) -> TransferFunction {
        TransferFunction::new(
            lag(self.tc).scale(kc),
            Polynomial::trimmed(vec![0.0, self.tc]),
        )
        .expect("proper by construction")
    }

    /// Controller, converter and motor in cascade (current per command volt
    /// before feedback).
    pub fn forward_path(&self, kc: f64) -> TransferFunction {
        self.controller(kc)
            .series(&self.converter_tf)
            .series(&self.motor_tf)
    }

    /// Armature current per command volt with the transducer `Hc` in the
    /// feedback path; DC gain `1/Hc`.
    pub fn closed_current_loop(&self, kc: f64) -> Result<TransferFunction> {
        self.forward_path(kc)
            .close_loop(&TransferFunction::gain(self.hc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> DerivedDriveModel {
        derive_model(&MotorDriveParams::reference_drive()).unwrap()
    }

    #[test]
    fn reference_constants() {
        let m = model();
        assert!((m.k1 - 0.0449).abs() < 0.005 * 0.0449);
        assert!((m.t1 - 0.1077).abs() < 0.005 * 0.1077);
        assert!((m.t2 - 0.0208).abs() < 0.01 * 0.0208);
        assert!((m.tm - 0.7).abs() < 0.005 * 0.7);
        assert_eq!(m.kr, 1.35 * 230.0 / 10.0);
        assert!((m.kr - 31.05).abs() < 1e-12);
        assert!((m.hc - 0.355).abs() < 0.005 * 0.355);
        assert!((m.rated_control_voltage - 7.09).abs() < 0.005 * 7.09);
    }

    #[test]
    fn time_constants_match_quadratic_formula() {
        // −b/2a ± √(b² − 4ac)/2a with the reference constants: −9.2819, −47.705
        let m = model();
        assert!((1.0 / m.t1 - 9.2819).abs() < 0.01 * 9.2819);
        assert!((1.0 / m.t2 - 47.705).abs() < 0.01 * 47.705);
    }

    #[test]
    fn dc_gains() {
        let m = model();
        assert!((m.motor_tf.dc_gain().unwrap() - m.k1).abs() <= 1e-12 * m.k1);
        assert!((m.converter_tf.dc_gain().unwrap() - m.kr).abs() <= 1e-12 * m.kr);
        let kb_bt = m.params.kb_v_per_rad_s / m.params.bt_nm_per_rad_s;
        assert!((m.speed_tf.dc_gain().unwrap() - kb_bt).abs() <= 1e-12 * kb_bt);
        assert!((kb_bt - 14.5).abs() < 0.05);
    }

    #[test]
    fn loop_gain_structure() {
        let m = model();
        assert_eq!(m.loop_gain.den().coeff(0), 0.0);
        assert_eq!(m.loop_gain.num().degree(), 2);
        assert_eq!(m.loop_gain.den().degree(), 4);
        assert_ne!(m.loop_shape.den().coeff(0), 0.0);
        assert_eq!(m.loop_shape.num().degree(), 1);
        assert_eq!(m.loop_shape.den().degree(), 3);
        let (t1, t2, tr) = (m.t1, m.t2, m.tr);
        let expected = [1.0, t1 + t2 + tr, t1 * t2 + t1 * tr + t2 * tr, t1 * t2 * tr];
        for (a, b) in m.loop_shape.den().coeffs().iter().zip(expected) {
            assert!((a - b).abs() <= 1e-12 * b);
        }
    }

    #[test]
    fn gain_conversions() {
        let m = model();
        let k = m.k_from_kc(1.0);
        assert!((m.kc_from_k(k) - 1.0).abs() < 1e-12);
        assert_eq!(m.kc_from_k(2.0 * 357.192), 2.0 * m.kc_from_k(357.192));
        // The published K = 357.192 maps to Kc ≈ 31.06 with these constants,
        // not 35.719.
        let kc = m.kc_from_k(357.192);
        assert!((kc - 31.06).abs() < 0.05, "{kc}");
        assert!(m.loop_gain_with_k(0.0).is_err());
        assert_eq!(m.loop_gain_with_k(2.0).unwrap().num().coeff(0), 2.0);
    }

    #[test]
    fn closed_loop_has_unit_feedback_dc_gain() {
        let m = model();
        let cl = m.closed_current_loop(3.0).unwrap();
        assert!((cl.dc_gain().unwrap() - 1.0 / m.hc).abs() < 1e-12);
        // GH of the closed structure equals the open-loop form with Kc = 3
        let gh = m.forward_path(3.0).series(&TransferFunction::gain(m.hc));
        let s = num_complex::Complex64::new(0.0, 17.0);
        let open = m.loop_gain.eval(s) * 3.0;
        assert!((gh.eval(s) - open).norm() < 1e-10 * open.norm());
    }

    #[test]
    fn k1_vanishes_with_friction() {
        let mut p = MotorDriveParams::reference_drive();
        let mut last = f64::INFINITY;
        for bt in [1e-2, 1e-3, 1e-4, 1e-5] {
            p.bt_nm_per_rad_s = bt;
            let k1 = bt / (p.kb_v_per_rad_s.powi(2) + p.ra_ohm * bt);
            if let Ok(m) = derive_model(&p) {
                assert_eq!(m.k1, k1);
            }
            assert!(k1 < last);
            last = k1;
        }
        assert!(last < 1e-5);
    }

    #[test]
    fn invalid_inputs() {
        let mut p = MotorDriveParams::reference_drive();
        p.ra_ohm = -1.0;
        assert!(matches!(derive_model(&p), Err(Error::InvalidParameter { name, .. }) if name == "ra_ohm"));

        let mut p = MotorDriveParams::reference_drive();
        p.zeta = 1.5;
        assert!(matches!(derive_model(&p), Err(Error::InvalidParameter { name, .. }) if name == "zeta"));

        // Large inductance makes the electrical poles complex.
        let mut p = MotorDriveParams::reference_drive();
        p.la_h = 5.0;
        assert!(matches!(derive_model(&p), Err(Error::ComplexMotorPoles { .. })));

        // A converter slower than the electrical time constant.
        let mut p = MotorDriveParams::reference_drive();
        p.tr_s = 0.05;
        assert!(matches!(derive_model(&p), Err(Error::TimeConstantOrdering { .. })));
    }

    #[test]
    fn params_json_names() {
        let json = serde_json::to_value(MotorDriveParams::reference_drive()).unwrap();
        for key in ["ra_ohm", "la_h", "j_kgm2", "bt_nm_per_rad_s", "kb_v_per_rad_s", "tr_s", "tc_s", "zeta"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }
}
