//! Below-threshold optical parametric oscillator.
//!
//! Two faces of the same device: the squeezing spectrum it imprints on the
//! vacuum mode, and the classical parametric amplification it applies to a
//! frequency-shifted coherent control field. Both are governed by the
//! normalized pump amplitude `x` (so the classical gain and the quantum noise
//! spectra stay mutually consistent) and the cavity half-linewidth `gamma`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sideband::QuadratureState;

/// OPO operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpoParams {
    /// Normalized pump amplitude sqrt(P_pump / P_threshold), in [0, 1).
    pub x: f64,
    /// Cavity half-linewidth (HWHM) in Hz.
    pub gamma: f64,
    /// Escape efficiency: fraction of the intracavity field leaving through
    /// the output coupler rather than internal loss.
    pub eta_esc: f64,
    /// Free spectral range in Hz (informational).
    pub fsr: f64,
}

impl OpoParams {
    pub fn new(x: f64, gamma: f64, eta_esc: f64, fsr: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&x) {
            return Err(Error::AboveThreshold(x));
        }
        if gamma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "cavity half-linewidth must be positive, got {gamma}"
            )));
        }
        if !(eta_esc > 0.0 && eta_esc <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "escape efficiency must lie in (0, 1], got {eta_esc}"
            )));
        }
        Ok(Self {
            x,
            gamma,
            eta_esc,
            fsr,
        })
    }

    /// Squeezed and anti-squeezed output variances at sideband frequency `omega`:
    ///
    /// ```text
    /// V_sq(w)   = 1 - eta_esc * 4x / ((1+x)^2 + (w/gamma)^2)
    /// V_anti(w) = 1 + eta_esc * 4x / ((1-x)^2 + (w/gamma)^2)
    /// ```
    ///
    /// The squeezed quadrature lands in `v11`. For `eta_esc = 1` the product
    /// `V_sq * V_anti` equals 1 at every frequency.
    pub fn squeezing_spectrum(&self, omega: f64) -> Result<QuadratureState> {
        if omega < 0.0 {
            return Err(Error::NegativeFrequency(omega));
        }
        if self.x >= 1.0 {
            return Err(Error::AboveThreshold(self.x));
        }
        let w2 = (omega / self.gamma).powi(2);
        let pump = 4.0 * self.x;
        let v11 = 1.0 - self.eta_esc * pump / ((1.0 + self.x).powi(2) + w2);
        let v22 = 1.0 + self.eta_esc * pump / ((1.0 - self.x).powi(2) + w2);
        QuadratureState::new(v11, v22, 0.0, omega)
    }

    /// Zero-frequency classical power amplification of the pump-aligned
    /// quadrature: `g = ((1+x)/(1-x))^2`.
    pub fn parametric_gain(&self) -> Result<f64> {
        if self.x >= 1.0 {
            return Err(Error::AboveThreshold(self.x));
        }
        Ok(((1.0 + self.x) / (1.0 - self.x)).powi(2))
    }
}

/// Pump amplitude delivering a target measured squeezed variance at
/// frequencies well inside the cavity linewidth.
///
/// `eta_total` is the product of escape efficiency and all detection losses;
/// the calibration solves `eta_total * 4x / (1+x)^2 = 1 - target_v` in closed
/// form. Errors when the target is unreachable with the given efficiency.
pub fn pump_for_measured_squeezing(target_v: f64, eta_total: f64) -> Result<f64> {
    if !(0.0 < target_v && target_v < 1.0) {
        return Err(Error::Calibration(format!(
            "target squeezed variance must lie in (0, 1), got {target_v}"
        )));
    }
    if !(0.0 < eta_total && eta_total <= 1.0) {
        return Err(Error::Calibration(format!(
            "total efficiency must lie in (0, 1], got {eta_total}"
        )));
    }
    let s = (1.0 - target_v) / eta_total;
    if s >= 1.0 {
        return Err(Error::Calibration(format!(
            "variance {target_v} unreachable at total efficiency {eta_total}"
        )));
    }
    if s < 1e-12 {
        return Ok(s / 4.0);
    }
    Ok(((2.0 - s) - 2.0 * (1.0 - s).sqrt()) / s)
}

/// Coherent single-sideband control field, detuned from the carrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlField {
    /// Complex sideband amplitude (normalized units, sqrt of photon flux).
    pub alpha: Complex64,
    /// Detuning Ω from the carrier in Hz; must be nonzero.
    pub detuning: f64,
    /// Phase of the input quadrature relative to the pump, in rad.
    pub phase_rel_pump: f64,
}

impl ControlField {
    pub fn new(alpha: Complex64, detuning: f64, phase_rel_pump: f64) -> Result<Self> {
        if detuning == 0.0 {
            return Err(Error::InvalidParameter(
                "control-field detuning must be nonzero".into(),
            ));
        }
        Ok(Self {
            alpha,
            detuning,
            phase_rel_pump,
        })
    }

    /// Total quadrature angle of the input relative to the pump, folding the
    /// phase of the complex amplitude into the geometric phase.
    pub fn quadrature_angle(&self) -> f64 {
        self.phase_rel_pump + self.alpha.arg()
    }
}

/// Upper/lower sideband amplitudes of the parametrically amplified control
/// field, at detuning +Ω and -Ω from the carrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidebandPair {
    pub upper: Complex64,
    pub lower: Complex64,
    /// Sideband offset Ω in Hz.
    pub detuning: f64,
}

impl SidebandPair {
    /// Carrier-frame envelope `u e^{i w t} + l e^{-i w t}` at time `t`.
    pub fn envelope_at(&self, t: f64) -> Complex64 {
        let phase = std::f64::consts::TAU * self.detuning * t;
        let rot = Complex64::from_polar(1.0, phase);
        self.upper * rot + self.lower * rot.conj()
    }
}

/// Parametric amplification of a single-sideband field.
///
/// With the pump defining the amplified quadrature (the real axis), an input
/// envelope `a e^{i(wt + phi)}` leaves the OPO as
/// `a (sqrt(g) cos(wt + phi) + i sin(wt + phi) / sqrt(g))`: the cosine
/// component is amplified, the sine component deamplified, and a partner
/// sideband at -Ω appears. `phi` adds to the field's own pump-relative angle.
/// The sideband decomposition is
///
/// ```text
/// upper = a e^{+i phi_tot} (sqrt(g) + 1/sqrt(g)) / 2
/// lower = a e^{-i phi_tot} (sqrt(g) - 1/sqrt(g)) / 2
/// ```
///
/// so the amplified and deamplified quadrature gains multiply to exactly 1.
pub fn amplify_control_field(field: &ControlField, g: f64, phi: f64) -> Result<SidebandPair> {
    if g < 1.0 {
        return Err(Error::GainBelowUnity(g));
    }
    let a = field.alpha.norm();
    let phi_tot = field.quadrature_angle() + phi;
    let sqrt_g = g.sqrt();
    let sum = 0.5 * (sqrt_g + 1.0 / sqrt_g);
    let diff = 0.5 * (sqrt_g - 1.0 / sqrt_g);
    Ok(SidebandPair {
        upper: Complex64::from_polar(a * sum, phi_tot),
        lower: Complex64::from_polar(a * diff, -phi_tot),
        detuning: field.detuning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, TAU};

    fn params(x: f64, eta: f64) -> OpoParams {
        OpoParams::new(x, 13.5e6, eta, 3.8e9).unwrap()
    }

    fn field(alpha: f64, phase: f64) -> ControlField {
        ControlField::new(Complex64::new(alpha, 0.0), 40e6, phase).unwrap()
    }

    #[test]
    fn rejects_above_threshold_and_bad_params() {
        assert!(matches!(
            OpoParams::new(1.0, 13.5e6, 0.9, 3.8e9),
            Err(Error::AboveThreshold(_))
        ));
        assert!(OpoParams::new(0.5, -1.0, 0.9, 3.8e9).is_err());
        assert!(OpoParams::new(0.5, 13.5e6, 0.0, 3.8e9).is_err());
        assert!(params(0.3, 0.9).squeezing_spectrum(-5.0).is_err());
    }

    #[test]
    fn no_pump_gives_vacuum_everywhere() {
        let p = params(0.0, 0.9);
        for omega in [0.0, 10.0, 1e4, 1e8] {
            let s = p.squeezing_spectrum(omega).unwrap();
            assert_eq!((s.v11, s.v22, s.v12), (1.0, 1.0, 0.0));
        }
        assert_eq!(p.parametric_gain().unwrap(), 1.0);
    }

    #[test]
    fn out_of_band_limit_returns_to_vacuum() {
        let p = params(0.6, 1.0);
        let s = p.squeezing_spectrum(1e4 * p.gamma).unwrap();
        assert!((s.v11 - 1.0).abs() < 1e-7);
        assert!((s.v22 - 1.0).abs() < 1e-7);
    }

    #[test]
    fn gain_of_one_third_pump_is_four() {
        assert!((params(1.0 / 3.0, 0.9).parametric_gain().unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn calibration_reaches_minus_four_db() {
        // Solve eta * 4x/(1+x)^2 = 0.602 for a fixed total efficiency and
        // cross-check the closed form against a bisection root-find.
        let target = 10f64.powf(-0.4);
        let eta_total = 0.76;
        let x = pump_for_measured_squeezing(target, eta_total).unwrap();
        assert!((0.0..1.0).contains(&x));

        let v_at = |x: f64| 1.0 - eta_total * 4.0 * x / (1.0 + x).powi(2);
        let (mut lo, mut hi) = (0.0, 0.999_999);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if v_at(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((x - lo).abs() < 1e-9, "closed form {x} vs bisection {lo}");

        // Folding the whole budget into eta_esc, the audio-band squeezed
        // variance must land on the target.
        let p = OpoParams::new(x, 13.5e6, eta_total, 3.8e9).unwrap();
        let s = p.squeezing_spectrum(100.0).unwrap();
        assert!((s.v11 - target).abs() < 1e-9);

        assert!(pump_for_measured_squeezing(0.1, 0.5).is_err());
        assert!(pump_for_measured_squeezing(1.5, 0.9).is_err());
    }

    #[test]
    fn amplify_identity_at_unit_gain() {
        let f = field(0.7, 0.3);
        let pair = amplify_control_field(&f, 1.0, 0.0).unwrap();
        assert!((pair.upper - Complex64::from_polar(0.7, 0.3)).norm() < 1e-15);
        assert!(pair.lower.norm() < 1e-15);
        assert!(amplify_control_field(&f, 0.5, 0.0).is_err());
    }

    #[test]
    fn amplify_paper_point() {
        // g = 4, phi = 0, unit amplitude: envelope 2 cos + (i/2) sin,
        // sidebands (5/4, 3/4).
        let pair = amplify_control_field(&field(1.0, 0.0), 4.0, 0.0).unwrap();
        assert!((pair.upper.re - 1.25).abs() < 1e-15 && pair.upper.im.abs() < 1e-15);
        assert!((pair.lower.re - 0.75).abs() < 1e-15 && pair.lower.im.abs() < 1e-15);

        let env = pair.envelope_at(0.0);
        assert!((env.re - 2.0).abs() < 1e-12);
        let quarter = 0.25 / pair.detuning;
        let env_q = pair.envelope_at(quarter);
        assert!(env_q.re.abs() < 1e-9 && (env_q.im - 0.5).abs() < 1e-9);
    }

    #[test]
    fn amplify_rotated_matches_fourier_oracle() {
        // Numeric Fourier decomposition of the raw amplified envelope
        // a (sqrt(g) cos(wt+phi) + i sin(wt+phi)/sqrt(g)) over one period.
        let (g, phi, alpha) = (4.0, FRAC_PI_4, 1.0);
        let f = field(alpha, phi);
        let pair = amplify_control_field(&f, g, 0.0).unwrap();

        let n = 4096;
        let period = 1.0 / f.detuning;
        let (mut c_up, mut c_lo) = (Complex64::default(), Complex64::default());
        for k in 0..n {
            let t = period * k as f64 / n as f64;
            let arg = TAU * f.detuning * t + phi;
            let env = Complex64::new(g.sqrt() * arg.cos(), arg.sin() / g.sqrt()) * alpha;
            let basis = Complex64::from_polar(1.0, -TAU * f.detuning * t);
            c_up += env * basis;
            c_lo += env * basis.conj();
        }
        c_up /= n as f64;
        c_lo /= n as f64;

        assert!((c_up - pair.upper).norm() < 1e-12, "{c_up} vs {}", pair.upper);
        assert!((c_lo - pair.lower).norm() < 1e-12, "{c_lo} vs {}", pair.lower);
        // Frozen values for this draw: 1.25 e^{i pi/4}, 0.75 e^{-i pi/4}.
        assert!((pair.upper.re - 0.883_883_476).abs() < 1e-9);
        assert!((pair.lower.im + 0.530_330_086).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn spectrum_physical_and_even(
            x in 0.0f64..0.99,
            eta in 0.01f64..=1.0,
            w in 0.0f64..5e8,
        ) {
            let p = params(x, eta);
            let s = p.squeezing_spectrum(w).unwrap();
            let det = s.uncertainty_product();
            prop_assert!(det >= 1.0 - 1e-9);
            if eta == 1.0 {
                prop_assert!((det - 1.0).abs() < 1e-9);
            }
            // Monotone toward vacuum with increasing |Ω|.
            let further = p.squeezing_spectrum(2.0 * w + p.gamma).unwrap();
            prop_assert!(further.v11 >= s.v11 - 1e-12);
            prop_assert!(further.v22 <= s.v22 + 1e-12);
        }

        #[test]
        fn gain_monotone_in_pump(a in 0.0f64..0.98, d in 1e-6f64..0.01) {
            let low = params(a, 0.9).parametric_gain().unwrap();
            let high = params((a + d).min(0.9899), 0.9).parametric_gain().unwrap();
            prop_assert!(high >= low);
        }

        #[test]
        fn gain_spectrum_cross_check(x in 0.0f64..0.95) {
            // Lossless anti-squeezed variance at zero frequency equals the
            // classical parametric gain.
            let p = params(x, 1.0);
            let s = p.squeezing_spectrum(0.0).unwrap();
            let g = p.parametric_gain().unwrap();
            prop_assert!((s.v22 - g).abs() < 1e-9 * g);
            prop_assert!((s.v11 - 1.0 / g).abs() < 1e-9);
        }

        #[test]
        fn amplification_is_symplectic(g in 1.0f64..100.0, phi in -7.0f64..7.0) {
            let pair = amplify_control_field(&field(1.3, phi), g, 0.0).unwrap();
            let amplified = pair.upper.norm() + pair.lower.norm();
            let deamplified = pair.upper.norm() - pair.lower.norm();
            prop_assert!((amplified * deamplified - 1.3f64.powi(2)).abs() < 1e-9);
        }
    }
}
