//! Lock-in demodulation, coherent-control error signals and the PI servo.
//!
//! The RF beats (tens of MHz in the experiment) are never sampled directly:
//! every error signal has a closed analytic form evaluated once per servo
//! timestep. The sampled mixer/low-pass path in [`demodulate`] exists for
//! scaled-down time-domain oracles and for the dither lock, where the rates
//! are low enough to simulate directly.
//!
//! Sign conventions, fixed here once: error signals are defined as twice the
//! lock-in output so a matched tone of amplitude A reads A, the pump-phase
//! error uses demodulation phase +pi/2 at 2*Omega, the LO error -pi/2 at
//! Omega, and every slope is positive at the intended lock point.

use crate::error::{Error, Result};
use crate::opo::{ControlField, SidebandPair};
use crate::sideband::CarrierConfig;

/// Lock-in settings: mixer frequency/phase and post-mixer low-pass corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemodConfig {
    /// Demodulation frequency in Hz.
    pub freq: f64,
    /// Demodulation phase in rad.
    pub phase: f64,
    /// Single-pole low-pass corner after the mixer, in Hz.
    pub lp_corner: f64,
}

impl DemodConfig {
    pub fn new(freq: f64, phase: f64, lp_corner: f64) -> Result<Self> {
        if freq <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "demodulation frequency must be positive, got {freq}"
            )));
        }
        if lp_corner <= 0.0 || lp_corner >= freq / 2.0 {
            return Err(Error::InvalidParameter(format!(
                "low-pass corner must lie in (0, freq/2), got {lp_corner}"
            )));
        }
        Ok(Self {
            freq,
            phase,
            lp_corner,
        })
    }
}

/// Mix a sampled photocurrent with `cos(2 pi f t + phase)` and low-pass the
/// product. A tone at the demodulation frequency with matched phase and
/// amplitude A settles to A/2 at the output.
pub fn demodulate(signal: &[f64], sample_rate: f64, cfg: &DemodConfig) -> Result<Vec<f64>> {
    if sample_rate <= 2.0 * cfg.freq {
        return Err(Error::Undersampled {
            sample_rate,
            freq: cfg.freq,
        });
    }
    let dt = 1.0 / sample_rate;
    let alpha = 1.0 - (-std::f64::consts::TAU * cfg.lp_corner * dt).exp();
    let mut out = Vec::with_capacity(signal.len());
    let mut acc = 0.0;
    for (n, &x) in signal.iter().enumerate() {
        let lo = (std::f64::consts::TAU * cfg.freq * n as f64 * dt + cfg.phase).cos();
        acc += alpha * (x * lo - acc);
        out.push(acc);
    }
    Ok(out)
}

/// Pump-phase error from direct detection of the amplified control field,
/// demodulated at twice the detuning:
///
/// ```text
/// err = (g - 1/g) / 2 * |alpha|^2 * sin(2 phi)
/// ```
///
/// Zero crossings sit at multiples of pi/2; the slope at phi = 0 is positive,
/// making it the stable lock point under negative feedback.
///
/// # Panics
/// Panics if `g < 1`.
pub fn pump_phase_error(field: &ControlField, g: f64, phi: f64) -> f64 {
    assert!(g >= 1.0, "parametric gain must be >= 1, got {g}");
    let amp = field.alpha.norm_sqr();
    let phi_tot = field.quadrature_angle() + phi;
    0.5 * (g - 1.0 / g) * amp * (2.0 * phi_tot).sin()
}

/// LO-phase error from the homodyne difference current of the amplified
/// control sidebands beating with the local oscillator, demodulated at the
/// detuning frequency:
///
/// ```text
/// err = 2 sqrt(P_lo) * (|u| sin(theta - arg u) - |l| sin(theta - arg l))
/// ```
///
/// With the pump loop locked (field phase pinned at zero) this reduces to
/// `2 sqrt(P_lo) |alpha| / sqrt(g) * sin(theta)`: zero with the LO aligned to
/// the *amplified* quadrature and positive slope there. The squeezed
/// quadrature sits a quarter turn away; scenario code applies that offset
/// when parking the LO on the squeezed quadrature.
pub fn lo_phase_error(pair: &SidebandPair, lo: &CarrierConfig, theta_lo: f64) -> f64 {
    let scale = 2.0 * lo.lo_power.sqrt();
    let u = pair.upper;
    let l = pair.lower;
    scale * (u.norm() * (theta_lo - u.arg()).sin() - l.norm() * (theta_lo - l.arg()).sin())
}

/// Dispersive cavity-length error: imaginary part of a Lorentzian reflection
/// response, `d / (1 + d^2)` with the detuning `d` in cavity linewidths.
/// Odd, zero on resonance, unit slope at the origin.
pub fn opo_length_error(detuning: f64) -> f64 {
    detuning / (1.0 + detuning * detuning)
}

/// Proportional-integral servo settings driving a range- and slew-limited
/// phase actuator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServoConfig {
    pub kp: f64,
    /// Integral gain in 1/s.
    pub ki: f64,
    /// Total actuator throw; commands are clamped to +-range/2.
    pub actuator_range: f64,
    /// Maximum actuator slew in rad/s.
    pub actuator_rate_limit: f64,
    /// Target error value.
    pub setpoint: f64,
}

impl ServoConfig {
    pub fn new(
        kp: f64,
        ki: f64,
        actuator_range: f64,
        actuator_rate_limit: f64,
        setpoint: f64,
    ) -> Result<Self> {
        if actuator_range <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "actuator range must be positive, got {actuator_range}"
            )));
        }
        if !(kp.is_finite() && ki.is_finite() && setpoint.is_finite()) {
            return Err(Error::InvalidParameter("servo gains must be finite".into()));
        }
        if actuator_rate_limit <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "actuator rate limit must be positive, got {actuator_rate_limit}"
            )));
        }
        Ok(Self {
            kp,
            ki,
            actuator_range,
            actuator_rate_limit,
            setpoint,
        })
    }
}

/// PI servo state: integrator plus the last issued command (for slew limiting).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PiServo {
    integral: f64,
    command: f64,
}

impl PiServo {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn command(&self) -> f64 {
        self.command
    }

    /// Advance one timestep on an error sample; returns the actuator command.
    ///
    /// PI law with integrator anti-windup at the actuator range and a slew
    /// limit on the command.
    pub fn step(&mut self, error: f64, cfg: &ServoConfig, dt: f64) -> f64 {
        assert!(dt > 0.0, "timestep must be positive");
        let half_range = 0.5 * cfg.actuator_range;
        let e = error - cfg.setpoint;
        self.integral = (self.integral + cfg.ki * e * dt).clamp(-half_range, half_range);
        let raw = (cfg.kp * e + self.integral).clamp(-half_range, half_range);
        let max_step = cfg.actuator_rate_limit * dt;
        self.command += (raw - self.command).clamp(-max_step, max_step);
        self.command
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }
}
