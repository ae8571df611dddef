//! Balanced homodyne detection at baseband.
//!
//! The detector is modeled as the subtracted-photocurrent quadrature
//! measurement: quantum noise power scales linearly with local-oscillator
//! power (the shot-noise signature), injected classical modulation scales
//! quadratically, electronic dark noise does not scale at all. A first-order
//! high-pass magnitude response with corner `hf_corner` shapes everything
//! identically, so spectra plotted relative to shot noise are unaffected by
//! it. Absolute noise powers are expressed in shot units: vacuum input at the
//! reference LO power reads 1.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::sideband::QuadratureState;
use crate::spectra::{
    estimate_psd, gaussian_half_spectrum, series_from_half_spectrum, SpectrumWindow,
};

/// Nominal local-oscillator power that defines the shot-unit scale, in W.
pub const REFERENCE_LO_POWER: f64 = 88e-6;

/// Homodyne detector parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomodyneConfig {
    /// Local-oscillator power in W.
    pub lo_power: f64,
    /// Fringe visibility between signal and LO, in [0, 1].
    pub visibility: f64,
    /// Photodiode quantum efficiency, in (0, 1].
    pub qe: f64,
    /// Electronic noise level relative to shot noise at the nominal LO power,
    /// in dB (at most -7).
    pub dark_noise_rel_shot_db: f64,
    /// Low-frequency corner of the detector transfer function, in Hz.
    pub hf_corner: f64,
}

impl HomodyneConfig {
    pub fn new(
        lo_power: f64,
        visibility: f64,
        qe: f64,
        dark_noise_rel_shot_db: f64,
        hf_corner: f64,
    ) -> Result<Self> {
        let cfg = Self {
            lo_power,
            visibility,
            qe,
            dark_noise_rel_shot_db,
            hf_corner,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo_power <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "lo_power must be positive, got {}",
                self.lo_power
            )));
        }
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::InvalidParameter(format!(
                "visibility must lie in [0, 1], got {}",
                self.visibility
            )));
        }
        if !(self.qe > 0.0 && self.qe <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "quantum efficiency must lie in (0, 1], got {}",
                self.qe
            )));
        }
        if self.dark_noise_rel_shot_db > -7.0 {
            return Err(Error::InvalidParameter(format!(
                "dark noise must sit at least 7 dB below shot, got {} dB",
                self.dark_noise_rel_shot_db
            )));
        }
        if self.hf_corner <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "hf_corner must be positive, got {}",
                self.hf_corner
            )));
        }
        Ok(())
    }

    /// Dark-noise power in shot units.
    pub fn dark_power(&self) -> f64 {
        10f64.powf(self.dark_noise_rel_shot_db / 10.0)
    }

    /// LO power relative to the shot-unit reference.
    pub fn lo_ratio(&self) -> f64 {
        self.lo_power / REFERENCE_LO_POWER
    }
}

/// Total detection efficiency: quantum efficiency times squared fringe
/// visibility times any extra power transmission.
pub fn effective_efficiency(cfg: &HomodyneConfig, extra_transmission: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&extra_transmission) {
        return Err(Error::TransmissionOutOfRange(extra_transmission));
    }
    cfg.validate()?;
    Ok(cfg.qe * cfg.visibility * cfg.visibility * extra_transmission)
}

/// First-order high-pass magnitude response of the detector chain:
/// unity far above the corner, 1/sqrt(2) at the corner, zero at DC.
pub fn detector_transfer(omega: f64, hf_corner: f64) -> f64 {
    debug_assert!(omega >= 0.0 && hf_corner > 0.0);
    omega / (omega * omega + hf_corner * hf_corner).sqrt()
}

/// Linear power-domain subtraction of a dark-noise measurement.
pub fn subtract_dark_noise(measured: f64, dark: f64) -> Result<f64> {
    if measured <= dark {
        return Err(Error::DarkSubtraction { measured, dark });
    }
    Ok(measured - dark)
}

/// Per-bin amplitude table `sqrt(level * |H(f)|^2 * 2/fs)` for synthesis of a
/// detector-shaped noise source of flat intrinsic power `level` (shot units).
pub fn shaped_amplitude_table(level: f64, hf_corner: f64, sample_rate: f64, n: usize) -> Vec<f64> {
    let df = sample_rate / n as f64;
    let base = (level.max(0.0) * 2.0 / sample_rate).sqrt();
    (0..=n / 2)
        .map(|k| base * detector_transfer(k as f64 * df, hf_corner))
        .collect()
}

/// Windowed homodyne variance estimate in shot units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    /// Band-averaged reading before dark subtraction.
    pub raw: f64,
    /// Co-measured dark level (LO blocked).
    pub dark: f64,
    /// Dark-subtracted reading.
    pub corrected: f64,
    /// One-sigma statistical error of the corrected reading.
    pub sigma: f64,
}

/// Simulate a homodyne variance measurement of `state` at LO angle
/// `theta_lo`.
///
/// Applies the detection efficiency, rotates to the measured quadrature,
/// synthesizes detector-shaped Gaussian noise plus electronic dark noise over
/// the window's averaging plan, estimates the averaged periodogram and
/// returns band readings before and after subtraction of a separately
/// simulated dark measurement. Deterministic per seed.
pub fn measure_variance(
    state: &QuadratureState,
    theta_lo: f64,
    cfg: &HomodyneConfig,
    window: &SpectrumWindow,
    seed: u64,
) -> Result<VarianceEstimate> {
    let eta = effective_efficiency(cfg, 1.0)?;
    let variance = state.apply_loss(eta)?.rotate(theta_lo).v11;
    let fs = window.sample_rate();
    let n = window.segment_len(fs)?;

    let quad_amp = shaped_amplitude_table(cfg.lo_ratio() * variance, cfg.hf_corner, fs, n);
    let dark_amp = shaped_amplitude_table(cfg.dark_power(), cfg.hf_corner, fs, n);

    let mut bright = Vec::with_capacity(n * window.averages);
    let mut dark_run = Vec::with_capacity(n * window.averages);
    for seg in 0..window.averages {
        let mut rng_q = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, seg as u64));
        let mut rng_d = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1, seg as u64));
        let mut rng_d2 = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2, seg as u64));
        let zq = gaussian_half_spectrum(&mut rng_q, n);
        let zd = gaussian_half_spectrum(&mut rng_d, n);
        let zd2 = gaussian_half_spectrum(&mut rng_d2, n);
        let q = series_from_half_spectrum(&zq, &quad_amp, fs);
        let d = series_from_half_spectrum(&zd, &dark_amp, fs);
        bright.extend(q.iter().zip(&d).map(|(a, b)| a + b));
        dark_run.extend(series_from_half_spectrum(&zd2, &dark_amp, fs));
    }

    let est = estimate_psd(&bright, fs, window)?;
    let est_dark = estimate_psd(&dark_run, fs, window)?;

    // Normalize each bin by the detector-shaped shot density so readings come
    // out in flat shot units.
    let reference = shaped_amplitude_table(1.0, cfg.hf_corner, fs, n);
    let bins = window.bin_range();
    let mut raw = 0.0;
    let mut dark = 0.0;
    let mut count = 0usize;
    for (i, k) in bins.enumerate() {
        let shot = reference[k] * reference[k];
        if shot <= 0.0 {
            continue;
        }
        raw += est.density[i] / shot;
        dark += est_dark.density[i] / shot;
        count += 1;
    }
    let raw = raw / count as f64;
    let dark = dark / count as f64;
    let corrected = subtract_dark_noise(raw, dark)?;
    let samples = (window.averages * count) as f64;
    let sigma = ((raw * raw + dark * dark) / samples).sqrt();
    Ok(VarianceEstimate {
        raw,
        dark,
        corrected,
        sigma,
    })
}

/// Optional additive mains pickup: tones at harmonics of the line frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MainsInjector {
    pub enabled: bool,
    /// Line frequency in Hz.
    pub line_freq: f64,
    /// Power of each injected tone in shot units (integrated tone power).
    pub tone_power_shot: f64,
}

impl MainsInjector {
    pub fn off() -> Self {
        Self {
            enabled: false,
            line_freq: 50.0,
            tone_power_shot: 0.0,
        }
    }

    /// Inject 1st and 3rd harmonic tones into a sampled segment.
    pub fn apply(&self, series: &mut [f64], sample_rate: f64) {
        if !self.enabled || self.tone_power_shot <= 0.0 {
            return;
        }
        // Tone power A^2/2 spread over the series; amplitude in shot-unit
        // sampled space.
        let amp = (2.0 * self.tone_power_shot * 2.0 / sample_rate).sqrt();
        for harmonic in [1.0, 3.0] {
            crate::spectra::add_tone(series, sample_rate, harmonic * self.line_freq, amp, 0.0);
        }
    }
}

/// Convenience synthesis of one detector-shaped Gaussian segment from an
/// explicit half-spectrum, used by scenario pipelines that share draws
/// between runs.
pub fn shaped_segment(z: &[Complex64], amplitude: &[f64], sample_rate: f64) -> Vec<f64> {
    series_from_half_spectrum(z, amplitude, sample_rate)
}
