//! Michelson interferometer on a dark fringe with squeezed-vacuum injection.
//!
//! The arms are non-resonant single-bounce paths, so only the static fringe
//! model enters: carrier leakage at the dark port, a differential phase
//! signal appearing as a phase-quadrature tone, and the squeezed field
//! reflected back to the readout after the injection loss budget (double pass
//! through the Faraday rotator plus the reduced homodyne fringe visibility).
//! A 66 kHz dither lock holds the dark fringe; it runs in a decimated band
//! well above the audio-band analysis span.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::control::{PiServo, ServoConfig};
use crate::derive_seed;
use crate::detection::{shaped_amplitude_table, HomodyneConfig};
use crate::error::{Error, Result};
use crate::opo::OpoParams;
use crate::sideband::{CarrierConfig, QuadratureState};
use crate::spectra::{
    add_tone, estimate_psd, gaussian_half_spectrum, series_from_half_spectrum, to_db_rel,
    SpectrumWindow,
};

/// Michelson interferometer parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MichelsonConfig {
    /// Interferometer input power in W.
    pub input_power: f64,
    /// Fringe visibility at the 50/50 beamsplitter.
    pub mi_visibility: f64,
    /// End-mirror power reflectivity.
    pub end_mirror_r: f64,
    /// Dither frequency for the dark-fringe lock, in Hz.
    pub dither_freq: f64,
    /// Differential signal injection frequency, in Hz.
    pub signal_freq: f64,
    /// Transmission of the double pass through the Faraday rotator.
    pub faraday_double_pass_transmission: f64,
    /// Homodyne fringe visibility in the interferometer readout.
    pub homodyne_visibility: f64,
    /// Differential end-mirror modulation depth, in rad.
    pub signal_mod_depth: f64,
    /// Dither modulation depth, in rad.
    pub dither_depth: f64,
    /// Random-walk strength of the dark-fringe drift, in rad/sqrt(s).
    pub dither_drift_sigma: f64,
    /// Acceptable residual dark-fringe offset RMS, in rad.
    pub dither_residual_bound: f64,
}

impl MichelsonConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64, name: &str| -> Result<()> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must lie in [0, 1], got {v}"
                )))
            }
        };
        unit(self.mi_visibility, "mi_visibility")?;
        unit(self.end_mirror_r, "end_mirror_r")?;
        unit(
            self.faraday_double_pass_transmission,
            "faraday_double_pass_transmission",
        )?;
        unit(self.homodyne_visibility, "homodyne_visibility")?;
        if self.input_power <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "input_power must be positive, got {}",
                self.input_power
            )));
        }
        if self.dither_freq <= 0.0 || self.signal_freq <= 0.0 {
            return Err(Error::InvalidParameter(
                "dither and signal frequencies must be positive".into(),
            ));
        }
        if self.signal_freq >= self.dither_freq {
            return Err(Error::InvalidParameter(
                "signal frequency must sit below the dither band".into(),
            ));
        }
        Ok(())
    }

    /// Power reaching the beamsplitter recombination after one end-mirror
    /// bounce per arm.
    pub fn effective_power(&self) -> f64 {
        self.input_power * self.end_mirror_r
    }

    /// Fraction of the recombined power leaving through the dark port at arm
    /// phase offset `delta`: `vis sin^2(delta) + (1 - vis)/2`.
    pub fn dark_fraction(&self, delta: f64) -> f64 {
        self.mi_visibility * delta.sin().powi(2) + 0.5 * (1.0 - self.mi_visibility)
    }

    /// Bright-port power at arm phase offset `delta`, in W.
    pub fn bright_port_power(&self, delta: f64) -> f64 {
        self.effective_power() * (1.0 - self.dark_fraction(delta))
    }

    /// Extra power transmission of the squeezed field between source
    /// characterization and interferometer readout: Faraday double pass times
    /// the squared visibility ratio.
    pub fn injection_budget(&self, reference_visibility: f64) -> f64 {
        self.faraday_double_pass_transmission
            * (self.homodyne_visibility / reference_visibility).powi(2)
    }
}

/// Dark-port field model at a given operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarkPortReadout {
    /// Carrier power leaking out of the dark port, in W.
    pub carrier_leak_w: f64,
    /// Phase-quadrature displacement amplitude of the differential signal,
    /// sqrt(photon flux) units.
    pub signal_flux_amp: f64,
    /// Quadrature noise state reaching the readout after the loss budget.
    pub readout_state: QuadratureState,
}

/// Dark-port output: carrier leakage from offset and contrast defect, the
/// differential phase signal scaled by input power, and the squeezed input
/// after the injection losses.
pub fn dark_port_output(
    cfg: &MichelsonConfig,
    carrier: &CarrierConfig,
    arm_phase_offset: f64,
    mod_depth: f64,
    squeezed_input: &QuadratureState,
    reference_visibility: f64,
) -> Result<DarkPortReadout> {
    cfg.validate()?;
    let p_eff = cfg.effective_power();
    let flux = cfg.mi_visibility * p_eff / carrier.photon_energy();
    Ok(DarkPortReadout {
        carrier_leak_w: p_eff * cfg.dark_fraction(arm_phase_offset),
        signal_flux_amp: mod_depth * flux.sqrt(),
        readout_state: squeezed_input.apply_loss(cfg.injection_budget(reference_visibility))?,
    })
}

/// Dark-fringe dither error: derivative of the bright-port fringe with the
/// sign fixed so the slope is positive on the dark fringe.
pub fn dither_lock_error(cfg: &MichelsonConfig, arm_phase_offset: f64) -> f64 {
    cfg.mi_visibility * (2.0 * arm_phase_offset).sin()
}

/// Result of a dither-locked run at one squeezing setting.
#[derive(Debug, Clone, PartialEq)]
pub struct MiRun {
    pub frequencies: Vec<f64>,
    /// Readout spectrum relative to shot noise, dB.
    pub db_rel_shot: Vec<f64>,
    /// Mean noise floor excluding the signal peak region, dB relative to shot.
    pub floor_db: f64,
    /// Height of the signal bin, dB relative to shot.
    pub peak_db: f64,
    /// Residual dark-fringe offset RMS over the locked run, rad.
    pub dither_residual_rms: f64,
    /// Mean carrier leakage during the run, W.
    pub carrier_leak_w: f64,
}

/// Everything the Michelson run needs besides the interferometer itself.
pub struct MiEnvironment<'a> {
    pub carrier: &'a CarrierConfig,
    pub opo: &'a OpoParams,
    pub homodyne: &'a HomodyneConfig,
    /// Analysis window around the signal frequency.
    pub window: &'a SpectrumWindow,
}

/// Run the dark-fringe scenario at one squeezing setting.
///
/// The squeezed source is what the reference homodyne characterizes
/// (OPO output through the detection efficiency); the interferometer then
/// degrades it by the injection budget. With squeezing off the readout sees
/// plain vacuum. Identical seeds share all noise draws between settings, so
/// the deterministic signal tone cancels exactly in peak-height comparisons.
pub fn run_mi_scenario(
    cfg: &MichelsonConfig,
    env: &MiEnvironment,
    squeezing_on: bool,
    seed: u64,
) -> Result<MiRun> {
    cfg.validate()?;
    env.window.validate()?;
    let (f_lo, f_hi) = (env.window.f_start, env.window.f_stop);
    if !(f_lo < cfg.signal_freq && cfg.signal_freq < f_hi) {
        return Err(Error::InvalidWindow(format!(
            "signal frequency {} outside analysis span {f_lo}..{f_hi}",
            cfg.signal_freq
        )));
    }

    let fs = env.window.sample_rate();
    let n = env.window.segment_len(fs)?;
    let eta_det = crate::detection::effective_efficiency(env.homodyne, 1.0)?;

    // Dither lock first: it holds the operating point for the whole run.
    let dither = run_dither_lock(cfg, env.window.required_duration(), seed)?;

    // Quadrature noise at the readout, per bin. The LO is parked on the
    // squeezed quadrature (a quarter turn from the control-field lock point).
    let df = fs / n as f64;
    let budget = cfg.injection_budget(env.homodyne.visibility);
    let mut quad_amp = Vec::with_capacity(n / 2 + 1);
    for k in 0..=n / 2 {
        let f = k as f64 * df;
        let v = if squeezing_on {
            env.opo
                .squeezing_spectrum(f)?
                .apply_loss(eta_det)?
                .apply_loss(budget)?
                .v11
        } else {
            1.0
        };
        let h = crate::detection::detector_transfer(f, env.homodyne.hf_corner);
        quad_amp.push((v * 2.0 / fs).sqrt() * h);
    }
    let dark_amp = shaped_amplitude_table(env.homodyne.dark_power(), env.homodyne.hf_corner, fs, n);

    // Signal tone: phase-quadrature displacement beats against the LO at
    // twice the sqrt of the sideband flux; sampled amplitude scales as
    // 1/sqrt(fs).
    let readout = dark_port_output(
        cfg,
        env.carrier,
        0.0,
        cfg.signal_mod_depth,
        &QuadratureState::vacuum(cfg.signal_freq)?,
        env.homodyne.visibility,
    )?;
    let tone_amp = 2.0 * (eta_det * budget).sqrt() * readout.signal_flux_amp / fs.sqrt();

    let mut series = Vec::with_capacity(n * env.window.averages);
    for seg in 0..env.window.averages {
        let mut rng_q = ChaCha8Rng::seed_from_u64(derive_seed(seed, 10, seg as u64));
        let mut rng_d = ChaCha8Rng::seed_from_u64(derive_seed(seed, 11, seg as u64));
        let zq = gaussian_half_spectrum(&mut rng_q, n);
        let zd = gaussian_half_spectrum(&mut rng_d, n);
        let q = series_from_half_spectrum(&zq, &quad_amp, fs);
        let d = series_from_half_spectrum(&zd, &dark_amp, fs);
        let mut seg_series: Vec<f64> = q.iter().zip(&d).map(|(a, b)| a + b).collect();
        // Tone phase continues across segments.
        let t0 = (seg * n) as f64 / fs;
        add_tone(
            &mut seg_series,
            fs,
            cfg.signal_freq,
            tone_amp,
            std::f64::consts::TAU * cfg.signal_freq * t0,
        );
        series.extend(seg_series);
    }

    let est = estimate_psd(&series, fs, env.window)?;
    let dark_power = env.homodyne.dark_power();
    let shot_ref: Vec<f64> = est
        .frequencies
        .iter()
        .map(|&f| {
            crate::detection::detector_transfer(f, env.homodyne.hf_corner).powi(2) * 2.0 / fs
        })
        .collect();
    let corrected: Vec<f64> = est
        .density
        .iter()
        .zip(&shot_ref)
        .map(|(&d, &s)| d - dark_power * s)
        .collect();
    let db = to_db_rel(&corrected, &shot_ref)?;

    // Floor excludes the tone's leakage neighborhood.
    let peak_idx = est
        .frequencies
        .iter()
        .position(|&f| (f - cfg.signal_freq).abs() < 0.5 * est.rbw)
        .ok_or_else(|| Error::InvalidWindow("signal frequency not on a bin".into()))?;
    let mut floor_acc = 0.0;
    let mut floor_n = 0usize;
    for (i, (&c, &s)) in corrected.iter().zip(&shot_ref).enumerate() {
        if i.abs_diff(peak_idx) > 3 {
            floor_acc += c / s;
            floor_n += 1;
        }
    }
    let floor_db = 10.0 * (floor_acc / floor_n as f64).log10();

    Ok(MiRun {
        frequencies: est.frequencies,
        peak_db: db[peak_idx],
        db_rel_shot: db,
        floor_db,
        dither_residual_rms: dither.residual_rms,
        carrier_leak_w: dither.mean_leak_w,
    })
}

struct DitherLock {
    residual_rms: f64,
    mean_leak_w: f64,
}

/// Decimated dark-fringe lock: each step advances ten dither cycles with the
/// demodulated error evaluated analytically at the current offset.
fn run_dither_lock(cfg: &MichelsonConfig, duration: f64, seed: u64) -> Result<DitherLock> {
    let dt = 10.0 / cfg.dither_freq;
    let steps = (duration / dt).ceil() as usize;
    let servo_cfg = ServoConfig::new(0.2, 40.0, 2.0, 1e4, 0.0)?;
    let mut servo = PiServo::new();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 20, 0));
    let mut drift = 0.0f64;
    let mut sum_sq = 0.0;
    let mut sum_leak = 0.0;
    for _ in 0..steps {
        let z: f64 = StandardNormal.sample(&mut rng);
        drift += cfg.dither_drift_sigma * dt.sqrt() * z;
        let offset = drift - servo.command();
        // Lock-in output of the dithered bright port, to first order in the
        // dither depth.
        let err = dither_lock_error(cfg, offset) * 0.5 * cfg.dither_depth;
        servo.step(err / (cfg.dither_depth * cfg.mi_visibility), &servo_cfg, dt);
        sum_sq += offset * offset;
        sum_leak += cfg.effective_power() * cfg.dark_fraction(offset);
    }
    Ok(DitherLock {
        residual_rms: (sum_sq / steps as f64).sqrt(),
        mean_leak_w: sum_leak / steps as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::REFERENCE_LO_POWER;

    fn config() -> MichelsonConfig {
        MichelsonConfig {
            input_power: 1.5e-6,
            mi_visibility: 0.999,
            end_mirror_r: 0.9992,
            dither_freq: 66e3,
            signal_freq: 3200.0,
            faraday_double_pass_transmission: 0.95,
            homodyne_visibility: 0.907,
            signal_mod_depth: 2.74e-5,
            dither_depth: 1e-3,
            dither_drift_sigma: 2e-4,
            dither_residual_bound: 5e-3,
        }
    }

    fn carrier() -> CarrierConfig {
        CarrierConfig::new(2.8169e14, REFERENCE_LO_POWER).unwrap()
    }

    #[test]
    fn perfect_dark_port_is_dark() {
        let mut cfg = config();
        cfg.mi_visibility = 1.0;
        let vac = QuadratureState::vacuum(3200.0).unwrap();
        let out = dark_port_output(&cfg, &carrier(), 0.0, 0.0, &vac, 0.943).unwrap();
        assert_eq!(out.carrier_leak_w, 0.0);
        assert_eq!(out.signal_flux_amp, 0.0);
    }

    #[test]
    fn contrast_defect_leaks_carrier() {
        let cfg = config();
        let vac = QuadratureState::vacuum(3200.0).unwrap();
        let out = dark_port_output(&cfg, &carrier(), 0.0, 1e-5, &vac, 0.943).unwrap();
        let expect = cfg.effective_power() * 0.5 * (1.0 - cfg.mi_visibility);
        assert!((out.carrier_leak_w - expect).abs() < 1e-18);
        assert!(out.signal_flux_amp > 0.0);
    }

    #[test]
    fn injection_budget_matches_loss_accounting() {
        let cfg = config();
        let budget = cfg.injection_budget(0.943);
        assert!((budget - 0.95 * (0.907f64 / 0.943).powi(2)).abs() < 1e-12);
        assert!((budget - 0.8789).abs() < 1e-4);
        let squeezed = QuadratureState::new(0.398, 2.512, 0.0, 3200.0).unwrap();
        let vac = QuadratureState::vacuum(3200.0).unwrap();
        let out = dark_port_output(&cfg, &carrier(), 0.0, 0.0, &squeezed, 0.943).unwrap();
        assert!((out.readout_state.variance_db(0.0) + 3.27).abs() < 0.02);
        let out_vac = dark_port_output(&cfg, &carrier(), 0.0, 0.0, &vac, 0.943).unwrap();
        assert_eq!(out_vac.readout_state.v11, 1.0);
    }

    #[test]
    fn dither_error_shape_matches_fringe_derivative() {
        let cfg = config();
        assert_eq!(dither_lock_error(&cfg, 0.0), 0.0);
        for d in [0.05, 0.2, 0.7] {
            assert!((dither_lock_error(&cfg, -d) + dither_lock_error(&cfg, d)).abs() < 1e-15);
        }
        // Slope from the bright-port fringe model by finite difference:
        // err = -(dP_bright/d delta) / P_eff.
        let h = 1e-7;
        for delta in [0.0, 0.1, 0.3] {
            let fd = (cfg.bright_port_power(delta + h) - cfg.bright_port_power(delta - h))
                / (2.0 * h * cfg.effective_power());
            assert!(
                (dither_lock_error(&cfg, delta) + fd).abs() < 1e-6,
                "delta {delta}: err {} vs -dP {}",
                dither_lock_error(&cfg, delta),
                -fd
            );
        }
    }

    #[test]
    fn scenario_pair_shows_squeezing_improvement() {
        let cfg = config();
        let opo = OpoParams::new(0.3732, 13.5e6, 0.9, 3.8e9).unwrap();
        let homodyne = HomodyneConfig::new(REFERENCE_LO_POWER, 0.943, 0.95, -7.0, 12.0).unwrap();
        let carrier = carrier();
        let window = SpectrumWindow::new(2800.0, 3600.0, 4.0, 60).unwrap();
        let env = MiEnvironment {
            carrier: &carrier,
            opo: &opo,
            homodyne: &homodyne,
            window: &window,
        };
        let off = run_mi_scenario(&cfg, &env, false, 33).unwrap();
        let on = run_mi_scenario(&cfg, &env, true, 33).unwrap();

        assert!(off.floor_db.abs() < 0.2, "shot floor {}", off.floor_db);
        assert!(
            (-3.8..-2.8).contains(&on.floor_db),
            "squeezed floor {}",
            on.floor_db
        );
        // The signal peak is untouched by the squeezing setting.
        assert!(
            (off.peak_db - on.peak_db).abs() < 0.2,
            "peaks {} vs {}",
            off.peak_db,
            on.peak_db
        );
        assert!(off.peak_db > 25.0);
        assert!(on.dither_residual_rms < cfg.dither_residual_bound);
        assert_eq!(off.frequencies, on.frequencies);
    }

    #[test]
    fn signal_frequency_must_sit_inside_window() {
        let cfg = config();
        let opo = OpoParams::new(0.37, 13.5e6, 0.9, 3.8e9).unwrap();
        let homodyne = HomodyneConfig::new(REFERENCE_LO_POWER, 0.943, 0.95, -7.0, 12.0).unwrap();
        let carrier = carrier();
        let window = SpectrumWindow::new(100.0, 900.0, 4.0, 10).unwrap();
        let env = MiEnvironment {
            carrier: &carrier,
            opo: &opo,
            homodyne: &homodyne,
            window: &window,
        };
        assert!(run_mi_scenario(&cfg, &env, false, 1).is_err());
    }
}
