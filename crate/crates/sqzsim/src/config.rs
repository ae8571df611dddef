//! Experiment configuration: defaults, the flat key-value file format and its
//! schema.
//!
//! The file format is a flat list of `section.key = value` lines with `#`
//! comments. Values are plain scalars except the window-plan override, whose
//! value is four whitespace-separated numbers per window. Every problem found
//! during parsing and validation is collected so a bad file reports all
//! offending fields at once.
//!
//! Defaults carry the reference operating point: 88 uW local oscillator,
//! 27 MHz cavity bandwidth (FWHM convention, switchable), 3.8 GHz free
//! spectral range, a 40 MHz control-field offset demodulated at 80 MHz for
//! the pump-phase lock and 40 MHz for the LO lock, a 153.8 MHz length-lock
//! demodulation and a 1.4 GHz dual-polarization offset (the last four purely
//! annotations on this model). Unless `opo.pump_x` is given explicitly, the
//! pump amplitude is calibrated so the detected squeezing hits
//! `target_squeezing_db` through the configured efficiency chain.

use num_complex::Complex64;

use crate::control::ServoConfig;
use crate::detection::{HomodyneConfig, MainsInjector};
use crate::error::{Error, Result};
use crate::lock::{AcquisitionSchedule, LockSystem, LoopTuning, StartCondition};
use crate::michelson::MichelsonConfig;
use crate::opo::{pump_for_measured_squeezing, ControlField, OpoParams};
use crate::sideband::CarrierConfig;
use crate::spectra::{paper_window_plan, SpectrumWindow, WindowPlan};

/// Frequencies of the coherent-control scheme. Apart from the control-field
/// detuning (which sets the beat frequencies) these are annotations: the RF
/// demodulations are evaluated analytically, never sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlScheme {
    /// Control-field offset from the carrier, Hz.
    pub detuning_hz: f64,
    /// Injected control-field power, W.
    pub power_w: f64,
    /// Pump-phase error demodulation (twice the detuning), Hz.
    pub pump_demod_hz: f64,
    /// LO-phase error demodulation (the detuning), Hz.
    pub lo_demod_hz: f64,
    /// Cavity-length error demodulation on the p-polarized mode, Hz.
    pub length_demod_hz: f64,
    /// Frequency offset between the two polarization modes, Hz.
    pub polarization_offset_hz: f64,
}

/// Lock-acquisition tuning shared by the lock-demo scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockSettings {
    pub dt_s: f64,
    pub acquire_timeout_s: f64,
    pub rms_window_s: f64,
    /// Residual RMS below which a loop reports locked (rad, or linewidths for
    /// the length loop).
    pub threshold: f64,
    pub walk_sigma_length: f64,
    pub walk_sigma_pump: f64,
    pub walk_sigma_lo: f64,
}

/// Shot-noise-linearity scenario settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig2Settings {
    /// Injected classical LO noise power in shot units at the nominal LO
    /// power (the negative control; scales with the squared power factor).
    pub classical_noise_shot: f64,
}

/// Full experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub carrier: CarrierConfig,
    pub opo: OpoParams,
    pub control: ControlScheme,
    pub homodyne: HomodyneConfig,
    pub michelson: MichelsonConfig,
    pub mains: MainsInjector,
    pub lock: LockSettings,
    pub fig2: Fig2Settings,
    pub windows: WindowPlan,
    pub seed: u64,
    /// Calibration target for the detected squeezing level, dB.
    pub target_squeezing_db: f64,
}

// Servo gains for the three acquisition loops; chosen for discrete-loop
// stability at the default timestep.
const LENGTH_GAINS: (f64, f64) = (0.4, 60.0);
const PUMP_GAINS: (f64, f64) = (0.08, 30.0);
const LO_GAINS: (f64, f64) = (0.3, 50.0);

impl Default for ExperimentConfig {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        parse_config(&std::fs::read_to_string(path)?)
    }

    /// Detection efficiency of the reference homodyne (no extra transmission).
    pub fn detection_efficiency(&self) -> Result<f64> {
        crate::detection::effective_efficiency(&self.homodyne, 1.0)
    }

    /// Control field in normalized units; amplitude scaled by the injected
    /// power relative to the reference 440 uW.
    pub fn control_field(&self) -> Result<ControlField> {
        let amp = (self.control.power_w / 440e-6).sqrt();
        ControlField::new(Complex64::new(amp, 0.0), self.control.detuning_hz, 0.0)
    }

    /// Assemble the lock-acquisition system. Loop error signals run in
    /// normalized units (unit LO amplitude); gains are stability picks.
    pub fn lock_system(&self, start: StartCondition) -> Result<LockSystem> {
        let servo = |gains: (f64, f64)| ServoConfig::new(gains.0, gains.1, 40.0, 1e4, 0.0);
        Ok(LockSystem {
            opo: self.opo,
            control_field: self.control_field()?,
            lo: CarrierConfig::new(self.carrier.omega0, 1.0)?,
            length: LoopTuning {
                servo: servo(LENGTH_GAINS)?,
                walk_sigma: self.lock.walk_sigma_length,
                lock_threshold: self.lock.threshold,
            },
            pump: LoopTuning {
                servo: servo(PUMP_GAINS)?,
                walk_sigma: self.lock.walk_sigma_pump,
                lock_threshold: self.lock.threshold,
            },
            lo_phase: LoopTuning {
                servo: servo(LO_GAINS)?,
                walk_sigma: self.lock.walk_sigma_lo,
                lock_threshold: self.lock.threshold,
            },
            start,
        })
    }

    pub fn lock_schedule(&self, hold_s: f64) -> AcquisitionSchedule {
        AcquisitionSchedule {
            dt: self.lock.dt_s,
            acquire_timeout_s: self.lock.acquire_timeout_s,
            hold_s,
            rms_window_s: self.lock.rms_window_s,
            sample_every: (0.01 / self.lock.dt_s).max(1.0) as usize,
        }
    }

    /// Serialize every setting in file syntax; `parse_config` round-trips it.
    pub fn to_file_string(&self) -> String {
        let gamma_fwhm = 2.0 * self.opo.gamma;
        let mut out = String::from("# sqzsim experiment configuration\n");
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("seed", self.seed.to_string());
        kv("target_squeezing_db", self.target_squeezing_db.to_string());
        kv("carrier.omega0_hz", self.carrier.omega0.to_string());
        kv("carrier.lo_power_w", self.carrier.lo_power.to_string());
        kv("opo.pump_x", self.opo.x.to_string());
        kv("opo.bandwidth_hz", gamma_fwhm.to_string());
        kv("opo.bandwidth_convention", "fwhm".into());
        kv("opo.eta_esc", self.opo.eta_esc.to_string());
        kv("opo.fsr_hz", self.opo.fsr.to_string());
        kv("control.detuning_hz", self.control.detuning_hz.to_string());
        kv("control.power_w", self.control.power_w.to_string());
        kv("control.pump_demod_hz", self.control.pump_demod_hz.to_string());
        kv("control.lo_demod_hz", self.control.lo_demod_hz.to_string());
        kv(
            "control.length_demod_hz",
            self.control.length_demod_hz.to_string(),
        );
        kv(
            "control.polarization_offset_hz",
            self.control.polarization_offset_hz.to_string(),
        );
        kv("homodyne.qe", self.homodyne.qe.to_string());
        kv("homodyne.visibility", self.homodyne.visibility.to_string());
        kv(
            "homodyne.dark_noise_rel_shot_db",
            self.homodyne.dark_noise_rel_shot_db.to_string(),
        );
        kv("homodyne.hf_corner_hz", self.homodyne.hf_corner.to_string());
        kv("mains.enabled", self.mains.enabled.to_string());
        kv("mains.line_freq_hz", self.mains.line_freq.to_string());
        kv(
            "mains.tone_power_shot",
            self.mains.tone_power_shot.to_string(),
        );
        kv(
            "michelson.input_power_w",
            self.michelson.input_power.to_string(),
        );
        kv(
            "michelson.mi_visibility",
            self.michelson.mi_visibility.to_string(),
        );
        kv(
            "michelson.end_mirror_r",
            self.michelson.end_mirror_r.to_string(),
        );
        kv(
            "michelson.dither_freq_hz",
            self.michelson.dither_freq.to_string(),
        );
        kv(
            "michelson.signal_freq_hz",
            self.michelson.signal_freq.to_string(),
        );
        kv(
            "michelson.faraday_double_pass_transmission",
            self.michelson.faraday_double_pass_transmission.to_string(),
        );
        kv(
            "michelson.homodyne_visibility",
            self.michelson.homodyne_visibility.to_string(),
        );
        kv(
            "michelson.signal_mod_depth_rad",
            self.michelson.signal_mod_depth.to_string(),
        );
        kv(
            "michelson.dither_depth_rad",
            self.michelson.dither_depth.to_string(),
        );
        kv(
            "michelson.dither_drift_sigma",
            self.michelson.dither_drift_sigma.to_string(),
        );
        kv(
            "michelson.dither_residual_bound_rad",
            self.michelson.dither_residual_bound.to_string(),
        );
        kv("lock.dt_s", self.lock.dt_s.to_string());
        kv(
            "lock.acquire_timeout_s",
            self.lock.acquire_timeout_s.to_string(),
        );
        kv("lock.rms_window_s", self.lock.rms_window_s.to_string());
        kv("lock.threshold", self.lock.threshold.to_string());
        kv(
            "lock.walk_sigma_length",
            self.lock.walk_sigma_length.to_string(),
        );
        kv("lock.walk_sigma_pump", self.lock.walk_sigma_pump.to_string());
        kv("lock.walk_sigma_lo", self.lock.walk_sigma_lo.to_string());
        kv(
            "fig2.classical_noise_shot",
            self.fig2.classical_noise_shot.to_string(),
        );
        for (i, w) in self.windows.windows.iter().enumerate() {
            kv(
                &format!("windows.{}", i + 1),
                format!("{} {} {} {}", w.f_start, w.f_stop, w.rbw, w.averages),
            );
        }
        out
    }
}

struct RawConfig {
    seed: u64,
    target_squeezing_db: f64,
    omega0_hz: f64,
    lo_power_w: f64,
    pump_x: Option<f64>,
    bandwidth_hz: f64,
    bandwidth_is_fwhm: bool,
    eta_esc: f64,
    fsr_hz: f64,
    control: ControlScheme,
    qe: f64,
    visibility: f64,
    dark_db: f64,
    hf_corner: f64,
    mains_enabled: bool,
    mains_line: f64,
    mains_power: f64,
    michelson: MichelsonConfig,
    lock: LockSettings,
    fig2: Fig2Settings,
    window_overrides: Vec<(usize, SpectrumWindow)>,
}

impl RawConfig {
    fn defaults() -> Self {
        Self {
            seed: 1,
            target_squeezing_db: -4.0,
            omega0_hz: 2.8178e14,
            lo_power_w: 88e-6,
            pump_x: None,
            bandwidth_hz: 27e6,
            bandwidth_is_fwhm: true,
            eta_esc: 0.9,
            fsr_hz: 3.8e9,
            control: ControlScheme {
                detuning_hz: 40e6,
                power_w: 440e-6,
                pump_demod_hz: 80e6,
                lo_demod_hz: 40e6,
                length_demod_hz: 153.8e6,
                polarization_offset_hz: 1.4e9,
            },
            qe: 0.95,
            visibility: 0.943,
            dark_db: -7.0,
            hf_corner: 12.0,
            mains_enabled: false,
            mains_line: 50.0,
            mains_power: 0.25,
            michelson: MichelsonConfig {
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
            },
            lock: LockSettings {
                dt_s: 1e-4,
                acquire_timeout_s: 10.0,
                rms_window_s: 0.2,
                threshold: 0.05,
                walk_sigma_length: 0.02,
                walk_sigma_pump: 0.2,
                walk_sigma_lo: 0.2,
            },
            fig2: Fig2Settings {
                classical_noise_shot: 1.0,
            },
            window_overrides: Vec::new(),
        }
    }
}

/// Parse the flat key-value configuration format, collecting every problem.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut raw = RawConfig::defaults();
    let mut problems = Vec::new();

    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            problems.push(format!("line {}: expected `key = value`", lineno + 1));
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        if let Err(detail) = apply_key(&mut raw, key, value) {
            problems.push(format!("line {}: {key}: {detail}", lineno + 1));
        }
    }

    build_config(raw, problems)
}

fn apply_key(raw: &mut RawConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    fn f(value: &str) -> std::result::Result<f64, String> {
        value
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("not a finite number: `{value}`"))
    }
    fn b(value: &str) -> std::result::Result<bool, String> {
        value
            .parse::<bool>()
            .map_err(|_| format!("expected true/false, got `{value}`"))
    }

    if let Some(index) = key.strip_prefix("windows.") {
        let index: usize = index
            .parse()
            .map_err(|_| format!("bad window index `{index}`"))?;
        let parts: Vec<&str> = value.split_whitespace().collect();
        if parts.len() != 4 {
            return Err("expected `f_start f_stop rbw averages`".into());
        }
        let averages: usize = parts[3]
            .parse()
            .map_err(|_| format!("bad averages `{}`", parts[3]))?;
        let w = SpectrumWindow::new(f(parts[0])?, f(parts[1])?, f(parts[2])?, averages)
            .map_err(|e| e.to_string())?;
        raw.window_overrides.push((index, w));
        return Ok(());
    }

    match key {
        "seed" => {
            raw.seed = value
                .parse::<u64>()
                .map_err(|_| format!("expected unsigned integer, got `{value}`"))?
        }
        "target_squeezing_db" => {
            let v = f(value)?;
            if v >= 0.0 {
                return Err(format!("squeezing target must be negative dB, got {v}"));
            }
            raw.target_squeezing_db = v;
        }
        "carrier.omega0_hz" => raw.omega0_hz = f(value)?,
        "carrier.lo_power_w" => raw.lo_power_w = f(value)?,
        "opo.pump_x" => raw.pump_x = Some(f(value)?),
        "opo.bandwidth_hz" => raw.bandwidth_hz = f(value)?,
        "opo.bandwidth_convention" => match value {
            "fwhm" => raw.bandwidth_is_fwhm = true,
            "hwhm" => raw.bandwidth_is_fwhm = false,
            other => return Err(format!("expected fwhm|hwhm, got `{other}`")),
        },
        "opo.eta_esc" => raw.eta_esc = f(value)?,
        "opo.fsr_hz" => raw.fsr_hz = f(value)?,
        "control.detuning_hz" => raw.control.detuning_hz = f(value)?,
        "control.power_w" => raw.control.power_w = f(value)?,
        "control.pump_demod_hz" => raw.control.pump_demod_hz = f(value)?,
        "control.lo_demod_hz" => raw.control.lo_demod_hz = f(value)?,
        "control.length_demod_hz" => raw.control.length_demod_hz = f(value)?,
        "control.polarization_offset_hz" => raw.control.polarization_offset_hz = f(value)?,
        "homodyne.qe" => raw.qe = f(value)?,
        "homodyne.visibility" => raw.visibility = f(value)?,
        "homodyne.dark_noise_rel_shot_db" => raw.dark_db = f(value)?,
        "homodyne.hf_corner_hz" => raw.hf_corner = f(value)?,
        "mains.enabled" => raw.mains_enabled = b(value)?,
        "mains.line_freq_hz" => raw.mains_line = f(value)?,
        "mains.tone_power_shot" => raw.mains_power = f(value)?,
        "michelson.input_power_w" => raw.michelson.input_power = f(value)?,
        "michelson.mi_visibility" => raw.michelson.mi_visibility = f(value)?,
        "michelson.end_mirror_r" => raw.michelson.end_mirror_r = f(value)?,
        "michelson.dither_freq_hz" => raw.michelson.dither_freq = f(value)?,
        "michelson.signal_freq_hz" => raw.michelson.signal_freq = f(value)?,
        "michelson.faraday_double_pass_transmission" => {
            raw.michelson.faraday_double_pass_transmission = f(value)?
        }
        "michelson.homodyne_visibility" => raw.michelson.homodyne_visibility = f(value)?,
        "michelson.signal_mod_depth_rad" => raw.michelson.signal_mod_depth = f(value)?,
        "michelson.dither_depth_rad" => raw.michelson.dither_depth = f(value)?,
        "michelson.dither_drift_sigma" => raw.michelson.dither_drift_sigma = f(value)?,
        "michelson.dither_residual_bound_rad" => raw.michelson.dither_residual_bound = f(value)?,
        "lock.dt_s" => raw.lock.dt_s = f(value)?,
        "lock.acquire_timeout_s" => raw.lock.acquire_timeout_s = f(value)?,
        "lock.rms_window_s" => raw.lock.rms_window_s = f(value)?,
        "lock.threshold" => raw.lock.threshold = f(value)?,
        "lock.walk_sigma_length" => raw.lock.walk_sigma_length = f(value)?,
        "lock.walk_sigma_pump" => raw.lock.walk_sigma_pump = f(value)?,
        "lock.walk_sigma_lo" => raw.lock.walk_sigma_lo = f(value)?,
        "fig2.classical_noise_shot" => raw.fig2.classical_noise_shot = f(value)?,
        other => return Err(format!("unknown key `{other}`")),
    }
    Ok(())
}

fn build_config(raw: RawConfig, mut problems: Vec<String>) -> Result<ExperimentConfig> {
    let mut push_err = |field: &str, e: Error| {
        problems.push(format!("{field}: {e}"));
    };

    let carrier = CarrierConfig::new(raw.omega0_hz, raw.lo_power_w)
        .map_err(|e| push_err("carrier", e))
        .ok();
    let homodyne = HomodyneConfig::new(
        raw.lo_power_w,
        raw.visibility,
        raw.qe,
        raw.dark_db,
        raw.hf_corner,
    )
    .map_err(|e| push_err("homodyne", e))
    .ok();

    let gamma = if raw.bandwidth_is_fwhm {
        raw.bandwidth_hz / 2.0
    } else {
        raw.bandwidth_hz
    };
    let pump_x = match raw.pump_x {
        Some(x) => Ok(x),
        None => match &homodyne {
            Some(h) => crate::detection::effective_efficiency(h, 1.0).and_then(|eta_det| {
                pump_for_measured_squeezing(
                    10f64.powf(raw.target_squeezing_db / 10.0),
                    raw.eta_esc * eta_det,
                )
            }),
            None => Err(Error::Calibration(
                "pump calibration needs a valid homodyne section".into(),
            )),
        },
    };
    let opo = match pump_x.and_then(|x| OpoParams::new(x, gamma, raw.eta_esc, raw.fsr_hz)) {
        Ok(p) => Some(p),
        Err(e) => {
            push_err("opo", e);
            None
        }
    };

    if let Err(e) = raw.michelson.validate() {
        push_err("michelson", e);
    }
    if raw.control.detuning_hz == 0.0 {
        problems.push("control.detuning_hz: must be nonzero".into());
    }
    if raw.lock.dt_s <= 0.0 || raw.lock.acquire_timeout_s <= 0.0 || raw.lock.rms_window_s <= 0.0 {
        problems.push("lock: timestep, timeout and rms window must be positive".into());
    }
    if raw.lock.threshold <= 0.0 {
        problems.push("lock.threshold: must be positive".into());
    }
    if raw.fig2.classical_noise_shot < 0.0 {
        problems.push("fig2.classical_noise_shot: must be non-negative".into());
    }
    if raw.mains_power < 0.0 || raw.mains_line <= 0.0 {
        problems.push("mains: line frequency must be positive, tone power non-negative".into());
    }

    let windows = if raw.window_overrides.is_empty() {
        Some(paper_window_plan())
    } else {
        let mut sorted = raw.window_overrides;
        sorted.sort_by_key(|(i, _)| *i);
        let contiguous = sorted
            .iter()
            .enumerate()
            .all(|(pos, (idx, _))| *idx == pos + 1);
        if !contiguous {
            problems.push("windows: override indices must run 1..N without gaps".into());
            None
        } else {
            WindowPlan::new(sorted.into_iter().map(|(_, w)| w).collect())
                .map_err(|e| problems.push(format!("windows: {e}")))
                .ok()
        }
    };

    if !problems.is_empty() {
        return Err(Error::schema(problems));
    }

    Ok(ExperimentConfig {
        carrier: carrier.expect("validated"),
        opo: opo.expect("validated"),
        control: raw.control,
        homodyne: homodyne.expect("validated"),
        michelson: raw.michelson,
        mains: MainsInjector {
            enabled: raw.mains_enabled,
            line_freq: raw.mains_line,
            tone_power_shot: raw.mains_power,
        },
        lock: raw.lock,
        fig2: raw.fig2,
        windows: windows.expect("validated"),
        seed: raw.seed,
        target_squeezing_db: raw.target_squeezing_db,
    })
}
