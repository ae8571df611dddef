//! Colored-Gaussian time-series synthesis and averaged-periodogram spectral
//! estimation.
//!
//! Synthesis shapes a Hermitian spectrum of unit Gaussians by the target PSD
//! and inverse-transforms it; estimation segments the series, applies a Hann
//! taper with equivalent-noise-bandwidth correction and averages periodogram
//! powers, so white noise of variance s^2 reads an unbiased one-sided density
//! of 2 s^2 / fs. A bin-centered tone of amplitude A carries total power
//! A^2 / 2 spread over one equivalent noise bandwidth (1.5 bins for Hann).

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Equivalent noise bandwidth of the periodic Hann window, in bins.
pub const HANN_ENBW_BINS: f64 = 1.5;

/// One spectral-analysis window: span, resolution bandwidth, averaging count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumWindow {
    pub f_start: f64,
    pub f_stop: f64,
    /// Resolution bandwidth (bin spacing) in Hz.
    pub rbw: f64,
    /// Number of averaged segments.
    pub averages: usize,
}

impl SpectrumWindow {
    pub fn new(f_start: f64, f_stop: f64, rbw: f64, averages: usize) -> Result<Self> {
        let w = Self {
            f_start,
            f_stop,
            rbw,
            averages,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_start >= 0.0 && self.f_start < self.f_stop) {
            return Err(Error::InvalidWindow(format!(
                "span [{}, {}) is empty or negative",
                self.f_start, self.f_stop
            )));
        }
        if !(self.rbw > 0.0 && self.rbw <= self.f_stop - self.f_start) {
            return Err(Error::InvalidWindow(format!(
                "rbw {} outside (0, span] for span {}..{}",
                self.rbw, self.f_start, self.f_stop
            )));
        }
        if self.averages == 0 {
            return Err(Error::InvalidWindow("averages must be >= 1".into()));
        }
        Ok(())
    }

    /// Simulation sample rate for this window: four times the top frequency.
    pub fn sample_rate(&self) -> f64 {
        4.0 * self.f_stop
    }

    /// Segment length delivering the requested rbw at `sample_rate`.
    pub fn segment_len(&self, sample_rate: f64) -> Result<usize> {
        let n = sample_rate / self.rbw;
        if (n - n.round()).abs() > 1e-6 || n < 4.0 {
            return Err(Error::InvalidWindow(format!(
                "sample rate {sample_rate} is not an integer multiple of rbw {}",
                self.rbw
            )));
        }
        Ok(n.round() as usize)
    }

    /// Seconds of data needed for the stated averaging count.
    pub fn required_duration(&self) -> f64 {
        self.averages as f64 / self.rbw
    }

    /// Bin indices (multiples of rbw) covered by the half-open span.
    pub fn bin_range(&self) -> std::ops::Range<usize> {
        let start = (self.f_start / self.rbw - 1e-9).ceil() as usize;
        let stop = (self.f_stop / self.rbw - 1e-9).ceil() as usize;
        start..stop
    }
}

/// Ordered, contiguous collection of spectrum windows.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPlan {
    pub windows: Vec<SpectrumWindow>,
}

impl WindowPlan {
    pub fn new(windows: Vec<SpectrumWindow>) -> Result<Self> {
        if windows.is_empty() {
            return Err(Error::InvalidWindow("plan has no windows".into()));
        }
        for w in &windows {
            w.validate()?;
        }
        for pair in windows.windows(2) {
            if (pair[0].f_stop - pair[1].f_start).abs() > 1e-9 {
                return Err(Error::InvalidWindow(format!(
                    "windows not contiguous at {} / {}",
                    pair[0].f_stop, pair[1].f_start
                )));
            }
        }
        Ok(Self { windows })
    }

    pub fn span(&self) -> (f64, f64) {
        (
            self.windows.first().map(|w| w.f_start).unwrap_or(0.0),
            self.windows.last().map(|w| w.f_stop).unwrap_or(0.0),
        )
    }
}

/// The five-window measurement plan: 10-50 Hz, 50-200 Hz, 200-800 Hz,
/// 800 Hz - 3.2 kHz and 3.2-10 kHz at RBWs of 250 mHz, 1, 2, 4 and 16 Hz
/// with 100, 100, 400, 400 and 800 averages.
pub fn paper_window_plan() -> WindowPlan {
    WindowPlan::new(vec![
        SpectrumWindow {
            f_start: 10.0,
            f_stop: 50.0,
            rbw: 0.25,
            averages: 100,
        },
        SpectrumWindow {
            f_start: 50.0,
            f_stop: 200.0,
            rbw: 1.0,
            averages: 100,
        },
        SpectrumWindow {
            f_start: 200.0,
            f_stop: 800.0,
            rbw: 2.0,
            averages: 400,
        },
        SpectrumWindow {
            f_start: 800.0,
            f_stop: 3200.0,
            rbw: 4.0,
            averages: 400,
        },
        SpectrumWindow {
            f_start: 3200.0,
            f_stop: 10_000.0,
            rbw: 16.0,
            averages: 800,
        },
    ])
    .expect("paper plan is well-formed")
}

/// Unit-variance Hermitian half-spectrum: `n/2 + 1` coefficients with
/// `E|z_k|^2 = 1`, DC and Nyquist real. Shared draws let callers synthesize
/// coherent realizations of differently-shaped spectra.
pub fn gaussian_half_spectrum(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    let half = n / 2;
    let mut z = Vec::with_capacity(half + 1);
    let root_half = std::f64::consts::FRAC_1_SQRT_2;
    for k in 0..=half {
        if k == 0 || k == half {
            let a: f64 = StandardNormal.sample(rng);
            z.push(Complex64::new(a, 0.0));
        } else {
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            z.push(Complex64::new(a * root_half, b * root_half));
        }
    }
    z
}

/// Real series of length n whose one-sided PSD is `amplitude[k]^2` at bin k,
/// built from a unit half-spectrum. `amplitude[k]` carries sqrt(S(f_k)); the
/// fs- and n-dependent scaling is applied here.
pub fn series_from_half_spectrum(
    z: &[Complex64],
    amplitude: &[f64],
    sample_rate: f64,
) -> Vec<f64> {
    let half = z.len() - 1;
    let n = 2 * half;
    assert_eq!(amplitude.len(), z.len(), "amplitude table must match spectrum");
    let scale = (sample_rate * n as f64 / 2.0).sqrt();
    let mut buf = vec![Complex64::default(); n];
    for k in 0..=half {
        let x = z[k] * (amplitude[k] * scale);
        buf[k] = x;
        if k != 0 && k != half {
            buf[n - k] = x.conj();
        }
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// Synthesize a real Gaussian series whose one-sided PSD tracks `target_psd`.
/// Deterministic per seed.
pub fn synthesize_noise(
    target_psd: impl Fn(f64) -> f64,
    duration: f64,
    sample_rate: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if duration <= 0.0 || sample_rate <= 0.0 {
        return Err(Error::InvalidParameter(
            "duration and sample rate must be positive".into(),
        ));
    }
    let mut n = (duration * sample_rate).round() as usize;
    n += n % 2;
    if n < 4 {
        return Err(Error::InsufficientData { needed: 4, got: n });
    }
    let df = sample_rate / n as f64;
    let amplitude: Vec<f64> = (0..=n / 2)
        .map(|k| target_psd(k as f64 * df).max(0.0).sqrt())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = gaussian_half_spectrum(&mut rng, n);
    Ok(series_from_half_spectrum(&z, &amplitude, sample_rate))
}

/// Add a sine tone in place.
pub fn add_tone(series: &mut [f64], sample_rate: f64, freq: f64, amp: f64, phase: f64) {
    let w = std::f64::consts::TAU * freq / sample_rate;
    for (j, x) in series.iter_mut().enumerate() {
        *x += amp * (w * j as f64 + phase).sin();
    }
}

/// Averaged-periodogram estimate over one window's bins.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    /// Bin center frequencies, spaced by the window rbw.
    pub frequencies: Vec<f64>,
    /// One-sided power spectral density per bin.
    pub density: Vec<f64>,
    /// Segments averaged.
    pub segments: usize,
    pub rbw: f64,
}

/// Segmented, Hann-tapered, power-averaged periodogram with bin width equal
/// to the window rbw. Exactly `window.averages` non-overlapping segments are
/// consumed; shorter input is a planning error.
pub fn estimate_psd(
    series: &[f64],
    sample_rate: f64,
    window: &SpectrumWindow,
) -> Result<PsdEstimate> {
    window.validate()?;
    let n = window.segment_len(sample_rate)?;
    let needed = n * window.averages;
    if series.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            got: series.len(),
        });
    }
    if window.f_stop > sample_rate / 2.0 + 1e-9 {
        return Err(Error::InvalidWindow(format!(
            "window top {} above Nyquist {}",
            window.f_stop,
            sample_rate / 2.0
        )));
    }

    let taper: Vec<f64> = (0..n)
        .map(|j| 0.5 * (1.0 - (std::f64::consts::TAU * j as f64 / n as f64).cos()))
        .collect();
    let taper_power: f64 = taper.iter().map(|w| w * w).sum();

    let bins = window.bin_range();
    let mut acc = vec![0.0f64; bins.len()];
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut buf = vec![Complex64::default(); n];
    for seg in 0..window.averages {
        let chunk = &series[seg * n..(seg + 1) * n];
        for ((b, &x), &w) in buf.iter_mut().zip(chunk).zip(&taper) {
            *b = Complex64::new(x * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, k) in acc.iter_mut().zip(bins.clone()) {
            *a += buf[k].norm_sqr();
        }
    }

    let scale = 2.0 / (sample_rate * taper_power * window.averages as f64);
    let density: Vec<f64> = acc.iter().map(|a| a * scale).collect();
    let frequencies: Vec<f64> = bins.map(|k| k as f64 * window.rbw).collect();
    Ok(PsdEstimate {
        frequencies,
        density,
        segments: window.averages,
        rbw: window.rbw,
    })
}

/// Per-bin ratio in dB: `10 log10(numerator / reference)`.
pub fn to_db_rel(numerator: &[f64], reference: &[f64]) -> Result<Vec<f64>> {
    if numerator.len() != reference.len() {
        return Err(Error::SpectrumMismatch(format!(
            "{} bins vs {} bins",
            numerator.len(),
            reference.len()
        )));
    }
    numerator
        .iter()
        .zip(reference)
        .enumerate()
        .map(|(index, (&n, &s))| {
            if s <= 0.0 {
                Err(Error::NonPositiveReference { index })
            } else {
                Ok(10.0 * (n / s).log10())
            }
        })
        .collect()
}
