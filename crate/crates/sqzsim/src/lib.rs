//! Simulation of broadband vacuum squeezing with coherent phase control.
//!
//! The crate models the full signal chain of an audio-band squeezed-light
//! experiment: Gaussian quadrature states at a single sideband frequency
//! ([`sideband`]), the below-threshold optical parametric oscillator and its
//! frequency-shifted coherent control field ([`opo`]), lock-in demodulation,
//! error signals and servo loops ([`control`], [`lock`]), balanced homodyne
//! detection ([`detection`]), averaged-periodogram spectral estimation
//! ([`spectra`]) and a squeezing-enhanced Michelson interferometer
//! ([`michelson`]). Scenario orchestration and file output live in
//! [`scenarios`], [`config`] and [`output`]; the `sqzsim` binary exposes them
//! on the command line.
//!
//! All randomness is driven by explicit seeds; identical configuration and
//! seed reproduce outputs byte for byte.

pub mod config;
pub mod control;
pub mod detection;
pub mod error;
pub mod lock;
pub mod michelson;
pub mod opo;
pub mod output;
pub mod scenarios;
pub mod sideband;
pub mod spectra;

pub use error::{Error, Result};
pub use sideband::{CarrierConfig, QuadratureState};

/// Splitmix64-style seed derivation for independent per-segment RNG streams.
///
/// `stream` separates logical noise sources (quadrature noise, dark noise,
/// ...) and `index` enumerates averaging segments within a stream.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(index.wrapping_mul(0xd1b5_4a32_d192_ed03));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
