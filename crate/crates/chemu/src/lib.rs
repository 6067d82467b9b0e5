//! Non-stationary MIMO channel emulation in software.
//!
//! The crate is organized as a pipeline:
//!
//! 1. [`gbsm`] generates a channel transfer function (CTF) grid from a
//!    geometry-based stochastic model with twin clusters and birth-death
//!    cluster dynamics.
//! 2. [`subspace`] compresses each subchannel's time-domain fading onto a
//!    small set of chirp basis functions and reconstructs the CTF from the
//!    compact projection package.
//! 3. [`engine`] streams baseband signal blocks through the channel with
//!    FFT-based per-bin multiply-accumulate and overlap-and-add.
//! 4. [`metrics`] computes validation quantities: CTF reconstruction error,
//!    time-dependent Doppler PSD, and time-dependent delay PSD.
//! 5. [`iofmt`] defines the on-disk formats tying the stages together.
//!
//! Each major capability has a runnable example under `examples/`; the
//! `chemu` binary exposes the same stages as subcommands.

pub mod engine;
pub mod error;
pub mod gbsm;
pub mod iofmt;
pub mod metrics;
pub mod subspace;
pub mod vec3;

pub use error::{ChemuError, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
