//! Heavy-fluxonium simulation: circuit spectrum, resonator dressing, noise
//! channels, flux-pulse gates, open-system dynamics and randomized benchmarking.

pub mod circuit;
pub mod coupled;
pub mod error;
pub mod gates;
pub mod lindblad;
pub mod noise;
pub mod params;
pub mod rb;
pub mod units;

pub use error::{Error, Result};
pub use params::{CircuitParams, DeviceConfig, NoiseParams};
