//! Physical constants and unit helpers.
//!
//! Energies are carried as frequencies `E/h` in GHz, times in ns, flux in
//! units of the flux quantum. Decay rates leave the noise module in 1/µs.

use std::f64::consts::PI;

/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Elementary charge (C).
pub const ELECTRON_CHARGE: f64 = 1.602_176_634e-19;
/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Magnetic flux quantum h/2e (Wb).
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELECTRON_CHARGE);
/// Resistance quantum h/e^2 (Ohm).
pub const RESISTANCE_QUANTUM: f64 = PLANCK / (ELECTRON_CHARGE * ELECTRON_CHARGE);

/// Angular frequency (rad/s) of a frequency given in GHz.
pub fn ghz_to_rad_per_s(f_ghz: f64) -> f64 {
    2.0 * PI * f_ghz * 1e9
}

/// Energy (J) of a frequency given in GHz.
pub fn ghz_to_joule(f_ghz: f64) -> f64 {
    PLANCK * f_ghz * 1e9
}

/// Bose occupation of a mode at `f_ghz` and temperature `t_mk`.
///
/// Returns 0 at zero temperature and for non-positive frequencies the
/// occupation of the mirrored mode is *not* implied; callers pass |f|.
pub fn bose_occupation(f_ghz: f64, t_mk: f64) -> f64 {
    if t_mk <= 0.0 {
        return 0.0;
    }
    let x = ghz_to_joule(f_ghz) / (BOLTZMANN * t_mk * 1e-3);
    if x > 700.0 {
        0.0
    } else {
        1.0 / x.exp_m1()
    }
}

/// `coth(h f / 2 k T)`. Infinite at f = 0 for any T > 0; equal to 1 at T = 0.
pub fn thermal_coth(f_ghz: f64, t_mk: f64) -> f64 {
    if t_mk <= 0.0 {
        return 1.0;
    }
    let x = ghz_to_joule(f_ghz) / (2.0 * BOLTZMANN * t_mk * 1e-3);
    1.0 / x.tanh()
}

/// `ω coth(ħω / 2kT)` in rad/s, finite as ω → 0 (tends to 2kT/ħ).
pub fn omega_coth(f_ghz: f64, t_mk: f64) -> f64 {
    let omega = ghz_to_rad_per_s(f_ghz);
    if t_mk <= 0.0 {
        return omega;
    }
    let x = HBAR * omega / (2.0 * BOLTZMANN * t_mk * 1e-3);
    if x.abs() < 1e-8 {
        2.0 * BOLTZMANN * t_mk * 1e-3 / HBAR
    } else {
        omega / x.tanh()
    }
}

/// Convert a rate in 1/s to 1/µs.
pub fn per_s_to_per_us(rate: f64) -> f64 {
    rate * 1e-6
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flux_quantum_value() {
        assert!((FLUX_QUANTUM - 2.067_833_848e-15).abs() < 1e-23);
        assert!((RESISTANCE_QUANTUM - 25_812.807).abs() < 1e-2);
    }

    #[test]
    fn coth_limits() {
        assert_eq!(thermal_coth(0.014, 0.0), 1.0);
        // high-temperature limit: coth x ~ 1/x
        let c = thermal_coth(0.014, 42.0);
        let x = ghz_to_joule(0.014) / (2.0 * BOLTZMANN * 0.042);
        assert!((c * x - 1.0).abs() < 1e-3);
        let oc = omega_coth(1e-12, 42.0);
        assert!((oc - 2.0 * BOLTZMANN * 0.042 / HBAR).abs() / oc < 1e-6);
    }

    #[test]
    fn bose_identity() {
        // n(ω)/(n(ω)+1) = exp(-ħω/kT)
        let n = bose_occupation(0.5, 60.0);
        let boltz = (-ghz_to_joule(0.5) / (BOLTZMANN * 0.06)).exp();
        assert!((n / (n + 1.0) - boltz).abs() < 1e-12);
    }
}
