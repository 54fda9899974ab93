//! Relaxation and dephasing models: Fermi-golden-rule rates for the
//! capacitor, inductor, flux line, 1/f flux noise and charge line, the dressed
//! Purcell sums, and the echo dephasing time.
//!
//! Every rate returned here is in 1/µs; every T1/T2 is in µs.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{self, Spectrum, DEFAULT_BASIS};
use crate::coupled::{self, DressedSystem, Truncation};
use crate::error::{Error, Result};
use crate::params::CircuitParams;
use crate::units::{
    bose_occupation, ghz_to_joule, ghz_to_rad_per_s, omega_coth, per_s_to_per_us, thermal_coth, FLUX_QUANTUM, HBAR,
    RESISTANCE_QUANTUM,
};

/// `ħω²/(8 E_C Q_cap) · coth(βħω/2) · |φ|²`. Zero at ω = 0: the ω² prefactor
/// beats the 1/ω pole of the coth.
pub fn dielectric_rate(f_ghz: f64, phi_elem: f64, e_c_ghz: f64, q_cap: f64, t_mk: f64) -> f64 {
    let f = f_ghz.abs();
    if f == 0.0 {
        return 0.0;
    }
    let w = ghz_to_rad_per_s(f);
    let rate = HBAR * w * omega_coth(f, t_mk) / (8.0 * ghz_to_joule(e_c_ghz) * q_cap) * phi_elem * phi_elem;
    per_s_to_per_us(rate)
}

/// `(E_L/ħ Q_ind) · coth(βħω/2) · |φ|²`.
pub fn inductive_rate(f_ghz: f64, phi_elem: f64, e_l_ghz: f64, q_ind: f64, t_mk: f64) -> f64 {
    let rate = ghz_to_joule(e_l_ghz) / (HBAR * q_ind) * thermal_coth(f_ghz.abs(), t_mk) * phi_elem * phi_elem;
    per_s_to_per_us(rate)
}

/// Fluxonium inductance (H) from E_L, using `E_L = Φ0² / 2L`.
pub fn inductance_from_el(e_l_ghz: f64) -> f64 {
    FLUX_QUANTUM * FLUX_QUANTUM / (2.0 * ghz_to_joule(e_l_ghz))
}

/// `π³ (R_Q/R) (M/L)² |φ|² ω coth(βħω/2)`; `mutual_m` in Φ0 per mA.
pub fn flux_line_rate(f_ghz: f64, phi_elem: f64, e_l_ghz: f64, r_ohm: f64, mutual_m: f64, t_mk: f64) -> f64 {
    if r_ohm.is_infinite() {
        return 0.0;
    }
    let m_henry = mutual_m * FLUX_QUANTUM / 1e-3;
    let l_henry = inductance_from_el(e_l_ghz);
    let rate = PI.powi(3) * (RESISTANCE_QUANTUM / r_ohm) * (m_henry / l_henry).powi(2) * phi_elem * phi_elem
        * omega_coth(f_ghz.abs(), t_mk);
    per_s_to_per_us(rate)
}

/// `8π³ (E_L/ħ)² (η/Φ0)² |φ|² / ω`; `eta` in µΦ0.
pub fn one_over_f_rate(f_ghz: f64, phi_elem: f64, e_l_ghz: f64, eta_micro: f64) -> f64 {
    let w = ghz_to_rad_per_s(f_ghz.abs());
    let el = ghz_to_joule(e_l_ghz) / HBAR;
    let eta = eta_micro * 1e-6;
    per_s_to_per_us(8.0 * PI.powi(3) * el * el * eta * eta * phi_elem * phi_elem / w)
}

/// `(ω/Q_c) coth(βħω/2) |n|²`.
pub fn charge_line_rate(f_ghz: f64, n_elem: f64, q_c: f64, t_mk: f64) -> f64 {
    per_s_to_per_us(omega_coth(f_ghz.abs(), t_mk) / q_c * n_elem * n_elem)
}

fn check_levels(spec: &Spectrum, i: usize, j: usize) -> Result<()> {
    if i.max(j) >= spec.n_levels() || i == j {
        return Err(Error::Domain(format!(
            "transition {i} -> {j} needs two distinct levels out of {}",
            spec.n_levels()
        )));
    }
    Ok(())
}

pub fn gamma_dielectric_between(spec: &Spectrum, p: &CircuitParams, i: usize, j: usize) -> Result<f64> {
    check_levels(spec, i, j)?;
    let n = &p.noise;
    Ok(dielectric_rate(spec.transition(i, j), spec.phi(i, j), spec.e_c, n.q_cap, n.t_bath_diel))
}

pub fn gamma_inductive_between(spec: &Spectrum, p: &CircuitParams, i: usize, j: usize) -> Result<f64> {
    check_levels(spec, i, j)?;
    let n = &p.noise;
    Ok(inductive_rate(spec.transition(i, j), spec.phi(i, j), p.e_l, n.q_ind, n.t_bath_diel))
}

pub fn gamma_flux_line_between(spec: &Spectrum, p: &CircuitParams, i: usize, j: usize) -> Result<f64> {
    check_levels(spec, i, j)?;
    let n = &p.noise;
    Ok(flux_line_rate(spec.transition(i, j), spec.phi(i, j), p.e_l, n.r_fluxline, n.mutual_m, n.t_bath_diel))
}

pub fn gamma_one_over_f_between(spec: &Spectrum, p: &CircuitParams, i: usize, j: usize) -> Result<f64> {
    check_levels(spec, i, j)?;
    Ok(one_over_f_rate(spec.transition(i, j), spec.phi(i, j), p.e_l, p.noise.eta_1f))
}

pub fn gamma_charge_line_between(spec: &Spectrum, p: &CircuitParams, i: usize, j: usize) -> Result<f64> {
    check_levels(spec, i, j)?;
    let n = &p.noise;
    Ok(charge_line_rate(spec.transition(i, j), spec.n(i, j).norm(), n.q_c, n.t_bath_diel))
}

/// Qubit (g ↔ e) dielectric rate.
pub fn gamma_dielectric(spec: &Spectrum, p: &CircuitParams) -> Result<f64> {
    gamma_dielectric_between(spec, p, 0, 1)
}

pub fn gamma_inductive(spec: &Spectrum, p: &CircuitParams) -> Result<f64> {
    gamma_inductive_between(spec, p, 0, 1)
}

pub fn gamma_flux_line(spec: &Spectrum, p: &CircuitParams) -> Result<f64> {
    gamma_flux_line_between(spec, p, 0, 1)
}

pub fn gamma_one_over_f(spec: &Spectrum, p: &CircuitParams) -> Result<f64> {
    gamma_one_over_f_between(spec, p, 0, 1)
}

pub fn gamma_charge_line(spec: &Spectrum, p: &CircuitParams) -> Result<f64> {
    gamma_charge_line_between(spec, p, 0, 1)
}

/// Purcell transition rates between fluxonium levels, summed over resonator
/// photon numbers with thermal weights.
#[derive(Debug, Clone)]
pub struct PurcellRates {
    /// `rates[(ℓ, ℓ′)]` = Γ(ℓ → ℓ′) in 1/µs; diagonal is zero.
    pub rates: DMatrix<f64>,
    /// Thermal weight of the highest retained photon number exceeded 1e-4.
    pub truncation_warning: bool,
}

impl PurcellRates {
    /// Direct relaxation e → g only.
    pub fn direct_t1_us(&self) -> f64 {
        1.0 / self.rates[(1, 0)]
    }

    /// Qubit depolarization Γ(e → g) + Γ(g → e).
    pub fn qubit_rate(&self) -> f64 {
        self.rates[(1, 0)] + self.rates[(0, 1)]
    }
}

/// Dressed Purcell sums. For each pair of dressed states (ℓ,n) → (ℓ′,n′):
/// upward transitions weigh `κ n_th(ω) |⟨f|a†|i⟩|²`, downward ones
/// `κ (n_th(ω) + 1) |⟨f|a|i⟩|²`, each multiplied by `P_res(n)`.
///
/// `kappa` is in 1/µs; `t_bath` in mK.
pub fn purcell_rates(ds: &DressedSystem, kappa: f64, t_bath: f64) -> Result<PurcellRates> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::Domain(format!("kappa must be >= 0, got {kappa}")));
    }
    let nf = ds.trunc.fluxonium;
    let np = ds.trunc.photons;
    let boltz = if t_bath > 0.0 {
        (-ghz_to_joule(ds.resonator_freq) / (crate::units::BOLTZMANN * t_bath * 1e-3)).exp()
    } else {
        0.0
    };
    let p_res = |n: usize| (1.0 - boltz) * boltz.powi(n as i32);
    let truncation_warning = p_res(np - 1) > 1e-4;

    let mut rates = DMatrix::<f64>::zeros(nf, nf);
    for l in 0..nf {
        for lp in 0..nf {
            if l == lp {
                continue;
            }
            let mut total = 0.0;
            for n in 0..np {
                let i = ds.index(l, n);
                let weight = p_res(n);
                if weight == 0.0 {
                    continue;
                }
                for npr in 0..np {
                    let f = ds.index(lp, npr);
                    let w = ds.energies[f] - ds.energies[i];
                    let term = if w > 0.0 {
                        // ⟨f|a†|i⟩ = conj⟨i|a|f⟩
                        bose_occupation(w, t_bath) * ds.a_elements[(i, f)].norm_sqr()
                    } else {
                        (bose_occupation(-w, t_bath) + 1.0) * ds.a_elements[(f, i)].norm_sqr()
                    };
                    total += weight * kappa * term;
                }
            }
            rates[(l, lp)] = total;
        }
    }
    Ok(PurcellRates { rates, truncation_warning })
}

/// All relaxation limits at one flux point, as T1 in µs.
#[derive(Debug, Clone, Serialize)]
pub struct T1Point {
    pub flux: f64,
    pub qubit_frequency_ghz: f64,
    pub dielectric: f64,
    pub inductive: f64,
    pub flux_line: f64,
    pub one_over_f: f64,
    pub charge_line: f64,
    /// `None` when the dressed labeling failed at this point.
    pub purcell: Option<f64>,
    pub total: Option<f64>,
    /// Reason the Purcell channel was skipped, if it was.
    pub flag: Option<String>,
}

/// Per-channel and combined T1 at one flux point.
pub fn t1_point(params: &CircuitParams, flux: f64, trunc: Truncation) -> Result<T1Point> {
    let basis = DEFAULT_BASIS.max(4 * trunc.fluxonium);
    let spec = circuit::solve(params, flux, basis, trunc.fluxonium)?;
    let rates = [
        gamma_dielectric(&spec, params)?,
        gamma_inductive(&spec, params)?,
        gamma_flux_line(&spec, params)?,
        gamma_one_over_f(&spec, params)?,
        gamma_charge_line(&spec, params)?,
    ];
    let (purcell_rate, flag) = if params.coupling_g == 0.0 {
        (Some(0.0), None)
    } else {
        match coupled::build_dressed_from_spectrum(&spec, params.coupling_g, params.resonator_freq, trunc) {
            Ok(ds) => {
                let pr = purcell_rates(&ds, params.kappa_mhz(), params.noise.t_bath_purcell)?;
                let flag = pr.truncation_warning.then(|| "photon cutoff too low for bath temperature".to_string());
                (Some(pr.qubit_rate()), flag)
            }
            Err(e @ Error::Labeling { .. }) => (None, Some(e.to_string())),
            Err(e) => return Err(e),
        }
    };
    let base: f64 = rates.iter().sum();
    Ok(T1Point {
        flux,
        qubit_frequency_ghz: spec.qubit_frequency(),
        dielectric: 1.0 / rates[0],
        inductive: 1.0 / rates[1],
        flux_line: 1.0 / rates[2],
        one_over_f: 1.0 / rates[3],
        charge_line: 1.0 / rates[4],
        purcell: purcell_rate.map(|r| 1.0 / r),
        total: purcell_rate.map(|r| 1.0 / (base + r)),
        flag,
    })
}

/// T1(Φ) over a grid, evaluated in parallel and returned in grid order.
pub fn total_t1_curve(params: &CircuitParams, flux_grid: &[f64], trunc: Truncation) -> Result<Vec<T1Point>> {
    flux_grid.par_iter().map(|&f| t1_point(params, f, trunc)).collect()
}

/// Filter weight of 1/f noise under three echo π pulses.
pub fn echo_weight_three_pi() -> f64 {
    4.0 * 2f64.ln() - 2.25 * 3f64.ln()
}

const SLOPE_STEP: f64 = 1e-5;

/// ∂f₀₁/∂Φ in GHz per Φ0, by central difference with step 1e-5 Φ0.
pub fn flux_slope(params: &CircuitParams, flux: f64) -> Result<f64> {
    flux_slope_with_step(params, flux, SLOPE_STEP)
}

pub fn flux_slope_with_step(params: &CircuitParams, flux: f64, step: f64) -> Result<f64> {
    let q = |f: f64| -> Result<f64> { Ok(circuit::solve(params, f, DEFAULT_BASIS, 2)?.qubit_frequency()) };
    Ok((q(flux + step)? - q(flux - step)?) / (2.0 * step))
}

/// Gaussian dephasing time (µs) `1/(√W η |∂ω/∂Φ|)`; infinite at zero slope.
pub fn echo_t_phi(slope_ghz_per_phi0: f64, eta_micro: f64) -> f64 {
    let rate = echo_weight_three_pi().sqrt() * eta_micro * 1e-6 * ghz_to_rad_per_s(slope_ghz_per_phi0.abs());
    1e6 / rate
}

/// Root of `exp(−T/T_C − T²/T_φ²) = 1/e`, written so that T_φ → ∞ gives T_C
/// without cancellation.
pub fn t2e_closed_form(t_c: f64, t_phi: f64) -> f64 {
    let a = 1.0 / t_c;
    let b = 1.0 / (t_phi * t_phi);
    2.0 / (a + (a * a + 4.0 * b).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct T2Point {
    pub flux: f64,
    pub slope_ghz_per_phi0: f64,
    pub t_phi_us: f64,
    pub t2e_us: f64,
}

/// Echo decay time T2e(Φ) for `n_pi` refocusing pulses (only 3 is supported).
pub fn t2e_curve(params: &CircuitParams, flux_grid: &[f64], n_pi: u32) -> Result<Vec<T2Point>> {
    if n_pi != 3 {
        return Err(Error::Unsupported(format!(
            "echo filter weight is only known for three pi pulses, got {n_pi}"
        )));
    }
    flux_grid
        .par_iter()
        .map(|&flux| {
            let slope = if (flux - circuit::FRUSTRATION).abs() < 1e-12 {
                0.0
            } else {
                flux_slope(params, flux)?
            };
            let t_phi = echo_t_phi(slope, params.noise.eta_1f);
            Ok(T2Point {
                flux,
                slope_ghz_per_phi0: slope,
                t_phi_us: t_phi,
                t2e_us: t2e_closed_form(params.noise.t_c, t_phi),
            })
        })
        .collect()
}

/// Ramsey Gaussian dephasing time (µs), `1/(√2 η |∂ω/∂Φ| √ln(ω_ir t))`,
/// taken self-consistently at t = T_φ. Needs an explicit infrared cutoff.
pub fn ramsey_t_phi(params: &CircuitParams, flux: f64) -> Result<f64> {
    let omega_ir = params
        .noise
        .omega_ir
        .ok_or_else(|| Error::Unsupported("Ramsey dephasing needs an explicit omega_ir".into()))?;
    let slope = flux_slope(params, flux)?;
    let base = 2f64.sqrt() * params.noise.eta_1f * 1e-6 * ghz_to_rad_per_s(slope.abs());
    if base == 0.0 {
        return Ok(f64::INFINITY);
    }
    let mut t = 1.0 / base;
    for _ in 0..200 {
        let log = (omega_ir * t).ln();
        if log <= 0.0 {
            return Err(Error::Domain(format!(
                "omega_ir * t = {} must exceed 1 for the Ramsey formula",
                omega_ir * t
            )));
        }
        let next = 1.0 / (base * log.sqrt());
        if (next - t).abs() < 1e-13 * t {
            t = next;
            break;
        }
        t = next;
    }
    Ok(t * 1e6)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn w_constant() {
        assert!((echo_weight_three_pi() - 0.300_711).abs() < 1e-5);
    }

    #[test]
    fn limits_and_zeros() {
        assert_eq!(dielectric_rate(0.0, 3.0, 0.479, 1e5, 42.0), 0.0);
        assert_eq!(one_over_f_rate(0.014, 3.0, 0.132, 0.0), 0.0);
        assert_eq!(flux_line_rate(0.014, 3.0, 0.132, f64::INFINITY, 0.625, 42.0), 0.0);
        assert_eq!(charge_line_rate(0.014, 0.01, f64::INFINITY, 42.0), 0.0);
        assert_eq!(inductive_rate(0.014, 3.0, 0.132, f64::INFINITY, 42.0), 0.0);
        let cold = flux_line_rate(0.014, 3.0, 0.132, 26.0, 0.625, 0.0);
        assert!(cold.is_finite() && cold > 0.0);
    }

    #[test]
    fn dielectric_quadratic_in_matrix_element() {
        let r1 = dielectric_rate(0.014, 1.5, 0.479, 1.25e5, 42.0);
        let r2 = dielectric_rate(0.014, 3.0, 0.479, 1.25e5, 42.0);
        assert!((r2 / r1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn t2e_limits() {
        assert_eq!(t2e_closed_form(300.0, f64::INFINITY), 300.0);
        let t = t2e_closed_form(300.0, 20.0);
        assert!(((-t / 300.0 - t * t / 400.0).exp() - (-1f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn n_pi_other_than_three_is_rejected() {
        let p = CircuitParams::reference_device();
        assert!(matches!(t2e_curve(&p, &[0.5], 2), Err(Error::Unsupported(_))));
    }

    #[test]
    fn ramsey_needs_cutoff() {
        let mut p = CircuitParams::reference_device();
        assert!(matches!(ramsey_t_phi(&p, 0.45), Err(Error::Unsupported(_))));
        p.noise.omega_ir = Some(1e9);
        let t = ramsey_t_phi(&p, 0.45).unwrap();
        assert!(t > 0.0 && t.is_finite());
    }
}
