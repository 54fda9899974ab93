//! Device parameters and the flat key-value config format they are read from.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Noise-channel constants used by the relaxation and dephasing models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Capacitor quality factor (inverse dielectric loss tangent).
    pub q_cap: f64,
    /// Superinductor quality factor.
    pub q_ind: f64,
    /// Quality factor of the spurious charge coupling to the drive line.
    pub q_c: f64,
    /// Johnson-Nyquist resistance on the fast flux line (Ohm).
    pub r_fluxline: f64,
    /// Flux-line mutual inductance in Φ0 per mA.
    pub mutual_m: f64,
    /// 1/f flux-noise amplitude in µΦ0.
    pub eta_1f: f64,
    /// Bath temperature for the qubit's own loss channels (mK).
    pub t_bath_diel: f64,
    /// Bath temperature seen by the resonator for Purcell rates (mK).
    pub t_bath_purcell: f64,
    /// Flux-insensitive echo decay time at the frustration point (µs).
    pub t_c: f64,
    /// Infrared cutoff for the Ramsey dephasing formula (rad/s). No default.
    pub omega_ir: Option<f64>,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            q_cap: 1.0 / 8e-6,
            q_ind: 5e9,
            q_c: 7.4e4,
            r_fluxline: 26.0,
            mutual_m: 1.0 / 1.6,
            eta_1f: 5.21,
            t_bath_diel: 42.0,
            t_bath_purcell: 60.0,
            t_c: 300.0,
            omega_ir: None,
        }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("q_cap", self.q_cap),
            ("q_ind", self.q_ind),
            ("q_c", self.q_c),
            ("r_fluxline", self.r_fluxline),
            ("mutual_m", self.mutual_m),
            ("eta_1f", self.eta_1f),
            ("t_c", self.t_c),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        for (name, t) in [("t_bath_diel", self.t_bath_diel), ("t_bath_purcell", self.t_bath_purcell)] {
            if !(t > 1.0 && t < 1000.0) {
                return Err(Error::Domain(format!("{name} must lie in (1, 1000) mK, got {t}")));
            }
        }
        if let Some(w) = self.omega_ir {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Domain(format!("omega_ir must be positive, got {w}")));
            }
        }
        Ok(())
    }
}

/// Fluxonium circuit, readout resonator and noise constants.
///
/// Energies are `E/h` in GHz. `coupling_g` is the charge coupling between the
/// fluxonium and the resonator; zero means "not yet calibrated".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    pub e_c: f64,
    pub e_j: f64,
    pub e_l: f64,
    pub resonator_freq: f64,
    pub resonator_q: f64,
    pub coupling_g: f64,
    pub noise: NoiseParams,
}

impl CircuitParams {
    /// The reported heavy-fluxonium device, with the coupling left uncalibrated.
    pub fn reference_device() -> Self {
        Self {
            e_c: 0.479,
            e_j: 3.395,
            e_l: 0.132,
            resonator_freq: 5.7,
            resonator_q: 600.0,
            coupling_g: 0.0,
            noise: NoiseParams::default(),
        }
    }

    pub fn new(e_c: f64, e_j: f64, e_l: f64, resonator_freq: f64, resonator_q: f64) -> Result<Self> {
        let p = Self {
            e_c,
            e_j,
            e_l,
            resonator_freq,
            resonator_q,
            coupling_g: 0.0,
            noise: NoiseParams::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_coupling(mut self, g: f64) -> Self {
        self.coupling_g = g;
        self
    }

    /// Full invariant check: positivity and the double-well condition e_j > e_l.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("e_c", self.e_c),
            ("e_j", self.e_j),
            ("e_l", self.e_l),
            ("resonator_freq", self.resonator_freq),
            ("resonator_q", self.resonator_q),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.e_j <= self.e_l {
            return Err(Error::Domain(format!(
                "e_j = {} must exceed e_l = {} for a double-well potential",
                self.e_j, self.e_l
            )));
        }
        if !(self.coupling_g >= 0.0 && self.coupling_g.is_finite()) {
            return Err(Error::Domain(format!("coupling_g must be >= 0, got {}", self.coupling_g)));
        }
        self.noise.validate()
    }

    /// Resonator energy decay rate κ = ω_r / Q, in MHz (equivalently 1/µs).
    pub fn kappa_mhz(&self) -> f64 {
        self.resonator_freq * 1e3 / self.resonator_q
    }
}

/// Contents of a device config file: the circuit plus the gate and readout
/// constants that are treated as device truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceConfig {
    pub circuit: CircuitParams,
    /// Triangular spike width (ns).
    pub spike_width_ns: f64,
    /// Target |χ_e − χ_g| for coupling calibration (kHz).
    pub target_chi_khz: f64,
    /// Measured qubit splitting used for gate timing (GHz); the computed
    /// spectrum value is used when absent.
    pub gate_delta_ghz: Option<f64>,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            circuit: CircuitParams::reference_device(),
            spike_width_ns: 4.76,
            target_chi_khz: 60.0,
            gate_delta_ghz: None,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FlatConfig {
    e_c: f64,
    e_j: f64,
    e_l: f64,
    resonator_freq: f64,
    resonator_q: f64,
    coupling_g: Option<f64>,
    q_cap: Option<f64>,
    q_ind: Option<f64>,
    q_c: Option<f64>,
    r_fluxline: Option<f64>,
    mutual_m: Option<f64>,
    eta_1f: Option<f64>,
    t_bath_diel: Option<f64>,
    t_bath_purcell: Option<f64>,
    t_c: Option<f64>,
    omega_ir: Option<f64>,
    spike_width_ns: Option<f64>,
    target_chi_khz: Option<f64>,
    gate_delta_ghz: Option<f64>,
}

impl DeviceConfig {
    /// Parse a flat `key = value` file. Lines starting with `#` are comments.
    /// The five circuit keys are required; noise constants fall back to defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let flat: FlatConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let d = NoiseParams::default();
        let noise = NoiseParams {
            q_cap: flat.q_cap.unwrap_or(d.q_cap),
            q_ind: flat.q_ind.unwrap_or(d.q_ind),
            q_c: flat.q_c.unwrap_or(d.q_c),
            r_fluxline: flat.r_fluxline.unwrap_or(d.r_fluxline),
            mutual_m: flat.mutual_m.unwrap_or(d.mutual_m),
            eta_1f: flat.eta_1f.unwrap_or(d.eta_1f),
            t_bath_diel: flat.t_bath_diel.unwrap_or(d.t_bath_diel),
            t_bath_purcell: flat.t_bath_purcell.unwrap_or(d.t_bath_purcell),
            t_c: flat.t_c.unwrap_or(d.t_c),
            omega_ir: flat.omega_ir,
        };
        let circuit = CircuitParams {
            e_c: flat.e_c,
            e_j: flat.e_j,
            e_l: flat.e_l,
            resonator_freq: flat.resonator_freq,
            resonator_q: flat.resonator_q,
            coupling_g: flat.coupling_g.unwrap_or(0.0),
            noise,
        };
        circuit.validate().map_err(|e| Error::Config(e.to_string()))?;
        let cfg = Self {
            circuit,
            spike_width_ns: flat.spike_width_ns.unwrap_or(4.76),
            target_chi_khz: flat.target_chi_khz.unwrap_or(60.0),
            gate_delta_ghz: flat.gate_delta_ghz,
        };
        if !(cfg.spike_width_ns > 0.0) {
            return Err(Error::Config(format!("spike_width_ns must be positive, got {}", cfg.spike_width_ns)));
        }
        if !(cfg.target_chi_khz >= 0.0) {
            return Err(Error::Config(format!("target_chi_khz must be >= 0, got {}", cfg.target_chi_khz)));
        }
        if let Some(d) = cfg.gate_delta_ghz {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Config(format!("gate_delta_ghz must be positive, got {d}")));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical flat rendering; identical configs render identically, so this
    /// is what gets hashed into output headers.
    pub fn canonical(&self) -> String {
        let c = &self.circuit;
        let n = &c.noise;
        let mut lines = vec![
            format!("e_c = {:e}", c.e_c),
            format!("e_j = {:e}", c.e_j),
            format!("e_l = {:e}", c.e_l),
            format!("resonator_freq = {:e}", c.resonator_freq),
            format!("resonator_q = {:e}", c.resonator_q),
            format!("coupling_g = {:e}", c.coupling_g),
            format!("q_cap = {:e}", n.q_cap),
            format!("q_ind = {:e}", n.q_ind),
            format!("q_c = {:e}", n.q_c),
            format!("r_fluxline = {:e}", n.r_fluxline),
            format!("mutual_m = {:e}", n.mutual_m),
            format!("eta_1f = {:e}", n.eta_1f),
            format!("t_bath_diel = {:e}", n.t_bath_diel),
            format!("t_bath_purcell = {:e}", n.t_bath_purcell),
            format!("t_c = {:e}", n.t_c),
        ];
        if let Some(w) = n.omega_ir {
            lines.push(format!("omega_ir = {w:e}"));
        }
        lines.push(format!("spike_width_ns = {:e}", self.spike_width_ns));
        lines.push(format!("target_chi_khz = {:e}", self.target_chi_khz));
        if let Some(d) = self.gate_delta_ghz {
            lines.push(format!("gate_delta_ghz = {d:e}"));
        }
        lines.join("\n") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAPER: &str = "
# heavy fluxonium
e_c = 0.479
e_j = 3.395
e_l = 0.132
resonator_freq = 5.7
resonator_q = 600
";

    #[test]
    fn parses_minimal_config_with_defaults() {
        let cfg = DeviceConfig::parse(PAPER).unwrap();
        assert_eq!(cfg.circuit.e_j, 3.395);
        assert_eq!(cfg.circuit.noise, NoiseParams::default());
        assert_eq!(cfg.spike_width_ns, 4.76);
        assert!((cfg.circuit.kappa_mhz() - 9.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_single_well() {
        let text = PAPER.replace("e_j = 3.395", "e_j = 0.1");
        assert!(matches!(DeviceConfig::parse(&text), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_unknown_key_and_bad_temperature() {
        assert!(DeviceConfig::parse(&format!("{PAPER}\nbogus = 1\n")).is_err());
        assert!(DeviceConfig::parse(&format!("{PAPER}\nt_bath_diel = 0.5\n")).is_err());
        assert!(DeviceConfig::parse("e_c = 0.479\n").is_err());
    }

    #[test]
    fn canonical_roundtrips() {
        let cfg = DeviceConfig::parse(PAPER).unwrap();
        let again = DeviceConfig::parse(&cfg.canonical()).unwrap();
        assert_eq!(cfg, again);
        let pinned = DeviceConfig::parse(&format!("{PAPER}gate_delta_ghz = 0.014\n")).unwrap();
        assert_eq!(DeviceConfig::parse(&pinned.canonical()).unwrap(), pinned);
    }
}
