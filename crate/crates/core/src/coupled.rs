//! Fluxonium coupled to its readout resonator: dressed states, labels,
//! dispersive shifts and charge-drive transition rates.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::circuit::{self, Spectrum, DEFAULT_BASIS, FRUSTRATION};
use crate::error::{Error, Result};
use crate::params::CircuitParams;

/// Truncation of the product space: fluxonium eigenstates × photon numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Truncation {
    pub fluxonium: usize,
    pub photons: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Self { fluxonium: 8, photons: 5 }
    }
}

impl Truncation {
    pub fn dim(&self) -> usize {
        self.fluxonium * self.photons
    }

    fn bare_index(&self, level: usize, photons: usize) -> usize {
        level * self.photons + photons
    }
}

/// Which operator the external charge drive couples through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum DriveOperator {
    /// Resonator quadrature a + a†: the drive line feeds the readout resonator.
    #[default]
    ResonatorQuadrature,
    /// Fluxonium charge n̂ ⊗ I.
    QubitCharge,
}

/// Exact eigenstates of the coupled Hamiltonian
/// `(E_ℓ − E_g) ⊗ I + I ⊗ ω_r a†a + g n̂ ⊗ (a + a†)`.
#[derive(Debug, Clone)]
pub struct DressedSystem {
    pub flux: f64,
    pub trunc: Truncation,
    pub coupling_g: f64,
    pub resonator_freq: f64,
    /// Bare fluxonium energies relative to the ground state (GHz).
    pub bare_energies: Vec<f64>,
    /// Ascending dressed energies (GHz), zero of energy at the bare |g0⟩.
    pub energies: Vec<f64>,
    /// `labels[k] = (ℓ, n)` for dressed index k.
    pub labels: Vec<(usize, usize)>,
    /// Dressed eigenvectors as columns in the bare product basis.
    pub eigenvectors: DMatrix<Complex64>,
    /// ⟨i|a|j⟩ in the dressed basis.
    pub a_elements: DMatrix<Complex64>,
    /// ⟨i|n̂ ⊗ I|j⟩ in the dressed basis.
    pub drive_elements: DMatrix<Complex64>,
    index: Vec<usize>,
}

/// Product of the bare fluxonium charge operator with the resonator quadrature,
/// assembled in the (ℓ, n) basis with index ℓ·photons + n.
fn product_operators(spec: &Spectrum, trunc: Truncation) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let (nf, np) = (trunc.fluxonium, trunc.photons);
    let dim = trunc.dim();
    let mut a = DMatrix::<Complex64>::zeros(dim, dim);
    let mut n_op = DMatrix::<Complex64>::zeros(dim, dim);
    for l in 0..nf {
        for p in 1..np {
            a[(trunc.bare_index(l, p - 1), trunc.bare_index(l, p))] = Complex64::new((p as f64).sqrt(), 0.0);
        }
        for m in 0..nf {
            let nlm = spec.n(l, m);
            for p in 0..np {
                n_op[(trunc.bare_index(l, p), trunc.bare_index(m, p))] = nlm;
            }
        }
    }
    (a, n_op)
}

fn check_trunc(trunc: Truncation) -> Result<()> {
    if trunc.fluxonium < 6 || trunc.photons < 3 {
        return Err(Error::Domain(format!(
            "truncation needs >= 6 fluxonium levels and >= 3 photons, got {}x{}",
            trunc.fluxonium, trunc.photons
        )));
    }
    Ok(())
}

/// Diagonalize the coupled system from an already computed fluxonium spectrum.
pub fn build_dressed_from_spectrum(
    spec: &Spectrum,
    coupling_g: f64,
    resonator_freq: f64,
    trunc: Truncation,
) -> Result<DressedSystem> {
    check_trunc(trunc)?;
    if spec.n_levels() < trunc.fluxonium {
        return Err(Error::Domain(format!(
            "spectrum has {} levels, truncation needs {}",
            spec.n_levels(),
            trunc.fluxonium
        )));
    }
    let dim = trunc.dim();
    let e0 = spec.energies[0];
    let bare_energies: Vec<f64> = spec.energies[..trunc.fluxonium].iter().map(|e| e - e0).collect();

    let (a, n_op) = product_operators(spec, trunc);
    let quad = &a + a.adjoint();
    let mut h = &n_op * &quad * Complex64::new(coupling_g, 0.0);
    for l in 0..trunc.fluxonium {
        for p in 0..trunc.photons {
            let k = trunc.bare_index(l, p);
            h[(k, k)] += Complex64::new(bare_energies[l] + resonator_freq * p as f64, 0.0);
        }
    }
    let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);

    let eig = SymmetricEigen::try_new(h, 1e-15, 100_000).ok_or(Error::Eigensolve {
        dim,
        basis_hint: spec.basis_size,
    })?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let energies: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = DMatrix::<Complex64>::zeros(dim, dim);
    for (col, &k) in order.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(k));
    }

    let mut labels = vec![(0, 0); dim];
    let mut index = vec![usize::MAX; dim];
    let mut overlaps = vec![0.0; dim];
    for k in 0..dim {
        let (bare, ov) = vecs
            .column(k)
            .iter()
            .map(|c| c.norm_sqr())
            .enumerate()
            .fold((0, -1.0), |best, (i, o)| if o > best.1 { (i, o) } else { best });
        let (level, photons) = (bare / trunc.photons, bare % trunc.photons);
        if index[bare] != usize::MAX {
            let first = index[bare];
            return Err(Error::Labeling {
                level,
                photons,
                first,
                first_overlap: overlaps[first],
                second: k,
                second_overlap: ov,
            });
        }
        index[bare] = k;
        overlaps[k] = ov;
        labels[k] = (level, photons);
    }

    let a_elements = vecs.adjoint() * &a * &vecs;
    let drive_elements = vecs.adjoint() * &n_op * &vecs;

    Ok(DressedSystem {
        flux: spec.flux,
        trunc,
        coupling_g,
        resonator_freq,
        bare_energies,
        energies,
        labels,
        eigenvectors: vecs,
        a_elements,
        drive_elements,
        index,
    })
}

/// Solve the fluxonium at `flux` and dress it with the resonator at `params.coupling_g`.
pub fn build_dressed(params: &CircuitParams, flux: f64, trunc: Truncation) -> Result<DressedSystem> {
    check_trunc(trunc)?;
    let basis = DEFAULT_BASIS.max(4 * trunc.fluxonium);
    let spec = circuit::solve(params, flux, basis, trunc.fluxonium)?;
    build_dressed_from_spectrum(&spec, params.coupling_g, params.resonator_freq, trunc)
}

impl DressedSystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Dressed index of the state labelled (ℓ, n).
    pub fn index(&self, level: usize, photons: usize) -> usize {
        assert!(level < self.trunc.fluxonium && photons < self.trunc.photons);
        self.index[self.trunc.bare_index(level, photons)]
    }

    pub fn energy(&self, level: usize, photons: usize) -> f64 {
        self.energies[self.index(level, photons)]
    }

    /// Drive matrix in the dressed basis for the chosen coupling operator.
    pub fn drive_matrix(&self, op: DriveOperator) -> DMatrix<Complex64> {
        match op {
            DriveOperator::ResonatorQuadrature => &self.a_elements + self.a_elements.adjoint(),
            DriveOperator::QubitCharge => self.drive_elements.clone(),
        }
    }
}

/// Dispersive shifts χ_ℓ (kHz) for every retained fluxonium level:
/// `[E(ℓ,1) − E(ℓ,0)] − [E(g,1) − E(g,0)]`, so χ_g = 0.
pub fn dispersive_shifts(ds: &DressedSystem) -> Result<Vec<f64>> {
    if ds.trunc.photons < 2 {
        return Err(Error::Domain("dispersive shifts need a photon cutoff of at least 2".into()));
    }
    let pull = |l: usize| ds.energy(l, 1) - ds.energy(l, 0);
    let ref_pull = pull(0);
    Ok((0..ds.trunc.fluxonium).map(|l| (pull(l) - ref_pull) * 1e6).collect())
}

/// Second-order perturbative dispersive shifts (kHz), same convention as
/// [`dispersive_shifts`], summed over the first `n_levels` fluxonium states.
pub fn perturbative_shifts(spec: &Spectrum, g: f64, resonator_freq: f64, n_levels: usize) -> Vec<f64> {
    let n_levels = n_levels.min(spec.n_levels());
    let pull = |l: usize| -> f64 {
        (0..n_levels)
            .filter(|&m| m != l)
            .map(|m| {
                let w = spec.energies[l] - spec.energies[m];
                g * g * spec.n(l, m).norm_sqr() * (1.0 / (w - resonator_freq) + 1.0 / (w + resonator_freq))
            })
            .sum()
    };
    let ref_pull = pull(0);
    (0..n_levels).map(|l| (pull(l) - ref_pull) * 1e6).collect()
}

/// Find g such that |χ_e − χ_g| equals `target_khz` at the frustration point.
/// Writes the result into `params.coupling_g` and returns it.
pub fn calibrate_coupling(params: &mut CircuitParams, target_khz: f64, trunc: Truncation) -> Result<f64> {
    if !(target_khz >= 0.0 && target_khz.is_finite()) {
        return Err(Error::Domain(format!("target χ must be >= 0, got {target_khz}")));
    }
    if target_khz == 0.0 {
        params.coupling_g = 0.0;
        return Ok(0.0);
    }
    check_trunc(trunc)?;
    let basis = DEFAULT_BASIS.max(4 * trunc.fluxonium);
    let spec = circuit::solve(params, FRUSTRATION, basis, trunc.fluxonium)?;
    let chi_e = |g: f64| -> Result<f64> {
        let ds = build_dressed_from_spectrum(&spec, g, params.resonator_freq, trunc)?;
        Ok(dispersive_shifts(&ds)?[1].abs())
    };

    let mut lo = 0.0;
    let mut hi = 0.01;
    while chi_e(hi)? < target_khz {
        lo = hi;
        hi *= 2.0;
        if hi > 1.0 {
            return Err(Error::Calibration(format!(
                "|χ_e − χ_g| stays below {target_khz} kHz for g up to 1 GHz"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let chi = chi_e(mid)?;
        if (chi - target_khz).abs() < 1e-6 * target_khz {
            lo = mid;
            hi = mid;
            break;
        }
        if chi < target_khz {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let g = 0.5 * (lo + hi);
    let achieved = chi_e(g)?;
    if (achieved - target_khz).abs() > 0.01 * target_khz {
        return Err(Error::Calibration(format!(
            "bisection ended at g = {g} with χ = {achieved} kHz, target {target_khz} kHz"
        )));
    }
    params.coupling_g = g;
    Ok(g)
}

/// Normalisation placing the |g0⟩ → |g1⟩ entry at this rate (GHz).
pub const DRIVE_NORMALIZATION_GHZ: f64 = 0.25794;

/// One-photon transition rates (MHz) between all dressed states.
#[derive(Debug, Clone)]
pub struct RateTable {
    pub labels: Vec<(usize, usize)>,
    pub rates: DMatrix<f64>,
}

fn scaled_drive(ds: &DressedSystem, normalization: f64, op: DriveOperator) -> Result<DMatrix<Complex64>> {
    if !(normalization > 0.0 && normalization.is_finite()) {
        return Err(Error::Domain(format!("normalization must be positive, got {normalization}")));
    }
    let x = ds.drive_matrix(op);
    let reference = x[(ds.index(0, 0), ds.index(0, 1))].norm();
    if reference == 0.0 {
        return Err(Error::Domain("g0 -> g1 drive element vanishes; cannot normalize".into()));
    }
    Ok(x * Complex64::new(normalization * 1e3 / reference, 0.0))
}

/// `entry(i, j) = normalization × |X_ij| / |X_{g0,g1}|` in MHz, with the drive
/// through the resonator quadrature.
pub fn drive_rate_table(ds: &DressedSystem, normalization: f64) -> Result<RateTable> {
    drive_rate_table_with(ds, normalization, DriveOperator::default())
}

pub fn drive_rate_table_with(ds: &DressedSystem, normalization: f64, op: DriveOperator) -> Result<RateTable> {
    let x = scaled_drive(ds, normalization, op)?;
    let dim = ds.dim();
    let rates = DMatrix::from_fn(dim, dim, |i, j| if i == j { 0.0 } else { 0.5 * (x[(i, j)].norm() + x[(j, i)].norm()) });
    Ok(RateTable { labels: ds.labels.clone(), rates })
}

impl RateTable {
    pub fn rate(&self, ds: &DressedSystem, from: (usize, usize), to: (usize, usize)) -> f64 {
        self.rates[(ds.index(from.0, from.1), ds.index(to.0, to.1))]
    }
}

/// A two-photon rate, or a flag that an intermediate state sits within 1 MHz
/// of the virtual level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TwoPhotonRate {
    Rate(f64),
    Divergent,
}

impl TwoPhotonRate {
    pub fn value(&self) -> Option<f64> {
        match self {
            TwoPhotonRate::Rate(r) => Some(*r),
            TwoPhotonRate::Divergent => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwoPhotonTable {
    pub labels: Vec<(usize, usize)>,
    pub entries: Vec<Vec<TwoPhotonRate>>,
}

const DIVERGENCE_MHZ: f64 = 1.0;

/// Effective two-photon rates (MHz) with the drive at half the i → f
/// transition: `|Σ_m Ω_im Ω_mf / (2 (ω_m − ω_i − ω_d))|`.
pub fn two_photon_rate_table(ds: &DressedSystem, normalization: f64) -> Result<TwoPhotonTable> {
    two_photon_rate_table_with(ds, normalization, DriveOperator::default())
}

pub fn two_photon_rate_table_with(ds: &DressedSystem, normalization: f64, op: DriveOperator) -> Result<TwoPhotonTable> {
    let x = scaled_drive(ds, normalization, op)?;
    let dim = ds.dim();
    let e_mhz: Vec<f64> = ds.energies.iter().map(|e| e * 1e3).collect();
    let mut entries = vec![vec![TwoPhotonRate::Rate(0.0); dim]; dim];
    for i in 0..dim {
        for f in 0..dim {
            if i == f {
                continue;
            }
            let w_drive = 0.5 * (e_mhz[f] - e_mhz[i]).abs();
            let (lo, hi) = if e_mhz[i] <= e_mhz[f] { (i, f) } else { (f, i) };
            let mut sum = Complex64::new(0.0, 0.0);
            let mut divergent = false;
            for m in (0..dim).filter(|&m| m != lo && m != hi) {
                let den = 2.0 * (e_mhz[m] - e_mhz[lo] - w_drive);
                if den.abs() < 2.0 * DIVERGENCE_MHZ {
                    if x[(lo, m)].norm() > 0.0 && x[(m, hi)].norm() > 0.0 {
                        divergent = true;
                    }
                    continue;
                }
                sum += x[(lo, m)] * x[(m, hi)] / den;
            }
            entries[i][f] = if divergent { TwoPhotonRate::Divergent } else { TwoPhotonRate::Rate(sum.norm()) };
        }
    }
    Ok(TwoPhotonTable { labels: ds.labels.clone(), entries })
}

/// Short name of a dressed label: g, e, f, h for the first four fluxonium
/// levels, then l4, l5, ..., followed by the photon number.
pub fn state_name(level: usize, photons: usize) -> String {
    const NAMES: [&str; 4] = ["g", "e", "f", "h"];
    match NAMES.get(level) {
        Some(n) => format!("{n}{photons}"),
        None => format!("l{level}_{photons}"),
    }
}

/// The six states tabulated for drive rates: g0, e0, f0, h0, g1, e1.
pub const TABLE_STATES: [(usize, usize); 6] = [(0, 0), (1, 0), (2, 0), (3, 0), (0, 1), (1, 1)];

/// JSON export of a dressed system.
#[derive(Debug, Clone, Serialize)]
pub struct DressedSummary {
    pub flux: f64,
    pub coupling_g_ghz: f64,
    pub truncation: Truncation,
    pub states: Vec<String>,
    pub energies_ghz: Vec<f64>,
    pub chi_khz: Vec<f64>,
    pub table_states: Vec<String>,
    pub one_photon_mhz: Vec<Vec<f64>>,
    pub two_photon_mhz: Vec<Vec<Option<f64>>>,
}

pub fn summarize(ds: &DressedSystem, normalization: f64) -> Result<DressedSummary> {
    let one = drive_rate_table(ds, normalization)?;
    let two = two_photon_rate_table(ds, normalization)?;
    let idx: Vec<usize> = TABLE_STATES.iter().map(|&(l, n)| ds.index(l, n)).collect();
    Ok(DressedSummary {
        flux: ds.flux,
        coupling_g_ghz: ds.coupling_g,
        truncation: ds.trunc,
        states: ds.labels.iter().map(|&(l, n)| state_name(l, n)).collect(),
        energies_ghz: ds.energies.clone(),
        chi_khz: dispersive_shifts(ds)?,
        table_states: TABLE_STATES.iter().map(|&(l, n)| state_name(l, n)).collect(),
        one_photon_mhz: idx.iter().map(|&i| idx.iter().map(|&j| one.rates[(i, j)]).collect()).collect(),
        two_photon_mhz: idx
            .iter()
            .map(|&i| idx.iter().map(|&j| two.entries[i][j].value()).collect())
            .collect(),
    })
}
