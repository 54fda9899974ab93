//! Fluxonium Hamiltonian in the harmonic-oscillator basis of the inductive
//! (L-C) subcircuit, its diagonalization, and operator matrix elements.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::CircuitParams;

/// Default number of oscillator states. The heavy regime (E_L ≪ E_C) puts the
/// low-lying wavefunctions far out in the oscillator ladder.
pub const DEFAULT_BASIS: usize = 120;

/// Flux of the frustration point, in Φ0.
pub const FRUSTRATION: f64 = 0.5;

const FRUSTRATION_TOL: f64 = 1e-12;

/// Dense fluxonium Hamiltonian at one flux point, together with the phase and
/// charge operators in the same oscillator basis.
#[derive(Debug, Clone)]
pub struct FluxoniumHamiltonian {
    pub flux: f64,
    pub basis_size: usize,
    /// Hamiltonian matrix (GHz). Real symmetric in this basis.
    pub matrix: DMatrix<f64>,
    /// Phase operator φ̂ (real symmetric).
    pub phi: DMatrix<f64>,
    /// Charge operator divided by i: n̂ = i · `n_over_i` (real antisymmetric).
    pub n_over_i: DMatrix<f64>,
    pub e_c: f64,
}

/// Oscillator length ℓ = (8 E_C / E_L)^(1/4), so that φ̂ = ℓ (a + a†)/√2.
pub fn oscillator_length(e_c: f64, e_l: f64) -> f64 {
    (8.0 * e_c / e_l).powf(0.25)
}

/// Build `H = 4E_C n̂² + ½E_L φ̂² − E_J cos(φ̂ − 2π·flux)`.
///
/// The quadratic part is exactly diagonal in the oscillator basis. The cosine
/// is evaluated densely through the spectral decomposition of the truncated
/// phase operator, which keeps `[φ̂, cos φ̂] = 0` exact after truncation.
pub fn build_hamiltonian(params: &CircuitParams, flux: f64, basis_size: usize) -> Result<FluxoniumHamiltonian> {
    if !(params.e_c > 0.0 && params.e_c.is_finite()) {
        return Err(Error::Domain(format!("e_c must be positive, got {}", params.e_c)));
    }
    if !(params.e_l > 0.0 && params.e_l.is_finite()) {
        return Err(Error::Domain(format!("e_l must be positive, got {}", params.e_l)));
    }
    // e_j = 0 is the harmonic limit and still a valid Hamiltonian.
    if !(params.e_j >= 0.0 && params.e_j.is_finite()) {
        return Err(Error::Domain(format!("e_j must be non-negative, got {}", params.e_j)));
    }
    if !flux.is_finite() {
        return Err(Error::Domain(format!("flux must be finite, got {flux}")));
    }
    if basis_size < 20 {
        return Err(Error::Domain(format!("basis_size must be at least 20, got {basis_size}")));
    }

    let n = basis_size;
    let ell = oscillator_length(params.e_c, params.e_l);
    let plasma = (8.0 * params.e_c * params.e_l).sqrt();

    let mut phi = DMatrix::<f64>::zeros(n, n);
    let mut n_over_i = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let s = (k as f64).sqrt();
        // ⟨k-1|a|k⟩ = √k
        phi[(k - 1, k)] = ell * s / 2f64.sqrt();
        phi[(k, k - 1)] = ell * s / 2f64.sqrt();
        // n̂ = i (a† − a) / (√2 ℓ)
        n_over_i[(k, k - 1)] = s / (2f64.sqrt() * ell);
        n_over_i[(k - 1, k)] = -s / (2f64.sqrt() * ell);
    }

    let mut matrix = DMatrix::<f64>::from_diagonal(&nalgebra::DVector::from_fn(n, |k, _| {
        plasma * (k as f64 + 0.5)
    }));

    if params.e_j > 0.0 {
        let eig = SymmetricEigen::try_new(phi.clone(), 1e-15, 10_000)
            .ok_or(Error::Eigensolve { dim: n, basis_hint: n })?;
        let shift = 2.0 * PI * flux;
        let v = &eig.eigenvectors;
        let weights = eig.eigenvalues.map(|x| (x - shift).cos());
        let mut scaled = v.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= weights[j];
        }
        let cosine = &scaled * v.transpose();
        matrix -= cosine * params.e_j;
    }
    // Symmetrize away rounding from the dense product.
    let matrix = (&matrix + matrix.transpose()) * 0.5;

    Ok(FluxoniumHamiltonian {
        flux,
        basis_size,
        matrix,
        phi,
        n_over_i,
        e_c: params.e_c,
    })
}

/// Eigenenergies, eigenvectors and operator matrix elements at one flux point.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub flux: f64,
    pub basis_size: usize,
    /// Ascending eigenenergies (GHz).
    pub energies: Vec<f64>,
    /// Eigenvectors as columns, in the oscillator basis.
    pub eigenvectors: DMatrix<f64>,
    /// ⟨i|φ̂|j⟩ (real symmetric).
    pub phi_elements: DMatrix<f64>,
    /// ⟨i|n̂|j⟩ / i (real antisymmetric).
    pub n_over_i_elements: DMatrix<f64>,
    pub e_c: f64,
}

impl Spectrum {
    pub fn n_levels(&self) -> usize {
        self.energies.len()
    }

    /// Transition frequency E_j − E_i (GHz).
    pub fn transition(&self, i: usize, j: usize) -> f64 {
        self.energies[j] - self.energies[i]
    }

    /// Qubit splitting E_e − E_g (GHz).
    pub fn qubit_frequency(&self) -> f64 {
        self.transition(0, 1)
    }

    pub fn phi(&self, i: usize, j: usize) -> f64 {
        self.phi_elements[(i, j)]
    }

    pub fn n(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(0.0, self.n_over_i_elements[(i, j)])
    }

    /// Charge matrix elements as a complex Hermitian matrix.
    pub fn n_matrix(&self) -> DMatrix<Complex64> {
        self.n_over_i_elements.map(|x| Complex64::new(0.0, x))
    }

    pub fn summary(&self, max_levels: usize) -> SpectrumSummary {
        let k = max_levels.min(self.n_levels());
        let grab = |m: &DMatrix<f64>| (0..k).map(|i| (0..k).map(|j| m[(i, j)]).collect()).collect();
        SpectrumSummary {
            flux: self.flux,
            basis_size: self.basis_size,
            energies_ghz: self.energies.clone(),
            qubit_frequency_ghz: self.qubit_frequency(),
            phi_elements: grab(&self.phi_elements),
            n_elements_imag: grab(&self.n_over_i_elements),
        }
    }
}

/// JSON form of a spectrum: energies plus the leading block of matrix elements.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub flux: f64,
    pub basis_size: usize,
    pub energies_ghz: Vec<f64>,
    pub qubit_frequency_ghz: f64,
    pub phi_elements: Vec<Vec<f64>>,
    /// Imaginary parts of ⟨i|n̂|j⟩ (the real parts vanish).
    pub n_elements_imag: Vec<Vec<f64>>,
}

/// Diagonalize and keep the lowest `n_levels` eigenpairs.
///
/// Each eigenvector is normalised so its largest-magnitude component is
/// positive; matrix elements are then reproducible run to run.
pub fn eigensolve(h: &FluxoniumHamiltonian, n_levels: usize) -> Result<Spectrum> {
    if n_levels == 0 || n_levels > h.basis_size / 4 {
        return Err(Error::Domain(format!(
            "n_levels = {n_levels} must be in 1..={} for basis size {}",
            h.basis_size / 4,
            h.basis_size
        )));
    }
    let dim = h.matrix.nrows();
    let eig = SymmetricEigen::try_new(h.matrix.clone(), 1e-15, 100_000).ok_or(Error::Eigensolve {
        dim,
        basis_hint: dim * 2,
    })?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order.truncate(n_levels);

    let energies: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = DMatrix::<f64>::zeros(dim, n_levels);
    for (col, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let pivot = v.iter().copied().fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        vecs.set_column(col, &(v * sign));
    }

    let phi_elements = vecs.transpose() * &h.phi * &vecs;
    let n_over_i_elements = vecs.transpose() * &h.n_over_i * &vecs;

    Ok(Spectrum {
        flux: h.flux,
        basis_size: h.basis_size,
        energies,
        eigenvectors: vecs,
        phi_elements,
        n_over_i_elements,
        e_c: h.e_c,
    })
}

/// Build and diagonalize in one go.
pub fn solve(params: &CircuitParams, flux: f64, basis_size: usize, n_levels: usize) -> Result<Spectrum> {
    eigensolve(&build_hamiltonian(params, flux, basis_size)?, n_levels)
}

/// Spin-½ reduction at the frustration point, `H/h = A/2 σx + Δ/2 σz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoLevel {
    /// Qubit splitting Δ (GHz).
    pub delta: f64,
    /// σx coefficient A (GHz) for the given flux offset.
    pub a: f64,
}

/// Δ from the spectrum and `A = 4π ⟨g|φ̂|e⟩ E_L δΦ`.
pub fn two_level_reduction(spectrum: &Spectrum, params: &CircuitParams, delta_flux: f64) -> Result<TwoLevel> {
    if (spectrum.flux - FRUSTRATION).abs() > FRUSTRATION_TOL {
        return Err(Error::Domain(format!(
            "two-level reduction needs the spectrum at flux 0.5, got {}",
            spectrum.flux
        )));
    }
    if spectrum.n_levels() < 2 {
        return Err(Error::Domain("spectrum must contain at least two levels".into()));
    }
    let phi_ge = spectrum.phi(0, 1).abs();
    Ok(TwoLevel {
        delta: spectrum.qubit_frequency(),
        a: 4.0 * PI * phi_ge * params.e_l * delta_flux,
    })
}
