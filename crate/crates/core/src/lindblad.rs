//! Lindblad master-equation integration (adaptive Dormand–Prince 5(4)) with
//! two drivers: the two-tone reset of the dressed fluxonium and the
//! decoherence-limited error of flux-pulse gates.
//!
//! The engine is unit-agnostic: Hamiltonian entries are frequencies (cycles
//! per time unit, the generator is −2πi[H, ρ]) and rates are per time unit.
//! Reset runs in µs and MHz, gates in ns and GHz.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::coupled::{self, DressedSystem, DriveOperator, Truncation, DRIVE_NORMALIZATION_GHZ};
use crate::error::{Error, Result};
use crate::gates::{self, PulseProgram, Segment, State, Unitary};
use crate::params::CircuitParams;

pub type CMatrix = DMatrix<Complex64>;

/// Time dependence of one operator entry.
#[derive(Clone)]
pub enum Coefficient {
    Constant,
    /// `exp(2πi f t)`
    Oscillating(f64),
    /// Real envelope.
    Envelope(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Coefficient {
    fn at(&self, t: f64) -> Complex64 {
        match self {
            Coefficient::Constant => Complex64::new(1.0, 0.0),
            Coefficient::Oscillating(f) => Complex64::from_polar(1.0, 2.0 * PI * f * t),
            Coefficient::Envelope(g) => Complex64::new(g(t), 0.0),
        }
    }
}

/// Sparse time-dependent operator, `Σ value · coeff(t) |row⟩⟨col|`.
#[derive(Clone)]
pub struct TimeOperator {
    pub dim: usize,
    pub entries: Vec<(usize, usize, Complex64, Coefficient)>,
}

impl TimeOperator {
    pub fn zero(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    pub fn constant(m: &CMatrix) -> Self {
        let mut op = Self::zero(m.nrows());
        op.add_dense(m, Coefficient::Constant);
        op
    }

    /// Add every nonzero entry of `m` with a shared time dependence.
    pub fn add_dense(&mut self, m: &CMatrix, coeff: Coefficient) {
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if m[(i, j)] != Complex64::new(0.0, 0.0) {
                    self.entries.push((i, j, m[(i, j)], coeff.clone()));
                }
            }
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: Complex64, coeff: Coefficient) {
        self.entries.push((row, col, value, coeff));
    }

    pub fn eval_into(&self, t: f64, out: &mut CMatrix) {
        out.fill(Complex64::new(0.0, 0.0));
        for (i, j, v, c) in &self.entries {
            out[(*i, *j)] += v * c.at(t);
        }
    }

    /// Entries with their coefficients applied; repeated positions are not merged.
    fn eval_sparse(&self, t: f64, out: &mut Vec<(usize, usize, Complex64)>) {
        out.clear();
        out.extend(self.entries.iter().map(|(i, j, v, c)| (*i, *j, v * c.at(t))));
    }

    pub fn at(&self, t: f64) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        self.eval_into(t, &mut m);
        m
    }
}

/// Collapse operator L with rate γ, entering as γ D[L].
#[derive(Clone)]
pub struct Channel {
    pub op: TimeOperator,
    pub rate: f64,
}

#[derive(Clone)]
pub struct LindbladSpec {
    pub hamiltonian: TimeOperator,
    pub channels: Vec<Channel>,
    pub initial: CMatrix,
    pub t_final: f64,
    pub sample_interval: f64,
    /// Times where the generator has kinks; steps never straddle them.
    pub breakpoints: Vec<f64>,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl LindbladSpec {
    pub fn new(hamiltonian: TimeOperator, channels: Vec<Channel>, initial: CMatrix, t_final: f64, sample_interval: f64) -> Self {
        Self {
            hamiltonian,
            channels,
            initial,
            t_final,
            sample_interval,
            breakpoints: Vec::new(),
            rtol: 1e-9,
            atol: 1e-11,
            max_steps: 50_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.hamiltonian.dim;
        if self.initial.nrows() != n || self.initial.ncols() != n {
            return Err(Error::Domain("initial state dimension does not match the Hamiltonian".into()));
        }
        for c in &self.channels {
            if !(c.rate >= 0.0 && c.rate.is_finite()) {
                return Err(Error::Domain(format!("collapse rate must be >= 0, got {}", c.rate)));
            }
            if c.op.dim != n {
                return Err(Error::Domain("collapse operator dimension mismatch".into()));
            }
        }
        let herm = (&self.initial - self.initial.adjoint()).camax();
        if herm > 1e-10 {
            return Err(Error::Domain(format!("initial state not Hermitian (deviation {herm:e})")));
        }
        let tr = self.initial.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::Domain(format!("initial state trace {tr} is not 1")));
        }
        let min = min_eigenvalue(&self.initial);
        if min < -1e-10 {
            return Err(Error::Domain(format!("initial state not positive (min eigenvalue {min:e})")));
        }
        if !(self.t_final >= 0.0 && self.sample_interval > 0.0) {
            return Err(Error::Domain("t_final must be >= 0 and sample_interval > 0".into()));
        }
        Ok(())
    }
}

pub fn min_eigenvalue(rho: &CMatrix) -> f64 {
    let h = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    SymmetricEigen::new(h).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Sampled trajectory with trace and positivity diagnostics.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
    pub max_trace_error: f64,
    pub min_eigenvalue: f64,
    pub steps: usize,
}

impl Evolution {
    pub fn final_state(&self) -> &CMatrix {
        self.states.last().expect("at least the initial sample")
    }

    pub fn populations(&self, k: usize) -> Vec<f64> {
        self.states.iter().map(|r| r[(k, k)].re).collect()
    }
}

struct Workspace {
    h: Vec<(usize, usize, Complex64)>,
    l: Vec<(usize, usize, Complex64)>,
    x: CMatrix,
    m: CMatrix,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self { h: Vec::new(), l: Vec::new(), x: CMatrix::zeros(n, n), m: CMatrix::zeros(n, n) }
    }
}

/// `out += w · S · a` for sparse S.
fn sparse_left(s: &[(usize, usize, Complex64)], a: &CMatrix, w: Complex64, out: &mut CMatrix) {
    let n = a.ncols();
    for &(i, j, v) in s {
        let f = w * v;
        for k in 0..n {
            out[(i, k)] += f * a[(j, k)];
        }
    }
}

fn rhs(spec: &LindbladSpec, t: f64, rho: &CMatrix, ws: &mut Workspace, out: &mut CMatrix) {
    // ρ stays Hermitian, so ρH = (Hρ)† and ρL†L = (L†Lρ)†. The operators are
    // sparse; every product below is sparse times dense.
    let n = rho.nrows();
    let zero = Complex64::new(0.0, 0.0);
    spec.hamiltonian.eval_sparse(t, &mut ws.h);
    // −2πi (Hρ − ρH)
    ws.m.fill(zero);
    sparse_left(&ws.h, rho, Complex64::new(0.0, -2.0 * PI), &mut ws.m);
    ws.m.adjoint_to(out);
    *out += &ws.m;
    for c in &spec.channels {
        if c.rate == 0.0 {
            continue;
        }
        c.op.eval_sparse(t, &mut ws.l);
        let g = c.rate;
        // x = Lρ
        ws.x.fill(zero);
        sparse_left(&ws.l, rho, Complex64::new(1.0, 0.0), &mut ws.x);
        // out += γ x L†, (x L†)_km = Σ_j x_kj conj(L_mj)
        for &(m, j, v) in &ws.l {
            let f = v.conj() * g;
            for k in 0..n {
                out[(k, m)] += ws.x[(k, j)] * f;
            }
        }
        // m = −γ/2 L† x, (L† x)_jk = Σ_i conj(L_ij) x_ik
        ws.m.fill(zero);
        for &(i, j, v) in &ws.l {
            let f = v.conj() * (-0.5 * g);
            for k in 0..n {
                ws.m[(j, k)] += f * ws.x[(i, k)];
            }
        }
        for a in 0..n {
            for b in 0..n {
                out[(a, b)] += ws.m[(a, b)] + ws.m[(b, a)].conj();
            }
        }
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate the master equation, sampling every `sample_interval` and at
/// `t_final`.
pub fn evolve(spec: &LindbladSpec) -> Result<Evolution> {
    spec.validate()?;
    let n = spec.hamiltonian.dim;
    let mut ws = Workspace::new(n);

    // Stops: samples and breakpoints, merged.
    let mut samples = Vec::new();
    let n_samples = (spec.t_final / spec.sample_interval).floor() as usize;
    for k in 1..=n_samples {
        samples.push(k as f64 * spec.sample_interval);
    }
    if samples.last().map_or(true, |&s| (spec.t_final - s).abs() > 1e-12 * spec.t_final.max(1.0)) && spec.t_final > 0.0 {
        samples.push(spec.t_final);
    }
    let mut stops: Vec<(f64, bool)> = samples.iter().map(|&s| (s, true)).collect();
    for &b in &spec.breakpoints {
        if b > 0.0 && b < spec.t_final {
            stops.push((b, false));
        }
    }
    stops.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut rho = spec.initial.clone();
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut states = vec![rho.clone()];
    let mut max_trace_error = (rho.trace().re - 1.0).abs();
    let mut min_eig = min_eigenvalue(&rho);

    let mut k: Vec<CMatrix> = (0..7).map(|_| CMatrix::zeros(n, n)).collect();
    let mut stage = CMatrix::zeros(n, n);
    let mut err = CMatrix::zeros(n, n);
    let mut h = (spec.t_final / 100.0).max(1e-12);
    let mut steps = 0usize;
    let mut fsal_valid = false;

    for &(stop, is_sample) in &stops {
        while t < stop {
            if steps >= spec.max_steps {
                return Err(Error::Integrator {
                    time_ns: t,
                    step: h,
                    steps,
                    reason: format!("exceeded {} steps", spec.max_steps),
                });
            }
            let last = t + h >= stop - 1e-14 * stop.max(1.0);
            let step = if last { stop - t } else { h };
            if !fsal_valid {
                rhs(spec, t, &rho, &mut ws, &mut k[0]);
            }
            for s in 1..7 {
                stage.copy_from(&rho);
                for (j, a) in A[s].iter().enumerate().take(s) {
                    if *a != 0.0 {
                        let w = a * step;
                        stage.zip_apply(&k[j], |x, y| *x += y * w);
                    }
                }
                let mut ks = std::mem::replace(&mut k[s], CMatrix::zeros(0, 0));
                rhs(spec, t + C[s] * step, &stage, &mut ws, &mut ks);
                k[s] = ks;
            }
            // stage holds the 5th-order solution (row 7 of A equals B5).
            err.fill(Complex64::new(0.0, 0.0));
            for s in 0..7 {
                let d = B5[s] - B4[s];
                if d != 0.0 {
                    let w = d * step;
                    err.zip_apply(&k[s], |x, y| *x += y * w);
                }
            }
            let scale = spec.atol + spec.rtol * rho.camax().max(stage.camax());
            let err_norm = err.iter().map(|z| z.norm()).fold(0.0, f64::max) / scale;
            steps += 1;
            if err_norm <= 1.0 || step < 1e-14 * stop.max(1.0) {
                t = if last { stop } else { t + step };
                rho.copy_from(&stage);
                // FSAL: the last stage is f(t + h, y_new).
                k.swap(0, 6);
                fsal_valid = true;
                let factor = if err_norm == 0.0 { 5.0 } else { (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || factor < 1.0 {
                    h = step * factor;
                }
            } else {
                let factor = (0.9 * err_norm.powf(-0.2)).clamp(0.1, 1.0);
                h = step * factor;
                if !h.is_finite() || h < 1e-15 * stop.max(1.0) {
                    return Err(Error::Integrator {
                        time_ns: t,
                        step: h,
                        steps,
                        reason: format!("step size underflow (error norm {err_norm:e})"),
                    });
                }
            }
        }
        if is_sample {
            max_trace_error = max_trace_error.max((rho.trace().re - 1.0).abs());
            min_eig = min_eig.min(min_eigenvalue(&rho));
            times.push(t);
            states.push(rho.clone());
        }
    }

    Ok(Evolution {
        times,
        states,
        max_trace_error,
        min_eigenvalue: min_eig,
        steps,
    })
}

pub fn pure_density(psi: &[Complex64]) -> CMatrix {
    let n = psi.len();
    CMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj())
}

// ---------------------------------------------------------------- reset --

/// Initial condition of the reset run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum ResetStart {
    /// Equal mixture of |g0⟩ and |e0⟩.
    #[default]
    ThermalMix,
    Ground,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResetConfig {
    pub trunc: Truncation,
    /// Rabi frequency (MHz) of the g0 → h0 tone; π time is 1/(2Ω).
    pub rabi_g0h0_mhz: f64,
    /// Rabi frequency (MHz) of the h0 → e1 tone.
    pub rabi_h0e1_mhz: f64,
    pub duration_us: f64,
    /// Resonator decay (1/µs); `None` takes ω_r/Q from the circuit.
    pub kappa: Option<f64>,
    /// Terms detuned by more than this from a tone (GHz) are dropped.
    pub cutoff_ghz: f64,
    pub sample_ns: f64,
    pub start: ResetStart,
    /// Place each tone on its AC-Stark-shifted resonance.
    pub stark_compensate: bool,
}

impl Default for ResetConfig {
    fn default() -> Self {
        Self {
            trunc: Truncation { fluxonium: 8, photons: 3 },
            rabi_g0h0_mhz: 6.25,
            rabi_h0e1_mhz: 3.0,
            duration_us: 15.0,
            kappa: None,
            cutoff_ghz: 1.0,
            sample_ns: 10.0,
            start: ResetStart::ThermalMix,
            stark_compensate: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResetResult {
    pub times_us: Vec<f64>,
    /// Dressed labels in the order of `populations` columns.
    pub labels: Vec<String>,
    /// `populations[t][k]`
    pub populations: Vec<Vec<f64>>,
    pub p_e0: Vec<f64>,
    /// P(e0) in the drive-dressed frame: what a measurement after ramping the
    /// tones off would see. Used for `final_e0` and `crossing_us`.
    pub p_e0_dressed: Vec<f64>,
    /// Applied tone frequencies (GHz).
    pub tones_ghz: [f64; 2],
    pub final_e0: f64,
    /// First time P(e0) reaches 0.95, if it does.
    pub crossing_us: Option<f64>,
    pub max_trace_error: f64,
    pub min_eigenvalue: f64,
}

struct DriveTerm {
    i: usize,
    j: usize,
    value: Complex64,
    det_ghz: f64,
    tone: usize,
}

/// Kept one-tone terms ⟨i|H_I|j⟩ = ε X_ij exp(2πi (E_i − E_j + ω) t) for i below j.
fn drive_terms(ds: &DressedSystem, x: &CMatrix, tones: &[(f64, f64)], cutoff_ghz: f64) -> Vec<DriveTerm> {
    let dim = ds.dim();
    let mut out = Vec::new();
    for (tone, &(freq, eps)) in tones.iter().enumerate() {
        if eps == 0.0 {
            continue;
        }
        for i in 0..dim {
            for j in 0..dim {
                if ds.energies[i] >= ds.energies[j] || x[(i, j)].norm() < 1e-14 {
                    continue;
                }
                let det_ghz = ds.energies[i] - ds.energies[j] + freq;
                if det_ghz.abs() < cutoff_ghz {
                    out.push(DriveTerm { i, j, value: x[(i, j)] * eps, det_ghz, tone });
                }
            }
        }
    }
    out
}

/// Tone frequencies (GHz) and their amplitudes ε for the reset drives. With
/// `stark_compensate`, each tone sits on its transition as shifted by the
/// off-resonant terms of both tones (second order, iterated).
pub fn reset_tones(ds: &DressedSystem, cfg: &ResetConfig) -> Result<[(f64, f64); 2]> {
    let x = ds.drive_matrix(DriveOperator::ResonatorQuadrature);
    let pairs = [(ds.index(0, 0), ds.index(3, 0)), (ds.index(3, 0), ds.index(1, 1))];
    let rabi = [cfg.rabi_g0h0_mhz, cfg.rabi_h0e1_mhz];
    let mut tones = [(0.0, 0.0); 2];
    for k in 0..2 {
        let (a, b) = pairs[k];
        let addressed = x[(a, b)].norm();
        if rabi[k] != 0.0 && addressed == 0.0 {
            return Err(Error::Domain("addressed transition has a vanishing drive element".into()));
        }
        // Off-diagonal H element on the addressed pair is Ω/2.
        let eps = if rabi[k] == 0.0 { 0.0 } else { rabi[k] / (2.0 * addressed) };
        tones[k] = (ds.energies[b] - ds.energies[a], eps);
    }
    if !cfg.stark_compensate {
        return Ok(tones);
    }
    for _ in 0..8 {
        let mut shift = vec![0.0; ds.dim()];
        for t in drive_terms(ds, &x, &tones, cfg.cutoff_ghz) {
            if pairs[t.tone] == (t.i, t.j) {
                continue;
            }
            // MHz; the lower member moves by |V|²/Δ.
            let d = t.value.norm_sqr() / (t.det_ghz * 1e3);
            shift[t.i] += d;
            shift[t.j] -= d;
        }
        for k in 0..2 {
            let (a, b) = pairs[k];
            tones[k].0 = ds.energies[b] - ds.energies[a] + (shift[b] - shift[a]) * 1e-3;
        }
    }
    Ok(tones)
}

/// Terms on the driven ladders g_n ↔ h_n (tone 1) and h_n ↔ e_(n+1) (tone 2).
fn on_ladder(ds: &DressedSystem, t: &DriveTerm) -> bool {
    let ((li, ni), (lj, nj)) = (ds.labels[t.i], ds.labels[t.j]);
    match t.tone {
        0 => li == 0 && lj == 3 && ni == nj,
        _ => li == 3 && lj == 1 && nj == ni + 1,
    }
}

/// First-order frame that removes the off-resonant drive terms. Column k of
/// the returned unitary is the drive-dressed image of |k⟩, i.e. the state that
/// maps back to |k⟩ once the tones are ramped off.
fn dressing_frame(ds: &DressedSystem, terms: &[DriveTerm], t_us: f64) -> CMatrix {
    let mut s = CMatrix::zeros(ds.dim(), ds.dim());
    for term in terms.iter().filter(|term| !on_ladder(ds, term)) {
        let f = term.det_ghz * 1e3;
        let v = term.value * Complex64::from_polar(1.0, 2.0 * PI * f * t_us) / f;
        s[(term.i, term.j)] -= v;
        s[(term.j, term.i)] += v.conj();
    }
    s.exp()
}

/// Interaction-picture generator for the two-tone reset. Returns the
/// Hamiltonian (MHz) and the resonator jump operator (rotating at ω_r removed).
pub fn reset_operators(ds: &DressedSystem, cfg: &ResetConfig) -> Result<(TimeOperator, TimeOperator)> {
    let dim = ds.dim();
    let x = ds.drive_matrix(DriveOperator::ResonatorQuadrature);
    let tones = reset_tones(ds, cfg)?;
    let mut h = TimeOperator::zero(dim);
    for t in drive_terms(ds, &x, &tones, cfg.cutoff_ghz) {
        h.push(t.i, t.j, t.value, Coefficient::Oscillating(t.det_ghz * 1e3));
        h.push(t.j, t.i, t.value.conj(), Coefficient::Oscillating(-t.det_ghz * 1e3));
    }
    let mut a = TimeOperator::zero(dim);
    for i in 0..dim {
        for j in 0..dim {
            let v = ds.a_elements[(i, j)];
            if v.norm() < 1e-14 {
                continue;
            }
            // a_I(t)_ij = a_ij exp(2πi (E_i − E_j) t); strip the common e^{−2πi ω_r t}.
            let det_ghz = ds.energies[i] - ds.energies[j] + ds.resonator_freq;
            if det_ghz.abs() < cfg.cutoff_ghz {
                a.push(i, j, v, Coefficient::Oscillating(det_ghz * 1e3));
            }
        }
    }
    Ok((h, a))
}

/// Simulate the driven reset with resonator loss. Needs a calibrated coupling.
pub fn simulate_reset(params: &CircuitParams, cfg: &ResetConfig) -> Result<ResetResult> {
    if params.coupling_g <= 0.0 {
        return Err(Error::Domain("reset needs a calibrated coupling_g > 0".into()));
    }
    if !(cfg.duration_us > 0.0 && cfg.sample_ns > 0.0 && cfg.cutoff_ghz > 0.0) {
        return Err(Error::Domain("duration, sample interval and cutoff must be positive".into()));
    }
    if cfg.rabi_g0h0_mhz < 0.0 || cfg.rabi_h0e1_mhz < 0.0 {
        return Err(Error::Domain("drive Rabi frequencies must be >= 0".into()));
    }
    let ds = coupled::build_dressed(params, 0.5, cfg.trunc)?;
    let (h, a) = reset_operators(&ds, cfg)?;
    let kappa = cfg.kappa.unwrap_or_else(|| params.kappa_mhz());

    let dim = ds.dim();
    let mut rho0 = CMatrix::zeros(dim, dim);
    let (g0, e0) = (ds.index(0, 0), ds.index(1, 0));
    match cfg.start {
        ResetStart::ThermalMix => {
            rho0[(g0, g0)] = Complex64::new(0.5, 0.0);
            rho0[(e0, e0)] = Complex64::new(0.5, 0.0);
        }
        ResetStart::Ground => rho0[(g0, g0)] = Complex64::new(1.0, 0.0),
    }
    // Tones switched on adiabatically: start from the dressed image.
    let x = ds.drive_matrix(DriveOperator::ResonatorQuadrature);
    let tones = reset_tones(&ds, cfg)?;
    let terms = drive_terms(&ds, &x, &tones, cfg.cutoff_ghz);
    let u0 = dressing_frame(&ds, &terms, 0.0);
    let rho0 = &u0 * rho0 * u0.adjoint();
    let rho0 = (&rho0 + rho0.adjoint()) * Complex64::new(0.5, 0.0);
    let mut spec = LindbladSpec::new(h, vec![Channel { op: a, rate: kappa }], rho0, cfg.duration_us, cfg.sample_ns * 1e-3);
    spec.rtol = 1e-7;
    spec.atol = 1e-9;
    let ev = evolve(&spec)?;

    let p_e0 = ev.populations(e0);
    let p_e0_dressed: Vec<f64> = ev
        .times
        .iter()
        .zip(&ev.states)
        .map(|(&t, rho)| {
            let u = dressing_frame(&ds, &terms, t).column(e0).into_owned();
            (u.adjoint() * rho * &u)[(0, 0)].re
        })
        .collect();
    let crossing_us = ev.times.iter().zip(&p_e0_dressed).find(|(_, &p)| p >= 0.95).map(|(&t, _)| t);
    Ok(ResetResult {
        times_us: ev.times.clone(),
        labels: ds.labels.iter().map(|&(l, n)| coupled::state_name(l, n)).collect(),
        populations: ev.states.iter().map(|r| (0..dim).map(|k| r[(k, k)].re).collect()).collect(),
        final_e0: *p_e0_dressed.last().unwrap(),
        p_e0,
        p_e0_dressed,
        tones_ghz: [tones[0].0, tones[1].0],
        crossing_us,
        max_trace_error: ev.max_trace_error,
        min_eigenvalue: ev.min_eigenvalue,
    })
}

/// Default g0 → h0 Rabi frequency from the one-photon rate table, for callers
/// that prefer the table value over the 80 ns π-time convention.
pub fn table_rabi_g0h0(params: &CircuitParams) -> Result<f64> {
    let ds = coupled::build_dressed(params, 0.5, Truncation::default())?;
    let t = coupled::drive_rate_table(&ds, DRIVE_NORMALIZATION_GHZ)?;
    Ok(t.rate(&ds, (0, 0), (3, 0)))
}

// ----------------------------------------------------------- gate errors --

/// Two-level Lindblad generator for a pulse, in ns and GHz.
fn gate_spec(program: &PulseProgram, t1_ns: f64, t_phi_ns: f64, initial: CMatrix) -> LindbladSpec {
    let mut h = TimeOperator::zero(2);
    let half = Complex64::new(0.5, 0.0);
    h.push(0, 0, half * program.delta, Coefficient::Constant);
    h.push(1, 1, -half * program.delta, Coefficient::Constant);

    let mut bounds = Vec::new();
    let mut pieces: Vec<(f64, f64, f64)> = Vec::new();
    let mut t = 0.0;
    for seg in &program.segments {
        let d = seg.duration();
        if let Segment::Spike { amplitude, duration } = *seg {
            pieces.push((t, duration, amplitude));
            bounds.push(t + duration / 2.0);
        }
        t += d;
        bounds.push(t);
    }
    let envelope = Arc::new(move |time: f64| -> f64 {
        for &(start, width, amp) in &pieces {
            if time >= start && time <= start + width {
                return amp * (1.0 - (2.0 * (time - start) / width - 1.0).abs());
            }
        }
        0.0
    });
    h.push(0, 1, half, Coefficient::Envelope(envelope.clone()));
    h.push(1, 0, half, Coefficient::Envelope(envelope));

    let mut channels = Vec::new();
    if t1_ns.is_finite() {
        let mut l = TimeOperator::zero(2);
        // |g⟩⟨e|: index 1 ← index 0
        l.push(1, 0, Complex64::new(1.0, 0.0), Coefficient::Constant);
        channels.push(Channel { op: l, rate: 1.0 / t1_ns });
    }
    if t_phi_ns.is_finite() {
        let mut z = TimeOperator::zero(2);
        z.push(0, 0, Complex64::new(1.0, 0.0), Coefficient::Constant);
        z.push(1, 1, Complex64::new(-1.0, 0.0), Coefficient::Constant);
        // γ D[σz] damps coherences at 2γ.
        channels.push(Channel { op: z, rate: 0.5 / t_phi_ns });
    }
    let mut spec = LindbladSpec::new(h, channels, initial, program.length(), program.length().max(1e-9));
    spec.breakpoints = bounds;
    spec.rtol = 1e-11;
    spec.atol = 1e-13;
    spec
}

fn pure_dephasing_ns(t1_us: f64, t2_us: f64) -> Result<(f64, f64)> {
    if !(t1_us > 0.0 && t2_us > 0.0) {
        return Err(Error::Domain("T1 and T2 must be positive".into()));
    }
    if t2_us > 2.0 * t1_us * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("T2 = {t2_us} µs exceeds 2 T1 = {} µs", 2.0 * t1_us)));
    }
    let t1_ns = t1_us * 1e3;
    let inv_phi = 1.0 / (t2_us * 1e3) - 1.0 / (2.0 * t1_ns);
    let t_phi_ns = if inv_phi <= 0.0 { f64::INFINITY } else { 1.0 / inv_phi };
    Ok((t1_ns, t_phi_ns))
}

/// Final density matrix after the pulse under T1/T2 (µs) from a given start.
pub fn evolve_gate(program: &PulseProgram, t1_us: f64, t2_us: f64, initial: CMatrix) -> Result<CMatrix> {
    let (t1_ns, t_phi_ns) = if t1_us.is_infinite() && t2_us.is_infinite() {
        (f64::INFINITY, f64::INFINITY)
    } else {
        pure_dephasing_ns(t1_us, t2_us)?
    };
    if program.segments.is_empty() {
        return Ok(initial);
    }
    let ev = evolve(&gate_spec(program, t1_ns, t_phi_ns, initial))?;
    Ok(ev.final_state().clone())
}

/// The six cardinal Bloch states.
pub fn cardinal_states() -> Vec<State> {
    use nalgebra::Vector3;
    [
        Vector3::x(),
        -Vector3::x(),
        Vector3::y(),
        -Vector3::y(),
        Vector3::z(),
        -Vector3::z(),
    ]
    .into_iter()
    .map(gates::state_from_bloch)
    .collect()
}

/// Average infidelity over the six cardinal states of the open evolution,
/// measured against the noiseless propagation of the same pulse.
pub fn decoherence_limited_error(program: &PulseProgram, t1_us: f64, t2_us: f64) -> Result<f64> {
    let u = gates::program_unitary(program);
    let mut total = 0.0;
    for psi in cardinal_states() {
        let target = u * psi;
        let rho = evolve_gate(program, t1_us, t2_us, pure_density(psi.as_slice()))?;
        let mut f = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                f += target[i].conj() * rho[(i, j)] * target[j];
            }
        }
        total += f.re;
    }
    Ok(1.0 - total / 6.0)
}

/// 4×4 superoperator (column-stacked vec) of a pulse under T1/T2, built from
/// the images of |0⟩⟨0|, |1⟩⟨1|, |+⟩⟨+|, |+i⟩⟨+i|.
pub fn gate_superoperator(program: &PulseProgram, t1_us: f64, t2_us: f64) -> Result<CMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let inputs = [
        [c(1.0, 0.0), c(0.0, 0.0)],
        [c(0.0, 0.0), c(1.0, 0.0)],
        [c(s, 0.0), c(s, 0.0)],
        [c(s, 0.0), c(0.0, s)],
    ];
    let outs: Vec<CMatrix> = inputs
        .iter()
        .map(|psi| evolve_gate(program, t1_us, t2_us, pure_density(psi)))
        .collect::<Result<_>>()?;
    // Matrix units: E00 = P0, E11 = P1, E01 = P+ − (1+i)/2 (P0 + P1) + i P+i ... solved below.
    let half = c(0.5, 0.0);
    let i = c(0.0, 1.0);
    let e00 = outs[0].clone();
    let e11 = outs[1].clone();
    // |+⟩⟨+| = (E00 + E01 + E10 + E11)/2, |+i⟩⟨+i| = (E00 − i E01 + i E10 + E11)/2
    let sum = &outs[2] * c(2.0, 0.0) - &e00 - &e11; // E01 + E10
    let diff = &outs[3] * c(2.0, 0.0) - &e00 - &e11; // −i E01 + i E10
    let e01 = (&sum + &diff * i) * half;
    let e10 = (&sum - &diff * i) * half;
    let mut sup = CMatrix::zeros(4, 4);
    // column-stacked vec: index = row + 2·col
    for (col, img) in [(0usize, &e00), (1, &e10), (2, &e01), (3, &e11)] {
        for k in 0..4 {
            sup[(k, col)] = img[(k % 2, k / 2)];
        }
    }
    Ok(sup)
}

/// Superoperator of a unitary, `U ⊗ conj(U)` acting on column-stacked vec.
pub fn unitary_superoperator(u: &Unitary) -> CMatrix {
    CMatrix::from_fn(4, 4, |r, c| {
        let (i, j) = (r % 2, r / 2);
        let (k, l) = (c % 2, c / 2);
        u[(i, k)] * u[(j, l)].conj()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_initial_state() {
        let h = TimeOperator::zero(2);
        let rho = CMatrix::from_diagonal_element(2, 2, Complex64::new(0.6, 0.0));
        let spec = LindbladSpec::new(h.clone(), vec![], rho, 1.0, 0.1);
        assert!(matches!(evolve(&spec), Err(Error::Domain(_))));
        let mut rho = CMatrix::zeros(2, 2);
        rho[(0, 0)] = Complex64::new(1.5, 0.0);
        rho[(1, 1)] = Complex64::new(-0.5, 0.0);
        assert!(evolve(&LindbladSpec::new(h, vec![], rho, 1.0, 0.1)).is_err());
    }

    #[test]
    fn t2_above_twice_t1_rejected() {
        let p = PulseProgram::new(0.014, vec![Segment::Idle { duration: 10.0 }]).unwrap();
        assert!(matches!(decoherence_limited_error(&p, 100.0, 250.0), Err(Error::Domain(_))));
    }

    #[test]
    fn closed_system_populations_constant() {
        let mut h = TimeOperator::zero(3);
        for k in 0..3 {
            h.push(k, k, Complex64::new(k as f64 * 0.7, 0.0), Coefficient::Constant);
        }
        let psi = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.64), Complex64::new(0.48, 0.0)];
        let ev = evolve(&LindbladSpec::new(h, vec![], pure_density(&psi), 20.0, 1.0)).unwrap();
        for r in &ev.states {
            for k in 0..3 {
                assert!((r[(k, k)].re - psi[k].norm_sqr()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn superoperator_of_noiseless_pulse_matches_unitary() {
        let p = crate::gates::calibration_pulse(0.014, 4.76, 0.12, 10.0).unwrap();
        let s = gate_superoperator(&p, f64::INFINITY, f64::INFINITY).unwrap();
        let u = unitary_superoperator(&gates::program_unitary(&p));
        assert!((s - u).camax() < 1e-8);
    }
}
