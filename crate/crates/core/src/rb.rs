//! Single-qubit Clifford group over the flux-pulse natives, randomized
//! benchmarking sequences and decay fitting.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix2, Matrix3, Matrix4, Vector3, Vector4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gates::{trace_fidelity, GateDevice, GateName, NativeSet, PulseProgram, Unitary};
use crate::lindblad::{gate_superoperator, CMatrix};

pub const N_CLIFFORDS: usize = 24;

/// Lengths used when none are given: 2, 4, ..., 512.
pub const DEFAULT_LENGTHS: [usize; 9] = [2, 4, 8, 16, 32, 64, 128, 256, 512];

const PHASE_TOL: f64 = 1e-9;

fn natives() -> [GateName; 5] {
    [
        GateName::YHalf,
        GateName::MinusYHalf,
        GateName::ZHalf,
        GateName::ZTheta(PI),
        GateName::ZTheta(-FRAC_PI_2),
    ]
}

/// Quarter turns of idle a native costs; breaks ties between words of equal length.
fn idle_cost(g: GateName) -> usize {
    match g {
        GateName::ZHalf => 1,
        GateName::ZTheta(t) => ((t.rem_euclid(2.0 * PI) / FRAC_PI_2).round() as usize).max(1),
        _ => 0,
    }
}

fn product(word: &[GateName]) -> Unitary {
    word.iter().fold(Unitary::identity(), |acc, g| acc * g.target())
}

pub fn same_up_to_phase(u: &Unitary, v: &Unitary) -> bool {
    trace_fidelity(u, v) > 1.0 - PHASE_TOL
}

#[derive(Debug, Clone, Serialize)]
pub struct CliffordEntry {
    /// Natives in operator order: the first element acts last.
    pub natives: Vec<GateName>,
    #[serde(skip)]
    pub target: Unitary,
}

/// The 24 single-qubit Cliffords with their native compositions and a
/// precomputed multiplication table.
#[derive(Debug, Clone)]
pub struct CliffordTable {
    pub entries: Vec<CliffordEntry>,
    /// `mul[i][j]` is the index of `C_i · C_j`.
    mul: Vec<[usize; N_CLIFFORDS]>,
    inv: [usize; N_CLIFFORDS],
}

impl CliffordTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(&self, u: &Unitary) -> Option<usize> {
        self.entries.iter().position(|e| same_up_to_phase(&e.target, u))
    }

    pub fn mul(&self, i: usize, j: usize) -> usize {
        self.mul[i][j]
    }

    pub fn inverse(&self, i: usize) -> usize {
        self.inv[i]
    }

    /// Pulse program of entry `i`, natives played in time order.
    pub fn program(&self, natives: &NativeSet, i: usize) -> Result<PulseProgram> {
        let mut p = PulseProgram::new(natives.device.delta, vec![])?;
        for g in self.entries[i].natives.iter().rev() {
            p = p.then(&natives.compose(*g)?);
        }
        Ok(p)
    }

    pub fn mean_native_count(&self) -> f64 {
        self.entries.iter().map(|e| e.natives.len()).sum::<usize>() as f64 / self.len() as f64
    }
}

pub fn build_clifford_table() -> CliffordTable {
    let mut entries = vec![CliffordEntry { natives: vec![], target: Unitary::identity() }];
    let set = natives();
    let mut frontier: Vec<Vec<GateName>> = vec![vec![]];
    while entries.len() < N_CLIFFORDS {
        let mut words = Vec::new();
        for w in &frontier {
            for g in set {
                let mut next = w.clone();
                next.push(g);
                words.push(next);
            }
        }
        // Within one word length, cheaper idles win; ties keep enumeration order.
        let mut found: Vec<(usize, usize, Vec<GateName>, Unitary)> = Vec::new();
        for (order, w) in words.iter().enumerate() {
            let u = product(w);
            if entries.iter().any(|e| same_up_to_phase(&e.target, &u)) {
                continue;
            }
            let cost: usize = w.iter().map(|g| idle_cost(*g)).sum();
            match found.iter_mut().find(|f| same_up_to_phase(&f.3, &u)) {
                Some(f) if cost < f.1 => *f = (order, cost, w.clone(), u),
                Some(_) => {}
                None => found.push((order, cost, w.clone(), u)),
            }
        }
        found.sort_by_key(|f| f.0);
        entries.extend(found.into_iter().map(|(_, _, natives, target)| CliffordEntry { natives, target }));
        frontier = words;
    }

    let z = GateName::ZTheta(PI);
    let verbatim = [
        (GateName::XHalf, vec![GateName::YHalf, GateName::ZHalf, GateName::MinusYHalf]),
        (GateName::X, vec![GateName::YHalf, z, GateName::MinusYHalf]),
        (GateName::Y, vec![GateName::YHalf, GateName::YHalf]),
        (GateName::Z, vec![GateName::ZHalf, GateName::ZHalf]),
    ];
    for (gate, word) in verbatim {
        let i = entries
            .iter()
            .position(|e| same_up_to_phase(&e.target, &gate.target()))
            .expect("Pauli and X/2 are Cliffords");
        entries[i].natives = word;
    }

    let find = |u: &Unitary| {
        entries
            .iter()
            .position(|e| same_up_to_phase(&e.target, u))
            .expect("Clifford group is closed")
    };
    let mut mul = vec![[0; N_CLIFFORDS]; N_CLIFFORDS];
    let mut inv = [0; N_CLIFFORDS];
    for i in 0..N_CLIFFORDS {
        for j in 0..N_CLIFFORDS {
            mul[i][j] = find(&(entries[i].target * entries[j].target));
        }
        inv[i] = find(&entries[i].target.adjoint());
    }
    CliffordTable { entries, mul, inv }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Step {
    Clifford(usize),
    Interleaved,
}

/// Steps in time order followed by the recovery Clifford.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RbSequence {
    pub steps: Vec<Step>,
    pub recovery: usize,
}

impl RbSequence {
    /// All Clifford indices in time order, recovery included.
    pub fn clifford_indices(&self, interleaved: Option<usize>) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .steps
            .iter()
            .map(|s| match *s {
                Step::Clifford(i) => i,
                Step::Interleaved => interleaved.expect("interleaved index required"),
            })
            .collect();
        out.push(self.recovery);
        out
    }
}

/// Independent stream per (seed, length index, sequence index).
pub fn sequence_rng(seed: u64, length_index: usize, sequence_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((length_index as u64) << 32) | sequence_index as u64);
    rng
}

/// `m` random Cliffords, the interleaved gate (a Clifford index) after each,
/// and the recovery that returns |e⟩ to itself.
pub fn generate_sequence(
    table: &CliffordTable,
    m: usize,
    rng: &mut impl Rng,
    interleaved: Option<usize>,
) -> Result<RbSequence> {
    if m == 0 {
        return Err(Error::Domain("sequence length must be at least 1".into()));
    }
    let mut steps = Vec::with_capacity(2 * m);
    let mut net = 0;
    for _ in 0..m {
        let c = rng.random_range(0..table.len());
        steps.push(Step::Clifford(c));
        net = table.mul(c, net);
        if let Some(g) = interleaved {
            steps.push(Step::Interleaved);
            net = table.mul(g, net);
        }
    }
    Ok(RbSequence { steps, recovery: table.inverse(net) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RbNoise {
    None,
    /// Depolarizing channel of strength ε after every Clifford.
    Depolarizing { epsilon: f64 },
    /// Calibrated pulses under T1/T2 (µs).
    Lindblad { t1_us: f64, t2_us: f64, device: GateDevice },
}

#[derive(Debug, Clone, Serialize)]
pub struct RbConfig {
    pub lengths: Vec<usize>,
    pub n_sequences: usize,
    pub seed: u64,
    pub noise: RbNoise,
    pub interleaved: Option<GateName>,
}

impl RbConfig {
    pub fn new(noise: RbNoise, seed: u64) -> Self {
        Self {
            lengths: DEFAULT_LENGTHS.to_vec(),
            n_sequences: 50,
            seed,
            noise,
            interleaved: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub sigma_p: f64,
    /// Root-mean-square residual of the fit.
    pub residual_rms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RbResult {
    pub lengths: Vec<usize>,
    pub n_sequences: usize,
    pub survival: Vec<f64>,
    /// Per-length, per-sequence survivals.
    pub raw: Vec<Vec<f64>>,
    pub fit: DecayFit,
    /// Error per Clifford (or per interleaved block), `(1 − p)/2`.
    pub error: f64,
    pub error_sigma: f64,
    pub interleaved: Option<String>,
}

impl RbResult {
    pub fn fidelity(&self) -> f64 {
        1.0 - self.error
    }
}

type Super = Matrix4<Complex64>;

fn to_super(m: &CMatrix) -> Super {
    Super::from_fn(|r, c| m[(r, c)])
}

enum Simulator {
    Unitary { depolarizing: f64, interleaved: Option<Unitary> },
    Channel { cliffords: Vec<Super>, interleaved: Option<Super> },
}

impl Simulator {
    fn survival(&self, table: &CliffordTable, seq: &RbSequence) -> f64 {
        match self {
            Simulator::Unitary { depolarizing, interleaved } => {
                let mut rho = Matrix2::new(
                    Complex64::new(1.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 0.0),
                );
                let mixed = Matrix2::identity() * Complex64::new(0.5, 0.0);
                let apply = |rho: Matrix2<Complex64>, u: &Unitary| {
                    let r = u * rho * u.adjoint();
                    r * Complex64::new(1.0 - depolarizing, 0.0) + mixed * Complex64::new(*depolarizing, 0.0)
                };
                for s in &seq.steps {
                    rho = match *s {
                        Step::Clifford(i) => apply(rho, &table.entries[i].target),
                        Step::Interleaved => apply(rho, interleaved.as_ref().expect("interleaved gate")),
                    };
                }
                rho = apply(rho, &table.entries[seq.recovery].target);
                rho[(0, 0)].re
            }
            Simulator::Channel { cliffords, interleaved } => {
                let mut v = Vector4::new(
                    Complex64::new(1.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 0.0),
                );
                for s in &seq.steps {
                    v = match *s {
                        Step::Clifford(i) => cliffords[i] * v,
                        Step::Interleaved => interleaved.as_ref().expect("interleaved gate") * v,
                    };
                }
                v = cliffords[seq.recovery] * v;
                v[0].re
            }
        }
    }
}

fn build_simulator(table: &CliffordTable, cfg: &RbConfig) -> Result<Simulator> {
    match cfg.noise {
        RbNoise::None => Ok(Simulator::Unitary {
            depolarizing: 0.0,
            interleaved: cfg.interleaved.map(|g| g.target()),
        }),
        RbNoise::Depolarizing { epsilon } => {
            if !(0.0..=1.0).contains(&epsilon) {
                return Err(Error::Domain(format!("depolarizing strength {epsilon} outside [0, 1]")));
            }
            Ok(Simulator::Unitary { depolarizing: epsilon, interleaved: cfg.interleaved.map(|g| g.target()) })
        }
        RbNoise::Lindblad { t1_us, t2_us, device } => {
            let set = NativeSet::calibrate(device)?;
            let mut cache: Vec<(GateName, Super)> = Vec::new();
            let mut native_super = |g: GateName| -> Result<Super> {
                if let Some((_, s)) = cache.iter().find(|(h, _)| *h == g) {
                    return Ok(*s);
                }
                let s = to_super(&gate_superoperator(&set.compose(g)?, t1_us, t2_us)?);
                cache.push((g, s));
                Ok(s)
            };
            let mut cliffords = Vec::with_capacity(table.len());
            for e in &table.entries {
                let mut s = Super::identity();
                for g in &e.natives {
                    s *= native_super(*g)?;
                }
                cliffords.push(s);
            }
            let interleaved = match cfg.interleaved {
                Some(g) => Some(to_super(&gate_superoperator(&set.compose(g)?, t1_us, t2_us)?)),
                None => None,
            };
            Ok(Simulator::Channel { cliffords, interleaved })
        }
    }
}

/// Simulate RB (or IRB when `cfg.interleaved` is set) and fit the decay.
pub fn run_rb(table: &CliffordTable, cfg: &RbConfig) -> Result<RbResult> {
    if cfg.n_sequences == 0 {
        return Err(Error::Domain("need at least one sequence per length".into()));
    }
    if cfg.lengths.is_empty() || cfg.lengths.contains(&0) {
        return Err(Error::Domain("lengths must be non-empty and at least 1".into()));
    }
    let interleaved_index = match cfg.interleaved {
        Some(g) => Some(
            table
                .index_of(&g.target())
                .ok_or_else(|| Error::Domain(format!("{} is not a Clifford", g.label())))?,
        ),
        None => None,
    };
    let sim = build_simulator(table, cfg)?;
    let jobs: Vec<(usize, usize)> = (0..cfg.lengths.len())
        .flat_map(|li| (0..cfg.n_sequences).map(move |si| (li, si)))
        .collect();
    let flat: Vec<f64> = jobs
        .par_iter()
        .map(|&(li, si)| {
            let mut rng = sequence_rng(cfg.seed, li, si);
            let seq = generate_sequence(table, cfg.lengths[li], &mut rng, interleaved_index)?;
            Ok(sim.survival(table, &seq).clamp(0.0, 1.0))
        })
        .collect::<Result<_>>()?;
    let raw: Vec<Vec<f64>> = flat.chunks(cfg.n_sequences).map(|c| c.to_vec()).collect();
    let survival: Vec<f64> = raw.iter().map(|r| r.iter().sum::<f64>() / r.len() as f64).collect();
    let m: Vec<f64> = cfg.lengths.iter().map(|&l| l as f64).collect();
    let fit = fit_decay(&m, &survival).map_err(|e| match e {
        Error::Fit { reason, .. } => Error::Fit { reason, lengths: cfg.lengths.clone(), survival: survival.clone() },
        other => other,
    })?;
    Ok(RbResult {
        lengths: cfg.lengths.clone(),
        n_sequences: cfg.n_sequences,
        survival,
        raw,
        fit,
        error: (1.0 - fit.p) / 2.0,
        error_sigma: fit.sigma_p / 2.0,
        interleaved: cfg.interleaved.map(|g| g.label()),
    })
}

fn fit_error(reason: impl Into<String>, m: &[f64], y: &[f64]) -> Error {
    Error::Fit {
        reason: reason.into(),
        lengths: m.iter().map(|&x| x as usize).collect(),
        survival: y.to_vec(),
    }
}

/// Best (A, B, rss) for fixed p.
fn linear_part(m: &[f64], y: &[f64], p: f64) -> Option<(f64, f64, f64)> {
    let n = m.len() as f64;
    let x: Vec<f64> = m.iter().map(|&k| p.powf(k)).collect();
    let sx: f64 = x.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sy: f64 = y.iter().sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-14 * n * sxx.max(1e-300) {
        return None;
    }
    let a = (n * sxy - sx * sy) / det;
    let b = (sy - a * sx) / n;
    let rss = x.iter().zip(y).map(|(xi, yi)| (a * xi + b - yi).powi(2)).sum();
    Some((a, b, rss))
}

/// Least-squares fit of `y = A·p^m + B`. For fixed p the problem is linear,
/// so only p is searched: a log-spaced scan of 1 − p followed by golden-section
/// refinement.
pub fn fit_decay(m: &[f64], y: &[f64]) -> Result<DecayFit> {
    if m.len() != y.len() {
        return Err(fit_error("length and survival counts differ", m, y));
    }
    let mut distinct = m.to_vec();
    distinct.sort_by(|a, b| a.total_cmp(b));
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(fit_error("need at least three distinct lengths", m, y));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(fit_error("non-finite survival", m, y));
    }
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if hi - lo < 1e-12 {
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        return Ok(DecayFit { a: 0.0, b: mean, p: 1.0, sigma_a: 0.0, sigma_b: 0.0, sigma_p: 0.0, residual_rms: 0.0 });
    }

    // u = log10(1 − p)
    let rss_at = |u: f64| linear_part(m, y, 1.0 - 10f64.powf(u)).map_or(f64::INFINITY, |r| r.2);
    let (u_min, u_max) = (-9.0, -1e-3);
    let n_scan = 800;
    let grid: Vec<f64> = (0..=n_scan).map(|k| u_min + (u_max - u_min) * k as f64 / n_scan as f64).collect();
    let (best, _) = grid
        .iter()
        .enumerate()
        .map(|(k, &u)| (k, rss_at(u)))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    if !rss_at(grid[best]).is_finite() {
        return Err(fit_error("no finite residual over the decay-rate scan", m, y));
    }
    if best == 0 || best == n_scan {
        return Err(fit_error(
            format!("decay rate pinned at scan edge (1 - p = {:.3e})", 10f64.powf(grid[best])),
            m,
            y,
        ));
    }
    let (mut a, mut b) = (grid[best - 1], grid[best + 1]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (rss_at(c), rss_at(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = rss_at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = rss_at(d);
        }
    }
    let u = 0.5 * (a + b);
    let p = 1.0 - 10f64.powf(u);
    let (amp, off, rss) = linear_part(m, y, p).ok_or_else(|| fit_error("degenerate design at optimum", m, y))?;

    let mut jtj = Matrix3::<f64>::zeros();
    for &k in m {
        let row = Vector3::new(p.powf(k), 1.0, amp * k * p.powf(k - 1.0));
        jtj += row * row.transpose();
    }
    let dof = m.len().saturating_sub(3);
    let s2 = if dof > 0 { rss / dof as f64 } else { 0.0 };
    let cov = jtj
        .try_inverse()
        .ok_or_else(|| fit_error("singular normal matrix at optimum", m, y))?
        * s2;
    Ok(DecayFit {
        a: amp,
        b: off,
        p,
        sigma_a: cov[(0, 0)].max(0.0).sqrt(),
        sigma_b: cov[(1, 1)].max(0.0).sqrt(),
        sigma_p: cov[(2, 2)].max(0.0).sqrt(),
        residual_rms: (rss / m.len() as f64).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IrbEstimate {
    pub r_gate: f64,
    pub fidelity: f64,
    pub sigma: f64,
    /// p_irb exceeds p_rb by more than the combined fit uncertainty.
    pub unphysical: bool,
}

/// Gate error from a reference and an interleaved decay.
pub fn irb_from_decays(p_rb: f64, sigma_rb: f64, p_irb: f64, sigma_irb: f64) -> IrbEstimate {
    let ratio = p_irb / p_rb;
    let r = (1.0 - ratio) / 2.0;
    let sigma = 0.5 * ratio * ((sigma_rb / p_rb).powi(2) + (sigma_irb / p_irb).powi(2)).sqrt();
    IrbEstimate {
        r_gate: r,
        fidelity: 1.0 - r,
        sigma,
        unphysical: p_irb - p_rb > (sigma_rb.powi(2) + sigma_irb.powi(2)).sqrt(),
    }
}

pub fn irb_fidelity(rb: &RbResult, irb: &RbResult) -> Result<IrbEstimate> {
    if rb.lengths != irb.lengths {
        return Err(Error::Domain("RB and IRB length grids differ".into()));
    }
    Ok(irb_from_decays(rb.fit.p, rb.fit.sigma_p, irb.fit.p, irb.fit.sigma_p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_has_24_distinct_elements() {
        let t = build_clifford_table();
        assert_eq!(t.len(), N_CLIFFORDS);
        for i in 0..N_CLIFFORDS {
            for j in 0..i {
                assert!(!same_up_to_phase(&t.entries[i].target, &t.entries[j].target));
            }
        }
        assert!(t.entries[0].natives.is_empty());
    }

    #[test]
    fn inverse_table() {
        let t = build_clifford_table();
        for i in 0..N_CLIFFORDS {
            assert_eq!(t.mul(i, t.inverse(i)), 0);
            assert_eq!(t.mul(t.inverse(i), i), 0);
        }
    }

    #[test]
    fn fit_recovers_exact_decay() {
        let m: Vec<f64> = DEFAULT_LENGTHS.iter().map(|&l| l as f64).collect();
        let y: Vec<f64> = m.iter().map(|k| 0.47 * 0.995f64.powf(*k) + 0.51).collect();
        let f = fit_decay(&m, &y).unwrap();
        assert!((f.p - 0.995).abs() < 1e-9, "{f:?}");
        assert!((f.a - 0.47).abs() < 1e-7);
        assert!((f.b - 0.51).abs() < 1e-7);
    }

    #[test]
    fn fit_rejects_too_few_lengths() {
        assert!(matches!(fit_decay(&[1.0, 2.0], &[0.9, 0.8]), Err(Error::Fit { .. })));
    }

    #[test]
    fn irb_arithmetic() {
        let e = irb_from_decays(0.99, 0.0, 0.9801, 0.0);
        assert!((e.r_gate - 0.005).abs() < 1e-12);
        let same = irb_from_decays(0.99, 1e-4, 0.99, 1e-4);
        assert_eq!(same.fidelity, 1.0);
        assert!(!same.unphysical);
        assert!(irb_from_decays(0.99, 1e-4, 0.995, 1e-4).unphysical);
    }
}
