//! Net-zero flux-pulse gates on the two-level fluxonium at the frustration
//! point, `H/h = A(t)/2 σx + Δ/2 σz`, propagated in the lab frame.
//!
//! Basis: index 0 is the upper (σz = +1) state |e⟩, index 1 is |g⟩.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix2, Vector2, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

pub type Unitary = Matrix2<Complex64>;
pub type State = Vector2<Complex64>;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);
const CI: Complex64 = Complex64::new(0.0, 1.0);

/// Largest sub-step used inside a spike (ns).
pub const MAX_SUBSTEP_NS: f64 = 0.01;

pub fn sigma_x() -> Unitary {
    Matrix2::new(C0, C1, C1, C0)
}

pub fn sigma_y() -> Unitary {
    Matrix2::new(C0, -CI, CI, C0)
}

pub fn sigma_z() -> Unitary {
    Matrix2::new(C1, C0, C0, -C1)
}

/// `exp(−i v·σ)` for a real vector v.
pub fn exp_pauli(v: Vector3<f64>) -> Unitary {
    let theta = v.norm();
    if theta == 0.0 {
        return Unitary::identity();
    }
    let n = v / theta;
    let (s, c) = theta.sin_cos();
    let is = Complex64::new(0.0, -s);
    Matrix2::new(
        Complex64::new(c, 0.0) + is * n.z,
        is * Complex64::new(n.x, -n.y),
        is * Complex64::new(n.x, n.y),
        Complex64::new(c, 0.0) - is * n.z,
    )
}

/// Rotation `exp(−i θ n̂·σ/2)` about a unit axis.
pub fn rotation(axis: Vector3<f64>, theta: f64) -> Unitary {
    exp_pauli(axis.normalize() * (theta / 2.0))
}

pub fn rx(theta: f64) -> Unitary {
    rotation(Vector3::x(), theta)
}

pub fn ry(theta: f64) -> Unitary {
    rotation(Vector3::y(), theta)
}

pub fn rz(theta: f64) -> Unitary {
    rotation(Vector3::z(), theta)
}

/// `R_xz(θ) = exp(−i(θ σx + λ|θ| σz)/2)`.
pub fn rxz(theta: f64, lambda: f64) -> Unitary {
    exp_pauli(Vector3::new(theta / 2.0, 0.0, lambda * theta.abs() / 2.0))
}

/// Trace fidelity `|tr(U†V)|/2`, blind to global phase.
pub fn trace_fidelity(u: &Unitary, v: &Unitary) -> f64 {
    (u.adjoint() * v).trace().norm() / 2.0
}

pub fn bloch(psi: &State) -> Vector3<f64> {
    let (a, b) = (psi[0], psi[1]);
    let ab = a.conj() * b;
    Vector3::new(2.0 * ab.re, 2.0 * ab.im, a.norm_sqr() - b.norm_sqr())
}

/// Pure state with the given Bloch vector direction.
pub fn state_from_bloch(v: Vector3<f64>) -> State {
    let v = v.normalize();
    let theta = v.z.clamp(-1.0, 1.0).acos();
    let phi = v.y.atan2(v.x);
    Vector2::new(
        Complex64::new((theta / 2.0).cos(), 0.0),
        Complex64::from_polar((theta / 2.0).sin(), phi),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Segment {
    /// Triangular flux spike rising linearly to a signed peak σx coefficient
    /// `amplitude` (GHz) at mid-width and back to zero.
    Spike { amplitude: f64, duration: f64 },
    /// Free precession at the frustration point.
    Idle { duration: f64 },
}

impl Segment {
    pub fn duration(&self) -> f64 {
        match *self {
            Segment::Spike { duration, .. } | Segment::Idle { duration } => duration,
        }
    }

    /// Signed flux area (GHz·ns).
    pub fn area(&self) -> f64 {
        match *self {
            Segment::Spike { amplitude, duration } => amplitude * duration / 2.0,
            Segment::Idle { .. } => 0.0,
        }
    }
}

/// An ordered list of segments at fixed qubit splitting Δ (GHz).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulseProgram {
    pub delta: f64,
    pub segments: Vec<Segment>,
}

impl PulseProgram {
    pub fn new(delta: f64, segments: Vec<Segment>) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::Domain(format!("delta must be >= 0, got {delta}")));
        }
        for s in &segments {
            let d = s.duration();
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Domain(format!("segment durations must be positive, got {d}")));
            }
            if let Segment::Spike { amplitude, .. } = s {
                if !amplitude.is_finite() {
                    return Err(Error::Domain("spike amplitude must be finite".into()));
                }
            }
        }
        Ok(Self { delta, segments })
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().map(Segment::duration).sum()
    }

    pub fn net_area(&self) -> f64 {
        self.segments.iter().map(Segment::area).sum()
    }

    /// Segments of `self` followed by those of `later`.
    pub fn then(&self, later: &PulseProgram) -> PulseProgram {
        let mut segments = self.segments.clone();
        segments.extend_from_slice(&later.segments);
        PulseProgram { delta: self.delta, segments }
    }
}

/// Number of sub-steps for a spike; even, so the peak lands on a boundary.
fn spike_steps(duration: f64) -> usize {
    let n = (duration / MAX_SUBSTEP_NS).ceil() as usize;
    (n + n % 2).max(2)
}

/// Propagator of one segment. Spikes use a fourth-order Magnus step with two
/// Gauss points per sub-step; A(t) is linear inside each sub-step.
pub fn segment_unitary(seg: &Segment, delta: f64) -> Unitary {
    segment_unitary_split(seg, delta, |_| {})
}

fn segment_unitary_split(seg: &Segment, delta: f64, mut each: impl FnMut(&Unitary)) -> Unitary {
    match *seg {
        Segment::Idle { duration } => {
            let u = rz(2.0 * PI * delta * duration);
            each(&u);
            u
        }
        Segment::Spike { amplitude, duration } => {
            let n = spike_steps(duration);
            let h = duration / n as f64;
            let shape = |t: f64| amplitude * (1.0 - (2.0 * t / duration - 1.0).abs());
            let g = 0.5 / 3f64.sqrt();
            let mut u = Unitary::identity();
            for k in 0..n {
                let t0 = k as f64 * h;
                // A(t) → −i v(t)·σ with v = π (A(t), 0, Δ)
                let v1 = Vector3::new(PI * shape(t0 + (0.5 - g) * h), 0.0, PI * delta);
                let v2 = Vector3::new(PI * shape(t0 + (0.5 + g) * h), 0.0, PI * delta);
                let w = (v1 + v2) * (h / 2.0) + v2.cross(&v1) * (3f64.sqrt() * h * h / 6.0);
                let step = exp_pauli(w);
                each(&step);
                u = step * u;
            }
            u
        }
    }
}

/// Total propagator of a program (later segments multiply on the left).
pub fn program_unitary(p: &PulseProgram) -> Unitary {
    p.segments
        .iter()
        .fold(Unitary::identity(), |u, s| segment_unitary(s, p.delta) * u)
}

#[derive(Debug, Clone)]
pub struct Propagation {
    pub final_state: State,
    /// (time in ns, Bloch vector) after every sub-step; idles are sampled every
    /// 0.1 ns.
    pub trajectory: Vec<(f64, Vector3<f64>)>,
}

/// Time-ordered evolution of a pure state with its Bloch trajectory.
pub fn propagate(p: &PulseProgram, initial: &State) -> Propagation {
    let mut psi = *initial;
    let mut t = 0.0;
    let mut trajectory = vec![(0.0, bloch(&psi))];
    for seg in &p.segments {
        match *seg {
            Segment::Idle { duration } => {
                let n = ((duration / 0.1).ceil() as usize).max(1);
                let step = rz(2.0 * PI * p.delta * duration / n as f64);
                for _ in 0..n {
                    psi = step * psi;
                    t += duration / n as f64;
                    trajectory.push((t, bloch(&psi)));
                }
            }
            Segment::Spike { duration, .. } => {
                let h = duration / spike_steps(duration) as f64;
                segment_unitary_split(seg, p.delta, |u| {
                    psi = u * psi;
                    t += h;
                    trajectory.push((t, bloch(&psi)));
                });
            }
        }
    }
    Propagation { final_state: psi, trajectory }
}

/// Spike, idle, antispike calibration pulse.
pub fn calibration_pulse(delta: f64, dt_p: f64, amplitude: f64, dt_z: f64) -> Result<PulseProgram> {
    let mut segs = vec![Segment::Spike { amplitude, duration: dt_p }];
    if dt_z > 0.0 {
        segs.push(Segment::Idle { duration: dt_z });
    }
    segs.push(Segment::Spike { amplitude: -amplitude, duration: dt_p });
    PulseProgram::new(delta, segs)
}

/// ⟨σx⟩, ⟨σy⟩, ⟨σz⟩ over an (A, Δt_z) grid; rows follow `a_grid`.
#[derive(Debug, Clone, Serialize)]
pub struct RabiMap {
    pub a_grid: Vec<f64>,
    pub dtz_grid: Vec<f64>,
    pub sx: Vec<Vec<f64>>,
    pub sy: Vec<Vec<f64>>,
    pub sz: Vec<Vec<f64>>,
}

pub fn rabi2d(delta: f64, dt_p: f64, a_grid: &[f64], dtz_grid: &[f64], initial: &State) -> Result<RabiMap> {
    if a_grid.is_empty() || dtz_grid.is_empty() {
        return Err(Error::Domain("Rabi grids must be non-empty".into()));
    }
    if dtz_grid.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::Domain("idle durations must be >= 0".into()));
    }
    let rows: Vec<Vec<Vector3<f64>>> = a_grid
        .par_iter()
        .map(|&a| {
            // Spikes are shared across the row; only the idle varies.
            let up = segment_unitary(&Segment::Spike { amplitude: a, duration: dt_p }, delta);
            let down = segment_unitary(&Segment::Spike { amplitude: -a, duration: dt_p }, delta);
            let after_up = up * initial;
            dtz_grid
                .iter()
                .map(|&tz| bloch(&(down * rz(2.0 * PI * delta * tz) * after_up)))
                .collect()
        })
        .collect();
    let pick = |k: usize| rows.iter().map(|r| r.iter().map(|v| v[k]).collect()).collect();
    Ok(RabiMap {
        a_grid: a_grid.to_vec(),
        dtz_grid: dtz_grid.to_vec(),
        sx: pick(0),
        sy: pick(1),
        sz: pick(2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NativeTarget {
    /// R_y(π/2)
    YHalf,
    /// R_y(π)
    Y,
}

impl NativeTarget {
    pub fn max_lambda(&self) -> f64 {
        match self {
            NativeTarget::YHalf => 2f64.sqrt() - 1.0,
            NativeTarget::Y => 1.0,
        }
    }

    pub fn unitary(&self) -> Unitary {
        match self {
            NativeTarget::YHalf => ry(FRAC_PI_2),
            NativeTarget::Y => ry(PI),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateAngles {
    pub theta_x: f64,
    pub theta_z: f64,
    pub lambda: f64,
}

impl GateAngles {
    /// `R_xz(−θx) · R_z(θz) · R_xz(θx)`.
    pub fn ideal_unitary(&self) -> Unitary {
        rxz(-self.theta_x, self.lambda) * rz(self.theta_z) * rxz(self.theta_x, self.lambda)
    }
}

/// Closed-form spike and idle angles realising the target at ratio λ.
///
/// For Y the spike angle is `arccos(−λ²)/√(1+λ²)`; with `+λ²` the
/// composition misses R_y(π) by O(λ²).
pub fn synthesize(target: NativeTarget, lambda: f64) -> Result<GateAngles> {
    let max = target.max_lambda();
    if !(lambda >= 0.0 && lambda <= max + 1e-15) {
        return Err(Error::Domain(format!(
            "lambda = {lambda} outside the validity range [0, {max:.6}] for {target:?}"
        )));
    }
    let l = lambda.min(max);
    let norm = (1.0 + l * l).sqrt();
    let (theta_x, theta_z) = match target {
        NativeTarget::YHalf => {
            let arg = (l * (1.0 + l) / (-(1.0 - l))).clamp(-1.0, 1.0);
            let radicand = (1.0 - 2.0 * l - 2.0 * l.powi(3) - l.powi(4)).max(0.0);
            (arg.acos() / norm, 2.0 * (radicand.sqrt() / ((1.0 + l) * norm)).atan())
        }
        NativeTarget::Y => {
            let tz = if l >= 1.0 { 0.0 } else { PI - 2.0 * (l / (1.0 - l * l).sqrt()).atan() };
            ((-l * l).clamp(-1.0, 1.0).acos() / norm, tz)
        }
    };
    Ok(GateAngles { theta_x, theta_z, lambda: l })
}

/// λ fixed by the hardware: the spike of width Δt_p must supply a Z angle of
/// `λ θx(λ) = 2π Δ Δt_p`.
pub fn device_lambda(target: NativeTarget, delta: f64, dt_p: f64) -> Result<f64> {
    let need = 2.0 * PI * delta * dt_p;
    let f = |l: f64| -> f64 { l * synthesize(target, l).map(|a| a.theta_x).unwrap_or(f64::NAN) - need };
    let (mut lo, mut hi) = (0.0, target.max_lambda());
    if f(lo) > 0.0 || f(hi) < 0.0 {
        return Err(Error::Calibration(format!(
            "2πΔΔt_p = {need:.6} is not reachable within the lambda range of {target:?}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Turn angles into a triangular spike, an idle, and the opposite spike.
/// A spike of peak A and width Δt_p rotates by `π A Δt_p` about x.
pub fn angles_to_pulse(angles: &GateAngles, delta: f64, dt_p: f64) -> Result<PulseProgram> {
    if !(dt_p > 0.0) {
        return Err(Error::Domain(format!("dt_p must be positive, got {dt_p}")));
    }
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    let mut segs = Vec::new();
    let has_spikes = angles.theta_x != 0.0;
    let amplitude = angles.theta_x / (PI * dt_p);
    if has_spikes {
        let implied = 2.0 * PI * delta * dt_p / angles.theta_x.abs();
        if (implied - angles.lambda).abs() > 1e-6 {
            return Err(Error::Calibration(format!(
                "lambda {} inconsistent with delta = {delta} GHz, dt_p = {dt_p} ns (implies {implied})",
                angles.lambda
            )));
        }
        segs.push(Segment::Spike { amplitude, duration: dt_p });
    }
    if angles.theta_z > 0.0 {
        segs.push(Segment::Idle { duration: angles.theta_z / (2.0 * PI * delta) });
    }
    if has_spikes {
        segs.push(Segment::Spike { amplitude: -amplitude, duration: dt_p });
    }
    PulseProgram::new(delta, segs)
}

/// Idle realising R_z(θ) with θ taken in (0, 2π]; the lab-frame precession
/// only turns one way.
pub fn z_idle(theta: f64, delta: f64) -> Result<PulseProgram> {
    let t = theta.rem_euclid(2.0 * PI);
    let t = if t == 0.0 { 2.0 * PI } else { t };
    PulseProgram::new(delta, vec![Segment::Idle { duration: t / (2.0 * PI * delta) }])
}

/// Gates built from the calibrated Y/2 and Z/2 natives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum GateName {
    YHalf,
    MinusYHalf,
    ZHalf,
    XHalf,
    MinusXHalf,
    Y,
    Z,
    X,
    /// R_z(θ) by idling.
    ZTheta(f64),
}

impl GateName {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "Y/2" => GateName::YHalf,
            "-Y/2" => GateName::MinusYHalf,
            "Z/2" => GateName::ZHalf,
            "X/2" => GateName::XHalf,
            "-X/2" => GateName::MinusXHalf,
            "Y" => GateName::Y,
            "Z" => GateName::Z,
            "X" => GateName::X,
            other => {
                if let Some(theta) = other.strip_prefix("Z(").and_then(|r| r.strip_suffix(')')) {
                    let t: f64 = theta
                        .parse()
                        .map_err(|_| Error::Domain(format!("bad Z angle in {other:?}")))?;
                    GateName::ZTheta(t)
                } else {
                    return Err(Error::Domain(format!("unknown gate {other:?}")));
                }
            }
        })
    }

    pub fn label(&self) -> String {
        match self {
            GateName::YHalf => "Y/2".into(),
            GateName::MinusYHalf => "-Y/2".into(),
            GateName::ZHalf => "Z/2".into(),
            GateName::XHalf => "X/2".into(),
            GateName::MinusXHalf => "-X/2".into(),
            GateName::Y => "Y".into(),
            GateName::Z => "Z".into(),
            GateName::X => "X".into(),
            GateName::ZTheta(t) => format!("Z({t})"),
        }
    }

    /// Ideal target rotation.
    pub fn target(&self) -> Unitary {
        match *self {
            GateName::YHalf => ry(FRAC_PI_2),
            GateName::MinusYHalf => ry(-FRAC_PI_2),
            GateName::ZHalf => rz(FRAC_PI_2),
            GateName::XHalf => rx(FRAC_PI_2),
            GateName::MinusXHalf => rx(-FRAC_PI_2),
            GateName::Y => ry(PI),
            GateName::Z => rz(PI),
            GateName::X => rx(PI),
            GateName::ZTheta(t) => rz(t),
        }
    }

    /// Y/2 and Z/2 make one Larmor cycle each at most; these are the
    /// computational gates.
    pub fn is_computational(&self) -> bool {
        matches!(self, GateName::YHalf | GateName::MinusYHalf | GateName::XHalf | GateName::MinusXHalf)
    }
}

/// Device constants for gate synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateDevice {
    /// Qubit splitting Δ (GHz).
    pub delta: f64,
    /// Spike width Δt_p (ns).
    pub dt_p: f64,
}

/// Calibrated Y/2 pulse and its angles.
#[derive(Debug, Clone)]
pub struct NativeSet {
    pub device: GateDevice,
    pub y_half_angles: GateAngles,
    pub y_half: PulseProgram,
    pub minus_y_half: PulseProgram,
    pub z_half: PulseProgram,
}

impl NativeSet {
    pub fn calibrate(device: GateDevice) -> Result<Self> {
        let lambda = device_lambda(NativeTarget::YHalf, device.delta, device.dt_p)?;
        let angles = synthesize(NativeTarget::YHalf, lambda)?;
        let y_half = angles_to_pulse(&angles, device.delta, device.dt_p)?;
        // σz-conjugation flips the sign of every spike.
        let minus_y_half = PulseProgram {
            delta: device.delta,
            segments: y_half
                .segments
                .iter()
                .map(|s| match *s {
                    Segment::Spike { amplitude, duration } => Segment::Spike { amplitude: -amplitude, duration },
                    idle => idle,
                })
                .collect(),
        };
        let z_half = z_idle(FRAC_PI_2, device.delta)?;
        Ok(Self {
            device,
            y_half_angles: angles,
            y_half,
            minus_y_half,
            z_half,
        })
    }

    /// Native composition in operator order (leftmost acts last), per the gate table.
    pub fn composition(&self, gate: GateName) -> Vec<GateName> {
        use GateName::*;
        match gate {
            XHalf => vec![YHalf, ZHalf, MinusYHalf],
            MinusXHalf => vec![MinusYHalf, ZHalf, YHalf],
            Y => vec![YHalf, YHalf],
            Z => vec![ZHalf, ZHalf],
            X => vec![YHalf, Z, MinusYHalf],
            other => vec![other],
        }
    }

    fn native(&self, gate: GateName) -> Result<PulseProgram> {
        Ok(match gate {
            GateName::YHalf => self.y_half.clone(),
            GateName::MinusYHalf => self.minus_y_half.clone(),
            GateName::ZHalf => self.z_half.clone(),
            GateName::ZTheta(t) => z_idle(t, self.device.delta)?,
            other => self.compose(other)?,
        })
    }

    /// Pulse program of a gate; components run in reverse of the operator order.
    pub fn compose(&self, gate: GateName) -> Result<PulseProgram> {
        let parts = self.composition(gate);
        if parts == [gate] {
            return self.native(gate);
        }
        let mut program = PulseProgram::new(self.device.delta, vec![])?;
        for part in parts.iter().rev() {
            program = program.then(&self.native(*part)?);
        }
        Ok(program)
    }
}
