use fluxonium::coupled::{calibrate_coupling, Truncation};
use fluxonium::gates::{self, GateDevice, GateName, NativeSet};
use fluxonium::lindblad::*;
use fluxonium::{CircuitParams, Error};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn natives() -> NativeSet {
    NativeSet::calibrate(GateDevice { delta: 0.014, dt_p: 4.76 }).unwrap()
}

fn ladder(n: usize) -> CMatrix {
    let mut a = CMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = c((k as f64).sqrt(), 0.0);
    }
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn closed_system_keeps_populations_of_eigenstates(
        e in prop::collection::vec(-5.0f64..5.0, 3),
        p in prop::collection::vec(0.01f64..1.0, 3),
    ) {
        let h = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(3, e.iter().map(|&x| c(x, 0.0))));
        let total: f64 = p.iter().sum();
        let mut rho = CMatrix::zeros(3, 3);
        for k in 0..3 {
            rho[(k, k)] = c(p[k] / total, 0.0);
        }
        let spec = LindbladSpec::new(TimeOperator::constant(&h), vec![], rho.clone(), 2.0, 0.1);
        let ev = evolve(&spec).unwrap();
        for s in &ev.states {
            for k in 0..3 {
                prop_assert!((s[(k, k)].re - rho[(k, k)].re).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn photon_decays_at_kappa() {
    let kappa = 9.5;
    let mut rho = CMatrix::zeros(3, 3);
    rho[(1, 1)] = c(1.0, 0.0);
    let op = TimeOperator::constant(&ladder(3));
    let spec = LindbladSpec::new(TimeOperator::zero(3), vec![Channel { op, rate: kappa }], rho, 0.5, 0.01);
    let ev = evolve(&spec).unwrap();
    for (t, s) in ev.times.iter().zip(&ev.states) {
        let expect = (-kappa * t).exp();
        assert!((s[(1, 1)].re - expect).abs() < 0.01 * expect.max(1e-3), "t = {t}");
    }
}

#[test]
fn driven_damped_evolution_stays_physical() {
    // Resonantly driven two-level system with decay and an oscillating term.
    let mut h = TimeOperator::zero(3);
    h.push(0, 1, c(0.8, 0.0), Coefficient::Oscillating(0.3));
    h.push(1, 0, c(0.8, 0.0), Coefficient::Oscillating(-0.3));
    h.push(1, 2, c(0.0, 0.5), Coefficient::Constant);
    h.push(2, 1, c(0.0, -0.5), Coefficient::Constant);
    let mut rho = CMatrix::zeros(3, 3);
    rho[(0, 0)] = c(1.0, 0.0);
    let spec = LindbladSpec::new(h, vec![Channel { op: TimeOperator::constant(&ladder(3)), rate: 2.0 }], rho, 5.0, 0.05);
    let ev = evolve(&spec).unwrap();
    assert!(ev.max_trace_error < 1e-8);
    assert!(ev.min_eigenvalue > -1e-8);
}

#[test]
fn invalid_specs_are_rejected() {
    let mut rho = CMatrix::zeros(2, 2);
    rho[(0, 0)] = c(0.7, 0.0);
    let spec = LindbladSpec::new(TimeOperator::zero(2), vec![], rho, 1.0, 0.1);
    assert!(evolve(&spec).is_err());
    let mut good = CMatrix::zeros(2, 2);
    good[(0, 0)] = c(1.0, 0.0);
    let neg = Channel { op: TimeOperator::zero(2), rate: -1.0 };
    assert!(evolve(&LindbladSpec::new(TimeOperator::zero(2), vec![neg], good, 1.0, 0.1)).is_err());
}

#[test]
fn noiseless_gate_matches_pure_state_propagation() {
    let n = natives();
    for g in [GateName::YHalf, GateName::XHalf] {
        let program = n.compose(g).unwrap();
        for psi in cardinal_states() {
            let out = gates::propagate(&program, &psi).final_state;
            let rho = evolve_gate(&program, f64::INFINITY, f64::INFINITY, pure_density(psi.as_slice())).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert!((rho[(i, j)] - out[i] * out[j].conj()).norm() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn decoherence_error_limits() {
    let y = natives().compose(GateName::YHalf).unwrap();
    assert!(decoherence_limited_error(&y, f64::INFINITY, f64::INFINITY).unwrap() < 1e-10);
    let a = decoherence_limited_error(&y, 300.0, 300.0).unwrap();
    let b = decoherence_limited_error(&y, 150.0, 150.0).unwrap();
    assert!(a > 0.0);
    assert!((b / a - 2.0).abs() < 0.02, "ratio {}", b / a);
    assert!(matches!(decoherence_limited_error(&y, 100.0, 250.0), Err(Error::Domain(_))));
}

#[test]
fn reset_steady_state_forgets_initial_mixture() {
    let mut p = CircuitParams::reference_device();
    calibrate_coupling(&mut p, 60.0, Truncation::default()).unwrap();
    let cfg = ResetConfig { sample_ns: 100.0, ..ResetConfig::default() };
    let thermal = simulate_reset(&p, &cfg).unwrap();
    let ground = simulate_reset(&p, &ResetConfig { start: ResetStart::Ground, ..cfg }).unwrap();
    assert!(thermal.max_trace_error < 1e-8 && ground.max_trace_error < 1e-8);
    assert!((thermal.final_e0 - ground.final_e0).abs() < 0.01, "{} vs {}", thermal.final_e0, ground.final_e0);
}

#[test]
fn reset_without_drives_is_static() {
    let mut p = CircuitParams::reference_device();
    calibrate_coupling(&mut p, 60.0, Truncation::default()).unwrap();
    let cfg = ResetConfig { rabi_g0h0_mhz: 0.0, rabi_h0e1_mhz: 0.0, duration_us: 1.0, sample_ns: 50.0, ..ResetConfig::default() };
    let r = simulate_reset(&p, &cfg).unwrap();
    for x in &r.p_e0 {
        assert!((x - 0.5).abs() < 1e-8);
    }
}
