use std::f64::consts::{FRAC_PI_2, PI};

use fluxonium::gates::*;
use fluxonium::Error;
use proptest::prelude::*;

const DELTA: f64 = 0.014;
const DT_P: f64 = 4.76;

fn device() -> NativeSet {
    NativeSet::calibrate(GateDevice { delta: DELTA, dt_p: DT_P }).unwrap()
}

fn segment() -> impl Strategy<Value = Segment> {
    prop_oneof![
        (-0.3f64..0.3, 0.5f64..8.0).prop_map(|(amplitude, duration)| Segment::Spike { amplitude, duration }),
        (0.1f64..40.0).prop_map(|duration| Segment::Idle { duration }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn y_half_closed_form_exact(lambda in 0.0f64..(2f64.sqrt() - 1.0)) {
        let a = synthesize(NativeTarget::YHalf, lambda).unwrap();
        prop_assert!(trace_fidelity(&a.ideal_unitary(), &ry(FRAC_PI_2)) > 1.0 - 1e-9);
    }

    #[test]
    fn y_closed_form_exact(lambda in 0.0f64..0.999) {
        let a = synthesize(NativeTarget::Y, lambda).unwrap();
        prop_assert!(trace_fidelity(&a.ideal_unitary(), &ry(PI)) > 1.0 - 1e-9);
    }

    #[test]
    fn propagator_composes(segs in prop::collection::vec(segment(), 1..6), split in 0usize..6) {
        let split = split.min(segs.len());
        let whole = PulseProgram::new(DELTA, segs.clone()).unwrap();
        let first = PulseProgram::new(DELTA, segs[..split].to_vec()).unwrap();
        let second = PulseProgram::new(DELTA, segs[split..].to_vec()).unwrap();
        let product = program_unitary(&second) * program_unitary(&first);
        prop_assert!((program_unitary(&whole) - product).norm() < 1e-12);
    }

    #[test]
    fn propagation_is_unitary(segs in prop::collection::vec(segment(), 1..6), theta in 0.0f64..PI) {
        let p = PulseProgram::new(DELTA, segs).unwrap();
        let psi = state_from_bloch(nalgebra::Vector3::new(theta.sin(), 0.0, theta.cos()));
        let out = propagate(&p, &psi).final_state;
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
        let u = program_unitary(&p);
        prop_assert!((u.adjoint() * u - Unitary::identity()).norm() < 1e-12);
    }

    #[test]
    fn spike_area_sets_rotation_without_splitting(area in -1.0f64..1.0, k in 0.25f64..4.0) {
        let dt = 3.0;
        let base = PulseProgram::new(0.0, vec![Segment::Spike { amplitude: area / dt * 2.0, duration: dt }]).unwrap();
        let scaled = PulseProgram::new(0.0, vec![Segment::Spike { amplitude: area / dt * 2.0 * k, duration: dt / k }]).unwrap();
        prop_assert!(trace_fidelity(&program_unitary(&base), &program_unitary(&scaled)) > 1.0 - 1e-9);
    }
}

#[test]
fn zero_lambda_limits() {
    let a = synthesize(NativeTarget::YHalf, 0.0).unwrap();
    assert!((a.theta_x - FRAC_PI_2).abs() < 1e-12 && (a.theta_z - FRAC_PI_2).abs() < 1e-12);
    let b = synthesize(NativeTarget::Y, 0.0).unwrap();
    assert!((b.theta_x - FRAC_PI_2).abs() < 1e-12 && (b.theta_z - PI).abs() < 1e-12);
}

#[test]
fn lambda_outside_range_is_rejected() {
    assert!(matches!(synthesize(NativeTarget::YHalf, 0.5), Err(Error::Domain(_))));
    assert!(matches!(synthesize(NativeTarget::Y, -0.1), Err(Error::Domain(_))));
}

#[test]
fn four_y_halves_are_identity() {
    let a = synthesize(NativeTarget::YHalf, 0.2).unwrap();
    let u = a.ideal_unitary();
    assert!(trace_fidelity(&(u * u * u * u), &Unitary::identity()) > 1.0 - 1e-9);
}

#[test]
fn free_precession_at_splitting() {
    let p = PulseProgram::new(DELTA, vec![Segment::Idle { duration: 150.0 }]).unwrap();
    let plus = state_from_bloch(nalgebra::Vector3::new(1.0, 0.0, 0.0));
    for (t, b) in propagate(&p, &plus).trajectory {
        assert!((b.x - (2.0 * PI * DELTA * t).cos()).abs() < 1e-9, "t = {t}");
    }
    let z = z_idle(FRAC_PI_2, DELTA).unwrap();
    assert!((z.length() - 1.0 / (4.0 * DELTA)).abs() < 1e-12);
}

#[test]
fn rabi_map_even_in_amplitude_for_poles() {
    let amps = [0.02, 0.07, 0.13];
    let neg: Vec<f64> = amps.iter().map(|a| -a).collect();
    let idles = [0.0, 11.0, 37.5, 64.0];
    for pole in [0.0, PI] {
        let psi = state_from_bloch(nalgebra::Vector3::new(pole.sin(), 0.0, pole.cos()));
        let a = rabi2d(DELTA, DT_P, &amps, &idles, &psi).unwrap();
        let b = rabi2d(DELTA, DT_P, &neg, &idles, &psi).unwrap();
        for (ra, rb) in a.sz.iter().zip(&b.sz) {
            for (x, y) in ra.iter().zip(rb) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn rabi_column_without_spikes_is_larmor() {
    let idles: Vec<f64> = (0..40).map(|k| k as f64 * 3.7).collect();
    let plus = state_from_bloch(nalgebra::Vector3::new(1.0, 0.0, 0.0));
    let m = rabi2d(DELTA, DT_P, &[0.0], &idles, &plus).unwrap();
    for (k, &t) in idles.iter().enumerate() {
        let total = t + 2.0 * DT_P;
        assert!((m.sx[0][k] - (2.0 * PI * DELTA * total).cos()).abs() < 1e-9);
    }
}

#[test]
fn pulse_mapping_checks_consistency() {
    let a = synthesize(NativeTarget::YHalf, 0.2).unwrap();
    assert!(matches!(angles_to_pulse(&a, DELTA, DT_P), Err(Error::Calibration(_))));
    let idle_only = GateAngles { theta_x: 0.0, theta_z: FRAC_PI_2, lambda: 0.0 };
    let p = angles_to_pulse(&idle_only, DELTA, DT_P).unwrap();
    assert_eq!(p.segments.len(), 1);
    assert!(matches!(p.segments[0], Segment::Idle { .. }));
}

#[test]
fn composed_gates_have_zero_net_flux() {
    let n = device();
    for g in [GateName::YHalf, GateName::MinusYHalf, GateName::XHalf, GateName::MinusXHalf, GateName::Y, GateName::X, GateName::Z] {
        assert_eq!(n.compose(g).unwrap().net_area(), 0.0, "{}", g.label());
    }
}

#[test]
fn computational_gates_fit_in_one_larmor_period() {
    let n = device();
    for g in [GateName::YHalf, GateName::MinusYHalf, GateName::XHalf, GateName::MinusXHalf] {
        assert!(g.is_computational());
        assert!(n.compose(g).unwrap().length() <= 1.0 / DELTA, "{}", g.label());
    }
}

#[test]
fn calibrated_pulses_approximate_targets() {
    let n = device();
    let lambda = n.y_half_angles.lambda;
    assert!((2.0 * PI * DELTA * DT_P / n.y_half_angles.theta_x - lambda).abs() < 1e-9);
    for g in [GateName::YHalf, GateName::MinusYHalf, GateName::ZHalf, GateName::XHalf, GateName::Z] {
        let u = program_unitary(&n.compose(g).unwrap());
        let f = trace_fidelity(&u, &g.target());
        assert!(f > 0.998, "{} fidelity {f}", g.label());
    }
    // Z is exact by idling.
    let z = program_unitary(&n.compose(GateName::Z).unwrap());
    assert!(trace_fidelity(&z, &rz(PI)) > 1.0 - 1e-12);
}
