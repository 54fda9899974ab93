use fluxonium::circuit::{self, DEFAULT_BASIS};
use fluxonium::coupled::{build_dressed, calibrate_coupling, Truncation};
use fluxonium::noise::*;
use fluxonium::units::{bose_occupation, ghz_to_joule, ghz_to_rad_per_s, BOLTZMANN, HBAR};
use fluxonium::{CircuitParams, Error};
use proptest::prelude::*;

proptest! {
    #[test]
    fn channel_rates_non_negative(
        f in 1e-4f64..8.0,
        phi in 0.0f64..5.0,
        n in 0.0f64..1.0,
        t in 0.0f64..200.0,
    ) {
        let p = CircuitParams::reference_device();
        let nz = &p.noise;
        for r in [
            dielectric_rate(f, phi, p.e_c, nz.q_cap, t),
            inductive_rate(f, phi, p.e_l, nz.q_ind, t),
            flux_line_rate(f, phi, p.e_l, nz.r_fluxline, nz.mutual_m, t),
            one_over_f_rate(f, phi, p.e_l, nz.eta_1f),
            charge_line_rate(f, n, nz.q_c, t),
        ] {
            prop_assert!(r >= 0.0 && r.is_finite(), "rate {r}");
        }
    }

    #[test]
    fn bose_weights_obey_detailed_balance(f in 1e-3f64..10.0, t in 5.0f64..300.0) {
        let n = bose_occupation(f, t);
        let boltz = (-ghz_to_joule(f) / (BOLTZMANN * t * 1e-3)).exp();
        prop_assert!(((n / (n + 1.0)) / boltz - 1.0).abs() < 1e-10);
    }

    #[test]
    fn t2e_solves_its_defining_equation(t_c in 1.0f64..1e4, t_phi in 1.0f64..1e5) {
        let t = t2e_closed_form(t_c, t_phi);
        let lhs = (-t / t_c - (t / t_phi).powi(2)).exp();
        prop_assert!((lhs - (-1.0f64).exp()).abs() < 1e-9);
        prop_assert!(t <= t_c);
    }

    #[test]
    fn dielectric_matches_inductive_at_matched_loss(f in 0.005f64..6.0, t in 1.0f64..100.0, phi in 0.1f64..3.0) {
        // ħω²/(8 E_C Q_cap) = E_L/(ħ Q_ind) makes the two formulas identical.
        let (e_c, e_l, q_cap) = (0.5, 0.15, 1e5);
        let w = ghz_to_rad_per_s(f);
        let q_ind = 8.0 * ghz_to_joule(e_c) * q_cap * ghz_to_joule(e_l) / (HBAR * HBAR * w * w);
        let d = dielectric_rate(f, phi, e_c, q_cap, t);
        let i = inductive_rate(f, phi, e_l, q_ind, t);
        prop_assert!((d / i - 1.0).abs() < 1e-10, "{d} vs {i}");
    }
}

#[test]
fn echo_weight_value() {
    let w = echo_weight_three_pi();
    assert!((w - (4.0 * 2f64.ln() - 2.25 * 3f64.ln())).abs() < 1e-15);
    assert!(w > 0.0 && w < 1.0);
}

#[test]
fn t2e_at_frustration_is_the_flux_insensitive_limit() {
    let p = CircuitParams::reference_device();
    let pts = t2e_curve(&p, &[0.5], 3).unwrap();
    assert_eq!(pts[0].slope_ghz_per_phi0, 0.0);
    assert_eq!(pts[0].t2e_us, p.noise.t_c);
}

#[test]
fn t2e_falls_away_from_frustration() {
    let p = CircuitParams::reference_device();
    let pts = t2e_curve(&p, &[0.5, 0.49, 0.47, 0.45], 3).unwrap();
    for w in pts.windows(2) {
        assert!(w[1].t2e_us < w[0].t2e_us);
    }
}

#[test]
fn flux_slope_richardson_consistent() {
    let p = CircuitParams::reference_device();
    let a = flux_slope_with_step(&p, 0.46, 1e-5).unwrap();
    let b = flux_slope_with_step(&p, 0.46, 2e-5).unwrap();
    let richardson = (4.0 * a - b) / 3.0;
    assert!((a / richardson - 1.0).abs() < 1e-6, "{a} vs {richardson}");
}

#[test]
fn unsupported_echo_and_ramsey_requests() {
    let p = CircuitParams::reference_device();
    assert!(matches!(t2e_curve(&p, &[0.45], 2), Err(Error::Unsupported(_))));
    assert!(matches!(ramsey_t_phi(&p, 0.45), Err(Error::Unsupported(_))));
    let mut q = p.clone();
    q.noise.omega_ir = Some(1e9);
    assert!(ramsey_t_phi(&q, 0.45).unwrap() > 0.0);
    // The log must be positive at the self-consistent time.
    q.noise.omega_ir = Some(2.0 * std::f64::consts::PI);
    assert!(matches!(ramsey_t_phi(&q, 0.45), Err(Error::Domain(_))));
}

#[test]
fn uncoupled_budget_combines_channels() {
    let p = CircuitParams::reference_device();
    let pt = t1_point(&p, 0.47, Truncation::default()).unwrap();
    let channels = [pt.dielectric, pt.inductive, pt.flux_line, pt.one_over_f, pt.charge_line];
    let expect = 1.0 / channels.iter().map(|t| 1.0 / t).sum::<f64>();
    assert_eq!(pt.purcell, Some(f64::INFINITY));
    assert!((pt.total.unwrap() / expect - 1.0).abs() < 1e-12);
}

#[test]
fn purcell_rates_vanish_without_loss_and_scale_with_kappa() {
    let mut p = CircuitParams::reference_device();
    calibrate_coupling(&mut p, 60.0, Truncation::default()).unwrap();
    let ds = build_dressed(&p, 0.5, Truncation::default()).unwrap();
    let zero = purcell_rates(&ds, 0.0, 60.0).unwrap();
    assert!(zero.rates.iter().all(|&r| r == 0.0));
    let a = purcell_rates(&ds, 9.5, 60.0).unwrap();
    let b = purcell_rates(&ds, 19.0, 60.0).unwrap();
    assert!((b.qubit_rate() / a.qubit_rate() - 2.0).abs() < 1e-12);
    assert!(a.direct_t1_us() > 0.0 && a.direct_t1_us().is_finite());
    assert!(purcell_rates(&ds, -1.0, 60.0).is_err());
}

#[test]
fn qubit_matrix_element_feeds_rates() {
    // Doubling |φ| quadruples every φ-driven rate.
    let p = CircuitParams::reference_device();
    let s = circuit::solve(&p, 0.5, DEFAULT_BASIS, 2).unwrap();
    let (f, phi) = (s.qubit_frequency(), s.phi(0, 1).abs());
    let r1 = dielectric_rate(f, phi, p.e_c, p.noise.q_cap, 42.0);
    let r2 = dielectric_rate(f, 2.0 * phi, p.e_c, p.noise.q_cap, 42.0);
    assert!((r2 / r1 - 4.0).abs() < 1e-12);
}
