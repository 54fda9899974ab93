use fluxonium::circuit::{self, DEFAULT_BASIS};
use fluxonium::CircuitParams;
use proptest::prelude::*;

fn reference() -> CircuitParams {
    CircuitParams::reference_device()
}

#[test]
fn qubit_splitting_at_frustration() {
    let s = circuit::solve(&reference(), 0.5, DEFAULT_BASIS, 6).unwrap();
    let mhz = s.qubit_frequency() * 1e3;
    assert!((mhz - 14.0).abs() < 1.5, "splitting {mhz} MHz");
}

#[test]
fn charge_and_flux_elements_related_by_frequency() {
    let p = reference();
    for k in 0..21 {
        let flux = 0.4 + 0.01 * k as f64;
        let s = circuit::solve(&p, flux, DEFAULT_BASIS, 6).unwrap();
        for i in 0..4 {
            for j in (i + 1)..4 {
                let phi = s.phi(i, j).abs();
                if phi < 1e-6 {
                    continue;
                }
                let expect = s.transition(i, j).abs() / (8.0 * p.e_c) * phi;
                let got = s.n(i, j).norm();
                assert!(
                    ((got - expect) / expect).abs() < 1e-6,
                    "flux {flux} ({i},{j}): |n| = {got}, (w/8Ec)|phi| = {expect}"
                );
            }
        }
    }
}

#[test]
fn low_levels_converged_in_basis() {
    let p = reference();
    let a = circuit::solve(&p, 0.47, 120, 8).unwrap();
    let b = circuit::solve(&p, 0.47, 200, 8).unwrap();
    for k in 0..8 {
        assert!((a.energies[k] - b.energies[k]).abs() < 1e-9, "level {k}");
    }
}

#[test]
fn splitting_grows_away_from_frustration() {
    let p = reference();
    let f = |x: f64| circuit::solve(&p, x, DEFAULT_BASIS, 4).unwrap().qubit_frequency();
    assert!(f(0.49) > f(0.5));
    assert!(f(0.45) > f(0.49));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parity_forbids_g_f_and_e_h_at_frustration(
        e_c in 0.35f64..0.8,
        e_j in 2.5f64..5.0,
        e_l in 0.1f64..0.4,
    ) {
        let p = CircuitParams::new(e_c, e_j, e_l, 5.7, 600.0).unwrap();
        let s = circuit::solve(&p, 0.5, DEFAULT_BASIS, 6).unwrap();
        prop_assert!(s.n(0, 2).norm() < 1e-8, "n_gf = {}", s.n(0, 2).norm());
        prop_assert!(s.n(1, 3).norm() < 1e-8, "n_eh = {}", s.n(1, 3).norm());
        prop_assert!(s.phi(0, 2).abs() < 1e-8);
    }

    #[test]
    fn spectrum_symmetric_about_frustration(d in 0.0f64..0.5) {
        let p = reference();
        let a = circuit::solve(&p, 0.5 - d, DEFAULT_BASIS, 6).unwrap();
        let b = circuit::solve(&p, 0.5 + d, DEFAULT_BASIS, 6).unwrap();
        for k in 0..6 {
            prop_assert!((a.energies[k] - b.energies[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn spectrum_periodic_in_flux_quantum(x in 0.0f64..1.0) {
        let p = reference();
        let a = circuit::solve(&p, x, DEFAULT_BASIS, 5).unwrap();
        let b = circuit::solve(&p, x + 1.0, DEFAULT_BASIS, 5).unwrap();
        for k in 0..5 {
            prop_assert!((a.energies[k] - b.energies[k]).abs() < 1e-9);
        }
    }
}
