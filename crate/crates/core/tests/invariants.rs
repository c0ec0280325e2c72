//! End-to-end invariants across modules.

use std::f64::consts::PI;

use num_complex::Complex64;
use ptcs_core::checks::{run_suite, CheckOptions, Tolerances};
use ptcs_core::coherent_states::{cs_coefficients, cs_wavefunction};
use ptcs_core::cs_quantization::ClassicalSymbol;
use ptcs_core::dynamics::{classical_trajectory, evolve, husimi, semiclassical_energy, time_averaged_husimi};
use ptcs_core::eigensystem::{EigenBasis, SpectralState};
use ptcs_core::io::{emit_grid, read_grid, GridData};
use ptcs_core::physical_model::{GridSpec, PhysicalConfig, ELECTRON_VOLT};
use ptcs_core::Error;

fn reconstruction_sup(nu: f64, q: f64, p: f64, nmax: usize) -> f64 {
    let cs = cs_coefficients(nu, q, p, nu, nmax).unwrap();
    let basis = EigenBasis::new(nu, nmax).unwrap();
    (0..=2000)
        .map(|k| {
            let t = PI * k as f64 / 2000.0;
            (cs.state.evaluate(&basis, t).unwrap() - cs_wavefunction(nu, q, p, t).unwrap()).norm()
        })
        .fold(0.0f64, f64::max)
}

#[test]
fn reconstruction_converges_cubically_at_the_walls() {
    let errors: Vec<f64> = [64, 128, 256]
        .iter()
        .map(|&n| reconstruction_sup(1.0, 2.0, 3.0, n))
        .collect();
    assert!(errors[0] / errors[1] > 6.0 && errors[1] / errors[2] > 6.0, "{errors:?}");
}

#[test]
fn reconstruction_within_1e_7_at_64_modes() {
    assert!(reconstruction_sup(5.0, PI / 2.0, 3.0, 64) < 1e-7);
    assert!(reconstruction_sup(3.0, PI / 2.0, 3.0, 64) < 1e-7);
    assert!(reconstruction_sup(1.0, PI / 2.0, 0.0, 64) < 1e-12);
}

#[test]
fn husimi_mass_approaches_one_with_momentum_window() {
    let state = cs_coefficients(0.0, PI / 5.0, 4.0, 0.0, 64).unwrap().state;
    let masses: Vec<f64> = [12.0, 24.0]
        .iter()
        .map(|&p_max| {
            let grid = GridSpec::new(96, (8.0 * p_max) as usize, p_max, 0.01 * PI).unwrap();
            husimi(&state, 0.0, &grid).unwrap().mass()
        })
        .collect();
    assert!(masses[0] < masses[1] && masses[1] < 1.0 + 1e-3, "{masses:?}");
    assert!(masses[1] > 0.995, "{masses:?}");
}

#[test]
fn stationary_states_have_stationary_husimi() {
    let state = SpectralState::basis(0.5, 3, 12).unwrap();
    let grid = GridSpec::new(24, 24, 8.0, 0.02 * PI).unwrap();
    let rho = husimi(&state, 0.5, &grid).unwrap();
    let avg = time_averaged_husimi(&state, 0.5, &grid).unwrap();
    assert!(rho.min_value() >= 0.0);
    let diff = (&rho.values - &avg.values).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(diff < 1e-15 * rho.max_value().max(1.0));
    let later = evolve(&state, 1.234, 0.5).unwrap();
    assert!((later.coeffs()[3] - Complex64::from_polar(1.0, -1.234 * 20.25)).norm() < 1e-13);
}

#[test]
fn evolution_rejects_mismatched_or_truncated_states() {
    let state = SpectralState::basis(0.0, 1, 8).unwrap();
    assert!(evolve(&state, 1.0, 1.0).is_err());
    let lossy = SpectralState::new(0.0, vec![Complex64::new(0.5, 0.0); 2]).unwrap();
    assert!(matches!(evolve(&lossy, 1.0, 0.0), Err(Error::InvalidState(_))));
}

#[test]
fn trajectory_stays_on_its_energy_shell() {
    for nu in [0.0, 1.0] {
        let e = 20.0;
        let points = classical_trajectory(e, nu, 400).unwrap();
        assert_eq!(points.first(), points.last());
        for (q, p) in points {
            assert!((semiclassical_energy(nu, q, p) / e - 1.0).abs() < 1e-10);
        }
    }
    assert!(classical_trajectory(0.1, 0.0, 100).is_err());
}

#[test]
fn grid_files_round_trip() {
    let state = SpectralState::basis(0.0, 0, 4).unwrap();
    let grid = GridSpec::new(8, 6, 5.0, 0.05 * PI).unwrap();
    let rho = husimi(&state, 0.0, &grid).unwrap();
    let data = GridData::from_distribution(&rho, vec![("nu".into(), "0".into())]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rho.csv");
    emit_grid(&data, &path).unwrap();
    let back = read_grid(&path).unwrap();
    assert_eq!(back, data);
    assert_eq!(back.metadata_value("nu"), Some("0"));
}

#[test]
fn electron_config_from_json() {
    let cfg = PhysicalConfig::from_json_str(r#"{"L": 2e-9, "particle": "electron", "nu": 0}"#).unwrap();
    assert!((cfg.e0() / ELECTRON_VOLT - 0.094008).abs() < 1e-5);
    assert!(PhysicalConfig::from_json_str(r#"{"L": 2e-9, "particle": "muon"}"#).is_err());
    assert!(PhysicalConfig::from_json_str(r#"{"L": 2e-9, "mass": 1.0, "colour": 3}"#).is_err());
    assert!(PhysicalConfig::from_json_str(r#"{"L": -1.0, "mass": 1.0}"#).is_err());
}

#[test]
fn unknown_names_are_rejected() {
    assert!(matches!(
        ClassicalSymbol::named("spin", 0.0),
        Err(Error::Unknown { .. })
    ));
    assert!(matches!(
        run_suite("nonsense", &CheckOptions::default()),
        Err(Error::Unknown { .. })
    ));
    assert!(Tolerances::parse(&["abc".into()]).is_err());
    assert!(Tolerances::parse(&["=1e-3".into()]).is_err());
    let opts = CheckOptions {
        tolerances: Tolerances::parse(&["no.such.case=1e-3".into()]).unwrap(),
        ..CheckOptions::default()
    };
    assert!(matches!(run_suite("susy", &opts), Err(Error::Unknown { .. })));
}

#[test]
fn tolerance_overrides_change_outcomes() {
    let opts = CheckOptions {
        tolerances: Tolerances::parse(&["susy.factorization.nu=1=1e-30".into()]).unwrap(),
        ..CheckOptions::default()
    };
    let report = run_suite("susy", &opts).unwrap();
    let failed: Vec<_> = report.failures().map(|c| c.name.as_str()).collect();
    assert_eq!(failed, ["susy.factorization.nu=1"]);
}
