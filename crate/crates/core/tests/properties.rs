//! Property tests over random parameters and labels.

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use ptcs_core::coherent_states::{cs_moments, CoherentState};
use ptcs_core::cs_quantization::{quantize, ClassicalSymbol};
use ptcs_core::eigensystem::{energy, momentum_matrix_element, Eigenfunction};
use ptcs_core::physical_model::{PhysicalConfig, PhysicalPoint, ANGSTROM};
use ptcs_core::special_functions::{gauss_legendre, gegenbauer, ln_gamma, log_gamma_complex};
use ptcs_core::wavefunction::Wavefunction;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn unit_conversions_round_trip(
        length in 1.0f64..200.0,
        nu in 0.0f64..5.0,
        x_frac in 0.001f64..0.999,
        p in -50.0f64..50.0,
        e in 0.0f64..1e3,
        t in 0.0f64..1e3,
    ) {
        let cfg = PhysicalConfig::electron(length * ANGSTROM, nu).unwrap();
        let x = x_frac * cfg.length();
        let point = PhysicalPoint { q: x, p: p * cfg.momentum_unit(), energy: e * cfg.e0(), time: t };
        let back = cfg.from_reduced(cfg.to_reduced(point).unwrap());
        prop_assert!(close(back.q, point.q, 1e-12));
        prop_assert!(close(back.p, point.p, 1e-12));
        prop_assert!(close(back.energy, point.energy, 1e-12));
        prop_assert!(close(back.time, point.time, 1e-12));
        let energy_si = e * cfg.e0();
        prop_assert!(close(cfg.energy_from_reduced(cfg.energy_to_reduced(energy_si)), energy_si, 1e-12));
        prop_assert!(close(cfg.time_to_reduced(cfg.time_from_reduced(t)), t, 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// `n C_n^l(x) = 2 l (x C_{n-1}^{l+1}(x) - C_{n-2}^{l+1}(x))`.
    #[test]
    fn gegenbauer_derivative_identity(n in 2usize..40, lambda in 0.3f64..6.0, x in -1.0f64..1.0) {
        let lhs = n as f64 * gegenbauer(n, lambda, x).unwrap();
        let rhs = 2.0 * lambda
            * (x * gegenbauer(n - 1, lambda + 1.0, x).unwrap() - gegenbauer(n - 2, lambda + 1.0, x).unwrap());
        let scale = gegenbauer(n, lambda, 1.0).unwrap().abs() * n as f64;
        prop_assert!((lhs - rhs).abs() <= 1e-11 * scale.max(1.0));
    }

    #[test]
    fn gegenbauer_orthogonality(m in 0usize..15, n in 0usize..15, k in 1u32..8) {
        let lambda = 0.5 * k as f64;
        let rule = gauss_legendre(200, 0.0, PI).unwrap();
        let inner = |a: usize, b: usize| rule.integrate(|th| {
            gegenbauer(a, lambda, th.cos()).unwrap() * gegenbauer(b, lambda, th.cos()).unwrap()
                * th.sin().powf(2.0 * lambda)
        });
        let expected = |a: usize| {
            let af = a as f64;
            PI * 2f64.powf(1.0 - 2.0 * lambda)
                * (ln_gamma(af + 2.0 * lambda) - ln_gamma(af + 1.0) - 2.0 * ln_gamma(lambda)).exp()
                / (af + lambda)
        };
        let value = inner(m, n);
        if m == n {
            prop_assert!(close(value, expected(m), 1e-10));
        } else {
            prop_assert!(value.abs() <= 1e-10 * (expected(m) * expected(n)).sqrt());
        }
    }

    #[test]
    fn log_gamma_recurrence(re in 0.1f64..40.0, im in -40.0f64..40.0) {
        let z = Complex64::new(re, im);
        let step = log_gamma_complex(z + 1.0).unwrap() - log_gamma_complex(z).unwrap() - z.ln();
        prop_assert!(step.re.abs() <= 1e-12 * z.norm().ln().abs().max(1.0) * 10.0);
        let turns = step.im / (2.0 * PI);
        prop_assert!((turns - turns.round()).abs() <= 1e-12 * z.norm().max(1.0));
    }

    #[test]
    fn momentum_matrix_is_hermitian(m in 0usize..30, n in 0usize..30, nu in 0.0f64..3.0) {
        let a = momentum_matrix_element(m, n, nu).unwrap();
        let b = momentum_matrix_element(n, m, nu).unwrap();
        prop_assert!((a - b.conj()).norm() <= 1e-11 * a.norm().max(1.0));
        prop_assert!(a.re.abs() <= 1e-11 * a.norm().max(1.0));
    }

    #[test]
    fn eigenfunctions_solve_the_eigenproblem(n in 0usize..30, nu in 0.0f64..4.0, t in 0.05f64..3.09) {
        let f = Eigenfunction::new(n, nu).unwrap();
        let e = energy(n, nu);
        let residual = f.apply_hamiltonian(t) - e * f.eval(t);
        let scale = e * (2.0 / PI).sqrt() * 4.0;
        prop_assert!(residual.abs() <= 1e-9 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coherent_state_moments(nu in 0.0f64..3.0, q in 0.05f64..3.09, p in -12.0f64..12.0) {
        let m = cs_moments(nu, q, p).unwrap();
        prop_assert!((m.norm - 1.0).abs() < 1e-10);
        prop_assert!((m.mean_p - Complex64::new(p, 0.0)).norm() < 1e-10 * p.abs().max(1.0));
        let w = -(nu + 1.0) / q.tan();
        prop_assert!((m.mean_w - w).abs() < 1e-8 * w.abs().max(1.0));
        prop_assert!(m.saturation_defect.abs() < 1e-8 * 0.5 * m.mean_w_prime);
    }

    #[test]
    fn coherent_state_modulus_ignores_momentum(nu in 0.0f64..3.0, q in 0.05f64..3.09, p in -12.0f64..12.0, t in 0.0f64..PI) {
        let a = CoherentState::new(nu, q, p).unwrap().value(t).norm();
        let b = CoherentState::new(nu, q, -p).unwrap().value(t).norm();
        prop_assert!((a - b).abs() <= 1e-14 * a.max(1.0));
    }

    #[test]
    fn quantization_is_linear(alpha in -3.0f64..3.0, beta in -3.0f64..3.0, nu_k in 0u32..3) {
        let nu = 0.5 * nu_k as f64;
        let f = ClassicalSymbol::classical_hamiltonian(nu);
        let g = ClassicalSymbol::momentum();
        let combined = quantize(&f.combine(alpha, &g, beta).unwrap(), nu, 12).unwrap();
        let qf = quantize(&f, nu, 12).unwrap();
        let qg = quantize(&g, nu, 12).unwrap();
        let expected = &qf.as_matrix().unwrap().data * alpha + &qg.as_matrix().unwrap().data * beta;
        let diff = (&combined.as_matrix().unwrap().data - &expected).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        prop_assert!(diff <= 1e-10);
    }
}
