//! Superpotential and the ladder operators `A = W + d/dt`, `A^dag = W - d/dt`
//! (reduced units, `hbar pi / L = 1`).
//!
//! With `a = nu + 1` they factorize the Hamiltonian as `H_nu = A^dag A + a^2`
//! and the partner as `A A^dag + a^2 = H_{nu+1}`. `a^2` is the ground energy.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::eigensystem::{energy, Eigenfunction};
use crate::error::{Error, Result};
use crate::physical_model::{check_nu, DEFAULT_Q_MARGIN};
use crate::special_functions::{gauss_legendre, QuadratureRule};
use crate::wavefunction::{SecondDerivative, Wavefunction};

/// `W(t) = -(nu + 1) cot t` for `t` strictly inside `(0, pi)`.
pub fn superpotential(nu: f64, t: f64) -> Result<f64> {
    check_nu(nu)?;
    check_interior(t)?;
    Ok(-(nu + 1.0) / t.tan())
}

/// `W'(t) = (nu + 1) / sin^2 t`.
pub fn superpotential_derivative(nu: f64, t: f64) -> Result<f64> {
    check_nu(nu)?;
    check_interior(t)?;
    let s = t.sin();
    Ok((nu + 1.0) / (s * s))
}

fn check_interior(t: f64) -> Result<()> {
    if t > 0.0 && t < PI {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            value: t,
            range: "(0, pi), walls excluded".into(),
        })
    }
}

/// `A psi = W psi + psi'`.
#[derive(Clone, Debug)]
pub struct Lowered<S> {
    inner: S,
    a: f64,
}

/// `A^dag psi = W psi - psi'`.
#[derive(Clone, Debug)]
pub struct Raised<S> {
    inner: S,
    a: f64,
}

pub fn apply_lowering<S: Wavefunction>(state: S, nu: f64) -> Result<Lowered<S>> {
    check_nu(nu)?;
    Ok(Lowered {
        inner: state,
        a: nu + 1.0,
    })
}

pub fn apply_raising<S: Wavefunction>(state: S, nu: f64) -> Result<Raised<S>> {
    check_nu(nu)?;
    Ok(Raised {
        inner: state,
        a: nu + 1.0,
    })
}

fn w_and_slope(a: f64, t: f64) -> (f64, f64) {
    let (s, c) = t.sin_cos();
    (-a * c / s, a / (s * s))
}

impl<S: Wavefunction> Lowered<S> {
    pub fn inner(&self) -> &S {
        &self.inner
    }

    /// Pointwise value; only needs the first derivative of the inner state.
    pub fn value_at(&self, t: f64) -> Complex64 {
        let (w, _) = w_and_slope(self.a, t);
        self.inner.value(t) * w + self.inner.derivative(t)
    }

    pub fn try_value(&self, t: f64) -> Result<Complex64> {
        check_interior(t)?;
        Ok(self.value_at(t))
    }
}

impl<S: Wavefunction> Raised<S> {
    pub fn inner(&self) -> &S {
        &self.inner
    }

    pub fn value_at(&self, t: f64) -> Complex64 {
        let (w, _) = w_and_slope(self.a, t);
        self.inner.value(t) * w - self.inner.derivative(t)
    }

    pub fn try_value(&self, t: f64) -> Result<Complex64> {
        check_interior(t)?;
        Ok(self.value_at(t))
    }
}

impl<S: SecondDerivative> Wavefunction for Lowered<S> {
    fn value(&self, t: f64) -> Complex64 {
        self.value_at(t)
    }

    fn derivative(&self, t: f64) -> Complex64 {
        let (w, dw) = w_and_slope(self.a, t);
        self.inner.value(t) * dw + self.inner.derivative(t) * w + self.inner.second_derivative(t)
    }
}

impl<S: SecondDerivative> Wavefunction for Raised<S> {
    fn value(&self, t: f64) -> Complex64 {
        self.value_at(t)
    }

    fn derivative(&self, t: f64) -> Complex64 {
        let (w, dw) = w_and_slope(self.a, t);
        self.inner.value(t) * dw + self.inner.derivative(t) * w - self.inner.second_derivative(t)
    }
}

/// Interior interval `[margin, pi - margin]` and the rule used for residual norms.
#[derive(Clone, Debug)]
pub struct ResidualWindow {
    margin: f64,
    rule: std::sync::Arc<QuadratureRule>,
}

impl ResidualWindow {
    pub fn new(margin: f64, nodes: usize) -> Result<Self> {
        if !(margin > 0.0 && margin < PI / 4.0) {
            return Err(Error::InvalidParameter {
                name: "margin",
                reason: format!("{margin} outside (0, pi/4)"),
            });
        }
        Ok(Self {
            margin,
            rule: gauss_legendre(nodes, margin, PI - margin)?,
        })
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    fn norm(&self, f: impl Fn(f64) -> Complex64) -> f64 {
        self.rule.integrate(|t| f(t).norm_sqr()).sqrt()
    }

    fn inner(&self, f: impl Fn(f64) -> Complex64, g: impl Fn(f64) -> Complex64) -> Complex64 {
        self.rule.integrate_complex(|t| f(t).conj() * g(t))
    }
}

impl Default for ResidualWindow {
    fn default() -> Self {
        Self::new(DEFAULT_Q_MARGIN, 400).expect("valid default window")
    }
}

/// `||(A^dag A + a^2 - E_n) phi_n|| / E_n` on the window.
pub fn factorization_residual(nu: f64, n: usize, window: &ResidualWindow) -> Result<f64> {
    let phi = Eigenfunction::new(n, nu)?;
    let a2 = (nu + 1.0).powi(2);
    let e = energy(n, nu);
    let chain = apply_raising(apply_lowering(&phi, nu)?, nu)?;
    let r = window.norm(|t| chain.value_at(t) + phi.value(t) * (a2 - e));
    Ok(r / e)
}

/// `1 - |<A phi_{n+1,nu}, phi_{n,nu+1}>|^2 / (||A phi_{n+1,nu}||^2 ||phi_{n,nu+1}||^2)`.
pub fn intertwining_defect(nu: f64, n: usize, window: &ResidualWindow) -> Result<f64> {
    let upper = Eigenfunction::new(n + 1, nu)?;
    let partner = Eigenfunction::new(n, nu + 1.0)?;
    let lowered = apply_lowering(&upper, nu)?;
    let overlap = window.inner(|t| lowered.value_at(t), |t| partner.value(t));
    let a = window.norm(|t| lowered.value_at(t));
    let b = window.norm(|t| partner.value(t));
    Ok(1.0 - overlap.norm_sqr() / (a * a * b * b))
}

/// Same as [`intertwining_defect`] in the raising direction:
/// `A^dag phi_{n,nu+1}` against `phi_{n+1,nu}`.
pub fn reverse_intertwining_defect(nu: f64, n: usize, window: &ResidualWindow) -> Result<f64> {
    let partner = Eigenfunction::new(n, nu + 1.0)?;
    let target = Eigenfunction::new(n + 1, nu)?;
    let raised = apply_raising(&partner, nu)?;
    let overlap = window.inner(|t| raised.value_at(t), |t| target.value(t));
    let a = window.norm(|t| raised.value_at(t));
    let b = window.norm(|t| target.value(t));
    Ok(1.0 - overlap.norm_sqr() / (a * a * b * b))
}

/// `sup |A phi_0| / sup |phi_0|` over `points` evenly spaced interior points.
pub fn annihilation_residual(nu: f64, points: usize, margin: f64) -> Result<f64> {
    let phi = Eigenfunction::new(0, nu)?;
    let lowered = apply_lowering(&phi, nu)?;
    let mut worst: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for k in 0..points {
        let t = margin + (PI - 2.0 * margin) * k as f64 / (points - 1).max(1) as f64;
        worst = worst.max(lowered.try_value(t)?.norm());
        peak = peak.max(phi.eval(t).abs());
    }
    Ok(worst / peak)
}

/// `|<A^dag phi_m, phi_n> - <phi_m, A phi_n>|`.
pub fn adjointness_defect(nu: f64, m: usize, n: usize, window: &ResidualWindow) -> Result<f64> {
    let pm = Eigenfunction::new(m, nu)?;
    let pn = Eigenfunction::new(n, nu)?;
    let raised = apply_raising(&pm, nu)?;
    let lowered = apply_lowering(&pn, nu)?;
    let left = window.inner(|t| raised.value_at(t), |t| pn.value(t));
    let right = window.inner(|t| pm.value(t), |t| lowered.value_at(t));
    Ok((left - right).norm())
}

/// Outcome of applying the partner Hamiltonian `A A^dag + a^2` to `phi_{n,nu+1}`.
#[derive(Clone, Debug, Serialize)]
pub struct PartnerReport {
    pub nu: f64,
    pub n: usize,
    /// `(n + nu + 2)^2`, the `H_{nu+1}` eigenvalue.
    pub eigenvalue: f64,
    /// Rayleigh quotient of the partner Hamiltonian in `phi_{n,nu+1}`.
    pub measured: f64,
    /// `||(A A^dag + a^2 - eigenvalue) phi|| / eigenvalue`.
    pub residual: f64,
}

pub fn check_partner_spectrum(nu: f64, n: usize) -> Result<PartnerReport> {
    check_partner_spectrum_in(nu, n, &ResidualWindow::default())
}

pub fn check_partner_spectrum_in(nu: f64, n: usize, window: &ResidualWindow) -> Result<PartnerReport> {
    let phi = Eigenfunction::new(n, nu + 1.0)?;
    let a2 = (nu + 1.0).powi(2);
    let eigenvalue = energy(n, nu + 1.0);
    let chain = apply_lowering(apply_raising(&phi, nu)?, nu)?;
    let applied = |t: f64| chain.value_at(t) + phi.value(t) * a2;
    let measured = window.inner(|t| phi.value(t), applied).re / window.norm(|t| phi.value(t)).powi(2);
    let residual = window.norm(|t| applied(t) - phi.value(t) * eigenvalue) / eigenvalue;
    Ok(PartnerReport {
        nu,
        n,
        eigenvalue,
        measured,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn superpotential_values() {
        assert!(superpotential(0.0, PI / 2.0).unwrap().abs() < 1e-16);
        assert!((superpotential(0.0, FRAC_PI_4).unwrap() + 1.0).abs() < 1e-15);
        assert!((superpotential(1.0, FRAC_PI_4).unwrap() + 2.0).abs() < 1e-15);
        assert!(superpotential(0.0, 0.0).is_err());
        assert!(superpotential(0.0, PI).is_err());
    }

    #[test]
    fn partner_eigenvalues() {
        assert_eq!(check_partner_spectrum(0.0, 0).unwrap().eigenvalue, 4.0);
        assert_eq!(check_partner_spectrum(0.5, 1).unwrap().eigenvalue, 12.25);
    }

    #[test]
    fn endpoint_rejected() {
        let phi = Eigenfunction::new(0, 0.0).unwrap();
        let l = apply_lowering(&phi, 0.0).unwrap();
        assert!(l.try_value(0.0).is_err());
        assert!(l.try_value(1.0).is_ok());
    }

    #[test]
    fn factorization_small_n() {
        let w = ResidualWindow::default();
        for n in 0..4 {
            assert!(factorization_residual(0.5, n, &w).unwrap() < 1e-10);
        }
    }
}
