//! Spectrum and analytic eigenfunctions of the trigonometric Poschl-Teller
//! Hamiltonian `H = -d^2/dt^2 + nu (nu + 1) / sin^2 t` on `[0, pi]`.
//!
//! `phi_n(t) = Z_n sin^{nu+1}(t) C_n^{nu+1}(cos t)`, `E_n = (n + nu + 1)^2`.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::physical_model::check_nu;
use crate::special_functions::{gegenbauer, gegenbauer_sequence, ln_gamma, wall_graded, QuadratureRule};
use crate::wavefunction::{SecondDerivative, Wavefunction};

/// Truncation used when none is given.
pub const DEFAULT_NMAX: usize = 64;

/// Node count of the default `[0, pi]` rule.
const GRADED_NODES: usize = 32;

/// `(n + nu + 1)^2`, in units of `E0`.
pub fn energy(n: usize, nu: f64) -> f64 {
    let k = n as f64 + nu + 1.0;
    k * k
}

/// `ln Z_n` for the reduced well `[0, pi]`.
pub fn log_norm_constant(n: usize, nu: f64) -> f64 {
    let nf = n as f64;
    ln_gamma(nu + 1.0) + (nu + 0.5) * std::f64::consts::LN_2 - 0.5 * PI.ln()
        + 0.5 * (ln_gamma(nf + 1.0) + (nf + nu + 1.0).ln() - ln_gamma(nf + 2.0 * nu + 2.0))
}

/// Normalization constant `Z_n` of `phi_n` on `[0, pi]`.
///
/// Multiply by `sqrt(pi / L)` for a well of width `L`.
pub fn norm_constant(n: usize, nu: f64) -> Result<f64> {
    check_nu(nu)?;
    Ok(log_norm_constant(n, nu).exp())
}

fn check_position(t: f64) -> Result<()> {
    if !(0.0..=PI).contains(&t) {
        return Err(Error::OutOfDomain {
            value: t,
            range: "[0, pi]".into(),
        });
    }
    Ok(())
}

/// `phi_n(t)` with domain checking.
pub fn eigenfunction(n: usize, nu: f64, t: f64) -> Result<f64> {
    check_position(t)?;
    Ok(Eigenfunction::new(n, nu)?.eval(t))
}

/// Quantum number, energy and normalization of one eigenstate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EigenState {
    pub n: usize,
    pub nu: f64,
    pub energy: f64,
    pub norm_constant: f64,
}

impl EigenState {
    pub fn new(n: usize, nu: f64) -> Result<Self> {
        Ok(Self {
            n,
            nu,
            energy: energy(n, nu),
            norm_constant: norm_constant(n, nu)?,
        })
    }
}

/// A single eigenfunction with analytic derivatives.
#[derive(Clone, Copy, Debug)]
pub struct Eigenfunction {
    n: usize,
    nu: f64,
    norm: f64,
}

impl Eigenfunction {
    pub fn new(n: usize, nu: f64) -> Result<Self> {
        Ok(Self {
            n,
            nu,
            norm: norm_constant(n, nu)?,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    fn lambda(&self) -> f64 {
        self.nu + 1.0
    }

    fn c(&self, order: usize, shift: f64, x: f64) -> f64 {
        gegenbauer(order, self.lambda() + shift, x).expect("lambda > 0")
    }

    pub fn eval(&self, t: f64) -> f64 {
        let a = self.lambda();
        self.norm * t.sin().powf(a) * self.c(self.n, 0.0, t.cos())
    }

    pub fn eval_derivative(&self, t: f64) -> f64 {
        let a = self.lambda();
        let (s, c) = t.sin_cos();
        let g = self.c(self.n, 0.0, c);
        let dg = if self.n == 0 {
            0.0
        } else {
            2.0 * a * self.c(self.n - 1, 1.0, c)
        };
        self.norm * (a * s.powf(a - 1.0) * c * g - s.powf(a + 1.0) * dg)
    }

    pub fn eval_second_derivative(&self, t: f64) -> f64 {
        let a = self.lambda();
        let (s, c) = t.sin_cos();
        let g = self.c(self.n, 0.0, c);
        let dc = if self.n >= 1 {
            2.0 * a * self.c(self.n - 1, 1.0, c)
        } else {
            0.0
        };
        let ddc = if self.n >= 2 {
            4.0 * a * (a + 1.0) * self.c(self.n - 2, 2.0, c)
        } else {
            0.0
        };
        // phi = Z s^a G(t), G(t) = C(cos t): G' = -s C', G'' = -c C' + s^2 C''
        let g1 = -s * dc;
        let g2 = -c * dc + s * s * ddc;
        let curvature = a * (a - 1.0);
        let first = if curvature == 0.0 {
            0.0
        } else {
            curvature * s.powf(a - 2.0) * c * c * g
        };
        self.norm * (first - a * s.powf(a) * g + 2.0 * a * s.powf(a - 1.0) * c * g1 + s.powf(a) * g2)
    }

    /// `(H phi)(t) = -phi'' + nu (nu + 1) phi / sin^2 t`, from the analytic
    /// second derivative.
    pub fn apply_hamiltonian(&self, t: f64) -> f64 {
        let s = t.sin();
        -self.eval_second_derivative(t) + self.nu * (self.nu + 1.0) / (s * s) * self.eval(t)
    }
}

impl Wavefunction for Eigenfunction {
    fn value(&self, t: f64) -> Complex64 {
        self.eval(t).into()
    }

    fn derivative(&self, t: f64) -> Complex64 {
        self.eval_derivative(t).into()
    }
}

impl SecondDerivative for Eigenfunction {
    fn second_derivative(&self, t: f64) -> Complex64 {
        self.eval_second_derivative(t).into()
    }
}

/// All eigenfunctions `phi_0 .. phi_nmax` at fixed `nu`, evaluated together.
#[derive(Clone, Debug)]
pub struct EigenBasis {
    nu: f64,
    norms: Vec<f64>,
}

impl EigenBasis {
    pub fn new(nu: f64, nmax: usize) -> Result<Self> {
        check_nu(nu)?;
        let norms = (0..=nmax).map(|n| log_norm_constant(n, nu).exp()).collect();
        Ok(Self { nu, norms })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn nmax(&self) -> usize {
        self.norms.len() - 1
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn energies(&self) -> Vec<f64> {
        (0..self.len()).map(|n| energy(n, self.nu)).collect()
    }

    /// `out[n] = phi_n(t)`.
    pub fn values(&self, t: f64, out: &mut [f64]) {
        let a = self.nu + 1.0;
        let (s, c) = t.sin_cos();
        gegenbauer_sequence(a, c, out);
        let envelope = s.powf(a);
        for (v, z) in out.iter_mut().zip(&self.norms) {
            *v *= z * envelope;
        }
    }

    /// `values[n] = phi_n(t)`, `derivs[n] = phi_n'(t)`.
    pub fn values_and_derivatives(&self, t: f64, values: &mut [f64], derivs: &mut [f64]) {
        let a = self.nu + 1.0;
        let (s, c) = t.sin_cos();
        let n = values.len();
        gegenbauer_sequence(a, c, values);
        // C_n' = 2a C_{n-1}^{a+1}; derivs[k] holds C_{k-1}^{a+1} until the loop below
        derivs[0] = 0.0;
        if n > 1 {
            gegenbauer_sequence(a + 1.0, c, &mut derivs[1..]);
        }
        let sa = s.powf(a);
        let sa1 = s.powf(a - 1.0);
        for k in 0..n {
            let z = self.norms[k];
            let g = values[k];
            let dg = 2.0 * a * derivs[k];
            derivs[k] = z * (a * sa1 * c * g - sa * s * dg);
            values[k] = z * sa * g;
        }
    }

    /// Basis values `phi_n(t_k)` on the nodes of `rule`, shape `(nmax + 1, nodes)`.
    pub fn sample(&self, nodes: &[f64]) -> Array2<f64> {
        let mut out = Array2::zeros((self.len(), nodes.len()));
        let mut buf = vec![0.0; self.len()];
        for (k, &t) in nodes.iter().enumerate() {
            self.values(t, &mut buf);
            for (n, v) in buf.iter().enumerate() {
                out[[n, k]] = *v;
            }
        }
        out
    }

    /// A wall-graded `[0, pi]` rule that normalizes `phi_nmax` to 1e-13,
    /// doubling the bulk panel count as needed.
    pub fn quadrature(&self) -> Result<Arc<QuadratureRule>> {
        let top = Eigenfunction::new(self.nmax(), self.nu)?;
        let below = Eigenfunction::new(self.nmax().saturating_sub(1), self.nu)?;
        let mut bulk = self.len().div_ceil(2) + 4;
        loop {
            let rule = graded_rule(self.len(), bulk)?;
            let norm = rule.integrate(|t| top.eval(t).powi(2));
            let cross = if self.nmax() > 0 {
                rule.integrate(|t| top.eval(t) * below.eval(t))
            } else {
                0.0
            };
            if (norm - 1.0).abs() < 1e-13 && cross.abs() < 1e-13 {
                return Ok(rule);
            }
            if bulk > 1 << 12 {
                return Err(Error::NoConvergence {
                    what: format!("normalization of phi_{} (nu = {})", self.nmax(), self.nu),
                    previous: 1.0,
                    current: norm,
                });
            }
            bulk *= 2;
        }
    }
}

/// Wall-graded rule for products of eigenfunctions up to index `len - 1`.
fn graded_rule(len: usize, bulk: usize) -> Result<Arc<QuadratureRule>> {
    wall_graded(GRADED_NODES, bulk, (2.0 / len as f64).min(0.25))
}

/// A state expanded over `phi_0 .. phi_nmax` at fixed `nu`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralState {
    nu: f64,
    coeffs: Vec<Complex64>,
}

impl SpectralState {
    pub fn new(nu: f64, coeffs: Vec<Complex64>) -> Result<Self> {
        check_nu(nu)?;
        if coeffs.is_empty() {
            return Err(Error::InvalidState("no coefficients".into()));
        }
        let state = Self { nu, coeffs };
        if state.norm_sqr() > 1.0 + 1e-12 {
            return Err(Error::InvalidState(format!(
                "sum |c_n|^2 = {} exceeds 1",
                state.norm_sqr()
            )));
        }
        Ok(state)
    }

    /// Basis state `phi_n` in a basis truncated at `nmax`.
    pub fn basis(nu: f64, n: usize, nmax: usize) -> Result<Self> {
        if n > nmax {
            return Err(Error::InvalidState(format!("n = {n} beyond nmax = {nmax}")));
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); nmax + 1];
        coeffs[n] = 1.0.into();
        Self::new(nu, coeffs)
    }

    /// Skips the norm check; for internally produced coefficients only.
    pub(crate) fn from_parts(nu: f64, coeffs: Vec<Complex64>) -> Self {
        Self { nu, coeffs }
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn nmax(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `1 - sum |c_n|^2`.
    pub fn truncation_mass(&self) -> f64 {
        1.0 - self.norm_sqr()
    }

    /// `sum E_n |c_n|^2` with the energies of this basis.
    pub fn mean_energy(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| energy(n, self.nu) * c.norm_sqr())
            .sum()
    }

    /// `sum_n c_n phi_n(t)`.
    pub fn evaluate(&self, basis: &EigenBasis, t: f64) -> Result<Complex64> {
        if basis.nu().to_bits() != self.nu.to_bits() || basis.len() < self.coeffs.len() {
            return Err(Error::Mismatch("basis does not cover this state".into()));
        }
        let mut buf = vec![0.0; basis.len()];
        basis.values(t, &mut buf);
        Ok(self.coeffs.iter().zip(&buf).map(|(c, v)| c * v).sum())
    }
}

/// Samples of a state on the nodes of a quadrature rule.
#[derive(Clone, Debug)]
pub struct SampledState {
    rule: Arc<QuadratureRule>,
    values: Vec<Complex64>,
}

impl SampledState {
    pub fn new(rule: Arc<QuadratureRule>, f: impl Fn(f64) -> Complex64) -> Self {
        let values = rule.nodes().iter().map(|&t| f(t)).collect();
        Self { rule, values }
    }

    pub fn from_wavefunction(rule: Arc<QuadratureRule>, psi: &impl Wavefunction) -> Self {
        Self::new(rule, |t| psi.value(t))
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// `<f|g>` for states sampled on the same rule.
pub fn overlap(f: &SampledState, g: &SampledState) -> Result<Complex64> {
    if !Arc::ptr_eq(&f.rule, &g.rule) && *f.rule != *g.rule {
        return Err(Error::Mismatch(
            "states are sampled on different quadrature rules".into(),
        ));
    }
    Ok(f.values
        .iter()
        .zip(&g.values)
        .zip(f.rule.weights())
        .map(|((a, b), w)| a.conj() * b * w)
        .sum())
}

/// `<f|g>` for states in the same eigenbasis; missing coefficients count as zero.
pub fn overlap_spectral(f: &SpectralState, g: &SpectralState) -> Result<Complex64> {
    if f.nu.to_bits() != g.nu.to_bits() {
        return Err(Error::Mismatch(format!(
            "eigenbases differ: nu = {} vs nu = {}",
            f.nu, g.nu
        )));
    }
    Ok(f.coeffs.iter().zip(&g.coeffs).map(|(a, b)| a.conj() * b).sum())
}

/// `<phi_m| -i d/dt |phi_n>`, in units of `pi hbar / L`.
pub fn momentum_matrix_element(m: usize, n: usize, nu: f64) -> Result<Complex64> {
    let bra = Eigenfunction::new(m, nu)?;
    let ket = Eigenfunction::new(n, nu)?;
    let len = m.max(n) + 1;
    let rule = graded_rule(len, len + 8)?;
    let re = rule.integrate(|t| bra.eval(t) * ket.eval_derivative(t));
    Ok(Complex64::new(0.0, -re))
}

/// The full `(nmax + 1)^2` momentum table.
pub fn momentum_matrix(nu: f64, nmax: usize) -> Result<Array2<Complex64>> {
    let basis = EigenBasis::new(nu, nmax)?;
    let rule = basis.quadrature()?;
    let len = basis.len();
    let mut acc = Array2::<f64>::zeros((len, len));
    let mut v = vec![0.0; len];
    let mut d = vec![0.0; len];
    for (&t, &w) in rule.nodes().iter().zip(rule.weights()) {
        basis.values_and_derivatives(t, &mut v, &mut d);
        for i in 0..len {
            let vi = w * v[i];
            for j in 0..len {
                acc[[i, j]] += vi * d[j];
            }
        }
    }
    Ok(acc.mapv(|x| Complex64::new(0.0, -x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_functions::gauss_legendre;

    #[test]
    fn energies() {
        assert_eq!(energy(0, 0.0), 1.0);
        assert_eq!(energy(2, 1.0), 16.0);
        assert_eq!(energy(0, 0.5), 2.25);
    }

    #[test]
    fn infinite_well_limit() {
        let z = (2.0 / PI).sqrt();
        assert!((eigenfunction(0, 0.0, PI / 2.0).unwrap() - z).abs() < 1e-15);
        assert!((eigenfunction(1, 0.0, PI / 4.0).unwrap() - z).abs() < 1e-15);
        assert_eq!(eigenfunction(3, 1.7, 0.0).unwrap(), 0.0);
        assert!(eigenfunction(3, 1.7, PI).unwrap().abs() < 1e-14);
        assert!(eigenfunction(0, 0.0, -0.1).is_err());
        assert!(eigenfunction(0, 0.0, 3.2).is_err());
        assert!((norm_constant(0, 0.0).unwrap() - z).abs() < 1e-15);
        assert!((norm_constant(3, 0.0).unwrap() - z).abs() < 1e-14);
    }

    #[test]
    fn basis_matches_single_evaluations() {
        let basis = EigenBasis::new(1.3, 12).unwrap();
        let mut v = vec![0.0; 13];
        let mut d = vec![0.0; 13];
        for &t in &[0.1, 1.0, 2.9] {
            basis.values_and_derivatives(t, &mut v, &mut d);
            for n in 0..=12 {
                let f = Eigenfunction::new(n, 1.3).unwrap();
                assert!((v[n] - f.eval(t)).abs() < 1e-12 * (1.0 + v[n].abs()));
                assert!((d[n] - f.eval_derivative(t)).abs() < 1e-11 * (1.0 + d[n].abs()));
            }
        }
    }

    #[test]
    fn first_momentum_element() {
        // -i (2/pi) int_0^pi sin t * 2 cos 2t dt = -i (4/pi)(-2/3) = 8i/(3 pi)
        let p = momentum_matrix_element(0, 1, 0.0).unwrap();
        assert!(p.re.abs() < 1e-15);
        assert!((p.im - 8.0 / (3.0 * PI)).abs() < 1e-13);
        assert!(momentum_matrix_element(4, 4, 0.7).unwrap().norm() < 1e-13);
    }

    #[test]
    fn overlap_rejects_mismatch() {
        let a = SampledState::new(gauss_legendre(10, 0.0, PI).unwrap(), |_| 1.0.into());
        let b = SampledState::new(gauss_legendre(11, 0.0, PI).unwrap(), |_| 1.0.into());
        assert!(overlap(&a, &b).is_err());
        let s = SpectralState::basis(0.0, 1, 4).unwrap();
        let t = SpectralState::basis(1.0, 1, 4).unwrap();
        assert!(overlap_spectral(&s, &t).is_err());
        let u = SpectralState::basis(0.0, 1, 9).unwrap();
        assert_eq!(overlap_spectral(&s, &u).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn spectral_state_validation() {
        assert!(SpectralState::new(0.0, vec![]).is_err());
        assert!(SpectralState::new(0.0, vec![Complex64::new(1.0, 0.1)]).is_err());
        let s = SpectralState::new(0.0, vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.6)]).unwrap();
        assert!((s.truncation_mass() - 0.28).abs() < 1e-15);
        assert!((s.mean_energy() - (0.36 + 0.36 * 4.0)).abs() < 1e-14);
    }
}
