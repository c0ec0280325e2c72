//! Wavefunctions carried as analytic value/derivative pairs on `[0, pi]`.

use num_complex::Complex64;

/// A state known in closed form, with its first derivative.
///
/// Positions are reduced (`0 <= t <= pi`). Implementations are not required
/// to check the domain.
pub trait Wavefunction {
    fn value(&self, t: f64) -> Complex64;
    fn derivative(&self, t: f64) -> Complex64;
}

pub trait SecondDerivative: Wavefunction {
    fn second_derivative(&self, t: f64) -> Complex64;
}

impl<W: Wavefunction + ?Sized> Wavefunction for &W {
    fn value(&self, t: f64) -> Complex64 {
        (**self).value(t)
    }

    fn derivative(&self, t: f64) -> Complex64 {
        (**self).derivative(t)
    }
}

impl<W: SecondDerivative + ?Sized> SecondDerivative for &W {
    fn second_derivative(&self, t: f64) -> Complex64 {
        (**self).second_derivative(t)
    }
}
