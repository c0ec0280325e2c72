//! Eigenbasis time evolution and phase-space densities
//! `rho(q, p) = |<eta_{q,p}|phi>|^2 / (2 pi)` (reduced units: measure `dq dp`,
//! time in units of `hbar / E0`).

use std::f64::consts::PI;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::coherent_states::{coefficient_table, cs_coefficients, Envelope};
use crate::eigensystem::{energy, EigenBasis, SpectralState};
use crate::error::{Error, Result};
use crate::physical_model::{check_nu, GridSpec};

/// Revival period of the infinite well (`nu_evolve = 0`), `2 pi hbar / E0`.
pub const REVIVAL_PERIOD: f64 = 2.0 * PI;

/// Number of time samples used by the sampled-average cross-check.
pub const DEFAULT_TIME_SAMPLES: usize = 512;

/// Largest truncation mass accepted by [`evolve`].
pub const MAX_TRUNCATION_MASS: f64 = 1e-6;

/// A spectral state propagated by `H_{nu_evolve}` for a reduced time `time`.
#[derive(Clone, Debug, Serialize)]
pub struct EvolvedState {
    pub base: SpectralState,
    pub time: f64,
    pub nu_evolve: f64,
}

impl EvolvedState {
    pub fn state(&self) -> SpectralState {
        propagate(&self.base, self.time)
    }
}

fn propagate(state: &SpectralState, t: f64) -> SpectralState {
    let nu = state.nu();
    let coeffs = state
        .coeffs()
        .iter()
        .enumerate()
        .map(|(n, c)| c * Complex64::from_polar(1.0, -energy(n, nu) * t))
        .collect();
    SpectralState::from_parts(nu, coeffs)
}

fn check_evolvable(state: &SpectralState, nu_evolve: f64) -> Result<()> {
    check_nu(nu_evolve)?;
    if state.nu() != nu_evolve {
        return Err(Error::Mismatch(format!(
            "state is expanded over the nu = {} eigenbasis but evolves under nu = {nu_evolve}",
            state.nu()
        )));
    }
    Ok(())
}

/// `c_n(t) = exp(-i E_n t) c_n(0)` with `E_n = (n + nu_evolve + 1)^2`.
pub fn evolve(state: &SpectralState, t: f64, nu_evolve: f64) -> Result<SpectralState> {
    check_evolvable(state, nu_evolve)?;
    let mass = state.truncation_mass();
    if mass > MAX_TRUNCATION_MASS {
        return Err(Error::InvalidState(format!(
            "truncation mass {mass:.3e} exceeds {MAX_TRUNCATION_MASS:e}; raise nmax"
        )));
    }
    if !t.is_finite() {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: format!("{t} is not finite"),
        });
    }
    Ok(propagate(state, t))
}

/// `<phi(0)|phi(t)> = sum |c_n|^2 exp(-i E_n t)`.
pub fn autocorrelation(state: &SpectralState, t: f64, nu_evolve: f64) -> Result<Complex64> {
    check_evolvable(state, nu_evolve)?;
    Ok(state
        .coeffs()
        .iter()
        .enumerate()
        .map(|(n, c)| c.norm_sqr() * Complex64::from_polar(1.0, -energy(n, nu_evolve) * t))
        .sum())
}

/// A nonnegative density on a rectangular `(q, p)` grid.
#[derive(Clone, Debug)]
pub struct PhaseSpaceDistribution {
    pub grid: GridSpec,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    /// `values[[i, j]] = rho(q_i, p_j)`.
    pub values: Array2<f64>,
}

impl PhaseSpaceDistribution {
    fn new(grid: &GridSpec, values: Array2<f64>) -> Self {
        Self {
            grid: *grid,
            q: grid.q_values(),
            p: grid.p_values(),
            values,
        }
    }

    /// `sum rho dq dp`.
    pub fn mass(&self) -> f64 {
        self.values.sum() * self.grid.q_step() * self.grid.p_step()
    }

    /// Grid point with the largest density.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut top = f64::NEG_INFINITY;
        for ((i, j), &v) in self.values.indexed_iter() {
            if v > top {
                top = v;
                best = (i, j);
            }
        }
        best
    }

    /// `int rho dp` at each grid `q`.
    pub fn q_marginal(&self) -> Vec<f64> {
        self.values
            .sum_axis(Axis(1))
            .iter()
            .map(|v| v * self.grid.p_step())
            .collect()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `<phi_n | eta_{q,p}>` for one grid column, shape `(nmax + 1, p_count)`.
fn column_table(nu_cs: f64, q: f64, basis: &EigenBasis, momenta: &[f64]) -> Result<Array2<Complex64>> {
    let env = Envelope::new(nu_cs, q)?;
    Ok(coefficient_table(&env, basis, momenta))
}

fn warn_outside_envelope(grid: &GridSpec) {
    if grid.p_max() > 12.0 || grid.q_margin() < 0.02 * PI {
        log::info!(
            "grid reaches beyond |p| <= 12, q in [0.02 pi, 0.98 pi] (p_max = {}, margin = {})",
            grid.p_max(),
            grid.q_margin()
        );
    }
}

fn per_column(
    state: &SpectralState,
    nu_cs: f64,
    grid: &GridSpec,
    f: impl Fn(&Array2<Complex64>) -> Vec<f64> + Sync,
) -> Result<PhaseSpaceDistribution> {
    warn_outside_envelope(grid);
    let basis = EigenBasis::new(state.nu(), state.nmax())?;
    let q = grid.q_values();
    let p = grid.p_values();
    let columns: Vec<Vec<f64>> = q
        .par_iter()
        .map(|&qi| Ok(f(&column_table(nu_cs, qi, &basis, &p)?)))
        .collect::<Result<_>>()?;
    let mut values = Array2::zeros((q.len(), p.len()));
    for (i, col) in columns.iter().enumerate() {
        for (j, v) in col.iter().enumerate() {
            values[[i, j]] = *v;
        }
    }
    Ok(PhaseSpaceDistribution::new(grid, values))
}

/// `rho(q, p) = |<eta_{q,p}|phi>|^2 / (2 pi)` with `eta` from the `nu_cs` family.
pub fn husimi(state: &SpectralState, nu_cs: f64, grid: &GridSpec) -> Result<PhaseSpaceDistribution> {
    let c = state.coeffs();
    per_column(state, nu_cs, grid, |table| {
        table
            .columns()
            .into_iter()
            .map(|col| {
                let z: Complex64 = col.iter().zip(c).map(|(a, c)| a.conj() * c).sum();
                z.norm_sqr() / (2.0 * PI)
            })
            .collect()
    })
}

/// Infinite-time average of the density,
/// `(1/2 pi) sum_n |c_n|^2 |<phi_n|eta_{q,p}>|^2`; exact because the spectrum
/// is nondegenerate.
pub fn time_averaged_husimi(state: &SpectralState, nu_cs: f64, grid: &GridSpec) -> Result<PhaseSpaceDistribution> {
    let weights: Vec<f64> = state.coeffs().iter().map(|c| c.norm_sqr()).collect();
    per_column(state, nu_cs, grid, |table| {
        table
            .columns()
            .into_iter()
            .map(|col| col.iter().zip(&weights).map(|(a, w)| w * a.norm_sqr()).sum::<f64>() / (2.0 * PI))
            .collect()
    })
}

/// Mean of the density over `samples` equally spaced times in `[0, period)`.
pub fn sampled_time_average(
    state: &SpectralState,
    nu_cs: f64,
    grid: &GridSpec,
    samples: usize,
    period: f64,
) -> Result<PhaseSpaceDistribution> {
    if samples == 0 {
        return Err(Error::InvalidParameter {
            name: "samples",
            reason: "at least one time sample is required".into(),
        });
    }
    let n = state.coeffs().len();
    // phased[[k, n]] = c_n exp(-i E_n t_k)
    let mut phased = Array2::<Complex64>::zeros((samples, n));
    for k in 0..samples {
        let t = period * k as f64 / samples as f64;
        for (m, c) in state.coeffs().iter().enumerate() {
            phased[[k, m]] = c * Complex64::from_polar(1.0, -energy(m, state.nu()) * t);
        }
    }
    let norm = 1.0 / (2.0 * PI * samples as f64);
    per_column(state, nu_cs, grid, |table| {
        let conj = table.mapv(|z| z.conj());
        let overlaps = phased.dot(&conj);
        overlaps
            .map_axis(Axis(0), |col| col.iter().map(|z| z.norm_sqr()).sum::<f64>() * norm)
            .to_vec()
    })
}

/// Mean energy of a coherent state under `H_{nu_evolve}`, from the eigenbasis
/// and in closed form.
#[derive(Clone, Debug, Serialize)]
pub struct MeanEnergy {
    pub closed_form: f64,
    pub coefficient_sum: f64,
    pub difference: f64,
    pub relative_difference: f64,
    pub nmax: usize,
    pub truncation_mass: f64,
    /// Set when the expansion stopped before its tail dropped below the
    /// requested tolerance.
    pub truncation_dominated: bool,
}

/// `<eta|H_{nu_evolve}|eta>` for `eta = eta_{q0,p0}` of the `nu_cs` family:
/// `p0^2 + ((nu_cs + 1)^2 + (2 nu_cs + 2) nu_e (nu_e + 1)) / ((2 nu_cs + 1) sin^2 q0)`.
/// For `nu_evolve = 0` this is the semiclassical energy.
pub fn mean_energy_closed_form(nu_cs: f64, q0: f64, p0: f64, nu_evolve: f64) -> f64 {
    let a = nu_cs + 1.0;
    let s2 = q0.sin().powi(2);
    p0 * p0 + (a * a + 2.0 * a * nu_evolve * (nu_evolve + 1.0)) / ((2.0 * nu_cs + 1.0) * s2)
}

/// Compares `sum E_n |c_n|^2` with [`mean_energy_closed_form`], doubling the
/// expansion from `nmax` until two successive sums agree to `rel_tol` (at
/// most `max_nmax`).
pub fn mean_energy(
    nu_cs: f64,
    q0: f64,
    p0: f64,
    nu_evolve: f64,
    nmax: usize,
    rel_tol: f64,
    max_nmax: usize,
) -> Result<MeanEnergy> {
    let closed_form = mean_energy_closed_form(nu_cs, q0, p0, nu_evolve);
    let mut n = nmax.max(1);
    let mut previous = f64::NAN;
    loop {
        let c = cs_coefficients(nu_cs, q0, p0, nu_evolve, n)?;
        let sum = c.state.mean_energy();
        let settled = (sum - previous).abs() <= rel_tol * sum.abs();
        if settled || 2 * n > max_nmax {
            let difference = sum - closed_form;
            return Ok(MeanEnergy {
                closed_form,
                coefficient_sum: sum,
                difference,
                relative_difference: difference / closed_form,
                nmax: n,
                truncation_mass: c.truncation_mass,
                truncation_dominated: !settled,
            });
        }
        previous = sum;
        n *= 2;
    }
}

/// `p^2 + c / sin^2 q` with `c = (nu + 1)^2 / (2 nu + 1)`.
pub fn semiclassical_energy(nu: f64, q: f64, p: f64) -> f64 {
    p * p + effective_strength(nu) / q.sin().powi(2)
}

fn effective_strength(nu: f64) -> f64 {
    (nu + 1.0).powi(2) / (2.0 * nu + 1.0)
}

/// Closed level curve `semiclassical_energy = e`: the upper branch from the
/// left turning point to the right one, then the lower branch back.
pub fn classical_trajectory(e: f64, nu: f64, n_points: usize) -> Result<Vec<(f64, f64)>> {
    check_nu(nu)?;
    let c = effective_strength(nu);
    if e.is_nan() || e <= c {
        return Err(Error::InvalidParameter {
            name: "E",
            reason: format!("{e} is not above the potential minimum {c}"),
        });
    }
    if n_points < 2 {
        return Err(Error::InvalidParameter {
            name: "n_points",
            reason: "need at least two points per branch".into(),
        });
    }
    let turn = (c / e).sqrt().asin();
    let span = PI - 2.0 * turn;
    let branch: Vec<(f64, f64)> = (0..n_points)
        .map(|k| {
            // cosine spacing resolves the square-root turning points
            let u = 0.5 * (1.0 - (PI * k as f64 / (n_points - 1) as f64).cos());
            let q = turn + span * u;
            let p = (e - c / q.sin().powi(2)).max(0.0).sqrt();
            (q, p)
        })
        .collect();
    let mut out = branch.clone();
    out.extend(branch.iter().rev().skip(1).map(|&(q, p)| (q, -p)));
    Ok(out)
}

/// Ratio of the mean density inside the band `|E_cl(q, p) - e| < width * e`
/// to the mean outside it.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BandRatio {
    pub energy: f64,
    pub half_width: f64,
    pub inside_mean: f64,
    pub outside_mean: f64,
    pub ratio: f64,
    pub inside_cells: usize,
}

pub fn band_ratio(dist: &PhaseSpaceDistribution, nu: f64, e: f64, width: f64) -> Result<BandRatio> {
    let mut inside = (0.0, 0usize);
    let mut outside = (0.0, 0usize);
    for ((i, j), &v) in dist.values.indexed_iter() {
        let ecl = semiclassical_energy(nu, dist.q[i], dist.p[j]);
        if (ecl - e).abs() < width * e {
            inside.0 += v;
            inside.1 += 1;
        } else {
            outside.0 += v;
            outside.1 += 1;
        }
    }
    if inside.1 == 0 || outside.1 == 0 {
        return Err(Error::InvalidParameter {
            name: "width",
            reason: "band covers none or all of the grid".into(),
        });
    }
    let inside_mean = inside.0 / inside.1 as f64;
    let outside_mean = outside.0 / outside.1 as f64;
    Ok(BandRatio {
        energy: e,
        half_width: width,
        inside_mean,
        outside_mean,
        ratio: inside_mean / outside_mean,
        inside_cells: inside.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn revival_is_exact() {
        let s = SpectralState::basis(0.0, 3, 8).unwrap();
        let mixed = SpectralState::new(
            0.0,
            (0..9)
                .map(|n| Complex64::new(1.0, n as f64).unscale(213f64.sqrt()))
                .collect(),
        )
        .unwrap();
        assert_eq!(evolve(&s, 0.0, 0.0).unwrap(), s);
        let back = evolve(&mixed, REVIVAL_PERIOD, 0.0).unwrap();
        for (a, b) in back.coeffs().iter().zip(mixed.coeffs()) {
            assert!((a - b).norm() < 1e-13);
        }
        assert!((autocorrelation(&mixed, REVIVAL_PERIOD, 0.0).unwrap().norm() - mixed.norm_sqr()).abs() < 1e-13);
    }

    #[test]
    fn evolve_rejects_mismatched_nu() {
        let s = SpectralState::basis(1.0, 0, 4).unwrap();
        assert!(evolve(&s, 1.0, 0.0).is_err());
    }

    #[test]
    fn trajectory_turning_points() {
        let path = classical_trajectory(2.0, 0.0, 101).unwrap();
        assert!((path[0].0 - PI / 4.0).abs() < 1e-12);
        assert!((path[100].0 - 3.0 * PI / 4.0).abs() < 1e-12);
        assert!((path[50].1 - 1.0).abs() < 1e-12);
        assert!(classical_trajectory(0.5, 0.0, 10).is_err());
    }
}
