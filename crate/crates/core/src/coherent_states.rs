//! Coherent states `eta_{q,p}(t) = N(q) exp((W(q) + i p) t) sin^{nu+1} t`,
//! the normalized eigenvectors of the lowering operator `A = W + d/dt`.
//!
//! `|eta|` is a log-concave bump peaked at `t = q`. Every integral against a
//! coherent state runs on panels adapted to that bump (see [`Envelope`]),
//! and the normalization is carried in log form so that labels very close
//! to the walls never overflow.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::eigensystem::{EigenBasis, SpectralState};
use crate::error::{Error, Result};
use crate::physical_model::check_nu;
use crate::special_functions::{ln_gamma, log_gamma_complex, push_panel, QuadratureRule};
use crate::wavefunction::{SecondDerivative, Wavefunction};

/// Log-amplitude below the peak at which the envelope support is cut.
const LOG_CUTOFF: f64 = 40.0;

/// Longest panel used for smooth integrands.
const MAX_PANEL: f64 = 0.25;

/// Largest phase change allowed across one panel of a banded rule.
const PANEL_PHASE: f64 = 16.0;

const BASE_NODES: usize = 16;
const MAX_LEVEL: u32 = 5;

/// Convergence target of the adaptive moment integrals.
pub const MOMENT_TOLERANCE: f64 = 1e-11;

/// Superpotential `W(t) = -(nu + 1) cot t` in units of `pi hbar / L`.
pub fn superpotential_reduced(nu: f64, t: f64) -> f64 {
    -(nu + 1.0) / t.tan()
}

/// The `q`-dependent part of a coherent state: the bump `exp(W(q) t) sin^{a} t`
/// together with its normalization.
///
/// `q` and `pi - q` are both stored so that labels near either wall keep full
/// relative precision.
#[derive(Clone, Debug)]
pub struct Envelope {
    nu: f64,
    a: f64,
    q: f64,
    qc: f64,
    w: f64,
    log_sin_q: f64,
    /// `ln int exp(2 l(t)) dt`, `l` the log-envelope relative to its peak.
    log_i_rel: f64,
}

impl Envelope {
    /// Label at reduced position `q in (0, pi)`.
    pub fn new(nu: f64, q: f64) -> Result<Self> {
        check_nu(nu)?;
        if !(q > 0.0 && q < PI) {
            return Err(Error::OutOfDomain {
                value: q,
                range: "(0, pi), walls excluded".into(),
            });
        }
        Self::build(nu, q, PI - q)
    }

    /// Label at `q = pi / (1 + exp(-s))`, keeping `pi - q` exact for large `s`.
    pub fn from_logit(nu: f64, s: f64) -> Result<Self> {
        check_nu(nu)?;
        let q = PI / (1.0 + (-s).exp());
        let qc = PI / (1.0 + s.exp());
        if !(q > 0.0 && qc > 0.0) {
            return Err(Error::OutOfDomain {
                value: s,
                range: "logit too large to represent".into(),
            });
        }
        Self::build(nu, q, qc)
    }

    fn build(nu: f64, q: f64, qc: f64) -> Result<Self> {
        let a = nu + 1.0;
        let near = q.min(qc);
        let w = if q <= FRAC_PI_2 { -a / q.tan() } else { a / qc.tan() };
        let mut env = Self {
            nu,
            a,
            q,
            qc,
            w,
            log_sin_q: near.sin().ln(),
            log_i_rel: 0.0,
        };
        env.log_i_rel = env.normalize()?;
        Ok(env)
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `pi - q`.
    pub fn q_complement(&self) -> f64 {
        self.qc
    }

    /// `W(q) = -(nu + 1) cot q`.
    pub fn w(&self) -> f64 {
        self.w
    }

    /// `ln N(q)`.
    pub fn log_normalization(&self) -> f64 {
        -(self.w * self.q + self.a * self.log_sin_q) - 0.5 * self.log_i_rel
    }

    /// `ln N(q)^2 + 2 W(q) t + 2 a ln sin t`, i.e. `ln |eta(t)|^2`, evaluated
    /// relative to the peak so it never overflows.
    pub fn log_density(&self, t: f64) -> f64 {
        2.0 * self.log_envelope(t) - self.log_i_rel
    }

    /// `|eta_{q,p}(t)|`.
    pub fn amplitude(&self, t: f64) -> f64 {
        (self.log_envelope(t) - 0.5 * self.log_i_rel).exp()
    }

    /// `W(q) (t - q) + a ln(sin t / sin q)`; zero at the peak, concave.
    pub(crate) fn log_envelope(&self, t: f64) -> f64 {
        let s = t.sin();
        if s <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.log_envelope_with(t, s.ln())
    }

    /// [`Self::log_envelope`] with `ln sin t` supplied by the caller.
    pub(crate) fn log_envelope_with(&self, t: f64, log_sin_t: f64) -> f64 {
        let d = if self.q > FRAC_PI_2 && t > FRAC_PI_2 {
            self.qc - (PI - t)
        } else {
            t - self.q
        };
        self.w * d + self.a * (log_sin_t - self.log_sin_q)
    }

    /// `ln int exp(2 l(t)) dt` for the peak-relative log-envelope `l`.
    pub(crate) fn log_relative_integral(&self) -> f64 {
        self.log_i_rel
    }

    /// `sin q`, evaluated from whichever of `q`, `pi - q` is smaller.
    pub fn sin_q(&self) -> f64 {
        self.log_sin_q.exp()
    }

    /// `(t_lo, t_hi)` outside of which the amplitude is below `exp(-40)` of its peak.
    fn support(&self) -> (f64, f64) {
        let lo = left_cut(self.q, self.w, self.a, self.log_sin_q);
        let hi = PI - left_cut(self.qc, -self.w, self.a, self.log_sin_q);
        (lo, hi)
    }

    fn breakpoints(&self, max_panel: f64) -> Vec<f64> {
        let (lo, hi) = self.support();
        let peak = if self.q > FRAC_PI_2 { PI - self.qc } else { self.q };
        let width = self.log_sin_q.exp() / self.a.sqrt();
        let mut points = vec![lo, peak, hi];
        let mut d = 0.5 * width;
        while peak - d > lo || peak + d < hi {
            if peak - d > lo {
                points.push(peak - d);
            }
            if peak + d < hi {
                points.push(peak + d);
            }
            d *= 2.0;
        }
        points.sort_by(f64::total_cmp);
        let inner_lo = points.iter().copied().find(|&x| x > lo).unwrap_or(hi);
        let mut x = inner_lo / 8.0;
        while x > lo {
            points.push(x);
            x /= 8.0;
        }
        let inner_hi = PI - points.iter().copied().filter(|&x| x < hi).fold(lo, f64::max);
        let mut x = inner_hi / 8.0;
        while PI - x < hi {
            points.push(PI - x);
            x /= 8.0;
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        let mut refined = Vec::with_capacity(points.len() * 2);
        for pair in points.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let pieces = ((b - a) / max_panel).ceil().max(1.0) as usize;
            for k in 0..pieces {
                refined.push(a + (b - a) * k as f64 / pieces as f64);
            }
        }
        refined.push(hi);
        refined
    }

    /// Panel rule with `16 * 2^level` nodes per panel and panels no longer
    /// than `max_panel`.
    pub fn rule(&self, level: u32, max_panel: f64) -> QuadratureRule {
        let points = self.breakpoints(max_panel.min(MAX_PANEL));
        let per_panel = BASE_NODES << level;
        let mut nodes = Vec::with_capacity(per_panel * points.len());
        let mut weights = Vec::with_capacity(per_panel * points.len());
        for pair in points.windows(2) {
            if pair[1] > pair[0] {
                push_panel(per_panel, pair[0], pair[1], &mut nodes, &mut weights);
            }
        }
        let (lo, hi) = (points[0], points[points.len() - 1]);
        QuadratureRule::from_parts(nodes, weights, (lo, hi))
    }

    /// Rule resolving integrands that oscillate up to `bandwidth` radians per
    /// unit `t` on top of the envelope.
    pub fn banded_rule(&self, bandwidth: f64) -> QuadratureRule {
        self.rule(1, MAX_PANEL.min(PANEL_PHASE / bandwidth.max(1.0)))
    }

    /// The mirror label `pi - q`; its envelope is this one reflected through `pi / 2`.
    fn reflected(&self) -> Self {
        Self {
            q: self.qc,
            qc: self.q,
            w: -self.w,
            ..self.clone()
        }
    }

    fn normalize(&self) -> Result<f64> {
        // Nodes close to pi carry little relative precision in pi - t.
        if self.q > FRAC_PI_2 {
            return self.reflected().normalize();
        }
        let mut previous = f64::NAN;
        for level in 0..=MAX_LEVEL {
            let rule = self.rule(level, MAX_PANEL);
            let value = rule.integrate(|t| (2.0 * self.log_envelope(t)).exp());
            if level > 0 && (value - previous).abs() <= 1e-14 * value {
                return Ok(value.ln());
            }
            previous = value;
        }
        Err(Error::NoConvergence {
            what: format!("normalization at q = {} (nu = {})", self.q, self.nu),
            previous,
            current: self
                .rule(MAX_LEVEL, MAX_PANEL)
                .integrate(|t| (2.0 * self.log_envelope(t)).exp()),
        })
    }

    /// Integrates `K` real functions at once, doubling the per-panel node
    /// count until every component agrees with the previous level to
    /// `rel_tol` of its absolute-value integral.
    pub fn integrate_adaptive<const K: usize>(
        &self,
        bandwidth: f64,
        rel_tol: f64,
        f: impl Fn(f64) -> [f64; K],
    ) -> Result<[f64; K]> {
        let max_panel = MAX_PANEL.min(PANEL_PHASE / bandwidth.max(1.0));
        let mut previous = [f64::NAN; K];
        for level in 0..=MAX_LEVEL {
            let rule = self.rule(level, max_panel);
            let mut value = [0.0; K];
            let mut scale = [0.0; K];
            for (&t, &wt) in rule.nodes().iter().zip(rule.weights()) {
                let v = f(t);
                for k in 0..K {
                    value[k] += wt * v[k];
                    scale[k] += wt * v[k].abs();
                }
            }
            let converged = level > 0
                && (0..K).all(|k| (value[k] - previous[k]).abs() <= rel_tol * scale[k].max(f64::MIN_POSITIVE));
            if converged {
                return Ok(value);
            }
            if level == MAX_LEVEL {
                let worst = (0..K)
                    .max_by(|&i, &j| {
                        let ei = (value[i] - previous[i]).abs() / scale[i].max(f64::MIN_POSITIVE);
                        let ej = (value[j] - previous[j]).abs() / scale[j].max(f64::MIN_POSITIVE);
                        ei.total_cmp(&ej)
                    })
                    .unwrap_or(0);
                return Err(Error::NoConvergence {
                    what: format!("moment {worst} at q = {} (nu = {})", self.q, self.nu),
                    previous: previous[worst],
                    current: value[worst],
                });
            }
            previous = value;
        }
        unreachable!()
    }
}

/// Largest `t < q0` at which `w0 (t - q0) + a ln(sin t / sin q0)` drops to
/// `-LOG_CUTOFF`, within a relative factor of about 1e-3.
fn left_cut(q0: f64, w0: f64, a: f64, log_sin_q0: f64) -> f64 {
    let g = |t: f64| w0 * (t - q0) + a * (t.sin().ln() - log_sin_q0) + LOG_CUTOFF;
    let mut hi = q0;
    let mut lo = 0.5 * q0;
    while g(lo) > 0.0 {
        hi = lo;
        lo *= 0.5;
        if lo < 1e-300 {
            return 0.0;
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-3 * lo {
            break;
        }
    }
    lo
}

/// A coherent state `eta_{q,p}`.
#[derive(Clone, Debug)]
pub struct CoherentState {
    envelope: Envelope,
    p: f64,
}

impl CoherentState {
    pub fn new(nu: f64, q: f64, p: f64) -> Result<Self> {
        if !p.is_finite() {
            return Err(Error::InvalidParameter {
                name: "p",
                reason: format!("{p} is not finite"),
            });
        }
        Ok(Self {
            envelope: Envelope::new(nu, q)?,
            p,
        })
    }

    pub fn from_envelope(envelope: Envelope, p: f64) -> Self {
        Self { envelope, p }
    }

    pub fn envelope(&self) -> &Envelope {
        &self.envelope
    }

    pub fn nu(&self) -> f64 {
        self.envelope.nu
    }

    pub fn q(&self) -> f64 {
        self.envelope.q
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Lowering-operator eigenvalue `W(q) + i p`.
    pub fn eigenvalue(&self) -> Complex64 {
        Complex64::new(self.envelope.w, self.p)
    }

    pub fn normalization(&self) -> f64 {
        self.envelope.log_normalization().exp()
    }

    /// `W(q) + i p + a cot t`, the logarithmic derivative of `eta`.
    fn log_derivative(&self, t: f64) -> Complex64 {
        Complex64::new(self.envelope.w + self.envelope.a / t.tan(), self.p)
    }
}

impl Wavefunction for CoherentState {
    fn value(&self, t: f64) -> Complex64 {
        Complex64::from_polar(self.envelope.amplitude(t), self.p * t)
    }

    fn derivative(&self, t: f64) -> Complex64 {
        let v = self.value(t);
        if v == Complex64::new(0.0, 0.0) {
            return self.boundary_derivative(t);
        }
        self.log_derivative(t) * v
    }
}

impl CoherentState {
    // At the walls eta ~ sin^a t: the slope vanishes unless a = 1.
    fn boundary_derivative(&self, t: f64) -> Complex64 {
        if self.envelope.a != 1.0 || !(t == 0.0 || t == PI) {
            return Complex64::new(0.0, 0.0);
        }
        let n = self.normalization();
        let z = self.eigenvalue();
        if t == 0.0 {
            Complex64::new(n, 0.0)
        } else {
            -(z * PI).exp() * n
        }
    }
}

impl SecondDerivative for CoherentState {
    fn second_derivative(&self, t: f64) -> Complex64 {
        let s = t.sin();
        let g = self.log_derivative(t);
        (g * g - self.envelope.a / (s * s)) * self.value(t)
    }
}

/// `N(q)` by quadrature; the defining normalization.
pub fn cs_normalization(nu: f64, q: f64) -> Result<f64> {
    Ok(Envelope::new(nu, q)?.log_normalization().exp())
}

/// `1 / N(q)^2` from the Gamma-function evaluation of
/// `int_0^pi exp(2 W t) sin^{2a} t dt = pi e^{W pi} Gamma(2 nu + 3) / (4^{nu+1} |Gamma(nu + 2 + i W)|^2)`.
pub fn inverse_norm_sqr_gamma_form(nu: f64, q: f64) -> Result<f64> {
    let env = Envelope::new(nu, q)?;
    Ok(log_inverse_norm_sqr_gamma_form(nu, env.w)?.exp())
}

/// `ln(1 / N^2)` from the Gamma-function form, given `W(q)`.
pub fn log_inverse_norm_sqr_gamma_form(nu: f64, w: f64) -> Result<f64> {
    let lg = log_gamma_complex(Complex64::new(nu + 2.0, w))?;
    Ok(PI.ln() + w * PI + ln_gamma(2.0 * nu + 3.0) - (2.0 * nu + 2.0) * LN_2 - 2.0 * lg.re)
}

/// The closed-form normalization display, evaluated as written for a
/// well of width `pi`:
/// `2^{nu+1} |Gamma(nu + 2 - i (nu+1) cot q)| / (sqrt(L) sqrt(Gamma(2 nu + 3))) * exp((pi/2)(nu+1) cot q)`.
pub fn cs_normalization_closed_form(nu: f64, q: f64) -> Result<f64> {
    check_nu(nu)?;
    if !(q > 0.0 && q < PI) {
        return Err(Error::OutOfDomain {
            value: q,
            range: "(0, pi), walls excluded".into(),
        });
    }
    let k = (nu + 1.0) / q.tan();
    let lg = log_gamma_complex(Complex64::new(nu + 2.0, -k))?;
    let log = (nu + 1.0) * LN_2 + lg.re - 0.5 * PI.ln() - 0.5 * ln_gamma(2.0 * nu + 3.0) + 0.5 * PI * k;
    Ok(log.exp())
}

/// `eta_{q,p}(t)`.
pub fn cs_wavefunction(nu: f64, q: f64, p: f64, t: f64) -> Result<Complex64> {
    if !(0.0..=PI).contains(&t) {
        return Err(Error::OutOfDomain {
            value: t,
            range: "[0, pi]".into(),
        });
    }
    Ok(CoherentState::new(nu, q, p)?.value(t))
}

/// Overlaps `<phi_n | eta_{q,p}>` for all `n` of `basis` and every `p` in
/// `momenta`, shape `(nmax + 1, momenta.len())`.
pub fn coefficient_table(env: &Envelope, basis: &EigenBasis, momenta: &[f64]) -> Array2<Complex64> {
    let pmax = momenta.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    let rule = env.banded_rule(basis.len() as f64 + pmax + 1.0);
    let k = rule.len();
    let mut weighted = Array2::<f64>::zeros((basis.len(), k));
    let mut buf = vec![0.0; basis.len()];
    for (j, (&t, &w)) in rule.nodes().iter().zip(rule.weights()).enumerate() {
        basis.values(t, &mut buf);
        let amp = w * env.amplitude(t);
        for (n, v) in buf.iter().enumerate() {
            weighted[[n, j]] = v * amp;
        }
    }
    let mut cos = Array2::<f64>::zeros((k, momenta.len()));
    let mut sin = Array2::<f64>::zeros((k, momenta.len()));
    for (j, &t) in rule.nodes().iter().enumerate() {
        for (i, &p) in momenta.iter().enumerate() {
            let (s, c) = (p * t).sin_cos();
            cos[[j, i]] = c;
            sin[[j, i]] = s;
        }
    }
    let re = weighted.dot(&cos);
    let im = weighted.dot(&sin);
    ndarray::Zip::from(&re)
        .and(&im)
        .map_collect(|&r, &i| Complex64::new(r, i))
}

/// Eigenbasis coefficients of a coherent state.
#[derive(Clone, Debug, Serialize)]
pub struct CsCoefficients {
    pub state: SpectralState,
    pub truncation_mass: f64,
    /// Set when more than 1e-6 of the norm lies beyond `nmax`.
    pub warning: Option<String>,
}

/// `c_n = <phi_n | eta_{q,p}>` over the `basis_nu` eigenbasis, `n <= nmax`.
///
/// The coherent-state family (`nu_cs`) and the expansion basis are
/// independent.
pub fn cs_coefficients(nu_cs: f64, q: f64, p: f64, basis_nu: f64, nmax: usize) -> Result<CsCoefficients> {
    let env = Envelope::new(nu_cs, q)?;
    let basis = EigenBasis::new(basis_nu, nmax)?;
    let table = coefficient_table(&env, &basis, &[p]);
    let coeffs: Vec<Complex64> = table.column(0).to_vec();
    let state = SpectralState::from_parts(basis_nu, coeffs);
    let truncation_mass = state.truncation_mass();
    let warning = (truncation_mass > 1e-6).then(|| {
        let msg =
            format!("truncation mass {truncation_mass:.3e} at nmax = {nmax} for (q, p) = ({q}, {p}), nu = {nu_cs}");
        log::warn!("{msg}");
        msg
    });
    Ok(CsCoefficients {
        state,
        truncation_mass,
        warning,
    })
}

/// First and second moments of `P` and `W(Q)` in a coherent state.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CsMoments {
    pub norm: f64,
    pub mean_p: Complex64,
    pub delta_p: f64,
    pub mean_w: f64,
    pub delta_w: f64,
    pub mean_w_prime: f64,
    /// `delta_w * delta_p - mean_w_prime / 2`; zero for a minimum-uncertainty state.
    pub saturation_defect: f64,
}

/// Moments of `P = -i d/dt` and `W(Q) = -(nu + 1) cot Q` by adaptive
/// quadrature against the analytic state and its derivative.
pub fn cs_moments(nu: f64, q: f64, p: f64) -> Result<CsMoments> {
    let state = CoherentState::new(nu, q, p)?;
    let a = nu + 1.0;
    let [norm, p_re, p_im, p2, w1, w2, wp] =
        state
            .envelope
            .integrate_adaptive(p.abs() + 1.0, MOMENT_TOLERANCE, |t| {
                let v = state.value(t);
                let d = state.derivative(t);
                let rho = v.norm_sqr();
                let s = t.sin();
                let wt = -a / t.tan();
                // <P> = -i int conj(eta) eta'
                let pd = -Complex64::i() * v.conj() * d;
                [
                    rho,
                    pd.re,
                    pd.im,
                    d.norm_sqr(),
                    rho * wt,
                    rho * wt * wt,
                    rho * a / (s * s),
                ]
            })?;
    let mean_p = Complex64::new(p_re, p_im);
    let delta_p = (p2 - mean_p.norm_sqr()).max(0.0).sqrt();
    let delta_w = (w2 - w1 * w1).max(0.0).sqrt();
    Ok(CsMoments {
        norm,
        mean_p,
        delta_p,
        mean_w: w1,
        delta_w,
        mean_w_prime: wp,
        saturation_defect: delta_w * delta_p - 0.5 * wp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_point_normalization() {
        let n = cs_normalization(0.0, FRAC_PI_2).unwrap();
        assert!((n - (2.0 / PI).sqrt()).abs() < 1e-14);
        let printed = cs_normalization_closed_form(0.0, FRAC_PI_2).unwrap();
        assert!((printed - (2.0 / PI).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_walls() {
        assert!(Envelope::new(0.0, 0.0).is_err());
        assert!(Envelope::new(0.0, PI).is_err());
        assert!(CoherentState::new(1.0, 1.0, f64::NAN).is_err());
        assert!(cs_wavefunction(0.0, 1.0, 0.0, 3.5).is_err());
    }

    #[test]
    fn vanishes_at_walls() {
        let s = CoherentState::new(0.0, 0.7, 3.0).unwrap();
        assert_eq!(s.value(0.0), Complex64::new(0.0, 0.0));
        assert!(s.value(PI).norm() < 1e-14);
    }

    #[test]
    fn logit_labels_reach_the_walls() {
        let left = Envelope::from_logit(1.0, -25.0).unwrap();
        let right = Envelope::from_logit(1.0, 25.0).unwrap();
        assert!(left.q() < 1e-10 && right.q_complement() < 1e-10);
        assert!((left.log_i_rel - right.log_i_rel).abs() < 1e-12);
        assert!((left.w() + right.w()).abs() < 1e-6 * left.w().abs());
    }

    #[test]
    fn support_contains_peak() {
        for &q in &[1e-3, 0.2, FRAC_PI_2, 3.0] {
            let env = Envelope::new(0.5, q).unwrap();
            let (lo, hi) = env.support();
            assert!(lo < q && q < hi);
            assert!(env.log_envelope(lo) <= -LOG_CUTOFF + 1.0);
        }
    }
}
