//! Coherent-state quantization `f(q, p) -> F = int dq dp / (2 pi) f |eta_{q,p}><eta_{q,p}|`
//! and lower symbols `<eta_{q,p}| F |eta_{q,p}>`.
//!
//! Symbols are sums of terms `u(q) p^k` with `k <= 2`. The `p`-integral is
//! done in closed form: for `k = 0` it collapses to a multiplier
//! `F(x) = int dq u(q) |eta_q(x)|^2`, for `k = 1, 2` to derivative kernels
//! between eigenfunctions. What remains is a `q`-integral, evaluated on a
//! fixed table of labels (see [`KernelTable`]).

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::coherent_states::{cs_coefficients, CoherentState, Envelope, MOMENT_TOLERANCE};
use crate::eigensystem::EigenBasis;
use crate::error::{Error, Result};
use crate::physical_model::check_nu;
use crate::special_functions::reference_rule;
use crate::wavefunction::Wavefunction;

/// Labels run over `q = pi / (1 + exp(-s))` for `s` in `[-LOGIT_SPAN, LOGIT_SPAN]`.
pub const LOGIT_SPAN: f64 = 30.0;
const LOGIT_PANEL: f64 = 0.5;
const FINE_NODES: usize = 32;
const COARSE_NODES: usize = 16;

/// One label of the table with its quadrature weight folded into `offset`.
#[derive(Clone, Debug)]
struct KernelNode {
    envelope: Envelope,
    /// `ln(weight * dq/ds) - ln int exp(2 l)`.
    offset: f64,
}

impl KernelNode {
    /// `|eta_q(x)|^2 dq` for this node.
    #[inline]
    fn weight_at(&self, x: f64, log_sin_x: f64) -> f64 {
        let e = 2.0 * self.envelope.log_envelope_with(x, log_sin_x) + self.offset;
        if e < -745.0 {
            0.0
        } else {
            e.exp()
        }
    }
}

/// Coherent-state labels and weights for the `q`-integral at fixed `nu`.
///
/// The map `q = pi / (1 + e^{-s})` turns the double-exponential behaviour of
/// `N^2(q) e^{2 W(q) x}` near the walls into smooth bumps in `s`; the `s`
/// range is covered by Gauss-Legendre panels, with a second coarser set of
/// nodes for error estimates.
#[derive(Debug)]
pub struct KernelTable {
    nu: f64,
    fine: Vec<KernelNode>,
    coarse: Vec<KernelNode>,
}

fn table_cache() -> &'static Mutex<HashMap<u64, Arc<KernelTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<KernelTable>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

impl KernelTable {
    /// The shared table for `nu`, built on first use.
    pub fn for_nu(nu: f64) -> Result<Arc<Self>> {
        check_nu(nu)?;
        let key = nu.to_bits();
        if let Some(t) = table_cache().lock().expect("kernel cache poisoned").get(&key) {
            return Ok(t.clone());
        }
        let table = Arc::new(Self::build(nu)?);
        table_cache()
            .lock()
            .expect("kernel cache poisoned")
            .insert(key, table.clone());
        Ok(table)
    }

    fn build(nu: f64) -> Result<Self> {
        let panels = (2.0 * LOGIT_SPAN / LOGIT_PANEL).round() as usize;
        let nodes = |per_panel: usize| -> Result<Vec<KernelNode>> {
            let reference = reference_rule(per_panel);
            let (xs, ws) = (&reference.0, &reference.1);
            let mut points = Vec::with_capacity(panels * per_panel);
            for k in 0..panels {
                let lo = -LOGIT_SPAN + k as f64 * LOGIT_PANEL;
                let half = 0.5 * LOGIT_PANEL;
                for (x, w) in xs.iter().zip(ws) {
                    points.push((lo + half * (x + 1.0), half * w));
                }
            }
            points
                .into_par_iter()
                .map(|(s, w)| {
                    let envelope = Envelope::from_logit(nu, s)?;
                    // dq/ds = q (pi - q) / pi
                    let jac = envelope.q() * envelope.q_complement() / PI;
                    let offset = (w * jac).ln() - envelope.log_relative_integral();
                    Ok(KernelNode { envelope, offset })
                })
                .collect()
        };
        Ok(Self {
            nu,
            fine: nodes(FINE_NODES)?,
            coarse: nodes(COARSE_NODES)?,
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn len(&self) -> usize {
        self.fine.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fine.is_empty()
    }

    /// `sum_j weight_j(x) f(node_j)` on the fine and coarse node sets.
    fn sum_both(&self, x: f64, f: impl Fn(&Envelope) -> f64) -> (f64, f64) {
        let log_sin_x = x.sin().ln();
        let sum = |nodes: &[KernelNode]| {
            nodes
                .iter()
                .map(|n| {
                    let k = n.weight_at(x, log_sin_x);
                    if k == 0.0 {
                        0.0
                    } else {
                        k * f(&n.envelope)
                    }
                })
                .sum::<f64>()
        };
        (sum(&self.fine), sum(&self.coarse))
    }
}

fn check_interior(x: f64) -> Result<()> {
    if x > 0.0 && x < PI {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            value: x,
            range: "(0, pi), walls excluded".into(),
        })
    }
}

/// Value of a `q`-integral with the difference between the fine and coarse
/// label sets as error estimate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// `g(x) = sin^{2 nu + 2} x int N^2(q) e^{2 W(q) x} dq`; identically 1 when the
/// coherent states resolve the identity.
pub fn identity_weight(nu: f64, x: f64) -> Result<f64> {
    Ok(identity_weight_estimate(nu, x)?.value)
}

pub fn identity_weight_estimate(nu: f64, x: f64) -> Result<Estimate> {
    check_interior(x)?;
    let table = KernelTable::for_nu(nu)?;
    let (fine, coarse) = table.sum_both(x, |_| 1.0);
    Ok(Estimate {
        value: fine,
        error: (fine - coarse).abs(),
    })
}

/// Functions of the label position `q` that may multiply `p^k` in a symbol.
#[derive(Clone)]
pub enum PositionFunction {
    Constant(f64),
    /// `q`
    Position,
    /// `W(q) = -(nu + 1) cot q`, with `nu` of the quantizing family.
    Superpotential,
    /// `1 / sin^2 q`
    InverseSinSquared,
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for PositionFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "{c}"),
            Self::Position => f.write_str("q"),
            Self::Superpotential => f.write_str("W(q)"),
            Self::InverseSinSquared => f.write_str("1/sin^2(q)"),
            Self::Custom { name, .. } => f.write_str(name),
        }
    }
}

impl PositionFunction {
    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    /// Value at a table label, using its accurately stored `W` and `sin q`.
    fn at_label(&self, env: &Envelope) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Position => {
                if env.q() > FRAC_PI_2 {
                    PI - env.q_complement()
                } else {
                    env.q()
                }
            }
            Self::Superpotential => env.w(),
            Self::InverseSinSquared => env.sin_q().powi(-2),
            Self::Custom { f, .. } => f(env.q()),
        }
    }

    /// Value at an arbitrary point `t` for a family with parameter `nu`.
    pub fn eval(&self, nu: f64, t: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Position => t,
            Self::Superpotential => -(nu + 1.0) / t.tan(),
            Self::InverseSinSquared => t.sin().powi(-2),
            Self::Custom { f, .. } => f(t),
        }
    }
}

/// `coefficient * u(q) * p^p_degree`.
#[derive(Clone, Debug)]
pub struct SymbolTerm {
    pub coefficient: f64,
    pub u: PositionFunction,
    pub p_degree: u8,
}

/// A classical observable on the strip, polynomial of degree at most 2 in `p`.
#[derive(Clone, Debug)]
pub struct ClassicalSymbol {
    name: String,
    terms: Vec<SymbolTerm>,
    properties: Option<OperatorProperties>,
}

impl ClassicalSymbol {
    pub fn new(name: impl Into<String>, terms: Vec<SymbolTerm>) -> Result<Self> {
        if let Some(t) = terms.iter().find(|t| t.p_degree > 2) {
            return Err(Error::InvalidParameter {
                name: "p_degree",
                reason: format!("degree {} in p is outside the supported class (<= 2)", t.p_degree),
            });
        }
        if let Some(t) = terms.iter().find(|t| !t.coefficient.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "coefficient",
                reason: format!("{} is not finite", t.coefficient),
            });
        }
        Ok(Self {
            name: name.into(),
            terms,
            properties: None,
        })
    }

    /// `u(q) p^k`.
    pub fn monomial(name: impl Into<String>, u: PositionFunction, p_degree: u8) -> Result<Self> {
        Self::new(
            name,
            vec![SymbolTerm {
                coefficient: 1.0,
                u,
                p_degree,
            }],
        )
    }

    fn builtin(name: &str, terms: Vec<SymbolTerm>, properties: OperatorProperties) -> Self {
        Self {
            name: name.into(),
            terms,
            properties: Some(properties),
        }
    }

    pub fn unit() -> Self {
        Self::builtin(
            "1",
            vec![term(1.0, PositionFunction::Constant(1.0), 0)],
            OperatorProperties::BOUNDED_SELF_ADJOINT,
        )
    }

    pub fn position() -> Self {
        Self::builtin(
            "position",
            vec![term(1.0, PositionFunction::Position, 0)],
            OperatorProperties::BOUNDED_SELF_ADJOINT,
        )
    }

    pub fn superpotential() -> Self {
        Self::builtin(
            "superpotential",
            vec![term(1.0, PositionFunction::Superpotential, 0)],
            OperatorProperties::UNBOUNDED_SELF_ADJOINT,
        )
    }

    pub fn inverse_sin_squared() -> Self {
        Self::builtin(
            "inverse_sin_squared",
            vec![term(1.0, PositionFunction::InverseSinSquared, 0)],
            OperatorProperties::UNBOUNDED_SELF_ADJOINT,
        )
    }

    pub fn momentum() -> Self {
        Self::builtin(
            "momentum",
            vec![term(1.0, PositionFunction::Constant(1.0), 1)],
            OperatorProperties {
                bounded: false,
                semi_bounded: false,
                self_adjointness: SelfAdjointness::Symmetric,
            },
        )
    }

    pub fn momentum_squared() -> Self {
        Self::builtin(
            "momentum_squared",
            vec![term(1.0, PositionFunction::Constant(1.0), 2)],
            OperatorProperties {
                bounded: false,
                semi_bounded: true,
                self_adjointness: SelfAdjointness::Unspecified,
            },
        )
    }

    /// `p^2 + ((2 nu - 1)/(2 nu + 3)) (nu + 1)^2 / sin^2 q` (energies in units
    /// of `E0`), whose quantization is `H_nu`.
    pub fn classical_hamiltonian(nu: f64) -> Self {
        let c = (2.0 * nu - 1.0) / (2.0 * nu + 3.0) * (nu + 1.0).powi(2);
        Self::builtin(
            "classical_hamiltonian",
            vec![
                term(1.0, PositionFunction::Constant(1.0), 2),
                term(c, PositionFunction::InverseSinSquared, 0),
            ],
            OperatorProperties {
                bounded: false,
                semi_bounded: true,
                self_adjointness: SelfAdjointness::SelfAdjointForNuAtLeastHalf,
            },
        )
    }

    /// Looks up a built-in by name; `classical_hamiltonian` uses `nu`.
    pub fn named(name: &str, nu: f64) -> Result<Self> {
        Ok(match name {
            "1" | "unit" | "identity" => Self::unit(),
            "position" | "q" => Self::position(),
            "superpotential" | "W" => Self::superpotential(),
            "inverse_sin_squared" | "potential" => Self::inverse_sin_squared(),
            "momentum" | "p" => Self::momentum(),
            "momentum_squared" | "p2" => Self::momentum_squared(),
            "classical_hamiltonian" | "hamiltonian" => Self::classical_hamiltonian(nu),
            _ => {
                return Err(Error::Unknown {
                    kind: "symbol",
                    name: name.into(),
                })
            }
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn terms(&self) -> &[SymbolTerm] {
        &self.terms
    }

    pub fn max_p_degree(&self) -> u8 {
        self.terms.iter().map(|t| t.p_degree).max().unwrap_or(0)
    }

    pub fn properties(&self) -> Option<OperatorProperties> {
        self.properties
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        let scaled = |s: &Self, k: f64| {
            s.terms
                .iter()
                .map(move |t| SymbolTerm {
                    coefficient: t.coefficient * k,
                    ..t.clone()
                })
                .collect::<Vec<_>>()
        };
        let mut terms = scaled(self, alpha);
        terms.extend(scaled(other, beta));
        Self::new(format!("{alpha}*({}) + {beta}*({})", self.name, other.name), terms)
    }

    /// `f(q, p)` with `W` taken at parameter `nu`.
    pub fn eval(&self, nu: f64, q: f64, p: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coefficient * t.u.eval(nu, q) * p.powi(t.p_degree as i32))
            .sum()
    }
}

fn term(coefficient: f64, u: PositionFunction, p_degree: u8) -> SymbolTerm {
    SymbolTerm {
        coefficient,
        u,
        p_degree,
    }
}

/// How a symmetric operator relates to self-adjointness, as listed for the
/// built-in observables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SelfAdjointness {
    SelfAdjoint,
    Symmetric,
    SelfAdjointForNuAtLeastHalf,
    Unspecified,
}

/// Descriptive flags carried by quantized built-ins; no extension is built.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct OperatorProperties {
    pub bounded: bool,
    pub semi_bounded: bool,
    pub self_adjointness: SelfAdjointness,
}

impl OperatorProperties {
    const BOUNDED_SELF_ADJOINT: Self = Self {
        bounded: true,
        semi_bounded: true,
        self_adjointness: SelfAdjointness::SelfAdjoint,
    };
    const UNBOUNDED_SELF_ADJOINT: Self = Self {
        bounded: false,
        semi_bounded: false,
        self_adjointness: SelfAdjointness::SelfAdjoint,
    };
}

/// A multiplication operator `F(x) = int dq u(q) |eta_q(x)|^2`, evaluated on demand.
#[derive(Clone, Debug)]
pub struct Multiplier {
    table: Arc<KernelTable>,
    fine: Vec<f64>,
    coarse: Vec<f64>,
}

impl Multiplier {
    fn new(table: Arc<KernelTable>, u: impl Fn(&Envelope) -> f64) -> Self {
        let fine = table.fine.iter().map(|n| u(&n.envelope)).collect();
        let coarse = table.coarse.iter().map(|n| u(&n.envelope)).collect();
        Self { table, fine, coarse }
    }

    pub fn nu(&self) -> f64 {
        self.table.nu
    }

    /// `F(x)` for `x` in `(0, pi)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.estimate(x)?.value)
    }

    pub fn estimate(&self, x: f64) -> Result<Estimate> {
        check_interior(x)?;
        let (fine, coarse) = self.raw(x);
        Ok(Estimate {
            value: fine,
            error: (fine - coarse).abs(),
        })
    }

    fn raw(&self, x: f64) -> (f64, f64) {
        let log_sin_x = x.sin().ln();
        let sum = |nodes: &[KernelNode], u: &[f64]| {
            nodes
                .iter()
                .zip(u)
                .map(|(n, &u)| {
                    let k = n.weight_at(x, log_sin_x);
                    if k == 0.0 {
                        0.0
                    } else {
                        k * u
                    }
                })
                .sum::<f64>()
        };
        (sum(&self.table.fine, &self.fine), sum(&self.table.coarse, &self.coarse))
    }
}

/// A complex `(nmax + 1)^2` matrix in the `nu` eigenbasis.
#[derive(Clone, Debug)]
pub struct EigenbasisMatrix {
    pub nu: f64,
    pub data: Array2<Complex64>,
}

impl EigenbasisMatrix {
    pub fn nmax(&self) -> usize {
        self.data.nrows() - 1
    }

    /// `max |M_mn - conj(M_nm)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.data.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.data[[i, j]] - self.data[[j, i]].conj()).norm());
            }
        }
        worst
    }

    /// `c^dag M c` over the common leading block.
    pub fn expectation(&self, coeffs: &[Complex64]) -> Complex64 {
        let n = coeffs.len().min(self.data.nrows());
        let mut total = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let mut row = Complex64::new(0.0, 0.0);
            for (j, c) in coeffs.iter().enumerate().take(n) {
                row += self.data[[i, j]] * c;
            }
            total += coeffs[i].conj() * row;
        }
        total
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Debug)]
pub enum OperatorKind {
    Multiplier(Multiplier),
    Matrix(EigenbasisMatrix),
}

/// Result of [`quantize`].
#[derive(Clone, Debug)]
pub struct QuantizedOperator {
    pub nu: f64,
    pub source: String,
    pub kind: OperatorKind,
    pub properties: Option<OperatorProperties>,
}

impl QuantizedOperator {
    pub fn as_multiplier(&self) -> Option<&Multiplier> {
        match &self.kind {
            OperatorKind::Multiplier(m) => Some(m),
            OperatorKind::Matrix(_) => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&EigenbasisMatrix> {
        match &self.kind {
            OperatorKind::Matrix(m) => Some(m),
            OperatorKind::Multiplier(_) => None,
        }
    }

    /// The operator as a matrix in the `nu` eigenbasis; multipliers are projected.
    pub fn to_matrix(&self, nmax: usize) -> Result<EigenbasisMatrix> {
        match &self.kind {
            OperatorKind::Matrix(m) => Ok(m.clone()),
            OperatorKind::Multiplier(m) => {
                let parts = KernelParts {
                    scalar: m.fine.clone(),
                    ..KernelParts::default()
                };
                assemble(&m.table, &parts, nmax)
            }
        }
    }
}

/// Per-label weights of the three kernel types.
#[derive(Default)]
struct KernelParts {
    scalar: Vec<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
}

/// Quantizes `symbol` with the `nu` coherent-state family. `p`-independent
/// symbols give a multiplier, others a matrix truncated at `nmax`.
pub fn quantize(symbol: &ClassicalSymbol, nu: f64, nmax: usize) -> Result<QuantizedOperator> {
    let table = KernelTable::for_nu(nu)?;
    let weights = |degree: u8, nodes: &[KernelNode]| -> Vec<f64> {
        nodes
            .iter()
            .map(|n| {
                symbol
                    .terms
                    .iter()
                    .filter(|t| t.p_degree == degree)
                    .map(|t| t.coefficient * t.u.at_label(&n.envelope))
                    .sum()
            })
            .collect()
    };
    let kind = if symbol.max_p_degree() == 0 {
        OperatorKind::Multiplier(Multiplier {
            fine: weights(0, &table.fine),
            coarse: weights(0, &table.coarse),
            table: table.clone(),
        })
    } else {
        let parts = KernelParts {
            scalar: weights(0, &table.fine),
            first: weights(1, &table.fine),
            second: weights(2, &table.fine),
        };
        OperatorKind::Matrix(assemble(&table, &parts, nmax)?)
    };
    Ok(QuantizedOperator {
        nu,
        source: symbol.name.clone(),
        kind,
        properties: symbol.properties,
    })
}

/// The position multiplier `F(Q)`.
pub fn quantize_position(nu: f64) -> Result<Multiplier> {
    let table = KernelTable::for_nu(nu)?;
    Ok(Multiplier::new(table, |e| PositionFunction::Position.at_label(e)))
}

/// `int dq dp / (2 pi) <phi_m|eta><eta|phi_n>` for `m, n <= nmax`.
pub fn resolution_matrix(nu: f64, nmax: usize) -> Result<EigenbasisMatrix> {
    quantize(&ClassicalSymbol::unit(), nu, 0)?.to_matrix(nmax)
}

/// Matrix elements from the `p`-integrated kernels:
/// `sum_k <phi_m| ... |phi_n>` with
/// `K_0 phi_m phi_n`, `-(i/2) K_1 (phi_m phi_n' - phi_m' phi_n)` and
/// `K_2 phi_m' phi_n' + J_2 phi_m phi_n`, where
/// `J_2 = int u_2 |eta_q|^2 (a / sin^2 x - (W(q) + a cot x)^2) dq`.
fn assemble(table: &KernelTable, parts: &KernelParts, nmax: usize) -> Result<EigenbasisMatrix> {
    let nu = table.nu;
    let a = nu + 1.0;
    let basis = EigenBasis::new(nu, nmax)?;
    let rule = basis.quadrature()?;
    let has = |v: &Vec<f64>| !v.is_empty() && v.iter().any(|&x| x != 0.0);
    let (use0, use1, use2) = (has(&parts.scalar), has(&parts.first), has(&parts.second));

    // Per node: (phi, phi', weighted kernels)
    let columns: Vec<(Vec<f64>, Vec<f64>, [f64; 3])> = rule
        .nodes()
        .par_iter()
        .zip(rule.weights().par_iter())
        .map(|(&x, &wt)| {
            let log_sin_x = x.sin().ln();
            let s = x.sin();
            let cot = x.cos() / s;
            let (mut k0, mut k1, mut k2, mut j2) = (0.0, 0.0, 0.0, 0.0);
            for (j, node) in table.fine.iter().enumerate() {
                let k = node.weight_at(x, log_sin_x);
                if k == 0.0 {
                    continue;
                }
                if use0 {
                    k0 += k * parts.scalar[j];
                }
                if use1 {
                    k1 += k * parts.first[j];
                }
                if use2 {
                    let g = node.envelope.w() + a * cot;
                    k2 += k * parts.second[j];
                    j2 += k * parts.second[j] * (a / (s * s) - g * g);
                }
            }
            let mut v = vec![0.0; basis.len()];
            let mut d = vec![0.0; basis.len()];
            basis.values_and_derivatives(x, &mut v, &mut d);
            (v, d, [wt * (k0 + j2), wt * k1, wt * k2])
        })
        .collect();

    let n = basis.len();
    let k = columns.len();
    let mut phi = Array2::<f64>::zeros((n, k));
    let mut dphi = Array2::<f64>::zeros((n, k));
    let mut scalar = Array2::<f64>::zeros((n, k));
    let mut first = Array2::<f64>::zeros((n, k));
    let mut dsecond = Array2::<f64>::zeros((n, k));
    for (c, (v, d, w)) in columns.iter().enumerate() {
        for i in 0..n {
            phi[[i, c]] = v[i];
            dphi[[i, c]] = d[i];
            scalar[[i, c]] = v[i] * w[0];
            first[[i, c]] = v[i] * w[1];
            dsecond[[i, c]] = d[i] * w[2];
        }
    }
    let re = scalar.dot(&phi.t()) + dsecond.dot(&dphi.t());
    // -(i/2) int K_1 (phi_m phi_n' - phi_m' phi_n)
    let cross = first.dot(&dphi.t());
    let im = (&cross.t() - &cross) * 0.5;
    let data = ndarray::Zip::from(&re)
        .and(&im)
        .map_collect(|&r, &i| Complex64::new(r, i));
    Ok(EigenbasisMatrix { nu, data })
}

/// Operators whose coherent-state expectation can be taken.
#[derive(Clone)]
pub enum Observable {
    /// Multiplication by `x`.
    Position,
    /// Multiplication by `W(x)`.
    Superpotential,
    /// Multiplication by `1 / sin^2 x`.
    InverseSinSquared,
    /// `-i d/dx`.
    Momentum,
    /// `-d^2/dx^2`, taken as `||eta'||^2`.
    MomentumSquared,
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    Quantized(Arc<QuantizedOperator>),
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Position => f.write_str("Q"),
            Self::Superpotential => f.write_str("W(Q)"),
            Self::InverseSinSquared => f.write_str("1/sin^2(Q)"),
            Self::Momentum => f.write_str("P"),
            Self::MomentumSquared => f.write_str("P^2"),
            Self::Function(_) => f.write_str("f(Q)"),
            Self::Quantized(op) => write!(f, "quantized {}", op.source),
        }
    }
}

/// A lower symbol with an error bar.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LowerSymbol {
    pub value: Complex64,
    /// Quadrature error estimate, or for matrices the truncation bound
    /// `truncation_mass * ||M||`.
    pub error: f64,
    pub truncation_mass: Option<f64>,
    /// Set when the truncation bound exceeds 1e-6 of the value.
    pub truncation_dominated: bool,
}

/// `<eta_{q,p}| op |eta_{q,p}>` for the `nu` family.
pub fn lower_symbol(op: &Observable, nu: f64, q: f64, p: f64) -> Result<LowerSymbol> {
    let state = CoherentState::new(nu, q, p)?;
    let env = state.envelope();
    let a = nu + 1.0;
    let multiplier = |f: &dyn Fn(f64) -> f64| -> Result<LowerSymbol> {
        let density = |t: f64| state.value(t).norm_sqr() * f(t);
        let [v] = env.integrate_adaptive(1.0, MOMENT_TOLERANCE, |t| [density(t)])?;
        let scale = env.banded_rule(1.0).integrate(|t| density(t).abs());
        Ok(LowerSymbol {
            value: v.into(),
            error: MOMENT_TOLERANCE * scale,
            truncation_mass: None,
            truncation_dominated: false,
        })
    };
    match op {
        Observable::Position => multiplier(&|t| t),
        Observable::Superpotential => multiplier(&|t| -a / t.tan()),
        Observable::InverseSinSquared => multiplier(&|t| t.sin().powi(-2)),
        Observable::Function(f) => multiplier(&|t| f(t)),
        Observable::Momentum => {
            let current = |t: f64| -Complex64::i() * state.value(t).conj() * state.derivative(t);
            let [re, im] = env.integrate_adaptive(p.abs() + 1.0, MOMENT_TOLERANCE, |t| {
                let z = current(t);
                [z.re, z.im]
            })?;
            let scale = env.banded_rule(p.abs() + 1.0).integrate(|t| current(t).norm());
            Ok(LowerSymbol {
                value: Complex64::new(re, im),
                error: MOMENT_TOLERANCE * scale,
                truncation_mass: None,
                truncation_dominated: false,
            })
        }
        Observable::MomentumSquared => {
            let [v] = env.integrate_adaptive(p.abs() + 1.0, MOMENT_TOLERANCE, |t| [state.derivative(t).norm_sqr()])?;
            Ok(LowerSymbol {
                value: v.into(),
                error: MOMENT_TOLERANCE * v,
                truncation_mass: None,
                truncation_dominated: false,
            })
        }
        Observable::Quantized(qop) => match &qop.kind {
            OperatorKind::Multiplier(m) => {
                if m.nu() != nu {
                    log::debug!("multiplier from the nu = {} family sampled in nu = {nu} states", m.nu());
                }
                let sampled = |t: f64| -> (f64, f64) {
                    let rho = state.value(t).norm_sqr();
                    if rho == 0.0 {
                        return (0.0, 0.0);
                    }
                    let (fine, coarse) = m.raw(t);
                    (rho * fine, rho * (fine - coarse).abs())
                };
                let [v] = env.integrate_adaptive(1.0, MOMENT_TOLERANCE, |t| [sampled(t).0])?;
                let err = env.banded_rule(1.0).integrate(|t| sampled(t).1);
                Ok(LowerSymbol {
                    value: v.into(),
                    error: err,
                    truncation_mass: None,
                    truncation_dominated: false,
                })
            }
            OperatorKind::Matrix(mat) => {
                let c = cs_coefficients(nu, q, p, mat.nu, mat.nmax())?;
                let value = mat.expectation(c.state.coeffs());
                let error = c.truncation_mass.max(0.0) * mat.norm();
                Ok(LowerSymbol {
                    value,
                    error,
                    truncation_mass: Some(c.truncation_mass),
                    truncation_dominated: error > 1e-6 * value.norm().max(1.0),
                })
            }
        },
    }
}

/// Closed-form lower symbols of the reference observables
/// (energies in units of `E0`, momenta in units of `pi hbar / L`).
pub mod closed_form {
    /// `<P>` = `p`.
    pub fn momentum(p: f64) -> f64 {
        p
    }

    /// `<W(Q)>` = `W(q)`.
    pub fn superpotential(nu: f64, q: f64) -> f64 {
        -(nu + 1.0) / q.tan()
    }

    /// `<1/sin^2 Q> = ((2 nu + 2)/(2 nu + 1)) / sin^2 q`.
    pub fn inverse_sin_squared(nu: f64, q: f64) -> f64 {
        (2.0 * nu + 2.0) / (2.0 * nu + 1.0) / q.sin().powi(2)
    }

    /// `<P^2> = p^2 + (nu + 1)^2 / ((2 nu + 1) sin^2 q)`.
    pub fn kinetic(nu: f64, q: f64, p: f64) -> f64 {
        p * p + (nu + 1.0).powi(2) / ((2.0 * nu + 1.0) * q.sin().powi(2))
    }

    /// Multiplier obtained by quantizing `1/sin^2 q`: `((2 nu + 3)/(2 nu + 2)) / sin^2 x`.
    pub fn quantized_inverse_sin_squared(nu: f64, x: f64) -> f64 {
        (2.0 * nu + 3.0) / (2.0 * nu + 2.0) / x.sin().powi(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_validation() {
        assert!(ClassicalSymbol::monomial("p3", PositionFunction::Constant(1.0), 3).is_err());
        assert!(ClassicalSymbol::named("nope", 0.0).is_err());
        assert_eq!(ClassicalSymbol::classical_hamiltonian(0.0).max_p_degree(), 2);
    }

    #[test]
    fn identity_weight_at_midpoint() {
        let g = identity_weight(0.0, FRAC_PI_2).unwrap();
        assert!((g - 1.0).abs() < 1e-8, "{g}");
    }

    #[test]
    fn identity_weight_rejects_walls() {
        assert!(identity_weight(0.0, 0.0).is_err());
        assert!(identity_weight(0.0, PI).is_err());
    }
}
