//! Gegenbauer polynomials, the complex log-gamma function and Gauss-Legendre
//! rules.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// `C_n^lambda(x)` by forward recurrence.
pub fn gegenbauer(n: usize, lambda: f64, x: f64) -> Result<f64> {
    if lambda.is_nan() || lambda <= 0.0 || !lambda.is_finite() {
        return Err(invalid("lambda", format!("{lambda} must be positive")));
    }
    if !x.is_finite() {
        return Err(invalid("x", format!("{x} is not finite")));
    }
    let mut prev = 1.0;
    if n == 0 {
        return Ok(prev);
    }
    let mut cur = 2.0 * lambda * x;
    for k in 2..=n {
        let kf = k as f64;
        let next = (2.0 * (kf + lambda - 1.0) * x * cur - (kf + 2.0 * lambda - 2.0) * prev) / kf;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Fills `out[k] = C_k^lambda(x)` for `k < out.len()`.
///
/// No validation; callers guarantee `lambda > 0`.
pub fn gegenbauer_sequence(lambda: f64, x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() == 1 {
        return;
    }
    out[1] = 2.0 * lambda * x;
    for k in 2..out.len() {
        let kf = k as f64;
        out[k] = (2.0 * (kf + lambda - 1.0) * x * out[k - 1] - (kf + 2.0 * lambda - 2.0) * out[k - 2]) / kf;
    }
}

// B_{2k} / (2k (2k - 1)) for k = 1..=8.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

const STIRLING_SHIFT: f64 = 15.0;

/// Principal branch of `ln Gamma(z)` for `Re z > 0`.
///
/// The argument is shifted to `Re z >= 15` with the recurrence and the
/// Stirling series is summed there; the result is accurate to a few ulp of
/// `|ln Gamma|` in the right half-plane.
pub fn log_gamma_complex(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(invalid("z", format!("{z} is not finite")));
    }
    if z.re <= 0.0 {
        return Err(invalid(
            "z",
            format!("{z}: only Re z > 0 is supported (poles at the non-positive integers)"),
        ));
    }
    Ok(log_gamma_right(z))
}

fn log_gamma_right(mut z: Complex64) -> Complex64 {
    let mut shift = Complex64::new(0.0, 0.0);
    while z.re < STIRLING_SHIFT {
        shift += z.ln();
        z += 1.0;
    }
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut power = inv;
    for c in STIRLING {
        series += power * c;
        power *= inv2;
    }
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series - shift
}

/// `ln Gamma(x)` for real `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    log_gamma_right(Complex64::new(x, 0.0)).re
}

/// Nodes and positive weights of a quadrature rule on `[a, b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    interval: (f64, f64),
}

impl QuadratureRule {
    pub(crate) fn from_parts(nodes: Vec<f64>, weights: Vec<f64>, interval: (f64, f64)) -> Self {
        debug_assert_eq!(nodes.len(), weights.len());
        Self {
            nodes,
            weights,
            interval,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn integrate_complex(&self, f: impl Fn(f64) -> Complex64) -> Complex64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| f(x) * w).sum()
    }
}

type RuleKey = (usize, u64, u64);

fn rule_cache() -> &'static RwLock<HashMap<RuleKey, Arc<QuadratureRule>>> {
    static CACHE: OnceLock<RwLock<HashMap<RuleKey, Arc<QuadratureRule>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

type ReferenceRule = Arc<(Vec<f64>, Vec<f64>)>;

fn reference_cache() -> &'static RwLock<HashMap<usize, ReferenceRule>> {
    static CACHE: OnceLock<RwLock<HashMap<usize, ReferenceRule>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Legendre roots and weights on `[-1, 1]`, ascending. Cached per `n`.
pub(crate) fn reference_rule(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    if let Some(rule) = reference_cache().read().unwrap().get(&n) {
        return rule.clone();
    }
    let rule = Arc::new(legendre_roots(n));
    reference_cache().write().unwrap().entry(n).or_insert(rule).clone()
}

fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / ((x - 1.0) * (x + 1.0));
    (p1, dp)
}

fn legendre_roots(n: usize) -> (Vec<f64>, Vec<f64>) {
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_eval(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1e-3) {
                break;
            }
        }
        let (_, dp) = legendre_eval(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // roots come out descending; store mirrored pairs
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule on `[0, pi]`: `bulk` equal panels on
/// `[edge, pi - edge]` and panels shrinking by 1/8 toward each wall, down to
/// about 1e-15. Resolves integrands that behave like `sin^alpha t` at the walls.
pub fn wall_graded(per_panel: usize, bulk: usize, edge: f64) -> Result<Arc<QuadratureRule>> {
    if per_panel == 0 || bulk == 0 {
        return Err(invalid("per_panel", "graded rules need nodes and panels"));
    }
    if !(edge > 0.0 && edge < 1.0) {
        return Err(invalid("edge", format!("{edge} is not in (0, 1)")));
    }
    let key = (per_panel, bulk as u64, edge.to_bits());
    if let Some(rule) = graded_cache().read().unwrap().get(&key) {
        return Ok(rule.clone());
    }
    let mut left = vec![0.0];
    let mut d = edge;
    while d > 1e-15 {
        left.push(d);
        d /= 8.0;
    }
    left.sort_by(f64::total_cmp);
    let mut points = left.clone();
    let h = (PI - 2.0 * edge) / bulk as f64;
    points.extend((1..bulk).map(|k| edge + h * k as f64));
    points.extend(left.iter().rev().map(|x| PI - x));
    let mut nodes = Vec::with_capacity(per_panel * points.len());
    let mut weights = Vec::with_capacity(per_panel * points.len());
    for pair in points.windows(2) {
        push_panel(per_panel, pair[0], pair[1], &mut nodes, &mut weights);
    }
    let rule = Arc::new(QuadratureRule::from_parts(nodes, weights, (0.0, PI)));
    Ok(graded_cache().write().unwrap().entry(key).or_insert(rule).clone())
}

fn graded_cache() -> &'static RwLock<HashMap<RuleKey, Arc<QuadratureRule>>> {
    static CACHE: OnceLock<RwLock<HashMap<RuleKey, Arc<QuadratureRule>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// `n`-point Gauss-Legendre rule on `[a, b]`, memoized by `(n, a, b)`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<Arc<QuadratureRule>> {
    if n == 0 {
        return Err(invalid("n", "a quadrature rule needs at least one node"));
    }
    if a >= b || !a.is_finite() || !b.is_finite() {
        return Err(invalid(
            "interval",
            format!("[{a}, {b}] is not a finite interval with a < b"),
        ));
    }
    let key = (n, a.to_bits(), b.to_bits());
    if let Some(rule) = rule_cache().read().unwrap().get(&key) {
        return Ok(rule.clone());
    }
    let reference = reference_rule(n);
    let rule = Arc::new(scaled_rule(&reference, a, b));
    Ok(rule_cache().write().unwrap().entry(key).or_insert(rule).clone())
}

fn scaled_rule(reference: &(Vec<f64>, Vec<f64>), a: f64, b: f64) -> QuadratureRule {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let nodes = reference.0.iter().map(|&x| mid + half * x).collect();
    let weights = reference.1.iter().map(|&w| half * w).collect();
    QuadratureRule::from_parts(nodes, weights, (a, b))
}

/// Appends an `n`-point Gauss-Legendre panel on `[a, b]` to `nodes`/`weights`.
pub(crate) fn push_panel(n: usize, a: f64, b: f64, nodes: &mut Vec<f64>, weights: &mut Vec<f64>) {
    let reference = reference_rule(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    for (&x, &w) in reference.0.iter().zip(&reference.1) {
        nodes.push(mid + half * x);
        weights.push(half * w);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gegenbauer_low_orders() {
        assert_eq!(gegenbauer(0, 1.5, 0.3).unwrap(), 1.0);
        assert_eq!(gegenbauer(1, 2.0, 0.25).unwrap(), 1.0);
        // C_2^1(x) = 4x^2 - 1
        assert!(gegenbauer(2, 1.0, 0.5).unwrap().abs() < 1e-15);
        assert!(gegenbauer(2, 0.0, 0.5).is_err());
        assert!(gegenbauer(2, -1.0, 0.5).is_err());
    }

    #[test]
    fn gegenbauer_sequence_matches_single() {
        let mut out = vec![0.0; 12];
        gegenbauer_sequence(2.3, -0.37, &mut out);
        for (n, v) in out.iter().enumerate() {
            assert_eq!(*v, gegenbauer(n, 2.3, -0.37).unwrap());
        }
    }

    #[test]
    fn log_gamma_integers() {
        assert!(log_gamma_complex(Complex64::new(1.0, 0.0)).unwrap().norm() < 1e-15);
        let v = log_gamma_complex(Complex64::new(5.0, 0.0)).unwrap();
        assert!((v.re - 24f64.ln()).abs() < 1e-14 && v.im.abs() < 1e-15);
        assert!((ln_gamma(0.5) - 0.5 * PI.ln()).abs() < 1e-14);
        assert!(log_gamma_complex(Complex64::new(0.0, 0.0)).is_err());
        assert!(log_gamma_complex(Complex64::new(-2.0, 0.0)).is_err());
    }

    #[test]
    fn log_gamma_conjugate_symmetry() {
        let z = Complex64::new(3.2, 7.5);
        let a = log_gamma_complex(z).unwrap();
        let b = log_gamma_complex(z.conj()).unwrap();
        assert!((a - b.conj()).norm() < 1e-13);
    }

    #[test]
    fn small_rules() {
        let r = gauss_legendre(1, -1.0, 1.0).unwrap();
        assert_eq!(r.nodes(), &[0.0]);
        assert_eq!(r.weights(), &[2.0]);
        let r = gauss_legendre(2, -1.0, 1.0).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((r.nodes()[0] + s).abs() < 1e-15 && (r.nodes()[1] - s).abs() < 1e-15);
        assert!((r.weights()[0] - 1.0).abs() < 1e-15 && (r.weights()[1] - 1.0).abs() < 1e-15);
        assert!(gauss_legendre(0, 0.0, 1.0).is_err());
        assert!(gauss_legendre(3, 1.0, 1.0).is_err());
    }

    #[test]
    fn sin_squared_integral() {
        let r = gauss_legendre(20, 0.0, PI).unwrap();
        let v = r.integrate(|t| t.sin().powi(2));
        assert!((v - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn memoized() {
        let a = gauss_legendre(37, 0.0, 2.0).unwrap();
        let b = gauss_legendre(37, 0.0, 2.0).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }
}
