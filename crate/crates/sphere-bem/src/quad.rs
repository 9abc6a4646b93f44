//! Gauss-Legendre quadrature rules.
//!
//! Nodes are the roots of the Legendre polynomial `P_n`, found by Newton
//! iteration from the Chebyshev-like initial guesses; weights follow from the
//! derivative. Rules are cached per order since block assembly requests the
//! same handful of orders thousands of times.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::{Error, Result};

/// An `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `n`-point rule. `n` must be at least 1.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("Gauss-Legendre rule needs n >= 1".into()));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        // Roots come in +/- pairs; solve for the non-negative half and mirror.
        let half = n.div_ceil(2);
        for i in 0..half {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            // One clean-up step so nodes are converged to machine precision.
            let (p, d) = legendre_with_derivative(n, x);
            x -= p / d;
            let w = 2.0 / ((1.0 - x * x) * d * d);
            nodes[i] = x;
            weights[i] = w;
            nodes[n - 1 - i] = -x;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[half - 1] = 0.0;
        }
        // Ascending order is what panel integration expects.
        nodes.reverse();
        weights.reverse();
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes on `[-1, 1]`, ascending.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Iterates `(node, weight)` pairs mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let rad = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + rad * x, rad * w))
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Returns the cached `n`-point rule, building it on first use.
pub fn cached(n: usize) -> Result<Arc<GaussLegendre>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("quadrature cache poisoned");
    if let Some(rule) = map.get(&n) {
        return Ok(rule.clone());
    }
    let rule = Arc::new(GaussLegendre::new(n)?);
    map.insert(n, rule.clone());
    Ok(rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_zero_points() {
        assert!(GaussLegendre::new(0).is_err());
    }

    #[test]
    fn five_point_rule_matches_reference_table() {
        let rule = GaussLegendre::new(5).unwrap();
        let nodes = [
            -0.906179845938664,
            -0.5384693101056831,
            0.0,
            0.5384693101056831,
            0.906179845938664,
        ];
        let weights = [
            0.23692688505618908,
            0.47862867049936647,
            0.5688888888888889,
            0.47862867049936647,
            0.23692688505618908,
        ];
        for i in 0..5 {
            assert_relative_eq!(rule.nodes()[i], nodes[i], max_relative = 1e-14, epsilon = 1e-14);
            assert_relative_eq!(rule.weights()[i], weights[i], max_relative = 1e-14);
        }
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for n in 1..=64 {
            let rule = GaussLegendre::new(n).unwrap();
            let total: f64 = rule.weights().iter().sum();
            assert_relative_eq!(total, 2.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        for n in [1usize, 2, 3, 8, 20, 48] {
            let rule = GaussLegendre::new(n).unwrap();
            for k in 0..2 * n {
                let got = rule.integrate(-1.0, 1.0, |x| x.powi(k as i32));
                let want = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
                assert!(
                    (got - want).abs() < 1e-12,
                    "n={n} k={k}: got {got}, want {want}"
                );
            }
        }
    }

    #[test]
    fn integrates_cosine_on_shifted_interval() {
        let rule = GaussLegendre::new(24).unwrap();
        let got = rule.integrate(0.0, std::f64::consts::FRAC_PI_2, f64::cos);
        assert_relative_eq!(got, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn nodes_are_symmetric_and_ascending() {
        let rule = GaussLegendre::new(33).unwrap();
        let n = rule.len();
        for i in 0..n {
            assert!(i == 0 || rule.nodes()[i] > rule.nodes()[i - 1]);
            assert_relative_eq!(rule.nodes()[i], -rule.nodes()[n - 1 - i], epsilon = 1e-15);
        }
    }

    #[test]
    fn cache_returns_identical_rule() {
        let a = cached(17).unwrap();
        let b = cached(17).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }
}
