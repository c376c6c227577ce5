//! Legendre-Gauss-Lobatto rules.

use crate::error::{Error, Result};

/// Default number of LGL nodes for sliver and pseudospectral integrals.
pub const DEFAULT_RULE_ORDER: usize = 21;

const MAX_NEWTON_ITERS: usize = 100;

/// A one-dimensional quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1D {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }

    /// The rule affinely carried from its own interval to `[a, b]`.
    ///
    /// Assumes `self` lives on `[-1, 1]`.
    pub fn map_to(&self, a: f64, b: f64) -> Result<Rule1D> {
        if !(a < b) {
            return Err(Error::Rule(format!("empty interval [{a}, {b}]")));
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Ok(Rule1D {
            nodes: self.nodes.iter().map(|&t| mid + half * t).collect(),
            weights: self.weights.iter().map(|&w| half * w).collect(),
        })
    }

    /// Nodes and weights for `[0, 1]`, the interval every integral in this
    /// crate is written on.
    pub fn unit_interval(&self) -> Rule1D {
        self.map_to(0.0, 1.0).expect("0 < 1")
    }
}

/// Legendre polynomial `P_n(x)` and its first derivative.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let nf = n as f64;
    // (1 - x^2) P_n' = n (P_{n-1} - x P_n)
    let dp = nf * (p_prev - x * p) / (1.0 - x * x);
    (p, dp)
}

/// `q`-point Legendre-Gauss-Lobatto rule on `[-1, 1]`, exact for polynomials
/// of degree `2q - 3`.
///
/// The interior nodes are the roots of `P'_{q-1}`, found by Newton's method
/// started from the Chebyshev-Gauss-Lobatto points.
pub fn lgl_rule(q: usize) -> Result<Rule1D> {
    if q < 2 {
        return Err(Error::Rule(format!("LGL rule needs at least 2 nodes, got {q}")));
    }
    let n = q - 1;
    let nf = n as f64;
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    nodes[0] = -1.0;
    nodes[n] = 1.0;

    // Only the left half is solved for; the rest follows by symmetry.
    for i in 1..=(n / 2) {
        let mut x = -(std::f64::consts::PI * i as f64 / nf).cos();
        if 2 * i == n {
            x = 0.0;
        } else {
            let mut converged = false;
            for _ in 0..MAX_NEWTON_ITERS {
                let (p, dp) = legendre_with_derivative(n, x);
                // Legendre's equation gives P'' from P and P'.
                let d2p = (2.0 * x * dp - nf * (nf + 1.0) * p) / (1.0 - x * x);
                let step = dp / d2p;
                x -= step;
                if step.abs() <= 1e-16 * x.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                // A final tolerance check; the update may stall at rounding level.
                let (p, dp) = legendre_with_derivative(n, x);
                let d2p = (2.0 * x * dp - nf * (nf + 1.0) * p) / (1.0 - x * x);
                if (dp / d2p).abs() > 1e-13 {
                    return Err(Error::Rule(format!(
                        "Newton iteration for LGL node {i} of {q} did not converge"
                    )));
                }
            }
        }
        nodes[i] = x;
        nodes[n - i] = -x;
    }

    let scale = 2.0 / (nf * (nf + 1.0));
    for i in 0..=(n / 2) {
        let (p, _) = legendre_with_derivative(n, nodes[i]);
        let w = scale / (p * p);
        weights[i] = w;
        weights[n - i] = w;
    }
    Ok(Rule1D { nodes, weights })
}

/// Affine map of a rule from `[-1, 1]` to `[a, b]`.
pub fn map_rule(rule: &Rule1D, a: f64, b: f64) -> Result<Rule1D> {
    rule.map_to(a, b)
}
