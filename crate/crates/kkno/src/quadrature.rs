//! Deterministic Gauss quadrature rules and tensor-product integration.
//!
//! Two one-dimensional families are provided: Gauss-Legendre on `[-1, 1]`
//! and Gauss-Hermite with weight `e^{-s^2}` on the real line. Tensor-product
//! integration over a box reduces every sum with a fixed-order pairwise
//! scheme, so results are bit-identical no matter how callers parallelize.

use crate::error::{Error, Result};

/// One-dimensional quadrature family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    /// Gauss-Legendre on `[-1, 1]`, weight 1.
    Legendre,
    /// Gauss-Hermite on the real line, weight `e^{-s^2}`.
    Hermite,
}

/// Nodes and weights of a one-dimensional Gauss rule.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub kind: RuleKind,
    pub order: usize,
    /// Ascending nodes.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

const NEWTON_EPS: f64 = 3e-15;
const NEWTON_MAX_ITER: usize = 100;

/// Gauss-Legendre rule of the given order. Nodes are the roots of the
/// degree-`order` Legendre polynomial in ascending order; weights are positive.
pub fn legendre_rule(order: usize) -> Result<QuadratureRule> {
    if order == 0 {
        return Err(Error::ZeroOrder);
    }
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess for the i-th largest root.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..NEWTON_MAX_ITER {
            // Evaluate P_n(z) and P_{n-1}(z) by the three-term recurrence.
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= NEWTON_EPS {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule {
        kind: RuleKind::Legendre,
        order,
        nodes,
        weights,
    })
}

/// Gauss-Hermite rule of the given order for the weight `e^{-s^2}`.
/// Weights sum to `sqrt(pi)`.
pub fn hermite_rule(order: usize) -> Result<QuadratureRule> {
    if order == 0 {
        return Err(Error::ZeroOrder);
    }
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    // Roots found from the largest inward; classic starting guesses.
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => {
                let c = (2 * n + 1) as f64;
                c.sqrt() - 1.85575 * c.powf(-1.0 / 6.0)
            }
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[n - 1],
            3 => 1.91 * z - 0.91 * nodes[n - 2],
            _ => 2.0 * z - nodes[n - i + 1],
        };
        let mut pp = 0.0;
        for _ in 0..NEWTON_MAX_ITER {
            // Orthonormal Hermite recurrence.
            let mut p1 = std::f64::consts::PI.powf(-0.25);
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / j as f64).sqrt() * p2 - ((j - 1) as f64 / j as f64).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= NEWTON_EPS {
                break;
            }
        }
        nodes[n - 1 - i] = z;
        nodes[i] = -z;
        let w = 2.0 / (pp * pp);
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule {
        kind: RuleKind::Hermite,
        order,
        nodes,
        weights,
    })
}

/// Fixed-order pairwise summation. The reduction tree depends only on the
/// slice length, never on thread count.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Tensor-product Gauss-Legendre integration of `f` over a box.
///
/// One Legendre rule per axis; a non-finite integrand value aborts with the
/// offending node coordinates. The node-value products are accumulated in a
/// fixed order and reduced pairwise.
pub fn integrate_box<F>(mut f: F, box_: &[(f64, f64)], rules: &[&QuadratureRule]) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let d = box_.len();
    if rules.len() != d {
        return Err(Error::ShapeMismatch(format!(
            "{} axes but {} rules",
            d,
            rules.len()
        )));
    }
    for r in rules {
        if r.kind != RuleKind::Legendre {
            return Err(Error::InvalidArgument(
                "integrate_box requires Legendre rules (bounded box semantics)".into(),
            ));
        }
    }
    let total: usize = rules.iter().map(|r| r.order).product();
    let mut terms = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    let mut point = vec![0.0f64; d];
    loop {
        let mut w = 1.0;
        for a in 0..d {
            let (lo, hi) = box_[a];
            let half = 0.5 * (hi - lo);
            point[a] = lo + half * (rules[a].nodes[idx[a]] + 1.0);
            w *= rules[a].weights[idx[a]] * half;
        }
        let v = f(&point);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                node: format!("{point:?}"),
                value: v,
            });
        }
        terms.push(w * v);
        // Odometer increment over the tensor grid.
        let mut a = d;
        loop {
            if a == 0 {
                return Ok(pairwise_sum(&terms));
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < rules[a].order {
                break;
            }
            idx[a] = 0;
        }
    }
}
