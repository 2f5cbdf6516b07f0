//! Registry of analytic test functions used across the verification harness.
//!
//! Names accepted by [`test_function`]:
//! `const1`, `coord(i)`, `quad(i,j)`, `sin2pi`, `sin2pi(i)`, `absdev`,
//! `expsum` (axes are 1-based). Smooth entries carry analytic gradient and
//! Hessian evaluators; `absdev` is the Lipschitz kink `|x_1 - 1/2|` and has
//! neither.

use std::sync::Arc;

use crate::error::{Error, Result};

pub type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradEvaluator = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
/// Hessian as a d*d row-major matrix.
pub type HessEvaluator = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Smoothness class of a registry function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    Constant,
    Linear,
    Quadratic,
    AnalyticPeriodic,
    /// Smooth but not periodic on the unit box (e.g. `expsum`).
    Analytic,
    LipschitzKink,
}

#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    pub dimension: usize,
    pub value: Evaluator,
    pub gradient: Option<GradEvaluator>,
    pub hessian: Option<HessEvaluator>,
    pub smoothness: Smoothness,
    /// Exact modulus of continuity on the unit box, where known.
    pub modulus_formula: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
}

const TAU: f64 = std::f64::consts::TAU;

fn parse_axes(name: &str) -> Option<(String, Vec<usize>)> {
    let open = name.find('(')?;
    if !name.ends_with(')') {
        return None;
    }
    let head = name[..open].to_string();
    let args: Option<Vec<usize>> = name[open + 1..name.len() - 1]
        .split(',')
        .map(|s| s.trim().parse::<usize>().ok())
        .collect();
    Some((head, args?))
}

/// Look up a registry function by name for dimension `d`.
pub fn test_function(name: &str, d: usize) -> Result<TestFunction> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let reject = || Error::UnknownFunction(name.to_string());
    let bad_axis = |i: usize| {
        Error::InvalidArgument(format!("axis {i} out of range for dimension {d}"))
    };

    if name == "const1" {
        return Ok(TestFunction {
            name: name.into(),
            dimension: d,
            value: Arc::new(|_| 1.0),
            gradient: Some(Arc::new(move |_| vec![0.0; d])),
            hessian: Some(Arc::new(move |_| vec![0.0; d * d])),
            smoothness: Smoothness::Constant,
            modulus_formula: Some(Arc::new(|_| 0.0)),
        });
    }
    if name == "absdev" {
        return Ok(TestFunction {
            name: name.into(),
            dimension: d,
            value: Arc::new(|x| (x[0] - 0.5).abs()),
            gradient: None,
            hessian: None,
            smoothness: Smoothness::LipschitzKink,
            modulus_formula: Some(Arc::new(|delta| delta.min(0.5))),
        });
    }
    if name == "expsum" {
        let df = d as f64;
        return Ok(TestFunction {
            name: name.into(),
            dimension: d,
            value: Arc::new(|x| x.iter().sum::<f64>().exp()),
            gradient: Some(Arc::new(move |x| {
                let v = x.iter().sum::<f64>().exp();
                vec![v; d]
            })),
            hessian: Some(Arc::new(move |x| {
                let v = x.iter().sum::<f64>().exp();
                vec![v; d * d]
            })),
            smoothness: Smoothness::Analytic,
            // Extremal pair runs along the main diagonal of the unit box.
            modulus_formula: Some(Arc::new(move |delta| {
                let reach = (delta * df.sqrt()).min(df);
                df.exp() * (1.0 - (-reach).exp())
            })),
        });
    }
    if name == "sin2pi" {
        return Ok(sin_product(name, d, (1..=d).collect()));
    }
    if let Some((head, axes)) = parse_axes(name) {
        match head.as_str() {
            "coord" if axes.len() == 1 => {
                let i = axes[0];
                if i == 0 || i > d {
                    return Err(bad_axis(i));
                }
                let k = i - 1;
                return Ok(TestFunction {
                    name: name.into(),
                    dimension: d,
                    value: Arc::new(move |x| x[k]),
                    gradient: Some(Arc::new(move |_| {
                        let mut g = vec![0.0; d];
                        g[k] = 1.0;
                        g
                    })),
                    hessian: Some(Arc::new(move |_| vec![0.0; d * d])),
                    smoothness: Smoothness::Linear,
                    modulus_formula: Some(Arc::new(|delta| delta.min(1.0))),
                });
            }
            "quad" if axes.len() == 2 => {
                let (i, j) = (axes[0], axes[1]);
                if i == 0 || i > d {
                    return Err(bad_axis(i));
                }
                if j == 0 || j > d {
                    return Err(bad_axis(j));
                }
                let (a, b) = (i - 1, j - 1);
                let modulus: Arc<dyn Fn(f64) -> f64 + Send + Sync> = if a == b {
                    Arc::new(|delta: f64| {
                        let delta = delta.min(1.0);
                        delta * (2.0 - delta)
                    })
                } else {
                    Arc::new(|delta: f64| {
                        let s = (delta / std::f64::consts::SQRT_2).min(1.0);
                        (2.0 * s - s * s).min(1.0)
                    })
                };
                return Ok(TestFunction {
                    name: name.into(),
                    dimension: d,
                    value: Arc::new(move |x| x[a] * x[b]),
                    gradient: Some(Arc::new(move |x| {
                        let mut g = vec![0.0; d];
                        g[a] += x[b];
                        g[b] += x[a];
                        g
                    })),
                    hessian: Some(Arc::new(move |_| {
                        let mut h = vec![0.0; d * d];
                        h[a * d + b] += 1.0;
                        h[b * d + a] += 1.0;
                        h
                    })),
                    smoothness: Smoothness::Quadratic,
                    modulus_formula: Some(modulus),
                });
            }
            "sin2pi" if axes.len() == 1 => {
                let i = axes[0];
                if i == 0 || i > d {
                    return Err(bad_axis(i));
                }
                return Ok(sin_product(name, d, vec![i]));
            }
            _ => return Err(reject()),
        }
    }
    Err(reject())
}

/// Product of `sin(2 pi x_k)` over the listed (1-based) axes.
fn sin_product(name: &str, d: usize, axes: Vec<usize>) -> TestFunction {
    let ax: Vec<usize> = axes.iter().map(|&i| i - 1).collect();
    let ax_v = ax.clone();
    let ax_g = ax.clone();
    let ax_h = ax.clone();
    let value = move |x: &[f64]| ax_v.iter().map(|&k| (TAU * x[k]).sin()).product::<f64>();
    TestFunction {
        name: name.into(),
        dimension: d,
        value: Arc::new(value),
        gradient: Some(Arc::new(move |x| {
            let mut g = vec![0.0; d];
            for &k in &ax_g {
                let mut term = TAU * (TAU * x[k]).cos();
                for &l in &ax_g {
                    if l != k {
                        term *= (TAU * x[l]).sin();
                    }
                }
                g[k] = term;
            }
            g
        })),
        hessian: Some(Arc::new(move |x| {
            let mut h = vec![0.0; d * d];
            for &k in &ax_h {
                for &l in &ax_h {
                    let mut term = if k == l {
                        -TAU * TAU * (TAU * x[k]).sin()
                    } else {
                        TAU * TAU * (TAU * x[k]).cos() * (TAU * x[l]).cos()
                    };
                    for &m in &ax_h {
                        if m != k && m != l {
                            term *= (TAU * x[m]).sin();
                        }
                    }
                    h[k * d + l] = term;
                }
            }
            h
        })),
        smoothness: Smoothness::AnalyticPeriodic,
        // Extremal pair lies along a single axis with the remaining factors at
        // their peaks; the sampled modulus confirms this (see tests).
        modulus_formula: Some(Arc::new(|delta| {
            if delta >= 0.5 {
                2.0
            } else {
                2.0 * (std::f64::consts::PI * delta).sin()
            }
        })),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn const1_everywhere() {
        let f = test_function("const1", 3).unwrap();
        assert_eq!(f.eval(&[0.2, 0.9, 0.5]), 1.0);
    }

    #[test]
    fn quad_diagonal_value() {
        let f = test_function("quad(1,1)", 2).unwrap();
        assert_abs_diff_eq!(f.eval(&[0.5, 0.3]), 0.25);
    }

    #[test]
    fn absdev_value() {
        let f = test_function("absdev", 1).unwrap();
        assert_abs_diff_eq!(f.eval(&[0.1]), 0.4, epsilon = 1e-15);
        assert!(f.gradient.is_none() && f.hessian.is_none());
        assert_eq!(f.smoothness, Smoothness::LipschitzKink);
    }

    #[test]
    fn unknown_names_rejected() {
        assert!(test_function("nope", 1).is_err());
        assert!(test_function("coord(0)", 1).is_err());
        assert!(test_function("coord(3)", 2).is_err());
        assert!(test_function("quad(1)", 2).is_err());
    }

    #[test]
    fn single_axis_sine_matches_product_in_1d() {
        let a = test_function("sin2pi", 1).unwrap();
        let b = test_function("sin2pi(1)", 1).unwrap();
        for x in [0.0, 0.13, 0.77] {
            assert_abs_diff_eq!(a.eval(&[x]), b.eval(&[x]), epsilon = 1e-15);
        }
    }

    /// Gradients and Hessians must agree with central finite differences of
    /// the value evaluator within 1e-6 relative at step 1e-4.
    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-4;
        let cases: &[(&str, usize)] = &[
            ("const1", 2),
            ("coord(2)", 2),
            ("quad(1,2)", 2),
            ("quad(1,1)", 1),
            ("sin2pi", 2),
            ("sin2pi(1)", 2),
            ("expsum", 2),
        ];
        let points = [[0.32, 0.58], [0.11, 0.83], [0.71, 0.29]];
        for (name, d) in cases {
            let f = test_function(name, *d).unwrap();
            let grad = f.gradient.as_ref().unwrap();
            let hess = f.hessian.as_ref().unwrap();
            for p in &points {
                let x = &p[..*d];
                let g = grad(x);
                let hm = hess(x);
                for i in 0..*d {
                    let mut xp = x.to_vec();
                    let mut xm = x.to_vec();
                    xp[i] += h;
                    xm[i] -= h;
                    let fd = (f.eval(&xp) - f.eval(&xm)) / (2.0 * h);
                    let scale = g[i].abs().max(1.0);
                    assert!(
                        (g[i] - fd).abs() <= 1e-6 * scale,
                        "{name} grad[{i}] at {x:?}: {} vs {fd}",
                        g[i]
                    );
                    for j in 0..*d {
                        let mut gp = xp.clone();
                        let mut gm = xm.clone();
                        // central difference of the gradient's j-th entry
                        gp[i] = x[i] + h;
                        gm[i] = x[i] - h;
                        let gpj = grad(&gp)[j];
                        let gmj = grad(&gm)[j];
                        let fd2 = (gpj - gmj) / (2.0 * h);
                        let scale = hm[i * d + j].abs().max(1.0);
                        assert!(
                            (hm[i * d + j] - fd2).abs() <= 1e-6 * scale,
                            "{name} hess[{i}][{j}] at {x:?}"
                        );
                    }
                }
            }
        }
    }
}
