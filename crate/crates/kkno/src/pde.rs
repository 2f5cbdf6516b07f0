//! Explicit finite-difference reference solver for the drift-diffusion
//! equation `dF/dt = -a(x).grad F + 1/2 sum_ij B_ij(x) d_ij F` on the
//! periodic box, and the deep-composition comparison built on it.
//!
//! Forward Euler in time; centered 3-point second differences per axis,
//! centered cross differences for off-diagonal diffusion, centered 2-point
//! first differences for drift. The final step is shortened to land exactly
//! on the requested time.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{sample_to_grid, sup_norm_diff, GridFunction};
use crate::kernels::{sym_min_eigenvalue, DriftClass, KernelSpec, QuadConfig};
use crate::operator::{compose, restrict, schedule, working_resolution, OperatorConfig};

pub type VectorField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
/// Symmetric PSD matrix field, row-major `d*d`.
pub type MatrixField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Constant diffusion matrix field.
pub fn constant_diffusion(matrix: Vec<f64>) -> MatrixField {
    Arc::new(move |_| matrix.clone())
}

/// Drift-diffusion initial value problem on the periodic unit-style box.
#[derive(Clone)]
pub struct DriftDiffusionProblem {
    pub drift: Option<VectorField>,
    pub diffusion: Option<MatrixField>,
    pub initial: GridFunction,
    pub final_time: f64,
}

/// Time-stepping controls.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Fraction of the stability limit used for the automatic step.
    pub safety: f64,
    /// Explicit time step; validated against the stability limit.
    pub dt: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            safety: 0.5,
            dt: None,
        }
    }
}

/// Stability-limited time step.
///
/// `dt = safety * min(h^2 / (2 sum_i max B_ii), h / (sum_i max |a_i| + eps))`
/// with `eps = 1e-30`; if both coefficient bounds vanish nothing evolves and
/// a single step of size `final_time` suffices.
pub fn cfl_dt(
    drift_bound: &[f64],
    diffusion_diag_bound: &[f64],
    h: f64,
    safety: f64,
    final_time: f64,
) -> f64 {
    let sum_a: f64 = drift_bound.iter().map(|v| v.abs()).sum();
    let sum_b: f64 = diffusion_diag_bound.iter().map(|v| v.abs()).sum();
    if sum_a == 0.0 && sum_b == 0.0 {
        return final_time;
    }
    let diff_limit = if sum_b > 0.0 {
        h * h / (2.0 * sum_b)
    } else {
        f64::INFINITY
    };
    let adv_limit = h / (sum_a + 1e-30);
    safety * diff_limit.min(adv_limit)
}

struct NodeCoefficients {
    drift: Option<Vec<f64>>,
    diffusion: Option<Vec<f64>>,
}

fn evaluate_coefficients(problem: &DriftDiffusionProblem) -> Result<NodeCoefficients> {
    let g = &problem.initial;
    let d = g.domain().dimension();
    let total = g.len();
    let drift = match &problem.drift {
        Some(field) => {
            let mut all = Vec::with_capacity(total * d);
            for flat in 0..total {
                let a = field(&g.node_coords(flat));
                if a.len() != d {
                    return Err(Error::ShapeMismatch("drift field dimension".into()));
                }
                all.extend_from_slice(&a);
            }
            Some(all)
        }
        None => None,
    };
    let diffusion = match &problem.diffusion {
        Some(field) => {
            let mut all = Vec::with_capacity(total * d * d);
            for flat in 0..total {
                let b = field(&g.node_coords(flat));
                if b.len() != d * d {
                    return Err(Error::ShapeMismatch("diffusion field dimension".into()));
                }
                for i in 0..d {
                    for j in (i + 1)..d {
                        if (b[i * d + j] - b[j * d + i]).abs() > 1e-12 {
                            return Err(Error::InvalidArgument(format!(
                                "diffusion matrix not symmetric at node {flat}"
                            )));
                        }
                    }
                }
                if sym_min_eigenvalue(&b, d) < -1e-10 {
                    return Err(Error::InvalidArgument(format!(
                        "diffusion matrix not positive semidefinite at node {flat}"
                    )));
                }
                all.extend_from_slice(&b);
            }
            Some(all)
        }
        None => None,
    };
    Ok(NodeCoefficients { drift, diffusion })
}

/// Run the explicit scheme to `final_time`.
pub fn solve(problem: &DriftDiffusionProblem, cfg: &SolverConfig) -> Result<GridFunction> {
    let g = &problem.initial;
    let d = g.domain().dimension();
    let r = g.resolution()[0];
    if g.resolution().iter().any(|&ri| ri != r) {
        return Err(Error::InvalidArgument(
            "solver requires uniform resolution".into(),
        ));
    }
    let span = {
        let (lo, hi) = g.domain().intervals()[0];
        hi - lo
    };
    for (lo, hi) in g.domain().intervals() {
        if (hi - lo - span).abs() > 1e-12 {
            return Err(Error::InvalidArgument(
                "solver requires equal axis lengths".into(),
            ));
        }
    }
    let t_final = problem.final_time;
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(Error::InvalidArgument(
            "final time must be nonnegative".into(),
        ));
    }
    if t_final == 0.0 {
        return Ok(g.clone());
    }
    let h = span / r as f64;
    let coeffs = evaluate_coefficients(problem)?;
    let total = g.len();

    // Per-axis coefficient bounds feed the step-size limit.
    let mut a_max = vec![0.0f64; d];
    if let Some(a) = &coeffs.drift {
        for flat in 0..total {
            for k in 0..d {
                a_max[k] = a_max[k].max(a[flat * d + k].abs());
            }
        }
    }
    let mut b_max = vec![0.0f64; d];
    if let Some(b) = &coeffs.diffusion {
        for flat in 0..total {
            for k in 0..d {
                b_max[k] = b_max[k].max(b[flat * d * d + k * d + k].abs());
            }
        }
    }
    let auto = cfl_dt(&a_max, &b_max, h, cfg.safety, t_final);
    let limit = cfl_dt(&a_max, &b_max, h, 1.0, t_final);
    let dt = cfg.dt.unwrap_or(auto);
    if dt > limit * (1.0 + 1e-12) || dt <= 0.0 {
        return Err(Error::CflViolation { dt, limit });
    }

    let mut strides = vec![1usize; d];
    for a in (0..d.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * r;
    }

    let full_steps = (t_final / dt).floor() as usize;
    let remainder = t_final - full_steps as f64 * dt;
    let steps: Vec<f64> = (0..full_steps)
        .map(|_| dt)
        .chain((remainder > 1e-14 * t_final).then_some(remainder))
        .collect();

    let mut cur = g.values().to_vec();
    let mut next = vec![0.0f64; total];
    let inv_2h = 1.0 / (2.0 * h);
    let inv_h2 = 1.0 / (h * h);
    for &step in &steps {
        next.par_iter_mut().enumerate().for_each(|(flat, out)| {
            // Unravel the node index once per node.
            let mut idx = [0usize; 8];
            let mut rest = flat;
            for a in (0..d).rev() {
                idx[a] = rest % r;
                rest /= r;
            }
            let shifted = |axis: usize, delta: isize| -> usize {
                let i = (idx[axis] as isize + delta).rem_euclid(r as isize) as usize;
                flat - idx[axis] * strides[axis] + i * strides[axis]
            };
            let f0 = cur[flat];
            let mut rhs = 0.0;
            for k in 0..d {
                let fp = cur[shifted(k, 1)];
                let fm = cur[shifted(k, -1)];
                if let Some(a) = &coeffs.drift {
                    rhs -= a[flat * d + k] * (fp - fm) * inv_2h;
                }
                if let Some(b) = &coeffs.diffusion {
                    let bkk = b[flat * d * d + k * d + k];
                    rhs += 0.5 * bkk * (fp - 2.0 * f0 + fm) * inv_h2;
                    for l in (k + 1)..d {
                        let bkl = b[flat * d * d + k * d + l];
                        if bkl != 0.0 {
                            let base = shifted(k, 1);
                            let pp = base - idx[l] * strides[l]
                                + ((idx[l] + 1) % r) * strides[l];
                            let pm = base - idx[l] * strides[l]
                                + ((idx[l] + r - 1) % r) * strides[l];
                            let base = shifted(k, -1);
                            let mp = base - idx[l] * strides[l]
                                + ((idx[l] + 1) % r) * strides[l];
                            let mm = base - idx[l] * strides[l]
                                + ((idx[l] + r - 1) % r) * strides[l];
                            rhs += bkl
                                * (cur[pp] + cur[mm] - cur[pm] - cur[mp])
                                * 0.25
                                * inv_h2;
                        }
                    }
                }
            }
            *out = f0 + step * rhs;
        });
        std::mem::swap(&mut cur, &mut next);
    }
    GridFunction::from_values(g.domain().clone(), g.resolution().to_vec(), cur)
}

/// Deep composition against the PDE reference at matched depth-time.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub kernel_id: String,
    pub n: u32,
    pub gamma: u8,
    pub t: f64,
    pub depth: usize,
    /// Composition working resolution (a multiple of the report grid).
    pub working_resolution: usize,
    pub gap: f64,
    /// First-mode amplitudes, one-dimensional runs only.
    pub amp_compose: Option<f64>,
    pub amp_pde: Option<f64>,
}

/// Run `m = floor(n^gamma t)` layers and the matching PDE, and report the sup
/// gap on the grid of `f0`.
///
/// Admissible pairings of drift class and `gamma`:
/// order-one drift with `gamma = 1` (transport limit), zero drift with
/// `gamma = 2` (heat limit), `1/n` drift with `gamma = 2` (full
/// drift-diffusion limit). Coefficients come from the kernel's limiting
/// moments: `a(x)` on its limiting scale and `B` the central second moment.
pub fn compare(
    kernel: &KernelSpec,
    n: u32,
    t: f64,
    gamma: u8,
    f0: &GridFunction,
    quad: QuadConfig,
) -> Result<ComparisonReport> {
    let class = kernel.drift_class();
    let (use_drift, use_diffusion) = match (class, gamma) {
        (DriftClass::OrderOne, 1) => (true, false),
        (DriftClass::Zero, 2) => (false, true),
        (DriftClass::OrderInvN, 2) => (true, true),
        (c, g) => {
            return Err(Error::IncompatibleSchedule(format!(
                "drift class {c} with gamma={g} has no nontrivial limit; \
                 valid pairs: (O(1), 1) transport, (zero, 2) heat, (O(1/n), 2) drift-diffusion"
            )))
        }
    };
    let sched = schedule(n, t, gamma)?;
    let r = f0.resolution()[0];
    if f0.resolution().iter().any(|&ri| ri != r) {
        return Err(Error::InvalidArgument(
            "comparison requires uniform resolution".into(),
        ));
    }

    let rw = working_resolution(r, n, sched.depth);
    let cfg = OperatorConfig::new(kernel.clone(), n, quad)?;
    let composed = if rw == r {
        compose(&cfg, f0, sched.depth)?
    } else {
        let fine = sample_to_grid(|x| crate::grid::eval_interp(f0, x), f0.domain(), rw)?;
        restrict(&compose(&cfg, &fine, sched.depth)?, r)?
    };

    let d = kernel.dimension();
    let kernel_for_drift = kernel.clone();
    let problem = DriftDiffusionProblem {
        drift: use_drift.then(|| -> VectorField {
            Arc::new(move |x: &[f64]| kernel_for_drift.limit_drift(x))
        }),
        diffusion: use_diffusion.then(|| constant_diffusion(kernel.central_second_moment())),
        initial: f0.clone(),
        final_time: t,
    };
    let pde = solve(&problem, &SolverConfig::default())?;

    let gap = sup_norm_diff(&composed, &pde)?;
    let (amp_compose, amp_pde) = if d == 1 {
        (
            Some(composed.first_mode_amplitude()?),
            Some(pde.first_mode_amplitude()?),
        )
    } else {
        (None, None)
    };
    Ok(ComparisonReport {
        kernel_id: kernel.id(),
        n,
        gamma,
        t,
        depth: sched.depth,
        working_resolution: rw,
        gap,
        amp_compose,
        amp_pde,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Domain;
    use crate::kernels::constant_drift;
    use approx::assert_abs_diff_eq;

    const TAU: f64 = std::f64::consts::TAU;
    const PI: f64 = std::f64::consts::PI;

    fn sine_grid(r: usize) -> GridFunction {
        let dom = Domain::unit_box(1).unwrap();
        sample_to_grid(|x| (TAU * x[0]).sin(), &dom, r).unwrap()
    }

    #[test]
    fn cfl_examples() {
        let h = 1.0 / 64.0;
        let dt = cfl_dt(&[0.0], &[1.0 / 24.0], h, 0.5, 1.0);
        assert_abs_diff_eq!(dt, 6.0 * h * h, epsilon = 1e-15);
        assert_abs_diff_eq!(dt, 0.0014648, epsilon = 1e-7);
        assert_abs_diff_eq!(cfl_dt(&[0.0], &[0.0], h, 0.5, 2.5), 2.5);
        let h = 1.0 / 32.0;
        assert_abs_diff_eq!(cfl_dt(&[1.0, 0.0], &[0.0, 0.0], h, 0.5, 1.0), 0.015625);
    }

    #[test]
    fn no_coefficients_means_identity() {
        let g = sine_grid(16);
        let p = DriftDiffusionProblem {
            drift: None,
            diffusion: None,
            initial: g.clone(),
            final_time: 1.0,
        };
        let out = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(out.values(), g.values());
    }

    /// Fourier-mode decay oracle: with B = 2 kappa = 1/12 the first mode
    /// shrinks by e^{-4 pi^2 kappa t}.
    #[test]
    fn heat_mode_decay() {
        let g = sine_grid(128);
        let p = DriftDiffusionProblem {
            drift: None,
            diffusion: Some(constant_diffusion(vec![1.0 / 12.0])),
            initial: g,
            final_time: 0.5,
        };
        let out = solve(&p, &SolverConfig::default()).unwrap();
        let amp = out.first_mode_amplitude().unwrap();
        let exact = (-4.0 * PI * PI * (1.0 / 24.0) * 0.5).exp();
        assert!((amp - exact).abs() <= 1e-3, "{amp} vs {exact}");
        assert_abs_diff_eq!(exact, 0.4391, epsilon = 5e-4);
    }

    /// Method-of-characteristics oracle; centered transport is dispersive so
    /// the tolerance is loose.
    #[test]
    fn transport_shifts_the_wave() {
        let g = sine_grid(256);
        let p = DriftDiffusionProblem {
            drift: Some(Arc::new(|_: &[f64]| vec![1.0])),
            diffusion: None,
            initial: g.clone(),
            final_time: 0.25,
        };
        let out = solve(&p, &SolverConfig::default()).unwrap();
        let dom = Domain::unit_box(1).unwrap();
        let exact = sample_to_grid(|x| (TAU * (x[0] - 0.25)).sin(), &dom, 256).unwrap();
        assert!(sup_norm_diff(&out, &exact).unwrap() <= 0.05);
    }

    #[test]
    fn pure_diffusion_respects_bounds_and_mass() {
        let dom = Domain::unit_box(1).unwrap();
        let g = sample_to_grid(
            |x| 0.5 + 0.4 * (TAU * x[0]).sin() + 0.1 * (2.0 * TAU * x[0]).cos(),
            &dom,
            64,
        )
        .unwrap();
        let lo = g.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = g.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let p = DriftDiffusionProblem {
            drift: None,
            diffusion: Some(constant_diffusion(vec![1.0 / 12.0])),
            initial: g.clone(),
            final_time: 0.2,
        };
        let out = solve(&p, &SolverConfig::default()).unwrap();
        assert!(out
            .values()
            .iter()
            .all(|&v| v >= lo - 1e-10 && v <= hi + 1e-10));
        assert!((out.mean() - g.mean()).abs() <= 1e-10);
    }

    #[test]
    fn mass_is_conserved_with_drift_and_cross_terms() {
        let dom = Domain::unit_box(2).unwrap();
        let g = sample_to_grid(
            |x| (TAU * x[0]).sin() * (TAU * x[1]).cos() + 0.3,
            &dom,
            24,
        )
        .unwrap();
        let p = DriftDiffusionProblem {
            drift: Some(Arc::new(|x: &[f64]| vec![0.2 + 0.0 * x[0], -0.1])),
            diffusion: Some(constant_diffusion(vec![0.08, 0.02, 0.02, 0.05])),
            initial: g.clone(),
            final_time: 0.1,
        };
        let out = solve(&p, &SolverConfig::default()).unwrap();
        assert!((out.mean() - g.mean()).abs() <= 1e-10);
    }

    /// Forward Euler order check: halving dt halves the dt-induced change.
    #[test]
    fn euler_first_order_in_dt() {
        let g = sine_grid(32);
        let solve_dt = |dt: f64| {
            let p = DriftDiffusionProblem {
                drift: None,
                diffusion: Some(constant_diffusion(vec![1.0 / 12.0])),
                initial: g.clone(),
                final_time: 0.1,
            };
            solve(
                &p,
                &SolverConfig {
                    safety: 0.5,
                    dt: Some(dt),
                },
            )
            .unwrap()
        };
        let base = 0.1 / 64.0;
        let s1 = solve_dt(base);
        let s2 = solve_dt(base / 2.0);
        let s3 = solve_dt(base / 4.0);
        let d12 = sup_norm_diff(&s1, &s2).unwrap();
        let d23 = sup_norm_diff(&s2, &s3).unwrap();
        let ratio = d12 / d23;
        assert!((1.7..=2.3).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn explicit_dt_above_limit_is_rejected() {
        let g = sine_grid(32);
        let p = DriftDiffusionProblem {
            drift: None,
            diffusion: Some(constant_diffusion(vec![1.0 / 12.0])),
            initial: g,
            final_time: 0.1,
        };
        let limit = cfl_dt(&[0.0], &[1.0 / 12.0], 1.0 / 32.0, 1.0, 0.1);
        let err = solve(
            &p,
            &SolverConfig {
                safety: 0.5,
                dt: Some(limit * 1.5),
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::CflViolation { .. }));
    }

    #[test]
    fn compare_at_time_zero_is_exact() {
        let k = KernelSpec::cell_uniform(1).unwrap();
        let rep = compare(&k, 8, 0.0, 2, &sine_grid(32), QuadConfig::default()).unwrap();
        assert!(rep.gap <= 1e-12);
        assert_eq!(rep.depth, 0);
    }

    #[test]
    fn compare_cell_heat_limit() {
        let k = KernelSpec::cell_uniform(1).unwrap();
        let rep = compare(&k, 16, 0.25, 2, &sine_grid(64), QuadConfig::default()).unwrap();
        assert_eq!(rep.depth, 64);
        let target = (-PI * PI * 0.25 / 6.0).exp();
        let ac = rep.amp_compose.unwrap();
        let ap = rep.amp_pde.unwrap();
        assert!((ac / target - 1.0).abs() <= 0.02, "compose amp {ac}");
        assert!((ap / target - 1.0).abs() <= 0.02, "pde amp {ap}");
        assert!(rep.gap <= 0.02, "gap {}", rep.gap);
    }

    /// Doubling the scale shrinks the composition-vs-solution gap for both
    /// diffusive-limit kernels.
    #[test]
    fn compare_gap_shrinks_with_scale() {
        let f0 = sine_grid(64);
        let cell = KernelSpec::cell_uniform(1).unwrap();
        let drifted =
            KernelSpec::drifted(cell.clone(), constant_drift(vec![0.5]), 1).unwrap();
        for k in [cell, drifted] {
            let g16 = compare(&k, 16, 0.5, 2, &f0, QuadConfig::default()).unwrap();
            let g32 = compare(&k, 32, 0.5, 2, &f0, QuadConfig::default()).unwrap();
            assert!(
                g32.gap < g16.gap,
                "{}: gap {} -> {}",
                k.id(),
                g16.gap,
                g32.gap
            );
        }
    }

    #[test]
    fn compare_rejects_incompatible_pairings() {
        let k = KernelSpec::cell_uniform(1).unwrap();
        assert!(matches!(
            compare(&k, 8, 0.5, 1, &sine_grid(32), QuadConfig::default()),
            Err(Error::IncompatibleSchedule(_))
        ));
        let drifted =
            KernelSpec::drifted(k, constant_drift(vec![0.5]), 0).unwrap();
        assert!(compare(&drifted, 8, 0.5, 2, &sine_grid(32), QuadConfig::default()).is_err());
    }
}
