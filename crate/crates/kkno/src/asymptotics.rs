//! Quantitative verification: moduli of continuity, error tables, explicit
//! bound checks, normalized-residual limits, test-monomial suites, and
//! empirical rate fits.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Domain;
use crate::kernels::{DriftClass, KernelSpec, QuadConfig};
use crate::operator::{OperatorConfig, PointApplicator};
use crate::testfn::{test_function, TestFunction};

/// Sup error of one layer against the closed-form function over the vertex
/// grid of resolution `r_eval`.
pub fn sup_error_on_grid(
    kernel: &KernelSpec,
    n: u32,
    quad: QuadConfig,
    f: &TestFunction,
    domain: &Domain,
    r_eval: usize,
) -> Result<f64> {
    let d = domain.dimension();
    if f.dimension != d || kernel.dimension() != d {
        return Err(Error::ShapeMismatch(
            "kernel, function, and domain dimensions must agree".into(),
        ));
    }
    let cfg = OperatorConfig::new(kernel.clone(), n, quad)?;
    let app = PointApplicator::new(&cfg)?;
    let total = r_eval.pow(d as u32);
    let value = &f.value;
    let errs: Result<Vec<f64>> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let x = lattice_point(domain, r_eval, flat);
            let lv = app.apply(|p: &[f64]| value(p), &x)?;
            Ok((lv - value(&x)).abs())
        })
        .collect();
    Ok(errs?.into_iter().fold(0.0f64, f64::max))
}

fn lattice_point(domain: &Domain, r: usize, mut flat: usize) -> Vec<f64> {
    let d = domain.dimension();
    let mut x = vec![0.0; d];
    for a in (0..d).rev() {
        let i = flat % r;
        flat /= r;
        let (lo, hi) = domain.intervals()[a];
        x[a] = lo + i as f64 * (hi - lo) / r as f64;
    }
    x
}

/// Modulus of continuity estimated over all ordered lattice pairs within
/// distance `delta`, on the closed box with `pair_density + 1` points per
/// axis.
///
/// When the function carries an exact modulus formula the formula value is
/// returned and the sampled value serves as a cross-check: the sample may
/// never exceed the formula, and once the lattice resolves `delta`
/// (`delta * pair_density >= 64`) it must also come within 2% from below.
pub fn modulus(
    f: &TestFunction,
    delta: f64,
    domain: &Domain,
    pair_density: usize,
) -> Result<f64> {
    if delta <= 0.0 {
        return Err(Error::InvalidArgument("delta must be positive".into()));
    }
    if pair_density < 64 {
        return Err(Error::InvalidArgument(
            "pair grid density must be at least 64".into(),
        ));
    }
    let sampled = sampled_modulus(f, delta, domain, pair_density)?;
    if let Some(formula) = &f.modulus_formula {
        let exact = formula(delta);
        if sampled > exact * 1.02 + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "modulus formula for `{}` underestimates: sampled {sampled} vs formula {exact}",
                f.name
            )));
        }
        if delta * pair_density as f64 >= 64.0 && sampled < exact * 0.98 - 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "modulus formula for `{}` overestimates: sampled {sampled} vs formula {exact}",
                f.name
            )));
        }
        return Ok(exact);
    }
    Ok(sampled)
}

fn sampled_modulus(
    f: &TestFunction,
    delta: f64,
    domain: &Domain,
    m: usize,
) -> Result<f64> {
    let d = domain.dimension();
    let pts_per_axis = m + 1;
    let total = pts_per_axis.pow(d as u32);
    // Evaluate once on the closed lattice (both endpoints included).
    let mut vals = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0f64; d];
    let spans: Vec<f64> = domain
        .intervals()
        .iter()
        .map(|(lo, hi)| (hi - lo) / m as f64)
        .collect();
    for _ in 0..total {
        for a in 0..d {
            x[a] = domain.intervals()[a].0 + idx[a] as f64 * spans[a];
        }
        let v = f.eval(&x);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                node: format!("{x:?}"),
                value: v,
            });
        }
        vals.push(v);
        for a in (0..d).rev() {
            idx[a] += 1;
            if idx[a] < pts_per_axis {
                break;
            }
            idx[a] = 0;
        }
    }
    // Enumerate lattice offsets with |offset| <= delta, lexicographically
    // positive half only (|f(x)-f(y)| is symmetric in the pair).
    let radius: Vec<isize> = spans
        .iter()
        .map(|s| ((delta / s).floor() as isize).min(m as isize))
        .collect();
    let mut offsets: Vec<Vec<isize>> = Vec::new();
    let mut off = vec![0isize; d];
    fn gen(
        a: usize,
        d: usize,
        radius: &[isize],
        spans: &[f64],
        delta: f64,
        off: &mut Vec<isize>,
        out: &mut Vec<Vec<isize>>,
    ) {
        if a == d {
            if off.iter().all(|&o| o == 0) {
                return;
            }
            let first_nonzero = off.iter().find(|&&o| o != 0).copied().unwrap();
            if first_nonzero < 0 {
                return;
            }
            let dist2: f64 = off
                .iter()
                .zip(spans)
                .map(|(&o, s)| (o as f64 * s).powi(2))
                .sum();
            if dist2.sqrt() <= delta * (1.0 + 1e-12) {
                out.push(off.clone());
            }
            return;
        }
        for o in -radius[a]..=radius[a] {
            off[a] = o;
            gen(a + 1, d, radius, spans, delta, off, out);
        }
    }
    gen(0, d, &radius, &spans, delta, &mut off, &mut offsets);

    let stride: Vec<usize> = {
        let mut s = vec![1usize; d];
        for a in (0..d.saturating_sub(1)).rev() {
            s[a] = s[a + 1] * pts_per_axis;
        }
        s
    };
    let mut best = 0.0f64;
    for offset in &offsets {
        // x ranges so that both x and x+offset stay on the lattice
        let lo: Vec<usize> = offset.iter().map(|&o| (-o).max(0) as usize).collect();
        let hi: Vec<usize> = offset
            .iter()
            .map(|&o| pts_per_axis - 1 - o.max(0) as usize)
            .collect();
        let shift: isize = offset
            .iter()
            .zip(&stride)
            .map(|(&o, &s)| o * s as isize)
            .sum();
        let mut cur: Vec<usize> = lo.clone();
        'scan: loop {
            let flat: usize = cur.iter().zip(&stride).map(|(&i, &s)| i * s).sum();
            let other = (flat as isize + shift) as usize;
            let diff = (vals[flat] - vals[other]).abs();
            if diff > best {
                best = diff;
            }
            let mut a = d;
            loop {
                if a == 0 {
                    break 'scan;
                }
                a -= 1;
                cur[a] += 1;
                if cur[a] <= hi[a] {
                    break;
                }
                cur[a] = lo[a];
            }
        }
    }
    Ok(best)
}

/// `(n, sup_error)` rows for one kernel and one function.
#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub kernel_id: String,
    pub function_name: String,
    pub rows: Vec<(u32, f64)>,
}

/// Sup errors of a single layer against the closed-form function, per scale.
pub fn convergence_table(
    kernel: &KernelSpec,
    f: &TestFunction,
    n_list: &[u32],
    domain: &Domain,
    r_eval: usize,
    quad: QuadConfig,
) -> Result<ConvergenceTable> {
    if n_list.len() < 3 {
        return Err(Error::InvalidArgument(
            "need at least 3 scales for a convergence table".into(),
        ));
    }
    if !n_list.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(
            "scales must be strictly increasing".into(),
        ));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        rows.push((n, sup_error_on_grid(kernel, n, quad, f, domain, r_eval)?));
    }
    Ok(ConvergenceTable {
        kernel_id: kernel.id(),
        function_name: f.name.clone(),
        rows,
    })
}

/// Closed-form bound constant: `1 + d/4` for the cell kernel,
/// `1 + sum |A^{-1}_{ij}|` for the Gaussian.
pub fn default_constant(kernel: &KernelSpec) -> Result<f64> {
    if kernel.is_drifted() {
        return Err(Error::NoDefaultConstant);
    }
    let d = kernel.dimension();
    if let Some(cov) = kernel.gaussian_covariance() {
        Ok(1.0 + cov.iter().map(|v| v.abs()).sum::<f64>())
    } else {
        Ok(1.0 + d as f64 / 4.0)
    }
}

#[derive(Debug, Clone)]
pub struct BoundRow {
    pub n: u32,
    pub error: f64,
    pub bound: f64,
    pub margin: f64,
}

/// Per-row comparison of measured errors against `C * omega(f, 1/n)`.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub constant: f64,
    pub rows: Vec<BoundRow>,
    pub pass: bool,
}

pub fn bound_check(
    table: &ConvergenceTable,
    f: &TestFunction,
    constant: f64,
    domain: &Domain,
    pair_density: usize,
) -> Result<BoundReport> {
    if constant < 0.0 || !constant.is_finite() {
        return Err(Error::InvalidArgument(
            "bound constant must be finite and nonnegative".into(),
        ));
    }
    let mut rows = Vec::with_capacity(table.rows.len());
    let mut pass = true;
    for &(n, error) in &table.rows {
        let omega = modulus(f, 1.0 / n as f64, domain, pair_density)?;
        let bound = constant * omega;
        let margin = bound - error;
        if margin < -1e-12 {
            pass = false;
        }
        rows.push(BoundRow {
            n,
            error,
            bound,
            margin,
        });
    }
    Ok(BoundReport {
        constant,
        rows,
        pass,
    })
}

/// Residuals of the normalized error `n^p (L_n f - f)` against its limit.
#[derive(Debug, Clone)]
pub struct VoronovskayaReport {
    pub kernel_id: String,
    pub function_name: String,
    /// Normalization exponent: 1 pairs with order-one drift (limit
    /// `-a . grad f`), 2 with vanishing drift (limit `1/2 B : D^2 f`).
    pub normalization: u8,
    pub rows: Vec<(u32, f64)>,
    /// Sup of the limit expression over the evaluation grid.
    pub limit_sup: f64,
}

pub fn voronovskaya(
    kernel: &KernelSpec,
    f: &TestFunction,
    n_list: &[u32],
    normalization: u8,
    domain: &Domain,
    r_eval: usize,
    quad: QuadConfig,
) -> Result<VoronovskayaReport> {
    let d = domain.dimension();
    match (normalization, kernel.drift_class()) {
        (1, DriftClass::OrderOne) => {}
        (2, DriftClass::Zero) => {}
        (p, c) => {
            return Err(Error::IncompatibleNormalization(format!(
                "normalization p={p} does not match drift class {c}; \
                 use p=1 with O(1) drift or p=2 with zero drift"
            )))
        }
    }
    let limit: crate::testfn::Evaluator = if normalization == 1 {
        let gradient = f
            .gradient
            .as_ref()
            .ok_or_else(|| {
                Error::InvalidArgument(format!("`{}` has no gradient evaluator", f.name))
            })?
            .clone();
        let kernel_ref = kernel.clone();
        std::sync::Arc::new(move |x: &[f64]| {
            let a = kernel_ref.limit_drift(x);
            let g = gradient(x);
            -a.iter().zip(&g).map(|(ai, gi)| ai * gi).sum::<f64>()
        })
    } else {
        let hessian = f
            .hessian
            .as_ref()
            .ok_or_else(|| Error::MissingHessian(f.name.clone()))?
            .clone();
        let diffusion = kernel.central_second_moment();
        std::sync::Arc::new(move |x: &[f64]| {
            let h = hessian(x);
            0.5 * diffusion
                .iter()
                .zip(&h)
                .map(|(b, hij)| b * hij)
                .sum::<f64>()
        })
    };

    let total = r_eval.pow(d as u32);
    let limit_sup = (0..total)
        .map(|flat| limit(&lattice_point(domain, r_eval, flat)).abs())
        .fold(0.0f64, f64::max);

    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let cfg = OperatorConfig::new(kernel.clone(), n, quad)?;
        let app = PointApplicator::new(&cfg)?;
        let np = (n as f64).powi(normalization as i32);
        let value = &f.value;
        let residuals: Result<Vec<f64>> = (0..total)
            .into_par_iter()
            .map(|flat| {
                let x = lattice_point(domain, r_eval, flat);
                let lv = app.apply(|p: &[f64]| value(p), &x)?;
                Ok((np * (lv - value(&x)) - limit(&x)).abs())
            })
            .collect();
        rows.push((n, residuals?.into_iter().fold(0.0f64, f64::max)));
    }
    Ok(VoronovskayaReport {
        kernel_id: kernel.id(),
        function_name: f.name.clone(),
        normalization,
        rows,
        limit_sup,
    })
}

#[derive(Debug, Clone)]
pub struct KorovkinRow {
    pub monomial: String,
    pub n: u32,
    pub sup_error: f64,
}

/// Sup errors on the test monomials `1`, `x_i`, `x_i x_j`.
#[derive(Debug, Clone)]
pub struct KorovkinReport {
    pub kernel_id: String,
    pub rows: Vec<KorovkinRow>,
}

pub fn korovkin(
    kernel: &KernelSpec,
    n_list: &[u32],
    domain: &Domain,
    r_eval: usize,
    quad: QuadConfig,
) -> Result<KorovkinReport> {
    let d = domain.dimension();
    if d > 3 {
        return Err(Error::InvalidArgument(
            "monomial suite is limited to dimension <= 3".into(),
        ));
    }
    let mut monomials: Vec<(String, TestFunction)> =
        vec![("e0".into(), test_function("const1", d)?)];
    for i in 1..=d {
        monomials.push((format!("e{i}"), test_function(&format!("coord({i})"), d)?));
    }
    for i in 1..=d {
        for j in i..=d {
            monomials.push((
                format!("e{i}{j}"),
                test_function(&format!("quad({i},{j})"), d)?,
            ));
        }
    }
    let mut rows = Vec::new();
    for (label, f) in &monomials {
        for &n in n_list {
            let err = sup_error_on_grid(kernel, n, quad, f, domain, r_eval)?;
            rows.push(KorovkinRow {
                monomial: label.clone(),
                n,
                sup_error: err,
            });
        }
    }
    Ok(KorovkinReport {
        kernel_id: kernel.id(),
        rows,
    })
}

/// Least-squares fit of `log(error)` against `log(n)`.
#[derive(Debug, Clone, Copy)]
pub struct RateFit {
    /// Decay exponent: error ~ n^{-alpha}.
    pub alpha: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_rate(table: &ConvergenceTable) -> Result<RateFit> {
    if table.rows.len() < 3 {
        return Err(Error::InvalidArgument(
            "need at least 3 rows to fit a rate".into(),
        ));
    }
    if let Some(&(n, e)) = table.rows.iter().find(|(_, e)| *e <= 1e-14) {
        return Err(Error::InvalidArgument(format!(
            "error {e} at n={n} is too small for a log fit; \
             the function is reproduced exactly"
        )));
    }
    let xs: Vec<f64> = table.rows.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = table.rows.iter().map(|(_, e)| e.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let p = intercept + slope * x;
            (y - p) * (y - p)
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(RateFit {
        alpha: -slope,
        intercept,
        r_squared,
    })
}
