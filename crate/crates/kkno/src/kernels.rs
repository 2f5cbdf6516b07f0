//! Kernel families, their moments, and admissibility checks.
//!
//! Three built-in families are supported:
//!
//! * `CellUniform` — uniform density on the centered unit cube `[-1/2,1/2]^d`
//!   (mass 1, zero drift, second moment `I/12`);
//! * `Gaussian` — density `sqrt(det A)/(2 pi)^{d/2} * exp(-u^T A u / 2)` for a
//!   symmetric positive-definite precision matrix `A` (second moment `A^{-1}`);
//! * `Drifted` — any non-drifted base whose density is shifted by `c(x)/n^s`,
//!   `s` in `{0, 1}`.
//!
//! Base kernels carry order-one moments; all `n`-scaling enters through the
//! operator's `u/n` substitution. Gaussian integrals are evaluated by a
//! Hermite rule in whitened coordinates (exact change of variables, no
//! truncation radius), cell integrals by a Legendre rule on the cube.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quadrature::{hermite_rule, legendre_rule, pairwise_sum};

/// Bounded continuous drift field `x -> R^d`. Must be pure: same input, same
/// output, safe for concurrent calls.
pub type DriftField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Constant drift field.
pub fn constant_drift(v: Vec<f64>) -> DriftField {
    Arc::new(move |_| v.clone())
}

/// Quadrature orders used for kernel integrals and operator application.
///
/// The Hermite default is 24: reproducing the Gaussian characteristic factor
/// `e^{-2 pi^2/n^2}` to 1e-6 relative at n = 2 needs order >= 20.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadConfig {
    pub legendre_order: usize,
    pub hermite_order: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            legendre_order: 16,
            hermite_order: 24,
        }
    }
}

/// Decay classification of the first kernel moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftClass {
    /// First moment vanishes.
    Zero,
    /// First moment is order one in `n`.
    OrderOne,
    /// First moment decays like `1/n`.
    OrderInvN,
    /// Measured decay fits none of the above.
    Unclassified,
}

impl std::fmt::Display for DriftClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DriftClass::Zero => write!(f, "zero"),
            DriftClass::OrderOne => write!(f, "O(1)"),
            DriftClass::OrderInvN => write!(f, "O(1/n)"),
            DriftClass::Unclassified => write!(f, "unclassified"),
        }
    }
}

#[derive(Clone)]
enum Variant {
    CellUniform { dim: usize, mass_scale: f64 },
    Gaussian(GaussianKernel),
    Drifted {
        base: Box<KernelSpec>,
        drift: DriftField,
        decay: u8,
    },
}

#[derive(Debug, Clone)]
struct GaussianKernel {
    dim: usize,
    /// Lower Cholesky factor of the precision matrix, row-major.
    chol_lower: Vec<f64>,
    /// Covariance `A^{-1}`, row-major.
    covariance: Vec<f64>,
}

/// A kernel family `K_n(x, u)`.
#[derive(Clone)]
pub struct KernelSpec {
    variant: Variant,
}

impl std::fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "KernelSpec({})", self.id())
    }
}

/// Cholesky factorization of a symmetric matrix, reporting the failing pivot
/// (0-based) when the matrix is not positive definite.
fn cholesky_lower(a: &[f64], d: usize) -> std::result::Result<Vec<f64>, usize> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut sum = a[i * d + j];
            for k in 0..j {
                sum -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(i);
                }
                l[i * d + i] = sum.sqrt();
            } else {
                l[i * d + j] = sum / l[j * d + j];
            }
        }
    }
    Ok(l)
}

/// Inverse from the Cholesky factor: solve `L L^T x = e_j` per column.
fn inverse_from_cholesky(l: &[f64], d: usize) -> Vec<f64> {
    let mut inv = vec![0.0; d * d];
    let mut col = vec![0.0; d];
    for j in 0..d {
        for (i, c) in col.iter_mut().enumerate() {
            *c = if i == j { 1.0 } else { 0.0 };
        }
        // forward: L y = e_j
        for i in 0..d {
            let mut s = col[i];
            for k in 0..i {
                s -= l[i * d + k] * col[k];
            }
            col[i] = s / l[i * d + i];
        }
        // backward: L^T x = y
        for i in (0..d).rev() {
            let mut s = col[i];
            for k in (i + 1)..d {
                s -= l[k * d + i] * col[k];
            }
            col[i] = s / l[i * d + i];
        }
        for i in 0..d {
            inv[i * d + j] = col[i];
        }
    }
    inv
}

/// Smallest eigenvalue of a symmetric matrix given row-major.
pub(crate) fn sym_min_eigenvalue(m: &[f64], d: usize) -> f64 {
    let mat = DMatrix::from_row_slice(d, d, m);
    let eig = mat.symmetric_eigen();
    eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b))
}

impl KernelSpec {
    /// Uniform density on the centered unit cube `[-1/2, 1/2]^d`.
    pub fn cell_uniform(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Ok(Self {
            variant: Variant::CellUniform {
                dim: d,
                mass_scale: 1.0,
            },
        })
    }

    /// Deliberately unnormalized cell kernel, for exercising normalization
    /// failure paths in tests.
    #[doc(hidden)]
    pub fn cell_uniform_scaled(d: usize, mass_scale: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Ok(Self {
            variant: Variant::CellUniform { dim: d, mass_scale },
        })
    }

    /// Centered Gaussian with precision matrix `A` (row-major, d x d).
    /// Rejects non-symmetric input (tolerance 1e-12) and reports the failing
    /// pivot when `A` is not positive definite.
    pub fn gaussian(precision: &[f64], d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if precision.len() != d * d {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {d}x{d} matrix",
                precision.len()
            )));
        }
        let scale = precision
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1.0);
        for i in 0..d {
            for j in (i + 1)..d {
                let dev = (precision[i * d + j] - precision[j * d + i]).abs();
                if dev > 1e-12 * scale {
                    return Err(Error::NotSymmetric { i, j, deviation: dev });
                }
            }
        }
        let chol_lower =
            cholesky_lower(precision, d).map_err(|pivot| Error::NotPositiveDefinite { pivot })?;
        let covariance = inverse_from_cholesky(&chol_lower, d);
        Ok(Self {
            variant: Variant::Gaussian(GaussianKernel {
                dim: d,
                chol_lower,
                covariance,
            }),
        })
    }

    /// Shift a non-drifted base kernel so its mean gains `c(x)/n^s`.
    pub fn drifted(base: KernelSpec, drift: DriftField, decay: u8) -> Result<Self> {
        if matches!(base.variant, Variant::Drifted { .. }) {
            return Err(Error::NestedDrift);
        }
        if decay > 1 {
            return Err(Error::InvalidArgument(
                "decay exponent must be 0 or 1".into(),
            ));
        }
        Ok(Self {
            variant: Variant::Drifted {
                base: Box::new(base),
                drift,
                decay,
            },
        })
    }

    pub fn dimension(&self) -> usize {
        match &self.variant {
            Variant::CellUniform { dim, .. } => *dim,
            Variant::Gaussian(g) => g.dim,
            Variant::Drifted { base, .. } => base.dimension(),
        }
    }

    pub fn is_drifted(&self) -> bool {
        matches!(self.variant, Variant::Drifted { .. })
    }

    /// Structural drift decay class.
    pub fn drift_class(&self) -> DriftClass {
        match &self.variant {
            Variant::CellUniform { .. } | Variant::Gaussian(_) => DriftClass::Zero,
            Variant::Drifted { decay, .. } => {
                if *decay == 0 {
                    DriftClass::OrderOne
                } else {
                    DriftClass::OrderInvN
                }
            }
        }
    }

    /// Short identifier used in reports and CSV headers.
    pub fn id(&self) -> String {
        match &self.variant {
            Variant::CellUniform { dim, mass_scale } if *mass_scale == 1.0 => {
                format!("cell-uniform(d={dim})")
            }
            Variant::CellUniform { dim, mass_scale } => {
                format!("cell-uniform(d={dim},scale={mass_scale})")
            }
            Variant::Gaussian(g) => format!("gaussian(d={})", g.dim),
            Variant::Drifted { base, decay, .. } => {
                format!("drifted({},s={decay})", base.id())
            }
        }
    }

    /// Covariance `A^{-1}` of a Gaussian kernel, row-major.
    pub fn gaussian_covariance(&self) -> Option<&[f64]> {
        match &self.variant {
            Variant::Gaussian(g) => Some(&g.covariance),
            _ => None,
        }
    }

    /// Closed-form first moment `\int u K_n du` at `x` for scale `n`.
    pub fn closed_form_drift(&self, x: &[f64], n: u32) -> Vec<f64> {
        match &self.variant {
            Variant::CellUniform { dim, .. } => vec![0.0; *dim],
            Variant::Gaussian(g) => vec![0.0; g.dim],
            Variant::Drifted { drift, decay, .. } => {
                let mut c = drift(x);
                let s = (n as f64).powi(*decay as i32);
                for v in &mut c {
                    *v /= s;
                }
                c
            }
        }
    }

    /// Closed-form raw second moment `\int u u^T K_n du`, row-major.
    pub fn closed_form_second_moment(&self, x: &[f64], n: u32) -> Vec<f64> {
        match &self.variant {
            Variant::CellUniform { dim, mass_scale } => {
                let d = *dim;
                let mut m = vec![0.0; d * d];
                for i in 0..d {
                    m[i * d + i] = mass_scale / 12.0;
                }
                m
            }
            Variant::Gaussian(g) => g.covariance.clone(),
            Variant::Drifted { base, .. } => {
                let d = base.dimension();
                let mu = self.closed_form_drift(x, n);
                let mut m = base.closed_form_second_moment(x, n);
                for i in 0..d {
                    for j in 0..d {
                        m[i * d + j] += mu[i] * mu[j];
                    }
                }
                m
            }
        }
    }

    /// Central second moment; `n`-independent for every built-in family.
    pub fn central_second_moment(&self) -> Vec<f64> {
        match &self.variant {
            Variant::Drifted { base, .. } => base.central_second_moment(),
            _ => self.closed_form_second_moment(&vec![0.0; self.dimension()], 1),
        }
    }

    /// Limiting drift coefficient `a(x) = lim n^s * m1(x, n)`.
    pub fn limit_drift(&self, x: &[f64]) -> Vec<f64> {
        match &self.variant {
            Variant::Drifted { drift, .. } => drift(x),
            _ => vec![0.0; self.dimension()],
        }
    }

    /// Quadrature nodes and weights representing the base density (drift
    /// shifts are applied by the caller). Weights include all normalization
    /// and sum to the kernel mass.
    pub(crate) fn base_nodes(&self, quad: QuadConfig) -> Result<KernelNodes> {
        match &self.variant {
            Variant::CellUniform { dim, mass_scale } => {
                let d = *dim;
                let rule = legendre_rule(quad.legendre_order)?;
                let q = rule.order;
                let total = q.pow(d as u32);
                let mut weights = Vec::with_capacity(total);
                let mut points = Vec::with_capacity(total * d);
                let mut idx = vec![0usize; d];
                for _ in 0..total {
                    let mut w = *mass_scale;
                    for &i in &idx {
                        w *= rule.weights[i] * 0.5;
                        points.push(rule.nodes[i] * 0.5);
                    }
                    weights.push(w);
                    for a in (0..d).rev() {
                        idx[a] += 1;
                        if idx[a] < q {
                            break;
                        }
                        idx[a] = 0;
                    }
                }
                Ok(KernelNodes { dim: d, weights, points })
            }
            Variant::Gaussian(g) => {
                let d = g.dim;
                let rule = hermite_rule(quad.hermite_order)?;
                let q = rule.order;
                let total = q.pow(d as u32);
                let norm = std::f64::consts::PI.powf(-(d as f64) / 2.0);
                let mut weights = Vec::with_capacity(total);
                let mut points = Vec::with_capacity(total * d);
                let mut idx = vec![0usize; d];
                let mut s = vec![0.0f64; d];
                let mut u = vec![0.0f64; d];
                for _ in 0..total {
                    let mut w = norm;
                    for a in 0..d {
                        w *= rule.weights[idx[a]];
                        s[a] = rule.nodes[idx[a]] * std::f64::consts::SQRT_2;
                    }
                    // Whitening: u = L^{-T} s, so u^T A u = |s|^2.
                    for i in (0..d).rev() {
                        let mut acc = s[i];
                        for (k, uk) in u.iter().enumerate().skip(i + 1) {
                            acc -= g.chol_lower[k * d + i] * uk;
                        }
                        u[i] = acc / g.chol_lower[i * d + i];
                    }
                    points.extend_from_slice(&u);
                    weights.push(w);
                    for a in (0..d).rev() {
                        idx[a] += 1;
                        if idx[a] < q {
                            break;
                        }
                        idx[a] = 0;
                    }
                }
                Ok(KernelNodes { dim: d, weights, points })
            }
            Variant::Drifted { base, .. } => base.base_nodes(quad),
        }
    }

    /// Drift offset `c(x)/n^s` to add to every base node, if any.
    pub(crate) fn drift_offset(&self, x: &[f64], n: u32) -> Option<Vec<f64>> {
        match &self.variant {
            Variant::Drifted { drift, decay, .. } => {
                let mut c = drift(x);
                let s = (n as f64).powi(*decay as i32);
                for v in &mut c {
                    *v /= s;
                }
                Some(c)
            }
            _ => None,
        }
    }
}

/// Flattened kernel quadrature nodes: `points` holds `len(weights)` chunks of
/// `dim` coordinates.
pub(crate) struct KernelNodes {
    pub dim: usize,
    pub weights: Vec<f64>,
    pub points: Vec<f64>,
}

/// Numerically computed kernel moments at a point.
#[derive(Debug, Clone)]
pub struct MomentReport {
    pub point: Vec<f64>,
    pub n: u32,
    pub mass: f64,
    /// `\int u K_n du`.
    pub first: Vec<f64>,
    /// `\int u u^T K_n du`, row-major.
    pub second: Vec<f64>,
    /// `\int |u|^3 K_n du`.
    pub third_abs: f64,
    pub quadrature: QuadConfig,
}

impl MomentReport {
    /// Central second moment `m2 - m1 m1^T`.
    pub fn central_second(&self) -> Vec<f64> {
        let d = self.first.len();
        let mut c = self.second.clone();
        for i in 0..d {
            for j in 0..d {
                c[i * d + j] -= self.first[i] * self.first[j] / self.mass.max(1e-300);
            }
        }
        c
    }
}

/// Compute mass, first, second, and third-absolute moments from one node set.
pub fn moments(spec: &KernelSpec, x: &[f64], n: u32, quad: QuadConfig) -> Result<MomentReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("scale n must be at least 1".into()));
    }
    let d = spec.dimension();
    if x.len() != d {
        return Err(Error::ShapeMismatch(format!(
            "point of dimension {} for kernel of dimension {d}",
            x.len()
        )));
    }
    let nodes = spec.base_nodes(quad)?;
    let shift = spec.drift_offset(x, n);
    let count = nodes.weights.len();

    let mut mass_t = Vec::with_capacity(count);
    let mut first_t = vec![Vec::with_capacity(count); d];
    let mut second_t = vec![Vec::with_capacity(count); d * d];
    let mut third_t = Vec::with_capacity(count);
    let mut u = vec![0.0f64; d];
    for k in 0..count {
        let w = nodes.weights[k];
        let base = &nodes.points[k * d..(k + 1) * d];
        for a in 0..d {
            u[a] = base[a] + shift.as_ref().map_or(0.0, |s| s[a]);
        }
        mass_t.push(w);
        let mut norm2 = 0.0;
        for i in 0..d {
            first_t[i].push(w * u[i]);
            norm2 += u[i] * u[i];
            for j in 0..d {
                second_t[i * d + j].push(w * u[i] * u[j]);
            }
        }
        third_t.push(w * norm2.powf(1.5));
    }
    Ok(MomentReport {
        point: x.to_vec(),
        n,
        mass: pairwise_sum(&mass_t),
        first: first_t.iter().map(|t| pairwise_sum(t)).collect(),
        second: second_t.iter().map(|t| pairwise_sum(t)).collect(),
        third_abs: pairwise_sum(&third_t),
        quadrature: quad,
    })
}

/// Per-condition admissibility results.
#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    pub kernel_id: String,
    pub tolerance: f64,
    pub sample_points: Vec<Vec<f64>>,
    /// Max `|mass - 1|` over sample points.
    pub mass_error: f64,
    pub k1_pass: bool,
    /// Representative drift `n^s * m1` at the reference scale.
    pub drift_vector: Vec<f64>,
    pub drift_class: DriftClass,
    pub k2_pass: bool,
    /// Max absolute entry of the central second moment.
    pub diffusion_bound: f64,
    pub k3_pass: bool,
}

impl AdmissibilityReport {
    pub fn pass(&self) -> bool {
        self.k1_pass && self.k2_pass && self.k3_pass
    }
}

/// Check normalization, drift decay, and diffusion boundedness at the given
/// sample points. Decay is classified by comparing first moments at a
/// reference scale `n` and at `2n`.
pub fn check_admissible(
    spec: &KernelSpec,
    quad: QuadConfig,
    tol: f64,
    sample_points: &[Vec<f64>],
) -> Result<AdmissibilityReport> {
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if sample_points.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one sample point is required".into(),
        ));
    }
    let d = spec.dimension();
    let n_ref = 16u32;

    let mut mass_error = 0.0f64;
    let mut m1_lo = 0.0f64;
    let mut m1_hi = 0.0f64;
    let mut drift_vector = vec![0.0; d];
    let mut diffusion_bound = 0.0f64;
    let mut central_dev = 0.0f64;
    let mut min_eig = f64::INFINITY;

    for x in sample_points {
        let lo = moments(spec, x, n_ref, quad)?;
        let hi = moments(spec, x, 2 * n_ref, quad)?;
        mass_error = mass_error.max((lo.mass - 1.0).abs()).max((hi.mass - 1.0).abs());
        let norm_lo = lo.first.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let norm_hi = hi.first.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm_lo > m1_lo {
            m1_lo = norm_lo;
            drift_vector = lo.first.clone();
        }
        m1_hi = m1_hi.max(norm_hi);
        let c_lo = lo.central_second();
        let c_hi = hi.central_second();
        for (a, b) in c_lo.iter().zip(&c_hi) {
            diffusion_bound = diffusion_bound.max(a.abs());
            central_dev = central_dev.max((a - b).abs());
        }
        min_eig = min_eig.min(sym_min_eigenvalue(&c_lo, d));
    }

    let drift_class = if m1_lo <= tol && m1_hi <= tol {
        DriftClass::Zero
    } else {
        let ratio = m1_hi / m1_lo;
        if (0.8..=1.25).contains(&ratio) {
            DriftClass::OrderOne
        } else if (0.35..=0.7).contains(&ratio) {
            DriftClass::OrderInvN
        } else {
            DriftClass::Unclassified
        }
    };
    // Report the drift on its limiting scale.
    match drift_class {
        DriftClass::OrderInvN => {
            for v in &mut drift_vector {
                *v *= n_ref as f64;
            }
        }
        DriftClass::Zero => drift_vector = vec![0.0; d],
        _ => {}
    }

    let k1_pass = mass_error <= tol;
    let k2_pass = drift_class != DriftClass::Unclassified;
    let k3_pass = diffusion_bound.is_finite()
        && central_dev <= tol.max(1e-8) * diffusion_bound.max(1.0)
        && min_eig >= -1e-10;

    Ok(AdmissibilityReport {
        kernel_id: spec.id(),
        tolerance: tol,
        sample_points: sample_points.to_vec(),
        mass_error,
        k1_pass,
        drift_vector,
        drift_class,
        k2_pass,
        diffusion_bound,
        k3_pass,
    })
}
