//! Periodic vertex grids and multilinear interpolation.
//!
//! Grid values live at vertex nodes `x_i = lower + i*(upper-lower)/R` for
//! `i = 0..R-1`; under the periodic convention node `R` coincides with node 0.
//! Multilinear interpolation keeps node values exact, preserves positivity,
//! and never overshoots the data range, which is what lets iterated operator
//! application stay stable.

use crate::error::{Error, Result};
use crate::quadrature::pairwise_sum;

const MAX_DIM: usize = 8;

/// Axis-aligned box domain with a periodicity flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    intervals: Vec<(f64, f64)>,
    periodic: bool,
}

impl Domain {
    pub fn new(intervals: Vec<(f64, f64)>, periodic: bool) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidDomain("dimension must be at least 1".into()));
        }
        if intervals.len() > MAX_DIM {
            return Err(Error::InvalidDomain(format!(
                "dimension {} exceeds supported maximum {MAX_DIM}",
                intervals.len()
            )));
        }
        for (a, (lo, hi)) in intervals.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidDomain(format!(
                    "axis {a}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { intervals, periodic })
    }

    /// Periodic unit box `[0,1]^d`.
    pub fn unit_box(d: usize) -> Result<Self> {
        Self::new(vec![(0.0, 1.0); d], true)
    }

    pub fn dimension(&self) -> usize {
        self.intervals.len()
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }
}

/// Function samples on a periodic vertex grid, row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    domain: Domain,
    resolution: Vec<usize>,
    values: Vec<f64>,
}

impl GridFunction {
    /// Wrap existing values. The length must equal the product of per-axis
    /// resolutions and every value must be finite.
    pub fn from_values(domain: Domain, resolution: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if !domain.periodic() {
            return Err(Error::InvalidDomain(
                "grid functions use the periodic node convention".into(),
            ));
        }
        if resolution.len() != domain.dimension() {
            return Err(Error::ShapeMismatch(format!(
                "{} resolutions for dimension {}",
                resolution.len(),
                domain.dimension()
            )));
        }
        if resolution.iter().any(|&r| r < 2) {
            return Err(Error::InvalidArgument(
                "resolution must be at least 2 per axis".into(),
            ));
        }
        let total: usize = resolution.iter().product();
        if values.len() != total {
            return Err(Error::ShapeMismatch(format!(
                "{} values for grid of size {total}",
                values.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite())
        {
            return Err(Error::NonFinite {
                node: format!("grid index {i}"),
                value: *v,
            });
        }
        Ok(Self {
            domain,
            resolution,
            values,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Coordinates of the node with the given flat index.
    pub fn node_coords(&self, mut flat: usize) -> Vec<f64> {
        let d = self.domain.dimension();
        let mut out = vec![0.0; d];
        for a in (0..d).rev() {
            let r = self.resolution[a];
            let i = flat % r;
            flat /= r;
            let (lo, hi) = self.domain.intervals()[a];
            out[a] = lo + i as f64 * (hi - lo) / r as f64;
        }
        out
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Mean of node values (pairwise reduction).
    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.values.len() as f64
    }

    /// Amplitude of the first Fourier mode along a one-dimensional grid.
    pub fn first_mode_amplitude(&self) -> Result<f64> {
        if self.domain.dimension() != 1 {
            return Err(Error::InvalidArgument(
                "first-mode amplitude is a one-dimensional diagnostic".into(),
            ));
        }
        let r = self.resolution[0];
        let mut re = Vec::with_capacity(r);
        let mut im = Vec::with_capacity(r);
        for (j, v) in self.values.iter().enumerate() {
            let phase = -2.0 * std::f64::consts::PI * j as f64 / r as f64;
            re.push(v * phase.cos());
            im.push(v * phase.sin());
        }
        let cr = pairwise_sum(&re) / r as f64;
        let ci = pairwise_sum(&im) / r as f64;
        Ok(2.0 * (cr * cr + ci * ci).sqrt())
    }
}

/// Sample an evaluator onto a periodic grid with uniform resolution `r`.
pub fn sample_to_grid<F>(f: F, domain: &Domain, r: usize) -> Result<GridFunction>
where
    F: Fn(&[f64]) -> f64,
{
    if r < 2 {
        return Err(Error::InvalidArgument(
            "resolution must be at least 2".into(),
        ));
    }
    let d = domain.dimension();
    let resolution = vec![r; d];
    let total: usize = resolution.iter().product();
    let mut values = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    let mut point = vec![0.0f64; d];
    for _ in 0..total {
        for a in 0..d {
            let (lo, hi) = domain.intervals()[a];
            point[a] = lo + idx[a] as f64 * (hi - lo) / r as f64;
        }
        let v = f(&point);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                node: format!("{point:?}"),
                value: v,
            });
        }
        values.push(v);
        for a in (0..d).rev() {
            idx[a] += 1;
            if idx[a] < r {
                break;
            }
            idx[a] = 0;
        }
    }
    GridFunction::from_values(domain.clone(), resolution, values)
}

/// Multilinear interpolation with periodic wrap. Exact at grid nodes; any
/// query point is first wrapped into the box.
pub fn eval_interp(g: &GridFunction, x: &[f64]) -> f64 {
    let d = g.domain().dimension();
    debug_assert_eq!(x.len(), d);
    let mut base = [0usize; MAX_DIM];
    let mut frac = [0.0f64; MAX_DIM];
    let mut stride = [0usize; MAX_DIM];
    let mut s = 1usize;
    for a in (0..d).rev() {
        stride[a] = s;
        s *= g.resolution()[a];
    }
    for a in 0..d {
        let r = g.resolution()[a];
        let (lo, hi) = g.domain().intervals()[a];
        let t = ((x[a] - lo) / (hi - lo) * r as f64).rem_euclid(r as f64);
        let i = t.floor();
        base[a] = (i as usize) % r;
        frac[a] = t - i;
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << d) {
        let mut w = 1.0;
        let mut flat = 0usize;
        for a in 0..d {
            let r = g.resolution()[a];
            if corner & (1 << a) != 0 {
                w *= frac[a];
                flat += ((base[a] + 1) % r) * stride[a];
            } else {
                w *= 1.0 - frac[a];
                flat += base[a] * stride[a];
            }
        }
        acc += w * g.values()[flat];
    }
    acc
}

/// Maximum absolute node-wise difference of two grids of identical shape.
pub fn sup_norm_diff(g1: &GridFunction, g2: &GridFunction) -> Result<f64> {
    if g1.domain() != g2.domain() || g1.resolution() != g2.resolution() {
        return Err(Error::ShapeMismatch(
            "grids differ in domain or resolution".into(),
        ));
    }
    Ok(g1
        .values()
        .iter()
        .zip(g2.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const TAU: f64 = std::f64::consts::TAU;

    #[test]
    fn sample_constant() {
        let d = Domain::unit_box(2).unwrap();
        let g = sample_to_grid(|_| 1.0, &d, 4).unwrap();
        assert!(g.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn sample_identity_nodes() {
        let d = Domain::unit_box(1).unwrap();
        let g = sample_to_grid(|x| x[0], &d, 4).unwrap();
        assert_eq!(g.values(), &[0.0, 0.25, 0.5, 0.75]);
    }

    #[test]
    fn sample_sine_quarter_period_node() {
        let d = Domain::unit_box(1).unwrap();
        let g = sample_to_grid(|x| (TAU * x[0]).sin(), &d, 8).unwrap();
        assert_abs_diff_eq!(g.values()[2], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn sample_rejects_non_finite() {
        let d = Domain::unit_box(1).unwrap();
        assert!(sample_to_grid(|x| 1.0 / x[0], &d, 4).is_err());
    }

    #[test]
    fn interp_exact_at_nodes() {
        let d = Domain::unit_box(2).unwrap();
        let g = sample_to_grid(|x| (TAU * x[0]).sin() + x[1], &d, 8).unwrap();
        for flat in 0..g.len() {
            let p = g.node_coords(flat);
            assert_abs_diff_eq!(eval_interp(&g, &p), g.values()[flat], epsilon = 1e-15);
        }
    }

    #[test]
    fn interp_midpoint_d1() {
        let d = Domain::unit_box(1).unwrap();
        let g = GridFunction::from_values(d, vec![2], vec![0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(eval_interp(&g, &[0.25]), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn interp_periodic_wrap() {
        let d = Domain::unit_box(1).unwrap();
        let g = sample_to_grid(|x| (TAU * x[0]).sin(), &d, 8).unwrap();
        assert_abs_diff_eq!(
            eval_interp(&g, &[1.25]),
            eval_interp(&g, &[0.25]),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            eval_interp(&g, &[-0.75]),
            eval_interp(&g, &[0.25]),
            epsilon = 1e-15
        );
    }

    #[test]
    fn sup_norm_diff_basics() {
        let d = Domain::unit_box(1).unwrap();
        let g1 = sample_to_grid(|x| (TAU * x[0]).sin(), &d, 8).unwrap();
        let g2 = sample_to_grid(|_| 0.0, &d, 8).unwrap();
        assert_abs_diff_eq!(sup_norm_diff(&g1, &g1).unwrap(), 0.0);
        assert_abs_diff_eq!(sup_norm_diff(&g1, &g2).unwrap(), 1.0, epsilon = 1e-15);
        let shifted = sample_to_grid(|x| (TAU * x[0]).sin() + 0.3, &d, 8).unwrap();
        assert_abs_diff_eq!(sup_norm_diff(&shifted, &g1).unwrap(), 0.3, epsilon = 1e-15);
        let other = sample_to_grid(|_| 0.0, &d, 16).unwrap();
        assert!(sup_norm_diff(&g1, &other).is_err());
    }

    #[test]
    fn first_mode_amplitude_of_pure_sine() {
        let d = Domain::unit_box(1).unwrap();
        let g = sample_to_grid(|x| 0.7 * (TAU * x[0]).sin(), &d, 64).unwrap();
        assert_abs_diff_eq!(g.first_mode_amplitude().unwrap(), 0.7, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_domains() {
        assert!(Domain::new(vec![], true).is_err());
        assert!(Domain::new(vec![(1.0, 0.0)], true).is_err());
        assert!(Domain::new(vec![(0.0, f64::INFINITY)], true).is_err());
    }
}
