//! Experiment configuration: a single JSON file, fully validated before any
//! computation runs. Unknown keys are rejected.

use serde::Deserialize;

use kkno::kernels::{constant_drift, KernelSpec, QuadConfig};
use kkno::testfn::{test_function, TestFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Moments,
    Admissible,
    Converge,
    Voronovskaya,
    Korovkin,
    Rate,
    Compose,
    PdeCompare,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Moments => "moments",
            ExperimentKind::Admissible => "admissible",
            ExperimentKind::Converge => "converge",
            ExperimentKind::Voronovskaya => "voronovskaya",
            ExperimentKind::Korovkin => "korovkin",
            ExperimentKind::Rate => "rate",
            ExperimentKind::Compose => "compose",
            ExperimentKind::PdeCompare => "pde-compare",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    /// `cell-uniform`, `gaussian`, or `drifted`.
    pub variant: String,
    pub dimension: usize,
    /// Precision matrix entries, row-major (gaussian variants).
    #[serde(default)]
    pub matrix: Option<Vec<f64>>,
    /// Base variant for `drifted`: `cell-uniform` or `gaussian`.
    #[serde(default)]
    pub base: Option<String>,
    /// Constant drift vector (drifted variant).
    #[serde(default)]
    pub drift: Option<Vec<f64>>,
    /// Drift decay exponent, 0 or 1 (drifted variant).
    #[serde(default)]
    pub decay: Option<u8>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(default = "default_legendre")]
    pub legendre_order: usize,
    #[serde(default = "default_hermite")]
    pub hermite_order: usize,
}

fn default_legendre() -> usize {
    QuadConfig::default().legendre_order
}

fn default_hermite() -> usize {
    QuadConfig::default().hermite_order
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            legendre_order: default_legendre(),
            hermite_order: default_hermite(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub kernel: KernelConfig,
    #[serde(default)]
    pub function: Option<String>,
    #[serde(default)]
    pub n: Option<u32>,
    #[serde(default)]
    pub n_list: Option<Vec<u32>>,
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default)]
    pub gamma: Option<u8>,
    /// Evaluation / comparison grid resolution per axis.
    #[serde(default)]
    pub resolution: Option<usize>,
    #[serde(default)]
    pub quadrature: Option<QuadratureConfig>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Bound constant override for converge runs.
    #[serde(default)]
    pub constant: Option<f64>,
    /// Pair-grid density for modulus sampling.
    #[serde(default)]
    pub pair_density: Option<usize>,
    /// Normalization exponent for voronovskaya runs (1 or 2).
    #[serde(default)]
    pub normalization: Option<u8>,
    #[serde(default)]
    pub sample_points: Option<Vec<Vec<f64>>>,
    /// Expected rate exponent (rate runs); checked within `alpha_tol`.
    #[serde(default)]
    pub expected_alpha: Option<f64>,
    #[serde(default)]
    pub alpha_tol: Option<f64>,
    /// Gap acceptance threshold for pde-compare runs.
    #[serde(default)]
    pub gap_tol: Option<f64>,
    #[serde(default)]
    pub out_dir: Option<String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| format!("config: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn quad(&self) -> QuadConfig {
        let q = self.quadrature.unwrap_or_default();
        QuadConfig {
            legendre_order: q.legendre_order,
            hermite_order: q.hermite_order,
        }
    }

    pub fn resolution_or_default(&self) -> usize {
        self.resolution.unwrap_or(64)
    }

    pub fn tolerance_or_default(&self) -> f64 {
        self.tolerance.unwrap_or(1e-8)
    }

    pub fn pair_density_or_default(&self) -> usize {
        self.pair_density
            .unwrap_or(if self.kernel.dimension == 1 { 256 } else { 64 })
    }

    pub fn build_kernel(&self) -> Result<KernelSpec, String> {
        build_kernel(&self.kernel)
    }

    pub fn build_function(&self) -> Result<TestFunction, String> {
        let name = self
            .function
            .as_deref()
            .ok_or_else(|| "config: field `function` is required for this experiment".to_string())?;
        test_function(name, self.kernel.dimension).map_err(|e| format!("config: function: {e}"))
    }

    /// Deterministic interior sample points when none are configured.
    pub fn sample_points_or_default(&self) -> Vec<Vec<f64>> {
        let d = self.kernel.dimension;
        self.sample_points.clone().unwrap_or_else(|| {
            [0.17, 0.42, 0.58, 0.73, 0.91]
                .iter()
                .map(|&t| (0..d).map(|a| (t + 0.13 * a as f64) % 1.0).collect())
                .collect()
        })
    }

    fn validate(&self) -> Result<(), String> {
        build_kernel(&self.kernel)?;
        let q = self.quadrature.unwrap_or_default();
        if q.legendre_order == 0 || q.hermite_order == 0 {
            return Err("config: quadrature orders must be at least 1".into());
        }
        if let Some(r) = self.resolution {
            if r < 2 {
                return Err("config: resolution must be at least 2".into());
            }
        }
        if let Some(t) = self.tolerance {
            if !t.is_finite() || t <= 0.0 {
                return Err("config: tolerance must be positive".into());
            }
        }
        if let Some(points) = &self.sample_points {
            if points.is_empty() {
                return Err("config: sample_points must not be empty".into());
            }
            if points.iter().any(|p| p.len() != self.kernel.dimension) {
                return Err("config: sample_points dimension mismatch".into());
            }
        }
        let need_function = matches!(
            self.experiment,
            ExperimentKind::Converge
                | ExperimentKind::Voronovskaya
                | ExperimentKind::Rate
                | ExperimentKind::Compose
                | ExperimentKind::PdeCompare
        );
        if need_function {
            self.build_function()?;
        }
        let need_n_list = matches!(
            self.experiment,
            ExperimentKind::Converge
                | ExperimentKind::Voronovskaya
                | ExperimentKind::Korovkin
                | ExperimentKind::Rate
                | ExperimentKind::PdeCompare
        );
        if need_n_list {
            let list = self
                .n_list
                .as_ref()
                .ok_or_else(|| "config: field `n_list` is required for this experiment".to_string())?;
            if list.is_empty() || list.contains(&0) {
                return Err("config: n_list entries must be positive".into());
            }
            if !list.windows(2).all(|w| w[0] < w[1]) {
                return Err("config: n_list must be strictly increasing".into());
            }
            let min_len = match self.experiment {
                ExperimentKind::PdeCompare => 1,
                _ => 3,
            };
            if list.len() < min_len {
                return Err(format!("config: n_list needs at least {min_len} entries"));
            }
        }
        if matches!(
            self.experiment,
            ExperimentKind::Compose | ExperimentKind::PdeCompare
        ) {
            let t = self
                .t
                .ok_or_else(|| "config: field `t` is required for this experiment".to_string())?;
            if !(t.is_finite() && t >= 0.0) {
                return Err("config: t must be nonnegative".into());
            }
            let gamma = self.gamma.ok_or_else(|| {
                "config: field `gamma` is required for this experiment".to_string()
            })?;
            if gamma != 1 && gamma != 2 {
                return Err("config: gamma must be 1 or 2".into());
            }
        }
        if self.experiment == ExperimentKind::Compose && self.n.is_none() {
            return Err("config: field `n` is required for compose".into());
        }
        if let Some(p) = self.normalization {
            if p != 1 && p != 2 {
                return Err("config: normalization must be 1 or 2".into());
            }
        }
        if let Some(m) = self.pair_density {
            if m < 64 {
                return Err("config: pair_density must be at least 64".into());
            }
        }
        if let Some(c) = self.constant {
            if !c.is_finite() || c < 0.0 {
                return Err("config: constant must be finite and nonnegative".into());
            }
        }
        Ok(())
    }
}

fn build_base(variant: &str, cfg: &KernelConfig) -> Result<KernelSpec, String> {
    let d = cfg.dimension;
    if d == 0 {
        return Err("config: kernel.dimension must be positive".into());
    }
    match variant {
        "cell-uniform" => KernelSpec::cell_uniform(d).map_err(|e| format!("config: kernel: {e}")),
        "gaussian" => {
            let m = cfg
                .matrix
                .as_ref()
                .ok_or_else(|| "config: kernel.matrix is required for gaussian".to_string())?;
            KernelSpec::gaussian(m, d).map_err(|e| format!("config: kernel.matrix: {e}"))
        }
        other => Err(format!("config: kernel.variant: unknown variant `{other}`")),
    }
}

pub fn build_kernel(cfg: &KernelConfig) -> Result<KernelSpec, String> {
    match cfg.variant.as_str() {
        "drifted" => {
            let base_name = cfg
                .base
                .as_deref()
                .ok_or_else(|| "config: kernel.base is required for drifted".to_string())?;
            let base = build_base(base_name, cfg)?;
            let drift = cfg
                .drift
                .clone()
                .ok_or_else(|| "config: kernel.drift is required for drifted".to_string())?;
            if drift.len() != cfg.dimension {
                return Err("config: kernel.drift dimension mismatch".into());
            }
            let decay = cfg
                .decay
                .ok_or_else(|| "config: kernel.decay is required for drifted".to_string())?;
            KernelSpec::drifted(base, constant_drift(drift), decay)
                .map_err(|e| format!("config: kernel: {e}"))
        }
        other => build_base(other, cfg),
    }
}
