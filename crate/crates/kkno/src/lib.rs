//! Positive integral smoothing operators built from scaled kernels with
//! moment conditions, together with the machinery to verify their
//! approximation behavior: quadrature, kernel moments and admissibility,
//! single-layer identities, quantitative error bounds, normalized-residual
//! limits, deep composition, and the drift-diffusion reference solver that
//! deep compositions converge to.
//!
//! A layer with kernel `K_n` maps `f` to
//! `x -> \int f(x - u/n) K_n(x, u) du`. Base kernels carry order-one
//! moments; the first moment acts as a drift and the second as a diffusion,
//! and stacking `m ~ n^gamma t` layers tracks the corresponding
//! drift-diffusion equation at time `t`.

pub mod asymptotics;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod operator;
pub mod pde;
pub mod quadrature;
pub mod testfn;

pub use error::{Error, Result};
pub use grid::{eval_interp, sample_to_grid, sup_norm_diff, Domain, GridFunction};
pub use kernels::{
    check_admissible, constant_drift, moments, AdmissibilityReport, DriftClass, KernelSpec,
    MomentReport, QuadConfig,
};
pub use operator::{
    apply_grid, apply_point, compose, compose_refined, schedule, CompositionSchedule,
    OperatorConfig, PointApplicator,
};
pub use quadrature::{hermite_rule, integrate_box, legendre_rule, QuadratureRule};
pub use testfn::{test_function, Smoothness, TestFunction};
