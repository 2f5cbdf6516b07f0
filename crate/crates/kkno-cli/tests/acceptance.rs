//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! with the measured quantities. Tolerances are fixed here, not tuned.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kkno::asymptotics::{
    bound_check, convergence_table, default_constant, fit_rate, korovkin, voronovskaya,
};
use kkno::grid::{sample_to_grid, sup_norm_diff, Domain, GridFunction};
use kkno::kernels::{constant_drift, moments, KernelSpec, QuadConfig};
use kkno::operator::{apply_grid, apply_point, OperatorConfig};
use kkno::pde::{cfl_dt, compare, constant_diffusion, solve, DriftDiffusionProblem, SolverConfig};
use kkno::testfn::test_function;

const PI: f64 = std::f64::consts::PI;
const TAU: f64 = std::f64::consts::TAU;

fn quad() -> QuadConfig {
    QuadConfig::default()
}

fn unit(d: usize) -> Domain {
    Domain::unit_box(d).unwrap()
}

fn cell(d: usize) -> KernelSpec {
    KernelSpec::cell_uniform(d).unwrap()
}

fn gauss_identity(d: usize) -> KernelSpec {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    KernelSpec::gaussian(&m, d).unwrap()
}

fn sample_points(d: usize) -> Vec<Vec<f64>> {
    [0.17, 0.42, 0.58, 0.73, 0.91]
        .iter()
        .map(|&t| (0..d).map(|a| (t + 0.13 * a as f64) % 1.0).collect())
        .collect()
}

/// Criterion 1: numeric kernel moments match the closed forms
/// (mass 1, zero drift, B = I/12 for the cell kernel and A^{-1} for the
/// Gaussian) within 1e-8 at 5 sample points.
#[test]
fn criterion_01_kernel_moments() {
    let tol = 1e-8;
    let kernels: Vec<KernelSpec> = vec![
        cell(1),
        cell(2),
        cell(3),
        gauss_identity(1),
        gauss_identity(2),
        KernelSpec::gaussian(&[4.0, 0.0, 0.0, 1.0], 2).unwrap(),
    ];
    let mut worst = 0.0f64;
    for k in &kernels {
        let d = k.dimension();
        for x in sample_points(d) {
            let m = moments(k, &x, 6, quad()).unwrap();
            let second = k.closed_form_second_moment(&x, 6);
            let mut dev = (m.mass - 1.0).abs();
            for i in 0..d {
                dev = dev.max(m.first[i].abs());
                for j in 0..d {
                    dev = dev.max((m.second[i * d + j] - second[i * d + j]).abs());
                }
            }
            assert!(dev <= tol, "{} at {x:?}: deviation {dev:.3e}", k.id());
            worst = worst.max(dev);
        }
    }
    println!("criterion 01 kernel moments: PASS (max deviation {worst:.3e} <= {tol:.0e})");
}

/// Criterion 2: single-layer monomial identities against measured moments,
/// residuals <= 1e-8 for both kernels, d = 1, 2, n in {4, 16, 64}.
#[test]
fn criterion_02_monomial_identities() {
    let tol = 1e-8;
    let mut worst = 0.0f64;
    for d in [1usize, 2] {
        for k in [cell(d), gauss_identity(d)] {
            for n in [4u32, 16, 64] {
                let cfg = OperatorConfig::new(k.clone(), n, quad()).unwrap();
                let nf = n as f64;
                for x in sample_points(d) {
                    let m = moments(&k, &x, n, quad()).unwrap();
                    for i in 0..d {
                        let v = apply_point(&cfg, |p: &[f64]| p[i], &x).unwrap();
                        let r1 = (v - x[i] + m.first[i] / nf).abs();
                        assert!(r1 <= tol, "{} linear residual {r1:.3e}", k.id());
                        worst = worst.max(r1);
                        for j in 0..d {
                            let v = apply_point(&cfg, |p: &[f64]| p[i] * p[j], &x).unwrap();
                            let r2 = (v - x[i] * x[j]
                                + (x[j] * m.first[i] + x[i] * m.first[j]) / nf
                                - m.second[i * d + j] / (nf * nf))
                                .abs();
                            assert!(r2 <= tol, "{} quadratic residual {r2:.3e}", k.id());
                            worst = worst.max(r2);
                        }
                    }
                }
            }
        }
    }
    println!("criterion 02 monomial identities: PASS (max residual {worst:.3e} <= 1e-8)");
}

/// Criterion 3: linearity (1e-10), positivity (>= -1e-12), constant
/// reproduction (1e-10), and sup-norm contraction over 20 randomized grid
/// functions per kernel.
#[test]
fn criterion_03_operator_properties() {
    let dom = unit(1);
    let r = 64usize;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for k in [cell(1), gauss_identity(1)] {
        let cfg = OperatorConfig::new(k.clone(), 8, quad()).unwrap();
        for trial in 0..20 {
            let f_vals: Vec<f64> = (0..r).map(|_| rng.gen_range(0.0..1.0)).collect();
            let g_vals: Vec<f64> = (0..r).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let alpha: f64 = rng.gen_range(-2.0..2.0);
            let beta: f64 = rng.gen_range(-2.0..2.0);
            let f = GridFunction::from_values(dom.clone(), vec![r], f_vals.clone()).unwrap();
            let g = GridFunction::from_values(dom.clone(), vec![r], g_vals.clone()).unwrap();

            // linearity
            let combo_vals: Vec<f64> = f_vals
                .iter()
                .zip(&g_vals)
                .map(|(a, b)| alpha * a + beta * b)
                .collect();
            let combo = GridFunction::from_values(dom.clone(), vec![r], combo_vals).unwrap();
            let lhs = apply_grid(&cfg, &combo).unwrap();
            let fa = apply_grid(&cfg, &f).unwrap();
            let gb = apply_grid(&cfg, &g).unwrap();
            let rhs_vals: Vec<f64> = fa
                .values()
                .iter()
                .zip(gb.values())
                .map(|(a, b)| alpha * a + beta * b)
                .collect();
            let rhs = GridFunction::from_values(dom.clone(), vec![r], rhs_vals).unwrap();
            let lin_dev = sup_norm_diff(&lhs, &rhs).unwrap();
            assert!(lin_dev <= 1e-10, "{} trial {trial}: linearity {lin_dev:.3e}", k.id());

            // positivity on the nonnegative grid
            assert!(
                fa.values().iter().all(|&v| v >= -1e-12),
                "{} trial {trial}: positivity violated",
                k.id()
            );

            // constant reproduction
            let c = rng.gen_range(-3.0..3.0);
            let cg = GridFunction::from_values(dom.clone(), vec![r], vec![c; r]).unwrap();
            let out = apply_grid(&cfg, &cg).unwrap();
            assert!(out.values().iter().all(|&v| (v - c).abs() <= 1e-10));

            // contraction
            let out = apply_grid(&cfg, &g).unwrap();
            assert!(
                out.sup_norm() <= g.sup_norm() + 1e-12,
                "{} trial {trial}: contraction",
                k.id()
            );
        }
    }
    println!("criterion 03 operator properties: PASS (20 random grids per kernel)");
}

/// Criterion 4: quantitative bound with the closed-form constants, plus the
/// density trend: errors nonincreasing in n, all margins >= -1e-12, for
/// both kernels, f in {sin2pi, absdev, expsum}, d in {1, 2},
/// n in {4, 8, ..., 256}.
#[test]
fn criterion_04_quantitative_bound() {
    let n_list = [4u32, 8, 16, 32, 64, 128, 256];
    let mut worst_margin = f64::INFINITY;
    for d in [1usize, 2] {
        let dom = unit(d);
        let pair_density = if d == 1 { 256 } else { 64 };
        for k in [cell(d), gauss_identity(d)] {
            let c = default_constant(&k).unwrap();
            for name in ["sin2pi", "absdev", "expsum"] {
                let f = test_function(name, d).unwrap();
                let table = convergence_table(&k, &f, &n_list, &dom, 64, quad()).unwrap();
                for w in table.rows.windows(2) {
                    assert!(
                        w[1].1 <= w[0].1 + 1e-10,
                        "{} {name} d={d}: error increased {:?} -> {:?}",
                        k.id(),
                        w[0],
                        w[1]
                    );
                }
                let rep = bound_check(&table, &f, c, &dom, pair_density).unwrap();
                for row in &rep.rows {
                    assert!(
                        row.margin >= -1e-12,
                        "{} {name} d={d} n={}: margin {:.3e}",
                        k.id(),
                        row.n,
                        row.margin
                    );
                    worst_margin = worst_margin.min(row.margin);
                }
            }
        }
    }
    println!(
        "criterion 04 quantitative bound: PASS (all margins >= -1e-12, worst {worst_margin:.3e})"
    );
}

/// Criterion 5: normalized second-order residual for the cell kernel on
/// sin(2 pi x): r(64) <= 5% of the limit sup, residuals strictly decreasing
/// over n in {8, 16, 32, 64}; cross-checked against the multiplier oracle
/// rho_n = sin(pi/n)/(pi/n).
#[test]
fn criterion_05_voronovskaya_cell() {
    let f = test_function("sin2pi", 1).unwrap();
    let rep = voronovskaya(&cell(1), &f, &[8, 16, 32, 64], 2, &unit(1), 64, quad()).unwrap();
    let limit_sup = rep.limit_sup;
    assert!((limit_sup - PI * PI / 6.0).abs() <= 1e-9);
    for w in rep.rows.windows(2) {
        assert!(w[1].1 < w[0].1, "residuals not strictly decreasing: {:?}", rep.rows);
    }
    let r64 = rep.rows.last().unwrap().1;
    assert!(r64 <= 0.05 * limit_sup, "r(64) = {r64:.3e}");
    for &(n, r) in &rep.rows {
        let rho = (PI / n as f64).sin() / (PI / n as f64);
        let oracle = (PI * PI / 6.0 - (n as f64).powi(2) * (1.0 - rho)).abs();
        assert!((r - oracle).abs() <= 1e-6, "n={n}: {r} vs oracle {oracle}");
    }
    println!(
        "criterion 05 voronovskaya: PASS (r(64) = {r64:.3e} <= {:.3e}, oracle matched)",
        0.05 * limit_sup
    );
}

/// Criterion 6: the Gaussian layer reproduces the characteristic-function
/// factor e^{-2 pi^2/n^2} on sin(2 pi x) within 1e-6 relative at default
/// quadrature, n in {2, 4, 8}.
#[test]
fn criterion_06_gaussian_closed_form() {
    let k = gauss_identity(1);
    let mut worst = 0.0f64;
    for n in [2u32, 4, 8] {
        let cfg = OperatorConfig::new(k.clone(), n, quad()).unwrap();
        let factor = (-2.0 * PI * PI / (n as f64 * n as f64)).exp();
        for i in 0..64 {
            let x = i as f64 / 64.0;
            let got = apply_point(&cfg, |p: &[f64]| (TAU * p[0]).sin(), &[x]).unwrap();
            let rel = (got - factor * (TAU * x).sin()).abs() / factor;
            assert!(rel <= 1e-6, "n={n} x={x}: relative deviation {rel:.3e}");
            worst = worst.max(rel);
        }
    }
    println!("criterion 06 gaussian closed form: PASS (max relative deviation {worst:.3e})");
}

/// Criterion 7: test-monomial suite. e0 <= 1e-10 always; e_i <= 1e-10 for
/// zero-drift kernels; e11 for the cell kernel equals 1/(12 n^2) within
/// 1e-8 at n in {5, 10, 20}.
#[test]
fn criterion_07_korovkin_suite() {
    let n_list = [5u32, 10, 20];
    for k in [cell(1), gauss_identity(1)] {
        let rep = korovkin(&k, &n_list, &unit(1), 64, quad()).unwrap();
        for row in &rep.rows {
            match row.monomial.as_str() {
                "e0" | "e1" => assert!(
                    row.sup_error <= 1e-10,
                    "{} {} n={}: {:.3e}",
                    k.id(),
                    row.monomial,
                    row.n,
                    row.sup_error
                ),
                _ => {}
            }
        }
    }
    let rep = korovkin(&cell(1), &n_list, &unit(1), 64, quad()).unwrap();
    for row in rep.rows.iter().filter(|r| r.monomial == "e11") {
        let expected = 1.0 / (12.0 * (row.n as f64).powi(2));
        assert!(
            (row.sup_error - expected).abs() <= 1e-8,
            "e11 n={}: {} vs {expected}",
            row.n,
            row.sup_error
        );
    }
    println!("criterion 07 korovkin suite: PASS (e0/e1 <= 1e-10, e11 = 1/(12 n^2) +- 1e-8)");
}

/// Criterion 8: fitted decay exponents for the cell kernel over
/// n in {8, ..., 64}: alpha = 2.0 +- 0.1 on sin2pi, alpha = 1.0 +- 0.15 on
/// absdev.
#[test]
fn criterion_08_rate_fits() {
    let n_list = [8u32, 16, 32, 64];
    let smooth = test_function("sin2pi", 1).unwrap();
    let t = convergence_table(&cell(1), &smooth, &n_list, &unit(1), 64, quad()).unwrap();
    let fit_smooth = fit_rate(&t).unwrap();
    assert!(
        (fit_smooth.alpha - 2.0).abs() <= 0.1,
        "sin2pi alpha {}",
        fit_smooth.alpha
    );
    let kink = test_function("absdev", 1).unwrap();
    let t = convergence_table(&cell(1), &kink, &n_list, &unit(1), 64, quad()).unwrap();
    let fit_kink = fit_rate(&t).unwrap();
    assert!(
        (fit_kink.alpha - 1.0).abs() <= 0.15,
        "absdev alpha {}",
        fit_kink.alpha
    );
    println!(
        "criterion 08 rate fits: PASS (sin2pi alpha {:.4}, absdev alpha {:.4})",
        fit_smooth.alpha, fit_kink.alpha
    );
}

/// Criterion 9: diffusive limit of deep composition. Cell kernel, d = 1,
/// gamma = 2, t = 0.5, report grid R = 64: first-mode amplitudes of the
/// composition and the heat solution within 2% of e^{-pi^2 t/6} at n = 32,
/// sup gap strictly smaller at n = 64; the drifted variant (s = 1,
/// c = 0.5) stays within 0.03 of the full drift-diffusion solve at n = 32.
#[test]
fn criterion_09_pde_limit() {
    let f0 = sample_to_grid(|x| (TAU * x[0]).sin(), &unit(1), 64).unwrap();
    let target = (-PI * PI * 0.5 / 6.0).exp();

    let rep32 = compare(&cell(1), 32, 0.5, 2, &f0, quad()).unwrap();
    let ac = rep32.amp_compose.unwrap();
    let ap = rep32.amp_pde.unwrap();
    assert!(
        (ac / target - 1.0).abs() <= 0.02,
        "compose amplitude {ac:.5} vs {target:.5}"
    );
    assert!(
        (ap / target - 1.0).abs() <= 0.02,
        "pde amplitude {ap:.5} vs {target:.5}"
    );

    let rep64 = compare(&cell(1), 64, 0.5, 2, &f0, quad()).unwrap();
    assert!(
        rep64.gap < rep32.gap,
        "gap did not shrink: {} -> {}",
        rep32.gap,
        rep64.gap
    );

    let drifted = KernelSpec::drifted(cell(1), constant_drift(vec![0.5]), 1).unwrap();
    let repd = compare(&drifted, 32, 0.5, 2, &f0, quad()).unwrap();
    assert!(repd.gap <= 0.03, "drifted gap {}", repd.gap);

    println!(
        "criterion 09 pde limit: PASS (amps {ac:.4}/{ap:.4} vs {target:.4}, \
         gaps {:.4} -> {:.4}, drifted gap {:.4})",
        rep32.gap, rep64.gap, repd.gap
    );
}

/// Criterion 10: solver oracles. Heat-mode decay within 1e-3 of
/// e^{-4 pi^2 kappa t} at R = 128; mass conserved to 1e-10; maximum
/// principle holds; the forward-Euler order-check factor lies in [1.7, 2.3].
#[test]
fn criterion_10_pde_solver_oracles() {
    // mode decay
    let g = sample_to_grid(|x| (TAU * x[0]).sin(), &unit(1), 128).unwrap();
    let p = DriftDiffusionProblem {
        drift: None,
        diffusion: Some(constant_diffusion(vec![1.0 / 12.0])),
        initial: g,
        final_time: 0.5,
    };
    let out = solve(&p, &SolverConfig::default()).unwrap();
    let amp = out.first_mode_amplitude().unwrap();
    let exact = (-4.0 * PI * PI / 24.0 * 0.5).exp();
    let decay_err = (amp - exact).abs();
    assert!(decay_err <= 1e-3, "decay error {decay_err:.3e}");

    // mass conservation and maximum principle on a mixed-mode field
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let vals: Vec<f64> = (0..64).map(|_| rng.gen_range(0.0..1.0)).collect();
    let g = GridFunction::from_values(unit(1), vec![64], vals).unwrap();
    let lo = g.values().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = g.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let p = DriftDiffusionProblem {
        drift: None,
        diffusion: Some(constant_diffusion(vec![1.0 / 12.0])),
        initial: g.clone(),
        final_time: 0.2,
    };
    let out = solve(&p, &SolverConfig::default()).unwrap();
    let mass_drift = (out.mean() - g.mean()).abs();
    assert!(mass_drift <= 1e-10, "mass drift {mass_drift:.3e}");
    assert!(out
        .values()
        .iter()
        .all(|&v| v >= lo - 1e-10 && v <= hi + 1e-10));

    // forward-Euler order check
    let g = sample_to_grid(|x| (TAU * x[0]).sin(), &unit(1), 32).unwrap();
    let run = |dt: f64| {
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
    let d12 = sup_norm_diff(&run(base), &run(base / 2.0)).unwrap();
    let d23 = sup_norm_diff(&run(base / 2.0), &run(base / 4.0)).unwrap();
    let factor = d12 / d23;
    assert!((1.7..=2.3).contains(&factor), "order factor {factor}");

    // the stated step-size formula
    let h = 1.0 / 64.0;
    let dt = cfl_dt(&[0.0], &[1.0 / 24.0], h, 0.5, 1.0);
    assert!((dt - 6.0 * h * h).abs() <= 1e-15);

    println!(
        "criterion 10 pde solver oracles: PASS (decay err {decay_err:.2e}, \
         mass drift {mass_drift:.2e}, order factor {factor:.3})"
    );
}

/// Criterion 11: a fixed config produces byte-identical CSV output across
/// two runs and across worker-thread counts 1 and 4.
#[test]
fn criterion_11_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let config_path = tmp.path().join("acceptance.json");
    std::fs::write(
        &config_path,
        r#"{
            "experiment": "pde-compare",
            "kernel": {"variant": "cell-uniform", "dimension": 1},
            "function": "sin2pi",
            "n_list": [8, 16],
            "t": 0.125,
            "gamma": 2,
            "resolution": 64
        }"#,
    )
    .unwrap();
    let run_in_pool = |threads: usize, dir: &std::path::Path| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            kkno_cli::run(
                &config_path,
                &kkno_cli::RunOptions {
                    out_dir: Some(dir.to_path_buf()),
                    plot: false,
                },
            )
            .unwrap()
        })
    };
    let dirs = [
        tmp.path().join("run1"),
        tmp.path().join("run2"),
        tmp.path().join("run4"),
    ];
    run_in_pool(1, &dirs[0]);
    run_in_pool(1, &dirs[1]);
    run_in_pool(4, &dirs[2]);
    let reference = std::fs::read(dirs[0].join("pde-compare.csv")).unwrap();
    for dir in &dirs[1..] {
        let other = std::fs::read(dir.join("pde-compare.csv")).unwrap();
        assert_eq!(reference, other, "CSV bytes differ for {}", dir.display());
    }
    assert!(!reference.is_empty());
    println!(
        "criterion 11 determinism: PASS (byte-identical CSVs across reruns and thread counts 1/4)"
    );
}
