//! Experiment execution: read a config, compute artifacts, write CSV/SVG and
//! the run manifest (always written last, so its presence marks a completed
//! run).

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use kkno::asymptotics::{
    bound_check, convergence_table, default_constant, fit_rate, korovkin, voronovskaya,
};
use kkno::grid::{sample_to_grid, Domain};
use kkno::kernels::{check_admissible, moments, DriftClass};
use kkno::operator::{compose_refined, schedule, OperatorConfig};
use kkno::pde::compare;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::csv;
use crate::plot::{render_chart, Series};

/// Environment variable overriding the output directory (the `--out` flag
/// takes precedence over it).
pub const OUT_DIR_ENV: &str = "KKNO_OUT_DIR";

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or an experiment that cannot run; exit status 2,
    /// nothing written.
    Config(String),
    /// Filesystem failure; exit status 2.
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "io: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub check: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    fn new(check: &str, pass: bool, detail: String) -> Self {
        Self {
            check: check.into(),
            pass,
            detail,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub verdicts: Vec<Verdict>,
    pub outputs: Vec<String>,
}

impl RunOutcome {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

#[derive(Debug, Default, Clone)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub plot: bool,
}

#[derive(Serialize)]
struct Manifest {
    config_hash: String,
    tool_version: String,
    duration_seconds: f64,
    verdicts: Vec<Verdict>,
    outputs: Vec<String>,
}

struct Executed {
    files: Vec<(String, String)>,
    plot: Option<(Vec<Series>, String)>,
    verdicts: Vec<Verdict>,
}

/// Run one experiment. Exit-status contract: `Ok` with all verdicts passing
/// maps to 0, `Ok` with any failing verdict to 1 (artifacts are still
/// written), `Err` to 2 (nothing written).
pub fn run(config_path: &Path, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    let raw = std::fs::read(config_path)
        .map_err(|e| CliError::Io(format!("read {}: {e}", config_path.display())))?;
    let config_hash = format!("{:x}", Sha256::digest(&raw));
    let text = String::from_utf8(raw).map_err(|_| CliError::Config("config: not UTF-8".into()))?;
    let cfg = ExperimentConfig::parse(&text).map_err(CliError::Config)?;

    let out_dir = opts
        .out_dir
        .clone()
        .or_else(|| std::env::var(OUT_DIR_ENV).ok().map(PathBuf::from))
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    let mut executed = execute(&cfg)?;

    if opts.plot {
        match &executed.plot {
            Some((series, title)) => match render_chart(series, title) {
                Ok(svg) => executed.files.push(("plot.svg".into(), svg)),
                Err(msg) => executed
                    .verdicts
                    .push(Verdict::new("plot", false, msg)),
            },
            None => executed.verdicts.push(Verdict::new(
                "plot",
                false,
                format!("experiment `{}` has no plottable table", cfg.experiment.name()),
            )),
        }
    }

    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Io(format!("create {}: {e}", out_dir.display())))?;
    let mut outputs = Vec::new();
    for (name, content) in &executed.files {
        let path = out_dir.join(name);
        std::fs::write(&path, content)
            .map_err(|e| CliError::Io(format!("write {}: {e}", path.display())))?;
        outputs.push(name.clone());
    }
    let manifest = Manifest {
        config_hash,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        duration_seconds: started.elapsed().as_secs_f64(),
        verdicts: executed.verdicts.clone(),
        outputs: outputs.clone(),
    };
    let manifest_json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Io(format!("manifest: {e}")))?;
    let manifest_path = out_dir.join("manifest.json");
    std::fs::write(&manifest_path, manifest_json + "\n")
        .map_err(|e| CliError::Io(format!("write {}: {e}", manifest_path.display())))?;
    outputs.push("manifest.json".into());

    Ok(RunOutcome {
        out_dir,
        verdicts: executed.verdicts,
        outputs,
    })
}

fn numeric(e: kkno::Error) -> CliError {
    CliError::Config(format!("experiment: {e}"))
}

fn execute(cfg: &ExperimentConfig) -> Result<Executed, CliError> {
    let kernel = cfg.build_kernel().map_err(CliError::Config)?;
    let d = kernel.dimension();
    let domain = Domain::unit_box(d).map_err(numeric)?;
    let quad = cfg.quad();
    let r_eval = cfg.resolution_or_default();
    let tol = cfg.tolerance_or_default();

    match cfg.experiment {
        ExperimentKind::Moments => {
            let n = cfg.n.unwrap_or(8);
            let points = cfg.sample_points_or_default();
            let mut reports = Vec::new();
            let mut dev = 0.0f64;
            for x in &points {
                let m = moments(&kernel, x, n, quad).map_err(numeric)?;
                dev = dev.max((m.mass - 1.0).abs());
                let drift = kernel.closed_form_drift(x, n);
                let second = kernel.closed_form_second_moment(x, n);
                for i in 0..d {
                    dev = dev.max((m.first[i] - drift[i]).abs());
                    for j in 0..d {
                        dev = dev.max((m.second[i * d + j] - second[i * d + j]).abs());
                    }
                }
                reports.push(m);
            }
            Ok(Executed {
                files: vec![("moments.csv".into(), csv::moments_csv(&reports))],
                plot: None,
                verdicts: vec![Verdict::new(
                    "closed-form-match",
                    dev <= tol,
                    format!("max deviation {dev:.3e} vs tolerance {tol:.3e}"),
                )],
            })
        }
        ExperimentKind::Admissible => {
            let points = cfg.sample_points_or_default();
            let rep = check_admissible(&kernel, quad, tol, &points).map_err(numeric)?;
            let verdicts = vec![
                Verdict::new(
                    "admissible",
                    rep.pass(),
                    format!(
                        "K1 {} (mass error {:.3e}), K2 {} (class {}), K3 {} (bound {:.3e})",
                        rep.k1_pass,
                        rep.mass_error,
                        rep.k2_pass,
                        rep.drift_class,
                        rep.k3_pass,
                        rep.diffusion_bound
                    ),
                ),
            ];
            Ok(Executed {
                files: vec![("admissible.csv".into(), csv::admissible_csv(&rep))],
                plot: None,
                verdicts,
            })
        }
        ExperimentKind::Converge => {
            let f = cfg.build_function().map_err(CliError::Config)?;
            let n_list = cfg.n_list.clone().unwrap();
            let table =
                convergence_table(&kernel, &f, &n_list, &domain, r_eval, quad).map_err(numeric)?;
            let worst = table
                .rows
                .windows(2)
                .map(|w| w[1].1 - w[0].1)
                .fold(f64::NEG_INFINITY, f64::max);
            let mut verdicts = vec![Verdict::new(
                "monotone",
                worst <= 1e-10,
                format!("max error increase {worst:.3e}"),
            )];
            let mut files = vec![("converge.csv".into(), csv::converge_csv(&table))];
            let mut series = vec![Series {
                label: "sup_error".into(),
                points: table.rows.iter().map(|&(n, e)| (n as f64, e)).collect(),
            }];
            let constant = match cfg.constant {
                Some(c) => Some(c),
                None => default_constant(&kernel).ok(),
            };
            if let Some(c) = constant {
                let rep = bound_check(&table, &f, c, &domain, cfg.pair_density_or_default())
                    .map_err(numeric)?;
                let worst_margin = rep
                    .rows
                    .iter()
                    .map(|r| r.margin)
                    .fold(f64::INFINITY, f64::min);
                verdicts.push(Verdict::new(
                    "bound",
                    rep.pass,
                    format!("C = {c}, worst margin {worst_margin:.3e}"),
                ));
                series.push(Series {
                    label: "bound".into(),
                    points: rep.rows.iter().map(|r| (r.n as f64, r.bound)).collect(),
                });
                files.push(("bound.csv".into(), csv::bound_csv(&rep)));
            }
            let title = format!("{} on {}", table.kernel_id, table.function_name);
            Ok(Executed {
                files,
                plot: Some((series, title)),
                verdicts,
            })
        }
        ExperimentKind::Voronovskaya => {
            let f = cfg.build_function().map_err(CliError::Config)?;
            let n_list = cfg.n_list.clone().unwrap();
            let p = cfg.normalization.unwrap_or(match kernel.drift_class() {
                DriftClass::OrderOne => 1,
                _ => 2,
            });
            let rep = voronovskaya(&kernel, &f, &n_list, p, &domain, r_eval, quad)
                .map_err(numeric)?;
            let worst = rep
                .rows
                .windows(2)
                .map(|w| w[1].1 - w[0].1)
                .fold(f64::NEG_INFINITY, f64::max);
            let series = vec![Series {
                label: "residual".into(),
                points: rep.rows.iter().map(|&(n, r)| (n as f64, r)).collect(),
            }];
            let title = format!("normalized residual, p={p}, {}", rep.kernel_id);
            Ok(Executed {
                files: vec![("voronovskaya.csv".into(), csv::voronovskaya_csv(&rep))],
                plot: Some((series, title)),
                verdicts: vec![Verdict::new(
                    "residuals-nonincreasing",
                    worst <= 1e-10,
                    format!("max residual increase {worst:.3e}, limit sup {:.4}", rep.limit_sup),
                )],
            })
        }
        ExperimentKind::Korovkin => {
            let n_list = cfg.n_list.clone().unwrap();
            let rep = korovkin(&kernel, &n_list, &domain, r_eval, quad).map_err(numeric)?;
            let e0_worst = rep
                .rows
                .iter()
                .filter(|r| r.monomial == "e0")
                .map(|r| r.sup_error)
                .fold(0.0f64, f64::max);
            let mut labels: Vec<String> = rep.rows.iter().map(|r| r.monomial.clone()).collect();
            labels.dedup();
            let series: Vec<Series> = labels
                .iter()
                .map(|label| Series {
                    label: label.clone(),
                    points: rep
                        .rows
                        .iter()
                        .filter(|r| &r.monomial == label)
                        .map(|r| (r.n as f64, r.sup_error))
                        .collect(),
                })
                .collect();
            Ok(Executed {
                files: vec![("korovkin.csv".into(), csv::korovkin_csv(&rep))],
                plot: Some((series, format!("test monomials, {}", rep.kernel_id))),
                verdicts: vec![Verdict::new(
                    "constant-monomial",
                    e0_worst <= 1e-10,
                    format!("max e0 error {e0_worst:.3e}"),
                )],
            })
        }
        ExperimentKind::Rate => {
            let f = cfg.build_function().map_err(CliError::Config)?;
            let n_list = cfg.n_list.clone().unwrap();
            let table =
                convergence_table(&kernel, &f, &n_list, &domain, r_eval, quad).map_err(numeric)?;
            let fit = fit_rate(&table).map_err(numeric)?;
            let mut verdicts = Vec::new();
            match cfg.expected_alpha {
                Some(expected) => {
                    let tol_a = cfg.alpha_tol.unwrap_or(0.1);
                    verdicts.push(Verdict::new(
                        "alpha-match",
                        (fit.alpha - expected).abs() <= tol_a,
                        format!(
                            "alpha {:.4} vs expected {expected} +- {tol_a}, r^2 {:.6}",
                            fit.alpha, fit.r_squared
                        ),
                    ));
                }
                None => verdicts.push(Verdict::new(
                    "fit",
                    true,
                    format!("alpha {:.4}, r^2 {:.6}", fit.alpha, fit.r_squared),
                )),
            }
            let series = vec![Series {
                label: "sup_error".into(),
                points: table.rows.iter().map(|&(n, e)| (n as f64, e)).collect(),
            }];
            let title = format!(
                "{} on {}: alpha {:.3}",
                table.kernel_id, table.function_name, fit.alpha
            );
            Ok(Executed {
                files: vec![
                    ("converge.csv".into(), csv::converge_csv(&table)),
                    ("rate.csv".into(), csv::rate_csv(&fit)),
                ],
                plot: Some((series, title)),
                verdicts,
            })
        }
        ExperimentKind::Compose => {
            let f = cfg.build_function().map_err(CliError::Config)?;
            let n = cfg.n.unwrap();
            let (t, gamma) = (cfg.t.unwrap(), cfg.gamma.unwrap());
            let sched = schedule(n, t, gamma).map_err(numeric)?;
            let f0 = sample_to_grid(|x| f.eval(x), &domain, r_eval).map_err(numeric)?;
            let op = OperatorConfig::new(kernel.clone(), n, quad).map_err(numeric)?;
            let out = compose_refined(&op, &f0, sched.depth).map_err(numeric)?;
            let (amp_in, amp_out) = if d == 1 {
                (
                    Some(f0.first_mode_amplitude().map_err(numeric)?),
                    Some(out.first_mode_amplitude().map_err(numeric)?),
                )
            } else {
                (None, None)
            };
            let rec = csv::ComposeRecord {
                n,
                gamma,
                t,
                depth: sched.depth,
                amp_in,
                amp_out,
                sup_in: f0.sup_norm(),
                sup_out: out.sup_norm(),
            };
            let contraction = rec.sup_out <= rec.sup_in + 1e-12;
            Ok(Executed {
                files: vec![("compose.csv".into(), csv::compose_csv(&rec))],
                plot: None,
                verdicts: vec![Verdict::new(
                    "contraction",
                    contraction,
                    format!("sup {} -> {} over {} layers", rec.sup_in, rec.sup_out, rec.depth),
                )],
            })
        }
        ExperimentKind::PdeCompare => {
            let f = cfg.build_function().map_err(CliError::Config)?;
            let n_list = cfg.n_list.clone().unwrap();
            let (t, gamma) = (cfg.t.unwrap(), cfg.gamma.unwrap());
            let f0 = sample_to_grid(|x| f.eval(x), &domain, r_eval).map_err(numeric)?;
            let mut reports = Vec::new();
            for &n in &n_list {
                reports.push(compare(&kernel, n, t, gamma, &f0, quad).map_err(numeric)?);
            }
            let mut verdicts = Vec::new();
            if let Some(gap_tol) = cfg.gap_tol {
                let worst = reports.iter().map(|r| r.gap).fold(0.0f64, f64::max);
                verdicts.push(Verdict::new(
                    "gap-tolerance",
                    worst <= gap_tol,
                    format!("max gap {worst:.4e} vs {gap_tol:.4e}"),
                ));
            }
            if reports.len() >= 2 {
                let worst = reports
                    .windows(2)
                    .map(|w| w[1].gap - w[0].gap)
                    .fold(f64::NEG_INFINITY, f64::max);
                verdicts.push(Verdict::new(
                    "gap-monotone",
                    worst <= 1e-12,
                    format!("max gap increase {worst:.3e}"),
                ));
            }
            if verdicts.is_empty() {
                let gap = reports[0].gap;
                verdicts.push(Verdict::new("gap", true, format!("gap {gap:.4e}")));
            }
            let series = vec![Series {
                label: "gap".into(),
                points: reports.iter().map(|r| (r.n as f64, r.gap)).collect(),
            }];
            let title = format!("composition vs pde, gamma={gamma}, t={t}");
            Ok(Executed {
                files: vec![("pde-compare.csv".into(), csv::pde_compare_csv(&reports))],
                plot: Some((series, title)),
                verdicts,
            })
        }
    }
}
