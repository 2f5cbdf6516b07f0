//! CSV artifact writers.
//!
//! All real numbers are printed with 17 significant digits in scientific
//! notation, lines end with `\n`, and no locale formatting is involved, so a
//! given report always serializes to identical bytes.

use kkno::asymptotics::{BoundReport, ConvergenceTable, KorovkinReport, RateFit, VoronovskayaReport};
use kkno::kernels::{AdmissibilityReport, MomentReport};
use kkno::pde::ComparisonReport;

/// 17-significant-digit scientific notation.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn join_point(x: &[f64]) -> String {
    x.iter()
        .map(|v| fmt_real(*v))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn converge_csv(table: &ConvergenceTable) -> String {
    let mut out = String::from("n,sup_error\n");
    for (n, e) in &table.rows {
        out.push_str(&format!("{n},{}\n", fmt_real(*e)));
    }
    out
}

pub fn bound_csv(report: &BoundReport) -> String {
    let mut out = String::from("n,sup_error,bound,margin\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.n,
            fmt_real(r.error),
            fmt_real(r.bound),
            fmt_real(r.margin)
        ));
    }
    out
}

pub fn voronovskaya_csv(report: &VoronovskayaReport) -> String {
    let mut out = String::from("n,residual\n");
    for (n, r) in &report.rows {
        out.push_str(&format!("{n},{}\n", fmt_real(*r)));
    }
    out
}

pub fn korovkin_csv(report: &KorovkinReport) -> String {
    let mut out = String::from("monomial,n,sup_error\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{}\n",
            row.monomial,
            row.n,
            fmt_real(row.sup_error)
        ));
    }
    out
}

pub fn rate_csv(fit: &RateFit) -> String {
    format!(
        "alpha,intercept,r_squared\n{},{},{}\n",
        fmt_real(fit.alpha),
        fmt_real(fit.intercept),
        fmt_real(fit.r_squared)
    )
}

pub fn moments_csv(reports: &[MomentReport]) -> String {
    let mut out = String::from("x,component,value\n");
    for rep in reports {
        let x = join_point(&rep.point);
        let d = rep.first.len();
        out.push_str(&format!("{x},mass,{}\n", fmt_real(rep.mass)));
        for i in 0..d {
            out.push_str(&format!("{x},m1_{},{}\n", i + 1, fmt_real(rep.first[i])));
        }
        for i in 0..d {
            for j in 0..d {
                out.push_str(&format!(
                    "{x},m2_{}{},{}\n",
                    i + 1,
                    j + 1,
                    fmt_real(rep.second[i * d + j])
                ));
            }
        }
        out.push_str(&format!("{x},m3,{}\n", fmt_real(rep.third_abs)));
    }
    out
}

pub fn admissible_csv(report: &AdmissibilityReport) -> String {
    let mut out = String::from("condition,quantity,value,pass\n");
    out.push_str(&format!(
        "K1,mass_error,{},{}\n",
        fmt_real(report.mass_error),
        report.k1_pass
    ));
    let drift_sup = report
        .drift_vector
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    out.push_str(&format!(
        "K2,drift_sup,{},{}\n",
        fmt_real(drift_sup),
        report.k2_pass
    ));
    out.push_str(&format!(
        "K3,diffusion_bound,{},{}\n",
        fmt_real(report.diffusion_bound),
        report.k3_pass
    ));
    out
}

pub fn pde_compare_csv(reports: &[ComparisonReport]) -> String {
    let mut out = String::from("n,gamma,t,m,gap,amp_compose,amp_pde\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n,
            r.gamma,
            fmt_real(r.t),
            r.depth,
            fmt_real(r.gap),
            fmt_real(r.amp_compose.unwrap_or(f64::NAN)),
            fmt_real(r.amp_pde.unwrap_or(f64::NAN))
        ));
    }
    out
}

/// One-row record of a composition run.
pub struct ComposeRecord {
    pub n: u32,
    pub gamma: u8,
    pub t: f64,
    pub depth: usize,
    pub amp_in: Option<f64>,
    pub amp_out: Option<f64>,
    pub sup_in: f64,
    pub sup_out: f64,
}

pub fn compose_csv(rec: &ComposeRecord) -> String {
    format!(
        "n,gamma,t,m,amp_in,amp_out,sup_in,sup_out\n{},{},{},{},{},{},{},{}\n",
        rec.n,
        rec.gamma,
        fmt_real(rec.t),
        rec.depth,
        fmt_real(rec.amp_in.unwrap_or(f64::NAN)),
        fmt_real(rec.amp_out.unwrap_or(f64::NAN)),
        fmt_real(rec.sup_in),
        fmt_real(rec.sup_out)
    )
}
