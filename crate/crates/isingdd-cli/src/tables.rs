//! CSV and text tables for the single-shot subcommands.

use crate::{classify, CliResult};
use isingdd::analysis::fmt_num;
use isingdd::avgham::AvghamCheck;
use isingdd::pulse::{compute_coefficients, PulseShape};
use isingdd::scaling::{cluster_count_f64, mu_max, toric_budget};
use std::fmt::Write;

pub const COEFFS_HEADER: &str = "index,axis,phi0,peak_amplitude,upsilon,beta,xi,delta1,delta2,delta3,delta4,delta5";
pub const AVGHAM_HEADER: &str = "tau_p,residual,fitted_order";
pub const BOUNDS_HEADER: &str = "quantity,value";

pub fn coeffs_csv(shapes: &[PulseShape]) -> CliResult<String> {
    let mut out = format!("{COEFFS_HEADER}\n");
    for (i, s) in shapes.iter().enumerate() {
        let c = compute_coefficients(s).map_err(classify)?;
        let vals = [s.phi0, s.peak_amplitude(), c.upsilon, c.beta, c.xi, c.delta1, c.delta2, c.delta3, c.delta4, c.delta5];
        let cols: Vec<String> = vals.iter().map(|v| fmt_num(*v)).collect();
        let _ = writeln!(out, "{i},{},{}", s.axis, cols.join(","));
    }
    Ok(out)
}

pub fn avgham_csv(check: &AvghamCheck) -> String {
    let mut out = format!("{AVGHAM_HEADER}\n");
    for (t, r) in check.tau_p.iter().zip(&check.residual) {
        let _ = writeln!(out, "{},{},{}", fmt_num(*t), fmt_num(*r), fmt_num(check.fitted_order));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsArgs {
    pub z: usize,
    pub k: usize,
    pub mu: f64,
    pub c: f64,
    pub p_c: f64,
    pub nrep: usize,
    pub max_sites: usize,
}

/// `(quantity, value)` rows of the error budget.
pub fn bounds_rows(a: &BoundsArgs) -> CliResult<Vec<(String, f64)>> {
    let b = toric_budget(a.nrep, a.p_c, a.k, a.c, a.mu).map_err(classify)?;
    let mut rows = vec![
        ("z".to_string(), a.z as f64),
        ("K".into(), a.k as f64),
        ("mu".into(), a.mu),
        ("C".into(), a.c),
        ("p_c".into(), a.p_c),
        ("nrep".into(), a.nrep as f64),
        ("mu_max".into(), mu_max(a.z).map_err(classify)?),
        ("tau_cyc".into(), b.tau_cyc),
        ("alpha_c".into(), b.alpha_c),
        ("nrep_c".into(), b.nrep_c),
        ("f_gate_at_alpha_c".into(), b.f_gate_at_alpha_c),
    ];
    for s in 1..=a.max_sites {
        rows.push((format!("clusters_s{s}"), cluster_count_f64(a.z, s).map_err(classify)?));
    }
    Ok(rows)
}

pub fn bounds_csv(rows: &[(String, f64)]) -> String {
    let mut out = format!("{BOUNDS_HEADER}\n");
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{}", fmt_num(*v));
    }
    out
}

pub fn bounds_text(rows: &[(String, f64)]) -> String {
    let w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<w$}  {v:.6e}");
    }
    out
}
