//! Gate fidelity, Pauli error-weight spectra, disorder sweeps and log-log
//! slopes.

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::network::{DisorderModel, QubitGraph};
use crate::propagator::{simulate, DEFAULT_STEPS};
use crate::sequences::{GateKind, Schedule};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Infidelities below this are at the double-precision integration limit.
pub const INFIDELITY_FLOOR: f64 = 1e-13;
pub const MAX_WEIGHT_QUBITS: usize = 6;
/// Label for the weight definition used in outputs.
pub const WEIGHT_CONVENTION: &str = "sum of |c_P|^2 over Pauli words of weight w, c_P = Tr(P^dagger V)/N";

/// `F = (N + |Tr V|²)/(N + N²)` with `V = U_ideal† U`.
pub fn fidelity(u_ideal: &CMat, u: &CMat) -> Result<f64> {
    if u_ideal.shape() != u.shape() || u.nrows() != u.ncols() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", u_ideal.shape(), u.shape())));
    }
    let n = u.nrows() as f64;
    let tr = crate::linalg::hs_inner(u_ideal, u);
    Ok((n + tr.norm_sqr()) / (n + n * n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSpectrum {
    pub n: usize,
    /// `|c_𝟙|²`.
    pub identity: f64,
    /// `absolute[w]` for `w = 1..=n` (index 0 unused, always 0).
    pub absolute: Vec<f64>,
    /// `absolute[w] / Σ_{w≥1} absolute`; zeros when `V ∝ 𝟙`.
    pub relative: Vec<f64>,
}

/// Expansion `V = Σ_P c_P P` over all `4ⁿ` Pauli words, grouped by weight.
pub fn pauli_weight_spectrum(v: &CMat) -> Result<WeightSpectrum> {
    let dim = v.nrows();
    if dim == 0 || !dim.is_power_of_two() || v.ncols() != dim {
        return Err(Error::DimensionMismatch(format!("{}×{} is not a qubit operator", v.nrows(), v.ncols())));
    }
    let n = dim.trailing_zeros() as usize;
    if n > MAX_WEIGHT_QUBITS {
        return Err(Error::DimensionOverflow(n));
    }
    let mut absolute = vec![0.0; n + 1];
    let mut identity = 0.0;
    // A word is (x-mask, z-mask); P|c⟩ = i^{#Y} (−1)^{popcount(c & zmask)} |c ⊕ xmask⟩.
    for xm in 0..dim {
        for zm in 0..dim {
            let ny = (xm & zm).count_ones();
            let iy = crate::linalg::I.powu(ny);
            let mut tr = crate::linalg::ZERO;
            for c in 0..dim {
                let sign = if (c & zm).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                let p = iy * sign;
                tr += p.conj() * v[(c ^ xm, c)];
            }
            let w = (xm | zm).count_ones() as usize;
            let c2 = tr.norm_sqr() / (dim * dim) as f64;
            if w == 0 {
                identity = c2;
            } else {
                absolute[w] += c2;
            }
        }
    }
    let total: f64 = absolute.iter().sum();
    let relative = absolute.iter().map(|a| if total > 0.0 { a / total } else { 0.0 }).collect();
    Ok(WeightSpectrum { n, identity, absolute, relative })
}

impl WeightSpectrum {
    /// `1 − F` implied by the spectrum, `N(1 − |c_𝟙|²)/(N + 1)`.
    pub fn infidelity(&self) -> f64 {
        let n = (1usize << self.n) as f64;
        n * (1.0 - self.identity) / (n + 1.0)
    }

    pub fn total(&self) -> f64 {
        self.identity + self.absolute.iter().sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub gate: GateKind,
    pub delta_rms: f64,
    pub seed: u64,
    pub nrep: usize,
    /// `None` for user-supplied shapes.
    pub pulse_order: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub n: usize,
    pub fidelity: f64,
    pub infidelity: f64,
    /// Infidelity below [`INFIDELITY_FLOOR`].
    pub censored: bool,
    pub weight_spectrum: Option<WeightSpectrum>,
    pub weight_convention: String,
    pub unitarity_defect: f64,
    pub duration: f64,
    pub steps_per_tau_p: usize,
    pub warnings: Vec<String>,
    #[serde(flatten)]
    pub meta: ReportMeta,
    #[serde(skip)]
    pub unitary: Option<CMat>,
}

/// Simulates `schedule` with the given chemical shifts and scores it.
pub fn gate_report(schedule: &Schedule, graph: &QubitGraph, deltas: &[f64], steps: usize, meta: ReportMeta) -> Result<GateReport> {
    let res = simulate(schedule, graph, deltas, steps)?;
    let f = fidelity(&schedule.ideal_unitary, &res.matrix)?;
    let v = schedule.ideal_unitary.adjoint() * &res.matrix;
    let spectrum = if graph.n <= MAX_WEIGHT_QUBITS {
        let s = pauli_weight_spectrum(&v)?;
        let gap = (s.infidelity() - (1.0 - f)).abs();
        if gap > 1e-9 || (s.total() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("weight spectrum inconsistent with fidelity (gap {gap:e})")));
        }
        Some(s)
    } else {
        None
    };
    let infidelity = 1.0 - f;
    Ok(GateReport {
        n: graph.n,
        fidelity: f,
        infidelity,
        censored: infidelity < INFIDELITY_FLOOR,
        weight_spectrum: spectrum,
        weight_convention: WEIGHT_CONVENTION.to_string(),
        unitarity_defect: res.unitarity_defect,
        duration: schedule.total_duration,
        steps_per_tau_p: steps,
        warnings: schedule.warnings.clone(),
        meta,
        unitary: Some(res.matrix),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta_rms: f64,
    pub mean_infidelity: f64,
    pub stderr: f64,
    /// Local log-log slope; `None` at censored points.
    pub slope: Option<f64>,
    pub draws: usize,
}

/// Mean infidelity over `disorder.num_draws` chemical-shift draws at every
/// `Δ_rms` in `grid`. Draw `k` uses the same unit-variance vector at every
/// grid point, scaled by `Δ_rms`. A `Δ_rms = 0` point is a single run.
pub fn sweep(schedule: &Schedule, graph: &QubitGraph, grid: &[f64], disorder: &DisorderModel, steps: usize) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty Δ grid".into()));
    }
    if grid.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::InvalidInput("Δ grid entries must be finite and non-negative".into()));
    }
    if disorder.num_draws == 0 {
        return Err(Error::InvalidInput("need at least one disorder draw".into()));
    }
    let n = graph.n;
    let tasks: Vec<(usize, usize)> = grid
        .iter()
        .enumerate()
        .flat_map(|(g, &d)| {
            let draws = if d == 0.0 { 1 } else { disorder.num_draws };
            (0..draws).map(move |k| (g, k))
        })
        .collect();
    let results: Vec<Result<f64>> = tasks
        .par_iter()
        .map(|&(g, k)| {
            let deltas: Vec<f64> = DisorderModel::unit_draw(disorder.seed, k, n).iter().map(|x| x * grid[g]).collect();
            let u = simulate(schedule, graph, &deltas, steps)?;
            Ok(1.0 - fidelity(&schedule.ideal_unitary, &u.matrix)?)
        })
        .collect();
    let mut per_point: Vec<Vec<f64>> = vec![Vec::new(); grid.len()];
    for (&(g, _), r) in tasks.iter().zip(results) {
        per_point[g].push(r?);
    }
    let mut rows: Vec<SweepRow> = grid
        .iter()
        .zip(&per_point)
        .map(|(&d, vals)| {
            let m = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / m;
            let stderr = if vals.len() > 1 {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt() / m.sqrt()
            } else {
                0.0
            };
            SweepRow { delta_rms: d, mean_infidelity: mean, stderr, slope: None, draws: vals.len() }
        })
        .collect();
    if rows.len() >= 3 {
        let xs: Vec<f64> = rows.iter().map(|r| r.delta_rms).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.mean_infidelity).collect();
        for (row, s) in rows.iter_mut().zip(loglog_slope(&xs, &ys)?) {
            row.slope = s;
        }
    }
    Ok(rows)
}

/// Default step count for sweeps.
pub const SWEEP_STEPS: usize = DEFAULT_STEPS;

/// Local slope of `log y` against `log x`: centred differences inside,
/// one-sided at the ends. Points with `x ≤ 0` or `y` below the floor are
/// excluded and get `None`; neighbours skip over them.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<Vec<Option<f64>>> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(format!("{} abscissae, {} values", xs.len(), ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 points, got {}", xs.len())));
    }
    let ok: Vec<usize> = (0..xs.len()).filter(|&i| xs[i] > 0.0 && ys[i] >= INFIDELITY_FLOOR && ys[i].is_finite()).collect();
    let mut out = vec![None; xs.len()];
    if ok.len() < 2 {
        return Ok(out);
    }
    let lx = |i: usize| xs[i].ln();
    let ly = |i: usize| ys[i].ln();
    for (p, &i) in ok.iter().enumerate() {
        let (a, b) = if p == 0 {
            (ok[0], ok[1])
        } else if p == ok.len() - 1 {
            (ok[p - 1], ok[p])
        } else {
            (ok[p - 1], ok[p + 1])
        };
        out[i] = Some((ly(b) - ly(a)) / (lx(b) - lx(a)));
    }
    Ok(out)
}

/// Least-squares slope of `log y` against `log x` over the points with
/// `x ∈ [lo, hi]` above the floor.
pub fn fit_slope(xs: &[f64], ys: &[f64], lo: f64, hi: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(&x, &y)| x >= lo && x <= hi && x > 0.0 && y >= INFIDELITY_FLOOR)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidInput(format!("only {} usable points in [{lo}, {hi}]", pts.len())));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Largest least-squares log-log slope over `window` consecutive usable
/// points, with the window's `Δ` range.
pub fn plateau_slope(xs: &[f64], ys: &[f64], window: usize) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(format!("{} abscissae, {} values", xs.len(), ys.len())));
    }
    if window < 2 {
        return Err(Error::InvalidInput(format!("window must hold at least 2 points, got {window}")));
    }
    let ok: Vec<usize> = (0..xs.len()).filter(|&i| xs[i] > 0.0 && ys[i] >= INFIDELITY_FLOOR && ys[i].is_finite()).collect();
    if ok.len() < window {
        return Err(Error::InvalidInput(format!("only {} usable points for a window of {window}", ok.len())));
    }
    let mut best: Option<(f64, f64, f64)> = None;
    for w in ok.windows(window) {
        let (lo, hi) = (xs[w[0]], xs[w[window - 1]]);
        let s = fit_slope(xs, ys, lo, hi)?;
        if best.is_none_or(|b| s > b.0) {
            best = Some((s, lo, hi));
        }
    }
    Ok(best.expect("at least one window"))
}

/// `%.17g`-equivalent scientific formatting used in every CSV.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub const SWEEP_HEADER: &str = "delta_rms,mean_infidelity,stderr,slope,n,gate,pulse_order,nrep,seed";

fn gate_name(g: GateKind) -> String {
    serde_json::to_value(g).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn order_name(order: Option<usize>) -> String {
    order.map(|o| o.to_string()).unwrap_or_else(|| "custom".into())
}

/// Sweep table as CSV.
pub fn sweep_csv(rows: &[SweepRow], n: usize, gate: GateKind, pulse_order: Option<usize>, nrep: usize, seed: u64) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt_num(r.delta_rms),
            fmt_num(r.mean_infidelity),
            fmt_num(r.stderr),
            r.slope.map(fmt_num).unwrap_or_default(),
            n,
            gate_name(gate),
            order_name(pulse_order),
            nrep,
            seed
        );
    }
    out
}

pub const WEIGHTS_HEADER: &str = "n,weight,absolute,relative,gate,pulse_order,nrep,delta_rms,seed";

/// Weight spectrum rows `w = 1..=n`.
pub fn weights_csv(spec: &WeightSpectrum, meta: &ReportMeta) -> String {
    let mut out = String::from(WEIGHTS_HEADER);
    out.push('\n');
    for w in 1..=spec.n {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            spec.n,
            w,
            fmt_num(spec.absolute[w]),
            fmt_num(spec.relative[w]),
            gate_name(meta.gate),
            order_name(meta.pulse_order),
            meta.nrep,
            fmt_num(meta.delta_rms),
            meta.seed
        );
    }
    out
}
