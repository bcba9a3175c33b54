//! Config-driven runs: one sweep per series, optional weight spectra, a
//! summary and a manifest.

use crate::config::{default_targets, ExperimentConfig, SeriesConfig};
use crate::manifest::{write_manifest, Manifest};
use crate::{classify, CliError, CliResult};
use isingdd::analysis::{
    gate_report, plateau_slope, sweep, sweep_csv, weights_csv, GateReport, ReportMeta, SweepRow, SWEEP_HEADER,
};
use isingdd::network::{DisorderModel, QubitGraph};
use isingdd::sequences::{compose_gate, GateKind, PulseLibrary, Schedule};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Half-decade window when the grid is quarter-decade spaced.
pub const PLATEAU_WINDOW: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub label: String,
    pub n: usize,
    pub targets: Vec<usize>,
    pub pulse_order: Option<usize>,
    /// Largest windowed log-log slope, with its `Δ_rms` range.
    pub plateau_slope: Option<f64>,
    pub plateau_range: Option<(f64, f64)>,
    pub infidelity_at_zero: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub series: Vec<SeriesSummary>,
}

/// A compiled series: graph, schedule and its metadata.
pub struct Prepared {
    pub gate: GateKind,
    pub graph: QubitGraph,
    pub schedule: Schedule,
    pub targets: Vec<usize>,
    pub pulse_order: Option<usize>,
}

/// Compiles one series, reusing library shapes across series of one order.
pub fn prepare(cfg: &ExperimentConfig, series: &SeriesConfig, libs: &mut BTreeMap<Option<usize>, PulseLibrary>) -> CliResult<Prepared> {
    let graph = series.graph.build(cfg.nrep)?;
    let targets = series.targets.clone().unwrap_or_else(|| default_targets(cfg.gate.kind, series.graph.kind, graph.n));
    let spec = cfg.gate_spec(targets.clone());
    let key = series.pulse.order;
    let lib = match (key, libs.get_mut(&key)) {
        (Some(_), Some(lib)) => {
            for a in isingdd::sequences::required_angles(&spec) {
                lib.add_angle(a).map_err(classify)?;
            }
            lib.clone()
        }
        _ => {
            let (lib, _) = series.pulse.library(&spec)?;
            if key.is_some() {
                libs.insert(key, lib.clone());
            }
            lib
        }
    };
    let schedule = compose_gate(&spec, &graph, &lib).map_err(classify)?;
    Ok(Prepared { gate: cfg.gate.kind, graph, schedule, targets, pulse_order: key })
}

pub fn run_sweep(cfg: &ExperimentConfig, p: &Prepared) -> CliResult<Vec<SweepRow>> {
    let disorder = DisorderModel { delta_rms: 0.0, seed: cfg.disorder.seed, num_draws: cfg.disorder.num_draws };
    Ok(sweep(&p.schedule, &p.graph, &cfg.delta_grid, &disorder, cfg.steps_per_tau_p)?)
}

/// Report for draw 0 of the disorder stream at `delta_rms`.
pub fn single_report(p: &Prepared, delta_rms: f64, seed: u64, nrep: usize, steps: usize) -> CliResult<GateReport> {
    let deltas = DisorderModel { delta_rms, seed, num_draws: 1 }.draw(0, p.graph.n);
    let meta = ReportMeta { gate: p.gate, delta_rms, seed, nrep, pulse_order: p.pulse_order };
    Ok(gate_report(&p.schedule, &p.graph, &deltas, steps, meta)?)
}

fn write(dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> CliResult<()> {
    std::fs::write(dir.join(name), contents)?;
    files.push(PathBuf::from(name));
    Ok(())
}

/// Runs every series and writes the artifacts into `out_dir` (or the
/// configured directory). Outputs depend only on the config.
pub fn run(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> CliResult<RunSummary> {
    cfg.validate()?;
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.dir.clone());
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;

    let mut libs = BTreeMap::new();
    let prepared: Vec<Prepared> = cfg.series.iter().map(|s| prepare(cfg, s, &mut libs)).collect::<CliResult<_>>()?;

    let mut files = Vec::new();
    let mut combined = String::from(SWEEP_HEADER);
    combined.push('\n');
    let mut summaries = Vec::new();
    for (series, p) in cfg.series.iter().zip(&prepared) {
        let rows = run_sweep(cfg, p)?;
        let csv = sweep_csv(&rows, p.graph.n, cfg.gate.kind, p.pulse_order, cfg.nrep, cfg.disorder.seed);
        if cfg.output.combined.is_some() {
            combined.push_str(csv.split_once('\n').map(|x| x.1).unwrap_or(""));
        } else {
            write(&dir, &format!("{}_sweep.csv", series.label), &csv, &mut files)?;
        }
        if let Some(w) = &cfg.weights {
            let report = single_report(p, w.delta_rms, cfg.disorder.seed, cfg.nrep, cfg.steps_per_tau_p)?;
            if let Some(spec) = &report.weight_spectrum {
                write(&dir, &format!("{}_weights.csv", series.label), &weights_csv(spec, &report.meta), &mut files)?;
            }
        }
        let xs: Vec<f64> = rows.iter().map(|r| r.delta_rms).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.mean_infidelity).collect();
        let plateau = plateau_slope(&xs, &ys, PLATEAU_WINDOW).ok();
        summaries.push(SeriesSummary {
            label: series.label.clone(),
            n: p.graph.n,
            targets: p.targets.clone(),
            pulse_order: p.pulse_order,
            plateau_slope: plateau.map(|x| x.0),
            plateau_range: plateau.map(|x| (x.1, x.2)),
            infidelity_at_zero: rows.iter().find(|r| r.delta_rms == 0.0).map(|r| r.mean_infidelity),
            warnings: p.schedule.warnings.clone(),
        });
    }
    if let Some(name) = &cfg.output.combined {
        write(&dir, name, &combined, &mut files)?;
    }
    let summary = RunSummary { name: cfg.name.clone(), series: summaries };
    let text = serde_json::to_string_pretty(&summary).expect("summary serialises") + "\n";
    write(&dir, "summary.json", &text, &mut files)?;
    let manifest = Manifest::build(cfg, &dir, &files)?;
    write_manifest(&dir, &manifest)?;
    Ok(summary)
}
