//! `ExperimentConfig` and the shorthand resolvers shared with the subcommands.

use crate::{classify, CliError, CliResult};
use isingdd::network::{GraphKind, GraphSpec, QubitGraph, Sublattice};
use isingdd::pulse::PulseShape;
use isingdd::sequences::{design_coupling, GateKind, GateSpec, PulseLibrary};
use isingdd::Axis;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

pub const DEFAULT_STEPS: usize = isingdd::propagator::DEFAULT_STEPS;

fn default_nrep() -> usize {
    5
}

fn default_steps() -> usize {
    DEFAULT_STEPS
}

fn default_tau1() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub gate: GateConfig,
    #[serde(default = "default_nrep")]
    pub nrep: usize,
    pub series: Vec<SeriesConfig>,
    pub delta_grid: Vec<f64>,
    pub disorder: DisorderConfig,
    #[serde(default = "default_steps")]
    pub steps_per_tau_p: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightsConfig>,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateConfig {
    pub kind: GateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    #[serde(default = "default_tau1")]
    pub tau1: f64,
    #[serde(default)]
    pub symmetrized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub label: String,
    pub graph: GraphConfig,
    /// Defaults per graph, see [`default_targets`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<usize>>,
    pub pulse: PulseConfig,
}

/// Like the graph file format, with `J` defaulting to `π/(16 N_rep)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub kind: GraphKind,
    pub n: usize,
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<Sublattice>>,
}

/// Exactly one of `order` (library shapes) or `shapes` (JSON file with an
/// array of shape records).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shapes: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderConfig {
    pub seed: u64,
    pub num_draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    /// Draw 0 of the disorder stream at this `Δ_rms`.
    pub delta_rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Single CSV holding every series; otherwise one `<label>_sweep.csv` each.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combined: Option<String>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn safe_file_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.')) && !s.starts_with('.')
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| bad(format!("config does not match the schema: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks everything the schema cannot express.
    pub fn validate(&self) -> CliResult<()> {
        if self.delta_grid.is_empty() {
            return Err(bad("delta_grid is empty"));
        }
        if let Some(d) = self.delta_grid.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(bad(format!("delta_grid entry {d} is not a finite non-negative number")));
        }
        if self.disorder.num_draws == 0 {
            return Err(bad("disorder.num_draws must be positive"));
        }
        if self.steps_per_tau_p == 0 {
            return Err(bad("steps_per_tau_p must be positive"));
        }
        if self.nrep == 0 {
            return Err(bad("nrep must be positive"));
        }
        if self.series.is_empty() {
            return Err(bad("series is empty"));
        }
        let mut labels = BTreeSet::new();
        for s in &self.series {
            if !safe_file_name(&s.label) {
                return Err(bad(format!("series label {:?} must be a plain file-name stem", s.label)));
            }
            if !labels.insert(s.label.as_str()) {
                return Err(bad(format!("duplicate series label {:?}", s.label)));
            }
            match (&s.pulse.order, &s.pulse.shapes) {
                (Some(o), None) if *o <= 2 => {}
                (Some(o), None) => return Err(bad(format!("pulse order {o} is not in 0..=2"))),
                (None, Some(_)) => {}
                _ => return Err(bad(format!("series {:?}: give exactly one of pulse.order and pulse.shapes", s.label))),
            }
            if let Some(j) = s.graph.coupling {
                if !j.is_finite() {
                    return Err(bad(format!("series {:?}: J is not finite", s.label)));
                }
            }
        }
        if let Some(name) = &self.output.combined {
            if !safe_file_name(name) {
                return Err(bad(format!("output.combined {name:?} must be a plain file name")));
            }
        }
        if let Some(w) = &self.weights {
            if !(w.delta_rms.is_finite() && w.delta_rms >= 0.0) {
                return Err(bad(format!("weights.delta_rms {} is not a finite non-negative number", w.delta_rms)));
            }
        }
        Ok(())
    }

    /// Hash input: the parsed config re-serialised, so formatting does not matter.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }

    pub fn gate_spec(&self, targets: Vec<usize>) -> GateSpec {
        GateSpec {
            kind: self.gate.kind,
            targets,
            axis: self.gate.axis,
            angle: self.gate.angle,
            nrep: self.nrep,
            tau1: self.gate.tau1,
            symmetrized: self.gate.symmetrized,
        }
    }
}

impl GraphConfig {
    pub fn build(&self, nrep: usize) -> CliResult<QubitGraph> {
        let spec = GraphSpec {
            kind: self.kind,
            n: self.n,
            coupling: self.coupling.unwrap_or_else(|| design_coupling(nrep)),
            edges: self.edges.clone(),
            labels: self.labels.clone(),
        };
        spec.build().map_err(classify)
    }
}

/// Star: a leaf controls the hub. Chain: the middle bond. Single-qubit
/// gates: qubit 0.
pub fn default_targets(kind: GateKind, graph_kind: GraphKind, n: usize) -> Vec<usize> {
    match kind {
        GateKind::Rotation | GateKind::Hadamard => vec![0],
        _ => match graph_kind {
            GraphKind::Star => vec![1, 0],
            _ if n >= 2 => vec![n / 2 - 1, n / 2],
            _ => vec![0, 1],
        },
    }
}

/// `star6`, `chain4`, … or a path to a graph JSON file.
pub fn parse_graph(arg: &str, coupling: Option<f64>) -> CliResult<GraphConfig> {
    for (prefix, kind) in [("star", GraphKind::Star), ("chain", GraphKind::Chain)] {
        if let Some(rest) = arg.strip_prefix(prefix) {
            if let Ok(n) = rest.parse::<usize>() {
                return Ok(GraphConfig { kind, n, coupling, edges: None, labels: None });
            }
        }
    }
    let text = std::fs::read_to_string(arg).map_err(|e| bad(format!("graph {arg:?} is neither starN/chainN nor a readable file: {e}")))?;
    let spec: GraphSpec = serde_json::from_str(&text).map_err(|e| bad(format!("graph file {arg}: {e}")))?;
    Ok(GraphConfig { kind: spec.kind, n: spec.n, coupling: Some(coupling.unwrap_or(spec.coupling)), edges: spec.edges, labels: spec.labels })
}

/// `order0`, `order1`, `order2` (or `gaussian` for order 0), or a shape file.
pub fn parse_pulse(arg: &str) -> CliResult<PulseConfig> {
    let order = match arg {
        "gaussian" | "order0" => Some(0),
        "order1" => Some(1),
        "order2" => Some(2),
        _ => None,
    };
    Ok(match order {
        Some(o) => PulseConfig { order: Some(o), shapes: None },
        None => PulseConfig { order: None, shapes: Some(PathBuf::from(arg)) },
    })
}

impl PulseConfig {
    /// The library plus the order recorded in reports (`None` for files).
    pub fn library(&self, gate: &GateSpec) -> CliResult<(PulseLibrary, Option<usize>)> {
        if let Some(o) = self.order {
            let mut lib = PulseLibrary::new(o).map_err(classify)?;
            for a in isingdd::sequences::required_angles(gate) {
                lib.add_angle(a).map_err(classify)?;
            }
            return Ok((lib, Some(o)));
        }
        let path = self.shapes.as_ref().ok_or_else(|| bad("pulse needs an order or a shape file"))?;
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read shape file {}: {e}", path.display())))?;
        let shapes: Vec<PulseShape> = match serde_json::from_str::<Vec<PulseShape>>(&text) {
            Ok(v) => v,
            Err(_) => vec![serde_json::from_str::<PulseShape>(&text).map_err(|e| bad(format!("shape file {}: {e}", path.display())))?],
        };
        Ok((PulseLibrary::from_shapes(shapes).map_err(classify)?, None))
    }
}
