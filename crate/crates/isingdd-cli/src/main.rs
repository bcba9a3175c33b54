use clap::{Args, Parser, Subcommand};
use isingdd::analysis::{sweep_csv, weights_csv};
use isingdd::avgham::{avgham_check, BathSpec, CheckSubject, DcgVariant};
use isingdd::propagator::write_unitary;
use isingdd::pulse::{find_self_refocusing, PulseShape};
use isingdd::sequences::{GateKind, PulseLibrary};
use isingdd::Axis;
use isingdd_cli::config::{
    parse_graph, parse_pulse, DisorderConfig, ExperimentConfig, GateConfig, OutputConfig, SeriesConfig, DEFAULT_STEPS,
};
use isingdd_cli::experiment::{prepare, run, run_sweep, single_report, Prepared};
use isingdd_cli::tables::{avgham_csv, bounds_csv, bounds_rows, bounds_text, coeffs_csv, BoundsArgs};
use isingdd_cli::{classify, init_threads, CliError, CliResult};
use serde::de::DeserializeOwned;
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "isingdd", version, about = "Dynamically corrected gates on Ising-coupled qubit networks")]
struct Cli {
    /// Worker threads (falls back to ISINGDD_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Magnus coefficient table of pulse shapes.
    Coeffs {
        /// order0, order1, order2, gaussian, square or a shape JSON file.
        #[arg(long, default_value = "order2")]
        pulse: String,
        /// Rotation angles for generated shapes.
        #[arg(long, value_delimiter = ',', default_values_t = [PI, FRAC_PI_2])]
        angle: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Searches a self-refocusing shape and prints it as JSON.
    FindPulse {
        #[arg(long)]
        order: usize,
        #[arg(long, default_value_t = PI)]
        angle: f64,
        /// Harmonics in the expansion (default: order + 1).
        #[arg(long)]
        harmonics: Option<usize>,
        #[arg(long, default_value = "x")]
        axis: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One disorder draw: gate report JSON.
    Simulate {
        #[command(flatten)]
        gate: GateArgs,
        #[arg(long, default_value_t = 0.0)]
        delta_rms: f64,
        /// Segment table CSV.
        #[arg(long)]
        emit_schedule: Option<PathBuf>,
        /// Binary unitary dump (IDDU header, little-endian complex pairs).
        #[arg(long)]
        dump_unitary: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean infidelity over a Δ_rms grid.
    Sweep {
        #[command(flatten)]
        gate: GateArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 50)]
        draws: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pauli-weight spectrum of the error unitary for one disorder draw.
    Weights {
        #[command(flatten)]
        gate: GateArgs,
        #[arg(long, default_value_t = 0.01)]
        delta_rms: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Numerical against closed-form average Hamiltonian.
    AvghamCheck {
        /// pulse, full_euler, partial_euler, y3p or y3p_symmetrized.
        #[arg(long, default_value = "pulse")]
        subject: String,
        #[arg(long, default_value = "order2")]
        pulse: String,
        #[arg(long, default_value_t = FRAC_PI_2)]
        angle: f64,
        /// Truncation order of the expansion.
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, default_value_t = 2)]
        bath_dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_values_t = [1e-3, 3.1622776601683795e-3, 1e-2, 3.1622776601683794e-2, 1e-1])]
        taus: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_STEPS)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster-expansion error budget.
    Bounds {
        #[arg(long, default_value_t = 4)]
        z: usize,
        #[arg(long = "K", default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 10.0)]
        mu: f64,
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 0.01)]
        pc: f64,
        #[arg(long, default_value_t = 5)]
        nrep: usize,
        /// Largest cluster size tabulated.
        #[arg(long, default_value_t = 6)]
        max_sites: usize,
        /// CSV instead of the aligned table.
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs an experiment config and writes its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GateArgs {
    /// rotation, hadamard, cnot, cy, cz, swap or zz.
    #[arg(long, default_value = "cnot")]
    gate: String,
    /// starN, chainN or a graph JSON file.
    #[arg(long, default_value = "star6")]
    graph: String,
    /// Coupling J (default π/(16 N_rep)).
    #[arg(long)]
    coupling: Option<f64>,
    #[arg(long, default_value_t = 5)]
    nrep: usize,
    /// order0, order1, order2, gaussian or a shape JSON file.
    #[arg(long, default_value = "order2")]
    pulse: String,
    /// Comma-separated qubits, e.g. control,target.
    #[arg(long, value_delimiter = ',')]
    targets: Option<Vec<usize>>,
    #[arg(long)]
    axis: Option<String>,
    #[arg(long)]
    angle: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    tau1: f64,
    #[arg(long)]
    symmetrized: bool,
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GridArgs {
    /// Explicit comma-separated Δ_rms values.
    #[arg(long, value_delimiter = ',', conflicts_with = "log_grid")]
    grid: Option<Vec<f64>>,
    /// LO,HI,N: N log-spaced points from LO to HI.
    #[arg(long, value_delimiter = ',')]
    log_grid: Option<Vec<f64>>,
}

fn parse_name<T: DeserializeOwned>(what: &str, s: &str) -> CliResult<T> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| CliError::Config(format!("unknown {what} {s:?}")))
}

impl GateArgs {
    fn config(&self, grid: Vec<f64>, draws: usize) -> CliResult<ExperimentConfig> {
        let kind: GateKind = parse_name("gate", &self.gate)?;
        let axis: Option<Axis> = self.axis.as_deref().map(|a| parse_name("axis", a)).transpose()?;
        let cfg = ExperimentConfig {
            name: "cli".into(),
            gate: GateConfig { kind, axis, angle: self.angle, tau1: self.tau1, symmetrized: self.symmetrized },
            nrep: self.nrep,
            series: vec![SeriesConfig {
                label: "cli".into(),
                graph: parse_graph(&self.graph, self.coupling)?,
                targets: self.targets.clone(),
                pulse: parse_pulse(&self.pulse)?,
            }],
            delta_grid: grid,
            disorder: DisorderConfig { seed: self.seed, num_draws: draws },
            steps_per_tau_p: self.steps,
            weights: None,
            output: OutputConfig { dir: PathBuf::from("."), combined: None },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn prepared(&self, grid: Vec<f64>, draws: usize) -> CliResult<(ExperimentConfig, Prepared)> {
        let cfg = self.config(grid, draws)?;
        let p = prepare(&cfg, &cfg.series[0], &mut BTreeMap::new())?;
        Ok((cfg, p))
    }
}

impl GridArgs {
    fn values(&self) -> CliResult<Vec<f64>> {
        match (&self.grid, &self.log_grid) {
            (Some(g), _) => Ok(g.clone()),
            (None, Some(l)) => {
                if l.len() != 3 {
                    return Err(CliError::Config(format!("--log-grid takes LO,HI,N, got {l:?}")));
                }
                let (lo, hi, n) = (l[0], l[1], l[2]);
                if !(lo > 0.0 && hi >= lo && n >= 1.0 && n.fract() == 0.0) {
                    return Err(CliError::Config(format!("--log-grid needs 0 < LO ≤ HI and an integer N ≥ 1, got {l:?}")));
                }
                let n = n as usize;
                if n == 1 {
                    return Ok(vec![lo]);
                }
                let step = (hi / lo).log10() / (n - 1) as f64;
                Ok((0..n).map(|i| lo * 10f64.powf(step * i as f64)).collect())
            }
            (None, None) => Err(CliError::Config("give --grid or --log-grid".into())),
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn coeff_shapes(pulse: &str, angles: &[f64]) -> CliResult<Vec<PulseShape>> {
    let angles: Vec<f64> = angles.iter().map(|a| a.abs()).collect();
    if angles.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(CliError::Config(format!("angles must be finite and non-zero, got {angles:?}")));
    }
    match pulse {
        "gaussian" => Ok(angles.iter().map(|a| PulseShape::gaussian_like(Axis::X, *a)).collect()),
        "square" => Ok(angles.iter().map(|a| PulseShape::square(Axis::X, *a)).collect()),
        "order0" | "order1" | "order2" => {
            let order = pulse[5..].parse::<usize>().expect("order digit");
            angles.iter().map(|a| PulseLibrary::shape_for(order, *a).map_err(classify)).collect()
        }
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read shape file {path}: {e}")))?;
            match serde_json::from_str::<Vec<PulseShape>>(&text) {
                Ok(v) => Ok(v),
                Err(_) => serde_json::from_str::<PulseShape>(&text)
                    .map(|s| vec![s])
                    .map_err(|e| CliError::Config(format!("shape file {path}: {e}"))),
            }
        }
    }
}

fn check_subject(s: &str) -> CliResult<CheckSubject> {
    if s == "pulse" {
        return Ok(CheckSubject::Pulse);
    }
    parse_name::<DcgVariant>("check subject", s).map(CheckSubject::Dcg)
}

fn execute(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Coeffs { pulse, angle, out } => emit(out.as_deref(), &coeffs_csv(&coeff_shapes(&pulse, &angle)?)?),
        Command::FindPulse { order, angle, harmonics, axis, out } => {
            let axis: Axis = parse_name("axis", &axis)?;
            let shape = find_self_refocusing(order, angle, harmonics.unwrap_or(order + 1)).map_err(classify)?.with_axis(axis);
            emit(out.as_deref(), &(serde_json::to_string_pretty(&shape).expect("shape serialises") + "\n"))
        }
        Command::Simulate { gate, delta_rms, emit_schedule, dump_unitary, out } => {
            let (cfg, p) = gate.prepared(vec![delta_rms], 1)?;
            if let Some(path) = &emit_schedule {
                std::fs::write(path, p.schedule.to_csv())?;
            }
            let report = single_report(&p, delta_rms, cfg.disorder.seed, cfg.nrep, cfg.steps_per_tau_p)?;
            if let (Some(path), Some(u)) = (&dump_unitary, &report.unitary) {
                write_unitary(std::fs::File::create(path)?, u)?;
            }
            emit(out.as_deref(), &(serde_json::to_string_pretty(&report).expect("report serialises") + "\n"))
        }
        Command::Sweep { gate, grid, draws, out } => {
            let (cfg, p) = gate.prepared(grid.values()?, draws)?;
            let rows = run_sweep(&cfg, &p)?;
            emit(out.as_deref(), &sweep_csv(&rows, p.graph.n, p.gate, p.pulse_order, cfg.nrep, cfg.disorder.seed))
        }
        Command::Weights { gate, delta_rms, out } => {
            let (cfg, p) = gate.prepared(vec![delta_rms], 1)?;
            let report = single_report(&p, delta_rms, cfg.disorder.seed, cfg.nrep, cfg.steps_per_tau_p)?;
            let spec = report.weight_spectrum.as_ref().ok_or_else(|| {
                CliError::Config(format!("weight spectra are limited to {} qubits", isingdd::analysis::MAX_WEIGHT_QUBITS))
            })?;
            emit(out.as_deref(), &weights_csv(spec, &report.meta))
        }
        Command::AvghamCheck { subject, pulse, angle, order, bath_dim, seed, taus, steps, out } => {
            let subject = check_subject(&subject)?;
            let lib = parse_pulse(&pulse)?.library(&isingdd::sequences::GateSpec::new(GateKind::Rotation, vec![0]).with_rotation(Axis::X, angle))?.0;
            let baths = (0..subject.num_baths())
                .map(|q| BathSpec::random(bath_dim, seed.wrapping_add(q as u64)).map_err(classify))
                .collect::<CliResult<Vec<_>>>()?;
            let check = avgham_check(subject, &lib, angle, &baths, order, &taus, steps).map_err(classify)?;
            emit(out.as_deref(), &avgham_csv(&check))
        }
        Command::Bounds { z, k, mu, c, pc, nrep, max_sites, csv, out } => {
            let rows = bounds_rows(&BoundsArgs { z, k, mu, c, p_c: pc, nrep, max_sites })?;
            emit(out.as_deref(), &if csv { bounds_csv(&rows) } else { bounds_text(&rows) })
        }
        Command::Run { config, out_dir } => {
            let cfg = ExperimentConfig::load(&config)?;
            let summary = run(&cfg, out_dir.as_deref())?;
            for s in &summary.series {
                match (s.plateau_slope, s.plateau_range) {
                    (Some(m), Some((lo, hi))) => println!("{}: slope {m:.3} over [{lo:.3e}, {hi:.3e}]", s.label),
                    _ => println!("{}: no slope (too few points above the floor)", s.label),
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads(cli.threads).and_then(|_| execute(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("isingdd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
