//! Pulse schedules: DCG rotations, the ZZ sequence, Eulerian single-qubit
//! DCGs and composite two-qubit gates.
//!
//! Slot numbers in the layouts below are 1-based, as in the usual drawings of
//! these sequences. Every slot of the 16-slot DCG lasts one nominal pulse.

use crate::error::{Error, Result};
use crate::linalg::{apply_left, rotation, z_of, Axis, CMat, C64};
use crate::network::{QubitGraph, Sublattice};
use crate::pulse::{find_self_refocusing, PulseShape};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt::Write as _;

const TIME_TOL: f64 = 1e-9;

/// Idle π_x slots on sublattice A during a DCG rotation.
pub const IDLE_A_SLOTS: [usize; 4] = [4, 10, 11, 13];
/// Idle π_x slots on sublattice B during a DCG rotation.
pub const IDLE_B_SLOTS: [usize; 4] = [1, 7, 12, 14];
pub const PLUS_SLOTS: [usize; 3] = [2, 5, 8];
pub const MINUS_SLOTS: [usize; 3] = [3, 6, 9];
/// First of the two slots taken by the stretched pulse.
pub const STRETCHED_SLOT: usize = 15;
pub const DCG_SLOTS: usize = 16;

/// ZZ sequence, idle qubits: τ₁-intervals holding a π_x pulse.
pub const ZZ_IDLE_A: [usize; 8] = [1, 3, 5, 7, 10, 12, 14, 16];
pub const ZZ_IDLE_B: [usize; 8] = [2, 4, 6, 8, 9, 11, 13, 15];
/// ZZ sequence, coupled pair: pulse centres in units of τ₁ (B' centres move by
/// `∓τ₂`).
pub const ZZ_PAIR_A: [f64; 4] = [0.5, 4.5, 11.5, 15.5];
pub const ZZ_PAIR_B: [(f64, f64); 4] = [(1.5, -1.0), (5.5, -1.0), (10.5, 1.0), (14.5, 1.0)];

#[derive(Debug, Clone, PartialEq)]
pub enum Drive {
    Shaped(PulseShape),
    /// Instantaneous rotation.
    Hard { angle: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub qubit: usize,
    pub axis: Axis,
    pub drive: Drive,
    pub start: f64,
}

impl Segment {
    pub fn shaped(qubit: usize, shape: PulseShape, start: f64) -> Self {
        Segment { qubit, axis: shape.axis, drive: Drive::Shaped(shape), start }
    }

    pub fn duration(&self) -> f64 {
        match &self.drive {
            Drive::Shaped(s) => s.duration,
            Drive::Hard { .. } => 0.0,
        }
    }

    pub fn end(&self) -> f64 {
        self.start + self.duration()
    }

    pub fn sign(&self) -> i8 {
        match &self.drive {
            Drive::Shaped(s) => s.sign,
            Drive::Hard { angle } => {
                if *angle < 0.0 {
                    -1
                } else {
                    1
                }
            }
        }
    }

    /// Net rotation angle about `axis`.
    pub fn angle(&self) -> f64 {
        match &self.drive {
            Drive::Shaped(s) => s.net_angle(),
            Drive::Hard { angle } => *angle,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub n: usize,
    pub segments: Vec<Segment>,
    pub total_duration: f64,
    pub ideal_unitary: CMat,
    /// Effective ZZ coupling prefactor `f` of a ZZ sequence.
    pub zz_prefactor: Option<f64>,
    pub warnings: Vec<String>,
}

impl Schedule {
    /// No pulses; the ideal evolution is the identity.
    pub fn idle(n: usize, duration: f64) -> Self {
        let dim = 1usize << n;
        Schedule {
            n,
            segments: Vec::new(),
            total_duration: duration,
            ideal_unitary: CMat::identity(dim, dim),
            zz_prefactor: None,
            warnings: Vec::new(),
        }
    }

    pub fn push(&mut self, seg: Segment) {
        self.segments.push(seg);
    }

    /// Checks the per-qubit non-overlap rule, the duration grid and the
    /// unitarity of the target.
    pub fn validate(&self) -> Result<()> {
        let dim = 1usize << self.n;
        if self.ideal_unitary.nrows() != dim || self.ideal_unitary.ncols() != dim {
            return Err(Error::DimensionMismatch(format!("ideal unitary is not {dim}×{dim}")));
        }
        let m = self.total_duration.round();
        if !(self.total_duration > 0.0) || (self.total_duration - m).abs() > TIME_TOL {
            return Err(Error::InvalidSchedule(format!("total duration {} is not a multiple of the pulse length", self.total_duration)));
        }
        let defect = crate::linalg::unitarity_defect(&self.ideal_unitary);
        if defect > 1e-10 {
            return Err(Error::InvalidSchedule(format!("ideal unitary has unitarity defect {defect:e}")));
        }
        for s in &self.segments {
            if s.qubit >= self.n {
                return Err(Error::InvalidSchedule(format!("segment on qubit {} of {}", s.qubit, self.n)));
            }
            if s.start < -TIME_TOL || s.end() > self.total_duration + TIME_TOL {
                return Err(Error::InvalidSchedule(format!("segment on qubit {} at [{}, {}] outside [0, {}]", s.qubit, s.start, s.end(), self.total_duration)));
            }
            if let Drive::Shaped(shape) = &s.drive {
                shape.validate()?;
            }
        }
        for q in 0..self.n {
            let mut iv: Vec<(f64, f64)> = self
                .segments
                .iter()
                .filter(|s| s.qubit == q && matches!(s.drive, Drive::Shaped(_)))
                .map(|s| (s.start, s.end()))
                .collect();
            iv.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            for w in iv.windows(2) {
                if w[1].0 < w[0].1 - TIME_TOL {
                    return Err(Error::InvalidSchedule(format!("pulses on qubit {q} overlap at t = {}", w[1].0)));
                }
            }
        }
        Ok(())
    }

    /// `other` after `self`; the ideal unitaries multiply.
    pub fn then(&self, other: &Schedule) -> Result<Schedule> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!("cannot join schedules on {} and {} qubits", self.n, other.n)));
        }
        let mut segments = self.segments.clone();
        segments.extend(other.segments.iter().map(|s| Segment { start: s.start + self.total_duration, ..s.clone() }));
        let mut warnings = self.warnings.clone();
        warnings.extend(other.warnings.iter().cloned());
        Ok(Schedule {
            n: self.n,
            segments,
            total_duration: self.total_duration + other.total_duration,
            ideal_unitary: &other.ideal_unitary * &self.ideal_unitary,
            zz_prefactor: self.zz_prefactor.or(other.zz_prefactor),
            warnings,
        })
    }

    pub fn repeat(&self, times: usize) -> Result<Schedule> {
        if times == 0 {
            return Err(Error::InvalidSchedule("zero repetitions".into()));
        }
        let mut out = self.clone();
        for _ in 1..times {
            out = out.then(self)?;
        }
        Ok(out)
    }

    /// Segments mirrored in time, `t → T − t`. Symmetric shapes are unchanged
    /// by the mirror, so only the start times move. The ideal unitary is
    /// recomputed from the pulse angles.
    pub fn reversed(&self) -> Schedule {
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| Segment { start: self.total_duration - s.end(), ..s.clone() })
            .collect();
        let mut out = Schedule { segments, ..self.clone() };
        out.ideal_unitary = out.control_unitary();
        out
    }

    /// Product of the ideal pulse rotations in time order.
    pub fn control_unitary(&self) -> CMat {
        let dim = 1usize << self.n;
        let mut order: Vec<&Segment> = self.segments.iter().collect();
        order.sort_by(|a, b| a.start.partial_cmp(&b.start).unwrap());
        let mut u = CMat::identity(dim, dim);
        for s in order {
            apply_left(&mut u, self.n, s.qubit, &rotation(s.axis, s.angle()));
        }
        u
    }

    /// Segments of one qubit as a single-qubit schedule.
    pub fn restrict(&self, qubit: usize) -> Schedule {
        let mut out = Schedule::idle(1, self.total_duration);
        out.segments = self.segments.iter().filter(|s| s.qubit == qubit).map(|s| Segment { qubit: 0, ..s.clone() }).collect();
        out.ideal_unitary = out.control_unitary();
        out
    }

    /// Segment table: `qubit,axis,sign,start,duration`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("qubit,axis,sign,start,duration\n");
        let mut order: Vec<&Segment> = self.segments.iter().collect();
        order.sort_by(|a, b| a.start.partial_cmp(&b.start).unwrap().then(a.qubit.cmp(&b.qubit)));
        for s in order {
            let _ = writeln!(out, "{},{},{},{:.16e},{:.16e}", s.qubit, s.axis, s.sign(), s.start, s.duration());
        }
        out
    }
}

/// Shapes used to compile sequences: the π pulse of the decoupling trains
/// and rotation pulses for other angles, all of one self-refocusing order.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseLibrary {
    /// 0 for the single-harmonic shape, 1 or 2 for self-refocusing shapes;
    /// `None` for user-supplied shapes.
    pub order: Option<usize>,
    shapes: Vec<PulseShape>,
}

impl PulseLibrary {
    /// Shapes for π and π/2.
    pub fn new(order: usize) -> Result<Self> {
        let mut lib = PulseLibrary { order: Some(order), shapes: Vec::new() };
        lib.add_angle(PI)?;
        lib.add_angle(FRAC_PI_2)?;
        Ok(lib)
    }

    /// User shapes; one of them must rotate by π.
    pub fn from_shapes(shapes: Vec<PulseShape>) -> Result<Self> {
        for s in &shapes {
            s.validate()?;
            if s.duration != 1.0 || s.sign != 1 || s.phi0 <= 0.0 {
                return Err(Error::InvalidPulse("library shapes need unit duration, sign +1 and a positive angle".into()));
            }
        }
        let lib = PulseLibrary { order: None, shapes };
        lib.pi()?;
        Ok(lib)
    }

    pub fn shape_for(order: usize, phi0: f64) -> Result<PulseShape> {
        match order {
            0 => Ok(PulseShape::gaussian_like(Axis::X, phi0)),
            1 | 2 => find_self_refocusing(order, phi0, order + 1),
            _ => Err(Error::InvalidInput(format!("pulse order {order} not in 0..=2"))),
        }
    }

    pub fn add_angle(&mut self, phi0: f64) -> Result<()> {
        let a = phi0.abs();
        if self.find(a).is_some() {
            return Ok(());
        }
        let order = self.order.ok_or_else(|| Error::InvalidPulse(format!("no shape for angle {a} in a user library")))?;
        self.shapes.push(Self::shape_for(order, a)?);
        Ok(())
    }

    fn find(&self, a: f64) -> Option<&PulseShape> {
        self.shapes.iter().find(|s| (s.phi0 - a).abs() < 1e-12)
    }

    pub fn shapes(&self) -> &[PulseShape] {
        &self.shapes
    }

    /// Unit-length shape for `|angle|` about `axis`, negated for negative angles.
    pub fn rotation(&self, axis: Axis, angle: f64) -> Result<PulseShape> {
        if angle == 0.0 || !angle.is_finite() {
            return Err(Error::InvalidGate(format!("rotation angle {angle}")));
        }
        let s = self.find(angle.abs()).ok_or_else(|| Error::InvalidPulse(format!("library has no shape for angle {}", angle.abs())))?;
        let s = s.with_axis(axis);
        Ok(if angle < 0.0 { s.negated() } else { s })
    }

    pub fn pi(&self) -> Result<PulseShape> {
        self.rotation(Axis::X, PI)
    }
}

fn slot_start(slot: usize) -> f64 {
    (slot - 1) as f64
}

fn check_targets(targets: &[usize], graph: &QubitGraph) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::InvalidGate("no target qubits".into()));
    }
    for (k, &t) in targets.iter().enumerate() {
        if t >= graph.n {
            return Err(Error::InvalidGate(format!("target {t} out of range for {} qubits", graph.n)));
        }
        if targets[..k].contains(&t) {
            return Err(Error::InvalidGate(format!("target {t} listed twice")));
        }
    }
    if !graph.independent(targets) {
        return Err(Error::InvalidGate(format!("targets {targets:?} include neighbouring qubits")));
    }
    Ok(())
}

fn idle_slots(s: Sublattice) -> [usize; 4] {
    match s {
        Sublattice::A => IDLE_A_SLOTS,
        Sublattice::B => IDLE_B_SLOTS,
    }
}

/// 16-slot DCG rotation by `phi0` about `axis` on every target; all qubits
/// run the π_x train of their sublattice.
pub fn dcg_single(axis: Axis, phi0: f64, targets: &[usize], graph: &QubitGraph, lib: &PulseLibrary) -> Result<Schedule> {
    check_targets(targets, graph)?;
    let pi = lib.pi()?;
    let v = lib.rotation(axis, phi0)?;
    let mut out = Schedule::idle(graph.n, DCG_SLOTS as f64);
    for q in 0..graph.n {
        for slot in idle_slots(graph.sublattice[q]) {
            out.push(Segment::shaped(q, pi.clone(), slot_start(slot)));
        }
    }
    for &t in targets {
        for slot in PLUS_SLOTS {
            out.push(Segment::shaped(t, v.clone(), slot_start(slot)));
        }
        for slot in MINUS_SLOTS {
            out.push(Segment::shaped(t, v.negated(), slot_start(slot)));
        }
        out.push(Segment::shaped(t, v.stretched(), slot_start(STRETCHED_SLOT)));
    }
    out.ideal_unitary = rotations_on(graph.n, targets, axis, phi0);
    out.validate()?;
    Ok(out)
}

/// Reverse-order DCG followed by the direct one: 32 slots, net angle `2·phi0`.
pub fn dcg_symmetrized(axis: Axis, phi0: f64, targets: &[usize], graph: &QubitGraph, lib: &PulseLibrary) -> Result<Schedule> {
    let direct = dcg_single(axis, phi0, targets, graph, lib)?;
    let mut out = direct.reversed().then(&direct)?;
    out.ideal_unitary = rotations_on(graph.n, targets, axis, 2.0 * phi0);
    out.validate()?;
    Ok(out)
}

fn rotations_on(n: usize, qubits: &[usize], axis: Axis, angle: f64) -> CMat {
    let dim = 1usize << n;
    let mut u = CMat::identity(dim, dim);
    for &q in qubits {
        apply_left(&mut u, n, q, &rotation(axis, angle));
    }
    u
}

/// `exp(-i θ σᶻ_a σᶻ_b)` as a diagonal matrix.
pub fn zz_unitary(n: usize, a: usize, b: usize, theta: f64) -> CMat {
    let dim = 1usize << n;
    CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        dim,
        (0..dim).map(|r| C64::from_polar(1.0, -theta * z_of(r, n, a) * z_of(r, n, b))),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PulseMode {
    #[default]
    Soft,
    Hard,
}

/// `N_rep` periods of the 16τ₁ ZZ sequence on coupled `pairs`, with every
/// other qubit on its idle train.
///
/// Returns the schedule with `f = (τ₁ + τ₂)/(2τ₁)` recorded and the target
/// `Π exp(−i f (J/2) T σᶻσᶻ)` over the pairs, `T = 16 τ₁ N_rep`.
pub fn zz_sequence(
    pairs: &[(usize, usize)],
    tau1: f64,
    tau2: f64,
    nrep: usize,
    graph: &QubitGraph,
    pi_shape: &PulseShape,
    mode: PulseMode,
) -> Result<Schedule> {
    if nrep == 0 {
        return Err(Error::InvalidGate("N_rep must be positive".into()));
    }
    if !(tau1 > 0.0) || !tau2.is_finite() {
        return Err(Error::InvalidGate(format!("interval lengths τ1 = {tau1}, τ2 = {tau2}")));
    }
    let width = match mode {
        PulseMode::Soft => pi_shape.duration,
        PulseMode::Hard => 0.0,
    };
    if tau2.abs() > tau1 - width + TIME_TOL {
        return Err(Error::InvalidSchedule(format!("|τ2| = {} exceeds τ1 − τ_p = {}", tau2.abs(), tau1 - width)));
    }
    let pair_qubits = check_pairs(pairs, graph)?;
    let u = tau2 / tau1;
    let mut period = Schedule::idle(graph.n, 16.0 * tau1);
    let mut place = |q: usize, centre: f64| {
        let c = centre * tau1;
        period.push(match mode {
            PulseMode::Soft => Segment::shaped(q, pi_shape.with_axis(Axis::X), c - 0.5 * width),
            PulseMode::Hard => Segment { qubit: q, axis: Axis::X, drive: Drive::Hard { angle: PI }, start: c },
        });
    };
    for q in 0..graph.n {
        if pair_qubits.contains(&q) {
            continue;
        }
        let slots = match graph.sublattice[q] {
            Sublattice::A => ZZ_IDLE_A,
            Sublattice::B => ZZ_IDLE_B,
        };
        for k in slots {
            place(q, k as f64 - 0.5);
        }
    }
    for &(a, b) in pairs {
        let (qa, qb) = if graph.sublattice[a] == Sublattice::A { (a, b) } else { (b, a) };
        for c in ZZ_PAIR_A {
            place(qa, c);
        }
        for (c, dir) in ZZ_PAIR_B {
            place(qb, c + dir * u);
        }
    }
    let f = 0.5 * (tau1 + tau2) / tau1;
    let mut out = period.repeat(nrep)?;
    let total = out.total_duration;
    let dim = 1usize << graph.n;
    let mut ideal = CMat::identity(dim, dim);
    for &(a, b) in pairs {
        let j = graph.coupling(a, b).unwrap();
        ideal = zz_unitary(graph.n, a, b, f * 0.5 * j * total) * ideal;
    }
    out.ideal_unitary = ideal;
    out.zz_prefactor = Some(f);
    out.validate()?;
    Ok(out)
}

fn check_pairs(pairs: &[(usize, usize)], graph: &QubitGraph) -> Result<Vec<usize>> {
    if pairs.is_empty() {
        return Err(Error::InvalidGate("no qubit pairs".into()));
    }
    let mut qubits = Vec::new();
    for &(a, b) in pairs {
        if !graph.adjacent(a, b) {
            return Err(Error::InvalidGate(format!("pair ({a}, {b}) is not an edge")));
        }
        for q in [a, b] {
            if qubits.contains(&q) {
                return Err(Error::InvalidGate(format!("qubit {q} appears in two pairs")));
            }
        }
        qubits.extend([a, b]);
    }
    for (k, &(a, b)) in pairs.iter().enumerate() {
        for &(c, d) in &pairs[k + 1..] {
            if [(a, c), (a, d), (b, c), (b, d)].iter().any(|&(x, y)| graph.adjacent(x, y)) {
                return Err(Error::InvalidGate(format!("pairs ({a}, {b}) and ({c}, {d}) are directly connected")));
            }
        }
    }
    Ok(qubits)
}

/// `Jτ_p = π/(16 N_rep)`.
pub fn design_coupling(nrep: usize) -> f64 {
    PI / (16.0 * nrep as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EulerVariant {
    Full,
    Partial,
}

/// Single-qubit Eulerian DCG for a rotation by `shape` (about its axis, here
/// `y`), with π pulses from `pi_shape`.
///
/// Full: π_x, I, π_y, I, π_x, I, π_y, π_x, π_y, π_x, π_y, V (16 slots).
/// Partial: π_x, I, π_x, π_x, π_x, V (8 slots). `I` is the identity pair of
/// `shape`, `V` its stretched form.
pub fn eulerian_dcg(variant: EulerVariant, shape: &PulseShape, pi_shape: &PulseShape) -> Result<Schedule> {
    shape.validate()?;
    pi_shape.validate()?;
    enum Op {
        Pi(Axis),
        Identity,
        Stretched,
    }
    use Op::*;
    let ops: Vec<Op> = match variant {
        EulerVariant::Full => vec![
            Pi(Axis::X),
            Identity,
            Pi(Axis::Y),
            Identity,
            Pi(Axis::X),
            Identity,
            Pi(Axis::Y),
            Pi(Axis::X),
            Pi(Axis::Y),
            Pi(Axis::X),
            Pi(Axis::Y),
            Stretched,
        ],
        EulerVariant::Partial => vec![Pi(Axis::X), Identity, Pi(Axis::X), Pi(Axis::X), Pi(Axis::X), Stretched],
    };
    let mut out = Schedule::idle(1, 0.0);
    let mut t = 0.0;
    for op in ops {
        match op {
            Pi(axis) => {
                out.push(Segment::shaped(0, pi_shape.with_axis(axis), t));
                t += 1.0;
            }
            Identity => {
                let pair = crate::pulse::make_identity_pair(shape)?;
                for (dt, s) in pair.pulses {
                    out.push(Segment::shaped(0, s, t + dt));
                }
                t += pair.duration;
            }
            Stretched => {
                let s = shape.stretched();
                let d = s.duration;
                out.push(Segment::shaped(0, s, t));
                t += d;
            }
        }
    }
    out.total_duration = t;
    out.ideal_unitary = out.control_unitary();
    out.validate()?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Rotation,
    Hadamard,
    Cnot,
    Cy,
    Cz,
    Swap,
    Zz,
}

fn default_nrep() -> usize {
    5
}

fn default_tau1() -> f64 {
    1.0
}

/// Gate request. Two-qubit kinds take `targets = [control, target]`, or
/// several such pairs flattened for parallel execution. For `zz`, `angle` is
/// `θ` in `exp(−iθσᶻσᶻ)`; without it `τ₂ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    #[serde(default = "default_nrep")]
    pub nrep: usize,
    #[serde(default = "default_tau1")]
    pub tau1: f64,
    #[serde(default)]
    pub symmetrized: bool,
}

impl GateSpec {
    pub fn new(kind: GateKind, targets: Vec<usize>) -> Self {
        GateSpec { kind, targets, axis: None, angle: None, nrep: default_nrep(), tau1: default_tau1(), symmetrized: false }
    }

    pub fn with_nrep(mut self, nrep: usize) -> Self {
        self.nrep = nrep;
        self
    }

    pub fn with_rotation(mut self, axis: Axis, angle: f64) -> Self {
        self.axis = Some(axis);
        self.angle = Some(angle);
        self
    }

    fn pairs(&self) -> Result<Vec<(usize, usize)>> {
        if self.targets.is_empty() || self.targets.len() % 2 != 0 {
            return Err(Error::InvalidGate(format!("{:?} needs (control, target) pairs, got {:?}", self.kind, self.targets)));
        }
        Ok(self.targets.chunks(2).map(|c| (c[0], c[1])).collect())
    }
}

/// Rotation angles every gate kind needs from the pulse library.
pub fn required_angles(spec: &GateSpec) -> Vec<f64> {
    match spec.kind {
        GateKind::Rotation => {
            let a = spec.angle.unwrap_or(PI);
            if spec.symmetrized {
                vec![0.5 * a]
            } else {
                vec![a]
            }
        }
        _ => vec![PI, FRAC_PI_2],
    }
}

/// Compiles `spec` into a schedule on `graph`. Gates built on the ZZ
/// sequence use `τ₁ = τ_p` and take the ZZ target `exp(−iπ/4 σᶻσᶻ)` in the
/// ideal unitary; a coupling off the design value is reported in
/// `warnings`.
pub fn compose_gate(spec: &GateSpec, graph: &QubitGraph, lib: &PulseLibrary) -> Result<Schedule> {
    let n = graph.n;
    let rot = |axis: Axis, angle: f64, qs: &[usize]| dcg_single(axis, angle, qs, graph, lib);
    match spec.kind {
        GateKind::Rotation => {
            let axis = spec.axis.ok_or_else(|| Error::InvalidGate("rotation needs an axis".into()))?;
            let angle = spec.angle.ok_or_else(|| Error::InvalidGate("rotation needs an angle".into()))?;
            if spec.symmetrized {
                dcg_symmetrized(axis, 0.5 * angle, &spec.targets, graph, lib)
            } else {
                rot(axis, angle, &spec.targets)
            }
        }
        GateKind::Hadamard => {
            let mut s = rot(Axis::X, -PI, &spec.targets)?.then(&rot(Axis::Y, -FRAC_PI_2, &spec.targets)?)?;
            let phase = C64::new(0.0, -1.0);
            let dim = 1usize << n;
            let mut ideal = CMat::identity(dim, dim);
            for &q in &spec.targets {
                ideal *= phase;
                apply_left(&mut ideal, n, q, &(rotation(Axis::Y, -FRAC_PI_2) * rotation(Axis::X, -PI)));
            }
            s.ideal_unitary = ideal;
            Ok(s)
        }
        GateKind::Zz => {
            let pairs = spec.pairs()?;
            let pi = lib.pi()?;
            let tau2 = match spec.angle {
                None => 0.0,
                Some(theta) => {
                    let (a, b) = pairs[0];
                    let j = graph.coupling(a, b).ok_or_else(|| Error::InvalidGate(format!("pair ({a}, {b}) is not an edge")))?;
                    let total = 16.0 * spec.tau1 * spec.nrep as f64;
                    let f = 2.0 * theta / (j * total);
                    (2.0 * f - 1.0) * spec.tau1
                }
            };
            zz_sequence(&pairs, spec.tau1, tau2, spec.nrep, graph, &pi, PulseMode::Soft)
        }
        GateKind::Cnot | GateKind::Cy | GateKind::Cz => {
            let pairs = spec.pairs()?;
            let controls: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let tgts: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            let pi = lib.pi()?;
            let zz = zz_sequence(&pairs, 1.0, 0.0, spec.nrep, graph, &pi, PulseMode::Soft)?;
            // (axis, angle, on controls?) in time order around the ZZ block.
            let (before, after, phase): (Vec<(Axis, f64, bool)>, Vec<(Axis, f64, bool)>, f64) = match spec.kind {
                GateKind::Cnot => (
                    vec![(Axis::Y, FRAC_PI_2, false)],
                    vec![(Axis::Y, -FRAC_PI_2, false), (Axis::X, FRAC_PI_2, false), (Axis::Z, FRAC_PI_2, true)],
                    FRAC_PI_4,
                ),
                GateKind::Cy => (
                    vec![(Axis::X, FRAC_PI_2, false)],
                    vec![(Axis::Z, -FRAC_PI_2, false), (Axis::Z, -FRAC_PI_2, true), (Axis::X, -FRAC_PI_2, false)],
                    -FRAC_PI_4,
                ),
                _ => (vec![], vec![(Axis::Z, -FRAC_PI_2, false), (Axis::Z, -FRAC_PI_2, true)], -FRAC_PI_4),
            };
            let stage = |&(axis, angle, on_c): &(Axis, f64, bool)| rot(axis, angle, if on_c { &controls } else { &tgts });
            let mut s = Schedule::idle(n, 0.0);
            for st in &before {
                s = s.then(&stage(st)?)?;
            }
            s = s.then(&zz)?;
            for st in &after {
                s = s.then(&stage(st)?)?;
            }
            let dim = 1usize << n;
            let mut ideal = CMat::identity(dim, dim);
            let apply = |ideal: &mut CMat, &(axis, angle, on_c): &(Axis, f64, bool)| {
                for p in &pairs {
                    apply_left(ideal, n, if on_c { p.0 } else { p.1 }, &rotation(axis, angle));
                }
            };
            for st in &before {
                apply(&mut ideal, st);
            }
            for &(a, b) in &pairs {
                ideal = zz_unitary(n, a, b, FRAC_PI_4) * ideal;
            }
            for st in &after {
                apply(&mut ideal, st);
            }
            s.ideal_unitary = ideal * C64::from_polar(1.0, phase * pairs.len() as f64);
            s.zz_prefactor = zz.zz_prefactor;
            let design = design_coupling(spec.nrep);
            for &(a, b) in &pairs {
                let j = graph.coupling(a, b).unwrap();
                if (j - design).abs() > 1e-9 * design {
                    s.warnings.push(format!("coupling J = {j} on ({a}, {b}) differs from the design value π/(16·{}) = {design}", spec.nrep));
                }
            }
            s.validate()?;
            Ok(s)
        }
        GateKind::Swap => {
            let pairs = spec.pairs()?;
            let fwd = GateSpec { kind: GateKind::Cnot, ..spec.clone() };
            let back = GateSpec { kind: GateKind::Cnot, targets: pairs.iter().flat_map(|&(c, t)| [t, c]).collect(), ..spec.clone() };
            let a = compose_gate(&fwd, graph, lib)?;
            let b = compose_gate(&back, graph, lib)?;
            a.then(&b)?.then(&a)
        }
    }
}

/// Standard 4×4 matrices for tests and reports, qubit 0 as control.
pub fn standard_gate(kind: GateKind) -> Option<CMat> {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let m = |v: [C64; 16]| CMat::from_row_slice(4, 4, &v);
    match kind {
        GateKind::Cnot => Some(m([l, o, o, o, o, l, o, o, o, o, o, l, o, o, l, o])),
        GateKind::Cy => Some(m([l, o, o, o, o, l, o, o, o, o, o, -i, o, o, i, o])),
        GateKind::Cz => Some(m([l, o, o, o, o, l, o, o, o, o, l, o, o, o, o, -l])),
        GateKind::Swap => Some(m([l, o, o, o, o, o, l, o, o, l, o, o, o, o, o, l])),
        _ => None,
    }
}
