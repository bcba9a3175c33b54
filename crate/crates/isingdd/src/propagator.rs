//! Fixed-step RK4 propagation of `iU̇ = H(t)U`, hard pulses and numerical
//! average Hamiltonians.
//!
//! Three integrators share one epoch decomposition of a schedule (maximal
//! intervals with a fixed set of active pulses):
//!
//! * [`evolve`]: classic RK4 on the full `2^n` unitary.
//! * [`evolve_factorized`]: exploits that the qubits driven in one epoch are
//!   mutually non-adjacent, so the propagator factorizes into 2×2 RK4 problems
//!   conditioned on the `σᶻ` values of their neighbours, times a diagonal
//!   phase. Same step size as [`evolve`].
//! * [`toggling_propagator`]: RK4 for the slow evolution `R` in the frame of
//!   the ideal controls, on a bath ⊗ spins space.

use crate::error::{Error, Result};
use crate::linalg::{apply_left, rotation, z_of, Axis, CMat, Mat2, C64};
use crate::network::{drift_diagonal, QubitGraph, MAX_DENSE_QUBITS};
use crate::pulse::PulseShape;
use crate::sequences::{Drive, Schedule, Segment};
use std::collections::HashMap;
use std::io::{Read, Write};

pub const DEFAULT_STEPS: usize = 1024;
pub const UNITARITY_LIMIT: f64 = 1e-9;
pub const BRANCH_MARGIN: f64 = 1e-6;
const TIME_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryResult {
    pub matrix: CMat,
    pub unitarity_defect: f64,
    pub steps_per_tau_p: usize,
}

#[derive(Debug, Clone)]
struct Epoch {
    start: f64,
    end: f64,
    steps: usize,
    /// Indices of shaped segments active throughout the epoch.
    active: Vec<usize>,
    /// Hard pulses applied at `start`, in schedule order.
    kicks: Vec<usize>,
}

fn steps_for(len: f64, steps_per_tau_p: usize) -> usize {
    let x = len * steps_per_tau_p as f64;
    let r = x.round();
    if (x - r).abs() < 1e-6 {
        (r as usize).max(1)
    } else {
        x.ceil() as usize
    }
}

/// Epochs plus the hard pulses sitting at the final time.
fn epochs(schedule: &Schedule, steps_per_tau_p: usize) -> (Vec<Epoch>, Vec<usize>) {
    let mut cuts = vec![0.0, schedule.total_duration];
    for s in &schedule.segments {
        cuts.push(s.start);
        cuts.push(s.end());
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < TIME_TOL);
    let mut out = Vec::new();
    let mut tail = Vec::new();
    let kick_at = |t: f64| -> Vec<usize> {
        schedule
            .segments
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s.drive, Drive::Hard { .. }) && (s.start - t).abs() < TIME_TOL)
            .map(|(k, _)| k)
            .collect()
    };
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < TIME_TOL {
            continue;
        }
        let active = schedule
            .segments
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s.drive, Drive::Shaped(_)) && s.start <= a + TIME_TOL && s.end() >= b - TIME_TOL)
            .map(|(k, _)| k)
            .collect();
        out.push(Epoch { start: a, end: b, steps: steps_for(b - a, steps_per_tau_p), active, kicks: kick_at(a) });
    }
    let t_end = *cuts.last().unwrap();
    tail.extend(kick_at(t_end));
    (out, tail)
}

fn shape_of(seg: &Segment) -> &PulseShape {
    match &seg.drive {
        Drive::Shaped(s) => s,
        Drive::Hard { .. } => unreachable!("hard pulses are never active over an interval"),
    }
}

fn kick(u: &mut CMat, n: usize, seg: &Segment) {
    if let Drive::Hard { angle } = seg.drive {
        apply_left(u, n, seg.qubit, &rotation(seg.axis, angle));
    }
}

fn check_inputs(schedule: &Schedule, graph: &QubitGraph, deltas: &[f64], steps: usize) -> Result<()> {
    if graph.n > MAX_DENSE_QUBITS {
        return Err(Error::DimensionOverflow(graph.n));
    }
    if schedule.n != graph.n || deltas.len() != graph.n {
        return Err(Error::DimensionMismatch(format!(
            "schedule on {} qubits, graph on {}, {} chemical shifts",
            schedule.n,
            graph.n,
            deltas.len()
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidInput("steps per pulse must be positive".into()));
    }
    Ok(())
}

fn finish(matrix: CMat, steps: usize) -> Result<UnitaryResult> {
    if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NotFinite);
    }
    let defect = crate::linalg::unitarity_defect(&matrix);
    if defect > UNITARITY_LIMIT {
        return Err(Error::UnitarityDefect { defect, limit: UNITARITY_LIMIT });
    }
    Ok(UnitaryResult { matrix, unitarity_defect: defect, steps_per_tau_p: steps })
}

/// `out = -i H U` for `H = diag + Σ ½V_q σ_q`, column-major `dim × dim`.
fn apply_h(diag: &[f64], n: usize, drives: &[(usize, Axis, f64)], u: &[C64], out: &mut [C64]) {
    let dim = diag.len();
    for (col_in, col_out) in u.chunks_exact(dim).zip(out.chunks_exact_mut(dim)) {
        for r in 0..dim {
            col_out[r] = col_in[r] * diag[r];
        }
        for &(q, axis, v) in drives {
            let mask = 1usize << (n - 1 - q);
            let hv = 0.5 * v;
            for r in 0..dim {
                let x = col_in[r ^ mask];
                col_out[r] += match axis {
                    Axis::X => x * hv,
                    Axis::Y => {
                        if r & mask == 0 {
                            C64::new(0.0, -hv) * x
                        } else {
                            C64::new(0.0, hv) * x
                        }
                    }
                    Axis::Z => col_in[r] * if r & mask == 0 { hv } else { -hv },
                };
            }
        }
        for z in col_out.iter_mut() {
            *z = C64::new(z.im, -z.re);
        }
    }
}

/// Dense RK4 propagation of the full unitary.
pub fn evolve(schedule: &Schedule, graph: &QubitGraph, deltas: &[f64], steps_per_tau_p: usize) -> Result<UnitaryResult> {
    check_inputs(schedule, graph, deltas, steps_per_tau_p)?;
    let n = graph.n;
    let dim = 1usize << n;
    let diag = drift_diagonal(graph, deltas);
    let mut u = CMat::identity(dim, dim);
    let (eps, tail) = epochs(schedule, steps_per_tau_p);
    let len = dim * dim;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![C64::default(); len], vec![C64::default(); len], vec![C64::default(); len], vec![C64::default(); len], vec![C64::default(); len]);
    for ep in &eps {
        for &k in &ep.kicks {
            kick(&mut u, n, &schedule.segments[k]);
        }
        let h = (ep.end - ep.start) / ep.steps as f64;
        let segs: Vec<&Segment> = ep.active.iter().map(|&k| &schedule.segments[k]).collect();
        let drives_at = |t: f64| -> Vec<(usize, Axis, f64)> {
            segs.iter().map(|s| (s.qubit, s.axis, shape_of(s).amplitude(t - s.start))).collect()
        };
        for step in 0..ep.steps {
            let t = ep.start + step as f64 * h;
            let (d0, dm, d1) = (drives_at(t), drives_at(t + 0.5 * h), drives_at(t + h));
            let y = u.as_mut_slice();
            apply_h(&diag, n, &d0, y, &mut k1);
            for i in 0..len {
                tmp[i] = y[i] + k1[i] * (0.5 * h);
            }
            apply_h(&diag, n, &dm, &tmp, &mut k2);
            for i in 0..len {
                tmp[i] = y[i] + k2[i] * (0.5 * h);
            }
            apply_h(&diag, n, &dm, &tmp, &mut k3);
            for i in 0..len {
                tmp[i] = y[i] + k3[i] * h;
            }
            apply_h(&diag, n, &d1, &tmp, &mut k4);
            for i in 0..len {
                y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
            }
        }
    }
    for &k in &tail {
        kick(&mut u, n, &schedule.segments[k]);
    }
    finish(u, steps_per_tau_p)
}

/// RK4 for `u̇ = -i ½(h σᶻ + V(t) σ^μ) u` over `[offset, offset + len]` of a pulse.
fn rk4_qubit(shape: &PulseShape, axis: Axis, offset: f64, len: f64, steps: usize, hz: f64) -> Mat2 {
    let dt = len / steps as f64;
    let gen = |t: f64| -> Mat2 {
        let v = 0.5 * shape.amplitude(t);
        let z = 0.5 * hz;
        // -i (z σᶻ + v σ^μ)
        let (a, b, c, d) = match axis {
            Axis::X => (C64::new(z, 0.0), C64::new(v, 0.0), C64::new(v, 0.0), C64::new(-z, 0.0)),
            Axis::Y => (C64::new(z, 0.0), C64::new(0.0, -v), C64::new(0.0, v), C64::new(-z, 0.0)),
            Axis::Z => (C64::new(z + v, 0.0), C64::default(), C64::default(), C64::new(-z - v, 0.0)),
        };
        let mi = C64::new(0.0, -1.0);
        Mat2::new(mi * a, mi * b, mi * c, mi * d)
    };
    let mut y = Mat2::identity();
    for k in 0..steps {
        let t = offset + k as f64 * dt;
        let (g0, gm, g1) = (gen(t), gen(t + 0.5 * dt), gen(t + dt));
        let k1 = g0 * y;
        let k2 = gm * (y + k1 * C64::new(0.5 * dt, 0.0));
        let k3 = gm * (y + k2 * C64::new(0.5 * dt, 0.0));
        let k4 = g1 * (y + k3 * C64::new(dt, 0.0));
        y += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0);
    }
    y
}

/// Caches 2×2 propagators across epochs of one (or several) evolutions.
#[derive(Default)]
pub struct TuftCache {
    shapes: Vec<PulseShape>,
    table: HashMap<(usize, Axis, u64, u64, usize, u64), Mat2>,
}

impl TuftCache {
    fn shape_id(&mut self, s: &PulseShape) -> usize {
        match self.shapes.iter().position(|x| x == s) {
            Some(k) => k,
            None => {
                self.shapes.push(s.clone());
                self.shapes.len() - 1
            }
        }
    }

    fn get(&mut self, shape: &PulseShape, axis: Axis, offset: f64, len: f64, steps: usize, hz: f64) -> Mat2 {
        let id = self.shape_id(shape);
        let key = (id, axis, offset.to_bits(), len.to_bits(), steps, hz.to_bits());
        *self.table.entry(key).or_insert_with(|| rk4_qubit(shape, axis, offset, len, steps, hz))
    }
}

/// True when every epoch drives only mutually non-adjacent qubits, each by a
/// single pulse.
pub fn is_factorizable(schedule: &Schedule, graph: &QubitGraph) -> bool {
    let (eps, _) = epochs(schedule, 1);
    eps.iter().all(|ep| {
        let qs: Vec<usize> = ep.active.iter().map(|&k| schedule.segments[k].qubit).collect();
        let mut sorted = qs.clone();
        sorted.sort_unstable();
        sorted.dedup();
        sorted.len() == qs.len() && graph.independent(&qs)
    })
}

/// Tuft-factorized propagation; same RK4 step as [`evolve`] on each driven
/// qubit, exact phases for undriven ones.
pub fn evolve_factorized(schedule: &Schedule, graph: &QubitGraph, deltas: &[f64], steps_per_tau_p: usize) -> Result<UnitaryResult> {
    evolve_factorized_cached(schedule, graph, deltas, steps_per_tau_p, &mut TuftCache::default())
}

pub fn evolve_factorized_cached(
    schedule: &Schedule,
    graph: &QubitGraph,
    deltas: &[f64],
    steps_per_tau_p: usize,
    cache: &mut TuftCache,
) -> Result<UnitaryResult> {
    check_inputs(schedule, graph, deltas, steps_per_tau_p)?;
    if !is_factorizable(schedule, graph) {
        return Err(Error::InvalidSchedule("adjacent qubits driven simultaneously; use the dense integrator".into()));
    }
    let n = graph.n;
    let dim = 1usize << n;
    let diag = drift_diagonal(graph, deltas);
    let neighbors: Vec<Vec<(usize, f64)>> = (0..n).map(|q| graph.neighbors(q)).collect();
    // Local field on q for basis state r: Δ_q + Σ_j J_qj z_j.
    let field = |q: usize, r: usize| -> f64 { deltas[q] + neighbors[q].iter().map(|&(j, c)| c * z_of(r, n, j)).sum::<f64>() };
    let mut u = CMat::identity(dim, dim);
    let (eps, tail) = epochs(schedule, steps_per_tau_p);
    for ep in &eps {
        for &k in &ep.kicks {
            kick(&mut u, n, &schedule.segments[k]);
        }
        let len = ep.end - ep.start;
        let mut phase: Vec<f64> = diag.clone();
        for &k in &ep.active {
            let seg = &schedule.segments[k];
            let q = seg.qubit;
            let mask = 1usize << (n - 1 - q);
            let shape = shape_of(seg);
            let offset = ep.start - seg.start;
            let mut local: Vec<Mat2> = Vec::new();
            let mut fields: Vec<u64> = Vec::new();
            let mut which = vec![0usize; dim];
            for r in 0..dim {
                let hz = field(q, r);
                phase[r] -= 0.5 * hz * z_of(r, n, q);
                let key = hz.to_bits();
                which[r] = match fields.iter().position(|&f| f == key) {
                    Some(p) => p,
                    None => {
                        fields.push(key);
                        local.push(cache.get(shape, seg.axis, offset, len, ep.steps, hz));
                        local.len() - 1
                    }
                };
            }
            for column in u.as_mut_slice().chunks_exact_mut(dim) {
                for r0 in (0..dim).filter(|r| r & mask == 0) {
                    let r1 = r0 | mask;
                    let m = &local[which[r0]];
                    let (x0, x1) = (column[r0], column[r1]);
                    column[r0] = m[(0, 0)] * x0 + m[(0, 1)] * x1;
                    column[r1] = m[(1, 0)] * x0 + m[(1, 1)] * x1;
                }
            }
        }
        let ph: Vec<C64> = phase.iter().map(|&e| C64::from_polar(1.0, -e * len)).collect();
        for column in u.as_mut_slice().chunks_exact_mut(dim) {
            for (x, p) in column.iter_mut().zip(&ph) {
                *x *= p;
            }
        }
    }
    for &k in &tail {
        kick(&mut u, n, &schedule.segments[k]);
    }
    finish(u, steps_per_tau_p)
}

/// Factorized propagation when the schedule allows it, dense otherwise.
pub fn simulate(schedule: &Schedule, graph: &QubitGraph, deltas: &[f64], steps_per_tau_p: usize) -> Result<UnitaryResult> {
    if is_factorizable(schedule, graph) {
        evolve_factorized(schedule, graph, deltas, steps_per_tau_p)
    } else {
        evolve(schedule, graph, deltas, steps_per_tau_p)
    }
}

/// Zero-duration pulse applied as the exact factor `exp(-i angle σ/2)`.
pub fn hard_pulse(qubit: usize, axis: Axis, angle: f64, time: f64) -> Segment {
    Segment { qubit, axis, drive: Drive::Hard { angle }, start: time }
}

/// Control-frame unitary of one qubit at time `t`, given its frame `base` at
/// the epoch start `t0`.
fn frame_at(seg: Option<&Segment>, base: &Mat2, t0: f64, t: f64) -> Mat2 {
    match seg {
        Some(s) => {
            let shape = shape_of(s);
            rotation(s.axis, shape.phase_unchecked(t - s.start) - shape.phase_unchecked(t0 - s.start)) * base
        }
        None => *base,
    }
}

fn frame_operator(bath_dim: usize, frames: &[Mat2]) -> CMat {
    let mut w = CMat::identity(bath_dim, bath_dim);
    for f in frames {
        w = w.kronecker(&crate::linalg::to_dyn(f));
    }
    w
}

/// Slow evolution `R(T)` with `iṘ = scale·Ũ₀†H₀Ũ₀ R`, where `Ũ₀` is the
/// ideal control evolution of the schedule and `H₀` acts on bath ⊗ spins
/// (bath leftmost). Returns `(R, Ũ₀(T))`.
pub fn toggling_propagator(schedule: &Schedule, h0: &CMat, scale: f64, steps_per_tau_p: usize) -> Result<(CMat, CMat)> {
    let n = schedule.n;
    let spin_dim = 1usize << n;
    let dim = h0.nrows();
    if h0.ncols() != dim || dim % spin_dim != 0 {
        return Err(Error::DimensionMismatch(format!("H0 is {}×{} for {n} spins", h0.nrows(), h0.ncols())));
    }
    let bath_dim = dim / spin_dim;
    let mut frames = vec![Mat2::identity(); n];
    let mut r = CMat::identity(dim, dim);
    let (eps, tail) = epochs(schedule, steps_per_tau_p);
    let hard = |frames: &mut Vec<Mat2>, k: usize| {
        let s = &schedule.segments[k];
        if let Drive::Hard { angle } = s.drive {
            frames[s.qubit] = rotation(s.axis, angle) * frames[s.qubit];
        }
    };
    for ep in &eps {
        for &k in &ep.kicks {
            hard(&mut frames, k);
        }
        let mut active: Vec<Option<&Segment>> = vec![None; n];
        for &k in &ep.active {
            let s = &schedule.segments[k];
            active[s.qubit] = Some(s);
        }
        let htilde = |t: f64| -> CMat {
            let fs: Vec<Mat2> = (0..n).map(|q| frame_at(active[q], &frames[q], ep.start, t)).collect();
            let w = frame_operator(bath_dim, &fs);
            w.adjoint() * h0 * w * C64::new(0.0, -scale)
        };
        let h = (ep.end - ep.start) / ep.steps as f64;
        for step in 0..ep.steps {
            let t = ep.start + step as f64 * h;
            let (g0, gm, g1) = (htilde(t), htilde(t + 0.5 * h), htilde(t + h));
            let k1 = &g0 * &r;
            let k2 = &gm * (&r + &k1 * C64::new(0.5 * h, 0.0));
            let k3 = &gm * (&r + &k2 * C64::new(0.5 * h, 0.0));
            let k4 = &g1 * (&r + &k3 * C64::new(h, 0.0));
            r += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
        }
        for q in 0..n {
            frames[q] = frame_at(active[q], &frames[q], ep.start, ep.end);
        }
    }
    for &k in &tail {
        hard(&mut frames, k);
    }
    Ok((r, frame_operator(bath_dim, &frames)))
}

/// `H̄ = -(1/T) Σ θ_k P_k` from `R = Σ e^{iθ_k} P_k`, `θ_k ∈ (-π, π]`.
pub fn extract_avg_hamiltonian(r: &CMat, t: f64) -> Result<CMat> {
    if r.nrows() != r.ncols() {
        return Err(Error::DimensionMismatch("R must be square".into()));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("averaging time {t}")));
    }
    let (q, tri) = nalgebra::linalg::Schur::new(r.clone()).unpack();
    let n = r.nrows();
    let mut d = CMat::zeros(n, n);
    for k in 0..n {
        let theta = tri[(k, k)].arg();
        if std::f64::consts::PI - theta.abs() < BRANCH_MARGIN {
            return Err(Error::BranchCut { phase: theta, margin: BRANCH_MARGIN });
        }
        d[(k, k)] = C64::new(-theta / t, 0.0);
    }
    let h = &q * d * q.adjoint();
    Ok((&h + h.adjoint()) * C64::new(0.5, 0.0))
}

const DUMP_MAGIC: &[u8; 4] = b"IDDU";

/// Binary dump: 16-byte header (`"IDDU"`, `u32 n`, eight reserved zero bytes),
/// then row-major `(re, im)` f64 LE.
pub fn write_unitary<W: Write>(mut w: W, u: &CMat) -> Result<()> {
    let dim = u.nrows();
    if dim == 0 || !dim.is_power_of_two() || u.ncols() != dim {
        return Err(Error::DimensionMismatch(format!("{}×{} is not a qubit operator", u.nrows(), u.ncols())));
    }
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&(dim.trailing_zeros()).to_le_bytes())?;
    w.write_all(&[0u8; 8])?;
    for r in 0..dim {
        for c in 0..dim {
            w.write_all(&u[(r, c)].re.to_le_bytes())?;
            w.write_all(&u[(r, c)].im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_unitary<R: Read>(mut rd: R) -> Result<CMat> {
    let mut head = [0u8; 16];
    rd.read_exact(&mut head)?;
    if &head[0..4] != DUMP_MAGIC {
        return Err(Error::Io("bad magic".into()));
    }
    let n = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
    if n > MAX_DENSE_QUBITS {
        return Err(Error::DimensionOverflow(n));
    }
    let dim = 1usize << n;
    let mut u = CMat::zeros(dim, dim);
    let mut buf = [0u8; 8];
    for r in 0..dim {
        for c in 0..dim {
            rd.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf);
            rd.read_exact(&mut buf)?;
            u[(r, c)] = C64::new(re, f64::from_le_bytes(buf));
        }
    }
    Ok(u)
}
