//! Closed-form average Hamiltonians for `H₀ = B + Aσᶻ` under single shaped
//! pulses and DCG sequences, on bath ⊗ spin (bath leftmost).
//!
//! `β` enters every formula doubled relative to `PulseCoefficients::beta`
//! (and likewise `α` for π pulses); with this normalisation the expansions
//! agree with numerical Magnus extraction to the stated order.

use crate::analysis::fit_slope;
use crate::error::{Error, Result};
use crate::linalg::{commutator, hermitian_defect, op_norm, pauli, to_dyn, Axis, CMat, Mat2, C64};
use crate::network::{build_graph, GraphKind};
use crate::propagator::{extract_avg_hamiltonian, toggling_propagator};
use crate::pulse::{compute_coefficients, PulseCoefficients};
use crate::sequences::{dcg_single, dcg_symmetrized, eulerian_dcg, EulerVariant, PulseLibrary, Schedule, Segment};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Coefficients below this are treated as zero in formula preconditions.
pub const ASSUMPTION_TOL: f64 = 1e-8;

/// Chain qubits rotated by the four-qubit DCG (both on sublattice A).
pub const Y3P_TARGETS: [usize; 2] = [0, 2];

#[derive(Debug, Clone, PartialEq)]
pub struct BathSpec {
    pub a: CMat,
    pub b: CMat,
}

impl BathSpec {
    pub fn new(a: CMat, b: CMat) -> Result<Self> {
        if a.nrows() == 0 || a.shape() != b.shape() || a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch(format!("bath operators {:?} and {:?}", a.shape(), b.shape())));
        }
        for (name, m) in [("A", &a), ("B", &b)] {
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NotFinite);
            }
            let d = hermitian_defect(m);
            if d > 1e-12 * crate::linalg::op_norm(m).max(1.0) {
                return Err(Error::InvalidInput(format!("bath operator {name} is not Hermitian (defect {d:e})")));
            }
        }
        Ok(BathSpec { a, b })
    }

    /// Chemical-shift limit: `A = Δ/2`, `B = 0`.
    pub fn scalar(a: f64, b: f64) -> Self {
        BathSpec { a: CMat::from_element(1, 1, C64::new(a, 0.0)), b: CMat::from_element(1, 1, C64::new(b, 0.0)) }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Gaussian Hermitian `A`, `B` of size `dim`, scaled so `‖B ⊗ 𝟙 + A ⊗ σᶻ‖ = 1`.
    pub fn random(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("bath dimension must be positive".into()));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut herm = || {
            let mut m = CMat::zeros(dim, dim);
            for i in 0..dim {
                m[(i, i)] = C64::new(StandardNormal.sample(&mut rng), 0.0);
                for j in i + 1..dim {
                    let z = C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                }
            }
            m
        };
        let (a, b) = (herm(), herm());
        let s = op_norm(&BathSpec { a: a.clone(), b: b.clone() }.hamiltonian());
        let k = C64::new(1.0 / s, 0.0);
        BathSpec::new(a * k, b * k)
    }

    /// `B ⊗ 𝟙 + A ⊗ σᶻ`.
    pub fn hamiltonian(&self) -> CMat {
        self.b.kronecker(&CMat::identity(2, 2)) + self.a.kronecker(&to_dyn(&pauli(Axis::Z)))
    }
}

/// Small operator algebra over one bath and one spin.
struct Ops<'a> {
    a: &'a CMat,
    b: &'a CMat,
}

impl Ops<'_> {
    fn ab(&self) -> CMat {
        commutator(self.a, self.b)
    }
    fn ba(&self) -> CMat {
        commutator(self.b, self.a)
    }
    fn a2(&self) -> CMat {
        self.a * self.a
    }
    fn a3(&self) -> CMat {
        self.a * self.a * self.a
    }
    fn aab(&self) -> CMat {
        commutator(self.a, &self.ab())
    }
    fn bba(&self) -> CMat {
        commutator(self.b, &self.ba())
    }
    fn a2b(&self) -> CMat {
        commutator(&self.a2(), self.b)
    }
}

fn spin(cx: f64, cy: f64, cz: f64) -> Mat2 {
    pauli(Axis::X) * C64::new(cx, 0.0) + pauli(Axis::Y) * C64::new(cy, 0.0) + pauli(Axis::Z) * C64::new(cz, 0.0)
}

fn kr(bath: &CMat, s: &Mat2) -> CMat {
    bath.kronecker(&to_dyn(s))
}

fn kr1(bath: &CMat) -> CMat {
    bath.kronecker(&CMat::identity(2, 2))
}

fn ci(x: f64) -> C64 {
    C64::new(0.0, x)
}

fn cr(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn require(name: &'static str, value: f64) -> Result<()> {
    if value.abs() > ASSUMPTION_TOL {
        return Err(Error::Assumption { name, value });
    }
    Ok(())
}

fn check_order(order: usize, max: usize) -> Result<()> {
    if order > max {
        return Err(Error::InvalidInput(format!("order {order} not available (max {max})")));
    }
    Ok(())
}

fn check_phi(c: &PulseCoefficients, phi0: f64) -> Result<()> {
    if (c.phi0 - phi0).abs() > 1e-9 * phi0.abs().max(1.0) {
        return Err(Error::InvalidInput(format!("coefficients computed at φ0 = {}, requested {phi0}", c.phi0)));
    }
    Ok(())
}

/// `H̄⁽⁰⁾ + … + H̄⁽ᵒʳᵈᵉʳ⁾` of one pulse about `x`, angle `phi0`, length `tau_p`.
pub fn pulse_avg_ham(c: &PulseCoefficients, phi0: f64, bath: &BathSpec, tau_p: f64, order: usize) -> Result<CMat> {
    check_order(order, 2)?;
    check_phi(c, phi0)?;
    let o = Ops { a: &bath.a, b: &bath.b };
    let (s, cc) = (0.5 * phi0).sin_cos();
    let tilt = spin(0.0, s, cc);
    let mut h = kr1(o.b) + kr(o.a, &tilt) * cr(c.upsilon);
    if order >= 1 {
        let beta = 2.0 * c.beta;
        h += (kr(&o.a2(), &spin(beta, 0.0, 0.0)) + kr(&o.ba(), &spin(0.0, cc, -s)) * ci(c.xi)) * cr(tau_p);
    }
    if order >= 2 {
        let u = c.upsilon;
        let inner = o.bba() * cr(u / 24.0 - c.delta1) - o.a3() * cr(4.0 * c.delta4);
        h += (kr1(&o.aab()) * cr(u * u / 6.0 - c.delta2 - c.delta3) + kr(&inner, &tilt)) * cr(tau_p * tau_p);
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DcgVariant {
    FullEuler,
    PartialEuler,
    /// 16-slot DCG on an open four-qubit chain, qubits 0 and 2 rotated about `y`.
    Y3p,
    /// The same, reverse order then direct order.
    Y3pSymmetrized,
}

impl DcgVariant {
    pub fn num_baths(self) -> usize {
        match self {
            DcgVariant::FullEuler | DcgVariant::PartialEuler => 1,
            DcgVariant::Y3p | DcgVariant::Y3pSymmetrized => 4,
        }
    }

    pub fn max_order(self) -> usize {
        match self {
            DcgVariant::FullEuler | DcgVariant::PartialEuler => 2,
            DcgVariant::Y3p | DcgVariant::Y3pSymmetrized => 1,
        }
    }
}

/// Average Hamiltonian of a DCG sequence. `c` belongs to the rotation pulse
/// (angle `phi0` about `y`), `cpi` to the π pulses. Single-qubit variants act
/// on bath ⊗ spin; the chain variants on (bath₀ ⊗ … ⊗ bath₃) ⊗ (spin₀ ⊗ … ⊗
/// spin₃), with independent baths per qubit.
///
/// Orders beyond the leading one require the coefficient zeros under which
/// the expressions hold; a nonzero coefficient is an [`Error::Assumption`].
pub fn dcg_avg_ham(
    variant: DcgVariant,
    c: &PulseCoefficients,
    cpi: &PulseCoefficients,
    phi0: f64,
    baths: &[BathSpec],
    tau_p: f64,
    order: usize,
) -> Result<CMat> {
    check_order(order, variant.max_order())?;
    check_phi(c, phi0)?;
    check_phi(cpi, std::f64::consts::PI)?;
    if baths.len() != variant.num_baths() {
        return Err(Error::DimensionMismatch(format!("{:?} needs {} baths, got {}", variant, variant.num_baths(), baths.len())));
    }
    let (s, cc) = (0.5 * phi0).sin_cos();
    let (kappa, alpha, zeta) = (cpi.kappa(), 2.0 * cpi.alpha(), cpi.zeta());
    let (ups, beta, xi) = (c.upsilon, 2.0 * c.beta, c.xi);
    let t = tau_p;
    match variant {
        DcgVariant::FullEuler => {
            let o = Ops { a: &baths[0].a, b: &baths[0].b };
            let mut h = kr1(o.b);
            if order >= 1 {
                let h1 = kr(&o.ab(), &spin(0.0, 1.0, 0.0)) * ci(kappa / 2.0)
                    + kr(&o.a2(), &spin(0.0, beta / 4.0, -kappa * kappa / 4.0))
                    - kr(&o.ab(), &spin(2.0 * kappa - xi * cc - 2.0 * ups * s, 0.0, 5.0 * ups * cc - xi * s)) * ci(0.25);
                h += h1 * cr(t);
            }
            if order >= 2 {
                require("kappa", kappa)?;
                require("upsilon", ups)?;
                let (d1, d2, d3, d4) = (c.delta1, c.delta2, c.delta3, c.delta4);
                let (g2, g3) = (cpi.gamma(2), cpi.gamma(3));
                let h2 = kr(&o.a2b(), &spin(alpha / 2.0, -(8.0 * alpha + 29.0 * beta) / 16.0, 0.0)) * ci(1.0)
                    + kr(
                        &o.bba(),
                        &spin((29.0 * xi * cc + 6.0 * d1 * s) / 16.0, 0.0, (29.0 * xi * s - 6.0 * d1 * cc - 8.0 * zeta) / 16.0),
                    )
                    - kr1(&o.aab()) * cr(0.5 * (g2 + g3 + 1.75 * (d2 + d3)))
                    + kr(&o.a3(), &spin(s, 0.0, -cc)) * cr(1.5 * d4);
                h += h2 * cr(t * t);
            }
            Ok(h)
        }
        DcgVariant::PartialEuler => {
            let o = Ops { a: &baths[0].a, b: &baths[0].b };
            let mut h = kr1(o.b) - kr(o.a, &spin(1.0, 0.0, 0.0)) * cr(0.5 * ups * s);
            if order >= 1 {
                require("kappa", kappa)?;
                require("upsilon", ups)?;
                let h1 = kr(&o.a2(), &spin(alpha, beta, 0.0)) * cr(0.5) + kr(&o.ab(), &spin(cc, 0.0, s)) * ci(xi / 2.0);
                h += h1 * cr(t);
            }
            if order >= 2 {
                require("alpha", alpha)?;
                require("beta", beta)?;
                let (d1, d2, d3, d4) = (c.delta1, c.delta2, c.delta3, c.delta4);
                let (g2, g3) = (cpi.gamma(2), cpi.gamma(3));
                let h2 = kr(&o.a3(), &spin(5.0 * s * d4, 0.0, -3.0 * cc * d4))
                    - kr1(&o.aab()) * cr((g2 + g3) / 2.0 + 1.25 * (d2 + d3))
                    + kr(
                        &o.bba(),
                        &spin(11.0 * xi * cc / 8.0 + 1.25 * d1 * s, 0.0, -(zeta / 2.0 - 13.0 * xi * s / 8.0 + 0.75 * d1 * cc)),
                    );
                h += h2 * cr(t * t);
            }
            Ok(h)
        }
        DcgVariant::Y3p | DcgVariant::Y3pSymmetrized => {
            let chain = ChainSpace::new(baths);
            let mut h = CMat::zeros(chain.dim(), chain.dim());
            for (q, bath) in baths.iter().enumerate() {
                h += chain.local(q, &bath.b, &Mat2::identity());
            }
            if variant == DcgVariant::Y3p {
                for &q in &Y3P_TARGETS {
                    h -= chain.local(q, &baths[q].a, &spin(1.0, 0.0, 0.0)) * cr(0.5 * ups * s);
                }
            }
            if order >= 1 {
                require("kappa", kappa)?;
                require("alpha", alpha)?;
                require("upsilon", ups)?;
                require("beta", beta)?;
                if variant == DcgVariant::Y3p {
                    require("xi", xi)?;
                    for (q, bath) in baths.iter().enumerate() {
                        let coef = y3p_first_order_coefficient(q);
                        let ba = commutator(&bath.b, &bath.a);
                        h += chain.local(q, &ba, &spin(0.0, 0.0, 1.0)) * ci(coef * t);
                    }
                } else {
                    let (s2, c2) = phi0.sin_cos();
                    for &q in &Y3P_TARGETS {
                        let ab = commutator(&baths[q].a, &baths[q].b);
                        h += chain.local(q, &ab, &spin(c2, 0.0, s2)) * ci(t * xi * cc / 4.0);
                    }
                }
            }
            Ok(h)
        }
    }
}

/// Coefficient `c_q` of `i c_q τ_p σᶻ_q [B_q, A_q]` in the first-order
/// Hamiltonian of the chain DCG: −1/4 on rotated qubits, 1/4 on idle
/// sublattice-A qubits and 9/4 on idle sublattice-B qubits.
pub fn y3p_first_order_coefficient(q: usize) -> f64 {
    if Y3P_TARGETS.contains(&q) {
        -0.25
    } else if q % 2 == 0 {
        0.25
    } else {
        2.25
    }
}

/// Index bookkeeping for (⊗ baths) ⊗ (⊗ spins).
pub struct ChainSpace {
    dims: Vec<usize>,
}

impl ChainSpace {
    pub fn new(baths: &[BathSpec]) -> Self {
        ChainSpace { dims: baths.iter().map(|b| b.dim()).collect() }
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product::<usize>() << self.dims.len()
    }

    /// `op` on bath `q` times `s` on spin `q`.
    pub fn local(&self, q: usize, op: &CMat, s: &Mat2) -> CMat {
        let mut out = CMat::identity(1, 1);
        for (k, &d) in self.dims.iter().enumerate() {
            out = if k == q { out.kronecker(op) } else { out.kronecker(&CMat::identity(d, d)) };
        }
        for k in 0..self.dims.len() {
            out = if k == q { out.kronecker(&to_dyn(s)) } else { out.kronecker(&CMat::identity(2, 2)) };
        }
        out
    }

    /// Sum of single-qubit operators `Σ_q op_q`, each given on bath_q ⊗ spin_q.
    pub fn sum_local(&self, parts: &[CMat]) -> Result<CMat> {
        let mut out = CMat::zeros(self.dim(), self.dim());
        for (q, p) in parts.iter().enumerate() {
            let d = self.dims[q];
            if p.nrows() != 2 * d {
                return Err(Error::DimensionMismatch(format!("part {q} is {}×{}, expected {}", p.nrows(), p.ncols(), 2 * d)));
            }
            // p = Σ_{μ} P_μ ⊗ σ_μ with P_μ = ½ Tr_spin[(𝟙 ⊗ σ_μ) p].
            for m in [None, Some(Axis::X), Some(Axis::Y), Some(Axis::Z)] {
                let sig = match m {
                    None => Mat2::identity(),
                    Some(a) => pauli(a),
                };
                let mut bath = CMat::zeros(d, d);
                for i in 0..d {
                    for j in 0..d {
                        let mut acc = C64::new(0.0, 0.0);
                        for x in 0..2 {
                            for y in 0..2 {
                                acc += sig[(y, x)] * p[(2 * i + x, 2 * j + y)];
                            }
                        }
                        bath[(i, j)] = acc * 0.5;
                    }
                }
                out += self.local(q, &bath, &sig);
            }
        }
        Ok(out)
    }
}

/// Numerical `H̄` of `schedule` for `h0` on bath ⊗ spins, with the pulse
/// length scaled to `tau_p`. Requires `‖h0‖ τ_p T < π` so that the
/// eigenphases of the slow propagator cannot wrap.
pub fn numeric_avg_ham(schedule: &Schedule, h0: &CMat, tau_p: f64, steps_per_tau_p: usize) -> Result<CMat> {
    let phase = op_norm(h0) * tau_p * schedule.total_duration;
    if !(phase < PI) {
        return Err(Error::InvalidInput(format!("‖H0‖·τ_p·T = {phase:.3} ≥ π: the extracted H̄ would be ambiguous")));
    }
    let (r, _) = toggling_propagator(schedule, h0, tau_p, steps_per_tau_p)?;
    extract_avg_hamiltonian(&r, tau_p * schedule.total_duration)
}

/// What `avgham_check` compares: one pulse about `x`, or a DCG variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckSubject {
    Pulse,
    Dcg(DcgVariant),
}

impl CheckSubject {
    pub fn num_baths(self) -> usize {
        match self {
            CheckSubject::Pulse => 1,
            CheckSubject::Dcg(v) => v.num_baths(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvghamCheck {
    pub tau_p: Vec<f64>,
    pub residual: Vec<f64>,
    /// Least-squares exponent of `residual` against `tau_p`.
    pub fitted_order: f64,
}

/// `‖H̄_numeric − H̄_analytic‖` over `taus`, with the analytic expansion
/// truncated at `order`. The rotation pulse is `lib.rotation(axis, phi0)`
/// (about `x` for a single pulse, `y` for DCGs) and π pulses come from
/// `lib.pi()`.
pub fn avgham_check(
    subject: CheckSubject,
    lib: &PulseLibrary,
    phi0: f64,
    baths: &[BathSpec],
    order: usize,
    taus: &[f64],
    steps_per_tau_p: usize,
) -> Result<AvghamCheck> {
    if baths.len() != subject.num_baths() {
        return Err(Error::DimensionMismatch(format!("{subject:?} needs {} baths, got {}", subject.num_baths(), baths.len())));
    }
    if taus.len() < 2 || taus.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidInput(format!("need at least two positive τ_p values, got {taus:?}")));
    }
    let axis = if subject == CheckSubject::Pulse { Axis::X } else { Axis::Y };
    let rot = lib.rotation(axis, phi0)?;
    let c = compute_coefficients(&rot)?;
    let pi = lib.pi()?;
    let cpi = compute_coefficients(&pi)?;
    let chain = build_graph(GraphKind::Chain, 4, 0.0)?;
    let schedule = match subject {
        CheckSubject::Pulse => {
            let mut s = Schedule::idle(1, rot.duration);
            s.push(Segment::shaped(0, rot.clone(), 0.0));
            s
        }
        CheckSubject::Dcg(DcgVariant::FullEuler) => eulerian_dcg(EulerVariant::Full, &rot, &pi)?,
        CheckSubject::Dcg(DcgVariant::PartialEuler) => eulerian_dcg(EulerVariant::Partial, &rot, &pi)?,
        CheckSubject::Dcg(DcgVariant::Y3p) => dcg_single(Axis::Y, phi0, &Y3P_TARGETS, &chain, lib)?,
        CheckSubject::Dcg(DcgVariant::Y3pSymmetrized) => dcg_symmetrized(Axis::Y, phi0, &Y3P_TARGETS, &chain, lib)?,
    };
    let mut residual = Vec::with_capacity(taus.len());
    for &tau in taus {
        let (numeric, analytic) = match subject {
            CheckSubject::Pulse => (
                numeric_avg_ham(&schedule, &baths[0].hamiltonian(), tau, steps_per_tau_p)?,
                pulse_avg_ham(&c, phi0, &baths[0], tau, order)?,
            ),
            CheckSubject::Dcg(v @ (DcgVariant::FullEuler | DcgVariant::PartialEuler)) => (
                numeric_avg_ham(&schedule, &baths[0].hamiltonian(), tau, steps_per_tau_p)?,
                dcg_avg_ham(v, &c, &cpi, phi0, baths, tau, order)?,
            ),
            CheckSubject::Dcg(v) => {
                // Qubits are uncoupled here, so the joint H̄ is a sum of single-qubit ones.
                let parts = (0..4)
                    .map(|q| numeric_avg_ham(&schedule.restrict(q), &baths[q].hamiltonian(), tau, steps_per_tau_p))
                    .collect::<Result<Vec<_>>>()?;
                (ChainSpace::new(baths).sum_local(&parts)?, dcg_avg_ham(v, &c, &cpi, phi0, baths, tau, order)?)
            }
        };
        residual.push(op_norm(&(numeric - analytic)));
    }
    let fitted_order = fit_slope(taus, &residual, 0.0, f64::INFINITY)?;
    Ok(AvghamCheck { tau_p: taus.to_vec(), residual, fitted_order })
}
