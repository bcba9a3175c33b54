//! Shaped single-axis pulses and their Magnus coefficients.
//!
//! A Fourier shape is `V(t) = s·λ·Σ_k a_k [1 − cos(2πk t/D)]` on `0 ≤ t ≤ D`,
//! with sign `s`, amplitude scale `λ` and duration `D`. The nominal pulse has
//! `D = 1, λ = 1`; the stretched companion has `D = 2, λ = 1/2`. Both rotate
//! by `φ₀ = Σ_k a_k`.

use crate::error::{Error, Result};
use crate::linalg::Axis;
use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::num::NonZeroUsize;

pub const DEFAULT_QUADRATURE_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    #[default]
    Fourier,
    /// Constant amplitude; does not vanish at the edges.
    Square,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseShape {
    pub axis: Axis,
    pub phi0: f64,
    pub fourier_amps: Vec<f64>,
    pub duration: f64,
    pub sign: i8,
    pub amplitude_scale: f64,
    #[serde(default)]
    pub kind: ShapeKind,
}

impl PulseShape {
    /// Nominal-length shape with `φ₀ = Σ a_k`.
    pub fn fourier(axis: Axis, amps: Vec<f64>) -> Self {
        let phi0 = amps.iter().sum();
        PulseShape { axis, phi0, fourier_amps: amps, duration: 1.0, sign: 1, amplitude_scale: 1.0, kind: ShapeKind::Fourier }
    }

    /// Single harmonic, no coefficient zeroed.
    pub fn gaussian_like(axis: Axis, phi0: f64) -> Self {
        Self::fourier(axis, vec![phi0])
    }

    pub fn square(axis: Axis, phi0: f64) -> Self {
        PulseShape { axis, phi0, fourier_amps: vec![], duration: 1.0, sign: 1, amplitude_scale: 1.0, kind: ShapeKind::Square }
    }

    /// `V(t/2)/2` over twice the duration.
    pub fn stretched(&self) -> Self {
        PulseShape { duration: 2.0 * self.duration, amplitude_scale: 0.5 * self.amplitude_scale, ..self.clone() }
    }

    pub fn negated(&self) -> Self {
        PulseShape { sign: -self.sign, ..self.clone() }
    }

    pub fn with_axis(&self, axis: Axis) -> Self {
        PulseShape { axis, ..self.clone() }
    }

    /// Signed rotation angle produced by the pulse.
    pub fn net_angle(&self) -> f64 {
        f64::from(self.sign) * self.phi0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::InvalidPulse(format!("duration {}", self.duration)));
        }
        if self.sign != 1 && self.sign != -1 {
            return Err(Error::InvalidPulse(format!("sign {}", self.sign)));
        }
        if !self.phi0.is_finite() || !self.amplitude_scale.is_finite() {
            return Err(Error::InvalidPulse("non-finite parameter".into()));
        }
        let area = match self.kind {
            ShapeKind::Fourier => {
                if self.fourier_amps.is_empty() {
                    return Err(Error::InvalidPulse("no Fourier amplitudes".into()));
                }
                self.amplitude_scale * self.duration * self.fourier_amps.iter().sum::<f64>()
            }
            ShapeKind::Square => self.amplitude_scale * self.duration * self.phi0,
        };
        if (area - self.phi0).abs() > 1e-12 * self.phi0.abs().max(1.0) {
            return Err(Error::InvalidPulse(format!("area {area} does not match phi0 {}", self.phi0)));
        }
        Ok(())
    }

    /// Control amplitude `V(t)`, zero outside the support.
    pub fn amplitude(&self, t: f64) -> f64 {
        if t < 0.0 || t > self.duration {
            return 0.0;
        }
        let pre = f64::from(self.sign) * self.amplitude_scale;
        match self.kind {
            ShapeKind::Square => pre * self.phi0,
            ShapeKind::Fourier => {
                let w = 2.0 * PI * t / self.duration;
                pre * self
                    .fourier_amps
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a * (1.0 - ((k + 1) as f64 * w).cos()))
                    .sum::<f64>()
            }
        }
    }

    /// `φ(t)` without the support check.
    pub(crate) fn phase_unchecked(&self, t: f64) -> f64 {
        let pre = f64::from(self.sign) * self.amplitude_scale;
        match self.kind {
            ShapeKind::Square => pre * self.phi0 * t,
            ShapeKind::Fourier => {
                let d = self.duration;
                pre * self
                    .fourier_amps
                    .iter()
                    .enumerate()
                    .map(|(k, a)| {
                        let kk = (k + 1) as f64;
                        a * (t - d * (2.0 * PI * kk * t / d).sin() / (2.0 * PI * kk))
                    })
                    .sum::<f64>()
            }
        }
    }

    /// Accumulated angle `φ(t) = ∫₀ᵗ V`.
    pub fn phase_profile(&self, t: f64) -> Result<f64> {
        let tol = 1e-12 * self.duration;
        if !(t >= -tol && t <= self.duration + tol) {
            return Err(Error::OutsideSupport { t, duration: self.duration });
        }
        Ok(self.phase_unchecked(t.clamp(0.0, self.duration)))
    }

    /// Symmetrized angle `ϕ(t) = φ(t) − φ(D)/2`.
    pub fn symmetrized_phase(&self, t: f64) -> Result<f64> {
        Ok(self.phase_profile(t)? - 0.5 * self.net_angle())
    }

    /// `max |V(t)|` sampled on a fine grid.
    pub fn peak_amplitude(&self) -> f64 {
        let n = 4000;
        (0..=n)
            .map(|i| self.amplitude(self.duration * i as f64 / n as f64).abs())
            .fold(0.0, f64::max)
    }

    /// Largest violation of `V(D − t) = V(t)` on a sample grid.
    pub fn asymmetry(&self) -> f64 {
        let n = 257;
        (0..=n)
            .map(|i| {
                let t = self.duration * i as f64 / n as f64;
                (self.amplitude(t) - self.amplitude(self.duration - t)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Magnus coefficients of one pulse. At `φ₀ = π` the same numbers are the
/// aliases `κ = υ`, `α = β`, `ζ = ξ`, `γ_j = δ_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseCoefficients {
    pub phi0: f64,
    pub upsilon: f64,
    pub beta: f64,
    pub xi: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub delta4: f64,
    pub delta5: f64,
}

impl PulseCoefficients {
    pub fn kappa(&self) -> f64 {
        self.upsilon
    }
    pub fn alpha(&self) -> f64 {
        self.beta
    }
    pub fn zeta(&self) -> f64 {
        self.xi
    }
    /// `γ_j`, `j = 1..=5`.
    pub fn gamma(&self, j: usize) -> f64 {
        self.delta(j)
    }
    pub fn delta(&self, j: usize) -> f64 {
        match j {
            1 => self.delta1,
            2 => self.delta2,
            3 => self.delta3,
            4 => self.delta4,
            5 => self.delta5,
            _ => panic!("delta index {j} out of range 1..=5"),
        }
    }
    pub fn is_finite(&self) -> bool {
        [self.upsilon, self.beta, self.xi, self.delta1, self.delta2, self.delta3, self.delta4, self.delta5]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Gauss–Legendre rule mapped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct UnitRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl UnitRule {
    pub fn new(points: usize) -> Self {
        let gl = GaussLegendre::new(NonZeroUsize::new(points.max(1)).unwrap());
        let (nodes, weights) = gl
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
            .unzip();
        UnitRule { nodes, weights }
    }
}

pub fn compute_coefficients(shape: &PulseShape) -> Result<PulseCoefficients> {
    compute_coefficients_with(shape, DEFAULT_QUADRATURE_POINTS)
}

/// Coefficients with an explicit number of quadrature points per axis.
///
/// Times are measured in units of the pulse duration, so a stretched pulse has
/// the same coefficients as its nominal shape.
pub fn compute_coefficients_with(shape: &PulseShape, points: usize) -> Result<PulseCoefficients> {
    shape.validate()?;
    let asym = shape.asymmetry();
    if asym > 1e-9 * shape.peak_amplitude().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    let rule = UnitRule::new(points);
    let d = shape.duration;
    let half = 0.5 * shape.net_angle();
    let vphi = |u: f64| shape.phase_unchecked(u * d) - half;
    let phi = |u: f64| shape.phase_unchecked(u * d);

    let (upsilon, xi) = rule.nodes.iter().zip(&rule.weights).fold((0.0, 0.0), |(up, xi), (&u, &w)| {
        let (s, c) = vphi(u).sin_cos();
        (up + w * c, xi + w * (u - 0.5) * s)
    });

    let mut beta = 0.0;
    for (&tp, &wp) in rule.nodes.iter().zip(&rule.weights) {
        let p2 = phi(tp);
        let inner: f64 = rule.nodes.iter().zip(&rule.weights).map(|(&x, &w)| w * (p2 - phi(x * tp)).sin()).sum();
        beta += wp * tp * inner;
    }
    beta *= 0.5;

    // Nested simplex integrals <f3 f2 f1> over 0 < t1 < t2 < t3 < 1.
    let triple = |f3: &dyn Fn(f64) -> f64, f2: &dyn Fn(f64) -> f64, f1: &dyn Fn(f64) -> f64| -> f64 {
        let mut total = 0.0;
        for (&x3, &w3) in rule.nodes.iter().zip(&rule.weights) {
            let t3 = x3;
            let mut i2 = 0.0;
            for (&x2, &w2) in rule.nodes.iter().zip(&rule.weights) {
                let t2 = x2 * t3;
                let i1: f64 = rule.nodes.iter().zip(&rule.weights).map(|(&x1, &w1)| w1 * f1(x1 * t2)).sum::<f64>() * t2;
                i2 += w2 * f2(t2) * i1;
            }
            total += w3 * f3(t3) * i2 * t3;
        }
        total
    };
    let c = |u: f64| vphi(u).cos();
    let s = |u: f64| vphi(u).sin();
    let e = |_: f64| 1.0;
    // <c3 e2 e1> = ∫ c(t) t²/2 dt exactly.
    let ce: f64 = rule.nodes.iter().zip(&rule.weights).map(|(&u, &w)| w * c(u) * u * u / 2.0).sum();
    let delta1 = ce - upsilon / 8.0;
    let delta2 = triple(&s, &s, &e);
    let delta3 = triple(&c, &c, &e);
    let delta4 = triple(&s, &s, &c);
    let delta5 = triple(&s, &c, &c);

    let out = PulseCoefficients { phi0: shape.net_angle(), upsilon, beta, xi, delta1, delta2, delta3, delta4, delta5 };
    if !out.is_finite() {
        return Err(Error::InvalidPulse("non-finite coefficient".into()));
    }
    Ok(out)
}

/// A back-to-back group of pulses on one qubit, offsets from its start.
#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub pulses: Vec<(f64, PulseShape)>,
    pub duration: f64,
}

/// `V(t)` followed by `−V(2τ_p − t)`: a zero-angle pair.
pub fn make_identity_pair(shape: &PulseShape) -> Result<Fragment> {
    shape.validate()?;
    if (shape.duration - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidPulse(format!("identity pair needs a nominal-length pulse, got duration {}", shape.duration)));
    }
    Ok(Fragment { pulses: vec![(0.0, shape.clone()), (1.0, shape.negated())], duration: 2.0 })
}

/// `υ` and `β` with analytic gradients in the amplitudes, for `D = 1`.
struct Constraints {
    order: usize,
    phi0: f64,
    m: usize,
    weights: Vec<f64>,
    /// `basis(k, u_i)` at the outer nodes, row-major `[i][k]`.
    outer: Vec<f64>,
    /// `basis(k, x_j u_i)`, row-major `[i][j][k]`.
    inner: Vec<f64>,
    /// `½ w_i u_i w_j`.
    inner_w: Vec<f64>,
}

impl Constraints {
    fn new(rule: &UnitRule, order: usize, phi0: f64, m: usize) -> Self {
        let n = rule.nodes.len();
        let mut outer = Vec::with_capacity(n * m);
        let mut inner = Vec::with_capacity(n * n * m);
        let mut inner_w = Vec::with_capacity(n * n);
        for (&tp, &wp) in rule.nodes.iter().zip(&rule.weights) {
            outer.extend((0..m).map(|k| Self::basis(k, tp)));
            if order >= 2 {
                for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                    inner.extend((0..m).map(|k| Self::basis(k, x * tp)));
                    inner_w.push(0.5 * wp * tp * w);
                }
            }
        }
        Self { order, phi0, m, weights: rule.weights.clone(), outer, inner, inner_w }
    }

    fn basis(k: usize, t: f64) -> f64 {
        let kk = k as f64 + 1.0;
        t - (2.0 * PI * kk * t).sin() / (2.0 * PI * kk)
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    /// Residuals and Jacobian rows.
    fn eval(&self, a: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let m = self.m;
        let sum: f64 = a.iter().sum();
        let mut f = vec![sum - self.phi0];
        let mut jac = vec![vec![1.0; m]];

        let mut ups = 0.0;
        let mut dups = vec![0.0; m];
        for (row, &w) in self.outer.chunks_exact(m).zip(&self.weights) {
            let vphi = Self::dot(a, row) - 0.5 * sum;
            let (s, c) = vphi.sin_cos();
            ups += w * c;
            for (dk, bk) in dups.iter_mut().zip(row) {
                *dk -= w * s * (bk - 0.5);
            }
        }
        f.push(ups);
        jac.push(dups);

        if self.order >= 2 {
            let n = self.weights.len();
            let mut beta = 0.0;
            let mut dbeta = vec![0.0; m];
            for (i, orow) in self.outer.chunks_exact(m).enumerate() {
                let p2 = Self::dot(a, orow);
                for j in 0..n {
                    let idx = i * n + j;
                    let irow = &self.inner[idx * m..(idx + 1) * m];
                    let (s, c) = (p2 - Self::dot(a, irow)).sin_cos();
                    let ww = self.inner_w[idx];
                    beta += ww * s;
                    let wc = ww * c;
                    for ((dk, ob), ib) in dbeta.iter_mut().zip(orow).zip(irow) {
                        *dk += wc * (ob - ib);
                    }
                }
            }
            f.push(beta);
            jac.push(dbeta);
        }
        (f, jac)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimum-norm Newton step `J^T (J J^T)^{-1} (−f)`.
fn newton_step(f: &[f64], jac: &[Vec<f64>]) -> Option<Vec<f64>> {
    let r = f.len();
    let m = jac[0].len();
    let jjt = nalgebra::DMatrix::from_fn(r, r, |i, j| (0..m).map(|k| jac[i][k] * jac[j][k]).sum::<f64>());
    let rhs = nalgebra::DVector::from_iterator(r, f.iter().map(|x| -x));
    let y = jjt.lu().solve(&rhs)?;
    Some((0..m).map(|k| (0..r).map(|i| jac[i][k] * y[i]).sum()).collect())
}

fn damped_newton(cons: &Constraints, mut a: Vec<f64>, tol: f64) -> Option<Vec<f64>> {
    let (mut f, mut jac) = cons.eval(&a);
    let mut norm = max_abs(&f);
    for _ in 0..80 {
        if norm < tol {
            return Some(a);
        }
        let step = newton_step(&f, &jac)?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = a.iter().zip(&step).map(|(x, d)| x + lambda * d).collect();
            let (ft, jt) = cons.eval(&trial);
            let nt = max_abs(&ft);
            if nt.is_finite() && nt < norm * (1.0 - 1e-4 * lambda) {
                a = trial;
                f = ft;
                jac = jt;
                norm = nt;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return None;
            }
        }
        if max_abs(&a) > 1e3 {
            return None;
        }
    }
    (norm < tol).then_some(a)
}

/// Search for a self-refocusing shape: `υ = 0` (order 1), additionally
/// `β = 0` (order 2), with `Σ a_k = φ₀`.
///
/// Damped Newton runs from a fixed low-discrepancy set of starting points;
/// among the converged roots the one with the smallest peak amplitude wins.
pub fn find_self_refocusing(order: usize, phi0: f64, num_harmonics: usize) -> Result<PulseShape> {
    if !(1..=2).contains(&order) {
        return Err(Error::InvalidInput(format!("self-refocusing order must be 1 or 2, got {order}")));
    }
    if num_harmonics < order + 1 {
        return Err(Error::InfeasibleHarmonics { needed: order + 1, got: num_harmonics });
    }
    if !phi0.is_finite() || phi0 == 0.0 {
        return Err(Error::InvalidInput(format!("target angle {phi0}")));
    }
    let m = num_harmonics;
    let cons = Constraints::new(&UnitRule::new(DEFAULT_QUADRATURE_POINTS), order, phi0, m);
    let tol = 1e-13;
    // Additive recurrence with square roots of primes: deterministic and well spread.
    let gens: Vec<f64> = [2.0f64, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0].iter().cycle().take(m).map(|p| p.sqrt().fract()).collect();
    let starts = 160;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut best_residual = f64::INFINITY;
    for s in 0..starts {
        let radius = [4.0, 8.0, 16.0, 32.0][s % 4] * phi0.abs().max(0.5);
        let a0: Vec<f64> = (0..m)
            .map(|k| phi0 / m as f64 + radius * (2.0 * ((s as f64 + 1.0) * gens[k]).fract() - 1.0))
            .collect();
        let Some(a) = damped_newton(&cons, a0, tol) else {
            continue;
        };
        let (f, _) = cons.eval(&a);
        best_residual = best_residual.min(max_abs(&f));
        let shape = PulseShape::fourier(Axis::X, a.clone());
        let peak = shape.peak_amplitude();
        let better = match &best {
            None => true,
            Some((p, b)) => peak < p - 1e-9 || ((peak - p).abs() <= 1e-9 && a.partial_cmp(b) == Some(std::cmp::Ordering::Less)),
        };
        if better {
            best = Some((peak, a));
        }
    }
    match best {
        Some((_, a)) => {
            let mut shape = PulseShape::fourier(Axis::X, a);
            shape.phi0 = phi0;
            Ok(shape)
        }
        None => Err(Error::NoConvergence { residual: best_residual }),
    }
}
