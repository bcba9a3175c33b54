//! Small complex linear-algebra helpers shared by the simulation modules.
//!
//! Qubit `q` of an `n`-qubit register is bit `n - 1 - q` of the basis index,
//! so qubit 0 is the leftmost Kronecker factor. Basis bit 0 is the `σᶻ = +1`
//! state.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type Mat2 = Matrix2<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

impl FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            _ => Err(format!("unknown axis '{s}'")),
        }
    }
}

pub fn pauli(axis: Axis) -> Mat2 {
    match axis {
        Axis::X => Mat2::new(ZERO, ONE, ONE, ZERO),
        Axis::Y => Mat2::new(ZERO, -I, I, ZERO),
        Axis::Z => Mat2::new(ONE, ZERO, ZERO, -ONE),
    }
}

pub fn id2() -> Mat2 {
    Mat2::identity()
}

/// `exp(-i angle σ/2)`.
pub fn rotation(axis: Axis, angle: f64) -> Mat2 {
    let (s, c) = (angle / 2.0).sin_cos();
    id2() * C64::new(c, 0.0) - pauli(axis) * C64::new(0.0, s)
}

pub fn to_dyn(m: &Mat2) -> CMat {
    CMat::from_fn(2, 2, |r, c| m[(r, c)])
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Full `2^n` matrix of a single-qubit operator acting on qubit `q`.
pub fn embed(n: usize, q: usize, m: &Mat2) -> CMat {
    let mut u = CMat::identity(1 << n, 1 << n);
    apply_left(&mut u, n, q, m);
    u
}

/// `U <- (m on qubit q) U`.
pub fn apply_left(u: &mut CMat, n: usize, q: usize, m: &Mat2) {
    let mask = 1usize << (n - 1 - q);
    let dim = u.nrows();
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    for column in u.as_mut_slice().chunks_exact_mut(dim) {
        for r0 in (0..dim).filter(|r| r & mask == 0) {
            let r1 = r0 | mask;
            let (x0, x1) = (column[r0], column[r1]);
            column[r0] = a * x0 + b * x1;
            column[r1] = c * x0 + d * x1;
        }
    }
}

/// `σᶻ` eigenvalue (±1) of qubit `q` in basis state `idx`.
#[inline]
pub fn z_of(idx: usize, n: usize, q: usize) -> f64 {
    if idx >> (n - 1 - q) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn dagger(a: &CMat) -> CMat {
    a.adjoint()
}

/// Largest singular value.
pub fn op_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// `‖U†U − 𝟙‖` in operator norm.
pub fn unitarity_defect(u: &CMat) -> f64 {
    let n = u.nrows();
    op_norm(&(u.adjoint() * u - CMat::identity(n, n)))
}

pub fn hermitian_defect(h: &CMat) -> f64 {
    op_norm(&(h - h.adjoint()))
}

/// `exp(-i t H)` for Hermitian `H`.
pub fn expm_hermitian(h: &CMat, t: f64) -> CMat {
    let herm = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let q = &eig.eigenvectors;
    let n = h.nrows();
    let mut d = CMat::zeros(n, n);
    for k in 0..n {
        d[(k, k)] = C64::from_polar(1.0, -t * eig.eigenvalues[k]);
    }
    q * d * q.adjoint()
}

/// Operators on `2^n` qubits given as a word over {I, X, Y, Z}.
pub fn pauli_word(word: &[Option<Axis>]) -> CMat {
    let mut out = CMat::identity(1, 1);
    for p in word {
        let m = match p {
            None => CMat::identity(2, 2),
            Some(a) => to_dyn(&pauli(*a)),
        };
        out = kron(&out, &m);
    }
    out
}

/// Hilbert–Schmidt inner product `Tr(A† B)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}
