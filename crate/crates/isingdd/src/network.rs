//! Bipartite Ising networks, chemical-shift disorder and the dense Hamiltonian
//! `H = ½ΣJ_ij σᶻᵢσᶻⱼ + ½ΣΔᵢσᶻᵢ + ½ΣV_iμ σᵢ^μ`.

use crate::error::{Error, Result};
use crate::linalg::{apply_left, pauli, z_of, Axis, CMat, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, VecDeque};

pub const MAX_DENSE_QUBITS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
}

impl Sublattice {
    pub fn other(self) -> Self {
        match self {
            Sublattice::A => Sublattice::B,
            Sublattice::B => Sublattice::A,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Chain,
    Star,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitGraph {
    pub n: usize,
    /// `(i, j, J_ij)` with `i < j`.
    pub edges: Vec<(usize, usize, f64)>,
    pub sublattice: Vec<Sublattice>,
}

/// On-disk graph description: `{kind, n, J, edges?, labels?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub kind: GraphKind,
    pub n: usize,
    #[serde(rename = "J")]
    pub coupling: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<Sublattice>>,
}

impl GraphSpec {
    pub fn build(&self) -> Result<QubitGraph> {
        let g = match self.kind {
            GraphKind::Custom => {
                let edges = self.edges.as_ref().ok_or_else(|| Error::InvalidGraph("custom graph needs edges".into()))?;
                QubitGraph::from_edges(self.n, edges.iter().map(|&(i, j)| (i, j, self.coupling)).collect())?
            }
            kind => build_graph(kind, self.n, self.coupling)?,
        };
        if let Some(labels) = &self.labels {
            g.check_labels(labels)?;
            return Ok(QubitGraph { sublattice: labels.clone(), ..g });
        }
        Ok(g)
    }
}

/// Star (hub 0, leaves 1..n) or chain (path 0–1–…–n−1) with uniform coupling.
pub fn build_graph(kind: GraphKind, n: usize, coupling: f64) -> Result<QubitGraph> {
    if n < 2 {
        return Err(Error::InvalidGraph(format!("need at least 2 qubits, got {n}")));
    }
    let edges: Vec<(usize, usize, f64)> = match kind {
        GraphKind::Star => (1..n).map(|j| (0, j, coupling)).collect(),
        GraphKind::Chain => (0..n - 1).map(|i| (i, i + 1, coupling)).collect(),
        GraphKind::Custom => return Err(Error::InvalidGraph("custom graphs are built from an edge list".into())),
    };
    QubitGraph::from_edges(n, edges)
}

impl QubitGraph {
    /// Validates the edge list and 2-colours it (lowest index of each
    /// component on sublattice A).
    pub fn from_edges(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut norm = Vec::with_capacity(edges.len());
        for (i, j, c) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop on {i}")));
            }
            if !c.is_finite() {
                return Err(Error::InvalidGraph(format!("coupling on ({i}, {j}) is not finite")));
            }
            let (a, b) = (i.min(j), i.max(j));
            if !seen.insert((a, b)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({a}, {b})")));
            }
            norm.push((a, b, c));
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b, _) in &norm {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut colour: Vec<Option<Sublattice>> = vec![None; n];
        for root in 0..n {
            if colour[root].is_some() {
                continue;
            }
            colour[root] = Some(Sublattice::A);
            let mut queue = VecDeque::from([root]);
            while let Some(v) = queue.pop_front() {
                let cv = colour[v].unwrap();
                for &w in &adj[v] {
                    match colour[w] {
                        None => {
                            colour[w] = Some(cv.other());
                            queue.push_back(w);
                        }
                        Some(cw) if cw == cv => {
                            return Err(Error::NotBipartite(format!("odd cycle through edge ({v}, {w})")));
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(QubitGraph { n, edges: norm, sublattice: colour.into_iter().map(Option::unwrap).collect() })
    }

    fn check_labels(&self, labels: &[Sublattice]) -> Result<()> {
        if labels.len() != self.n {
            return Err(Error::InvalidGraph(format!("{} labels for {} qubits", labels.len(), self.n)));
        }
        for &(i, j, _) in &self.edges {
            if labels[i] == labels[j] {
                return Err(Error::NotBipartite(format!("edge ({i}, {j}) joins equal labels")));
            }
        }
        Ok(())
    }

    pub fn neighbors(&self, q: usize) -> Vec<(usize, f64)> {
        self.edges
            .iter()
            .filter_map(|&(i, j, c)| if i == q { Some((j, c)) } else if j == q { Some((i, c)) } else { None })
            .collect()
    }

    pub fn degree(&self, q: usize) -> usize {
        self.edges.iter().filter(|&&(i, j, _)| i == q || j == q).count()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|q| self.degree(q)).max().unwrap_or(0)
    }

    pub fn coupling(&self, a: usize, b: usize) -> Option<f64> {
        let (i, j) = (a.min(b), a.max(b));
        self.edges.iter().find(|&&(x, y, _)| x == i && y == j).map(|e| e.2)
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.coupling(a, b).is_some()
    }

    /// True when no two of `qubits` share an edge.
    pub fn independent(&self, qubits: &[usize]) -> bool {
        qubits.iter().enumerate().all(|(k, &a)| qubits[k + 1..].iter().all(|&b| !self.adjacent(a, b)))
    }

    pub fn on(&self, s: Sublattice) -> Vec<usize> {
        (0..self.n).filter(|&q| self.sublattice[q] == s).collect()
    }

    pub fn with_coupling(&self, coupling: f64) -> Self {
        QubitGraph { edges: self.edges.iter().map(|&(i, j, _)| (i, j, coupling)).collect(), ..self.clone() }
    }
}

/// Zero-mean Gaussian chemical shifts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderModel {
    pub delta_rms: f64,
    pub seed: u64,
    pub num_draws: usize,
}

impl DisorderModel {
    /// Unit-variance draw `k`: the stream index is the draw number, so a draw
    /// does not depend on which other draws were generated.
    pub fn unit_draw(seed: u64, k: usize, n: usize) -> Vec<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    pub fn draw(&self, k: usize, n: usize) -> Vec<f64> {
        Self::unit_draw(self.seed, k, n).into_iter().map(|g| g * self.delta_rms).collect()
    }
}

/// Diagonal of the drift part `½ΣJ zz + ½ΣΔ z` in the computational basis.
pub fn drift_diagonal(graph: &QubitGraph, deltas: &[f64]) -> Vec<f64> {
    let n = graph.n;
    (0..1usize << n)
        .map(|r| {
            let zz: f64 = graph.edges.iter().map(|&(i, j, c)| c * z_of(r, n, i) * z_of(r, n, j)).sum();
            let z: f64 = deltas.iter().enumerate().map(|(i, d)| d * z_of(r, n, i)).sum();
            0.5 * (zz + z)
        })
        .collect()
}

/// Dense Hamiltonian at one instant; `drive` lists `(qubit, axis, V)`.
pub fn assemble_hamiltonian(graph: &QubitGraph, deltas: &[f64], drive: &[(usize, Axis, f64)]) -> Result<CMat> {
    let n = graph.n;
    if n > MAX_DENSE_QUBITS {
        return Err(Error::DimensionOverflow(n));
    }
    if deltas.len() != n {
        return Err(Error::DimensionMismatch(format!("{} chemical shifts for {n} qubits", deltas.len())));
    }
    let dim = 1usize << n;
    let diag = drift_diagonal(graph, deltas);
    let mut h = CMat::from_diagonal(&nalgebra::DVector::from_iterator(dim, diag.iter().map(|&d| C64::new(d, 0.0))));
    for &(q, axis, v) in drive {
        if q >= n {
            return Err(Error::DimensionMismatch(format!("drive on qubit {q} of {n}")));
        }
        let mut term = CMat::identity(dim, dim);
        apply_left(&mut term, n, q, &pauli(axis));
        h += term * C64::new(0.5 * v, 0.0);
    }
    Ok(h)
}
