//! Error-budget arithmetic for large lattices: rooted cluster counts on the
//! degree-`z` tree, per-pulse and per-cluster amplitude bounds, covered
//! fractions and the toric-code cycle estimate.
//!
//! Two cluster conventions appear: `N_s` counts `s`-site clusters containing
//! the root ([`cluster_count`]); the amplitude bounds are per `s`-bond
//! cluster ([`cluster_norm_bound`]).

use crate::error::{Error, Result};
use crate::network::QubitGraph;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI};

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

/// Number of `s`-site clusters containing a given site of the infinite tree
/// with coordination `z`: `s z [(z−1)s]! / (s! [(z−2)s+2]!)`, and `s + 1`
/// for `z = 2`.
pub fn cluster_count(z: usize, s: usize) -> Result<BigUint> {
    if s == 0 {
        return Err(Error::InvalidInput("cluster size must be at least 1".into()));
    }
    match z {
        0 | 1 => Err(Error::InvalidInput(format!("coordination {z} < 2"))),
        2 => Ok(BigUint::from(s + 1)),
        _ => {
            let num = BigUint::from(s * z) * factorial((z - 1) * s);
            let den = factorial(s) * factorial((z - 2) * s + 2);
            Ok(num / den)
        }
    }
}

/// Perimeter `t_z(s) = s(z−2) + 2` of an `s`-site tree cluster.
pub fn tree_perimeter(z: usize, s: usize) -> usize {
    s * (z - 2) + 2
}

/// Brute-force enumeration of rooted `s`-site clusters on the degree-`z`
/// tree. Returns the perimeter (number of boundary sites) of every cluster.
pub fn enumerate_rooted_clusters(z: usize, s: usize) -> Vec<usize> {
    // Sites are paths from the root; a site's neighbours are its parent and
    // its children (z children at the root, z − 1 elsewhere).
    type Site = Vec<u8>;
    fn neighbours(z: usize, v: &Site) -> Vec<Site> {
        let mut out = Vec::new();
        if !v.is_empty() {
            out.push(v[..v.len() - 1].to_vec());
        }
        let kids = if v.is_empty() { z } else { z - 1 };
        for k in 0..kids {
            let mut c = v.clone();
            c.push(k as u8);
            out.push(c);
        }
        out
    }
    fn perimeter(z: usize, cluster: &[Site]) -> usize {
        let mut seen: Vec<Site> = Vec::new();
        for v in cluster {
            for w in neighbours(z, v) {
                if !cluster.contains(&w) && !seen.contains(&w) {
                    seen.push(w);
                }
            }
        }
        seen.len()
    }
    // Redelmeier's algorithm: each cluster is generated exactly once.
    fn grow(z: usize, s: usize, cluster: &mut Vec<Site>, untried: Vec<Site>, blocked: &mut Vec<Site>, out: &mut Vec<usize>) {
        if cluster.len() == s {
            out.push(perimeter(z, cluster));
            return;
        }
        let mut untried = untried;
        while let Some(v) = untried.pop() {
            cluster.push(v.clone());
            let mut next = untried.clone();
            let mut added = Vec::new();
            for w in neighbours(z, &v) {
                if !blocked.contains(&w) {
                    blocked.push(w.clone());
                    added.push(w.clone());
                    next.push(w);
                }
            }
            grow(z, s, cluster, next, blocked, out);
            for _ in 0..added.len() {
                blocked.pop();
            }
            cluster.pop();
        }
    }
    let mut out = Vec::new();
    if s == 0 || z < 2 {
        return out;
    }
    let root: Site = Vec::new();
    let mut blocked = vec![root.clone()];
    grow(z, s, &mut Vec::new(), vec![root], &mut blocked, &mut out);
    out
}

/// `μ_max = (z−1)^{z−1}/(z−2)^{z−2} = 2^{(z−1) H₂(1/(z−1))}`.
pub fn mu_max(z: usize) -> Result<f64> {
    if z < 3 {
        return Err(Error::InvalidInput(format!("μ_max needs z ≥ 3, got {z}")));
    }
    let a = (z - 1) as f64;
    let b = (z - 2) as f64;
    Ok(a.powf(a) / b.powf(b))
}

/// Binary entropy in bits.
pub fn binary_entropy(x: f64) -> f64 {
    let h = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    h(x) + h(1.0 - x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseErrorBound {
    /// `e^α − Σ_{s≤K} α^s/s!`.
    pub tail: f64,
    /// `e^α α^{K+1}/(K+1)!`.
    pub bound: f64,
    /// `N_cyc α^{K+1}/(K+1)!` when `N_cyc` is given; should be ≪ 1.
    pub cycle_condition: Option<f64>,
}

/// Bound on `‖V − 𝟙‖` for one pulse with expansion parameter `alpha_p`.
pub fn pulse_error_bound(alpha_p: f64, k: usize, n_cyc: Option<f64>) -> Result<PulseErrorBound> {
    if !(alpha_p >= 0.0) || !alpha_p.is_finite() {
        return Err(Error::InvalidInput(format!("expansion parameter {alpha_p}")));
    }
    // Tail summed directly to avoid cancellation for small α.
    let mut term = 1.0;
    for s in 1..=k + 1 {
        term *= alpha_p / s as f64;
    }
    let lead = term;
    let mut tail: f64 = 0.0;
    let mut s = k + 1;
    while term > 0.0 && term > 1e-18 * tail.max(f64::MIN_POSITIVE) {
        tail += term;
        s += 1;
        term *= alpha_p / s as f64;
        if s > k + 2000 {
            break;
        }
    }
    Ok(PulseErrorBound { tail, bound: alpha_p.exp() * lead, cycle_condition: n_cyc.map(|n| n * lead) })
}

/// Tightest applicable bound on the amplitude of an `s`-bond cluster.
///
/// Always `(e^α − 1)^s`; for `K = 2` also `e^α α³/6` (`s = 1`) and
/// `e^{2α} α³` (`s = 2`); and `(eα)^{min(s, K+1)}`, which needs `α ≤ 1`.
pub fn cluster_norm_bound(alpha: f64, s: usize, k: usize) -> Result<f64> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidInput(format!("expansion parameter {alpha}")));
    }
    if alpha > 1.0 {
        return Err(Error::InvalidInput(format!("α = {alpha} > 1 outside the generic bound")));
    }
    if s == 0 {
        return Err(Error::InvalidInput("cluster size must be at least 1".into()));
    }
    let mut best = alpha.exp_m1().powi(s as i32);
    best = best.min((E * alpha).powi(s.min(k + 1) as i32));
    if k == 2 && s == 1 {
        best = best.min(alpha.exp() * alpha.powi(3) / 6.0);
    }
    if k == 2 && s == 2 {
        best = best.min((2.0 * alpha).exp() * alpha.powi(3));
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterBoundInput {
    pub z: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub alpha: f64,
    pub nrep: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub mu: f64,
}

/// `(f_bound, f_gate)`:
/// `πC N_rep (K+1)(eαμ)^{K+1}[μ/(μ−1)² + 1/(1−eαμ)²]` and
/// `2C N_rep (αμ)^{K+1}`.
pub fn covered_fraction(inp: &ClusterBoundInput) -> Result<(f64, f64)> {
    let ClusterBoundInput { k, alpha, nrep, c, mu, .. } = *inp;
    if !(alpha >= 0.0) || !(mu > 1.0) || !(c >= 0.0) || !(nrep >= 0.0) {
        return Err(Error::InvalidInput(format!("α = {alpha}, μ = {mu}, C = {c}, N_rep = {nrep}")));
    }
    let x = E * alpha * mu;
    if x >= 1.0 {
        return Err(Error::Divergent(x));
    }
    let kp = (k + 1) as i32;
    let f_bound = PI * c * nrep * (k + 1) as f64 * x.powi(kp) * (mu / (mu - 1.0).powi(2) + 1.0 / (1.0 - x).powi(2));
    let f_gate = 2.0 * c * nrep * (alpha * mu).powi(kp);
    Ok((f_bound, f_gate))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToricBudget {
    /// Cycle length in units of `τ_p`, `16(8N_rep + 36)`.
    pub tau_cyc: f64,
    pub alpha_c: f64,
    /// `π/α_c`.
    pub nrep_c: f64,
    pub f_gate_at_alpha_c: f64,
}

/// `τ_cyc = 16(8N_rep + 36)` in units of `τ_p`.
pub fn toric_cycle(nrep: usize) -> f64 {
    16.0 * (8.0 * nrep as f64 + 36.0)
}

/// Cycle length for `nrep`, and the largest `α` with `10 f_gate(α) ≤ p_c`
/// where `N_rep = π/α`.
pub fn toric_budget(nrep: usize, p_c: f64, k: usize, c: f64, mu: f64) -> Result<ToricBudget> {
    if nrep < 5 {
        return Err(Error::InvalidInput(format!("cycle estimate assumes N_rep ≥ 5, got {nrep}")));
    }
    let f_gate = |alpha: f64| -> Result<f64> {
        let (_, g) = covered_fraction(&ClusterBoundInput { z: 0, k, alpha, nrep: PI / alpha, c, mu })?;
        Ok(g)
    };
    let g = |alpha: f64| -> Result<f64> { Ok(10.0 * f_gate(alpha)? - p_c) };
    let hi0 = (1.0 - 1e-12) / (E * mu);
    if !(p_c > 0.0) || !(mu > 1.0) {
        return Err(Error::NoRoot(format!("p_c = {p_c}, μ = {mu}")));
    }
    let mut lo = hi0 * 1e-12;
    let mut hi = hi0;
    if g(lo)? > 0.0 || g(hi)? < 0.0 {
        return Err(Error::NoRoot(format!("10 f_gate − p_c has no sign change on (0, 1/(eμ)) for p_c = {p_c}")));
    }
    while (hi - lo) > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if g(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let alpha_c = 0.5 * (lo + hi);
    Ok(ToricBudget { tau_cyc: toric_cycle(nrep), alpha_c, nrep_c: PI / alpha_c, f_gate_at_alpha_c: f_gate(alpha_c)? })
}

/// `Σ_edges |J_ij|`, the quoted Ising norm `n⟨zJ⟩`-style sum.
///
/// With `H_S = ½ΣJ σᶻσᶻ` the spectral norm is half of this on a bipartite
/// graph with couplings of one sign; see [`ising_spectral_norm`].
pub fn ising_norm(graph: &QubitGraph) -> f64 {
    graph.edges.iter().map(|e| e.2.abs()).sum()
}

/// `max |E|` over the diagonal of `½ΣJ σᶻσᶻ`, by enumeration (`n ≤ 30`).
pub fn ising_spectral_norm(graph: &QubitGraph) -> Result<f64> {
    if graph.n > 30 {
        return Err(Error::DimensionOverflow(graph.n));
    }
    let n = graph.n;
    Ok((0..1usize << n)
        .map(|r| {
            0.5 * graph.edges.iter().map(|&(i, j, c)| c * crate::linalg::z_of(r, n, i) * crate::linalg::z_of(r, n, j)).sum::<f64>()
        })
        .fold(0.0, |m: f64, e: f64| m.max(e.abs())))
}

/// `cluster_count` as `f64` (lossy for large counts).
pub fn cluster_count_f64(z: usize, s: usize) -> Result<f64> {
    Ok(cluster_count(z, s)?.to_f64().unwrap_or(f64::INFINITY))
}
