use isingdd::linalg::{op_norm, pauli_word};
use isingdd::network::{assemble_hamiltonian, build_graph, DisorderModel, GraphKind, GraphSpec, QubitGraph, Sublattice};
use isingdd::{Axis, CMat, Error, C64};
use proptest::prelude::*;

fn diag(h: &CMat) -> Vec<f64> {
    (0..h.nrows()).map(|i| h[(i, i)].re).collect()
}

#[test]
fn star6_has_hub_of_degree_five() {
    let g = build_graph(GraphKind::Star, 6, 0.1).unwrap();
    assert_eq!(g.edges.len(), 5);
    assert!(g.edges.iter().all(|&(i, _, _)| i == 0));
    assert_eq!(g.degree(0), 5);
    assert_eq!(g.max_degree(), 5);
    assert_eq!(g.on(Sublattice::A), vec![0]);
    assert_eq!(g.on(Sublattice::B), vec![1, 2, 3, 4, 5]);
}

#[test]
fn chain4_is_a_path() {
    let g = build_graph(GraphKind::Chain, 4, 0.1).unwrap();
    assert_eq!(g.edges, vec![(0, 1, 0.1), (1, 2, 0.1), (2, 3, 0.1)]);
    assert_eq!(g.max_degree(), 2);
    assert_eq!(g.sublattice, vec![Sublattice::A, Sublattice::B, Sublattice::A, Sublattice::B]);
    assert!(g.independent(&[0, 2]));
    assert!(!g.independent(&[1, 2]));
}

#[test]
fn triangle_is_not_bipartite() {
    let r = QubitGraph::from_edges(3, vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]);
    assert!(matches!(r, Err(Error::NotBipartite(_))));
}

#[test]
fn malformed_edge_lists_are_rejected() {
    assert!(matches!(QubitGraph::from_edges(2, vec![(0, 0, 1.0)]), Err(Error::InvalidGraph(_))));
    assert!(matches!(QubitGraph::from_edges(2, vec![(0, 1, 1.0), (1, 0, 1.0)]), Err(Error::InvalidGraph(_))));
    assert!(matches!(QubitGraph::from_edges(2, vec![(0, 2, 1.0)]), Err(Error::InvalidGraph(_))));
    assert!(matches!(build_graph(GraphKind::Chain, 1, 1.0), Err(Error::InvalidGraph(_))));
}

#[test]
fn graph_json_with_labels() {
    let text = r#"{"kind":"custom","n":4,"J":0.5,"edges":[[0,1],[1,2],[2,3],[3,0]],"labels":["B","A","B","A"]}"#;
    let spec: GraphSpec = serde_json::from_str(text).unwrap();
    let g = spec.build().unwrap();
    assert_eq!(g.edges.len(), 4);
    assert_eq!(g.sublattice[0], Sublattice::B);
    let bad = r#"{"kind":"custom","n":2,"J":0.5,"edges":[[0,1]],"labels":["A","A"]}"#;
    let spec: GraphSpec = serde_json::from_str(bad).unwrap();
    assert!(matches!(spec.build(), Err(Error::NotBipartite(_))));
    let star: GraphSpec = serde_json::from_str(r#"{"kind":"star","n":3,"J":1.0}"#).unwrap();
    assert_eq!(star.build().unwrap(), build_graph(GraphKind::Star, 3, 1.0).unwrap());
}

#[test]
fn two_qubit_ising_diagonal() {
    let j = 0.3;
    let g = build_graph(GraphKind::Chain, 2, j).unwrap();
    let h = assemble_hamiltonian(&g, &[0.0, 0.0], &[]).unwrap();
    assert_eq!(diag(&h), vec![j / 2.0, -j / 2.0, -j / 2.0, j / 2.0]);
    assert!((h.clone() - CMat::from_diagonal(&h.diagonal())).norm() == 0.0);
}

#[test]
fn single_qubit_chemical_shift() {
    let g = QubitGraph::from_edges(1, vec![]).unwrap();
    let h = assemble_hamiltonian(&g, &[0.8], &[]).unwrap();
    assert_eq!(diag(&h), vec![0.4, -0.4]);
}

#[test]
fn drive_terms_are_half_paulis() {
    let g = build_graph(GraphKind::Chain, 2, 0.0).unwrap();
    let h = assemble_hamiltonian(&g, &[0.0, 0.0], &[(1, Axis::Y, 2.0)]).unwrap();
    let want = pauli_word(&[None, Some(Axis::Y)]);
    assert!((h - want).norm() < 1e-15);
}

#[test]
fn drift_norm_matches_brute_force() {
    let g = build_graph(GraphKind::Star, 5, 0.2).unwrap();
    let deltas = [0.1, 0.3, 0.05, 0.2, 0.4];
    let h = assemble_hamiltonian(&g, &deltas, &[]).unwrap();
    // Enumerate spin configurations independently of the library.
    let mut best: f64 = 0.0;
    for cfg in 0..32usize {
        let z = |q: usize| if cfg >> (4 - q) & 1 == 0 { 1.0 } else { -1.0 };
        let e: f64 = 0.5 * g.edges.iter().map(|&(i, j, c)| c * z(i) * z(j)).sum::<f64>()
            + 0.5 * deltas.iter().enumerate().map(|(q, d)| d * z(q)).sum::<f64>();
        best = best.max(e.abs());
    }
    assert!((op_norm(&h) - best).abs() < 1e-12);
    // Ferromagnetic-sign couplings and equal-sign shifts align in one configuration.
    let sum_j: f64 = g.edges.iter().map(|e| e.2).sum();
    assert!((best - 0.5 * sum_j - 0.5 * deltas.iter().sum::<f64>()).abs() < 1e-12);
}

#[test]
fn hamiltonian_dimension_limits() {
    let g = build_graph(GraphKind::Chain, 11, 0.1).unwrap();
    assert!(matches!(assemble_hamiltonian(&g, &[0.0; 11], &[]), Err(Error::DimensionOverflow(11))));
    let g = build_graph(GraphKind::Chain, 3, 0.1).unwrap();
    assert!(matches!(assemble_hamiltonian(&g, &[0.0; 2], &[]), Err(Error::DimensionMismatch(_))));
}

#[test]
fn disorder_draws_are_reproducible_and_indexed() {
    let m = DisorderModel { delta_rms: 0.5, seed: 42, num_draws: 10 };
    assert_eq!(m.draw(3, 6), m.draw(3, 6));
    assert_ne!(m.draw(3, 6), m.draw(4, 6));
    let unit = DisorderModel::unit_draw(42, 3, 6);
    for (a, b) in m.draw(3, 6).iter().zip(&unit) {
        assert_eq!(*a, 0.5 * b);
    }
    let other = DisorderModel { seed: 43, ..m };
    assert_ne!(m.draw(0, 6), other.draw(0, 6));
}

#[test]
fn disorder_statistics() {
    let m = DisorderModel { delta_rms: 0.2, seed: 9, num_draws: 4000 };
    let xs: Vec<f64> = (0..m.num_draws).flat_map(|k| m.draw(k, 5)).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() < 4.0 * 0.2 / n.sqrt());
    assert!((sd - 0.2).abs() < 0.01);
}

#[test]
fn disorder_json_shape() {
    let m: DisorderModel = serde_json::from_str(r#"{"delta_rms":0.1,"seed":5,"num_draws":50}"#).unwrap();
    assert_eq!(m, DisorderModel { delta_rms: 0.1, seed: 5, num_draws: 50 });
}

fn arb_graph() -> impl Strategy<Value = QubitGraph> {
    (2usize..6).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        (Just(n), prop::collection::vec((any::<bool>(), -1.0f64..1.0), pairs.len()), Just(pairs))
    })
    .prop_filter_map("bipartite", |(n, picks, pairs)| {
        let edges = pairs.iter().zip(&picks).filter(|(_, p)| p.0).map(|(&(i, j), p)| (i, j, p.1)).collect();
        QubitGraph::from_edges(n, edges).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn accepted_graphs_are_properly_coloured(g in arb_graph()) {
        for &(i, j, _) in &g.edges {
            prop_assert_ne!(g.sublattice[i], g.sublattice[j]);
            prop_assert!(i < j);
        }
    }

    #[test]
    fn hamiltonian_is_linear_and_hermitian(
        g in arb_graph(),
        d1 in prop::collection::vec(-1.0f64..1.0, 5),
        d2 in prop::collection::vec(-1.0f64..1.0, 5),
        v1 in -3.0f64..3.0,
        v2 in -3.0f64..3.0,
        s in -2.0f64..2.0,
    ) {
        let n = g.n;
        let (d1, d2) = (&d1[..n], &d2[..n]);
        let zero = vec![0.0; n];
        let free = g.with_coupling(0.0);
        let h_j = assemble_hamiltonian(&g, &zero, &[]).unwrap();
        let h_d = |d: &[f64]| assemble_hamiltonian(&free, d, &[]).unwrap();
        let h_v = |v: f64| assemble_hamiltonian(&free, &zero, &[(0, Axis::X, v)]).unwrap();
        let full = assemble_hamiltonian(&g, d1, &[(0, Axis::X, v1)]).unwrap();
        prop_assert!((&full - (&h_j + h_d(d1) + h_v(v1))).norm() < 1e-12);
        let sum: Vec<f64> = d1.iter().zip(d2).map(|(a, b)| a + s * b).collect();
        prop_assert!((h_d(&sum) - (h_d(d1) + h_d(d2) * C64::new(s, 0.0))).norm() < 1e-12);
        prop_assert!((h_v(v1 + s * v2) - (h_v(v1) + h_v(v2) * C64::new(s, 0.0))).norm() < 1e-12);
        let scaled = assemble_hamiltonian(&g.with_coupling(s), &zero, &[]).unwrap();
        let unit = assemble_hamiltonian(&g.with_coupling(1.0), &zero, &[]).unwrap();
        prop_assert!((scaled - unit * C64::new(s, 0.0)).norm() < 1e-12);
        prop_assert!((&full - full.adjoint()).norm() == 0.0);
    }
}
