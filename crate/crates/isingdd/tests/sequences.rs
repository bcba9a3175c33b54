use isingdd::analysis::fidelity;
use isingdd::linalg::{kron, rotation, to_dyn};
use isingdd::network::{build_graph, GraphKind, QubitGraph};
use isingdd::propagator::simulate;
use isingdd::sequences::{
    compose_gate, dcg_single, dcg_symmetrized, design_coupling, eulerian_dcg, standard_gate, zz_sequence, Drive,
    EulerVariant, GateKind, GateSpec, PulseLibrary, PulseMode, Schedule,
};
use isingdd::{Axis, CMat, Error, C64};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::OnceLock;

fn lib(order: usize) -> &'static PulseLibrary {
    static LIBS: [OnceLock<PulseLibrary>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    LIBS[order].get_or_init(|| PulseLibrary::new(order).unwrap())
}

/// `|Tr(A†B)|/N`: 1 exactly when the two agree up to a global phase.
fn phase_overlap(a: &CMat, b: &CMat) -> f64 {
    (a.adjoint() * b).trace().norm() / a.nrows() as f64
}

fn assert_equal_up_to_phase(a: &CMat, b: &CMat) {
    let o = phase_overlap(a, b);
    assert!((o - 1.0).abs() < 1e-12, "overlap {o}");
}

fn infidelity(s: &Schedule, g: &QubitGraph, deltas: &[f64], steps: usize) -> f64 {
    let u = simulate(s, g, deltas, steps).unwrap().matrix;
    1.0 - fidelity(&s.ideal_unitary, &u).unwrap()
}

#[test]
fn dcg_lasts_sixteen_pulses() {
    let g = build_graph(GraphKind::Star, 6, 0.0).unwrap();
    let s = dcg_single(Axis::Y, FRAC_PI_2, &[1, 3], &g, lib(0)).unwrap();
    assert_eq!(s.total_duration, 16.0);
    s.validate().unwrap();
    let ideal = rotation(Axis::Y, FRAC_PI_2);
    let mut want = CMat::identity(1, 1);
    for q in 0..6 {
        want = kron(&want, &if q == 1 || q == 3 { to_dyn(&ideal) } else { CMat::identity(2, 2) });
    }
    assert!((s.ideal_unitary.clone() - want).norm() < 1e-14);
}

#[test]
fn dcg_slot_layout() {
    let g = build_graph(GraphKind::Chain, 2, 0.0).unwrap();
    let s = dcg_single(Axis::Y, FRAC_PI_2, &[0], &g, lib(0)).unwrap();
    let starts = |q: usize, pred: &dyn Fn(&isingdd::sequences::Segment) -> bool| -> Vec<f64> {
        let mut v: Vec<f64> = s.segments.iter().filter(|x| x.qubit == q && pred(x)).map(|x| x.start).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let is_pi = |x: &isingdd::sequences::Segment| x.axis == Axis::X && (x.angle() - PI).abs() < 1e-12;
    // Slots are 1-based; slot k starts at k − 1.
    assert_eq!(starts(0, &is_pi), vec![3.0, 9.0, 10.0, 12.0]);
    assert_eq!(starts(1, &is_pi), vec![0.0, 6.0, 11.0, 13.0]);
    assert_eq!(starts(0, &|x| x.axis == Axis::Y && x.sign() > 0 && x.duration() == 1.0), vec![1.0, 4.0, 7.0]);
    assert_eq!(starts(0, &|x| x.axis == Axis::Y && x.sign() < 0), vec![2.0, 5.0, 8.0]);
    assert_eq!(starts(0, &|x| x.duration() == 2.0), vec![14.0]);
}

#[test]
fn dcg_is_exact_without_couplings() {
    let g = build_graph(GraphKind::Chain, 4, 0.0).unwrap();
    let s = dcg_single(Axis::Y, FRAC_PI_2, &[0, 2], &g, lib(2)).unwrap();
    assert!(infidelity(&s, &g, &[0.0; 4], 2048) < 1e-10);
}

#[test]
fn dcg_rejects_adjacent_targets() {
    let g = build_graph(GraphKind::Chain, 4, 0.1).unwrap();
    assert!(matches!(dcg_single(Axis::X, PI, &[1, 2], &g, lib(0)), Err(Error::InvalidGate(_))));
    assert!(matches!(dcg_single(Axis::X, PI, &[], &g, lib(0)), Err(Error::InvalidGate(_))));
    assert!(matches!(dcg_single(Axis::X, PI, &[7], &g, lib(0)), Err(Error::InvalidGate(_))));
}

#[test]
fn symmetrized_dcg_doubles_the_angle() {
    let g = build_graph(GraphKind::Chain, 3, 0.0).unwrap();
    let mut l = lib(0).clone();
    l.add_angle(FRAC_PI_4).unwrap();
    let s = dcg_symmetrized(Axis::X, FRAC_PI_4, &[1], &g, &l).unwrap();
    assert_eq!(s.total_duration, 32.0);
    let target = to_dyn(&rotation(Axis::X, FRAC_PI_2));
    let want = kron(&kron(&CMat::identity(2, 2), &target), &CMat::identity(2, 2));
    assert!((s.ideal_unitary.clone() - want).norm() < 1e-14);
    assert!(infidelity(&s, &g, &[0.0; 3], 1024) < 1e-10);
}

#[test]
fn symmetrized_dcg_mirrors_about_the_midpoint() {
    let g = build_graph(GraphKind::Star, 4, 0.0).unwrap();
    let s = dcg_symmetrized(Axis::Y, FRAC_PI_2, &[0], &g, lib(0)).unwrap();
    let key = |q: usize, a: Axis, st: f64, d: f64| (q, a, (st * 1e9).round() as i64, (d * 1e9).round() as i64);
    let mut first: Vec<_> = s
        .segments
        .iter()
        .filter(|x| x.start < 16.0)
        .map(|x| key(x.qubit, x.axis, 32.0 - x.end(), x.duration()))
        .collect();
    let mut second: Vec<_> = s.segments.iter().filter(|x| x.start >= 16.0).map(|x| key(x.qubit, x.axis, x.start, x.duration())).collect();
    first.sort();
    second.sort();
    assert_eq!(first, second);
}

#[test]
fn zz_prefactor() {
    let g = build_graph(GraphKind::Chain, 2, 0.1).unwrap();
    let pi = lib(0).pi().unwrap();
    let s = zz_sequence(&[(0, 1)], 1.0, 0.0, 2, &g, &pi, PulseMode::Soft).unwrap();
    assert_eq!(s.zz_prefactor, Some(0.5));
    assert_eq!(s.total_duration, 32.0);
    let tau1 = 2.0;
    let s = zz_sequence(&[(0, 1)], tau1, tau1 - 1.0, 1, &g, &pi, PulseMode::Soft).unwrap();
    assert!((s.zz_prefactor.unwrap() - (1.0 - 1.0 / (2.0 * tau1))).abs() < 1e-15);
    assert_eq!(s.total_duration, 16.0 * tau1);
}

#[test]
fn zz_constraints() {
    let g = build_graph(GraphKind::Chain, 4, 0.1).unwrap();
    let pi = lib(0).pi().unwrap();
    assert!(matches!(zz_sequence(&[(0, 1)], 1.0, 0.5, 1, &g, &pi, PulseMode::Soft), Err(Error::InvalidSchedule(_))));
    assert!(matches!(zz_sequence(&[(0, 2)], 1.0, 0.0, 1, &g, &pi, PulseMode::Soft), Err(Error::InvalidGate(_))));
    assert!(matches!(zz_sequence(&[(0, 1), (2, 3)], 1.0, 0.0, 1, &g, &pi, PulseMode::Soft), Err(Error::InvalidGate(_))));
    assert!(matches!(zz_sequence(&[(0, 1)], 1.0, 0.0, 0, &g, &pi, PulseMode::Soft), Err(Error::InvalidGate(_))));
}

#[test]
fn hard_zz_is_exact_with_chemical_shifts() {
    for (g, pair, d) in [
        (build_graph(GraphKind::Chain, 2, design_coupling(1)).unwrap(), (0, 1), vec![0.3, -0.7]),
        (build_graph(GraphKind::Chain, 4, design_coupling(1)).unwrap(), (1, 2), vec![0.3, -0.7, 1.1, 0.05]),
        (build_graph(GraphKind::Star, 4, design_coupling(1)).unwrap(), (0, 2), vec![-0.2, 0.4, 0.9, 0.6]),
    ] {
        for tau2 in [0.0, 0.4] {
            let s = zz_sequence(&[pair], 1.0, tau2, 1, &g, &lib(0).pi().unwrap(), PulseMode::Hard).unwrap();
            let inf = infidelity(&s, &g, &d, 1024);
            assert!(inf < 1e-12, "{pair:?}, τ2 = {tau2}: {inf:e}");
        }
    }
}

#[test]
fn full_eulerian_dcg_layout() {
    let rot = lib(1).rotation(Axis::Y, FRAC_PI_2).unwrap();
    let pi = lib(1).pi().unwrap();
    let s = eulerian_dcg(EulerVariant::Full, &rot, &pi).unwrap();
    assert_eq!(s.total_duration, 16.0);
    let pis = s.segments.iter().filter(|x| (x.angle().abs() - PI).abs() < 1e-12).count();
    let pair_halves = s.segments.iter().filter(|x| x.duration() == 1.0 && (x.angle().abs() - FRAC_PI_2).abs() < 1e-12).count();
    let stretched = s.segments.iter().filter(|x| x.duration() == 2.0).count();
    // Operators: 8 π pulses, 3 identity pairs, 1 stretched pulse.
    assert_eq!((pis, pair_halves / 2, stretched), (8, 3, 1));
    assert_eq!(pis + pair_halves / 2 + stretched, 12);
    assert_eq!(s.segments.last().unwrap().start, 14.0);

    let p = eulerian_dcg(EulerVariant::Partial, &rot, &pi).unwrap();
    assert_eq!(p.total_duration, 8.0);
    assert_eq!(p.segments.len(), 7);
}

#[test]
fn eulerian_dcg_is_exact_without_bath() {
    let rot = lib(2).rotation(Axis::Y, FRAC_PI_2).unwrap();
    let pi = lib(2).pi().unwrap();
    let g = QubitGraph::from_edges(1, vec![]).unwrap();
    for v in [EulerVariant::Full, EulerVariant::Partial] {
        let s = eulerian_dcg(v, &rot, &pi).unwrap();
        assert_equal_up_to_phase(&s.ideal_unitary, &to_dyn(&rotation(Axis::Y, FRAC_PI_2)));
        assert!(infidelity(&s, &g, &[0.0], 2048) < 1e-10);
    }
}

#[test]
fn design_coupling_value() {
    assert!((design_coupling(5) - PI / 80.0).abs() < 1e-16);
    assert!((design_coupling(5) - 0.0392699).abs() < 1e-7);
}

fn pair_graph(nrep: usize) -> QubitGraph {
    build_graph(GraphKind::Chain, 2, design_coupling(nrep)).unwrap()
}

#[test]
fn composite_gate_durations() {
    let g = pair_graph(5);
    let cnot = compose_gate(&GateSpec::new(GateKind::Cnot, vec![0, 1]), &g, lib(0)).unwrap();
    assert_eq!(cnot.total_duration, 144.0);
    assert!(cnot.warnings.is_empty());
    let h = compose_gate(&GateSpec::new(GateKind::Hadamard, vec![0]), &g, lib(0)).unwrap();
    assert_eq!(h.total_duration, 32.0);
    let cz = compose_gate(&GateSpec::new(GateKind::Cz, vec![0, 1]), &g, lib(0)).unwrap();
    assert_eq!(cz.total_duration, 16.0 * (5.0 + 2.0));
    let swap = compose_gate(&GateSpec::new(GateKind::Swap, vec![0, 1]), &g, lib(0)).unwrap();
    assert_eq!(swap.total_duration, 3.0 * 144.0);
}

#[test]
fn ideal_unitaries_match_standard_gates() {
    let g = pair_graph(5);
    for kind in [GateKind::Cnot, GateKind::Cy, GateKind::Cz, GateKind::Swap] {
        let s = compose_gate(&GateSpec::new(kind, vec![0, 1]), &g, lib(0)).unwrap();
        let want = standard_gate(kind).unwrap();
        assert_equal_up_to_phase(&s.ideal_unitary, &want);
    }
    // CNOT = e^{iπ/4} Z₁(π/2) X₂(π/2) Y₂(−π/2) exp(−iπ/4 σᶻσᶻ) Y₂(π/2).
    let r = |a, q: usize, t: f64| {
        let m = to_dyn(&rotation(a, t));
        if q == 0 {
            kron(&m, &CMat::identity(2, 2))
        } else {
            kron(&CMat::identity(2, 2), &m)
        }
    };
    let zz = CMat::from_diagonal(&nalgebra::DVector::from_vec(
        [1.0, -1.0, -1.0, 1.0].iter().map(|z| C64::from_polar(1.0, -FRAC_PI_4 * z)).collect(),
    ));
    let cnot = r(Axis::Z, 0, FRAC_PI_2) * r(Axis::X, 1, FRAC_PI_2) * r(Axis::Y, 1, -FRAC_PI_2) * zz * r(Axis::Y, 1, FRAC_PI_2)
        * C64::from_polar(1.0, FRAC_PI_4);
    assert!((cnot - standard_gate(GateKind::Cnot).unwrap()).norm() < 1e-14);
}

#[test]
fn hadamard_ideal() {
    let g = pair_graph(5);
    let s = compose_gate(&GateSpec::new(GateKind::Hadamard, vec![1]), &g, lib(0)).unwrap();
    let h = CMat::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(-1.0, 0.0)])
        * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let want = kron(&CMat::identity(2, 2), &h);
    assert!((s.ideal_unitary.clone() - want).norm() < 1e-14);
}

#[test]
fn zz_gate_with_angle() {
    let g = pair_graph(2);
    let theta = 0.6 * PI;
    let spec = GateSpec { angle: Some(theta), tau1: 2.0, ..GateSpec::new(GateKind::Zz, vec![0, 1]).with_nrep(2) };
    let s = compose_gate(&spec, &g, lib(0)).unwrap();
    assert_eq!(s.total_duration, 64.0);
    assert!((s.zz_prefactor.unwrap() - 0.6).abs() < 1e-12);
    let want = isingdd::sequences::zz_unitary(2, 0, 1, theta);
    assert!((s.ideal_unitary.clone() - want).norm() < 1e-12);
}

#[test]
fn off_design_coupling_warns() {
    let g = build_graph(GraphKind::Chain, 2, 0.05).unwrap();
    let s = compose_gate(&GateSpec::new(GateKind::Cnot, vec![0, 1]), &g, lib(0)).unwrap();
    assert_eq!(s.warnings.len(), 1);
}

#[test]
fn connected_pairs_cannot_run_in_parallel() {
    let g = build_graph(GraphKind::Chain, 4, design_coupling(5)).unwrap();
    let r = compose_gate(&GateSpec::new(GateKind::Cnot, vec![0, 1, 2, 3]), &g, lib(0));
    assert!(matches!(r, Err(Error::InvalidGate(_))));
    let r = compose_gate(&GateSpec::new(GateKind::Cnot, vec![0]), &g, lib(0));
    assert!(matches!(r, Err(Error::InvalidGate(_))));
}

#[test]
fn parallel_gates_factor_into_a_tensor_product() {
    let j = design_coupling(2);
    let two = QubitGraph::from_edges(4, vec![(0, 1, j), (2, 3, j)]).unwrap();
    let one = pair_graph(2);
    let spec = |t: Vec<usize>| GateSpec::new(GateKind::Cnot, t).with_nrep(2);
    let both = compose_gate(&spec(vec![0, 1, 2, 3]), &two, lib(1)).unwrap();
    let single = compose_gate(&spec(vec![0, 1]), &one, lib(1)).unwrap();
    let (da, db) = ([0.03, -0.08], [0.11, 0.02]);
    let u = simulate(&both, &two, &[da[0], da[1], db[0], db[1]], 2048).unwrap().matrix;
    let ua = simulate(&single, &one, &da, 2048).unwrap().matrix;
    let ub = simulate(&single, &one, &db, 2048).unwrap().matrix;
    assert!((u - kron(&ua, &ub)).norm() < 1e-9);
    assert!((both.ideal_unitary.clone() - kron(&single.ideal_unitary, &single.ideal_unitary)).norm() < 1e-12);
}

#[test]
fn every_compiled_schedule_is_valid() {
    let star = build_graph(GraphKind::Star, 6, design_coupling(5)).unwrap();
    let chain = build_graph(GraphKind::Chain, 4, design_coupling(5)).unwrap();
    let specs = [
        GateSpec::new(GateKind::Rotation, vec![2]).with_rotation(Axis::X, PI),
        GateSpec { symmetrized: true, ..GateSpec::new(GateKind::Rotation, vec![2]).with_rotation(Axis::Y, PI) },
        GateSpec::new(GateKind::Hadamard, vec![0]),
        GateSpec::new(GateKind::Cnot, vec![1, 0]),
        GateSpec::new(GateKind::Cy, vec![0, 1]),
        GateSpec::new(GateKind::Cz, vec![1, 0]),
        GateSpec::new(GateKind::Swap, vec![0, 1]),
        GateSpec::new(GateKind::Zz, vec![0, 1]),
    ];
    for g in [&star, &chain] {
        for spec in &specs {
            let s = compose_gate(spec, g, lib(0)).unwrap();
            s.validate().unwrap();
            assert_eq!(s.total_duration.fract(), 0.0);
            assert!(s.segments.iter().all(|x| matches!(x.drive, Drive::Shaped(_))));
            let dim = 1usize << g.n;
            let defect = (s.ideal_unitary.adjoint() * &s.ideal_unitary - CMat::identity(dim, dim)).norm();
            assert!(defect < 1e-12);
        }
    }
}

#[test]
fn schedule_csv_layout() {
    let g = build_graph(GraphKind::Chain, 2, 0.0).unwrap();
    let s = dcg_single(Axis::Y, FRAC_PI_2, &[0], &g, lib(0)).unwrap();
    let csv = s.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("qubit,axis,sign,start,duration"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first, vec!["1", "x", "1", "0.0000000000000000e0", "1.0000000000000000e0"]);
    assert_eq!(csv.lines().count(), 1 + s.segments.len());
}
