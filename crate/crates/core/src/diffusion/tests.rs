use super::*;
use crate::error::Error;
use crate::geometry::{generate_boundary, DomainKind};
use crate::lattice::build_mesh;
use crate::measures::compute_measures;

/// a – b – c with d_rel = (0, 0.5, 0).
fn path_abc() -> WeightedGraph {
    WeightedGraph::from_adjacency(&[vec![1], vec![0, 2], vec![1]], &[0.0, 0.5, 0.0]).unwrap()
}

fn single_edge() -> WeightedGraph {
    WeightedGraph::from_adjacency(&[vec![1], vec![0]], &[0.0, 0.0]).unwrap()
}

fn mesh_graph(kind: DomainKind, level: u32, refine: u32) -> WeightedGraph {
    let poly = generate_boundary(kind, level).unwrap();
    let mesh = build_mesh(&poly, refine).unwrap();
    let m = compute_measures(&poly, &mesh).unwrap();
    build_weights(&mesh, &m).unwrap()
}

#[test]
fn two_node_weights() {
    let g = single_edge();
    assert_eq!(g.weight(0, 1), 1.0);
    assert_eq!(g.weight(1, 0), 1.0);
}

#[test]
fn path_weights_and_strengths() {
    let g = path_abc();
    assert_eq!(g.weight(0, 1), 0.5);
    assert_eq!(g.weight(1, 0), 1.0);
    assert_eq!(g.weight(1, 2), 1.0);
    assert_eq!(g.weight(2, 1), 0.5);
    assert_eq!(g.weight(0, 2), 0.0);
    assert_eq!(g.strength(), &[0.5, 2.0, 0.5]);
}

#[test]
fn path_transfer_entries() {
    let t = build_transfer(&path_abc()).unwrap();
    assert_eq!(t.get(1, 0), 1.0);
    assert_eq!(t.get(0, 1), 0.5);
    assert_eq!(t.get(2, 1), 0.5);
    assert_eq!(t.get(1, 2), 1.0);
    assert_eq!(t.get(0, 0), 0.0);
    assert_eq!(t.column_sums(), vec![1.0, 1.0, 1.0]);
}

#[test]
fn single_edge_transfer_swaps() {
    let t = build_transfer(&single_edge()).unwrap();
    let dense = t.to_dense();
    assert_eq!(
        dense,
        nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
    );
}

#[test]
fn path_step_and_stationary() {
    let g = path_abc();
    let t = build_transfer(&g).unwrap();
    let s1 = step(&t, &DensityState::delta(3, 0).unwrap());
    assert_eq!(s1.eta, vec![0.0, 1.0, 0.0]);
    assert_eq!(s1.t, 1);
    let pi = analytic_stationary(&g);
    assert_eq!(pi, vec![0.25, 0.5, 0.25]);
    let next = step(&t, &DensityState::new(pi.clone()).unwrap());
    assert!(linf_distance(&next.eta, &pi) < 1e-15);
}

#[test]
fn path_evolve_detects_two_cycle() {
    let t = build_transfer(&path_abc()).unwrap();
    let traj = evolve(&t, &[1.0, 0.0, 0.0], &EvolveOptions::default()).unwrap();
    assert_eq!(traj.termination.status, TerminationStatus::TwoCycle);
    assert_eq!(traj.termination.t, 1);
    let limits = traj.limit_states();
    assert_eq!(limits[0], &[0.0, 1.0, 0.0]);
    assert_eq!(limits[1], &[0.5, 0.0, 0.5]);
    assert_eq!(traj.state_at(2).unwrap(), &[0.5, 0.0, 0.5]);
}

#[test]
fn evolve_from_stationary_is_fixed_at_zero() {
    let g = path_abc();
    let t = build_transfer(&g).unwrap();
    let traj = evolve(&t, &analytic_stationary(&g), &EvolveOptions::default()).unwrap();
    assert_eq!(traj.termination.status, TerminationStatus::FixedPoint);
    assert_eq!(traj.termination.t, 0);
}

#[test]
fn evolve_respects_step_budget() {
    let g = mesh_graph(DomainKind::Square, 1, 1);
    let t = build_transfer(&g).unwrap();
    let opts = EvolveOptions {
        max_steps: 3,
        ..Default::default()
    };
    let traj = evolve(&t, &DensityState::delta(g.len(), 0).unwrap().eta, &opts).unwrap();
    assert_eq!(traj.termination.status, TerminationStatus::MaxSteps);
    assert_eq!(traj.snapshots.len(), 4);
}

#[test]
fn evolve_rejects_invalid_density() {
    let t = build_transfer(&path_abc()).unwrap();
    assert!(matches!(
        evolve(&t, &[0.5, 0.0, 0.0], &EvolveOptions::default()),
        Err(Error::Domain(_))
    ));
}

#[test]
fn triadic_walk_reaches_fixed_point() {
    let g = mesh_graph(DomainKind::Triadic, 1, 1);
    let t = build_transfer(&g).unwrap();
    let pi = analytic_stationary(&g);
    for start in [0, g.len() / 2, g.len() - 1] {
        let traj = evolve(
            &t,
            &DensityState::delta(g.len(), start).unwrap().eta,
            &EvolveOptions {
                stride: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(traj.termination.status, TerminationStatus::FixedPoint);
        assert!(l1_distance(traj.limit_states()[0], &pi) < 1e-9);
    }
}

#[test]
fn balance_form_matches_matrix_form() {
    let g = mesh_graph(DomainKind::Triadic, 1, 1);
    let t = build_transfer(&g).unwrap();
    let n = g.len();
    let eta: Vec<f64> = (0..n).map(|i| (i + 1) as f64).collect();
    let total: f64 = eta.iter().sum();
    let eta: Vec<f64> = eta.into_iter().map(|v| v / total).collect();
    let via_t = t.apply(&eta);
    let via_balance = g.balance_step(&eta);
    assert!(linf_distance(&via_t, &via_balance) < 1e-15);
    assert!(linf_distance(&g.outflow(&eta), &eta) < 1e-15);
}

#[test]
fn arg_max_node_is_transient() {
    let g = mesh_graph(DomainKind::Square, 1, 1);
    let pi = analytic_stationary(&g);
    let top: Vec<usize> = (0..g.len()).filter(|&i| g.d_rel()[i] == 1.0).collect();
    assert!(!top.is_empty());
    for i in top {
        assert_eq!(pi[i], 0.0);
        assert!(g.strength()[i] > 0.0);
    }
}

#[test]
fn zero_strength_nodes_are_pruned() {
    // Node 2 hangs off node 1 and has d_rel = 1; node 3 is isolated.
    let g = WeightedGraph::from_adjacency(
        &[vec![1], vec![0, 2], vec![1], vec![]],
        &[0.0, 1.0, 1.0, 0.2],
    );
    // Node 0's only neighbor has d_rel = 1: it receives but cannot emit.
    assert!(matches!(g, Err(Error::Connectivity(_))));

    let g = WeightedGraph::from_adjacency(
        &[vec![1, 2], vec![0, 2], vec![0, 1], vec![]],
        &[0.0, 0.5, 0.2, 0.3],
    )
    .unwrap();
    assert_eq!(g.len(), 3);
    assert_eq!(g.mesh_ids(), &[0, 1, 2]);
    assert_eq!(g.compact_index(3), None);
    assert_eq!(
        g.to_mesh_vector(&[0.2, 0.3, 0.5], 4),
        vec![0.2, 0.3, 0.5, 0.0]
    );
}

#[test]
fn disconnected_graph_is_rejected() {
    let g = WeightedGraph::from_adjacency(&[vec![1], vec![0], vec![3], vec![2]], &[0.0; 4]);
    assert!(matches!(g, Err(Error::Connectivity(_))));
    let single = WeightedGraph::from_adjacency(&[vec![]], &[1.0]);
    assert!(matches!(single, Err(Error::Connectivity(_))));
}

#[test]
fn zero_strength_transfer_is_a_precondition_error() {
    let mut g = path_abc();
    g.zero_strength_for_test(0);
    assert!(matches!(build_transfer(&g), Err(Error::Precondition(_))));
}

#[test]
fn symmetrize_path() {
    let g = path_abc();
    let t = build_transfer(&g).unwrap();
    let m = symmetrize(&t, &analytic_stationary(&g)).unwrap();
    let half_root_two = 2f64.sqrt() / 2.0;
    assert!((m.get(0, 1) - half_root_two).abs() < 1e-15);
    assert!((m.get(1, 0) - half_root_two).abs() < 1e-15);
    assert!(m.asymmetry() < 1e-15);
}

#[test]
fn symmetrize_uniform_is_identity_map() {
    let g = single_edge();
    let t = build_transfer(&g).unwrap();
    let m = symmetrize(&t, &[0.5, 0.5]).unwrap();
    assert_eq!(m.to_dense(), t.to_dense());
    assert!(matches!(
        symmetrize(&t, &[1.0, 0.0]),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn path_spectrum() {
    let g = path_abc();
    let t = build_transfer(&g).unwrap();
    let s = spectrum(&t, &analytic_stationary(&g), 3).unwrap();
    let expect = [1.0, 0.0, -1.0];
    for (a, b) in s.eigenvalues.iter().zip(expect) {
        assert!((a - b).abs() < 1e-12, "{:?}", s.eigenvalues);
    }
    assert!(s.has_minus_one);
    assert!(s.spectral_gap.abs() < 1e-12);
    assert!(linf_distance(&s.leading_vector, &[0.25, 0.5, 0.25]) < 1e-12);
}

#[test]
fn single_edge_spectrum() {
    let g = single_edge();
    let t = build_transfer(&g).unwrap();
    let s = spectrum(&t, &analytic_stationary(&g), 5).unwrap();
    assert_eq!(s.eigenvalues.len(), 2);
    assert!((s.eigenvalues[0] - 1.0).abs() < 1e-14);
    assert!((s.eigenvalues[1] + 1.0).abs() < 1e-14);
}

#[test]
fn iterative_solver_matches_dense() {
    let g = mesh_graph(DomainKind::Triadic, 1, 1);
    let t = build_transfer(&g).unwrap();
    let pi = analytic_stationary(&g);
    let dense = spectrum(&t, &pi, 4).unwrap();
    let iterative = spectrum_with(
        &t,
        &pi,
        4,
        &SpectrumOptions {
            dense_cap: 0,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(iterative.method, SolveMethod::OrthogonalIteration);
    for (a, b) in dense.eigenvalues.iter().zip(&iterative.eigenvalues) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
    assert!((dense.lambda_min - iterative.lambda_min).abs() < 1e-8);
    assert!(linf_distance(&dense.leading_vector, &iterative.leading_vector) < 1e-6);
}

#[test]
fn monte_carlo_first_step_on_path_is_deterministic() {
    let g = path_abc();
    for walkers in [1, 7, 100_000] {
        let eta = monte_carlo_walk(&g, 0, walkers, 1, 3).unwrap();
        assert_eq!(eta[0], vec![1.0, 0.0, 0.0]);
        assert_eq!(eta[1], vec![0.0, 1.0, 0.0]);
    }
}

#[test]
fn monte_carlo_is_seed_deterministic() {
    let g = mesh_graph(DomainKind::Square, 1, 1);
    let a = monte_carlo_walk(&g, 3, 100_000, 5, 42).unwrap();
    let b = monte_carlo_walk(&g, 3, 100_000, 5, 42).unwrap();
    let c = monte_carlo_walk(&g, 3, 100_000, 5, 43).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(monte_carlo_walk(&g, g.len(), 10, 1, 0).is_err());
    assert!(monte_carlo_walk(&g, 0, 0, 1, 0).is_err());
}
