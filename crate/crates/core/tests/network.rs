use pdnet::network::{
    metropolis_sequence, validate_balanced, validate_nondegeneracy, validate_periodic_connectivity, Rule,
    TopologySchedule,
};
use pdnet::{validate_all, GraphSequence, Topology, WeightMatrix};
use proptest::prelude::*;

#[test]
fn static_generators() {
    let g = GraphSequence::static_complete(2);
    for k in [0, 1, 17] {
        assert_eq!(
            g.weights_at(k),
            WeightMatrix::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap()
        );
    }
    assert_eq!(
        GraphSequence::static_identity(3).weights_at(5),
        WeightMatrix::identity(3)
    );
}

#[test]
fn rotating_ring_is_a_function_of_seed_and_round() {
    let a = GraphSequence::rotating_ring(3, 0.1, 7).unwrap();
    let b = GraphSequence::rotating_ring(3, 0.1, 7).unwrap();
    assert_eq!(a.weights_at(0), b.weights_at(0));
    assert_eq!(a.weights_at(0), a.weights_at(0));
    let r1 = GraphSequence::new(6, Topology::RandomMetropolis { edge_probability: 0.3 }, 0.05, 6, 3).unwrap();
    let r2 = GraphSequence::new(6, Topology::RandomMetropolis { edge_probability: 0.3 }, 0.05, 6, 3).unwrap();
    for k in (0..500).step_by(37) {
        assert_eq!(r1.weights_at(k), r2.weights_at(k));
    }
}

#[test]
fn nondegeneracy_examples() {
    assert!(validate_nondegeneracy(&GraphSequence::static_identity(4), 10, 0.5).is_ok());
    let w = WeightMatrix::new(vec![vec![0.99, 0.01], vec![0.01, 0.99]]).unwrap();
    let g = GraphSequence::explicit(vec![w], 0.1, 1).unwrap();
    let r = validate_nondegeneracy(&g, 1, 0.1);
    assert_eq!(r.count(Rule::NonDegeneracy), 2);
    assert_eq!(r.violations[0].round, 0);
    assert!(validate_nondegeneracy(&GraphSequence::static_complete(5), 10, 0.2).is_ok());
}

#[test]
fn balance_examples() {
    assert!(validate_balanced(&GraphSequence::rotating_ring(5, 0.1, 0).unwrap(), 50).is_ok());
    assert!(validate_balanced(&GraphSequence::static_identity(3), 5).is_ok());
    let w = WeightMatrix::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
    assert_eq!(w.col_sums(), vec![1.5, 0.5]);
    let r = validate_balanced(&GraphSequence::explicit(vec![w], 0.5, 1).unwrap(), 1);
    assert_eq!(r.count(Rule::Balanced), 2);
    assert!(r.violations.iter().all(|v| v.detail.starts_with("column")));
}

#[test]
fn connectivity_examples() {
    let ring = GraphSequence::new(4, Topology::DirectedRing { weight: 0.5 }, 0.5, 1, 0).unwrap();
    assert!(validate_periodic_connectivity(&ring, 20, 1).is_ok());
    for b in [1, 3, 7] {
        let r = validate_periodic_connectivity(&GraphSequence::static_identity(3), 20, b);
        assert_eq!(r.violations.len(), 20 - b + 1);
    }
    for b in [1, 2, 5] {
        assert!(validate_periodic_connectivity(&GraphSequence::static_complete(4), 20, b).is_ok());
    }
    assert!(validate_periodic_connectivity(&GraphSequence::rotating_ring(5, 0.1, 0).unwrap(), 60, 5).is_ok());
}

#[test]
fn metropolis_examples() {
    let pair = WeightMatrix::metropolis(2, &[(0, 1)]).unwrap();
    assert_eq!(pair, WeightMatrix::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap());
    // path 0 - 1 - 2: degrees 1, 2, 1, so both edges weigh 1 / 3
    let path = WeightMatrix::metropolis(3, &[(0, 1), (1, 2)]).unwrap();
    let t = 1.0 / 3.0;
    let expect = [[1.0 - t, t, 0.0], [t, 1.0 - 2.0 * t, t], [0.0, t, 1.0 - t]];
    for (i, row) in expect.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            assert!((path.get(i, j) - e).abs() < 1e-15);
            assert_eq!(path.get(i, j), path.get(j, i));
        }
    }
    assert_eq!(WeightMatrix::metropolis(3, &[]).unwrap(), WeightMatrix::identity(3));
    assert!(WeightMatrix::metropolis(3, &[(0, 3)]).is_err());
}

#[test]
fn scheduled_sequences() {
    let schedule = TopologySchedule {
        rounds: vec![vec![(0, 1), (2, 3)], vec![(1, 2), (3, 4)], vec![(4, 0)]],
    };
    let g = metropolis_sequence(5, schedule.clone(), 0.1, 3, 0).unwrap();
    assert!(validate_all(&g, 30).is_ok());
    assert!(metropolis_sequence(5, schedule, 0.1, 2, 0).is_err());
    let empty = TopologySchedule { rounds: vec![vec![]] };
    let g = GraphSequence::new(3, Topology::Scheduled(empty), 0.1, 1, 0).unwrap();
    assert_eq!(g.weights_at(4), WeightMatrix::identity(3));
}

#[test]
fn generators_reject_bad_parameters() {
    assert!(GraphSequence::new(0, Topology::Complete, 0.1, 1, 0).is_err());
    assert!(GraphSequence::new(3, Topology::Complete, 0.0, 1, 0).is_err());
    assert!(GraphSequence::new(3, Topology::Complete, 0.1, 0, 0).is_err());
    assert!(GraphSequence::new(3, Topology::DirectedRing { weight: 1.0 }, 0.1, 1, 0).is_err());
    assert!(GraphSequence::new(3, Topology::RandomMetropolis { edge_probability: 1.5 }, 0.1, 1, 0).is_err());
}

fn generator() -> impl Strategy<Value = GraphSequence> {
    (2usize..9, 0u64..1000).prop_flat_map(|(n, seed)| {
        prop_oneof![
            Just(GraphSequence::rotating_ring(n, 0.1, seed).unwrap()),
            (0.0..1.0).prop_map(move |p| {
                GraphSequence::new(n, Topology::RandomMetropolis { edge_probability: p }, 0.05, n, seed).unwrap()
            }),
            (0.05..0.95)
                .prop_map(move |w| GraphSequence::new(n, Topology::DirectedRing { weight: w }, 0.05, 1, 0).unwrap()),
            Just(GraphSequence::new(n, Topology::Path, 0.1, 1, 0).unwrap()),
            Just(GraphSequence::static_complete(n)),
        ]
    })
}

proptest! {
    #[test]
    fn emitted_matrices_are_doubly_stochastic(g in generator(), k in 0usize..10_000) {
        let w = g.weights_at(k);
        for s in w.row_sums().into_iter().chain(w.col_sums()) {
            prop_assert!((s - 1.0).abs() <= 1e-12);
        }
        prop_assert_eq!(w, g.weights_at(k));
    }

    #[test]
    fn compliant_generators_validate(g in generator()) {
        prop_assert!(validate_all(&g, 4 * g.agents() + 1).is_ok());
    }
}
