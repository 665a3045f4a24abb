use pdnet::dppds::{dual_sum_residual, penalty_relation_excess};
use pdnet::{
    build_custom, build_num_problem, build_quadratic_problem, centralized_subgradient, dppds_round, run_dppds,
    AffineMap, CentralizedConfig, ConvexFn, DppdsAgentState, DppdsConfig, Error, GraphSequence, ProblemDescription,
    ProblemSpec, ProjectableSet, StepSizeSchedule, WeightMatrix,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `f = x^2` on `[-1, 1]` with `h(x) = x` and, optionally, `g(x) = x - 0.5`.
fn scalar_problem(with_g: bool) -> ProblemSpec {
    build_custom(ProblemDescription {
        name: "scalar".into(),
        objectives: vec![ConvexFn::quadratic(1.0, vec![0.0]).unwrap()],
        inequality: if with_g {
            vec![ConvexFn::linear(vec![1.0], -0.5)]
        } else {
            vec![]
        },
        equality: Some(AffineMap::new(vec![vec![1.0]], vec![0.0]).unwrap()),
        local_sets: vec![ProjectableSet::cube(1, -1.0, 1.0).unwrap()],
        ..Default::default()
    })
    .unwrap()
}

fn config(rounds: usize) -> DppdsConfig {
    DppdsConfig {
        rounds,
        ..Default::default()
    }
}

#[test]
fn one_round_by_hand() {
    let p = scalar_problem(false);
    let states = vec![DppdsAgentState::new(vec![1.0], 0, 1)];
    let r = dppds_round(&p, &states, &WeightMatrix::identity(1), 0, 1.0).unwrap();
    assert_eq!(r.s_x[0], vec![2.0]);
    assert_eq!(r.next[0].x, vec![-1.0]);
    assert_eq!(r.next[0].lambda, vec![1.0]);
    assert_eq!(r.next[0].y, 1.0);
}

#[test]
fn feasible_stationary_point_adds_nothing() {
    let p = scalar_problem(true);
    let mut s = DppdsAgentState::new(vec![0.0], 1, 1);
    s.mu = vec![0.3];
    s.lambda = vec![0.7];
    let r = dppds_round(&p, &[s.clone()], &WeightMatrix::identity(1), 4, 0.2).unwrap();
    assert_eq!(r.u_mu[0], vec![0.0]);
    assert_eq!(r.u_lambda[0], vec![0.0]);
    assert_eq!(r.next[0].x, vec![0.0]);
    assert_eq!(r.next[0].mu, s.mu);
    assert_eq!(r.next[0].lambda, s.lambda);
}

#[test]
fn single_agent_is_the_centralized_penalty_iteration() {
    let p = scalar_problem(true);
    let t = run_dppds(
        &p,
        &GraphSequence::static_identity(1),
        &DppdsConfig {
            init: Some(vec![vec![0.9]]),
            ..config(400)
        },
    )
    .unwrap();
    let c = centralized_subgradient(
        &p,
        &CentralizedConfig {
            rounds: 400,
            init: Some(vec![0.9]),
            penalty: true,
            ..Default::default()
        },
    )
    .unwrap();
    for (a, b) in t.records.iter().zip(&c.records) {
        assert_eq!(a.k, b.k);
        assert_eq!(a.agents[0].x, b.agents[0].x);
        assert_eq!(a.agents[0].mu, b.agents[0].mu);
        assert_eq!(a.agents[0].lambda, b.agents[0].lambda);
    }
}

#[test]
fn refuses_differing_sets() {
    let num = build_num_problem();
    let g = GraphSequence::rotating_ring(5, 0.1, 0).unwrap();
    assert!(matches!(run_dppds(&num, &g, &config(10)), Err(Error::Precondition(_))));
    assert!(run_dppds(&num.with_common_set().unwrap(), &g, &config(10)).is_ok());
}

#[test]
fn refuses_schedules_that_fail_the_step_conditions() {
    let q = build_quadratic_problem();
    let g = GraphSequence::rotating_ring(5, 0.1, 0).unwrap();
    for s in [
        StepSizeSchedule::constant(0.1).unwrap(),
        StepSizeSchedule::inverse_sqrt(),
    ] {
        let c = DppdsConfig {
            schedule: s,
            ..config(100)
        };
        assert!(matches!(run_dppds(&q, &g, &c), Err(Error::Schedule(_))));
    }
    assert!(matches!(run_dppds(&q, &g, &config(0)), Err(Error::InvalidArgument(_))));
}

#[test]
fn dual_cap_aborts() {
    let q = build_quadratic_problem();
    let g = GraphSequence::rotating_ring(5, 0.1, 0).unwrap();
    let c = DppdsConfig {
        dual_cap: 1e-3,
        ..config(100)
    };
    match run_dppds(&q, &g, &c) {
        Err(Error::DualBlowUp { round, norm, cap }) => {
            assert_eq!(round, 0);
            assert!(norm > cap);
        }
        other => panic!("expected a blow-up, got {other:?}"),
    }
}

#[test]
fn quadratic_run_properties() {
    let q = build_quadratic_problem();
    let g = GraphSequence::rotating_ring(5, 0.1, 0).unwrap();
    let t = run_dppds(&q, &g, &config(3000)).unwrap();
    let set = q.local_set(0);
    let mut prev_sum = 0.0;
    for r in &t.records {
        let lambda_sum: f64 = r.agents.iter().map(|a| a.lambda[0]).sum();
        assert!(lambda_sum >= prev_sum - 1e-12);
        prev_sum = lambda_sum;
        for a in &r.agents {
            assert!(set.contains(&a.x, 1e-9));
            assert!(a.lambda[0] >= 0.0);
        }
    }
    assert!(t.diagnostics.max_dual_sum_residual <= 1e-12);
    assert!(t.diagnostics.max_conservation_residual <= 1e-10 * 82.5 * 25.0);
}

#[test]
fn num_with_common_set_keeps_multiplier_sums_nondecreasing() {
    let num = build_num_problem().with_common_set().unwrap();
    let g = GraphSequence::rotating_ring(5, 0.1, 0).unwrap();
    let t = run_dppds(&num, &g, &config(2000)).unwrap();
    let sums: Vec<f64> = t
        .records
        .iter()
        .map(|r| r.agents.iter().map(|a| a.mu[0]).sum())
        .collect();
    // mixing reorders the additions, so equality holds up to rounding
    assert!(sums.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    assert!(t.diagnostics.max_dual_sum_residual <= 1e-12);
    assert!(t.records.iter().all(|r| r.agents.iter().all(|a| a.lambda.is_empty())));
}

#[test]
fn relation_checks_are_recorded() {
    let q = build_quadratic_problem();
    let g = GraphSequence::rotating_ring(5, 0.1, 0).unwrap();
    let t = run_dppds(
        &q,
        &g,
        &DppdsConfig {
            debug_asserts: true,
            ..config(200)
        },
    )
    .unwrap();
    assert_eq!(t.diagnostics.relation_checks, 200 * 8 * 2);
}

fn random_states(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<DppdsAgentState> {
    (0..n)
        .map(|_| {
            let mut s = DppdsAgentState::new((0..dim).map(|_| rng.random_range(-5.0..5.0)).collect(), 1, 1);
            s.mu = vec![rng.random_range(0.0..3.0)];
            s.lambda = vec![rng.random_range(0.0..3.0)];
            s
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dual_sums_follow_the_recursion(seed in 0u64..10_000, k in 0usize..50, alpha in 0.001f64..1.0) {
        let p = build_custom(ProblemDescription {
            name: "random".into(),
            objectives: build_quadratic_problem().objectives().to_vec(),
            inequality: vec![ConvexFn::linear(vec![1.0, -1.0, 0.5, 0.0, 2.0], -1.0)],
            equality: build_quadratic_problem().equality().cloned(),
            local_sets: vec![ProjectableSet::cube(5, -5.0, 5.0).unwrap(); 5],
            ..Default::default()
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states = random_states(&mut rng, 5, 5);
        let w = GraphSequence::rotating_ring(5, 0.1, seed).unwrap().weights_at(k);
        let r = dppds_round(&p, &states, &w, k, alpha).unwrap();
        prop_assert!(dual_sum_residual(&states, &r, alpha) <= 1e-12);
        for after in &r.next {
            prop_assert!(p.local_set(0).contains(&after.x, 1e-9));
            prop_assert!(after.mu[0] >= 0.0 && after.lambda[0] >= 0.0);
        }
        let before: f64 = states.iter().map(|s| s.mu[0]).sum();
        let after: f64 = r.next.iter().map(|s| s.mu[0]).sum();
        prop_assert!(after >= before - 1e-12);
        // the iteration relations at a random probe
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(-5.0..5.0)).collect();
        let (ex, ed) = penalty_relation_excess(&p, &states, &r, alpha, &x, &[rng.random_range(0.0..10.0)], &[rng.random_range(0.0..10.0)]).unwrap();
        prop_assert!(ex <= 1e-8 && ed <= 1e-8, "{ex} {ed}");
    }
}
