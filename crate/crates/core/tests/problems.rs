use pdnet::{
    build_custom, build_num_problem, build_quadratic_problem, AffineMap, ConvexFn, Error, ProblemDescription,
    ProjectableSet, Reference,
};

#[test]
fn num_reference_is_feasible() {
    let num = build_num_problem();
    let r = num.reference().unwrap();
    assert_eq!(num.g(&r.x).unwrap(), vec![0.0]);
    assert!(num.local_sets().iter().all(|s| s.contains(&r.x, 0.0)));
    assert_eq!(num.total_objective(&r.x).unwrap(), -5.0);
    assert_eq!(r.value, -5.0);
    assert_eq!((num.agents(), num.dim(), num.m(), num.nu()), (5, 5, 1, 0));
}

#[test]
fn num_uniform_point_is_strictly_feasible() {
    let num = build_num_problem();
    let x = vec![0.55; 5];
    assert!((num.g(&x).unwrap()[0] + 2.25).abs() < 1e-12);
    assert!(num.local_sets().iter().all(|s| s.contains(&x, 0.0)));
    assert!(!num.has_identical_sets());
    assert!(num.with_common_set().unwrap().has_identical_sets());
}

#[test]
fn quadratic_reference() {
    let q = build_quadratic_problem();
    let r = q.reference().unwrap();
    assert_eq!(q.h(&r.x).unwrap(), vec![0.0]);
    assert!((q.total_objective(&r.x).unwrap() - 82.5).abs() < 1e-12);
    assert!(q.has_identical_sets());
    // every coordinate's centres sum to 5, so (1, ..., 1) is the
    // unconstrained minimizer and the aggregate gradient vanishes there
    let mut grad = [0.0; 5];
    for f in q.objectives() {
        for (a, b) in grad.iter_mut().zip(f.subgradient(&r.x).unwrap()) {
            *a += b;
        }
    }
    assert!(grad.iter().all(|v| v.abs() < 1e-12));
}

/// Gradient descent on the aggregate quadratic, projected onto `sum x = 5`.
#[test]
fn quadratic_value_matches_projected_gradient() {
    let q = build_quadratic_problem();
    let mut x = vec![3.0, -1.0, 2.0, 0.0, 1.0];
    for _ in 0..2000 {
        let mut grad = vec![0.0; 5];
        for f in q.objectives() {
            for (a, b) in grad.iter_mut().zip(f.subgradient(&x).unwrap()) {
                *a += b;
            }
        }
        let mean = grad.iter().sum::<f64>() / 5.0;
        for (xi, gi) in x.iter_mut().zip(&grad) {
            *xi -= 0.1 * (gi - mean);
        }
    }
    assert!((q.total_objective(&x).unwrap() - 82.5).abs() < 1e-9);
}

#[test]
fn builder_accepts_a_scalar_problem() {
    let p = build_custom(ProblemDescription {
        name: "square".into(),
        objectives: vec![ConvexFn::quadratic(1.0, vec![0.0]).unwrap()],
        local_sets: vec![ProjectableSet::cube(1, -1.0, 1.0).unwrap()],
        ..Default::default()
    })
    .unwrap();
    assert_eq!((p.agents(), p.dim(), p.m(), p.nu()), (1, 1, 0, 0));
}

#[test]
fn builder_errors() {
    let base = || ProblemDescription {
        name: "bad".into(),
        objectives: vec![ConvexFn::quadratic(1.0, vec![0.0, 0.0]).unwrap(); 2],
        local_sets: vec![ProjectableSet::cube(2, -1.0, 1.0).unwrap(); 2],
        ..Default::default()
    };
    assert!(build_custom(base()).is_ok());

    let mut d = base();
    d.inequality = vec![ConvexFn::linear(vec![1.0; 3], 0.0)];
    assert!(matches!(build_custom(d), Err(Error::DimensionMismatch { .. })));

    let mut d = base();
    d.equality = Some(AffineMap::new(vec![vec![1.0]], vec![0.0]).unwrap());
    assert!(build_custom(d).is_err());

    let mut d = base();
    d.local_sets.pop();
    assert!(build_custom(d).is_err());

    let mut d = base();
    d.objectives.clear();
    d.local_sets.clear();
    assert!(build_custom(d).is_err());

    let mut d = base();
    d.local_sets[1] = ProjectableSet::cube(2, 0.0, 1.0).unwrap();
    d.require_identical_sets = true;
    assert!(build_custom(d).is_err());

    let mut d = base();
    d.local_sets[1] = ProjectableSet::cube(2, 2.0, 3.0).unwrap();
    assert!(build_custom(d).is_err());

    let mut d = base();
    d.inequality = vec![ConvexFn::linear(vec![1.0, 1.0], 0.0)];
    d.reference = Some(Reference {
        x: vec![0.5, 0.5],
        value: 0.5,
    });
    assert!(build_custom(d).is_err());
}
